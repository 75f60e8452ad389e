//! Seeded synthetic corpus with a small lexicon and gazetteers, for tests
//! and benchmarks.

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotator::{LabeledExample, Part, MASK};
use crate::error::{Error, Result};
use crate::ingest::Document;
use crate::Label;

/// Lexicon TSV: 30 distinct terms, two of them ambiguous.
pub const LEXICON_TSV: &str = "\
# term\tpos\tpolarity\tcategory\tsource
герой\tnoun\tpositive\tperson_reference\tsynth
чемпион\tnoun\tpositive\tperson_reference\tsynth
звезда\tnoun\tpositive\tperson_reference\tsynth
кумир\tnoun\tpositive\tperson_reference\tsynth
лидер\tnoun\tpositive\tcompany_reference\tsynth
мошенник\tnoun\tnegative\tperson_reference\tsynth
лжец\tnoun\tnegative\tperson_reference\tsynth
банкрот\tnoun\tnegative\tcompany_reference\tsynth
вор\tnoun\tnegative\tperson_reference\tsynth
преступник\tnoun\tnegative\tperson_reference\tsynth
увеличил\tverb\tpositive\tgeneral\tsynth
успешный\tadjective\tpositive\tgeneral\tsynth
надежный\tadjective\tpositive\tgeneral\tsynth
выгодный\tadjective\tpositive\tgeneral\tsynth
рост\tnoun\tpositive\tgeneral\tsynth
чистая прибыль\tphrase\tpositive\tgeneral\tsynth
помог\tverb\tpositive\tgeneral\tsynth
подозревает\tverb\tnegative\tgeneral\tsynth
штраф\tnoun\tnegative\tgeneral\tsynth
убыток\tnoun\tnegative\tgeneral\tsynth
обман\tnoun\tnegative\tgeneral\tsynth
плохой\tadjective\tnegative\tgeneral\tsynth
кризис\tnoun\tnegative\tgeneral\tsynth
провал\tnoun\tnegative\tgeneral\tsynth
критика\tnoun\tnegative\tgeneral\tsynth
платные услуги\tphrase\tnegative\tgeneral\tsynth
резкий\tadjective\tpositive\tgeneral\tsynth
резкий\tadjective\tnegative\tgeneral\tsynth
острый\tadjective\tpositive\tgeneral\tsynth
острый\tadjective\tnegative\tgeneral\tsynth
заявил\tverb\tneutral\tgeneral\tsynth
объявил\tverb\tneutral\tgeneral\tsynth
";

pub const BANKS_TSV: &str = "\
сбербанк\torganization\tsberbank
втб\torganization\tvtb
альфа-банк\torganization\talfa
газпромбанк\torganization\tgazprombank
тинькофф банк\torganization\ttinkoff
";

pub const TELECOM_TSV: &str = "\
мтс\torganization\tmts
билайн\torganization\tbeeline
мегафон\torganization\tmegafon
теле2\torganization\ttele2
";

pub const PERSONS_TSV: &str = "\
иванов\tperson\tivanov
петров\tperson\tpetrov
мария сидорова\tperson\tsidorova
";

const ENTITIES: &[&str] = &[
    "Сбербанк", "ВТБ", "Альфа-Банк", "Газпромбанк", "Тинькофф Банк", "МТС", "Билайн", "Мегафон",
    "Теле2", "Иванов", "Петров", "Мария Сидорова",
];

const SENTIMENT: &[&str] = &[
    "увеличил", "успешный", "надежный", "выгодный", "рост", "чистая прибыль", "помог",
    "подозревает", "штраф", "убыток", "обман", "плохой", "кризис", "провал", "критика", "платные услуги",
    "резкий", "острый",
];

const SEEDS: &[&str] = &[
    "герой", "чемпион", "звезда", "кумир", "лидер", "мошенник", "лжец", "банкрот", "вор",
    "преступник",
];

const NEUTRAL_VERBS: &[&str] = &["заявил", "объявил"];

const FILLER: &[&str] = &[
    "сегодня", "вчера", "компания", "клиенты", "рынок", "году", "в", "на", "по", "о", "с", "для",
    "который", "отметил", "новый", "отчет", "ставка", "кредит", "города", "абонентов", "связи",
    "тариф", "офис", "сеть", "банка", "прошлом", "месяце", "декабре", "ноябре", "сообщил",
    "директор", "услуги", "вклады", "рубля", "также", "ранее", "затем", "области", "регионе",
    "проект", "запуск", "ребрендинг", "начале", "работы", "около", "процентов", "представитель",
    "пресс-служба", "акции", "решение", "совет", "данные",
];

const PARTICLES: &[&str] = &["не", "ни"];

/// Knobs for [`generate`].
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub sentences: usize,
    pub sentences_per_doc: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Chance that a sentence is a light edit of an earlier one.
    pub near_duplicate_rate: f64,
    /// Extra pseudo-words mixed into the filler, drawn with Zipf weights.
    /// `None` grows it with corpus size: `40 * sqrt(filler tokens)`, at least 5000.
    pub filler_vocabulary: Option<usize>,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            sentences: 2000,
            sentences_per_doc: 5,
            min_words: 4,
            max_words: 18,
            near_duplicate_rate: 0.05,
            filler_vocabulary: None,
            seed: 0,
        }
    }
}

const ONSETS: &[&str] = &["б", "в", "г", "д", "ж", "з", "к", "л", "м", "п", "р", "с", "т", "ф", "х", "ш"];
const VOWELS: &[&str] = &["а", "о", "у", "ы", "е", "я", "ю"];

/// Pseudo-words built from consonant-vowel syllables; none of them is a
/// lexicon term, entity, particle or abbreviation.
pub fn pseudo_words(n: usize) -> Vec<String> {
    let syllables: Vec<String> = ONSETS
        .iter()
        .flat_map(|c| VOWELS.iter().map(move |v| format!("{c}{v}")))
        .collect();
    let s = syllables.len();
    (0..n)
        .map(|i| {
            let (a, rest) = (i % s, i / s);
            let (b, rest) = (rest % s, rest / s);
            let mut w = format!("{}{}", syllables[a], syllables[b]);
            let mut rest = rest;
            while rest > 0 {
                w.push_str(&syllables[rest % s]);
                rest /= s;
            }
            w
        })
        .collect()
}

struct Filler {
    words: Vec<String>,
    cumulative: Vec<f64>,
}

impl Filler {
    fn new(extra: usize) -> Self {
        let mut words: Vec<String> = FILLER.iter().map(|w| w.to_string()).collect();
        words.extend(pseudo_words(extra));
        let mut total = 0.0;
        let cumulative = (0..words.len())
            .map(|r| {
                total += 1.0 / (r as f64 + 1.0);
                total
            })
            .collect();
        Filler { words, cumulative }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> &str {
        let x = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(0.0);
        let i = self.cumulative.partition_point(|&c| c < x).min(self.words.len() - 1);
        &self.words[i]
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn sentence(rng: &mut ChaCha8Rng, opts: &SynthOptions, filler: &Filler) -> String {
    let n = rng.random_range(opts.min_words..=opts.max_words);
    // a third of the sentences carry no sentiment or seed words at all
    let plain = rng.random_bool(0.35);
    let mut parts: Vec<String> = Vec::with_capacity(n + 4);
    let mut i = 0;
    while i < n {
        let mut roll: f64 = rng.random();
        if plain && (0.12..0.39).contains(&roll) {
            roll = if rng.random_bool(0.3) { 0.0 } else { 0.99 };
        }
        let piece = match roll {
            r if r < 0.12 => ENTITIES.choose(rng).unwrap().to_string(),
            r if r < 0.22 => SENTIMENT.choose(rng).unwrap().to_string(),
            r if r < 0.29 => SEEDS.choose(rng).unwrap().to_string(),
            r if r < 0.33 => PARTICLES.choose(rng).unwrap().to_string(),
            r if r < 0.35 => NEUTRAL_VERBS.choose(rng).unwrap().to_string(),
            r if r < 0.39 => {
                let (o, c) = *[("«", "»"), ("\"", "\""), ("„", "“")].choose(rng).unwrap();
                let inner = if rng.random_bool(0.5) {
                    SEEDS.choose(rng).unwrap()
                } else {
                    SENTIMENT.choose(rng).unwrap()
                };
                format!("{o}{inner}{c}")
            }
            r if r < 0.42 => format!("{},{}", rng.random_range(1..100), rng.random_range(0..10)),
            r if r < 0.43 => "https://news.example.ru/a".to_string(),
            r if r < 0.44 => "@reporter".to_string(),
            r if r < 0.47 => ",".to_string(),
            r if r < 0.48 => "«".to_string(),
            _ => filler.pick(rng).to_string(),
        };
        parts.push(piece);
        i += 1;
    }
    let mut text = String::new();
    for (k, p) in parts.iter().enumerate() {
        if k > 0 && p != "," {
            text.push(' ');
        }
        text.push_str(p);
    }
    let end = *["." , ".", ".", "!", "?"].choose(rng).unwrap();
    capitalize(text.trim_start_matches(',').trim()) + end
}

fn near_copy(rng: &mut ChaCha8Rng, base: &str, filler: &Filler) -> String {
    let body = base.trim_end_matches(['.', '!', '?']);
    let mut words: Vec<&str> = body.split(' ').collect();
    if words.len() > 3 && rng.random_bool(0.5) {
        let k = rng.random_range(1..words.len());
        words.remove(k);
    } else {
        words.push(filler.pick(rng));
    }
    words.join(" ") + "."
}

/// Generated sentences, grouped into documents with ids `synth-<n>`.
pub fn generate(opts: &SynthOptions) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let filler_tokens = opts.sentences as f64 * (opts.min_words + opts.max_words) as f64 / 2.0 * 0.5;
    let vocabulary = opts
        .filler_vocabulary
        .unwrap_or_else(|| ((40.0 * filler_tokens.sqrt()) as usize).max(5000));
    let filler = Filler::new(vocabulary);
    let mut sentences: Vec<String> = Vec::with_capacity(opts.sentences);
    for _ in 0..opts.sentences {
        let s = if !sentences.is_empty() && rng.random_bool(opts.near_duplicate_rate) {
            let base = sentences[rng.random_range(0..sentences.len())].clone();
            near_copy(&mut rng, &base, &filler)
        } else {
            sentence(&mut rng, opts, &filler)
        };
        sentences.push(s);
    }
    sentences
        .chunks(opts.sentences_per_doc.max(1))
        .enumerate()
        .map(|(i, chunk)| Document {
            id: format!("synth-{i}"),
            text: chunk.join(" "),
            source: Some("synth".into()),
        })
        .collect()
}

/// Benchmark-style rows (part `benchmark`) with the given class mix.
pub fn benchmark_rows(n: usize, shares: [f64; 3], seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verbs = ["повысил ставку", "снизил тарифы", "открыл офис", "оштрафовали", "хвалят клиенты"];
    (0..n)
        .map(|i| {
            let r: f64 = rng.random();
            let label = if r < shares[0] {
                Label::Positive
            } else if r < shares[0] + shares[1] {
                Label::Negative
            } else {
                Label::Neutral
            };
            LabeledExample {
                id: format!("bench-{i:06}"),
                text: format!("{MASK} {} {}.", verbs.choose(&mut rng).unwrap(), FILLER.choose(&mut rng).unwrap()),
                label,
                part: Part::Benchmark,
                topic: "banks".into(),
                target_surface: ENTITIES.choose(&mut rng).unwrap().to_string(),
                source_sentence_id: String::new(),
                trigger: None,
            }
        })
        .collect()
}

/// File locations written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub banks: PathBuf,
    pub telecom: PathBuf,
    pub persons: PathBuf,
    pub benchmark_train: PathBuf,
    pub config: PathBuf,
}

/// Writes corpus, lexicon, gazetteers, a benchmark file and a TOML run
/// config (output under `dir/out`) into `dir`.
pub fn write_fixture(dir: &Path, opts: &SynthOptions, extra_config: &str) -> Result<FixturePaths> {
    let write = |name: &str, text: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let mut corpus = String::new();
    for d in generate(opts) {
        corpus.push_str(&serde_json::to_string(&d).expect("serializable"));
        corpus.push('\n');
    }
    let mut bench = String::new();
    for r in benchmark_rows(300, [0.148, 0.336, 0.516], opts.seed ^ 0xbe7c) {
        bench.push_str(&serde_json::to_string(&r).expect("serializable"));
        bench.push('\n');
    }
    let config = format!(
        "seed = {}\ncorpus = [\"corpus.jsonl\"]\nlexicon = \"lexicon.tsv\"\noutput_dir = \"out\"\n\
         benchmark_train = \"benchmark_train.jsonl\"\n\
         gazetteers = [\n  {{ path = \"banks.tsv\", topic = \"banks\" }},\n  \
         {{ path = \"telecom.tsv\", topic = \"telecom\" }},\n  \
         {{ path = \"persons.tsv\", topic = \"persons\" }},\n]\n{extra_config}\n",
        opts.seed
    );
    Ok(FixturePaths {
        corpus: write("corpus.jsonl", &corpus)?,
        lexicon: write("lexicon.tsv", LEXICON_TSV)?,
        banks: write("banks.tsv", BANKS_TSV)?,
        telecom: write("telecom.tsv", TELECOM_TSV)?,
        persons: write("persons.tsv", PERSONS_TSV)?,
        benchmark_train: write("benchmark_train.jsonl", &bench)?,
        config: write("run.toml", &config)?,
    })
}
