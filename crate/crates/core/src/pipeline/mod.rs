//! End-to-end runs: ingest, annotate, dedup, flatten, balance, plan.

mod config;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    apply_override, parse_override, DedupSettings, IngestConfig, LengthConfig, OutputBalance,
    RunConfig, SamplingConfig, SeedFiles, TopicSource,
};

use crate::annotator::{Annotator, LabeledExample, Part};
use crate::dedup::dedup;
use crate::entities::{AnnotationIndex, Gazetteer};
use crate::error::{Error, Result};
use crate::ingest::{fit_length_bounds, CorpusReader, Document, Ingestor, LengthBounds, Segmenter, Sentence};
use crate::lexicon::{Lexicon, SeedList};
use crate::sampler::{
    balance, default_trigger_cap, flatten_triggers, make_plan, BalanceSpec, PlanPaths, PlanVariant,
    ADDITIONAL_TOTAL, THREE_STEP_GENERAL_TOTAL, THREE_STEP_THEMATIC_TOTAL, TWO_STEP_TOTAL,
};
use crate::Label;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const PLAN_FILE: &str = "plan.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BENCHMARK_FILE: &str = "benchmark_train.jsonl";
pub const MIXED_FILE: &str = "mixed.jsonl";

/// Sizes the global worker pool from `DSF_THREADS`, if set. Returns the
/// number of workers in use.
pub fn configure_threads() -> Result<usize> {
    if let Ok(raw) = std::env::var("DSF_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("DSF_THREADS must be a positive integer, got {raw:?}")))?;
        // a pool that was already built keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Balanced output files of a variant with their default sizes.
pub fn balanced_outputs(variant: PlanVariant) -> Vec<(&'static str, usize)> {
    match variant {
        PlanVariant::AdditionalOnly | PlanVariant::MixedGeneral | PlanVariant::MixedFull => {
            vec![("additional", ADDITIONAL_TOTAL)]
        }
        PlanVariant::TwoStep => vec![("additional", TWO_STEP_TOTAL)],
        PlanVariant::ThreeStep => vec![
            ("general", THREE_STEP_GENERAL_TOTAL),
            ("thematic", THREE_STEP_THEMATIC_TOTAL),
        ],
    }
}

/// Whether an annotated example may be drawn into the named output.
pub fn eligible(output: &str, variant: PlanVariant, ex: &LabeledExample) -> bool {
    match output {
        "general" => ex.part == Part::General,
        "thematic" => ex.part == Part::Thematic,
        _ if variant == PlanVariant::MixedFull => ex.part != Part::Benchmark,
        _ => ex.part == Part::General || (ex.part == Part::Thematic && ex.label == Label::Neutral),
    }
}

/// Independent RNG seed for one named use of the run seed.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// A sentence as written by the `ingest` stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl SentenceRecord {
    pub fn from_sentence(s: &Sentence) -> Self {
        SentenceRecord {
            id: s.id.clone(),
            doc_id: s.doc_id.clone(),
            start: s.start,
            end: s.end,
            text: s.text.clone(),
        }
    }

    pub fn into_sentence(self, ingestor: &Ingestor) -> Sentence {
        let tokens = ingestor.tokenizer.tokenize(&self.text);
        Sentence {
            id: self.id,
            doc_id: self.doc_id,
            start: self.start,
            end: self.end,
            text: self.text,
            tokens,
        }
    }
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, n + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, rows: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct TextOnly {
    text: String,
}

/// Loaded lexicon, entity sources and ingest settings for one configuration.
pub struct Resources {
    pub ingestor: Ingestor,
    pub bounds: Option<LengthBounds>,
    pub annotator: Annotator,
}

impl Resources {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let tokenizer = cfg.rules.tokenizer();
        let segmenter = match &cfg.ingest.abbreviations {
            Some(p) => Segmenter::from_file(p)?,
            None => Segmenter::default(),
        };
        let ingestor = Ingestor {
            segmenter,
            tokenizer: tokenizer.clone(),
            normalize: cfg.ingest.normalize.then(|| cfg.ingest.replacements.clone()),
        };

        let len = &cfg.ingest.length;
        let bounds = match (len.min_tokens, len.max_tokens) {
            (Some(min_tokens), Some(max_tokens)) => Some(LengthBounds {
                min_tokens,
                max_tokens,
                lower_quantile: len.lower_quantile,
                upper_quantile: len.upper_quantile,
            }),
            _ if len.reference.is_empty() => None,
            _ => {
                let mut lengths = Vec::new();
                for p in &len.reference {
                    let rows: Vec<TextOnly> = read_jsonl(p)?;
                    lengths.extend(rows.iter().map(|r| ingestor.token_count(&r.text)));
                }
                Some(fit_length_bounds(&lengths, len.lower_quantile, len.upper_quantile)?)
            }
        };

        let lexicon = Lexicon::load(&cfg.lexicon)?;
        let seeds = match &cfg.seeds {
            Some(s) => SeedList::from_files(&s.positive, &s.negative)?,
            None => lexicon.seed_references(),
        };
        let gazetteers = cfg
            .gazetteers
            .iter()
            .map(|g| Gazetteer::load(&g.path, &g.topic, &tokenizer))
            .collect::<Result<Vec<_>>>()?;
        let mut imports = AnnotationIndex::default();
        for a in &cfg.annotations {
            imports.import_more(&a.path, &a.topic, &tokenizer)?;
        }
        let annotator = Annotator::new(&lexicon, &seeds, gazetteers, imports, cfg.rules.clone())?;
        Ok(Resources {
            ingestor,
            bounds,
            annotator,
        })
    }

    pub fn annotate_batch(&self, sentences: &[Sentence]) -> Result<Vec<LabeledExample>> {
        let per_sentence: Vec<Vec<LabeledExample>> = sentences
            .par_iter()
            .map(|s| {
                self.annotator
                    .annotate(s)
                    .map(|a| a.into_iter().map(|a| a.example).collect())
            })
            .collect::<Result<_>>()?;
        Ok(per_sentence.into_iter().flatten().collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub documents: usize,
    pub sentences: usize,
    pub sentences_kept: usize,
}

/// Streams the corpus in batches of documents. Each batch is split and
/// length-filtered in parallel and handed to `sink` in corpus order.
pub fn stream_sentences(
    corpus: &[PathBuf],
    batch_size: usize,
    res: &Resources,
    mut sink: impl FnMut(Vec<Sentence>) -> Result<()>,
) -> Result<IngestStats> {
    let mut stats = IngestStats::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut flush = |batch: &mut Vec<Document>, stats: &mut IngestStats| -> Result<()> {
        let split: Vec<Vec<Sentence>> = batch
            .par_iter()
            .map(|d| res.ingestor.split_sentences(d))
            .collect();
        batch.clear();
        let mut kept = Vec::new();
        for s in split.into_iter().flatten() {
            stats.sentences += 1;
            if res.bounds.is_none_or(|b| b.contains(s.token_count())) {
                kept.push(s);
            }
        }
        stats.sentences_kept += kept.len();
        sink(kept)
    };
    let mut batch = Vec::with_capacity(batch_size);
    for path in corpus {
        for doc in CorpusReader::open(path)? {
            let doc = doc?;
            if !seen.insert(doc.id.clone()) {
                return Err(Error::Data(format!("duplicate document id {:?} in {}", doc.id, path.display())));
            }
            stats.documents += 1;
            batch.push(doc);
            if batch.len() == batch_size {
                flush(&mut batch, &mut stats)?;
            }
        }
    }
    if !batch.is_empty() {
        flush(&mut batch, &mut stats)?;
    }
    Ok(stats)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub examples: usize,
    pub by_label: BTreeMap<String, usize>,
    pub by_part: BTreeMap<String, usize>,
    pub by_topic: BTreeMap<String, usize>,
}

impl Counts {
    pub fn of<'a>(examples: impl IntoIterator<Item = &'a LabeledExample>) -> Self {
        let mut c = Counts::default();
        for e in examples {
            c.examples += 1;
            *c.by_label.entry(e.label.to_string()).or_default() += 1;
            *c.by_part.entry(e.part.as_str().to_string()).or_default() += 1;
            *c.by_topic.entry(e.topic.clone()).or_default() += 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub seed: u64,
    pub config_digest: String,
    pub variant: PlanVariant,
    pub ingest: IngestStats,
    pub annotated: Counts,
    pub dedup_removed: usize,
    pub deduplicated: Counts,
    /// Per output file.
    pub files: BTreeMap<String, Counts>,
}

/// Per-class flattening followed by balancing for one output.
pub fn sample_output(
    pool: Vec<LabeledExample>,
    spec: &BalanceSpec,
    flatten: bool,
    fixed_cap: Option<usize>,
    flatten_seed: u64,
) -> Result<Vec<LabeledExample>> {
    let pool = if flatten {
        let targets = spec.class_targets()?;
        let mut kept = Vec::with_capacity(pool.len());
        for label in Label::ALL {
            let class: Vec<LabeledExample> = pool.iter().filter(|e| e.label == label).cloned().collect();
            let cap = fixed_cap.unwrap_or_else(|| default_trigger_cap(&class, targets[label.index()]));
            kept.extend(flatten_triggers(class, cap, flatten_seed).map_err(|e| e.in_stage("flatten"))?);
        }
        kept
    } else {
        pool
    };
    balance(&pool, spec).map_err(|e| e.in_stage("balance"))
}

fn balance_spec(cfg: &RunConfig, name: &str, default_total: usize) -> BalanceSpec {
    let b = cfg.sampling.balance.get(name).cloned().unwrap_or_default();
    BalanceSpec {
        mode: b.mode,
        proportions: b.proportions,
        total: b.total.unwrap_or(default_total),
        rng_seed: derive_seed(cfg.seed, &format!("balance:{name}")),
    }
}

fn prepare_output_dir(out: &Path) -> Result<tempfile::TempDir> {
    if out.exists() {
        let empty = out
            .read_dir()
            .map_err(|e| Error::io(out, e))?
            .next()
            .is_none();
        if !out.join(MANIFEST_FILE).is_file() && !empty {
            return Err(Error::Config(format!(
                "output directory {} exists and does not hold a previous run",
                out.display()
            )));
        }
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    tempfile::Builder::new()
        .prefix(".dsf-partial-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))
}

fn publish(tmp: tempfile::TempDir, out: &Path) -> Result<()> {
    if out.exists() {
        std::fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
    }
    let staged = tmp.keep();
    std::fs::rename(&staged, out).map_err(|e| Error::io(out, e))
}

/// Runs every stage and writes the output tree. Nothing is written to the
/// output directory unless all stages succeed.
pub fn run(cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let tmp = prepare_output_dir(&cfg.output_dir)?;
    let res = Resources::load(cfg).map_err(|e| e.in_stage("load"))?;

    let mut examples: Vec<LabeledExample> = Vec::new();
    let stats = stream_sentences(&cfg.corpus, cfg.ingest.batch_size, &res, |batch| {
        examples.extend(res.annotate_batch(&batch).map_err(|e| e.in_stage("annotate"))?);
        Ok(())
    })
    .map_err(|e| e.or_stage("ingest"))?;
    if stats.sentences == 0 {
        return Err(Error::Data("no sentences after ingest".into()).in_stage("ingest"));
    }
    if stats.sentences_kept == 0 {
        return Err(Error::Data("no sentences left after length filtering".into()).in_stage("ingest"));
    }
    let annotated = Counts::of(&examples);

    let (pool, dedup_removed) = if cfg.dedup.enabled {
        let out = dedup(examples, &cfg.dedup.to_config(derive_seed(cfg.seed, "dedup")))
            .map_err(|e| e.in_stage("dedup"))?;
        let removed = out.removed.len();
        (out.survivors, removed)
    } else {
        (examples, 0)
    };
    let deduplicated = Counts::of(&pool);

    let variant = cfg.sampling.variant;
    let mut files: Vec<(String, Vec<LabeledExample>)> = Vec::new();
    for (name, default_total) in balanced_outputs(variant) {
        let spec = balance_spec(cfg, name, default_total);
        let candidates: Vec<LabeledExample> =
            pool.iter().filter(|e| eligible(name, variant, e)).cloned().collect();
        let sample = sample_output(
            candidates,
            &spec,
            cfg.sampling.flatten_triggers,
            cfg.sampling.per_trigger_cap,
            derive_seed(cfg.seed, &format!("flatten:{name}")),
        )
        .map_err(|e| e.or_stage("balance"))?;
        files.push((format!("{name}.jsonl"), sample));
    }

    if let Some(path) = &cfg.benchmark_train {
        let bench: Vec<LabeledExample> = read_jsonl(path).map_err(|e| e.in_stage("plan"))?;
        if let Some(bad) = bench.iter().find(|e| e.part != Part::Benchmark) {
            return Err(Error::Data(format!(
                "{}: row {:?} has part {:?}, expected \"benchmark\"",
                path.display(),
                bad.id,
                bad.part.as_str()
            ))
            .in_stage("plan"));
        }
        if matches!(variant, PlanVariant::MixedGeneral | PlanVariant::MixedFull) {
            let mut mixed = files[0].1.clone();
            let ids: HashSet<&str> = mixed.iter().map(|e| e.id.as_str()).collect();
            if let Some(clash) = bench.iter().find(|e| ids.contains(e.id.as_str())) {
                return Err(Error::Data(format!("benchmark id {:?} collides with a generated example", clash.id))
                    .in_stage("plan"));
            }
            mixed.extend(bench.iter().cloned());
            files.push((MIXED_FILE.to_string(), mixed));
        }
        files.push((BENCHMARK_FILE.to_string(), bench));
    }

    for (name, rows) in &files {
        write_jsonl(&tmp.path().join(name), rows).map_err(|e| e.in_stage("write"))?;
    }
    let present = |name: &str| files.iter().any(|(n, _)| n == name).then(|| PathBuf::from(name));
    let paths = PlanPaths {
        additional: present("additional.jsonl"),
        general: present("general.jsonl"),
        thematic: present("thematic.jsonl"),
        benchmark_train: present(BENCHMARK_FILE),
        mixed: present(MIXED_FILE),
    };
    let plan = make_plan(variant, &paths, tmp.path()).map_err(|e| e.in_stage("plan"))?;
    write_json(&tmp.path().join(PLAN_FILE), &plan).map_err(|e| e.in_stage("write"))?;

    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        variant,
        ingest: stats,
        annotated,
        dedup_removed,
        deduplicated,
        files: files.iter().map(|(n, rows)| (n.clone(), Counts::of(rows))).collect(),
    };
    write_json(&tmp.path().join(MANIFEST_FILE), &manifest).map_err(|e| e.in_stage("write"))?;
    publish(tmp, &cfg.output_dir).map_err(|e| e.in_stage("write"))?;
    Ok(manifest)
}
