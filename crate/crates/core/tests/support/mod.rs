//! Brute-force reference implementations used as test oracles. They share
//! only tokenization with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dsf_core::annotator::{LabeledExample, Part};
use dsf_core::ingest::{Sentence, TokenKind, Tokenizer};
use dsf_core::Label;

pub const MAX_DISTANCE: usize = 4;
pub const NEGATION_WINDOW: usize = 3;
pub const PARTICLES: [&str; 2] = ["не", "ни"];
pub const QUOTES: [(&str, &str); 5] = [("«", "»"), ("„", "“"), ("“", "”"), ("\"", "\""), ("‘", "’")];

fn label_of(s: &str) -> Label {
    match s {
        "positive" => Label::Positive,
        "negative" => Label::Negative,
        "neutral" => Label::Neutral,
        other => panic!("bad polarity {other}"),
    }
}

fn split_words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct Term {
    pub text: String,
    pub words: Vec<String>,
    /// `None` when the term carries conflicting polarities.
    pub polarity: Option<Label>,
}

#[derive(Debug, Clone)]
pub struct Gaz {
    pub topic: String,
    /// (words, is_person)
    pub entries: Vec<(Vec<String>, bool)>,
}

/// Everything the rules need, parsed straight from the TSV sources.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub sentiment: Vec<Term>,
    pub seeds: Vec<Term>,
    pub gazetteers: Vec<Gaz>,
    pub polarity: BTreeMap<String, Option<Label>>,
}

impl Oracle {
    pub fn new(lexicon_tsv: &str, gazetteers: &[(&str, &str)]) -> Self {
        // term -> (polarities, rows of (pos, polarity, categories))
        let mut rows: BTreeMap<String, Vec<(String, Label, Vec<String>)>> = BTreeMap::new();
        for line in lexicon_tsv.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("term\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let cats = cols[3].split(';').map(|c| c.trim().to_string()).collect();
            rows.entry(cols[0].trim().to_lowercase()).or_default().push((
                cols[1].trim().to_string(),
                label_of(cols[2].trim()),
                cats,
            ));
        }
        let mut sentiment = Vec::new();
        let mut positive_seeds = Vec::new();
        let mut negative_seeds = Vec::new();
        let mut polarity = BTreeMap::new();
        for (term, senses) in &rows {
            let pols: BTreeSet<Label> = senses.iter().map(|s| s.1).collect();
            if pols.iter().all(|&p| p == Label::Neutral) {
                continue;
            }
            let single = (pols.len() == 1).then(|| *pols.iter().next().unwrap());
            polarity.insert(term.clone(), single);
            let t = Term {
                text: term.clone(),
                words: split_words(term),
                polarity: single,
            };
            sentiment.push(t.clone());
            let Some(p) = single else { continue };
            let reference = senses.iter().any(|(pos, _, cats)| {
                pos == "noun"
                    && cats.iter().any(|c| c == "person_reference" || c == "company_reference")
            });
            if reference {
                match p {
                    Label::Positive => positive_seeds.push(t),
                    Label::Negative => negative_seeds.push(t),
                    Label::Neutral => {}
                }
            }
        }
        let mut seeds = positive_seeds;
        seeds.extend(negative_seeds);
        let gazetteers = gazetteers
            .iter()
            .map(|(topic, tsv)| Gaz {
                topic: topic.to_string(),
                entries: tsv
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| {
                        let cols: Vec<&str> = l.split('\t').collect();
                        (split_words(cols[0]), cols[1].trim() == "person")
                    })
                    .collect(),
            })
            .collect();
        Oracle {
            sentiment,
            seeds,
            gazetteers,
            polarity,
        }
    }

    /// Rule output for one sentence, in no particular order.
    pub fn annotate(&self, s: &Sentence) -> Vec<LabeledExample> {
        let words = words(s);
        if words.is_empty() || s.tokens.iter().any(|t| t.text == "MASK") {
            return Vec::new();
        }
        let seed_terms: Vec<Vec<String>> = self.seeds.iter().map(|t| t.words.clone()).collect();
        let sent_terms: Vec<Vec<String>> = self.sentiment.iter().map(|t| t.words.clone()).collect();
        let seeds = longest_leftmost(&words, &seed_terms);
        let sentiment = longest_leftmost(&words, &sent_terms);

        // (first word, last word, topic, is_person)
        let mut mentions: Vec<(usize, usize, String, bool)> = Vec::new();
        for g in &self.gazetteers {
            let terms: Vec<Vec<String>> = g.entries.iter().map(|e| e.0.clone()).collect();
            for (ti, a, b) in longest_leftmost(&words, &terms) {
                if !mentions.iter().any(|m| m.0 == a && m.1 == b) {
                    mentions.push((a, b, g.topic.clone(), g.entries[ti].1));
                }
            }
        }

        let tok = |w: usize| words[w].0;
        let mut out = Vec::new();
        let example = |id: String, span: (usize, usize), label, part, topic: &str, trigger: Option<&str>| {
            LabeledExample {
                id,
                text: masked(s, span),
                label,
                part,
                topic: topic.to_string(),
                target_surface: s.text[s.tokens[span.0].start..s.tokens[span.1].end].to_string(),
                source_sentence_id: s.id.clone(),
                trigger: trigger.map(String::from),
            }
        };

        for &(ti, a, b) in &seeds {
            let t = &self.seeds[ti];
            if negated(&words, a) || quoted(s, tok(a), tok(b)) {
                continue;
            }
            let span = (tok(a), tok(b));
            out.push(example(
                format!("{}:g{}-{}", s.id, span.0, span.1),
                span,
                t.polarity.unwrap(),
                Part::General,
                "persons",
                Some(&t.text),
            ));
        }

        for (a, b, topic, person) in &mentions {
            if *person {
                continue;
            }
            let mut used: Vec<Label> = Vec::new();
            for &(ti, c, d) in &sentiment {
                let t = &self.sentiment[ti];
                let Some(p) = t.polarity else { continue };
                if used.contains(&p) {
                    continue;
                }
                let gap = if b < &c {
                    c - b - 1
                } else if d < *a {
                    a - d - 1
                } else {
                    continue;
                };
                if gap > MAX_DISTANCE || negated(&words, c) || quoted(s, tok(c), tok(d)) {
                    continue;
                }
                used.push(p);
                let span = (tok(*a), tok(*b));
                out.push(example(
                    format!("{}:t{}-{}:{}", s.id, span.0, span.1, tok(c)),
                    span,
                    p,
                    Part::Thematic,
                    topic,
                    Some(&t.text),
                ));
            }
        }

        if seeds.is_empty() && sentiment.is_empty() {
            for (a, b, topic, person) in &mentions {
                let span = (tok(*a), tok(*b));
                let (part, topic) = if *person {
                    (Part::General, "persons")
                } else {
                    (Part::Thematic, topic.as_str())
                };
                out.push(example(
                    format!("{}:n{}-{}", s.id, span.0, span.1),
                    span,
                    Label::Neutral,
                    part,
                    topic,
                    None,
                ));
            }
        }
        out
    }
}

/// (token index, lower-cased text) of every word or number token.
pub fn words(s: &Sentence) -> Vec<(usize, String)> {
    s.tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t.kind, TokenKind::Word | TokenKind::Number))
        .map(|(i, t)| (i, t.text.to_lowercase()))
        .collect()
}

/// Non-overlapping occurrences (term, first word, last word): longer first,
/// then further left.
pub fn longest_leftmost(words: &[(usize, String)], terms: &[Vec<String>]) -> Vec<(usize, usize, usize)> {
    let mut all = Vec::new();
    for (ti, t) in terms.iter().enumerate() {
        if t.is_empty() || t.len() > words.len() {
            continue;
        }
        for start in 0..=words.len() - t.len() {
            if t.iter().enumerate().all(|(k, w)| &words[start + k].1 == w) {
                all.push((ti, start, start + t.len() - 1));
            }
        }
    }
    all.sort_by_key(|&(ti, a, b)| (std::cmp::Reverse(b - a), a, ti));
    let mut kept: Vec<(usize, usize, usize)> = Vec::new();
    for m in all {
        if kept.iter().all(|k| m.2 < k.1 || k.2 < m.1) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| m.1);
    kept
}

/// A particle among the few words right before word `w`.
pub fn negated(words: &[(usize, String)], w: usize) -> bool {
    words[w.saturating_sub(NEGATION_WINDOW)..w]
        .iter()
        .any(|(_, x)| PARTICLES.contains(&x.as_str()))
}

/// Balanced quote pairs as (open token, close token).
pub fn quote_spans(s: &Sentence) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    for (open, close) in QUOTES {
        let mut pending: Vec<usize> = Vec::new();
        for (i, t) in s.tokens.iter().enumerate() {
            if open == close {
                if t.text == open {
                    match pending.pop() {
                        Some(o) => spans.push((o, i)),
                        None => pending.push(i),
                    }
                }
            } else if t.text == open {
                pending.push(i);
            } else if t.text == close {
                if let Some(o) = pending.pop() {
                    spans.push((o, i));
                }
            }
        }
    }
    spans
}

pub fn quoted(s: &Sentence, first: usize, last: usize) -> bool {
    quote_spans(s).iter().any(|&(o, c)| o < first && last < c)
}

pub fn masked(s: &Sentence, (first, last): (usize, usize)) -> String {
    format!("{}MASK{}", &s.text[..s.tokens[first].start], &s.text[s.tokens[last].end..])
}

/// Word tokens strictly between two disjoint token spans.
pub fn word_gap(s: &Sentence, a: (usize, usize), b: (usize, usize)) -> Option<usize> {
    let (lo, hi) = if a.1 < b.0 {
        (a.1, b.0)
    } else if b.1 < a.0 {
        (b.1, a.0)
    } else {
        return None;
    };
    Some(
        s.tokens[lo + 1..hi]
            .iter()
            .filter(|t| matches!(t.kind, TokenKind::Word | TokenKind::Number))
            .count(),
    )
}

/// Plain tf-idf with string keys: `idf = ln(N / df) + 1`, raw counts.
pub fn tfidf(texts: &[&str]) -> Vec<BTreeMap<String, f64>> {
    let tok = Tokenizer::default();
    let docs: Vec<Vec<String>> = texts
        .iter()
        .map(|t| {
            tok.tokenize(t)
                .into_iter()
                .filter(|x| matches!(x.kind, TokenKind::Word | TokenKind::Number) && x.text != "MASK")
                .map(|x| x.text.to_lowercase())
                .collect()
        })
        .collect();
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for d in &docs {
        let uniq: BTreeSet<&str> = d.iter().map(String::as_str).collect();
        for w in uniq {
            *df.entry(w).or_default() += 1.0;
        }
    }
    let n = texts.len() as f64;
    docs.iter()
        .map(|d| {
            let mut v: BTreeMap<String, f64> = BTreeMap::new();
            for w in d {
                *v.entry(w.clone()).or_default() += 1.0;
            }
            for (w, x) in v.iter_mut() {
                *x *= (n / df[w.as_str()]).ln() + 1.0;
            }
            v
        })
        .collect()
}

/// `None` when either vector is empty.
pub fn cos(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Option<f64> {
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    Some(dot / (na * nb))
}

/// Metrics recomputed from expanded (gold, predicted) item lists.
pub fn reference_scores(m: &[[u64; 3]; 3]) -> [f64; 4] {
    let mut items = Vec::new();
    for (g, row) in m.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            items.extend(std::iter::repeat_n((g, p), n as usize));
        }
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let f1 = |p: f64, r: f64| div(2.0 * p * r, p + r);
    let correct = items.iter().filter(|(g, p)| g == p).count() as f64;
    let mut per_class = [0.0; 3];
    let (mut tp_s, mut fp_s, mut fn_s) = (0.0, 0.0, 0.0);
    for (c, slot) in per_class.iter_mut().enumerate() {
        let tp = items.iter().filter(|&&(g, p)| g == c && p == c).count() as f64;
        let fp = items.iter().filter(|&&(g, p)| g != c && p == c).count() as f64;
        let fn_ = items.iter().filter(|&&(g, p)| g == c && p != c).count() as f64;
        *slot = f1(div(tp, tp + fp), div(tp, tp + fn_));
        if c < 2 {
            tp_s += tp;
            fp_s += fp;
            fn_s += fn_;
        }
    }
    [
        correct / items.len() as f64,
        per_class.iter().sum::<f64>() / 3.0,
        (per_class[0] + per_class[1]) / 2.0,
        f1(div(tp_s, tp_s + fp_s), div(tp_s, tp_s + fn_s)),
    ]
}
