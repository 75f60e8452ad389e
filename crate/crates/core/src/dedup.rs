//! Near-duplicate removal by cosine similarity of tf-idf vectors.

use rustc_hash::{FxHashMap as HashMap, FxHashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotator::{LabeledExample, MASK};
use crate::error::{Error, Result};
use crate::ingest::{lowercase, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blocking {
    /// Score every pair.
    #[default]
    None,
    /// Score only pairs whose term counts are within a factor of two.
    LengthBands,
    /// Score only pairs sharing a prefix feature; exact for any threshold.
    PrefixFilter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupScope {
    #[default]
    Global,
    PerLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    /// Pairs with cosine strictly above this are duplicates.
    pub threshold: f64,
    pub rng_seed: u64,
    pub blocking: Blocking,
    pub scope: DedupScope,
    /// Never treat two examples cut from the same sentence as duplicates.
    pub keep_same_source: bool,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            threshold: 0.8,
            rng_seed: 0,
            blocking: Blocking::None,
            scope: DedupScope::Global,
            keep_same_source: true,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "dedup threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Sparse tf-idf vector, sorted by term id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TfIdfVector {
    pub weights: Vec<(u32, f64)>,
    pub norm: f64,
    /// Total term count (with repeats) of the source text.
    pub length: usize,
}

#[derive(Debug, Clone)]
pub struct TfIdfModel {
    pub vocabulary: HashMap<String, u32>,
    pub idf: Vec<f64>,
    pub doc_freq: Vec<usize>,
    pub documents: usize,
}

/// Lower-cased word and number tokens, without the mask placeholder.
pub fn terms(tokenizer: &Tokenizer, text: &str) -> Vec<String> {
    tokenizer
        .tokenize(text)
        .into_iter()
        .filter(|t| t.kind.is_word() && t.text != MASK)
        .map(|t| lowercase(&t.text))
        .collect()
}

impl TfIdfModel {
    /// Fits `idf(t) = ln(N / df(t)) + 1` over the given texts.
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::Data("cannot fit tf-idf on an empty collection".into()));
        }
        let tokenizer = Tokenizer::default();
        let mut vocabulary = HashMap::default();
        let mut doc_freq: Vec<usize> = Vec::new();
        let mut last_seen: Vec<usize> = Vec::new();
        for (d, text) in texts.iter().enumerate() {
            for term in terms(&tokenizer, text.as_ref()) {
                let next = vocabulary.len() as u32;
                let id = *vocabulary.entry(term).or_insert(next) as usize;
                if id == doc_freq.len() {
                    doc_freq.push(0);
                    last_seen.push(usize::MAX);
                }
                if last_seen[id] != d {
                    last_seen[id] = d;
                    doc_freq[id] += 1;
                }
            }
        }
        let n = texts.len() as f64;
        let idf = doc_freq.iter().map(|&df| (n / df as f64).ln() + 1.0).collect();
        Ok(TfIdfModel {
            vocabulary,
            idf,
            doc_freq,
            documents: texts.len(),
        })
    }

    /// Raw term count times idf; terms outside the vocabulary are dropped.
    pub fn vectorize(&self, tokenizer: &Tokenizer, text: &str) -> TfIdfVector {
        let mut counts: HashMap<u32, usize> = HashMap::default();
        let mut length = 0;
        for term in terms(tokenizer, text) {
            if let Some(&id) = self.vocabulary.get(&term) {
                *counts.entry(id).or_default() += 1;
                length += 1;
            }
        }
        let mut weights: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(id, tf)| (id, tf as f64 * self.idf[id as usize]))
            .collect();
        weights.sort_unstable_by_key(|w| w.0);
        let norm = weights.iter().map(|w| w.1 * w.1).sum::<f64>().sqrt();
        TfIdfVector {
            weights,
            norm,
            length,
        }
    }
}

fn dot(a: &TfIdfVector, b: &TfIdfVector) -> f64 {
    let (mut i, mut j, mut sum) = (0, 0, 0.0);
    while i < a.weights.len() && j < b.weights.len() {
        let (ta, wa) = a.weights[i];
        let (tb, wb) = b.weights[j];
        match ta.cmp(&tb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += wa * wb;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

pub fn cosine(a: &TfIdfVector, b: &TfIdfVector) -> Result<f64> {
    if a.norm == 0.0 || b.norm == 0.0 {
        return Err(Error::EmptyVector);
    }
    Ok((dot(a, b) / (a.norm * b.norm)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub survivors: Vec<LabeledExample>,
    pub removed: Vec<String>,
}

/// Removes near-duplicates. Over-threshold pairs are visited in canonical
/// (id-sorted) order; when both members are still alive the seeded RNG picks
/// which one goes. Survivors keep their input order.
pub fn dedup(examples: Vec<LabeledExample>, config: &DedupConfig) -> Result<DedupOutcome> {
    config.validate()?;
    if examples.is_empty() {
        return Ok(DedupOutcome {
            survivors: examples,
            removed: Vec::new(),
        });
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.sort_by(|&a, &b| examples[a].id.cmp(&examples[b].id));
    if let Some(w) = order.windows(2).find(|w| examples[w[0]].id == examples[w[1]].id) {
        return Err(Error::Data(format!("duplicate example id {:?}", examples[w[0]].id)));
    }

    let texts: Vec<&str> = order.iter().map(|&i| examples[i].text.as_str()).collect();
    let model = TfIdfModel::fit(&texts)?;
    let tokenizer = Tokenizer::default();
    let vectors: Vec<TfIdfVector> = texts
        .par_iter()
        .map(|t| model.vectorize(&tokenizer, t))
        .collect();

    let groups: Vec<Vec<usize>> = match config.scope {
        DedupScope::Global => vec![(0..order.len()).collect()],
        DedupScope::PerLabel => crate::Label::ALL
            .iter()
            .map(|&l| (0..order.len()).filter(|&c| examples[order[c]].label == l).collect())
            .collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut alive = vec![true; order.len()];
    let same_source = |a: usize, b: usize| {
        let (x, y) = (&examples[order[a]], &examples[order[b]]);
        config.keep_same_source
            && !x.source_sentence_id.is_empty()
            && x.source_sentence_id == y.source_sentence_id
    };
    for group in groups {
        let edges = similar_pairs_except(&vectors, &group, config.threshold, config.blocking, same_source);
        for (a, b) in edges {
            if alive[a] && alive[b] {
                let loser = if rng.random_bool(0.5) { a } else { b };
                alive[loser] = false;
            }
        }
    }

    let removed_ids: FxHashSet<usize> = order
        .iter()
        .enumerate()
        .filter(|(c, _)| !alive[*c])
        .map(|(_, &i)| i)
        .collect();
    let mut removed: Vec<String> = Vec::new();
    let mut survivors = Vec::with_capacity(examples.len() - removed_ids.len());
    for (i, ex) in examples.into_iter().enumerate() {
        if removed_ids.contains(&i) {
            removed.push(ex.id);
        } else {
            survivors.push(ex);
        }
    }
    removed.sort();
    Ok(DedupOutcome { survivors, removed })
}

/// Pairs `(a, b)`, `a < b`, of positions within `group` whose cosine exceeds
/// `threshold`, sorted. Zero vectors never pair.
pub fn similar_pairs(
    vectors: &[TfIdfVector],
    group: &[usize],
    threshold: f64,
    blocking: Blocking,
) -> Vec<(usize, usize)> {
    similar_pairs_except(vectors, group, threshold, blocking, |_, _| false)
}

/// Like [`similar_pairs`], leaving out pairs for which `skip` holds before scoring them.
pub fn similar_pairs_except(
    vectors: &[TfIdfVector],
    group: &[usize],
    threshold: f64,
    blocking: Blocking,
    skip: impl Fn(usize, usize) -> bool + Sync,
) -> Vec<(usize, usize)> {
    let over = |a: usize, b: usize| {
        !skip(a, b) && cosine(&vectors[a], &vectors[b]).is_ok_and(|c| c > threshold)
    };
    let mut edges: Vec<(usize, usize)> = match blocking {
        Blocking::None => group
            .par_iter()
            .enumerate()
            .flat_map_iter(|(k, &a)| {
                group[k + 1..]
                    .iter()
                    .filter(move |&&b| over(a, b))
                    .map(move |&b| (a.min(b), a.max(b)))
            })
            .collect(),
        Blocking::LengthBands => {
            let mut by_len: Vec<usize> = group.to_vec();
            by_len.sort_by_key(|&i| (vectors[i].length, i));
            by_len
                .par_iter()
                .enumerate()
                .flat_map_iter(|(k, &a)| {
                    let la = vectors[a].length;
                    by_len[k + 1..]
                        .iter()
                        .take_while(move |&&b| vectors[b].length <= 2 * la)
                        .filter(move |&&b| over(a, b))
                        .map(move |&b| (a.min(b), a.max(b)))
                })
                .collect()
        }
        Blocking::PrefixFilter => prefix_filter_pairs(vectors, group, threshold, over),
    };
    edges.par_sort_unstable();
    edges
}

/// Candidate generation by prefix filtering. Features are ordered rare-first;
/// a vector's prefix is its leading features up to the point where the
/// remaining (unit-normalized) suffix has norm below the threshold. Any pair
/// with cosine at or above the threshold shares a prefix feature, so only
/// such pairs are scored.
fn prefix_filter_pairs(
    vectors: &[TfIdfVector],
    group: &[usize],
    threshold: f64,
    over: impl Fn(usize, usize) -> bool + Sync,
) -> Vec<(usize, usize)> {
    let terms = group
        .iter()
        .flat_map(|&i| vectors[i].weights.last())
        .map(|&(t, _)| t as usize + 1)
        .max()
        .unwrap_or(0);
    let mut df = vec![0u32; terms];
    for &i in group {
        for &(t, _) in &vectors[i].weights {
            df[t as usize] += 1;
        }
    }
    let margin = threshold - 1e-9;
    let prefixes: Vec<Vec<u32>> = group
        .par_iter()
        .map(|&i| {
            let v = &vectors[i];
            if v.norm == 0.0 {
                return Vec::new();
            }
            let mut feats: Vec<(u32, f64)> = v.weights.clone();
            feats.sort_by_key(|&(t, _)| (df[t as usize], t));
            let mut suffix_sq: f64 = 1.0;
            let mut prefix = Vec::new();
            for (t, w) in feats {
                if margin > 0.0 && suffix_sq < margin * margin {
                    break;
                }
                prefix.push(t);
                let u = w / v.norm;
                suffix_sq -= u * u;
            }
            prefix
        })
        .collect();

    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); terms];
    for (k, prefix) in prefixes.iter().enumerate() {
        for &t in prefix {
            postings[t as usize].push(k as u32);
        }
    }
    let n = group.len();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![u32::MAX; n],
            |stamp, k| {
                let a = group[k];
                let mut out = Vec::new();
                for t in &prefixes[k] {
                    let list = &postings[*t as usize];
                    let from = list.partition_point(|&o| o as usize <= k);
                    for &o in &list[from..] {
                        if stamp[o as usize] == k as u32 {
                            continue;
                        }
                        stamp[o as usize] = k as u32;
                        let b = group[o as usize];
                        if over(a, b) {
                            out.push((a.min(b), a.max(b)));
                        }
                    }
                }
                out
            },
        )
        .flatten_iter()
        .collect()
}
