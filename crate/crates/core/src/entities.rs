//! Entity mentions from gazetteers and from imported recognizer output.

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Sentence, Tokenizer};
use crate::matching::{PhraseMatcher, SentenceWords};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityType {
    Organization,
    Person,
    Other,
}

impl EntityType {
    /// Maps recognizer labels: ORG -> organization, PER -> person, other
    /// known labels -> other. Unknown labels are rejected.
    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label.trim().to_uppercase().as_str() {
            "ORG" | "ORGANIZATION" | "ORGANISATION" => EntityType::Organization,
            "PER" | "PERSON" => EntityType::Person,
            "LOC" | "LOCATION" | "GPE" | "MISC" | "OTHER" | "FAC" | "EVENT" | "PRODUCT" | "NORP" => {
                EntityType::Other
            }
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub sentence_id: String,
    /// Inclusive token span.
    pub first: usize,
    pub last: usize,
    pub surface: String,
    pub etype: EntityType,
    pub canonical: Option<String>,
    /// Topic tag of the gazetteer or annotation file the mention came from.
    pub topic: String,
}

impl EntityMention {
    pub fn span(&self) -> (usize, usize) {
        (self.first, self.last)
    }
}

pub struct Gazetteer {
    pub topic: String,
    entries: Vec<(String, EntityType, Option<String>)>,
    matcher: PhraseMatcher,
}

impl Gazetteer {
    pub fn new(
        topic: impl Into<String>,
        entries: impl IntoIterator<Item = (String, EntityType, Option<String>)>,
        tokenizer: &Tokenizer,
    ) -> Self {
        let mut matcher = PhraseMatcher::new(None);
        let mut kept = Vec::new();
        for (surface, etype, canonical) in entries {
            let surface = surface.trim().to_lowercase();
            if matcher
                .insert(&PhraseMatcher::phrase_words(tokenizer, &surface))
                .is_some()
            {
                kept.push((surface, etype, canonical));
            }
        }
        Gazetteer {
            topic: topic.into(),
            entries: kept,
            matcher,
        }
    }

    /// Parses `surface<TAB>etype<TAB>canonical` rows.
    pub fn load(path: &Path, topic: &str, tokenizer: &Tokenizer) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols[0].is_empty() || cols.len() > 3 {
                return Err(Error::parse(path, n + 1, "expected surface<TAB>etype<TAB>canonical"));
            }
            let etype = match cols.get(1) {
                Some(t) if !t.is_empty() => EntityType::from_label(t)
                    .ok_or_else(|| Error::parse(path, n + 1, format!("unknown entity type {t:?}")))?,
                _ => EntityType::Organization,
            };
            let canonical = cols.get(2).filter(|c| !c.is_empty()).map(|c| c.to_string());
            rows.push((cols[0].to_string(), etype, canonical));
        }
        Ok(Self::new(topic, rows, tokenizer))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, sentence: &Sentence, words: &SentenceWords) -> Vec<EntityMention> {
        self.matcher
            .find(words)
            .into_iter()
            .map(|m| {
                let (_, etype, canonical) = &self.entries[m.patterns[0]];
                EntityMention {
                    sentence_id: sentence.id.clone(),
                    first: m.first,
                    last: m.last,
                    surface: sentence.slice(m.first, m.last).to_string(),
                    etype: *etype,
                    canonical: canonical.clone(),
                    topic: self.topic.clone(),
                }
            })
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationRecord {
    sentence_id: String,
    #[serde(default)]
    text: Option<String>,
    spans: Vec<SpanRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpanRecord {
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    etype: String,
    #[serde(default)]
    canonical: Option<String>,
}

#[derive(Debug, Clone)]
struct ImportedSpan {
    first: usize,
    last: usize,
    etype: EntityType,
    canonical: Option<String>,
    topic: String,
    path: PathBuf,
    line: usize,
    text: Option<String>,
}

/// Imported mentions keyed by sentence id.
#[derive(Debug, Clone, Default)]
pub struct AnnotationIndex {
    spans: HashMap<String, Vec<ImportedSpan>>,
}

impl AnnotationIndex {
    /// Reads span annotations (JSON lines). Records that carry the sentence
    /// text are bounds-checked right away; all records are checked again
    /// against the real sentence in [`AnnotationIndex::mentions`].
    pub fn import(path: &Path, topic: &str, tokenizer: &Tokenizer) -> Result<Self> {
        let mut index = AnnotationIndex::default();
        index.import_more(path, topic, tokenizer)?;
        Ok(index)
    }

    pub fn import_more(&mut self, path: &Path, topic: &str, tokenizer: &Tokenizer) -> Result<()> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnnotationRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
            let token_count = rec.text.as_deref().map(|t| tokenizer.tokenize(t).len());
            for span in rec.spans {
                let etype = EntityType::from_label(&span.etype).ok_or_else(|| {
                    Error::parse(
                        path,
                        line_no,
                        format!("sentence {}: unknown entity type {:?}", rec.sentence_id, span.etype),
                    )
                })?;
                let out_of_range = token_count.is_some_and(|len| span.end >= len);
                if span.start > span.end || out_of_range {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!(
                            "sentence {}: span {}..={} out of bounds",
                            rec.sentence_id, span.start, span.end
                        ),
                    ));
                }
                self.spans
                    .entry(rec.sentence_id.clone())
                    .or_default()
                    .push(ImportedSpan {
                        first: span.start,
                        last: span.end,
                        etype,
                        canonical: span.canonical,
                        topic: topic.to_string(),
                        path: path.to_path_buf(),
                        line: line_no,
                        text: rec.text.clone(),
                    });
            }
        }
        Ok(())
    }

    pub fn sentence_count(&self) -> usize {
        self.spans.len()
    }

    pub fn mention_count(&self) -> usize {
        self.spans.values().map(Vec::len).sum()
    }

    /// Imported mentions for `sentence`, validated against its tokens.
    pub fn mentions(&self, sentence: &Sentence) -> Result<Vec<EntityMention>> {
        let Some(spans) = self.spans.get(&sentence.id) else {
            return Ok(Vec::new());
        };
        spans
            .iter()
            .map(|s| {
                if s.last >= sentence.tokens.len() {
                    return Err(Error::parse(
                        &s.path,
                        s.line,
                        format!(
                            "sentence {}: span {}..={} out of bounds for {} tokens",
                            sentence.id,
                            s.first,
                            s.last,
                            sentence.tokens.len()
                        ),
                    ));
                }
                if s.text.as_deref().is_some_and(|t| t != sentence.text) {
                    return Err(Error::parse(
                        &s.path,
                        s.line,
                        format!("sentence {}: text does not match the corpus", sentence.id),
                    ));
                }
                Ok(EntityMention {
                    sentence_id: sentence.id.clone(),
                    first: s.first,
                    last: s.last,
                    surface: sentence.slice(s.first, s.last).to_string(),
                    etype: s.etype,
                    canonical: s.canonical.clone(),
                    topic: s.topic.clone(),
                })
            })
            .collect()
    }
}

/// Concatenates mention lists, keeping the first mention for each
/// (sentence, span) key, and orders them by span.
pub fn merge_mentions(lists: impl IntoIterator<Item = Vec<EntityMention>>) -> Vec<EntityMention> {
    let mut seen = HashSet::default();
    let mut out: Vec<EntityMention> = lists
        .into_iter()
        .flatten()
        .filter(|m| seen.insert((m.sentence_id.clone(), m.first, m.last)))
        .collect();
    out.sort_by_key(|m| (m.first, m.last));
    out
}
