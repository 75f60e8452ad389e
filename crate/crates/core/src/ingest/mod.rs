//! Corpus ingestion: documents in, tokenized and normalized sentences out.

mod normalize;
mod segment;
mod tokenize;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use normalize::{normalize, Replacements};
pub use segment::{Segmenter, DEFAULT_ABBREVIATIONS};
pub(crate) use tokenize::lowercase;
pub use tokenize::{tokenize, Token, TokenKind, Tokenizer, DEFAULT_QUOTE_GLYPHS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub doc_id: String,
    /// Byte span of the sentence in its document.
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Source text covered by tokens `first..=last`.
    pub fn slice(&self, first: usize, last: usize) -> &str {
        &self.text[self.tokens[first].start..self.tokens[last].end]
    }
}

/// Settings for turning raw document text into sentences.
#[derive(Debug, Clone, Default)]
pub struct Ingestor {
    pub segmenter: Segmenter,
    pub tokenizer: Tokenizer,
    /// `None` keeps sentence text verbatim.
    pub normalize: Option<Replacements>,
}

impl Ingestor {
    /// Splits a document into sentences. Sentence text is normalized when
    /// configured; `start`/`end` always refer to the raw document.
    pub fn split_sentences(&self, doc: &Document) -> Vec<Sentence> {
        self.segmenter
            .split(&doc.text)
            .into_iter()
            .enumerate()
            .filter_map(|(n, (start, end))| {
                let raw = &doc.text[start..end];
                let text = match &self.normalize {
                    Some(map) => normalize(raw, &self.tokenizer, map),
                    None => raw.to_string(),
                };
                if text.is_empty() {
                    return None;
                }
                let tokens = self.tokenizer.tokenize(&text);
                Some(Sentence {
                    id: format!("{}:{n}", doc.id),
                    doc_id: doc.id.clone(),
                    start,
                    end,
                    text,
                    tokens,
                })
            })
            .collect()
    }

    /// Token count of a standalone text after the same normalization.
    pub fn token_count(&self, text: &str) -> usize {
        match &self.normalize {
            Some(map) => self
                .tokenizer
                .tokenize(&normalize(text, &self.tokenizer, map))
                .len(),
            None => self.tokenizer.tokenize(text).len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthBounds {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
}

impl LengthBounds {
    pub fn contains(&self, token_count: usize) -> bool {
        (self.min_tokens..=self.max_tokens).contains(&token_count)
    }
}

/// Nearest-rank quantile of an ascending slice: the value at 1-based rank
/// `ceil(q * n)`, with rank clamped to `1..=n`.
fn nearest_rank(sorted: &[usize], q: f64) -> usize {
    let n = sorted.len();
    let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Fits length bounds to the token counts of a reference sample.
pub fn fit_length_bounds(
    reference_lengths: &[usize],
    lower_quantile: f64,
    upper_quantile: f64,
) -> Result<LengthBounds> {
    if reference_lengths.is_empty() {
        return Err(Error::Data("no reference sample".into()));
    }
    if !(0.0..1.0).contains(&lower_quantile)
        || !(upper_quantile > 0.0 && upper_quantile <= 1.0)
        || lower_quantile >= upper_quantile
    {
        return Err(Error::Config(format!(
            "invalid quantile pair ({lower_quantile}, {upper_quantile})"
        )));
    }
    let mut sorted = reference_lengths.to_vec();
    sorted.sort_unstable();
    Ok(LengthBounds {
        min_tokens: nearest_rank(&sorted, lower_quantile).max(1),
        max_tokens: nearest_rank(&sorted, upper_quantile).max(1),
        lower_quantile,
        upper_quantile,
    })
}

pub fn length_filter(sentences: Vec<Sentence>, bounds: &LengthBounds) -> Vec<Sentence> {
    sentences
        .into_iter()
        .filter(|s| bounds.contains(s.token_count()))
        .collect()
}

/// Streaming reader over a corpus file.
///
/// `.jsonl`/`.json` files hold one `{"id","text","source"?}` object per line;
/// anything else is plain text with one document per line, ids `doc-<line>`.
pub struct CorpusReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    jsonl: bool,
    line_no: usize,
}

impl CorpusReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let jsonl = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("jsonl" | "json" | "ndjson")
        );
        Ok(CorpusReader {
            path: path.to_path_buf(),
            lines: BufReader::with_capacity(1 << 20, file).lines(),
            jsonl,
            line_no: 0,
        })
    }
}

impl Iterator for CorpusReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            if !self.jsonl {
                return Some(Ok(Document {
                    id: format!("doc-{}", self.line_no),
                    text: line,
                    source: None,
                }));
            }
            let doc = serde_json::from_str::<Document>(&line)
                .map_err(|e| Error::parse(&self.path, self.line_no, e.to_string()))
                .and_then(|doc| {
                    if doc.id.is_empty() {
                        Err(Error::parse(&self.path, self.line_no, "empty document id"))
                    } else {
                        Ok(doc)
                    }
                });
            return Some(doc);
        }
    }
}
