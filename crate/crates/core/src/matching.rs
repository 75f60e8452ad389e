//! Token-sequence phrase matching shared by the lexicon, seed and gazetteer matchers.

use rustc_hash::FxHashMap as HashMap;

use serde::{Deserialize, Serialize};

use crate::ingest::{lowercase, Sentence, Tokenizer};

/// Common Russian inflection endings, longest first after construction.
pub const DEFAULT_SUFFIXES: &[&str] = &[
    "иями", "ями", "ами", "ого", "его", "ому", "ему", "ыми", "ими", "ой", "ей", "ом", "ем", "ам",
    "ям", "ах", "ях", "ов", "ев", "ую", "юю", "ая", "яя", "ое", "ее", "ые", "ие", "ый", "ий", "ых",
    "их", "а", "я", "о", "е", "у", "ю", "ы", "и", "ь", "й",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuffixStripper {
    pub suffixes: Vec<String>,
    /// Stems never get shorter than this many characters.
    pub min_stem: usize,
}

impl Default for SuffixStripper {
    fn default() -> Self {
        SuffixStripper {
            suffixes: DEFAULT_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            min_stem: 3,
        }
    }
}

impl SuffixStripper {
    pub fn strip<'a>(&self, word: &'a str) -> &'a str {
        let chars = word.chars().count();
        self.suffixes
            .iter()
            .filter(|suf| word.ends_with(suf.as_str()))
            .filter(|suf| chars >= self.min_stem + suf.chars().count())
            .max_by_key(|suf| suf.chars().count())
            .map_or(word, |suf| &word[..word.len() - suf.len()])
    }
}

/// The word and number tokens of a sentence, lower-cased, with their token positions.
#[derive(Debug, Clone)]
pub struct SentenceWords {
    pub token_index: Vec<usize>,
    pub lower: Vec<String>,
    /// Prefix counts: `words_before[i]` word tokens precede token `i`; one
    /// extra trailing entry holds the total.
    pub words_before: Vec<usize>,
}

impl SentenceWords {
    pub fn new(sentence: &Sentence) -> Self {
        let mut token_index = Vec::new();
        let mut lower = Vec::new();
        let mut words_before = Vec::with_capacity(sentence.tokens.len() + 1);
        for (i, tok) in sentence.tokens.iter().enumerate() {
            words_before.push(token_index.len());
            if tok.kind.is_word() {
                token_index.push(i);
                lower.push(lowercase(&tok.text));
            }
        }
        words_before.push(token_index.len());
        SentenceWords {
            token_index,
            lower,
            words_before,
        }
    }

    /// Word tokens strictly between two disjoint token spans; `None` if they overlap.
    pub fn distance(&self, a: (usize, usize), b: (usize, usize)) -> Option<usize> {
        let (left, right) = if a.1 < b.0 {
            (a, b)
        } else if b.1 < a.0 {
            (b, a)
        } else {
            return None;
        };
        Some(self.words_before[right.0] - self.words_before[left.1 + 1])
    }
}

/// A match of pattern(s) over word tokens. `first`/`last` are token indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseMatch {
    pub patterns: Vec<usize>,
    pub first: usize,
    pub last: usize,
}

/// Trie over word sequences. Matching walks it from every word position, so a
/// sentence costs O(words x longest pattern).
#[derive(Debug, Clone, Default)]
pub struct PhraseMatcher {
    vocab: HashMap<String, u32>,
    edges: HashMap<(u32, u32), u32>,
    /// Pattern ids ending at each node; index 0 is the root.
    terminals: Vec<Vec<usize>>,
    stemmer: Option<SuffixStripper>,
    patterns: usize,
}

impl PhraseMatcher {
    pub fn new(stemmer: Option<SuffixStripper>) -> Self {
        PhraseMatcher {
            terminals: vec![Vec::new()],
            stemmer,
            ..Default::default()
        }
    }

    /// Splits a phrase into lower-cased word keys the way sentences are split.
    pub fn phrase_words(tokenizer: &Tokenizer, phrase: &str) -> Vec<String> {
        tokenizer
            .tokenize(phrase)
            .into_iter()
            .filter(|t| t.kind.is_word())
            .map(|t| t.text.to_lowercase())
            .collect()
    }

    fn key<'a>(&self, word: &'a str) -> &'a str {
        match &self.stemmer {
            Some(s) => s.strip(word),
            None => word,
        }
    }

    /// Adds a pattern and returns its id. Empty patterns are ignored and return `None`.
    pub fn insert(&mut self, words: &[String]) -> Option<usize> {
        if words.is_empty() {
            return None;
        }
        let mut node = 0u32;
        for w in words {
            let key = self.key(w).to_string();
            let next_word = self.vocab.len() as u32;
            let word = *self.vocab.entry(key).or_insert(next_word);
            let next_node = self.terminals.len() as u32;
            node = *self.edges.entry((node, word)).or_insert(next_node);
            if node == next_node {
                self.terminals.push(Vec::new());
            }
        }
        let id = self.patterns;
        self.patterns += 1;
        self.terminals[node as usize].push(id);
        Some(id)
    }

    pub fn is_empty(&self) -> bool {
        self.patterns == 0
    }

    /// Every occurrence of every pattern, unresolved.
    pub fn candidates(&self, words: &SentenceWords) -> Vec<PhraseMatch> {
        let ids: Vec<Option<u32>> = words
            .lower
            .iter()
            .map(|w| self.vocab.get(self.key(w)).copied())
            .collect();
        let mut out = Vec::new();
        for start in 0..ids.len() {
            let mut node = 0u32;
            for (pos, id) in ids.iter().enumerate().skip(start) {
                let Some(next) = id.and_then(|w| self.edges.get(&(node, w))) else {
                    break;
                };
                node = *next;
                let ends = &self.terminals[node as usize];
                if !ends.is_empty() {
                    out.push(PhraseMatch {
                        patterns: ends.clone(),
                        first: words.token_index[start],
                        last: words.token_index[pos],
                    });
                }
            }
        }
        out
    }

    /// Non-overlapping matches: longest first, then leftmost; returned in token order.
    pub fn find(&self, words: &SentenceWords) -> Vec<PhraseMatch> {
        if self.is_empty() || words.lower.is_empty() {
            return Vec::new();
        }
        select_longest_leftmost(self.candidates(words), words)
    }
}

fn select_longest_leftmost(mut cands: Vec<PhraseMatch>, words: &SentenceWords) -> Vec<PhraseMatch> {
    let len = |m: &PhraseMatch| words.words_before[m.last] - words.words_before[m.first];
    cands.sort_by(|a, b| len(b).cmp(&len(a)).then(a.first.cmp(&b.first)));
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for m in cands {
        if taken.iter().all(|&(f, l)| m.last < f || l < m.first) {
            taken.push((m.first, m.last));
            out.push(m);
        }
    }
    out.sort_by_key(|m| m.first);
    out
}
