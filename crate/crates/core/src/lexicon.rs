//! Sentiment lexicon, seed-word lists and sentiment-word matching.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Tokenizer;
use crate::matching::{PhraseMatcher, SentenceWords, SuffixStripper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Adjective,
    Verb,
    Phrase,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn label(self) -> crate::Label {
        match self {
            Polarity::Positive => crate::Label::Positive,
            Polarity::Negative => crate::Label::Negative,
            Polarity::Neutral => crate::Label::Neutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    PersonReference,
    CompanyReference,
    General,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub term: String,
    pub pos: Pos,
    pub polarity: Polarity,
    pub ambiguous: bool,
    pub category: BTreeSet<Category>,
    pub source: Option<String>,
}

fn parse_pos(s: &str) -> Option<Pos> {
    Some(match s {
        "noun" | "n" => Pos::Noun,
        "adjective" | "adj" => Pos::Adjective,
        "verb" | "v" => Pos::Verb,
        "phrase" => Pos::Phrase,
        "other" => Pos::Other,
        _ => return None,
    })
}

fn parse_polarity(s: &str) -> Option<Polarity> {
    Some(match s {
        "positive" => Polarity::Positive,
        "negative" => Polarity::Negative,
        "neutral" => Polarity::Neutral,
        _ => return None,
    })
}

fn parse_category(s: &str) -> Option<Category> {
    Some(match s {
        "person_reference" => Category::PersonReference,
        "company_reference" => Category::CompanyReference,
        "general" => Category::General,
        _ => return None,
    })
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    /// First word of each term -> entry indices.
    index: HashMap<String, Vec<usize>>,
    /// term -> entry indices.
    by_term: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    /// Builds a lexicon, merging rows that repeat a (term, polarity) pair and
    /// recomputing ambiguity from polarity conflicts.
    pub fn from_entries(rows: impl IntoIterator<Item = LexiconEntry>) -> Self {
        let mut lex = Lexicon::default();
        for mut row in rows {
            row.term = row.term.trim().to_lowercase();
            let dup = lex.by_term.get(&row.term).and_then(|ids| {
                ids.iter()
                    .copied()
                    .find(|&i| lex.entries[i].polarity == row.polarity)
            });
            if let Some(i) = dup {
                lex.entries[i].category.extend(row.category);
                continue;
            }
            let id = lex.entries.len();
            let first = row.term.split_whitespace().next().unwrap_or("").to_string();
            lex.index.entry(first).or_default().push(id);
            lex.by_term.entry(row.term.clone()).or_default().push(id);
            lex.entries.push(row);
        }
        for ids in lex.by_term.values() {
            let polarities: BTreeSet<_> = ids.iter().map(|&i| lex.entries[i].polarity).collect();
            let ambiguous = polarities.len() > 1;
            for &i in ids {
                lex.entries[i].ambiguous = ambiguous;
            }
        }
        lex
    }

    /// Parses the lexicon TSV: `term, pos, polarity, category[;category...], source?`.
    /// `#` lines and blank lines are skipped, as is a `term\t...` header.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if rows.is_empty() && cols[0].eq_ignore_ascii_case("term") {
                continue;
            }
            if cols.len() < 4 || cols.len() > 5 {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected 4 or 5 tab-separated columns, found {}", cols.len()),
                ));
            }
            let bad = |what: &str, v: &str| Error::parse(path, line_no, format!("unknown {what} {v:?}"));
            if cols[0].is_empty() {
                return Err(Error::parse(path, line_no, "empty term"));
            }
            let pos = parse_pos(&cols[1].to_lowercase()).ok_or_else(|| bad("pos", cols[1]))?;
            let polarity =
                parse_polarity(&cols[2].to_lowercase()).ok_or_else(|| bad("polarity", cols[2]))?;
            let mut category = BTreeSet::new();
            for c in cols[3].split(';').map(str::trim).filter(|c| !c.is_empty()) {
                category.insert(parse_category(&c.to_lowercase()).ok_or_else(|| bad("category", c))?);
            }
            rows.push(LexiconEntry {
                term: cols[0].to_string(),
                pos,
                polarity,
                ambiguous: false,
                category,
                source: cols.get(4).filter(|s| !s.is_empty()).map(|s| s.to_string()),
            });
        }
        if rows.is_empty() {
            return Err(Error::parse(path, 0, "lexicon is empty"));
        }
        Ok(Self::from_entries(rows))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries whose term starts with `word`.
    pub fn starting_with(&self, word: &str) -> impl Iterator<Item = &LexiconEntry> {
        self.index
            .get(word)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    pub fn lookup(&self, term: &str) -> impl Iterator<Item = &LexiconEntry> {
        self.by_term
            .get(term)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    /// Monosemous positive/negative nouns usable as references to people or companies.
    pub fn seed_references(&self) -> SeedList {
        let mut seeds = SeedList::default();
        for e in &self.entries {
            let is_reference = e.category.contains(&Category::PersonReference)
                || e.category.contains(&Category::CompanyReference);
            if e.pos != Pos::Noun || e.ambiguous || !is_reference {
                continue;
            }
            match e.polarity {
                Polarity::Positive => seeds.positive.insert(e.term.clone()),
                Polarity::Negative => seeds.negative.insert(e.term.clone()),
                Polarity::Neutral => false,
            };
        }
        seeds
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedList {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

impl SeedList {
    /// Reads two plain word lists, one term per line.
    pub fn from_files(positive: &Path, negative: &Path) -> Result<Self> {
        let read = |p: &Path| -> Result<BTreeSet<String>> {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(text
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect())
        };
        let seeds = SeedList {
            positive: read(positive)?,
            negative: read(negative)?,
        };
        if let Some(both) = seeds.positive.intersection(&seeds.negative).next() {
            return Err(Error::Data(format!("seed {both:?} is listed as both positive and negative")));
        }
        Ok(seeds)
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sentiment word found in a sentence. Spans are inclusive token indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentMatch {
    /// The matched lexicon term.
    pub term: String,
    pub first: usize,
    pub last: usize,
    /// Polarity of the term; meaningless when `ambiguous`.
    pub polarity: Polarity,
    pub ambiguous: bool,
}

impl SentimentMatch {
    pub fn span(&self) -> (usize, usize) {
        (self.first, self.last)
    }
}

struct Pattern {
    term: String,
    polarity: Polarity,
    ambiguous: bool,
}

/// Compiled matcher over the positive/negative terms of a lexicon.
pub struct SentimentMatcher {
    matcher: PhraseMatcher,
    patterns: Vec<Pattern>,
}

impl SentimentMatcher {
    /// Terms whose senses are all neutral are not sentiment words and are left out.
    pub fn new(lexicon: &Lexicon, tokenizer: &Tokenizer, stemmer: Option<SuffixStripper>) -> Self {
        let mut matcher = PhraseMatcher::new(stemmer);
        let mut patterns = Vec::new();
        let mut terms: Vec<(&String, &Vec<usize>)> = lexicon.by_term.iter().collect();
        terms.sort();
        for (term, ids) in terms {
            let entries: Vec<&LexiconEntry> = ids.iter().map(|&i| &lexicon.entries[i]).collect();
            if entries.iter().all(|e| e.polarity == Polarity::Neutral) {
                continue;
            }
            let words = PhraseMatcher::phrase_words(tokenizer, term);
            if matcher.insert(&words).is_some() {
                patterns.push(Pattern {
                    term: term.clone(),
                    polarity: entries[0].polarity,
                    ambiguous: entries[0].ambiguous,
                });
            }
        }
        SentimentMatcher { matcher, patterns }
    }

    pub fn find(&self, words: &SentenceWords) -> Vec<SentimentMatch> {
        self.matcher
            .find(words)
            .into_iter()
            .map(|m| {
                // Several terms may share a key after suffix stripping.
                let first = &self.patterns[m.patterns[0]];
                let ambiguous = m.patterns.iter().any(|&p| {
                    self.patterns[p].ambiguous || self.patterns[p].polarity != first.polarity
                });
                SentimentMatch {
                    term: first.term.clone(),
                    first: m.first,
                    last: m.last,
                    polarity: first.polarity,
                    ambiguous,
                }
            })
            .collect()
    }
}

/// Compiled matcher over seed words.
pub struct SeedMatcher {
    matcher: PhraseMatcher,
    patterns: Vec<(String, Polarity)>,
}

impl SeedMatcher {
    pub fn new(seeds: &SeedList, tokenizer: &Tokenizer, stemmer: Option<SuffixStripper>) -> Self {
        let mut matcher = PhraseMatcher::new(stemmer);
        let mut patterns = Vec::new();
        let all = seeds
            .positive
            .iter()
            .map(|t| (t, Polarity::Positive))
            .chain(seeds.negative.iter().map(|t| (t, Polarity::Negative)));
        for (term, polarity) in all {
            if matcher
                .insert(&PhraseMatcher::phrase_words(tokenizer, term))
                .is_some()
            {
                patterns.push((term.clone(), polarity));
            }
        }
        SeedMatcher { matcher, patterns }
    }

    /// Seed occurrences; a key shared by seeds of both polarities is skipped.
    pub fn find(&self, words: &SentenceWords) -> Vec<SentimentMatch> {
        self.matcher
            .find(words)
            .into_iter()
            .filter_map(|m| {
                let (term, polarity) = &self.patterns[m.patterns[0]];
                if m.patterns.iter().any(|&p| self.patterns[p].1 != *polarity) {
                    return None;
                }
                Some(SentimentMatch {
                    term: term.clone(),
                    first: m.first,
                    last: m.last,
                    polarity: *polarity,
                    ambiguous: false,
                })
            })
            .collect()
    }
}
