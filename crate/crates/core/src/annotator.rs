//! Distant-supervision labelling: general examples from seed words, thematic
//! examples from entity mentions near sentiment words, and neutral examples
//! from mentions in sentences without any sentiment word.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::entities::{merge_mentions, AnnotationIndex, EntityMention, EntityType, Gazetteer};
use crate::error::{Error, Result};
use crate::ingest::{Sentence, Tokenizer, TokenKind};
use crate::lexicon::{Lexicon, Polarity, SeedList, SeedMatcher, SentimentMatch, SentimentMatcher};
use crate::matching::{SentenceWords, SuffixStripper};
use crate::Label;

pub const MASK: &str = "MASK";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    General,
    Thematic,
    Benchmark,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::General => "general",
            Part::Thematic => "thematic",
            Part::Benchmark => "benchmark",
        }
    }
}

/// One line of an example file. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub part: Part,
    #[serde(default)]
    pub topic: String,
    #[serde(default)]
    pub target_surface: String,
    #[serde(default)]
    pub source_sentence_id: String,
    #[serde(default)]
    pub trigger: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationRules {
    pub max_distance_words: usize,
    /// Word tokens checked before a sentiment word for a negation particle.
    pub negation_window: usize,
    pub negation_particles: BTreeSet<String>,
    /// Two-character strings: opening glyph then closing glyph.
    pub quote_pairs: Vec<String>,
    pub suffix_stripping: bool,
    pub stemmer: SuffixStripper,
    /// Topic of general-part examples.
    pub general_topic: String,
}

impl Default for AnnotationRules {
    fn default() -> Self {
        AnnotationRules {
            max_distance_words: 4,
            negation_window: 3,
            negation_particles: ["не", "ни"].map(String::from).into(),
            quote_pairs: ["«»", "„“", "“”", "\"\"", "‘’"].map(String::from).into(),
            suffix_stripping: false,
            stemmer: SuffixStripper::default(),
            general_topic: "persons".into(),
        }
    }
}

impl AnnotationRules {
    pub fn validate(&self) -> Result<()> {
        if self.max_distance_words < 1 {
            return Err(Error::Config("max_distance_words must be at least 1".into()));
        }
        if self.negation_window < 1 {
            return Err(Error::Config("negation_window must be at least 1".into()));
        }
        for p in &self.quote_pairs {
            if p.chars().count() != 2 {
                return Err(Error::Config(format!(
                    "quote pair {p:?} must be exactly two characters"
                )));
            }
        }
        Ok(())
    }

    pub fn glyph_pairs(&self) -> Vec<(char, char)> {
        self.quote_pairs
            .iter()
            .filter_map(|p| {
                let mut c = p.chars();
                Some((c.next()?, c.next()?))
            })
            .collect()
    }

    /// Tokenizer whose quote glyphs are exactly the configured ones.
    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::new(self.glyph_pairs().into_iter().flat_map(|(o, c)| [o, c]))
    }

    fn stemmer(&self) -> Option<SuffixStripper> {
        self.suffix_stripping.then(|| self.stemmer.clone())
    }
}

/// An example together with the token spans it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub example: LabeledExample,
    pub target: (usize, usize),
    pub trigger: Option<(usize, usize)>,
}

/// Replaces the tokens of `span` with a single `MASK`, keeping the rest of the text verbatim.
pub fn mask_target(sentence: &Sentence, span: (usize, usize)) -> Result<String> {
    let (first, last) = span;
    if first > last || last >= sentence.tokens.len() {
        return Err(Error::SpanOutOfBounds {
            start: first,
            end: last,
            len: sentence.tokens.len(),
        });
    }
    let head = &sentence.text[..sentence.tokens[first].start];
    let tail = &sentence.text[sentence.tokens[last].end..];
    Ok(format!("{head}{MASK}{tail}"))
}

/// False when a negation particle occurs among the `negation_window` word
/// tokens right before the trigger.
pub fn negation_filter(words: &SentenceWords, trigger: (usize, usize), rules: &AnnotationRules) -> bool {
    let k = words.words_before[trigger.0];
    let from = k.saturating_sub(rules.negation_window);
    !words.lower[from..k]
        .iter()
        .any(|w| rules.negation_particles.contains(w))
}

/// Balanced (open, close) token positions for each configured glyph pair.
/// Each pair type is matched independently: distinct glyphs nest like
/// brackets, identical glyphs pair up in order of appearance.
pub fn quote_pairs(sentence: &Sentence, rules: &AnnotationRules) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (open, close) in rules.glyph_pairs() {
        let glyph = |i: usize, c: char| {
            let t = &sentence.tokens[i];
            t.kind == TokenKind::Quote && t.text.chars().eq(std::iter::once(c))
        };
        let mut stack: Vec<usize> = Vec::new();
        for i in 0..sentence.tokens.len() {
            if open == close {
                if glyph(i, open) {
                    match stack.pop() {
                        Some(o) => pairs.push((o, i)),
                        None => stack.push(i),
                    }
                }
            } else if glyph(i, open) {
                stack.push(i);
            } else if glyph(i, close) {
                if let Some(o) = stack.pop() {
                    pairs.push((o, i));
                }
            }
        }
    }
    pairs
}

/// False when the trigger lies strictly inside a balanced quote pair.
pub fn quotation_filter(sentence: &Sentence, trigger: (usize, usize), rules: &AnnotationRules) -> bool {
    !quote_pairs(sentence, rules)
        .iter()
        .any(|&(o, c)| o < trigger.0 && trigger.1 < c)
}

fn passes_filters(
    sentence: &Sentence,
    words: &SentenceWords,
    span: (usize, usize),
    rules: &AnnotationRules,
) -> bool {
    negation_filter(words, span, rules) && quotation_filter(sentence, span, rules)
}

fn span_id(tag: char, span: (usize, usize)) -> String {
    format!("{tag}{}-{}", span.0, span.1)
}

/// One example per seed occurrence that survives the negation and quotation filters.
pub fn extract_general(
    sentence: &Sentence,
    words: &SentenceWords,
    seeds: &[SentimentMatch],
    rules: &AnnotationRules,
) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for seed in seeds {
        let span = seed.span();
        if !passes_filters(sentence, words, span, rules) {
            continue;
        }
        out.push(Annotation {
            example: LabeledExample {
                id: format!("{}:{}", sentence.id, span_id('g', span)),
                text: mask_target(sentence, span)?,
                label: seed.polarity.label(),
                part: Part::General,
                topic: rules.general_topic.clone(),
                target_surface: sentence.slice(span.0, span.1).to_string(),
                source_sentence_id: sentence.id.clone(),
                trigger: Some(seed.term.clone()),
            },
            target: span,
            trigger: Some(span),
        });
    }
    Ok(out)
}

/// Organization mentions paired with unambiguous sentiment words at most
/// `max_distance_words` words away. One example per (mention, polarity),
/// recording the first qualifying trigger.
pub fn extract_thematic(
    sentence: &Sentence,
    words: &SentenceWords,
    mentions: &[EntityMention],
    matches: &[SentimentMatch],
    rules: &AnnotationRules,
) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for mention in mentions.iter().filter(|m| m.etype == EntityType::Organization) {
        let target = mention.span();
        let mut seen: Vec<Polarity> = Vec::new();
        for m in matches.iter().filter(|m| !m.ambiguous && m.polarity != Polarity::Neutral) {
            if seen.contains(&m.polarity) {
                continue;
            }
            let close = words
                .distance(target, m.span())
                .is_some_and(|d| d <= rules.max_distance_words);
            if !close || !passes_filters(sentence, words, m.span(), rules) {
                continue;
            }
            seen.push(m.polarity);
            out.push(Annotation {
                example: LabeledExample {
                    id: format!("{}:{}:{}", sentence.id, span_id('t', target), m.first),
                    text: mask_target(sentence, target)?,
                    label: m.polarity.label(),
                    part: Part::Thematic,
                    topic: mention.topic.clone(),
                    target_surface: mention.surface.clone(),
                    source_sentence_id: sentence.id.clone(),
                    trigger: Some(m.term.clone()),
                },
                target,
                trigger: Some(m.span()),
            });
        }
    }
    Ok(out)
}

/// Neutral examples for every organization or person mention, provided the
/// sentence has no sentiment word at all (ambiguous ones included).
pub fn extract_neutral(
    sentence: &Sentence,
    mentions: &[EntityMention],
    has_sentiment: bool,
    rules: &AnnotationRules,
) -> Result<Vec<Annotation>> {
    if has_sentiment {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for mention in mentions {
        let (part, topic) = match mention.etype {
            EntityType::Organization => (Part::Thematic, mention.topic.clone()),
            EntityType::Person => (Part::General, rules.general_topic.clone()),
            EntityType::Other => continue,
        };
        let target = mention.span();
        out.push(Annotation {
            example: LabeledExample {
                id: format!("{}:{}", sentence.id, span_id('n', target)),
                text: mask_target(sentence, target)?,
                label: Label::Neutral,
                part,
                topic,
                target_surface: mention.surface.clone(),
                source_sentence_id: sentence.id.clone(),
                trigger: None,
            },
            target,
            trigger: None,
        });
    }
    Ok(out)
}

/// Compiled lexicon, seeds and entity sources for annotating sentences.
pub struct Annotator {
    rules: AnnotationRules,
    sentiment: SentimentMatcher,
    seeds: SeedMatcher,
    gazetteers: Vec<Gazetteer>,
    imports: AnnotationIndex,
}

impl Annotator {
    pub fn new(
        lexicon: &Lexicon,
        seeds: &SeedList,
        gazetteers: Vec<Gazetteer>,
        imports: AnnotationIndex,
        rules: AnnotationRules,
    ) -> Result<Self> {
        rules.validate()?;
        let tokenizer = rules.tokenizer();
        Ok(Annotator {
            sentiment: SentimentMatcher::new(lexicon, &tokenizer, rules.stemmer()),
            seeds: SeedMatcher::new(seeds, &tokenizer, rules.stemmer()),
            gazetteers,
            imports,
            rules,
        })
    }

    pub fn rules(&self) -> &AnnotationRules {
        &self.rules
    }

    pub fn mentions(&self, sentence: &Sentence, words: &SentenceWords) -> Result<Vec<EntityMention>> {
        let mut lists: Vec<Vec<EntityMention>> =
            self.gazetteers.iter().map(|g| g.find(sentence, words)).collect();
        lists.push(self.imports.mentions(sentence)?);
        Ok(merge_mentions(lists))
    }

    /// All examples for one sentence, in (target, part, trigger) order.
    /// Sentences that already contain a literal `MASK` word are skipped.
    pub fn annotate(&self, sentence: &Sentence) -> Result<Vec<Annotation>> {
        let words = SentenceWords::new(sentence);
        if words.lower.is_empty() || sentence.tokens.iter().any(|t| t.text == MASK) {
            return Ok(Vec::new());
        }
        let seeds = self.seeds.find(&words);
        let matches = self.sentiment.find(&words);
        let mentions = self.mentions(sentence, &words)?;

        let mut out = extract_general(sentence, &words, &seeds, &self.rules)?;
        out.extend(extract_thematic(sentence, &words, &mentions, &matches, &self.rules)?);
        let has_sentiment = !matches.is_empty() || !seeds.is_empty();
        out.extend(extract_neutral(sentence, &mentions, has_sentiment, &self.rules)?);
        out.sort_by(|a, b| {
            (a.target, a.example.part, a.trigger).cmp(&(b.target, b.example.part, b.trigger))
        });
        Ok(out)
    }
}
