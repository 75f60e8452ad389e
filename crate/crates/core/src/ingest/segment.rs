//! Rule-based sentence boundary detection.
//!
//! A run of terminators (`.`, `!`, `?`, `…`) closes a sentence when it is
//! followed by whitespace or the end of the text. Closing quotes and brackets
//! directly after the run stay with the sentence. A single `.` does not close
//! a sentence after a known abbreviation, inside a decimal number, or after an
//! initial (one capital letter).

use rustc_hash::FxHashSet as HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const TERMINATORS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &[')', ']', '}', '»', '”', '“', '"', '’'];

/// Built-in abbreviation list, used when no abbreviation file is configured.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "г", "гг", "в", "вв", "руб", "коп", "тыс", "млн", "млрд", "трлн", "долл", "см", "ср", "ул",
    "пр", "просп", "пер", "д", "др", "им", "проф", "акад", "доц", "стр", "рис", "табл", "т.е",
    "т.д", "т.п", "т.к", "т.н", "и.о", "н.э", "мин", "макс", "англ", "нем", "франц", "обл",
    "р-н", "corp", "inc", "ltd", "mr", "mrs", "dr", "vs", "etc",
];

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Segmenter {
    pub fn new<S: AsRef<str>>(abbreviations: impl IntoIterator<Item = S>) -> Self {
        let abbreviations = abbreviations
            .into_iter()
            .map(|a| a.as_ref().trim().trim_end_matches('.').to_lowercase())
            .filter(|a| !a.is_empty())
            .collect();
        Segmenter { abbreviations }
    }

    /// Loads one abbreviation per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    /// Byte spans of the sentences in `text`, in order.
    pub fn split(&self, text: &str) -> Vec<(usize, usize)> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;
        let mut i = 0;

        while i < chars.len() {
            let (pos, c) = chars[i];
            if start.is_none() && !c.is_whitespace() {
                start = Some(pos);
            }
            if !TERMINATORS.contains(&c) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < chars.len() && TERMINATORS.contains(&chars[j].1) {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let at_break = j == chars.len() || chars[j].1.is_whitespace();
            let single_dot = c == '.' && (i + 1 == chars.len() || chars[i + 1].1 != '.');
            if at_break && !(single_dot && self.dot_is_guarded(text, &chars, i)) {
                if let Some(s) = start.take() {
                    spans.push((s, byte_at(j)));
                }
            }
            i = j;
        }
        if let Some(s) = start {
            spans.push((s, text.trim_end().len()));
        }
        spans
    }

    fn dot_is_guarded(&self, text: &str, chars: &[(usize, char)], dot: usize) -> bool {
        let prev = dot.checked_sub(1).map(|k| chars[k].1);
        let next = chars.get(dot + 1).map(|&(_, c)| c);
        if prev.is_some_and(|c| c.is_ascii_digit()) && next.is_some_and(|c| c.is_ascii_digit()) {
            return true;
        }

        // The word before the dot, allowing inner dots and hyphens ("т.е", "р-н").
        let mut k = dot;
        while k > 0 {
            let c = chars[k - 1].1;
            if super::tokenize::is_alnum(c) || c == '.' || c == '-' {
                k -= 1;
            } else {
                break;
            }
        }
        let word = &text[chars.get(k).map_or(text.len(), |p| p.0)..chars[dot].0];
        let word = word.trim_start_matches(['.', '-']);
        if word.is_empty() {
            return false;
        }
        let mut letters = word.chars();
        if let (Some(first), None) = (letters.next(), letters.next()) {
            if first.is_uppercase() {
                return true;
            }
        }
        let lower = super::lowercase(word);
        if self.abbreviations.contains(&lower) {
            return true;
        }
        // "и т.д." style: only the tail after the last inner dot may be listed.
        lower
            .rsplit_once('.')
            .is_some_and(|(_, tail)| self.abbreviations.contains(tail) && tail.chars().count() > 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(text: &str) -> Vec<&str> {
        Segmenter::default()
            .split(text)
            .into_iter()
            .map(|(s, e)| &text[s..e])
            .collect()
    }

    #[test]
    fn two_plain_sentences() {
        assert_eq!(split("Привет. Как дела?"), ["Привет.", "Как дела?"]);
    }

    #[test]
    fn abbreviation_and_decimal() {
        assert_eq!(split("Курс 10.5 руб. вырос."), ["Курс 10.5 руб. вырос."]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(split("").is_empty());
        assert!(split("   \n ").is_empty());
    }

    #[test]
    fn initials_do_not_split() {
        assert_eq!(
            split("Книгу написал А. С. Пушкин. Её читают."),
            ["Книгу написал А. С. Пушкин.", "Её читают."]
        );
    }

    #[test]
    fn closing_quote_attaches() {
        assert_eq!(
            split("Он сказал: «Мы победим!» Потом ушёл..."),
            ["Он сказал: «Мы победим!»", "Потом ушёл..."]
        );
    }

    #[test]
    fn trailing_text_without_terminator() {
        assert_eq!(split("Первое. второе без точки  "), ["Первое.", "второе без точки"]);
    }

    #[test]
    fn urls_are_not_split() {
        assert_eq!(split("См. сайт www.sber.ru сегодня."), ["См. сайт www.sber.ru сегодня."]);
    }
}
