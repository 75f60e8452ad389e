use rustc_hash::FxHashSet as HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
    Quote,
    Url,
    UserMention,
    Special,
}

impl TokenKind {
    /// Word and number tokens are the unit used for word distances and lexicon matching.
    pub fn is_word(self) -> bool {
        matches!(self, TokenKind::Word | TokenKind::Number)
    }
}

/// A token with byte offsets into the text it was cut from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

pub const DEFAULT_QUOTE_GLYPHS: &[char] = &['«', '»', '„', '“', '”', '"', '‘', '’'];

const URL_PREFIXES: &[&str] = &["http://", "https://", "www."];
const EXTRA_PUNCTUATION: &str = "…—–‐‑‒―‚·•№§°";
const URL_TRAILING: &str = ".,;:!?)]}…";

#[derive(Debug, Clone)]
pub struct Tokenizer {
    quotes: HashSet<char>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(DEFAULT_QUOTE_GLYPHS.iter().copied())
    }
}

impl Tokenizer {
    pub fn new(quote_glyphs: impl IntoIterator<Item = char>) -> Self {
        Tokenizer {
            quotes: quote_glyphs.into_iter().collect(),
        }
    }

    pub fn is_quote(&self, c: char) -> bool {
        self.quotes.contains(&c)
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::with_capacity(text.len() / 6 + 1);
        let mut rest = text;
        let mut offset = 0;

        while let Some(c) = rest.chars().next() {
            let (len, kind) = if c.is_whitespace() {
                let len = c.len_utf8();
                offset += len;
                rest = &rest[len..];
                continue;
            } else if let Some(len) = self.url_len(rest) {
                (len, TokenKind::Url)
            } else if let Some(len) = mention_len(rest) {
                (len, TokenKind::UserMention)
            } else if is_alnum(c) {
                alnum_run(rest)
            } else if self.quotes.contains(&c) {
                (c.len_utf8(), TokenKind::Quote)
            } else if is_punctuation(c) {
                (c.len_utf8(), TokenKind::Punctuation)
            } else {
                (c.len_utf8(), TokenKind::Special)
            };
            tokens.push(Token {
                text: rest[..len].to_string(),
                start: offset,
                end: offset + len,
                kind,
            });
            offset += len;
            rest = &rest[len..];
        }
        tokens
    }

    fn url_len(&self, s: &str) -> Option<usize> {
        let prefix = URL_PREFIXES.iter().find(|p| {
            s.len() >= p.len()
                && s.is_char_boundary(p.len())
                && s[..p.len()].eq_ignore_ascii_case(p)
        })?;
        let mut end = s.find(char::is_whitespace).unwrap_or(s.len());
        while let Some(c) = s[..end].chars().next_back() {
            if URL_TRAILING.contains(c) || self.quotes.contains(&c) {
                end -= c.len_utf8();
            } else {
                break;
            }
        }
        (end > prefix.len()).then_some(end)
    }
}

fn mention_len(s: &str) -> Option<usize> {
    let body = s.strip_prefix('@')?;
    let len: usize = body
        .chars()
        .take_while(|&c| is_alnum(c) || c == '_')
        .map(char::len_utf8)
        .sum();
    (len > 0).then_some(len + 1)
}

/// A maximal letter/digit run. Pure digit runs may continue through `.` or `,`
/// when a digit follows, so `10.7` stays one number.
fn alnum_run(s: &str) -> (usize, TokenKind) {
    let len: usize = s
        .chars()
        .take_while(|&c| is_alnum(c))
        .map(char::len_utf8)
        .sum();
    if !s[..len].chars().all(char::is_numeric) {
        return (len, TokenKind::Word);
    }
    let mut end = len;
    loop {
        let mut chars = s[end..].chars();
        match (chars.next(), chars.next()) {
            (Some('.' | ','), Some(d)) if d.is_numeric() => {
                let run: usize = s[end + 1..]
                    .chars()
                    .take_while(|&c| is_alnum(c))
                    .map(char::len_utf8)
                    .sum();
                if !s[end + 1..end + 1 + run].chars().all(char::is_numeric) {
                    break;
                }
                end += 1 + run;
            }
            _ => break,
        }
    }
    (end, TokenKind::Number)
}

/// `char::is_alphanumeric` with a fast path for ASCII and basic Cyrillic.
pub(crate) fn is_alnum(c: char) -> bool {
    if c.is_ascii() {
        c.is_ascii_alphanumeric()
    } else if ('\u{0410}'..='\u{044F}').contains(&c) || c == 'ё' || c == 'Ё' {
        true
    } else {
        c.is_alphanumeric()
    }
}

/// `str::to_lowercase` with a fast path for ASCII and basic Cyrillic text.
pub(crate) fn lowercase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        let l = match c {
            'A'..='Z' | 'А'..='Я' => char::from_u32(c as u32 + 0x20).unwrap_or(c),
            'Ё' => 'ё',
            _ if c.is_ascii() || ('\u{0430}'..='\u{044F}').contains(&c) || c == 'ё' => c,
            _ => return s.to_lowercase(),
        };
        out.push(l);
    }
    out
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || EXTRA_PUNCTUATION.contains(c)
}

/// Convenience wrapper over the default tokenizer.
pub fn tokenize(text: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(text)
}
