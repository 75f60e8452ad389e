use serde::{Deserialize, Serialize};

use super::tokenize::{TokenKind, Tokenizer};

/// Replacement spellings used by [`normalize`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Replacements {
    pub url: String,
    pub user: String,
    pub number: String,
}

impl Default for Replacements {
    fn default() -> Self {
        Replacements {
            url: "URL".into(),
            user: "USER".into(),
            number: "NUM".into(),
        }
    }
}

/// Replaces URLs, user mentions and standalone numbers with placeholder
/// words, drops special symbols and control characters, and collapses
/// whitespace.
pub fn normalize(text: &str, tokenizer: &Tokenizer, map: &Replacements) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev_end = 0;
    let mut pending_space = false;

    for tok in tokenizer.tokenize(text) {
        if text[prev_end..tok.start].chars().any(char::is_whitespace) {
            pending_space = true;
        }
        prev_end = tok.end;
        let piece = match tok.kind {
            TokenKind::Special => {
                pending_space = true;
                continue;
            }
            TokenKind::Url => map.url.as_str(),
            TokenKind::UserMention => map.user.as_str(),
            TokenKind::Number => map.number.as_str(),
            _ => tok.text.as_str(),
        };
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push_str(piece);
    }
    out
}
