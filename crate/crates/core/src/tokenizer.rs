//! Identifier splitting.
//!
//! Identifiers are split on camelCase humps, on runs of uppercase letters
//! followed by a capitalized word (`HTTPServer` -> `http`, `server`), on
//! letter/digit transitions and on any non-alphanumeric character
//! (underscores, hyphens, whitespace, punctuation). Every token is lowercased.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("input {0:?} has no alphanumeric content")]
    EmptyInput(String),
    #[error("token {0:?} is empty")]
    EmptyToken(usize),
}

/// Ordered list of normalized subtokens together with the raw string they
/// came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
    source: String,
}

impl TokenSequence {
    /// Builds a sequence from already-split tokens. Tokens are lowercased;
    /// the source is their space-join.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TokenizeError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens: Vec<String> = tokens
            .into_iter()
            .map(|t| t.as_ref().to_lowercase())
            .collect();
        if let Some(pos) = tokens.iter().position(|t| t.is_empty()) {
            return Err(TokenizeError::EmptyToken(pos));
        }
        if tokens.is_empty() {
            return Err(TokenizeError::EmptyInput(String::new()));
        }
        let source = tokens.join(" ");
        Ok(Self { tokens, source })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.tokens.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
    Separator,
}

fn classify(c: char) -> CharClass {
    if c.is_numeric() {
        CharClass::Digit
    } else if c.is_uppercase() {
        CharClass::Upper
    } else if c.is_alphabetic() {
        // uncased scripts count as lowercase
        CharClass::Lower
    } else {
        CharClass::Separator
    }
}

/// Splits an identifier or short phrase into lowercase subtokens.
///
/// ```
/// use wrdscore::split_identifier;
/// let seq = split_identifier("calculateTotalAmount").unwrap();
/// assert_eq!(seq.tokens(), ["calculate", "total", "amount"]);
/// ```
pub fn split_identifier(name: &str) -> Result<TokenSequence, TokenizeError> {
    let chars: Vec<char> = name.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev = CharClass::Separator;

    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current));
        }
    };

    for (idx, &c) in chars.iter().enumerate() {
        let class = classify(c);
        match class {
            CharClass::Separator => flush(&mut current, &mut tokens),
            CharClass::Digit => {
                if prev != CharClass::Digit {
                    flush(&mut current, &mut tokens);
                }
            }
            CharClass::Upper => {
                let next_is_lower = chars
                    .get(idx + 1)
                    .is_some_and(|&n| classify(n) == CharClass::Lower);
                let boundary = match prev {
                    CharClass::Lower | CharClass::Digit => true,
                    CharClass::Upper => next_is_lower,
                    CharClass::Separator => false,
                };
                if boundary {
                    flush(&mut current, &mut tokens);
                }
            }
            CharClass::Lower => {
                if prev == CharClass::Digit {
                    flush(&mut current, &mut tokens);
                }
            }
        }
        if class != CharClass::Separator {
            current.extend(c.to_lowercase());
        }
        prev = class;
    }
    flush(&mut current, &mut tokens);

    if tokens.is_empty() {
        return Err(TokenizeError::EmptyInput(name.to_string()));
    }
    Ok(TokenSequence {
        tokens,
        source: name.to_string(),
    })
}
