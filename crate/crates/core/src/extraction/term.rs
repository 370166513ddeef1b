//! Normalized terms and text normalization.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Maps every non-alphanumeric character to a space, lowercases, collapses
/// whitespace runs and trims. Mapping to space rather than deleting keeps
/// slash- and hyphen-joined words apart ("hydrophilic/hydrophobic" becomes
/// two tokens, not one).
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut gap = false;
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                if lc.is_uppercase() {
                    // Letters with no lowercase form (math alphabets and
                    // the like) would violate the term invariants; treat
                    // them as separators.
                    gap = true;
                } else if lc.is_alphanumeric() {
                    // Lowercasing can also emit combining marks; those are
                    // dropped without a gap so the host word stays whole.
                    if gap && !out.is_empty() {
                        out.push(' ');
                    }
                    gap = false;
                    out.push(lc);
                }
            }
        } else {
            gap = true;
        }
    }
    out
}

/// A normalized term: non-empty, lowercase alphanumeric tokens joined by
/// single spaces, each token in singular form.
///
/// Terms are only constructed by the extraction pipeline (which also
/// lemmatizes) or by [`Term::new`] from input that is already in final form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term(String);

impl Term {
    /// Validates shape (lowercase alphanumeric tokens, single spaces).
    /// Returns `None` for anything else, including the empty string.
    pub fn new(s: impl Into<String>) -> Option<Term> {
        let s = s.into();
        if s.is_empty() || s.starts_with(' ') || s.ends_with(' ') {
            return None;
        }
        let mut prev_space = false;
        for ch in s.chars() {
            if ch == ' ' {
                if prev_space {
                    return None;
                }
                prev_space = true;
            } else if ch.is_alphanumeric() && !ch.is_uppercase() {
                prev_space = false;
            } else {
                return None;
            }
        }
        Some(Term(s))
    }

    /// Joins already-normalized, already-lemmatized tokens.
    pub(crate) fn from_tokens<I>(tokens: I) -> Option<Term>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut s = String::new();
        for tok in tokens {
            if !s.is_empty() {
                s.push(' ');
            }
            s.push_str(tok.as_ref());
        }
        Term::new(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ')
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for Term {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Term::new(s).ok_or_else(|| serde::de::Error::custom("not a normalized term"))
    }
}
