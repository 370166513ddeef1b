//! Coarse part-of-speech tagging backed by a word lexicon.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const EMBEDDED_LEXICON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/pos_lexicon.tsv"));

/// The three tags the chunker distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosTag {
    Noun,
    Adjective,
    Other,
}

impl PosTag {
    fn parse(s: &str) -> Option<PosTag> {
        match s {
            "N" => Some(PosTag::Noun),
            "J" => Some(PosTag::Adjective),
            "O" => Some(PosTag::Other),
            _ => None,
        }
    }

    /// Noun or adjective: may appear inside a noun phrase.
    pub fn chunkable(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Adjective)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub text: String,
    pub tag: PosTag,
}

/// Suffixes that default an unknown token to adjective. Nouns with these
/// endings ("journal", "topic", "boundary", ...) are pinned in the lexicon.
const ADJECTIVE_SUFFIXES: [&str; 5] = ["al", "ic", "ous", "ive", "ary"];

/// Word-to-tag lexicon with fallback heuristics for unknown tokens:
/// all-digit and single-character tokens tag `Other`, `-ly` tokens tag
/// `Other` (adverbs), adjectival suffixes tag `Adjective`, and everything
/// else defaults to `Noun`, biasing extraction toward recall.
#[derive(Debug, Clone)]
pub struct PosLexicon {
    map: HashMap<String, PosTag>,
}

impl PosLexicon {
    /// The shipped lexicon.
    pub fn embedded() -> &'static PosLexicon {
        static EMBEDDED: OnceLock<PosLexicon> = OnceLock::new();
        EMBEDDED.get_or_init(|| PosLexicon::parse(EMBEDDED_LEXICON).expect("embedded lexicon"))
    }

    /// Loads `token<TAB>tag` lines with tag in {N, J, O}; `#` starts a comment.
    pub fn from_path(path: impl AsRef<Path>) -> Result<PosLexicon> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        PosLexicon::parse(&text)
    }

    pub fn parse(text: &str) -> Result<PosLexicon> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| Error::Lexicon {
                line: i as u64 + 1,
                message: message.to_string(),
            };
            let (token, tag) = line.split_once('\t').ok_or_else(|| err("expected token<TAB>tag"))?;
            let tag = PosTag::parse(tag.trim()).ok_or_else(|| err("tag must be N, J or O"))?;
            map.insert(token.trim().to_string(), tag);
        }
        Ok(PosLexicon { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn tag(&self, token: &str) -> PosTag {
        if let Some(&tag) = self.map.get(token) {
            return tag;
        }
        // Stray single characters (mostly possessive residue) and numbers.
        if token.chars().count() == 1 || token.chars().all(|c| c.is_ascii_digit()) {
            return PosTag::Other;
        }
        if token.ends_with("ly") {
            return PosTag::Other;
        }
        if ADJECTIVE_SUFFIXES.iter().any(|s| token.ends_with(s)) {
            return PosTag::Adjective;
        }
        PosTag::Noun
    }
}

/// Tags whitespace-separated tokens of normalized text.
pub fn tag_tokens(text: &str, lexicon: &PosLexicon) -> Vec<TaggedToken> {
    text.split_whitespace()
        .map(|tok| TaggedToken {
            text: tok.to_string(),
            tag: lexicon.tag(tok),
        })
        .collect()
}
