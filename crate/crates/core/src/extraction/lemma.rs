//! Rule-based singularization of English plural tokens.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const EMBEDDED_EXCEPTIONS: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/singular_exceptions.tsv"));

/// Singularizes one token at a time via an exception table plus suffix rules.
/// Tokens that are not plural nouns pass through unchanged; the caller is
/// expected to feed lowercase alphanumeric tokens.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    /// The shipped exception table.
    pub fn embedded() -> &'static Lemmatizer {
        static EMBEDDED: OnceLock<Lemmatizer> = OnceLock::new();
        EMBEDDED.get_or_init(|| Lemmatizer::parse(EMBEDDED_EXCEPTIONS).expect("embedded exception table"))
    }

    /// Loads `plural<TAB>singular` lines; `#` starts a comment.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Lemmatizer> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Lemmatizer::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Lemmatizer> {
        let mut exceptions = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (plural, singular) = line.split_once('\t').ok_or_else(|| Error::Lexicon {
                line: i as u64 + 1,
                message: "expected plural<TAB>singular".to_string(),
            })?;
            exceptions.insert(plural.trim().to_string(), singular.trim().to_string());
        }
        Ok(Lemmatizer { exceptions })
    }

    pub fn singularize(&self, token: &str) -> String {
        if let Some(singular) = self.exceptions.get(token) {
            return singular.clone();
        }
        let n = token.chars().count();
        if n <= 2 || !token.ends_with('s') {
            return token.to_string();
        }
        // Endings that are typically not plural markers.
        if token.ends_with("ics") || token.ends_with("ss") || token.ends_with("us") || token.ends_with("is") {
            return token.to_string();
        }
        if token.ends_with("ies") && n >= 5 {
            return format!("{}y", &token[..token.len() - 3]);
        }
        for cluster in ["sses", "ches", "shes", "xes", "zzes", "oes"] {
            if token.ends_with(cluster) {
                return token[..token.len() - 2].to_string();
            }
        }
        token[..token.len() - 1].to_string()
    }
}
