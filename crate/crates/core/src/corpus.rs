//! Publication records and corpus ingestion.
//!
//! A corpus is an ordered list of [`PublicationRecord`]s with unique,
//! non-empty ids. Two input formats are supported: JSONL (one object per
//! line, the richer format, including optional pretagged terms) and CSV
//! (flat fields only, `;`-delimited lists inside cells). Malformed rows are
//! collected as per-row issues and ingestion continues; a file that yields
//! zero valid records is an error.

use std::collections::HashMap;
use std::collections::btree_set;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bibliographic fields a term can be extracted from, in fixed view order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldName {
    Title,
    Keywords,
    Abstract,
    Journal,
    Addresses,
}

impl FieldName {
    pub const ALL: [FieldName; 5] = [
        FieldName::Title,
        FieldName::Keywords,
        FieldName::Abstract,
        FieldName::Journal,
        FieldName::Addresses,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldName::Title => "title",
            FieldName::Keywords => "keywords",
            FieldName::Abstract => "abstract",
            FieldName::Journal => "journal",
            FieldName::Addresses => "addresses",
        }
    }
}

impl FromStr for FieldName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "title" => Ok(FieldName::Title),
            "keywords" => Ok(FieldName::Keywords),
            "abstract" => Ok(FieldName::Abstract),
            "journal" => Ok(FieldName::Journal),
            "addresses" => Ok(FieldName::Addresses),
            other => Err(Error::UnknownField(other.to_string())),
        }
    }
}

impl fmt::Display for FieldName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-empty set of fields, iterated in fixed field order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSet(std::collections::BTreeSet<FieldName>);

impl FieldSet {
    pub fn new<I: IntoIterator<Item = FieldName>>(fields: I) -> Result<Self> {
        let set: std::collections::BTreeSet<_> = fields.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyFieldSet);
        }
        Ok(FieldSet(set))
    }

    pub fn contains(&self, f: FieldName) -> bool {
        self.0.contains(&f)
    }

    pub fn iter(&self) -> btree_set::Iter<'_, FieldName> {
        self.0.iter()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|f| f.as_str()).collect()
    }
}

impl fmt::Display for FieldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for field in &self.0 {
            if !first {
                f.write_str("+")?;
            }
            first = false;
            f.write_str(field.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for FieldSet {
    type Err = Error;

    /// Parses `"title,keywords"` (also accepts `+` as separator).
    fn from_str(s: &str) -> Result<Self> {
        FieldSet::new(
            s.split([',', '+'])
                .filter(|p| !p.trim().is_empty())
                .map(FieldName::from_str)
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

impl Serialize for FieldSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for FieldSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let fields = Vec::<FieldName>::deserialize(deserializer)?;
        FieldSet::new(fields).map_err(serde::de::Error::custom)
    }
}

/// One publication. `id` is opaque and unique within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub journal: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub addresses: Vec<String>,
    /// Externally chunked phrases per field, for pretagged extraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretagged_terms: Option<HashMap<FieldName, Vec<String>>>,
}

impl PublicationRecord {
    /// Text units of the selected fields, in fixed field order
    /// (title, keywords, abstract, journal, addresses). List fields yield one
    /// pair per element; absent fields contribute nothing.
    pub fn field_view(&self, fields: &FieldSet) -> Vec<(FieldName, &str)> {
        let mut view = Vec::new();
        for &field in fields.iter() {
            match field {
                FieldName::Title => {
                    if !self.title.is_empty() {
                        view.push((field, self.title.as_str()));
                    }
                }
                FieldName::Keywords => {
                    view.extend(self.keywords.iter().map(|k| (field, k.as_str())));
                }
                FieldName::Abstract => {
                    if let Some(text) = self.abstract_text.as_deref() {
                        if !text.is_empty() {
                            view.push((field, text));
                        }
                    }
                }
                FieldName::Journal => {
                    if let Some(j) = self.journal.as_deref() {
                        if !j.is_empty() {
                            view.push((field, j));
                        }
                    }
                }
                FieldName::Addresses => {
                    view.extend(self.addresses.iter().map(|a| (field, a.as_str())));
                }
            }
        }
        view
    }
}

/// Ordered collection of unique publications.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<PublicationRecord>,
    by_id: HashMap<String, u32>,
}

impl Corpus {
    pub fn from_records<I: IntoIterator<Item = PublicationRecord>>(records: I) -> Result<Self> {
        let mut corpus = Corpus::default();
        for record in records {
            corpus.push(record).map_err(|message| Error::Row {
                path: "<memory>".into(),
                line: corpus.len() as u64 + 1,
                message,
            })?;
        }
        Ok(corpus)
    }

    fn push(&mut self, record: PublicationRecord) -> std::result::Result<(), String> {
        if record.id.is_empty() {
            return Err("empty publication id".to_string());
        }
        if self.by_id.contains_key(&record.id) {
            return Err(format!("duplicate publication id {}", record.id));
        }
        self.by_id.insert(record.id.clone(), self.records.len() as u32);
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&PublicationRecord> {
        self.by_id.get(id).map(|&i| &self.records[i as usize])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }
}

/// Input format of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown corpus format {other:?} (expected jsonl or csv)"
            ))),
        }
    }
}

/// A row that was rejected during ingestion, with its 1-based line number.
#[derive(Debug, Clone)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

/// Result of ingesting a corpus file: the valid records plus per-row issues.
#[derive(Debug)]
pub struct Ingest {
    pub corpus: Corpus,
    pub rejected: Vec<RowIssue>,
}

/// Reads a corpus file. Malformed rows, rows with a missing/empty id and
/// duplicate ids are rejected row by row; an unreadable file or a file with
/// zero valid records is fatal.
pub fn ingest_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Ingest> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let ingest = match format {
        CorpusFormat::Jsonl => ingest_jsonl(reader)?,
        CorpusFormat::Csv => ingest_csv(reader)?,
    };
    if ingest.corpus.is_empty() {
        return Err(Error::EmptyCorpus {
            path: path.to_path_buf(),
            rejected: ingest.rejected.len(),
        });
    }
    Ok(ingest)
}

fn ingest_jsonl<R: BufRead>(reader: R) -> Result<Ingest> {
    let mut corpus = Corpus::default();
    let mut rejected = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|source| Error::Io {
            path: "<stream>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PublicationRecord>(&line) {
            Ok(record) => {
                if let Err(message) = corpus.push(record) {
                    rejected.push(RowIssue { line: line_no, message });
                }
            }
            Err(e) => rejected.push(RowIssue {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok(Ingest { corpus, rejected })
}

/// CSV columns: `id,title,abstract,keywords,journal,addresses`, with `;`
/// separating elements inside the `keywords` and `addresses` cells.
fn ingest_csv<R: BufRead>(reader: R) -> Result<Ingest> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let mut corpus = Corpus::default();
    let mut rejected = Vec::new();
    for (i, row) in csv_reader.records().enumerate() {
        // Line 1 is the header.
        let line_no = i as u64 + 2;
        match row {
            Ok(row) => {
                let field = |idx: usize| row.get(idx).unwrap_or("").trim().to_string();
                let list = |idx: usize| {
                    row.get(idx)
                        .unwrap_or("")
                        .split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect::<Vec<_>>()
                };
                let opt = |idx: usize| {
                    let v = field(idx);
                    (!v.is_empty()).then_some(v)
                };
                let record = PublicationRecord {
                    id: field(0),
                    title: field(1),
                    abstract_text: opt(2),
                    keywords: list(3),
                    journal: opt(4),
                    addresses: list(5),
                    pretagged_terms: None,
                };
                if let Err(message) = corpus.push(record) {
                    rejected.push(RowIssue { line: line_no, message });
                }
            }
            Err(e) => rejected.push(RowIssue {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok(Ingest { corpus, rejected })
}
