//! Term extraction: raw bibliographic text to per-publication term sets.
//!
//! The builtin pipeline segments field text at punctuation, normalizes each
//! segment, tags tokens with a lexicon-backed part-of-speech tagger, chunks
//! maximal adjective/noun runs ending in a noun, and singularizes tokens.
//! Records carrying terms from an external tagger bypass all of that via
//! [`ExtractionMode::Pretagged`].

pub mod chunk;
pub mod lemma;
pub mod tagger;
pub mod term;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use chunk::chunk_noun_phrases;
pub use lemma::Lemmatizer;
pub use tagger::{tag_tokens, PosLexicon, PosTag, TaggedToken};
pub use term::{normalize, Term};

use crate::corpus::{FieldName, FieldSet, PublicationRecord};
use crate::error::{Error, Result};

const EMBEDDED_ADDRESS_STOPWORDS: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/address_stopwords.txt"));

/// How terms are obtained from a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// Segment, tag and chunk the raw field text.
    #[default]
    Builtin,
    /// Use the record's `pretagged_terms`, normalizing and singularizing only.
    Pretagged,
}

impl std::str::FromStr for ExtractionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<ExtractionMode> {
        match s {
            "builtin" => Ok(ExtractionMode::Builtin),
            "pretagged" => Ok(ExtractionMode::Pretagged),
            other => Err(Error::InvalidParameter(format!(
                "unknown extraction mode {other:?} (expected builtin or pretagged)"
            ))),
        }
    }
}

impl std::fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExtractionMode::Builtin => "builtin",
            ExtractionMode::Pretagged => "pretagged",
        })
    }
}

/// A set of terms to drop, matched by exact term equality.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    terms: BTreeSet<Term>,
}

impl StopList {
    pub fn empty() -> StopList {
        StopList::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> StopList {
        StopList {
            terms: terms.into_iter().collect(),
        }
    }

    /// The shipped address stop list (institutional words such as
    /// "department" that describe the organization, not the subject).
    pub fn embedded_address() -> &'static StopList {
        static EMBEDDED: OnceLock<StopList> = OnceLock::new();
        EMBEDDED
            .get_or_init(|| StopList::parse(EMBEDDED_ADDRESS_STOPWORDS, &Pipeline::default()))
    }

    /// Loads one term per line; `#` starts a comment. Entries pass through
    /// the pipeline's normalization so the list matches extracted terms.
    pub fn load(path: impl AsRef<Path>, pipeline: &Pipeline) -> Result<StopList> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(StopList::parse(&text, pipeline))
    }

    pub fn parse(text: &str, pipeline: &Pipeline) -> StopList {
        let terms = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| pipeline.term_from_raw(l))
            .collect();
        StopList { terms }
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Splits raw text into candidate segments. Alphanumerics, whitespace and
/// hyphens stay inside a segment (hyphens later normalize to spaces, so
/// hyphenated compounds survive as multi-token phrases); every other
/// character is a segment boundary.
fn segments(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(|c: char| !(c.is_alphanumeric() || c.is_whitespace() || c == '-'))
        .filter(|s| !s.trim().is_empty())
}

/// Tagger and singularizer bundled with the extraction logic.
#[derive(Debug, Clone)]
pub struct Pipeline {
    lexicon: PosLexicon,
    lemmatizer: Lemmatizer,
}

impl Default for Pipeline {
    fn default() -> Pipeline {
        Pipeline {
            lexicon: PosLexicon::embedded().clone(),
            lemmatizer: Lemmatizer::embedded().clone(),
        }
    }
}

impl Pipeline {
    pub fn new(lexicon: PosLexicon, lemmatizer: Lemmatizer) -> Pipeline {
        Pipeline { lexicon, lemmatizer }
    }

    pub fn lexicon(&self) -> &PosLexicon {
        &self.lexicon
    }

    pub fn lemmatizer(&self) -> &Lemmatizer {
        &self.lemmatizer
    }

    /// Normalizes and singularizes a phrase as one term, with no chunking.
    /// Returns `None` when nothing alphanumeric remains.
    pub fn term_from_raw(&self, raw: &str) -> Option<Term> {
        let norm = normalize(raw);
        if norm.is_empty() {
            return None;
        }
        let lemmas: Vec<String> = norm
            .split_whitespace()
            .map(|tok| self.lemmatizer.singularize(tok))
            .collect();
        Term::from_tokens(&lemmas)
    }

    /// Runs the full builtin pipeline over free text (titles, abstracts,
    /// journal names, addresses). May return duplicates.
    pub fn extract_from_text(&self, raw: &str) -> Vec<Term> {
        let mut terms = Vec::new();
        for seg in segments(raw) {
            let norm = normalize(seg);
            if norm.is_empty() {
                continue;
            }
            let tagged = tag_tokens(&norm, &self.lexicon);
            terms.extend(chunk_noun_phrases(&tagged, &self.lemmatizer));
        }
        terms
    }

    /// Keyword fields are author-chosen candidate phrases: a segment whose
    /// tokens are all adjectives or nouns is kept whole even when the
    /// chunker would trim it (pure-adjective keywords stay terms). Segments
    /// with verbal or function tokens contribute chunker output only.
    pub fn extract_from_keyword(&self, raw: &str) -> Vec<Term> {
        let mut terms = Vec::new();
        for seg in segments(raw) {
            let norm = normalize(seg);
            if norm.is_empty() {
                continue;
            }
            let tagged = tag_tokens(&norm, &self.lexicon);
            if tagged.iter().all(|t| t.tag.chunkable()) {
                let lemmas: Vec<String> = tagged
                    .iter()
                    .map(|t| self.lemmatizer.singularize(&t.text))
                    .collect();
                terms.push(Term::from_tokens(&lemmas).expect("keyword tokens form a term"));
            }
            terms.extend(chunk_noun_phrases(&tagged, &self.lemmatizer));
        }
        terms
    }

    /// Whether a label reads as one noun phrase: a single segment whose
    /// chunk covers every token. Used to filter class labels on request.
    pub fn is_single_noun_phrase(&self, label: &str) -> bool {
        let mut segs = segments(label);
        let (Some(seg), None) = (segs.next(), segs.next()) else {
            return false;
        };
        let norm = normalize(seg);
        if norm.is_empty() {
            return false;
        }
        let tagged = tag_tokens(&norm, &self.lexicon);
        let chunks = chunk_noun_phrases(&tagged, &self.lemmatizer);
        chunks.len() == 1 && chunks[0].tokens().count() == tagged.len()
    }

    /// Extracts the record's deduplicated term set over the selected fields.
    /// Terms from address fields are dropped when listed in
    /// `address_stopwords`. In pretagged mode every selected field with
    /// content must carry a `pretagged_terms` entry.
    pub fn extract_terms(
        &self,
        record: &PublicationRecord,
        fields: &FieldSet,
        mode: ExtractionMode,
        address_stopwords: &StopList,
    ) -> Result<BTreeSet<Term>> {
        let mut out = BTreeSet::new();
        match mode {
            ExtractionMode::Builtin => {
                for (field, text) in record.field_view(fields) {
                    let terms = match field {
                        FieldName::Keywords => self.extract_from_keyword(text),
                        _ => self.extract_from_text(text),
                    };
                    insert_terms(&mut out, field, terms, address_stopwords);
                }
            }
            ExtractionMode::Pretagged => {
                let populated: BTreeSet<FieldName> = record
                    .field_view(fields)
                    .into_iter()
                    .map(|(field, _)| field)
                    .collect();
                let empty = HashMap::new();
                let pretagged = record.pretagged_terms.as_ref().unwrap_or(&empty);
                for field in populated {
                    let phrases =
                        pretagged.get(&field).ok_or_else(|| Error::MissingPretagged {
                            id: record.id.clone(),
                            field: field.as_str(),
                        })?;
                    let terms = phrases.iter().filter_map(|p| self.term_from_raw(p));
                    insert_terms(&mut out, field, terms, address_stopwords);
                }
            }
        }
        Ok(out)
    }
}

fn insert_terms(
    out: &mut BTreeSet<Term>,
    field: FieldName,
    terms: impl IntoIterator<Item = Term>,
    address_stopwords: &StopList,
) {
    let filtered = field == FieldName::Addresses;
    for term in terms {
        if filtered && address_stopwords.contains(&term) {
            continue;
        }
        out.insert(term);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_record() -> PublicationRecord {
        let path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/data/sample_publication.jsonl"
        );
        let text = std::fs::read_to_string(path).expect("sample fixture");
        serde_json::from_str(text.lines().next().expect("one record")).expect("valid record")
    }

    fn extract(record: &PublicationRecord, fields: &str, mode: ExtractionMode) -> BTreeSet<String> {
        let pipeline = Pipeline::default();
        let fields: FieldSet = fields.parse().unwrap();
        pipeline
            .extract_terms(record, &fields, mode, StopList::embedded_address())
            .unwrap()
            .into_iter()
            .map(|t| t.as_str().to_string())
            .collect()
    }

    fn set(terms: &[&str]) -> BTreeSet<String> {
        terms.iter().map(|s| s.to_string()).collect()
    }

    const SAMPLE_TITLE_TERMS: [&str; 3] = [
        "preparation",
        "compositional gradient polymeric film",
        "gradient mesh template",
    ];
    const SAMPLE_KEYWORD_TERMS: [&str; 6] = [
        "compositional gradient",
        "method",
        "gradient mesh template",
        "hydrophobic",
        "hydrophilic",
        "water vapor permeability",
    ];
    const SAMPLE_ADDRESS_TERMS: [&str; 7] = [
        "science",
        "molecular engineering",
        "shandong provincial key",
        "pharmaceutical engineering",
        "chemistry",
        "materials science",
        "chemical chemical engineering",
    ];

    #[test]
    fn sample_title_and_keywords() {
        let record = sample_record();
        let mut expected = set(&SAMPLE_TITLE_TERMS);
        expected.extend(set(&SAMPLE_KEYWORD_TERMS));
        // "gradient mesh template" occurs in both fields and counts once.
        assert_eq!(expected.len(), 8);
        assert_eq!(extract(&record, "title,keywords", ExtractionMode::Builtin), expected);
    }

    #[test]
    fn sample_addresses_with_custom_stoplist() {
        let record = sample_record();
        let pipeline = Pipeline::default();
        let stop = StopList::parse("technology", &pipeline);
        let fields: FieldSet = "addresses".parse().unwrap();
        let got: BTreeSet<String> = pipeline
            .extract_terms(&record, &fields, ExtractionMode::Builtin, &stop)
            .unwrap()
            .into_iter()
            .map(|t| t.as_str().to_string())
            .collect();
        assert_eq!(got, set(&SAMPLE_ADDRESS_TERMS));
    }

    #[test]
    fn sample_all_fields_both_modes() {
        let record = sample_record();
        let mut expected = set(&SAMPLE_TITLE_TERMS);
        expected.extend(set(&SAMPLE_KEYWORD_TERMS));
        expected.extend(set(&SAMPLE_ADDRESS_TERMS));
        expected.insert("polymer".to_string());
        // 17 field-level rows, one term shared by title and keywords.
        assert_eq!(expected.len(), 16);
        let fields = "title,keywords,journal,addresses";
        assert_eq!(extract(&record, fields, ExtractionMode::Builtin), expected);
        assert_eq!(extract(&record, fields, ExtractionMode::Pretagged), expected);
    }

    #[test]
    fn terms_are_unions_over_fields() {
        let record = sample_record();
        let names = ["title", "keywords", "abstract", "journal", "addresses"];
        let singles: Vec<BTreeSet<String>> = names
            .iter()
            .map(|f| extract(&record, f, ExtractionMode::Builtin))
            .collect();
        for mask in 1u32..(1 << names.len()) {
            let combo: Vec<&str> = names
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| *f)
                .collect();
            let mut expected = BTreeSet::new();
            for (i, terms) in singles.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    expected.extend(terms.iter().cloned());
                }
            }
            let got = extract(&record, &combo.join(","), ExtractionMode::Builtin);
            assert_eq!(got, expected, "fields {combo:?}");
        }
    }

    #[test]
    fn repeated_occurrences_count_once() {
        let pipeline = Pipeline::default();
        let once: BTreeSet<Term> = pipeline.extract_from_text("the polymer film").into_iter().collect();
        let many: BTreeSet<Term> = pipeline
            .extract_from_text("the polymer film. the polymer film. the polymer film")
            .into_iter()
            .collect();
        assert_eq!(once, many);
        assert_eq!(once.len(), 1);
    }

    #[test]
    fn keyword_segments_kept_whole_only_when_all_chunkable() {
        let pipeline = Pipeline::default();
        let terms = |raw: &str| -> BTreeSet<String> {
            pipeline
                .extract_from_keyword(raw)
                .into_iter()
                .map(|t| t.as_str().to_string())
                .collect()
        };
        // Verbal token: only the chunker survives.
        assert_eq!(terms("filling method"), set(&["method"]));
        // Pure adjectives are kept whole despite having no noun.
        assert_eq!(terms("hydrophilic/hydrophobic"), set(&["hydrophilic", "hydrophobic"]));
        // Adjective+noun keywords equal their chunk.
        assert_eq!(terms("compositional gradient"), set(&["compositional gradient"]));
    }

    #[test]
    fn hyphenated_names_become_spaced_terms() {
        let pipeline = Pipeline::default();
        let terms = pipeline.extract_from_text("Klippel-Trenaunay-Weber Syndrome");
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].as_str(), "klippel trenaunay weber syndrome");
    }

    #[test]
    fn pretagged_missing_entry_is_an_error() {
        let mut record = sample_record();
        record.pretagged_terms = None;
        let pipeline = Pipeline::default();
        let fields: FieldSet = "title".parse().unwrap();
        let err = pipeline
            .extract_terms(&record, &fields, ExtractionMode::Pretagged, &StopList::empty())
            .unwrap_err();
        assert!(matches!(err, Error::MissingPretagged { field: "title", .. }), "{err}");
    }

    #[test]
    fn pretagged_entry_not_required_for_absent_field() {
        let mut record = sample_record();
        record.pretagged_terms = None;
        record.abstract_text = None;
        let pipeline = Pipeline::default();
        let fields: FieldSet = "abstract".parse().unwrap();
        let got = pipeline
            .extract_terms(&record, &fields, ExtractionMode::Pretagged, &StopList::empty())
            .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn single_noun_phrase_labels() {
        let pipeline = Pipeline::default();
        assert!(pipeline.is_single_noun_phrase("materials science"));
        assert!(pipeline.is_single_noun_phrase("Chemistry"));
        assert!(pipeline.is_single_noun_phrase("klippel trenaunay weber syndrome"));
        // Function word inside.
        assert!(!pipeline.is_single_noun_phrase("physics of fluids"));
        // Punctuation splits segments.
        assert!(!pipeline.is_single_noun_phrase("science & technology studies"));
        // No terminal noun.
        assert!(!pipeline.is_single_noun_phrase("hydrophilic"));
        assert!(!pipeline.is_single_noun_phrase(""));
    }

    #[test]
    fn stoplist_parsing_skips_comments_and_normalizes() {
        let pipeline = Pipeline::default();
        let stop = StopList::parse("# institutional words\nDepartment\n\ntechnologies\n", &pipeline);
        assert_eq!(stop.len(), 2);
        assert!(stop.contains(&Term::new("department").unwrap()));
        assert!(stop.contains(&Term::new("technology").unwrap()));
    }

    /// Independent restatement of the chunking rule used to cross-check the
    /// implementation on arbitrary tag sequences.
    fn reference_chunks(tokens: &[TaggedToken]) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 0..=tokens.len() {
            let boundary = i == tokens.len() || !tokens[i].tag.chunkable();
            if boundary {
                let run = &tokens[start..i];
                let last_noun = run.iter().rposition(|t| t.tag == PosTag::Noun);
                if let Some(end) = last_noun {
                    out.push(run[..=end].iter().map(|t| t.text.clone()).collect());
                }
                start = i + 1;
            }
        }
        out
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in any::<String>()) {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn extracted_terms_satisfy_term_invariants(s in any::<String>()) {
            let pipeline = Pipeline::default();
            for term in pipeline.extract_from_text(&s) {
                prop_assert!(Term::new(term.as_str()).is_some(), "bad term {:?}", term);
            }
        }

        #[test]
        fn chunks_match_reference_on_random_tag_sequences(
            tokens in proptest::collection::vec(
                ("[a-z]{2,6}", prop::sample::select(vec![PosTag::Noun, PosTag::Adjective, PosTag::Other])),
                0..20,
            )
        ) {
            let tagged: Vec<TaggedToken> = tokens
                .iter()
                .map(|(text, tag)| TaggedToken { text: text.clone(), tag: *tag })
                .collect();
            let got: Vec<Vec<String>> = chunk_noun_phrases(&tagged, Lemmatizer::embedded())
                .iter()
                .map(|t| t.tokens().map(str::to_string).collect())
                .collect();
            let expected: Vec<Vec<String>> = reference_chunks(&tagged)
                .into_iter()
                .map(|chunk| {
                    chunk
                        .into_iter()
                        .map(|tok| Lemmatizer::embedded().singularize(&tok))
                        .collect()
                })
                .collect();
            prop_assert_eq!(got, expected);
        }
    }
}
