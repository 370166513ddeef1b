//! The class × term publication-frequency index all scoring reads from.
//!
//! For every class (plus the virtual root) the index stores how many of the
//! class's publications contain each term. Counts are binary per
//! publication. Terms below the support threshold stay stored: candidacy is
//! a per-focal-class filter, while parent and reference statistics must
//! count every occurrence.
//!
//! Reference-collection statistics (parent minus class) are derived
//! arithmetically when rollup guarantees child ⊆ parent; with rollup off
//! they are counted explicitly and carried as separate rows.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, FieldSet};
use crate::error::{Error, Result};
use crate::extraction::{ExtractionMode, Pipeline, StopList, Term};
use crate::hierarchy::{ClassNode, Hierarchy, PubId, VIRTUAL_ROOT_ID};
use crate::weighting::ClassTermStats;

const MAGIC: &[u8; 6] = b"TXIDX1";
/// Reference rows serialize under this prefix; '\0' cannot open a class id.
const REF_PREFIX: &str = "\u{0}ref:";

pub type TermId = u32;

/// Handle to one class's rows inside a [`TermIndex`].
#[derive(Debug, Clone, Default)]
pub struct ClassData {
    class_size: u64,
    term_total: u64,
    /// (term, publication count), sorted by term string, counts ≥ 1.
    rows: Vec<(TermId, u32)>,
    /// Explicit reference-collection counts; `None` when rollup derives them.
    ref_rows: Option<Vec<(TermId, u32)>>,
    ref_size: u64,
    ref_total: u64,
}

impl ClassData {
    pub fn class_size(&self) -> u64 {
        self.class_size
    }

    pub fn term_total(&self) -> u64 {
        self.term_total
    }

    pub fn rows(&self) -> &[(TermId, u32)] {
        &self.rows
    }
}

/// Metadata pinning what the index was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexHeader {
    pub version: u32,
    pub fields: FieldSet,
    pub mode: ExtractionMode,
    pub support_threshold: u32,
    pub rollup: bool,
    /// Member count per class id (includes the virtual root under "").
    pub class_sizes: BTreeMap<String, u64>,
    /// Reference-collection sizes, present only when rollup is off.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ref_sizes: BTreeMap<String, u64>,
}

#[derive(Debug, Clone)]
pub struct TermIndex {
    header: IndexHeader,
    terms: Vec<Term>,
    classes: BTreeMap<String, ClassData>,
}

impl TermIndex {
    /// Extracts terms from every publication referenced by the hierarchy and
    /// counts publication frequencies per class. Fatal when hierarchy
    /// members are missing from the corpus.
    pub fn build(
        corpus: &Corpus,
        hierarchy: &Hierarchy,
        fields: &FieldSet,
        mode: ExtractionMode,
        pipeline: &Pipeline,
        address_stopwords: &StopList,
        support_threshold: u32,
    ) -> Result<TermIndex> {
        let pub_ids = hierarchy.pub_ids();
        let missing: Vec<&str> = pub_ids
            .iter()
            .map(String::as_str)
            .filter(|id| !corpus.contains(id))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingMembers {
                count: missing.len(),
                first: missing[0].to_string(),
            });
        }

        let extracted: Vec<std::collections::BTreeSet<Term>> = pub_ids
            .par_iter()
            .map(|id| {
                let record = corpus.get(id).expect("checked above");
                pipeline.extract_terms(record, fields, mode, address_stopwords)
            })
            .collect::<Result<_>>()?;

        struct Job<'h> {
            class_id: &'h str,
            members: &'h [PubId],
            reference: Option<Vec<PubId>>,
        }
        let mut jobs: Vec<Job> = Vec::with_capacity(hierarchy.len() + 1);
        jobs.push(Job {
            class_id: VIRTUAL_ROOT_ID,
            members: hierarchy.all_members(),
            reference: None,
        });
        for node in hierarchy.nodes() {
            // With rollup, reference counts are parent minus class row-wise;
            // without it the reference set must be counted on its own.
            let reference = if hierarchy.rollup() {
                None
            } else {
                hierarchy.reference_members(node)
            };
            jobs.push(Job {
                class_id: &node.class_id,
                members: &node.members,
                reference,
            });
        }

        let count_set = |members: &[PubId]| -> Vec<(Term, u32)> {
            let mut counts: HashMap<&Term, u32> = HashMap::new();
            for &p in members {
                for term in &extracted[p as usize] {
                    *counts.entry(term).or_insert(0) += 1;
                }
            }
            let mut pairs: Vec<(Term, u32)> =
                counts.into_iter().map(|(t, n)| (t.clone(), n)).collect();
            pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            pairs
        };

        struct Counted {
            class_id: String,
            size: u64,
            pairs: Vec<(Term, u32)>,
            ref_pairs: Option<(u64, Vec<(Term, u32)>)>,
        }
        let counted: Vec<Counted> = jobs
            .par_iter()
            .map(|job| Counted {
                class_id: job.class_id.to_string(),
                size: job.members.len() as u64,
                pairs: count_set(job.members),
                ref_pairs: job
                    .reference
                    .as_ref()
                    .map(|r| (r.len() as u64, count_set(r))),
            })
            .collect();

        // Deterministic interning: single sequential pass in sorted class
        // order (the jobs were created in sorted order after the root).
        let mut terms: Vec<Term> = Vec::new();
        let mut lookup: HashMap<Term, TermId> = HashMap::new();
        let mut intern = |term: &Term, terms: &mut Vec<Term>| -> TermId {
            match lookup.get(term) {
                Some(&id) => id,
                None => {
                    let id = terms.len() as TermId;
                    terms.push(term.clone());
                    lookup.insert(term.clone(), id);
                    id
                }
            }
        };
        let mut classes: BTreeMap<String, ClassData> = BTreeMap::new();
        let mut class_sizes = BTreeMap::new();
        let mut ref_sizes = BTreeMap::new();
        for counted_class in counted {
            let rows: Vec<(TermId, u32)> = counted_class
                .pairs
                .iter()
                .map(|(t, n)| (intern(t, &mut terms), *n))
                .collect();
            let term_total = rows.iter().map(|(_, n)| u64::from(*n)).sum();
            let mut data = ClassData {
                class_size: counted_class.size,
                term_total,
                rows,
                ref_rows: None,
                ref_size: 0,
                ref_total: 0,
            };
            if let Some((ref_size, ref_pairs)) = counted_class.ref_pairs {
                let ref_rows: Vec<(TermId, u32)> = ref_pairs
                    .iter()
                    .map(|(t, n)| (intern(t, &mut terms), *n))
                    .collect();
                data.ref_total = ref_rows.iter().map(|(_, n)| u64::from(*n)).sum();
                data.ref_size = ref_size;
                data.ref_rows = Some(ref_rows);
                ref_sizes.insert(counted_class.class_id.clone(), ref_size);
            }
            class_sizes.insert(counted_class.class_id.clone(), counted_class.size);
            classes.insert(counted_class.class_id, data);
        }

        Ok(TermIndex {
            header: IndexHeader {
                version: 1,
                fields: fields.clone(),
                mode,
                support_threshold,
                rollup: hierarchy.rollup(),
                class_sizes,
                ref_sizes,
            },
            terms,
            classes,
        })
    }

    pub fn header(&self) -> &IndexHeader {
        &self.header
    }

    pub fn support_threshold(&self) -> u32 {
        self.header.support_threshold
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Number of real classes (the virtual root row is excluded).
    pub fn class_count(&self) -> usize {
        self.classes.len().saturating_sub(1)
    }

    pub fn class_data(&self, class_id: &str) -> Result<&ClassData> {
        self.classes
            .get(class_id)
            .ok_or_else(|| Error::IndexMismatch(display_class_id(class_id)))
    }

    fn lookup_rows(&self, rows: &[(TermId, u32)], term: &str) -> u32 {
        rows.binary_search_by(|(tid, _)| self.term(*tid).as_str().cmp(term))
            .map(|i| rows[i].1)
            .unwrap_or(0)
    }

    /// Publications of the class containing the term (0 when unseen).
    pub fn tf(&self, class_id: &str, term: &str) -> Result<u32> {
        Ok(self.lookup_rows(&self.class_data(class_id)?.rows, term))
    }

    /// Frequency over the class's reference collection, alongside the
    /// reference size and term total. Only meaningful with rollup off;
    /// with rollup on, callers derive these from parent minus class.
    pub fn explicit_ref(&self, class_id: &str) -> Result<Option<RefView<'_>>> {
        let data = self.class_data(class_id)?;
        Ok(data.ref_rows.as_deref().map(|rows| RefView {
            index: self,
            rows,
            size: data.ref_size,
            total: data.ref_total,
        }))
    }

    /// Candidate terms of a class: stored terms at or above the support
    /// threshold, in term order.
    pub fn candidate_terms(&self, class_id: &str) -> Result<Vec<&Term>> {
        let data = self.class_data(class_id)?;
        let threshold = self.header.support_threshold;
        Ok(data
            .rows
            .iter()
            .filter(|(_, n)| *n >= threshold)
            .map(|(tid, _)| self.term(*tid))
            .collect())
    }

    /// Candidate rows as (term id, tf) pairs, in term order.
    pub fn candidate_rows(&self, class_id: &str) -> Result<Vec<(TermId, u32)>> {
        let data = self.class_data(class_id)?;
        let threshold = self.header.support_threshold;
        Ok(data
            .rows
            .iter()
            .filter(|(_, n)| *n >= threshold)
            .copied()
            .collect())
    }

    /// Serializes to the documented format: magic, one-line JSON header,
    /// then per-class blocks sorted by class id, rows sorted by term.
    /// Byte-exact for identical inputs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let header = serde_json::to_string(&self.header).expect("header serializes");
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());

        let mut blocks: BTreeMap<String, &[(TermId, u32)]> = BTreeMap::new();
        for (id, data) in &self.classes {
            blocks.insert(id.clone(), &data.rows);
            if let Some(ref_rows) = &data.ref_rows {
                blocks.insert(format!("{REF_PREFIX}{id}"), ref_rows);
            }
        }
        out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
        for (id, rows) in &blocks {
            write_str(&mut out, id);
            out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
            for (tid, count) in rows.iter() {
                write_str(&mut out, self.term(*tid).as_str());
                out.extend_from_slice(&count.to_le_bytes());
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes();
        let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        file.write_all(&bytes).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TermIndex> {
        let mut cursor = Cursor { bytes, pos: 0 };
        let magic = cursor.take(MAGIC.len())?;
        if magic != MAGIC {
            return Err(Error::IndexFormat("bad magic bytes".into()));
        }
        let header_len = cursor.u32()? as usize;
        let header_bytes = cursor.take(header_len)?;
        let header: IndexHeader = serde_json::from_slice(header_bytes)
            .map_err(|e| Error::IndexFormat(format!("header: {e}")))?;
        if header.version != 1 {
            return Err(Error::IndexFormat(format!(
                "unsupported version {}",
                header.version
            )));
        }

        let mut terms: Vec<Term> = Vec::new();
        let mut lookup: HashMap<Term, TermId> = HashMap::new();
        let mut classes: BTreeMap<String, ClassData> = BTreeMap::new();
        let block_count = cursor.u32()?;
        let mut read_rows = |cursor: &mut Cursor| -> Result<Vec<(TermId, u32)>> {
            let n = cursor.u32()? as usize;
            let mut rows = Vec::with_capacity(n);
            let mut prev: Option<&str> = None;
            for _ in 0..n {
                let term_str = cursor.str()?;
                if prev.is_some_and(|p| p >= term_str) {
                    return Err(Error::IndexFormat("rows not sorted by term".into()));
                }
                prev = Some(term_str);
                let count = cursor.u32()?;
                if count == 0 {
                    return Err(Error::IndexFormat("zero count row".into()));
                }
                let term = Term::new(term_str)
                    .ok_or_else(|| Error::IndexFormat(format!("invalid term {term_str:?}")))?;
                let tid = match lookup.get(&term) {
                    Some(&id) => id,
                    None => {
                        let id = terms.len() as TermId;
                        terms.push(term.clone());
                        lookup.insert(term, id);
                        id
                    }
                };
                rows.push((tid, count));
            }
            Ok(rows)
        };

        let mut ref_blocks: Vec<(String, Vec<(TermId, u32)>)> = Vec::new();
        for _ in 0..block_count {
            let id = cursor.str()?.to_string();
            let rows = read_rows(&mut cursor)?;
            if let Some(target) = id.strip_prefix(REF_PREFIX) {
                ref_blocks.push((target.to_string(), rows));
                continue;
            }
            let class_size = *header
                .class_sizes
                .get(&id)
                .ok_or_else(|| Error::IndexFormat(format!("no size for class {id:?}")))?;
            let term_total = rows.iter().map(|(_, n)| u64::from(*n)).sum();
            classes.insert(
                id,
                ClassData {
                    class_size,
                    term_total,
                    rows,
                    ref_rows: None,
                    ref_size: 0,
                    ref_total: 0,
                },
            );
        }
        if cursor.pos != bytes.len() {
            return Err(Error::IndexFormat("trailing bytes".into()));
        }
        for (id, rows) in ref_blocks {
            let ref_size = *header
                .ref_sizes
                .get(&id)
                .ok_or_else(|| Error::IndexFormat(format!("no reference size for {id:?}")))?;
            let data = classes
                .get_mut(&id)
                .ok_or_else(|| Error::IndexFormat(format!("reference rows for unknown {id:?}")))?;
            data.ref_total = rows.iter().map(|(_, n)| u64::from(*n)).sum();
            data.ref_size = ref_size;
            data.ref_rows = Some(rows);
        }
        if !classes.contains_key(VIRTUAL_ROOT_ID) {
            return Err(Error::IndexFormat("missing virtual root block".into()));
        }

        Ok(TermIndex {
            header,
            terms,
            classes,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<TermIndex> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
        TermIndex::from_bytes(&bytes)
    }

    /// Frequency lookup that tolerates absent classes by reporting the
    /// mismatch error, used by scoring to resolve parents.
    pub fn tf_by_id(&self, data: &ClassData, term_id: TermId) -> u32 {
        self.lookup_rows(&data.rows, self.term(term_id).as_str())
    }
}

/// Explicit reference-collection statistics for one class (rollup off).
pub struct RefView<'a> {
    index: &'a TermIndex,
    rows: &'a [(TermId, u32)],
    pub size: u64,
    pub total: u64,
}

impl RefView<'_> {
    pub fn tf(&self, term: &str) -> u32 {
        self.index.lookup_rows(self.rows, term)
    }
}

fn display_class_id(id: &str) -> String {
    if id == VIRTUAL_ROOT_ID {
        "<virtual root>".to_string()
    } else {
        id.to_string()
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::IndexFormat("truncated file".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn str(&mut self) -> Result<&'a str> {
        let len = self.u32()? as usize;
        let b = self.take(len)?;
        std::str::from_utf8(b).map_err(|_| Error::IndexFormat("non-utf8 string".into()))
    }
}

/// Resolves every candidate term of a class into the statistics bundle
/// the scoring formulas read, against the parent and reference
/// collections. Returns `None` when the class has no parent to compare
/// against (root with the virtual root disabled).
pub fn candidate_stats<'a>(
    index: &'a TermIndex,
    hierarchy: &Hierarchy,
    node: &ClassNode,
) -> Result<Option<Vec<(&'a Term, ClassTermStats)>>> {
    let Some(parent_id) = hierarchy.parent_id_of(node) else {
        return Ok(None);
    };
    let child = index.class_data(&node.class_id)?;
    let parent = index.class_data(parent_id)?;
    let explicit_ref = index.explicit_ref(&node.class_id)?;
    let threshold = index.support_threshold();

    let ref_total = match &explicit_ref {
        Some(view) => view.total,
        None => parent.term_total - child.term_total,
    };

    let mut out = Vec::new();
    for &(tid, tf_cj) in child.rows.iter().filter(|(_, n)| *n >= threshold) {
        let term = index.term(tid);
        let tf_cp = u64::from(index.tf_by_id(parent, tid));
        let tf_cref = match &explicit_ref {
            Some(view) => u64::from(view.tf(term.as_str())),
            None => tf_cp.saturating_sub(u64::from(tf_cj)),
        };
        out.push((
            term,
            ClassTermStats {
                tf_cj: u64::from(tf_cj),
                tf_cp,
                size_cj: child.class_size,
                size_cp: parent.class_size,
                tf_cref,
                totals_cj: child.term_total,
                totals_cref: ref_total,
            },
        ));
    }
    Ok(Some(out))
}
