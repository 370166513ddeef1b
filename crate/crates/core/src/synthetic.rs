//! Deterministic synthetic corpus/hierarchy generator for self-contained
//! testing and benchmarking.
//!
//! The generator builds a class tree of the requested depth, attaches
//! publications to every class, and *plants* each class's gold label into
//! its publications: a publication assigned to class `c` carries the
//! label of each ancestor-or-self of `c` with probability `plant_rate`,
//! plus a small `background_rate` of other classes' labels as noise, plus
//! random filler vocabulary. Because members roll up, a class's label
//! ends up frequent and specific inside the class and rare outside it —
//! exactly the signal the weighting approaches are supposed to find.
//!
//! Field placement is controlled by [`FieldProfile`]:
//!
//! * `Uniform` — every planted label goes into the title; a class's own
//!   label also goes into the keywords.
//! * `Split` — labels of shallow classes (level ≤ 2) go into the journal
//!   name and an address line only; labels of deeper classes go into
//!   title and keywords only. This makes field-role experiments
//!   meaningful: shallow classes are only labelable from journal and
//!   address fields, deep classes only from title and keywords.
//!
//! All randomness comes from one seeded ChaCha8 stream drawn in a fixed
//! order, so equal seeds give byte-identical corpora.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, PublicationRecord};
use crate::error::{Error, Result};
use crate::extraction::Pipeline;
use crate::hierarchy::{build_hierarchy, ClassDecl, Hierarchy, HierarchyOptions};

/// Where planted labels land in the publication record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldProfile {
    #[default]
    Uniform,
    Split,
}

impl std::str::FromStr for FieldProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(FieldProfile::Uniform),
            "split" => Ok(FieldProfile::Split),
            other => Err(Error::InvalidParameter(format!(
                "unknown field profile {other:?} (expected uniform or split)"
            ))),
        }
    }
}

/// Generator knobs.
#[derive(Debug, Clone)]
pub struct SyntheticParams {
    /// Total classes including the root.
    pub n_classes: usize,
    /// Maximum tree depth (root is level 1); a chain guarantees the
    /// depth is reached, remaining classes attach at random.
    pub depth: u32,
    /// Direct publications per class.
    pub pubs_per_class: usize,
    /// Filler vocabulary size.
    pub vocab_size: usize,
    /// Probability that an ancestor-or-self label is planted.
    pub plant_rate: f64,
    /// Probability that one random other class's label is added as noise.
    pub background_rate: f64,
    pub field_profile: FieldProfile,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_classes: 50,
            depth: 3,
            pubs_per_class: 100,
            vocab_size: 2000,
            plant_rate: 0.8,
            background_rate: 0.01,
            field_profile: FieldProfile::Uniform,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.pubs_per_class == 0 || self.vocab_size == 0 {
            return Err(Error::InvalidParameter(
                "synthetic sizes must be positive".to_string(),
            ));
        }
        if self.depth == 0 || (self.n_classes as u64) < u64::from(self.depth) {
            return Err(Error::InvalidParameter(format!(
                "depth {} needs at least that many classes, got {}",
                self.depth, self.n_classes
            )));
        }
        for (name, rate) in [
            ("plant_rate", self.plant_rate),
            ("background_rate", self.background_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Raw generated data, ready to build in memory or write to disk.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub records: Vec<PublicationRecord>,
    pub classes: Vec<ClassDecl>,
    pub assignments: Vec<(String, String)>,
}

/// Paths written by [`SyntheticData::write_files`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub corpus: PathBuf,
    pub classes: PathBuf,
    pub assignments: PathBuf,
}

impl SyntheticData {
    pub fn corpus(&self) -> Result<Corpus> {
        Corpus::from_records(self.records.iter().cloned())
    }

    /// Builds the hierarchy with rollup and no size filtering (every
    /// class is a target).
    pub fn hierarchy(&self, pipeline: &Pipeline) -> Result<Hierarchy> {
        let options = HierarchyOptions {
            min_class_size: 1,
            ..HierarchyOptions::default()
        };
        build_hierarchy(&self.classes, &self.assignments, &options, pipeline)
    }

    pub fn build(&self, pipeline: &Pipeline) -> Result<(Corpus, Hierarchy)> {
        Ok((self.corpus()?, self.hierarchy(pipeline)?))
    }

    /// Writes `corpus.jsonl`, `classes.jsonl`, and `assignments.csv`
    /// into `dir`.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
        let dir = dir.as_ref();
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source: std::io::Error| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;

        let corpus = dir.join("corpus.jsonl");
        let mut out = Vec::new();
        for record in &self.records {
            serde_json::to_writer(&mut out, record).expect("record serializes");
            out.push(b'\n');
        }
        std::fs::write(&corpus, &out).map_err(io_err(&corpus))?;

        let classes = dir.join("classes.jsonl");
        out.clear();
        for class in &self.classes {
            serde_json::to_writer(&mut out, class).expect("class serializes");
            out.push(b'\n');
        }
        std::fs::write(&classes, &out).map_err(io_err(&classes))?;

        let assignments = dir.join("assignments.csv");
        out.clear();
        writeln!(out, "publication_id,class_id").expect("vec write");
        for (pub_id, class_id) in &self.assignments {
            writeln!(out, "{pub_id},{class_id}").expect("vec write");
        }
        std::fs::write(&assignments, &out).map_err(io_err(&assignments))?;

        Ok(SyntheticFiles {
            corpus,
            classes,
            assignments,
        })
    }
}

fn class_id(i: usize) -> String {
    format!("c{i:04}")
}

fn class_label(i: usize) -> String {
    format!("label{i:04}")
}

/// Generates a corpus and hierarchy from a seed. Equal seeds and
/// parameters give identical output.
pub fn generate(seed: u64, params: &SyntheticParams) -> Result<SyntheticData> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_classes;

    // Tree shape: c0 is the root; the first `depth − 1` classes form a
    // chain so the full depth exists; the rest attach to a uniformly
    // random class that still has room below the depth limit.
    let mut parents: Vec<Option<usize>> = vec![None; n];
    let mut levels: Vec<u32> = vec![1; n];
    for i in 1..n {
        let parent = if (i as u64) < u64::from(params.depth) {
            i - 1
        } else {
            let eligible: Vec<usize> = (0..i).filter(|&c| levels[c] < params.depth).collect();
            eligible[rng.random_range(0..eligible.len())]
        };
        parents[i] = Some(parent);
        levels[i] = levels[parent] + 1;
    }
    let classes: Vec<ClassDecl> = (0..n)
        .map(|i| ClassDecl {
            class_id: class_id(i),
            parent_id: parents[i].map(class_id),
            labels: vec![class_label(i)],
        })
        .collect();

    // Ancestor-or-self chains, root first, fixed order.
    let chains: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut chain = vec![i];
            let mut cur = i;
            while let Some(p) = parents[cur] {
                chain.push(p);
                cur = p;
            }
            chain.reverse();
            chain
        })
        .collect();

    let mut records = Vec::with_capacity(n * params.pubs_per_class);
    let mut assignments = Vec::with_capacity(n * params.pubs_per_class);
    let mut pub_no = 0usize;
    for (i, chain) in chains.iter().enumerate() {
        for _ in 0..params.pubs_per_class {
            let id = format!("s{pub_no:06}");
            pub_no += 1;
            let mut title_segments: Vec<String> = Vec::new();
            let mut keywords: Vec<String> = Vec::new();
            let mut journal_labels: Vec<String> = Vec::new();
            let mut addresses: Vec<String> = Vec::new();

            for &a in chain {
                if !rng.random_bool(params.plant_rate) {
                    continue;
                }
                let label = class_label(a);
                let shallow = levels[a] <= 2;
                match params.field_profile {
                    FieldProfile::Uniform => {
                        title_segments.push(label.clone());
                        if a == i {
                            keywords.push(label);
                        }
                    }
                    FieldProfile::Split if shallow => {
                        journal_labels.push(label.clone());
                        addresses.push(format!("Department of {label}"));
                    }
                    FieldProfile::Split => {
                        title_segments.push(label.clone());
                        if a == i {
                            keywords.push(label);
                        }
                    }
                }
            }
            if params.background_rate > 0.0 && rng.random_bool(params.background_rate) {
                let j = rng.random_range(0..n);
                if j != i {
                    title_segments.push(class_label(j));
                }
            }
            for _ in 0..3 {
                let f = rng.random_range(0..params.vocab_size);
                title_segments.push(format!("filler{f:05}"));
            }

            let journal = if journal_labels.is_empty() {
                None
            } else {
                Some(format!("Journal of {}", journal_labels.join("; ")))
            };
            records.push(PublicationRecord {
                id: id.clone(),
                title: title_segments.join("; "),
                abstract_text: None,
                keywords,
                journal,
                addresses,
                pretagged_terms: None,
            });
            assignments.push((id, class_id(i)));
        }
    }

    Ok(SyntheticData {
        records,
        classes,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{evaluate, EvalOptions};
    use crate::extraction::{ExtractionMode, StopList};
    use crate::index::TermIndex;
    use crate::labeling::SpecByLevel;
    use crate::weighting::WeightingSpec;

    fn small_params() -> SyntheticParams {
        SyntheticParams {
            n_classes: 8,
            depth: 3,
            pubs_per_class: 10,
            vocab_size: 100,
            plant_rate: 1.0,
            background_rate: 0.0,
            field_profile: FieldProfile::Uniform,
        }
    }

    fn serialize(data: &SyntheticData) -> String {
        let mut s = String::new();
        for r in &data.records {
            s.push_str(&serde_json::to_string(r).unwrap());
            s.push('\n');
        }
        for c in &data.classes {
            s.push_str(&serde_json::to_string(c).unwrap());
            s.push('\n');
        }
        for (p, c) in &data.assignments {
            s.push_str(p);
            s.push(',');
            s.push_str(c);
            s.push('\n');
        }
        s
    }

    #[test]
    fn equal_seeds_generate_identical_data() {
        let params = SyntheticParams {
            plant_rate: 0.7,
            background_rate: 0.05,
            ..small_params()
        };
        let a = generate(42, &params).unwrap();
        let b = generate(42, &params).unwrap();
        assert_eq!(serialize(&a), serialize(&b));
        let c = generate(43, &params).unwrap();
        assert_ne!(serialize(&a), serialize(&c));
    }

    #[test]
    fn tree_reaches_the_requested_depth_and_no_further() {
        let data = generate(7, &small_params()).unwrap();
        let hierarchy = data.hierarchy(&Pipeline::default()).unwrap();
        let max_level = hierarchy.nodes().map(|n| n.level).max().unwrap();
        assert_eq!(max_level, 3);
        assert_eq!(hierarchy.roots().len(), 1);
        assert_eq!(hierarchy.len(), 8);
        // Every class keeps its declared gold label.
        for node in hierarchy.nodes() {
            assert_eq!(node.labels.len(), 1);
        }
    }

    #[test]
    fn full_plant_rate_without_noise_is_perfectly_labelable() {
        let data = generate(11, &small_params()).unwrap();
        let (corpus, hierarchy) = data.build(&Pipeline::default()).unwrap();
        let index = TermIndex::build(
            &corpus,
            &hierarchy,
            &"title,keywords".parse().unwrap(),
            ExtractionMode::Builtin,
            &Pipeline::default(),
            &StopList::empty(),
            3,
        )
        .unwrap();
        for spec in [
            WeightingSpec::ChiSquare,
            WeightingSpec::Jsd,
            WeightingSpec::Jsdq,
            WeightingSpec::TfIdf,
            WeightingSpec::Wve { m: 25.0 },
            WeightingSpec::Tfs { alpha: 0.5 },
        ] {
            let report = evaluate(
                &hierarchy,
                &index,
                &SpecByLevel::uniform(spec),
                3,
                &EvalOptions::default(),
            )
            .unwrap();
            assert_eq!(report.match_rate, 1.0, "{spec}");
            assert_eq!(report.max_possible, 1.0, "{spec}");
            assert_eq!(report.n_total, 7, "{spec}");
        }
    }

    #[test]
    fn zero_plant_rate_means_nothing_is_extractable() {
        let params = SyntheticParams {
            plant_rate: 0.0,
            vocab_size: 20,
            ..small_params()
        };
        let data = generate(5, &params).unwrap();
        let (corpus, hierarchy) = data.build(&Pipeline::default()).unwrap();
        let index = TermIndex::build(
            &corpus,
            &hierarchy,
            &"title,keywords".parse().unwrap(),
            ExtractionMode::Builtin,
            &Pipeline::default(),
            &StopList::empty(),
            3,
        )
        .unwrap();
        let report = evaluate(
            &hierarchy,
            &index,
            &SpecByLevel::uniform(WeightingSpec::Tfs { alpha: 0.5 }),
            3,
            &EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(report.max_possible, 0.0);
        assert_eq!(report.match_rate, 0.0);
    }

    #[test]
    fn split_profile_places_shallow_labels_in_journal_and_addresses() {
        let params = SyntheticParams {
            field_profile: FieldProfile::Split,
            ..small_params()
        };
        let data = generate(3, &params).unwrap();
        let mut saw_journal = false;
        for record in &data.records {
            // Shallow labels never appear in titles or keywords.
            assert!(!record.title.contains("label0000"));
            assert!(!record.title.contains("label0001"));
            if let Some(journal) = &record.journal {
                saw_journal = true;
                assert!(journal.starts_with("Journal of label"));
            }
            for addr in &record.addresses {
                assert!(addr.starts_with("Department of label"));
            }
        }
        assert!(saw_journal);
        // Uniform profile produces no journal or address entries at all.
        let uniform = generate(3, &small_params()).unwrap();
        assert!(uniform
            .records
            .iter()
            .all(|r| r.journal.is_none() && r.addresses.is_empty()));
    }

    #[test]
    fn files_round_trip_through_the_loaders() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate(9, &small_params()).unwrap();
        let files = data.write_files(dir.path()).unwrap();
        let ingest =
            crate::corpus::ingest_corpus(&files.corpus, crate::corpus::CorpusFormat::Jsonl)
                .unwrap();
        assert_eq!(ingest.corpus.len(), data.records.len());
        assert!(ingest.rejected.is_empty(), "no row issues expected");
        let classes = crate::hierarchy::load_class_file(&files.classes).unwrap();
        assert_eq!(classes.len(), 8);
        let (assignments, issues) =
            crate::hierarchy::load_assignment_file(&files.assignments, &classes).unwrap();
        assert!(issues.is_empty());
        assert_eq!(assignments.len(), data.assignments.len());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut p = small_params();
        p.depth = 9;
        assert!(generate(1, &p).is_err());
        let mut p = small_params();
        p.plant_rate = 1.5;
        assert!(generate(1, &p).is_err());
        let mut p = small_params();
        p.n_classes = 0;
        assert!(generate(1, &p).is_err());
        assert!("split".parse::<FieldProfile>().is_ok());
        assert!("diagonal".parse::<FieldProfile>().is_err());
    }
}
