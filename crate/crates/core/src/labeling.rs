//! Top-N label selection for every target class of a hierarchy.
//!
//! Wraps the scoring module: each target class's candidate terms are
//! ranked, stop-listed terms are removed *before* truncation (so stop
//! words never consume label slots), and the top N survivors become the
//! class's labels. Classes are never silently dropped — classes below the
//! size threshold, without a parent collection, or without candidate
//! terms are reported alongside the results.
//!
//! Output writers produce a TSV of ranked rows and a JSON document of the
//! full results. Non-finite scores (the rollup-off specificity sentinel)
//! render as `inf` in TSV and `null` in JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extraction::StopList;
use crate::hierarchy::Hierarchy;
use crate::index::TermIndex;
use crate::weighting::{score_terms, ScoredTerm, WeightingSpec};

/// Status flags attached to a labeled class.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LabelFlags {
    /// No candidate terms survived (none reached the support threshold,
    /// or every survivor was stop-listed).
    pub unlabelable: bool,
    /// The class's reference collection contains no terms; divergence
    /// scores degrade to zero for it.
    pub degenerate_reference: bool,
}

/// Ranked labels for one class.
#[derive(Debug, Clone, Serialize)]
pub struct LabelResult {
    pub class_id: String,
    pub level: u32,
    /// At most N terms, in ranking order.
    pub ranked_terms: Vec<ScoredTerm>,
    pub spec_used: WeightingSpec,
    pub flags: LabelFlags,
}

/// Scoring approach per hierarchy level, with a fallback for levels
/// without an explicit entry.
#[derive(Debug, Clone, Default)]
pub struct SpecByLevel {
    pub default: WeightingSpec,
    pub by_level: BTreeMap<u32, WeightingSpec>,
}

impl SpecByLevel {
    pub fn uniform(spec: WeightingSpec) -> Self {
        SpecByLevel {
            default: spec,
            by_level: BTreeMap::new(),
        }
    }

    pub fn for_level(&self, level: u32) -> &WeightingSpec {
        self.by_level.get(&level).unwrap_or(&self.default)
    }

    pub fn validate(&self) -> Result<()> {
        self.default.validate()?;
        self.by_level.values().try_for_each(WeightingSpec::validate)
    }
}

/// Labels one class: rank, remove stop-listed terms, then keep the top N.
/// Returns `None` when the class has no parent collection to score
/// against (root class with the virtual root disabled).
pub fn label_class(
    class_id: &str,
    index: &TermIndex,
    hierarchy: &Hierarchy,
    spec: &WeightingSpec,
    n: usize,
    stoplist: &StopList,
) -> Result<Option<LabelResult>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "top-n must be at least 1".to_string(),
        ));
    }
    let Some(scored) = score_terms(class_id, index, hierarchy, spec)? else {
        return Ok(None);
    };
    let mut ranked: Vec<ScoredTerm> = scored
        .terms
        .into_iter()
        .filter(|t| !stoplist.contains(&t.term))
        .collect();
    ranked.truncate(n);
    let level = hierarchy.node(class_id)?.level;
    Ok(Some(LabelResult {
        class_id: class_id.to_string(),
        level,
        flags: LabelFlags {
            unlabelable: ranked.is_empty(),
            degenerate_reference: scored.degenerate_reference,
        },
        ranked_terms: ranked,
        spec_used: *spec,
    }))
}

/// Labels for a whole hierarchy, plus everything that was not labeled
/// and why.
#[derive(Debug, Clone, Serialize)]
pub struct HierarchyLabels {
    /// One entry per target class that could be scored (possibly with the
    /// `unlabelable` flag set), keyed by class id.
    pub results: BTreeMap<String, LabelResult>,
    /// Classes below the size threshold — they roll up into parents but
    /// are not labeled.
    pub skipped_small: Vec<String>,
    /// Root classes with no parent collection (virtual root disabled).
    pub skipped_unscoreable: Vec<String>,
}

impl HierarchyLabels {
    pub fn unlabelable_count(&self) -> usize {
        self.results
            .values()
            .filter(|r| r.flags.unlabelable)
            .count()
    }
}

/// Labels every target class in parallel with the level-appropriate
/// approach.
pub fn label_hierarchy(
    hierarchy: &Hierarchy,
    index: &TermIndex,
    specs: &SpecByLevel,
    n: usize,
    stoplist: &StopList,
) -> Result<HierarchyLabels> {
    specs.validate()?;
    let target_ids: Vec<&str> = hierarchy
        .target_classes()
        .map(|node| node.class_id.as_str())
        .collect();
    let labeled: Vec<(String, Option<LabelResult>)> = target_ids
        .par_iter()
        .map(|&id| {
            let level = hierarchy.node(id)?.level;
            let result = label_class(id, index, hierarchy, specs.for_level(level), n, stoplist)?;
            Ok((id.to_string(), result))
        })
        .collect::<Result<_>>()?;

    let mut results = BTreeMap::new();
    let mut skipped_unscoreable = Vec::new();
    for (id, result) in labeled {
        match result {
            Some(r) => {
                results.insert(id, r);
            }
            None => skipped_unscoreable.push(id),
        }
    }
    skipped_unscoreable.sort_unstable();
    let mut skipped_small: Vec<String> = hierarchy
        .nodes()
        .filter(|node| !hierarchy.is_target(node))
        .map(|node| node.class_id.clone())
        .collect();
    skipped_small.sort_unstable();
    Ok(HierarchyLabels {
        results,
        skipped_small,
        skipped_unscoreable,
    })
}

/// Formats a score for the TSV output: full-precision shortest roundtrip,
/// `inf` for the sentinel.
fn fmt_score(score: f64) -> String {
    if score == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{score}")
    }
}

/// Ranked rows as TSV: `class_id, level, rank, term, score`. Classes with
/// no labels contribute no rows (they are carried in the JSON output).
pub fn labels_tsv(labels: &HierarchyLabels) -> String {
    let mut out = String::from("class_id\tlevel\trank\tterm\tscore\n");
    for result in labels.results.values() {
        for (i, term) in result.ranked_terms.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                result.class_id,
                result.level,
                i + 1,
                term.term.as_str(),
                fmt_score(term.score)
            )
            .expect("string write");
        }
    }
    out
}

/// Full results as a JSON document (results array plus skip lists).
pub fn labels_json(labels: &HierarchyLabels) -> String {
    let mut json = serde_json::to_string_pretty(labels).expect("labels serialize");
    json.push('\n');
    json
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, PublicationRecord};
    use crate::extraction::{ExtractionMode, Pipeline, Term};
    use crate::hierarchy::{build_hierarchy, ClassDecl, HierarchyOptions};

    fn record(id: &str, title: &str) -> PublicationRecord {
        PublicationRecord {
            id: id.to_string(),
            title: title.to_string(),
            abstract_text: None,
            keywords: Vec::new(),
            journal: None,
            addresses: Vec::new(),
            pretagged_terms: None,
        }
    }

    /// A 40-publication spine-curvature corpus engineered so that the
    /// focal class's chi-square ranking is hand-computable:
    ///   term                    tf_cj  tf_cp  expected  chi
    ///   "lordosis"                 10     12      3.00  16.33
    ///   "lumbar hyperlordosis"      5      5      1.25  11.25
    ///   "lumbar lordosis"           6      9      2.25   6.25
    fn spine_fixture() -> (Corpus, Hierarchy, TermIndex) {
        let mut records = Vec::new();
        let mut assignments = Vec::new();
        let add = |records: &mut Vec<PublicationRecord>,
                       assignments: &mut Vec<(String, String)>,
                       title: &str,
                       class: &str| {
            let id = format!("p{:02}", records.len());
            records.push(record(&id, title));
            assignments.push((id, class.to_string()));
        };
        for _ in 0..5 {
            add(
                &mut records,
                &mut assignments,
                "Lordosis; lumbar hyperlordosis; lumbar lordosis",
                "lord",
            );
        }
        add(
            &mut records,
            &mut assignments,
            "Lordosis: lumbar lordosis",
            "lord",
        );
        for _ in 0..4 {
            add(&mut records, &mut assignments, "Lordosis", "lord");
        }
        for _ in 0..2 {
            add(&mut records, &mut assignments, "Lordosis", "spine");
        }
        for _ in 0..3 {
            add(&mut records, &mut assignments, "Lumbar lordosis", "spine");
        }
        for _ in 0..25 {
            add(&mut records, &mut assignments, "Spine care", "spine");
        }
        let corpus = Corpus::from_records(records).unwrap();
        let classes = vec![
            ClassDecl {
                class_id: "spine".into(),
                parent_id: None,
                labels: vec!["spinal curvatures".into()],
            },
            ClassDecl {
                class_id: "lord".into(),
                parent_id: Some("spine".into()),
                labels: vec!["lordosis".into()],
            },
        ];
        let options = HierarchyOptions {
            min_class_size: 1,
            ..HierarchyOptions::default()
        };
        let hierarchy =
            build_hierarchy(&classes, &assignments, &options, &Pipeline::default()).unwrap();
        let index = TermIndex::build(
            &corpus,
            &hierarchy,
            &"title".parse().unwrap(),
            ExtractionMode::Builtin,
            &Pipeline::default(),
            &StopList::empty(),
            3,
        )
        .unwrap();
        (corpus, hierarchy, index)
    }

    fn ranked_names(result: &LabelResult) -> Vec<&str> {
        result
            .ranked_terms
            .iter()
            .map(|t| t.term.as_str())
            .collect()
    }

    #[test]
    fn chi_square_ranks_the_spine_fixture_as_computed() {
        let (_corpus, hierarchy, index) = spine_fixture();
        let result = label_class(
            "lord",
            &index,
            &hierarchy,
            &WeightingSpec::ChiSquare,
            3,
            &StopList::empty(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(
            ranked_names(&result),
            ["lordosis", "lumbar hyperlordosis", "lumbar lordosis"]
        );
        let scores: Vec<f64> = result.ranked_terms.iter().map(|t| t.score).collect();
        assert!((scores[0] - 49.0 / 3.0).abs() < 1e-12);
        assert!((scores[1] - 11.25).abs() < 1e-12);
        assert!((scores[2] - 6.25).abs() < 1e-12);
        assert!(!result.flags.unlabelable);
        assert_eq!(result.level, 2);
    }

    #[test]
    fn stoplist_filters_before_truncation() {
        let (_corpus, hierarchy, index) = spine_fixture();
        let stop =
            StopList::from_terms([Term::new("lordosis").unwrap()]);
        let result = label_class(
            "lord",
            &index,
            &hierarchy,
            &WeightingSpec::ChiSquare,
            2,
            &stop,
        )
        .unwrap()
        .unwrap();
        // The former rank-2 and rank-3 terms move up; rank-3 would have
        // been truncated away had the filter run after truncation.
        assert_eq!(
            ranked_names(&result),
            ["lumbar hyperlordosis", "lumbar lordosis"]
        );
    }

    #[test]
    fn top_n_larger_than_candidate_count_returns_all() {
        let (_corpus, hierarchy, index) = spine_fixture();
        let result = label_class(
            "lord",
            &index,
            &hierarchy,
            &WeightingSpec::ChiSquare,
            50,
            &StopList::empty(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(result.ranked_terms.len(), 3);
    }

    #[test]
    fn fully_stopped_class_is_unlabelable() {
        let (_corpus, hierarchy, index) = spine_fixture();
        let stop = StopList::from_terms([
            Term::new("lordosis").unwrap(),
            Term::new("lumbar hyperlordosis").unwrap(),
            Term::new("lumbar lordosis").unwrap(),
        ]);
        let result = label_class(
            "lord",
            &index,
            &hierarchy,
            &WeightingSpec::ChiSquare,
            3,
            &stop,
        )
        .unwrap()
        .unwrap();
        assert!(result.flags.unlabelable);
        assert!(result.ranked_terms.is_empty());
    }

    #[test]
    fn zero_top_n_is_rejected() {
        let (_corpus, hierarchy, index) = spine_fixture();
        let err = label_class(
            "lord",
            &index,
            &hierarchy,
            &WeightingSpec::ChiSquare,
            0,
            &StopList::empty(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn per_level_specs_dispatch_by_level() {
        let (_corpus, hierarchy, index) = spine_fixture();
        // Level 2 gets pure in-class rate; the unused level-1 entry gets
        // pure specificity. ptf ranks "lordosis" (10/10) over the rest;
        // with alpha = 0 specificity would rank "lumbar hyperlordosis"
        // (s = 4.0) first.
        let mut specs = SpecByLevel::uniform(WeightingSpec::Tfs { alpha: 0.0 });
        specs
            .by_level
            .insert(2, WeightingSpec::Tfs { alpha: 1.0 });
        let labels =
            label_hierarchy(&hierarchy, &index, &specs, 1, &StopList::empty()).unwrap();
        assert_eq!(ranked_names(&labels.results["lord"]), ["lordosis"]);
        let flipped = SpecByLevel::uniform(WeightingSpec::Tfs { alpha: 0.0 });
        let labels2 =
            label_hierarchy(&hierarchy, &index, &flipped, 1, &StopList::empty()).unwrap();
        assert_eq!(
            ranked_names(&labels2.results["lord"]),
            ["lumbar hyperlordosis"]
        );
    }

    #[test]
    fn small_classes_are_reported_not_dropped() {
        let (_corpus, hierarchy, index) = {
            let (c, _, _) = spine_fixture();
            // Rebuild with a size threshold the child misses.
            let classes = vec![
                ClassDecl {
                    class_id: "spine".into(),
                    parent_id: None,
                    labels: vec!["spine".into()],
                },
                ClassDecl {
                    class_id: "lord".into(),
                    parent_id: Some("spine".into()),
                    labels: vec!["lordosis".into()],
                },
            ];
            let assignments: Vec<(String, String)> = (0..40)
                .map(|i| {
                    let class = if i < 10 { "lord" } else { "spine" };
                    (format!("p{i:02}"), class.to_string())
                })
                .collect();
            let options = HierarchyOptions {
                min_class_size: 20,
                ..HierarchyOptions::default()
            };
            let h = build_hierarchy(&classes, &assignments, &options, &Pipeline::default())
                .unwrap();
            let idx = TermIndex::build(
                &c,
                &h,
                &"title".parse().unwrap(),
                ExtractionMode::Builtin,
                &Pipeline::default(),
                &StopList::empty(),
                3,
            )
            .unwrap();
            (c, h, idx)
        };
        let labels = label_hierarchy(
            &hierarchy,
            &index,
            &SpecByLevel::uniform(WeightingSpec::ChiSquare),
            3,
            &StopList::empty(),
        )
        .unwrap();
        assert!(!labels.results.contains_key("lord"));
        assert_eq!(labels.skipped_small, ["lord"]);
        assert!(labels.results.contains_key("spine"));
    }

    #[test]
    fn roots_without_virtual_root_are_reported_unscoreable() {
        let (corpus, _, _) = spine_fixture();
        let classes = vec![
            ClassDecl {
                class_id: "spine".into(),
                parent_id: None,
                labels: vec!["spine".into()],
            },
            ClassDecl {
                class_id: "lord".into(),
                parent_id: Some("spine".into()),
                labels: vec!["lordosis".into()],
            },
        ];
        let assignments: Vec<(String, String)> = (0..40)
            .map(|i| {
                let class = if i < 10 { "lord" } else { "spine" };
                (format!("p{i:02}"), class.to_string())
            })
            .collect();
        let options = HierarchyOptions {
            min_class_size: 1,
            virtual_root: false,
            ..HierarchyOptions::default()
        };
        let hierarchy =
            build_hierarchy(&classes, &assignments, &options, &Pipeline::default()).unwrap();
        let index = TermIndex::build(
            &corpus,
            &hierarchy,
            &"title".parse().unwrap(),
            ExtractionMode::Builtin,
            &Pipeline::default(),
            &StopList::empty(),
            3,
        )
        .unwrap();
        let labels = label_hierarchy(
            &hierarchy,
            &index,
            &SpecByLevel::uniform(WeightingSpec::ChiSquare),
            3,
            &StopList::empty(),
        )
        .unwrap();
        assert_eq!(labels.skipped_unscoreable, ["spine"]);
        assert!(labels.results.contains_key("lord"));
    }

    #[test]
    fn outputs_are_deterministic_and_stoplist_sound() {
        let (_corpus, hierarchy, index) = spine_fixture();
        let stop = StopList::from_terms([Term::new("lordosis").unwrap()]);
        let specs = SpecByLevel::uniform(WeightingSpec::ChiSquare);
        let a = label_hierarchy(&hierarchy, &index, &specs, 3, &stop).unwrap();
        let b = label_hierarchy(&hierarchy, &index, &specs, 3, &stop).unwrap();
        assert_eq!(labels_tsv(&a), labels_tsv(&b));
        assert_eq!(labels_json(&a), labels_json(&b));
        for result in a.results.values() {
            for term in &result.ranked_terms {
                assert!(!stop.contains(&term.term));
                assert!(
                    index.tf(&result.class_id, term.term.as_str()).unwrap()
                        >= index.support_threshold()
                );
            }
        }
        let tsv = labels_tsv(&a);
        assert!(tsv.starts_with("class_id\tlevel\trank\tterm\tscore\n"));
        assert!(tsv.contains("lord\t2\t1\tlumbar hyperlordosis\t11.25\n"));
    }
}
