//! Labeling quality against the hierarchy's own gold labels.
//!
//! A class is labeled *successfully* when one of its top-N ranked terms
//! exactly equals one of its gold labels (both sides normalized by the
//! same extraction pipeline). Two headline rates are reported:
//!
//! * match rate — successful classes / evaluated classes;
//! * max possible — classes whose gold label was extracted at all (is a
//!   candidate term at the support threshold) / evaluated classes.
//!
//! The report partitions evaluated classes by hierarchy level, each row
//! carrying an equal-tailed 95% Jeffreys interval for its rate: the
//! posterior quantiles of Beta(successes + ½, failures + ½), with the
//! standard boundary overrides (low = 0 when no successes, high = 1 when
//! no failures).
//!
//! Classes that cannot be evaluated are excluded from the denominator and
//! counted in the report instead: root-level classes (excluded by
//! default), classes whose labels were removed by the single-phrase
//! filter or normalization, classes with no candidate terms, and root
//! classes without a parent collection.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::corpus::FieldSet;
use crate::error::{Error, Result};
use crate::extraction::{StopList, Term};
use crate::hierarchy::{ClassNode, Hierarchy};
use crate::index::TermIndex;
use crate::labeling::{label_class, LabelResult, SpecByLevel};
use crate::weighting::WeightingSpec;

/// Evaluation switches.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Skip level-1 (root) classes. Default true.
    pub exclude_root: bool,
    /// Stop list applied to label output before ranking is truncated.
    pub stoplist: StopList,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            exclude_root: true,
            stoplist: StopList::empty(),
        }
    }
}

/// Per-level evaluation row.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub n_total: u64,
    pub n_successful: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Classes left out of the denominator, by reason.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ExclusionCounts {
    /// Level-1 classes skipped because of `exclude_root`.
    pub root_level: u64,
    /// Gold labels removed by the single-phrase filter or normalization.
    pub label_filtered: u64,
    /// No candidate terms at the support threshold (or all stop-listed).
    pub unlabelable: u64,
    /// No parent collection to score against (virtual root disabled).
    pub unscoreable: u64,
}

/// Full evaluation result for one approach / field set / N.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub approach: WeightingSpec,
    pub fields_used: FieldSet,
    pub n: usize,
    pub match_rate: f64,
    pub max_possible: f64,
    pub per_level: Vec<LevelRow>,
    pub n_total: u64,
    pub n_successful: u64,
    pub n_extracted: u64,
    pub excluded: ExclusionCounts,
}

/// True when one of the ranked terms exactly equals a gold label.
pub fn is_successful(result: &LabelResult, gold_labels: &[Term]) -> bool {
    result
        .ranked_terms
        .iter()
        .any(|t| gold_labels.binary_search(&t.term).is_ok())
}

/// True when some gold label is a candidate term of the class (reached
/// the support threshold), regardless of its rank.
pub fn max_possible_per_class(
    index: &TermIndex,
    class_id: &str,
    gold_labels: &[Term],
) -> Result<bool> {
    let threshold = index.support_threshold();
    for label in gold_labels {
        if index.tf(class_id, label.as_str())? >= threshold {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Equal-tailed Bayesian binomial interval under the Jeffreys prior:
/// quantiles of Beta(successes + ½, failures + ½) at (1 ± level)/2, with
/// low = 0 when successes = 0 and high = 1 when successes = total.
pub fn confidence_interval(successes: u64, total: u64, level: f64) -> Result<(f64, f64)> {
    if total == 0 || successes > total {
        return Err(Error::InvalidParameter(format!(
            "confidence interval needs 0 ≤ successes ≤ total with total ≥ 1, got {successes}/{total}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let a = successes as f64 + 0.5;
    let b = (total - successes) as f64 + 0.5;
    let dist = Beta::new(a, b).expect("positive shape parameters");
    let tail = (1.0 - level) / 2.0;
    let low = if successes == 0 {
        0.0
    } else {
        beta_quantile(&dist, tail)
    };
    let high = if successes == total {
        1.0
    } else {
        beta_quantile(&dist, 1.0 - tail)
    };
    Ok((low, high))
}

/// Quantile by bisection over the regularized incomplete beta CDF. The
/// CDF is monotone on [0, 1]; 100 halvings exhaust f64 resolution.
fn beta_quantile(dist: &Beta, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if dist.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Labels and scores every evaluable target class, then aggregates the
/// two headline rates and the per-level breakdown.
pub fn evaluate(
    hierarchy: &Hierarchy,
    index: &TermIndex,
    specs: &SpecByLevel,
    n: usize,
    options: &EvalOptions,
) -> Result<EvaluationReport> {
    specs.validate()?;
    let mut excluded = ExclusionCounts::default();
    let mut classes: Vec<&ClassNode> = Vec::new();
    for node in hierarchy.target_classes() {
        if options.exclude_root && node.level == 1 {
            excluded.root_level += 1;
        } else if node.label_filtered {
            excluded.label_filtered += 1;
        } else {
            classes.push(node);
        }
    }

    struct ClassOutcome {
        level: u32,
        successful: bool,
        extracted: bool,
    }
    enum Outcome {
        Evaluated(ClassOutcome),
        Unlabelable,
        Unscoreable,
    }
    let outcomes: Vec<Outcome> = classes
        .par_iter()
        .map(|node| {
            let spec = specs.for_level(node.level);
            let Some(result) =
                label_class(&node.class_id, index, hierarchy, spec, n, &options.stoplist)?
            else {
                return Ok(Outcome::Unscoreable);
            };
            if result.flags.unlabelable {
                return Ok(Outcome::Unlabelable);
            }
            Ok(Outcome::Evaluated(ClassOutcome {
                level: node.level,
                successful: is_successful(&result, &node.labels),
                extracted: max_possible_per_class(index, &node.class_id, &node.labels)?,
            }))
        })
        .collect::<Result<_>>()?;

    let mut by_level: std::collections::BTreeMap<u32, (u64, u64)> =
        std::collections::BTreeMap::new();
    let (mut n_total, mut n_successful, mut n_extracted) = (0u64, 0u64, 0u64);
    for outcome in outcomes {
        match outcome {
            Outcome::Unlabelable => excluded.unlabelable += 1,
            Outcome::Unscoreable => excluded.unscoreable += 1,
            Outcome::Evaluated(o) => {
                n_total += 1;
                n_successful += u64::from(o.successful);
                n_extracted += u64::from(o.extracted);
                let row = by_level.entry(o.level).or_insert((0, 0));
                row.0 += 1;
                row.1 += u64::from(o.successful);
            }
        }
    }
    if n_total == 0 {
        return Err(Error::InvalidParameter(
            "no target classes left to evaluate".to_string(),
        ));
    }

    let per_level = by_level
        .into_iter()
        .map(|(level, (total, successes))| {
            let (ci_low, ci_high) = confidence_interval(successes, total, 0.95)?;
            Ok(LevelRow {
                level,
                n_total: total,
                n_successful: successes,
                rate: successes as f64 / total as f64,
                ci_low,
                ci_high,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EvaluationReport {
        approach: specs.default,
        fields_used: index.header().fields.clone(),
        n,
        match_rate: n_successful as f64 / n_total as f64,
        max_possible: n_extracted as f64 / n_total as f64,
        per_level,
        n_total,
        n_successful,
        n_extracted,
        excluded,
    })
}

/// Per-level table: `level, n_total, n_successful, rate, ci_low, ci_high`.
pub fn evaluation_tsv(report: &EvaluationReport) -> String {
    let mut out = String::from("level\tn_total\tn_successful\trate\tci_low\tci_high\n");
    for row in &report.per_level {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            row.level, row.n_total, row.n_successful, row.rate, row.ci_low, row.ci_high
        )
        .expect("string write");
    }
    out
}

/// Full report as a JSON document.
pub fn evaluation_json(report: &EvaluationReport) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    json
}

/// Plot-ready CSV over one or more reports: one row per report per level
/// plus an `all`-levels row, keyed by approach and field set.
pub fn plot_csv(reports: &[EvaluationReport]) -> String {
    let mut out = String::from(
        "approach,fields,top_n,level,n_total,n_successful,rate,ci_low,ci_high,max_possible\n",
    );
    for report in reports {
        for row in &report.per_level {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},",
                report.approach,
                report.fields_used,
                report.n,
                row.level,
                row.n_total,
                row.n_successful,
                row.rate,
                row.ci_low,
                row.ci_high
            )
            .expect("string write");
        }
        writeln!(
            out,
            "{},{},{},all,{},{},{},,,{}",
            report.approach,
            report.fields_used,
            report.n,
            report.n_total,
            report.n_successful,
            report.match_rate,
            report.max_possible
        )
        .expect("string write");
    }
    out
}
