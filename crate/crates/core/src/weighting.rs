//! Term-relevance scores comparing a class against its parent.
//!
//! Six approaches are provided. All compare how often a term appears in
//! the publications of a focal class `c_j` against its parent class `c_p`
//! (or the reference collection `c_ref = c_p \ c_j`):
//!
//! * `chi_square` — one-sided Pearson residual against the expected
//!   frequency under the parent's rate.
//! * `jsd` — per-term Jensen–Shannon divergence contribution, clamped to
//!   zero when the class rate does not exceed the reference rate.
//! * `jsd_raw` — the unclamped divergence contribution. Kept only to
//!   demonstrate its pathology: it rewards terms that are conspicuously
//!   *absent* from the class just as much as conspicuously present ones.
//! * `jsdq` — only the class-side half of the divergence; may be negative.
//! * `tf_idf` — class frequency × log inverse parent frequency.
//! * `wve` — smoothed specificity ratio with additive parameter `m`.
//! * `tfs` — weighted geometric mean of in-class rate and specificity,
//!   with exponent `alpha` trading frequency against specificity.
//!
//! All logarithms are natural. Scores are pure functions of
//! [`ClassTermStats`]; ranking uses a deterministic total order that
//! rounds scores to [`crate::SCORE_CMP_DIGITS`] significant digits before
//! comparing (see [`sort_scored`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::Term;
use crate::hierarchy::Hierarchy;
use crate::index::{candidate_stats, TermIndex};
use crate::scalar::{round_sig, Real};
use crate::{Score, DEFAULT_TFS_ALPHA, DEFAULT_WVE_M, SCORE_CMP_DIGITS};

/// Frequency statistics for one (term, class) pair.
///
/// `tf_*` are publication counts containing the term; `size_*` are
/// collection sizes; `totals_*` are the summed term frequencies used as
/// distribution denominators. With rollup enforced, `tf_cj ≤ tf_cp` and
/// `tf_cref = tf_cp − tf_cj`; without it the reference counts are
/// independent and the formulas stay total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassTermStats {
    pub tf_cj: u64,
    pub tf_cp: u64,
    pub size_cj: u64,
    pub size_cp: u64,
    pub tf_cref: u64,
    pub totals_cj: u64,
    pub totals_cref: u64,
}

/// Expected in-class frequency if the term were spread over the parent
/// uniformly: `tf_cp × |c_j| / |c_p|`. Zero whenever `tf_cp` is zero,
/// which also covers the empty-parent case.
pub fn expected_frequency<R: Real>(s: &ClassTermStats) -> R {
    if s.tf_cp == 0 {
        return R::zero();
    }
    R::count(s.tf_cp) * R::count(s.size_cj) / R::count(s.size_cp)
}

/// One-sided chi-square: `(tf_cj − expected)² / expected` when the
/// observed count exceeds the expectation, else zero. An expectation of
/// exactly zero with a positive observed count yields `+∞`, ranking such
/// maximally specific terms above every finite score (only reachable with
/// rollup off).
pub fn chi_square<R: Real>(s: &ClassTermStats) -> R {
    let expected = expected_frequency::<R>(s);
    let observed = R::count(s.tf_cj);
    if observed <= expected {
        R::zero()
    } else if expected == R::zero() {
        R::infinity()
    } else {
        let diff = observed - expected;
        diff * diff / expected
    }
}

/// `x · ln(x / m)` with the `0·ln 0 = 0` convention.
fn xlogx_over<R: Real>(x: R, m: R) -> R {
    if x == R::zero() {
        R::zero()
    } else {
        x * (x / m).ln()
    }
}

/// The rates the divergence scores compare: `P` over the reference
/// collection, `Q` over the class, `M` their midpoint. `None` when the
/// reference collection is degenerate (no terms at all).
fn rates<R: Real>(s: &ClassTermStats) -> Option<(R, R, R)> {
    if s.totals_cref == 0 {
        return None;
    }
    let p = R::count(s.tf_cref) / R::count(s.totals_cref);
    let q = if s.totals_cj == 0 {
        R::zero()
    } else {
        R::count(s.tf_cj) / R::count(s.totals_cj)
    };
    let m = (p + q) / R::count(2);
    Some((p, q, m))
}

/// Unclamped per-term divergence contribution:
/// `P·ln(P/M) + Q·ln(Q/M)`. Symmetric in the two rates — which is
/// exactly its defect as a labeling score. Degenerate reference → 0.
pub fn jsd_raw<R: Real>(s: &ClassTermStats) -> R {
    match rates::<R>(s) {
        None => R::zero(),
        Some((p, q, m)) => {
            if m == R::zero() {
                R::zero()
            } else {
                xlogx_over(p, m) + xlogx_over(q, m)
            }
        }
    }
}

/// Clamped divergence: the [`jsd_raw`] value when the class rate exceeds
/// the reference rate, else zero. Degenerate reference → 0.
pub fn jsd<R: Real>(s: &ClassTermStats) -> R {
    match rates::<R>(s) {
        None => R::zero(),
        Some((p, q, _)) if q <= p => R::zero(),
        Some(_) => jsd_raw(s),
    }
}

/// Class-side half of the divergence: `Q·ln(Q/M)`. Negative when the
/// class rate is below the reference rate. Degenerate reference → 0.
pub fn jsdq<R: Real>(s: &ClassTermStats) -> R {
    match rates::<R>(s) {
        None => R::zero(),
        Some((_, q, m)) => xlogx_over(q, m),
    }
}

/// `tf_cj × ln(|c_p| / tf_cp)`. Zero when the term is absent from the
/// class; `+∞` when present in the class but absent from the parent
/// (only reachable with rollup off).
pub fn tf_idf<R: Real>(s: &ClassTermStats) -> R {
    if s.tf_cj == 0 {
        return R::zero();
    }
    if s.tf_cp == 0 {
        return R::infinity();
    }
    R::count(s.tf_cj) * (R::count(s.size_cp) / R::count(s.tf_cp)).ln()
}

/// Smoothed specificity: `tf_cj / (tf_cp + m)`. A zero denominator with a
/// zero numerator scores 0; with a positive numerator it is the
/// maximally specific limit `+∞` (only reachable with rollup off).
pub fn wve<R: Real>(s: &ClassTermStats, m: R) -> R {
    let denom = R::count(s.tf_cp) + m;
    if denom == R::zero() {
        if s.tf_cj == 0 {
            R::zero()
        } else {
            R::infinity()
        }
    } else {
        R::count(s.tf_cj) / denom
    }
}

/// Weighted geometric mean `ptf^alpha × s^(1−alpha)` of the in-class rate
/// `ptf = tf_cj/|c_j|` and the specificity `s = tf_cj/expected`.
///
/// `alpha = 1` returns `ptf` exactly and `alpha = 0` returns `s` exactly
/// (no exponentiation round-trip). A zero expectation with a positive
/// count is the `+∞` specificity limit whenever `alpha < 1`.
pub fn tfs<R: Real>(s: &ClassTermStats, alpha: R) -> R {
    if s.tf_cj == 0 {
        return R::zero();
    }
    let ptf = R::count(s.tf_cj) / R::count(s.size_cj);
    if alpha == R::one() {
        return ptf;
    }
    let expected = expected_frequency::<R>(s);
    if expected == R::zero() {
        return R::infinity();
    }
    let spec = R::count(s.tf_cj) / expected;
    if alpha == R::zero() {
        return spec;
    }
    ptf.powf(alpha) * spec.powf(R::one() - alpha)
}

/// Scoring approach selector with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "approach", rename_all = "snake_case")]
pub enum WeightingSpec {
    ChiSquare,
    Jsd,
    JsdRaw,
    Jsdq,
    TfIdf,
    Wve {
        #[serde(default = "default_m")]
        m: f64,
    },
    Tfs {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
}

fn default_m() -> f64 {
    DEFAULT_WVE_M
}

fn default_alpha() -> f64 {
    DEFAULT_TFS_ALPHA
}

impl Default for WeightingSpec {
    fn default() -> Self {
        WeightingSpec::Tfs {
            alpha: DEFAULT_TFS_ALPHA,
        }
    }
}

impl WeightingSpec {
    pub fn name(&self) -> &'static str {
        match self {
            WeightingSpec::ChiSquare => "chi_square",
            WeightingSpec::Jsd => "jsd",
            WeightingSpec::JsdRaw => "jsd_raw",
            WeightingSpec::Jsdq => "jsdq",
            WeightingSpec::TfIdf => "tf_idf",
            WeightingSpec::Wve { .. } => "wve",
            WeightingSpec::Tfs { .. } => "tfs",
        }
    }

    /// Rejects out-of-range parameters (`m < 0`, `alpha ∉ [0,1]`, NaN).
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightingSpec::Wve { m } if !(m.is_finite() && m >= 0.0) => Err(
                Error::InvalidParameter(format!("wve parameter m must be ≥ 0, got {m}")),
            ),
            WeightingSpec::Tfs { alpha } if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) => {
                Err(Error::InvalidParameter(format!(
                    "tfs parameter alpha must be in [0, 1], got {alpha}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn score<R: Real>(&self, s: &ClassTermStats) -> R {
        match *self {
            WeightingSpec::ChiSquare => chi_square(s),
            WeightingSpec::Jsd => jsd(s),
            WeightingSpec::JsdRaw => jsd_raw(s),
            WeightingSpec::Jsdq => jsdq(s),
            WeightingSpec::TfIdf => tf_idf(s),
            WeightingSpec::Wve { m } => wve(s, R::param(m)),
            WeightingSpec::Tfs { alpha } => tfs(s, R::param(alpha)),
        }
    }
}

impl fmt::Display for WeightingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WeightingSpec::Wve { m } => write!(f, "wve(m={m})"),
            WeightingSpec::Tfs { alpha } => write!(f, "tfs(alpha={alpha})"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for WeightingSpec {
    type Err = Error;

    /// Parses an approach name; `wve` and `tfs` take their defaults
    /// (`m = 25`, `alpha = 0.5`).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "chi_square" => Ok(WeightingSpec::ChiSquare),
            "jsd" => Ok(WeightingSpec::Jsd),
            "jsd_raw" => Ok(WeightingSpec::JsdRaw),
            "jsdq" => Ok(WeightingSpec::Jsdq),
            "tf_idf" => Ok(WeightingSpec::TfIdf),
            "wve" => Ok(WeightingSpec::Wve { m: DEFAULT_WVE_M }),
            "tfs" => Ok(WeightingSpec::Tfs {
                alpha: DEFAULT_TFS_ALPHA,
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown approach {other:?} (expected one of chi_square, jsd, jsd_raw, jsdq, tf_idf, wve, tfs)"
            ))),
        }
    }
}

/// One scored candidate term. `tf_cj` is kept because it is the first
/// tie-break of the ranking contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredTerm {
    pub term: Term,
    pub score: Score,
    pub tf_cj: u64,
}

/// All candidate terms of one class, ranked.
#[derive(Debug, Clone)]
pub struct ScoredClass {
    pub class_id: String,
    pub terms: Vec<ScoredTerm>,
    /// The reference collection contains no terms at all; divergence
    /// scores degrade to zero for such classes.
    pub degenerate_reference: bool,
}

/// Deterministic ranking: score descending after rounding to
/// [`SCORE_CMP_DIGITS`] significant digits, then `tf_cj` descending, then
/// term ascending. Total and platform-stable.
pub fn sort_scored(terms: &mut [ScoredTerm]) {
    terms.sort_unstable_by(|a, b| {
        let ka = round_sig(a.score, SCORE_CMP_DIGITS);
        let kb = round_sig(b.score, SCORE_CMP_DIGITS);
        kb.total_cmp(&ka)
            .then_with(|| b.tf_cj.cmp(&a.tf_cj))
            .then_with(|| a.term.cmp(&b.term))
    });
}

/// Scores every candidate term of a class and ranks them. Returns
/// `Ok(None)` when the class has no parent collection to compare against
/// (a root with the virtual root disabled).
pub fn score_terms(
    class_id: &str,
    index: &TermIndex,
    hierarchy: &Hierarchy,
    spec: &WeightingSpec,
) -> Result<Option<ScoredClass>> {
    spec.validate()?;
    let node = hierarchy.node(class_id)?;
    let Some(stats) = candidate_stats(index, hierarchy, node)? else {
        return Ok(None);
    };
    let degenerate_reference = stats.first().is_some_and(|(_, s)| s.totals_cref == 0);
    let mut terms: Vec<ScoredTerm> = stats
        .into_iter()
        .map(|(term, s)| ScoredTerm {
            term: term.clone(),
            score: spec.score::<Score>(&s),
            tf_cj: s.tf_cj,
        })
        .collect();
    sort_scored(&mut terms);
    Ok(Some(ScoredClass {
        class_id: class_id.to_string(),
        terms,
        degenerate_reference,
    }))
}
