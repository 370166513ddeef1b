//! Labeling of classes in hierarchical classifications of publications.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`corpus`] ingests publication records (JSONL or CSV) and exposes
//!    per-field views of their text.
//! 2. [`extraction`] turns field text into normalized noun-phrase terms via a
//!    lexicon-based tagger, a chunker, and a rule-based singularizer. A
//!    pretagged mode accepts externally chunked phrases instead.
//! 3. [`hierarchy`] + [`index`] load the classification (classes, parent
//!    links, direct publication assignments), roll memberships up the tree,
//!    and count, per class and term, how many member publications contain the
//!    term.
//! 4. [`weighting`] + [`labeling`] score each class's candidate terms against
//!    its parent class with one of six approaches and emit ranked labels;
//!    [`evaluation`] compares top-N labels with gold labels and reports
//!    match rates with Jeffreys confidence intervals.
//!
//! Scoring formulas are generic over the scalar type through [`scalar::Real`];
//! the pipeline itself runs on [`Score`] (`f64`), which the deterministic
//! ranking contract (12 significant digits, then frequency, then term) is
//! pinned to.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod hierarchy;
pub mod index;
pub mod labeling;
pub mod scalar;
pub mod synthetic;
pub mod weighting;

pub use error::{Error, Result};

/// Scalar type used by the concrete pipeline.
pub type Score = f64;

/// Number of significant decimal digits two scores must share to be
/// considered tied by the ranking contract.
pub const SCORE_CMP_DIGITS: u32 = 12;

/// Default minimum number of member publications for a class to be a
/// labeling/evaluation target.
pub const DEFAULT_MIN_CLASS_SIZE: u64 = 50;

/// Default minimum number of member publications a term must occur in to be
/// a label candidate for a class.
pub const DEFAULT_SUPPORT_THRESHOLD: u32 = 3;

/// Default number of top-ranked terms kept as labels and checked by Match@N.
pub const DEFAULT_TOP_N: usize = 3;

/// Default dampening constant for the `wve` approach.
pub const DEFAULT_WVE_M: f64 = 25.0;

/// Default frequency/specificity balance for the `tfs` approach.
pub const DEFAULT_TFS_ALPHA: f64 = 0.5;
