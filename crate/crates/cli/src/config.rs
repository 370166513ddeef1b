//! Run configuration: a TOML file merged with command-line overrides.
//!
//! Precedence is flag > config file > built-in default. Data-file paths
//! (corpus, classes, assignments, index) live in the config file;
//! algorithm knobs can also be set per run from the command line. All
//! referenced paths are checked for existence at validation time, before
//! any work starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use classlabel::corpus::{CorpusFormat, FieldSet};
use classlabel::extraction::ExtractionMode;
use classlabel::hierarchy::HierarchyOptions;
use classlabel::labeling::SpecByLevel;
use classlabel::synthetic::{FieldProfile, SyntheticParams};
use classlabel::weighting::WeightingSpec;
use classlabel::{DEFAULT_SUPPORT_THRESHOLD, DEFAULT_TOP_N};

use crate::CliError;

/// The config file as written on disk; every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    /// `jsonl` (default) or `csv`.
    pub format: Option<String>,
    pub classes: Option<PathBuf>,
    pub assignments: Option<PathBuf>,
    /// Comma-separated field names, e.g. `title,keywords`.
    pub fields: Option<String>,
    /// `builtin` (default) or `pretagged`.
    pub mode: Option<String>,
    pub lexicon: Option<PathBuf>,
    pub singular_exceptions: Option<PathBuf>,
    pub address_stopwords: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub min_class_size: Option<u64>,
    pub rollup: Option<bool>,
    pub require_disjoint_levels: Option<bool>,
    pub exclude_root: Option<bool>,
    pub virtual_root: Option<bool>,
    pub split_amp: Option<bool>,
    pub single_phrase_labels: Option<bool>,
    pub threshold: Option<u32>,
    pub approach: Option<String>,
    pub tfs_alpha: Option<f64>,
    pub wve_m: Option<f64>,
    pub top_n: Option<usize>,
    pub threads: Option<usize>,
    /// Index file to write (`index`) or reuse (`label`/`evaluate`).
    pub index: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Per-level approach overrides, keyed by level number.
    #[serde(default)]
    pub by_level: BTreeMap<String, String>,
    pub sweep: Option<SweepConfig>,
    pub synth: Option<SynthConfig>,
}

/// Cross-product evaluation grid. Each field set builds one index that
/// all approaches share.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub approaches: Vec<String>,
    pub field_sets: Vec<String>,
    /// Defaults to the single configured top_n.
    #[serde(default)]
    pub top_ns: Vec<usize>,
}

/// Synthetic-generator knobs for the `synth` subcommand.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_classes: Option<usize>,
    pub depth: Option<u32>,
    pub pubs_per_class: Option<usize>,
    pub vocab_size: Option<usize>,
    pub plant_rate: Option<f64>,
    pub background_rate: Option<f64>,
    /// `uniform` (default) or `split`.
    pub field_profile: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }
}

/// Command-line overrides, already parsed by clap.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fields: Option<String>,
    pub approach: Option<String>,
    pub wve_m: Option<f64>,
    pub tfs_alpha: Option<f64>,
    pub top_n: Option<usize>,
    pub threshold: Option<u32>,
    pub min_class_size: Option<u64>,
    pub no_rollup: bool,
    pub split_amp: bool,
    pub stoplist: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved sweep grid.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub approaches: Vec<WeightingSpec>,
    pub field_sets: Vec<FieldSet>,
    pub top_ns: Vec<usize>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub format: CorpusFormat,
    pub classes: Option<PathBuf>,
    pub assignments: Option<PathBuf>,
    pub fields: FieldSet,
    pub mode: ExtractionMode,
    pub lexicon: Option<PathBuf>,
    pub singular_exceptions: Option<PathBuf>,
    pub address_stopwords: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub hierarchy: HierarchyOptions,
    pub exclude_root: bool,
    pub threshold: u32,
    pub specs: SpecByLevel,
    pub top_n: usize,
    pub threads: Option<usize>,
    pub index: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub sweep: Option<SweepPlan>,
    pub synth: SyntheticParams,
}

fn parse_spec(
    name: &str,
    tfs_alpha: Option<f64>,
    wve_m: Option<f64>,
) -> Result<WeightingSpec, CliError> {
    let spec: WeightingSpec = name.parse().map_err(CliError::config_from)?;
    let spec = match spec {
        WeightingSpec::Wve { m } => WeightingSpec::Wve {
            m: wve_m.unwrap_or(m),
        },
        WeightingSpec::Tfs { alpha } => WeightingSpec::Tfs {
            alpha: tfs_alpha.unwrap_or(alpha),
        },
        other => other,
    };
    spec.validate().map_err(CliError::config_from)?;
    Ok(spec)
}

impl RunConfig {
    /// Merges the config file with command-line overrides and defaults.
    pub fn resolve(file: FileConfig, over: &Overrides) -> Result<RunConfig, CliError> {
        let format: CorpusFormat = match &file.format {
            Some(s) => s.parse().map_err(CliError::config_from)?,
            None => CorpusFormat::Jsonl,
        };
        let fields: FieldSet = over
            .fields
            .as_deref()
            .or(file.fields.as_deref())
            // Titles and author keywords are the fields most corpora have.
            .unwrap_or("title,keywords")
            .parse()
            .map_err(CliError::config_from)?;
        let mode: ExtractionMode = match &file.mode {
            Some(s) => s.parse().map_err(CliError::config_from)?,
            None => ExtractionMode::Builtin,
        };

        let mut hierarchy = HierarchyOptions::default();
        if let Some(v) = over.min_class_size.or(file.min_class_size) {
            hierarchy.min_class_size = v;
        }
        hierarchy.rollup = if over.no_rollup {
            false
        } else {
            file.rollup.unwrap_or(true)
        };
        if let Some(v) = file.require_disjoint_levels {
            hierarchy.require_disjoint_levels = v;
        }
        if let Some(v) = file.virtual_root {
            hierarchy.virtual_root = v;
        }
        hierarchy.split_amp = over.split_amp || file.split_amp.unwrap_or(false);
        if let Some(v) = file.single_phrase_labels {
            hierarchy.single_phrase_labels = v;
        }

        let tfs_alpha = over.tfs_alpha.or(file.tfs_alpha);
        let wve_m = over.wve_m.or(file.wve_m);
        let default_name = over
            .approach
            .clone()
            .or_else(|| file.approach.clone())
            .unwrap_or_else(|| "tfs".to_string());
        let default_spec = parse_spec(&default_name, tfs_alpha, wve_m)?;
        let mut by_level = BTreeMap::new();
        for (level, name) in &file.by_level {
            let level: u32 = level.parse().map_err(|_| {
                CliError::config(format!("by_level key {level:?} is not a level number"))
            })?;
            by_level.insert(level, parse_spec(name, tfs_alpha, wve_m)?);
        }
        let specs = SpecByLevel {
            default: default_spec,
            by_level,
        };

        let top_n = over.top_n.or(file.top_n).unwrap_or(DEFAULT_TOP_N);
        if top_n == 0 {
            return Err(CliError::config("top_n must be at least 1"));
        }

        let sweep = match &file.sweep {
            None => None,
            Some(sweep) => {
                if sweep.approaches.is_empty() || sweep.field_sets.is_empty() {
                    return Err(CliError::config(
                        "sweep needs at least one approach and one field set",
                    ));
                }
                let approaches = sweep
                    .approaches
                    .iter()
                    .map(|name| parse_spec(name, tfs_alpha, wve_m))
                    .collect::<Result<Vec<_>, _>>()?;
                let field_sets = sweep
                    .field_sets
                    .iter()
                    .map(|s| s.parse().map_err(CliError::config_from))
                    .collect::<Result<Vec<FieldSet>, _>>()?;
                let top_ns = if sweep.top_ns.is_empty() {
                    vec![top_n]
                } else {
                    if sweep.top_ns.contains(&0) {
                        return Err(CliError::config("sweep top_ns must be at least 1"));
                    }
                    sweep.top_ns.clone()
                };
                Some(SweepPlan {
                    approaches,
                    field_sets,
                    top_ns,
                })
            }
        };

        let synth_file = file.synth.unwrap_or_default();
        let mut synth = SyntheticParams::default();
        if let Some(v) = synth_file.n_classes {
            synth.n_classes = v;
        }
        if let Some(v) = synth_file.depth {
            synth.depth = v;
        }
        if let Some(v) = synth_file.pubs_per_class {
            synth.pubs_per_class = v;
        }
        if let Some(v) = synth_file.vocab_size {
            synth.vocab_size = v;
        }
        if let Some(v) = synth_file.plant_rate {
            synth.plant_rate = v;
        }
        if let Some(v) = synth_file.background_rate {
            synth.background_rate = v;
        }
        if let Some(s) = &synth_file.field_profile {
            synth.field_profile = s.parse::<FieldProfile>().map_err(CliError::config_from)?;
        }

        Ok(RunConfig {
            corpus: file.corpus,
            format,
            classes: file.classes,
            assignments: file.assignments,
            fields,
            mode,
            lexicon: over.lexicon.clone().or(file.lexicon),
            singular_exceptions: file.singular_exceptions,
            address_stopwords: file.address_stopwords,
            stoplist: over.stoplist.clone().or(file.stoplist),
            hierarchy,
            exclude_root: file.exclude_root.unwrap_or(true),
            threshold: over
                .threshold
                .or(file.threshold)
                .unwrap_or(DEFAULT_SUPPORT_THRESHOLD),
            specs,
            top_n,
            threads: over.threads.or(file.threads),
            index: file.index,
            out: over
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(".")),
            seed: over.seed.or(file.seed).unwrap_or(0),
            sweep,
            synth,
        })
    }

    /// Existence check for one configured input path.
    fn need(path: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
        match path {
            None => Err(CliError::config(format!("{what} not configured"))),
            Some(p) if !p.exists() => Err(CliError::config(format!("{what} not found"))),
            Some(p) => Ok(p.clone()),
        }
    }

    pub fn corpus_path(&self) -> Result<PathBuf, CliError> {
        Self::need(&self.corpus, "corpus")
    }

    pub fn classes_path(&self) -> Result<PathBuf, CliError> {
        Self::need(&self.classes, "class file")
    }

    pub fn assignments_path(&self) -> Result<PathBuf, CliError> {
        Self::need(&self.assignments, "assignment file")
    }

    /// Optional input paths that must exist when configured.
    pub fn check_optional_inputs(&self) -> Result<(), CliError> {
        for (path, what) in [
            (&self.lexicon, "lexicon"),
            (&self.singular_exceptions, "singular-exception file"),
            (&self.address_stopwords, "address stopword file"),
            (&self.stoplist, "stoplist"),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::config(format!("{what} not found")));
                }
            }
        }
        Ok(())
    }
}
