//! Command-line entry point: extract → index → label → evaluate over a
//! publication classification, plus a synthetic-data generator.
//!
//! Output contract: stdout is line-oriented `key=value` data (one pair
//! per line for `index`/`label`/`synth`, one space-separated record per
//! evaluation report); all diagnostics and warnings go to stderr. Exit
//! codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use classlabel::corpus::{ingest_corpus, Corpus};
use classlabel::error::Error;
use classlabel::evaluation::{
    evaluate, evaluation_json, evaluation_tsv, plot_csv, EvalOptions, EvaluationReport,
};
use classlabel::extraction::{Lemmatizer, Pipeline, PosLexicon, StopList};
use classlabel::hierarchy::{build_hierarchy, load_assignment_file, load_class_file, Hierarchy};
use classlabel::index::TermIndex;
use classlabel::labeling::{label_hierarchy, labels_json, labels_tsv, SpecByLevel};
use classlabel::synthetic::generate;

use config::{FileConfig, Overrides, RunConfig};

/// Errors carrying their process exit code: configuration/usage problems
/// exit 2, failures while processing data exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }

    fn config_from(err: impl fmt::Display) -> CliError {
        CliError::Config(err.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// Prefixes the message with where the failure happened, keeping the
    /// error class (and so the exit code) intact.
    fn with_context(self, context: impl fmt::Display) -> CliError {
        match self {
            CliError::Config(msg) => CliError::Config(format!("{context}: {msg}")),
            CliError::Runtime(msg) => CliError::Runtime(format!("{context}: {msg}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> CliError {
        match err {
            // Parameter-domain violations are configuration mistakes.
            Error::InvalidParameter(_) => CliError::Config(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "classlabel",
    version,
    about = "Label classes of a publication hierarchy by term weighting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the term index file for a corpus and hierarchy.
    Index(CommonArgs),
    /// Rank label candidates for every target class.
    Label(CommonArgs),
    /// Compare top-N labels against the gold labels.
    Evaluate(CommonArgs),
    /// Generate a seeded synthetic corpus, class file and assignments.
    Synth(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Index(a) | Command::Label(a) | Command::Evaluate(a) | Command::Synth(a) => a,
        }
    }
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated bibliographic fields, e.g. title,keywords.
    #[arg(long)]
    fields: Option<String>,
    /// chi_square | jsd | jsd_raw | jsdq | tf_idf | wve | tfs.
    #[arg(long)]
    approach: Option<String>,
    /// Dampening constant for the wve approach.
    #[arg(long)]
    wve_m: Option<f64>,
    /// Frequency/specificity balance for the tfs approach, in [0, 1].
    #[arg(long)]
    tfs_alpha: Option<f64>,
    /// Number of top-ranked terms kept per class.
    #[arg(long)]
    top_n: Option<usize>,
    /// Minimum publications containing a term for label candidacy.
    #[arg(long)]
    threshold: Option<u32>,
    /// Minimum member count for a class to be labeled/evaluated.
    #[arg(long)]
    min_class_size: Option<u64>,
    /// Count only direct members; do not roll members up the tree.
    #[arg(long)]
    no_rollup: bool,
    /// Split gold labels at '&' before normalization.
    #[arg(long)]
    split_amp: bool,
    /// Label stoplist file, one term per line.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Part-of-speech lexicon file (token<TAB>N|J|O).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the synth subcommand.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            fields: self.fields.clone(),
            approach: self.approach.clone(),
            wve_m: self.wve_m,
            tfs_alpha: self.tfs_alpha,
            top_n: self.top_n,
            threshold: self.threshold,
            min_class_size: self.min_class_size,
            no_rollup: self.no_rollup,
            split_amp: self.split_amp,
            stoplist: self.stoplist.clone(),
            lexicon: self.lexicon.clone(),
            threads: self.threads,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Single-line machine-parsable error record.
            let msg = err.to_string().replace('\n', "; ");
            eprintln!("error: {msg}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(file, &args.overrides())?;
    cfg.check_optional_inputs()?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    validate_paths(&cli.command, &cfg)?;
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Runtime(format!("output directory: {e}")))?;
    match &cli.command {
        Command::Index(_) => cmd_index(&cfg),
        Command::Label(_) => cmd_label(&cfg),
        Command::Evaluate(_) => cmd_evaluate(&cfg),
        Command::Synth(_) => cmd_synth(&cfg),
    }
}

/// Every input path a command will touch must exist before work starts.
fn validate_paths(command: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Synth(_) => {}
        Command::Index(_) => {
            cfg.corpus_path()?;
            cfg.classes_path()?;
            cfg.assignments_path()?;
        }
        Command::Label(_) | Command::Evaluate(_) => {
            cfg.classes_path()?;
            cfg.assignments_path()?;
            let stored_index = cfg.index.as_ref().is_some_and(|p| p.exists());
            let sweep_builds = matches!(command, Command::Evaluate(_)) && cfg.sweep.is_some();
            if !stored_index || sweep_builds {
                cfg.corpus_path()?;
            }
        }
    }
    Ok(())
}

/// Builds the extraction pipeline from configured lexicon files, falling
/// back to the embedded ones. Malformed files are configuration errors.
fn load_pipeline(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    let lexicon = match &cfg.lexicon {
        Some(path) => PosLexicon::from_path(path).map_err(CliError::config_from)?,
        None => PosLexicon::embedded().clone(),
    };
    let lemmatizer = match &cfg.singular_exceptions {
        Some(path) => Lemmatizer::from_path(path).map_err(CliError::config_from)?,
        None => Lemmatizer::embedded().clone(),
    };
    Ok(Pipeline::new(lexicon, lemmatizer))
}

fn load_address_stopwords(cfg: &RunConfig, pipeline: &Pipeline) -> Result<StopList, CliError> {
    match &cfg.address_stopwords {
        Some(path) => StopList::load(path, pipeline).map_err(CliError::config_from),
        None => Ok(StopList::embedded_address().clone()),
    }
}

fn load_label_stoplist(cfg: &RunConfig, pipeline: &Pipeline) -> Result<StopList, CliError> {
    match &cfg.stoplist {
        Some(path) => StopList::load(path, pipeline).map_err(CliError::config_from),
        None => Ok(StopList::empty()),
    }
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    let path = cfg.corpus_path()?;
    let ingest = ingest_corpus(&path, cfg.format)?;
    for issue in &ingest.rejected {
        eprintln!(
            "warn: {} line {}: {}",
            path.display(),
            issue.line,
            issue.message
        );
    }
    Ok(ingest.corpus)
}

fn load_hierarchy(cfg: &RunConfig, pipeline: &Pipeline) -> Result<Hierarchy, CliError> {
    let class_path = cfg.classes_path()?;
    let classes = load_class_file(&class_path)?;
    let assignment_path = cfg.assignments_path()?;
    let (assignments, issues) = load_assignment_file(&assignment_path, &classes)?;
    for issue in &issues {
        eprintln!(
            "warn: {} line {}: {}",
            assignment_path.display(),
            issue.line,
            issue.message
        );
    }
    Ok(build_hierarchy(
        &classes,
        &assignments,
        &cfg.hierarchy,
        pipeline,
    )?)
}

/// A stored index must describe the same classification it is used with.
fn check_index_matches(index: &TermIndex, hierarchy: &Hierarchy) -> Result<(), CliError> {
    let header = index.header();
    if header.rollup != hierarchy.rollup() {
        return Err(CliError::config(
            "index rollup setting differs from the configured hierarchy".to_string(),
        ));
    }
    if index.class_count() != hierarchy.len() {
        return Err(CliError::config(format!(
            "index has {} classes, hierarchy has {}",
            index.class_count(),
            hierarchy.len()
        )));
    }
    for node in hierarchy.nodes() {
        match header.class_sizes.get(&node.class_id) {
            Some(&size) if size == node.size() => {}
            Some(&size) => {
                return Err(CliError::config(format!(
                    "index class {} has {} members, hierarchy has {}",
                    node.class_id,
                    size,
                    node.size()
                )));
            }
            None => {
                return Err(CliError::config(format!(
            "index is missing class {}",
                    node.class_id
                )));
            }
        }
    }
    Ok(())
}

/// Reads the configured index file when present, otherwise builds the
/// index from the corpus on the fly.
fn obtain_index(
    cfg: &RunConfig,
    hierarchy: &Hierarchy,
    pipeline: &Pipeline,
) -> Result<TermIndex, CliError> {
    if let Some(path) = &cfg.index {
        if path.exists() {
            let index = TermIndex::read(path)?;
            check_index_matches(&index, hierarchy)?;
            if index.header().fields != cfg.fields {
                eprintln!(
                    "note: using fields {} stored in {}",
                    index.header().fields,
                    path.display()
                );
            }
            return Ok(index);
        }
        eprintln!("note: index {} not found, building", path.display());
    }
    let corpus = load_corpus(cfg)?;
    let address_stopwords = load_address_stopwords(cfg, pipeline)?;
    Ok(TermIndex::build(
        &corpus,
        hierarchy,
        &cfg.fields,
        cfg.mode,
        pipeline,
        &address_stopwords,
        cfg.threshold,
    )?)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))
}

fn cmd_index(cfg: &RunConfig) -> Result<(), CliError> {
    let pipeline = load_pipeline(cfg)?;
    let hierarchy = load_hierarchy(cfg, &pipeline)?;
    let corpus = load_corpus(cfg)?;
    let address_stopwords = load_address_stopwords(cfg, &pipeline)?;
    let index = TermIndex::build(
        &corpus,
        &hierarchy,
        &cfg.fields,
        cfg.mode,
        &pipeline,
        &address_stopwords,
        cfg.threshold,
    )?;
    let path = cfg
        .index
        .clone()
        .unwrap_or_else(|| cfg.out.join("index.bin"));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("index directory: {e}")))?;
        }
    }
    index.write(&path)?;
    let candidate_terms: usize = hierarchy
        .nodes()
        .map(|node| index.candidate_rows(&node.class_id).map(|r| r.len()))
        .sum::<classlabel::Result<usize>>()?;
    println!("publications={}", hierarchy.pub_ids().len());
    println!("classes={}", index.class_count());
    println!("terms={}", index.term_count());
    println!("candidate_terms={candidate_terms}");
    println!("index={}", path.display());
    Ok(())
}

fn cmd_label(cfg: &RunConfig) -> Result<(), CliError> {
    let pipeline = load_pipeline(cfg)?;
    let hierarchy = load_hierarchy(cfg, &pipeline)?;
    let index = obtain_index(cfg, &hierarchy, &pipeline)?;
    let stoplist = load_label_stoplist(cfg, &pipeline)?;
    let labels = label_hierarchy(&hierarchy, &index, &cfg.specs, cfg.top_n, &stoplist)?;
    let tsv_path = cfg.out.join("labels.tsv");
    let json_path = cfg.out.join("labels.json");
    write_text(&tsv_path, &labels_tsv(&labels))?;
    write_text(&json_path, &labels_json(&labels))?;
    println!("classes_labeled={}", labels.results.len());
    println!("unlabelable={}", labels.unlabelable_count());
    println!("skipped_small={}", labels.skipped_small.len());
    println!("skipped_unscoreable={}", labels.skipped_unscoreable.len());
    println!("labels_tsv={}", tsv_path.display());
    println!("labels_json={}", json_path.display());
    Ok(())
}

/// One machine-parsable stdout record per evaluation report.
fn report_line(report: &EvaluationReport, json: &Path, tsv: &Path) -> String {
    format!(
        "approach={} fields={} top_n={} n_total={} n_successful={} match_rate={} max_possible={} json={} tsv={}",
        report.approach,
        report.fields_used,
        report.n,
        report.n_total,
        report.n_successful,
        report.match_rate,
        report.max_possible,
        json.display(),
        tsv.display(),
    )
}

/// File-name fragment for an approach or field set.
fn sanitize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect();
    let mut out = String::with_capacity(mapped.len());
    for c in mapped.chars() {
        if c == '-' && out.ends_with('-') {
            continue;
        }
        out.push(c);
    }
    out.trim_matches('-').to_string()
}

fn cmd_evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let pipeline = load_pipeline(cfg)?;
    let hierarchy = load_hierarchy(cfg, &pipeline)?;
    let stoplist = load_label_stoplist(cfg, &pipeline)?;
    let options = EvalOptions {
        exclude_root: cfg.exclude_root,
        stoplist,
    };

    let Some(plan) = &cfg.sweep else {
        let index = obtain_index(cfg, &hierarchy, &pipeline)?;
        let report = evaluate(&hierarchy, &index, &cfg.specs, cfg.top_n, &options)?;
        let json_path = cfg.out.join("evaluation.json");
        let tsv_path = cfg.out.join("evaluation.tsv");
        let plot_path = cfg.out.join("plot.csv");
        write_text(&json_path, &evaluation_json(&report))?;
        write_text(&tsv_path, &evaluation_tsv(&report))?;
        write_text(&plot_path, &plot_csv(std::slice::from_ref(&report)))?;
        println!("{}", report_line(&report, &json_path, &tsv_path));
        println!("plot_csv={}", plot_path.display());
        return Ok(());
    };

    // Sweep: one index per field set, shared by every approach and N.
    let corpus = load_corpus(cfg)?;
    let address_stopwords = load_address_stopwords(cfg, &pipeline)?;
    let mut reports = Vec::new();
    for fields in &plan.field_sets {
        let index = TermIndex::build(
            &corpus,
            &hierarchy,
            fields,
            cfg.mode,
            &pipeline,
            &address_stopwords,
            cfg.threshold,
        )?;
        for spec in &plan.approaches {
            for &n in &plan.top_ns {
                let report = evaluate(&hierarchy, &index, &SpecByLevel::uniform(*spec), n, &options)
                    .map_err(|e| {
                        CliError::from(e).with_context(format!(
                            "sweep combination approach={spec} fields={fields} top_n={n}"
                        ))
                    })?;
                let stem = format!(
                    "eval_{}_{}_n{n}",
                    sanitize(&spec.to_string()),
                    sanitize(&fields.to_string())
                );
                let json_path = cfg.out.join(format!("{stem}.json"));
                let tsv_path = cfg.out.join(format!("{stem}.tsv"));
                write_text(&json_path, &evaluation_json(&report))?;
                write_text(&tsv_path, &evaluation_tsv(&report))?;
                println!("{}", report_line(&report, &json_path, &tsv_path));
                reports.push(report);
            }
        }
    }
    let plot_path = cfg.out.join("plot.csv");
    write_text(&plot_path, &plot_csv(&reports))?;
    println!("plot_csv={}", plot_path.display());
    Ok(())
}

fn cmd_synth(cfg: &RunConfig) -> Result<(), CliError> {
    let data = generate(cfg.seed, &cfg.synth)?;
    let files = data.write_files(&cfg.out)?;
    println!("publications={}", data.records.len());
    println!("classes_generated={}", data.classes.len());
    println!("corpus={}", files.corpus.display());
    println!("classes={}", files.classes.display());
    println!("assignments={}", files.assignments.display());
    Ok(())
}
