//! Command-line pipelines: generate perturbed domains, featurize corpora,
//! train and score the forest classifiers, run evaluation grids, build and
//! query the typosquat filter, and emit analysis data.
//!
//! Everything is reproducible: all randomness flows from explicit seeds
//! (`--seed` takes either a 64-bit integer or a `YYYY-MM-DD` date), standard
//! output carries only data, and diagnostics go to standard error.
//!
//! Exit codes: 0 success, 2 input/ingestion error, 3 generation exhausted,
//! 4 schema mismatch, 5 degenerate training data, 6 evaluation produced no
//! usable cell, 7 infeasible filter plan.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dgalab::analysis::{compare_features, length_stats, write_length_stats, AnalysisFeature};
use dgalab::charbot::{
    generate_batch, seed_from_date, write_domains, write_provenance, CharbotConfig, CharbotError,
    DEFAULT_ALPHABET,
};
use dgalab::defense::{
    build_filter, plan_filter, DefenseError, FilterOptions, TyposquatFilter,
    DEFAULT_MEMORY_BUDGET_BYTES,
};
use dgalab::domain::{
    load_alexa, load_domain_list, load_query_log, parse_domain, split_train_test, weak_label,
    Dataset, Domain, DomainError, Label,
};
use dgalab::eval::{
    emit_report, run_experiment, EvalError, ExperimentInputs, ModelKind, ReportFormat,
};
use dgalab::features::{
    featurize_dataset, FeatureError, FeatureMatrix, FeatureSchema, NgramTables, SchemaName,
    TldContext,
};
use dgalab::forest::{score_matrix, train_brf, train_fanci, ForestError, ForestModel};
use dgalab::ngram::NgramTable;

#[derive(Parser)]
#[command(
    name = "dgalab",
    version,
    about = "Domain-generation attack and defense laboratory"
)]
struct Cli {
    /// Config file of `key = value` lines (env override prefix DGALAB_)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for generated files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress messages on standard error
    #[arg(long, global = true)]
    quiet: bool,
    /// Default seed: a 64-bit integer or a YYYY-MM-DD date
    #[arg(long, global = true)]
    seed: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate perturbed domains from a ranked benign list
    Generate(GenerateArgs),
    /// Extract a feature matrix from domain lists
    Featurize(FeaturizeArgs),
    /// Train a forest model from a feature matrix
    Train(TrainArgs),
    /// Score a domain list against a trained model
    Score(ScoreArgs),
    /// Run a baseline-vs-augmented evaluation grid from a manifest
    Evaluate(EvaluateArgs),
    /// Build or query the near-duplicate typosquat filter
    #[command(subcommand)]
    Defend(DefendCommand),
    /// Emit density curves or length statistics
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Weak-label a passive-DNS query log
    WeakLabel(WeakLabelArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Seed date (YYYY-MM-DD); falls back to --seed
    #[arg(long)]
    date: Option<String>,
    /// Number of unique domains to generate
    #[arg(short = 'n', long, default_value_t = 10_000)]
    count: usize,
    /// Ranked benign source file (rank,domain CSV)
    #[arg(long)]
    sources: Option<PathBuf>,
    /// Minimum source SLD length
    #[arg(long, default_value_t = 6)]
    min_sld_len: usize,
    /// Maximum number of source domains
    #[arg(long, default_value_t = 10_000)]
    limit: usize,
    /// Output file stem (default derives from the seed)
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Feature schema: fanci, brf or full
    #[arg(long)]
    schema: SchemaName,
    /// Ranked benign file(s) (rank,domain CSV), labeled benign
    #[arg(long = "alexa")]
    alexa: Vec<PathBuf>,
    /// Plain benign domain list(s)
    #[arg(long = "benign")]
    benign: Vec<PathBuf>,
    /// Plain malicious domain list(s)
    #[arg(long = "malicious")]
    malicious: Vec<PathBuf>,
    /// Minimum SLD length for --alexa files
    #[arg(long, default_value_t = 1)]
    min_sld_len: usize,
    /// Row limit for --alexa files
    #[arg(long, default_value_t = usize::MAX)]
    limit: usize,
    /// Write the n-gram tables built from the benign rows to this directory
    #[arg(long)]
    save_tables: Option<PathBuf>,
    /// Load tables from the configured table2/table3 files instead of
    /// deriving them from this run's benign rows
    #[arg(long)]
    use_saved_tables: bool,
    /// Output matrix CSV path
    #[arg(long)]
    out_matrix: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Model kind: fanci or brf
    kind: ModelKind,
    /// Feature matrix CSV (schema inferred from its header)
    #[arg(long)]
    matrix: PathBuf,
    /// Output model path
    #[arg(long)]
    out_model: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Domain list to score
    #[arg(long)]
    domains: PathBuf,
    /// Write `domain,score` CSV here instead of standard output
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Experiment manifest (key = value lines)
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Subcommand)]
enum DefendCommand {
    /// Enumerate substitution variants of a source list into a filter file
    Build(DefendBuildArgs),
    /// Query a filter for one or more domains
    Check(DefendCheckArgs),
}

#[derive(Args)]
struct DefendBuildArgs {
    /// Ranked benign source file (rank,domain CSV)
    #[arg(long)]
    sources: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    min_sld_len: usize,
    #[arg(long, default_value_t = 10_000)]
    limit: usize,
    /// Number of substitutions to cover
    #[arg(short = 'k', long, default_value_t = 2)]
    edits: usize,
    #[arg(long, default_value_t = 0.01)]
    target_fpr: f64,
    /// Memory budget for the bit array, in bytes
    #[arg(long)]
    budget_bytes: Option<u64>,
    /// Also insert the unperturbed source SLDs
    #[arg(long)]
    include_original: bool,
    /// Output filter path (default <out>/typosquat.filter)
    #[arg(long)]
    out_filter: Option<PathBuf>,
}

#[derive(Args)]
struct DefendCheckArgs {
    /// Filter file built by `defend build`
    #[arg(long)]
    filter: PathBuf,
    /// Domains given inline
    #[arg(long = "domain")]
    domain: Vec<String>,
    /// Domain list file
    #[arg(long)]
    domains: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Kernel density curves of feature distributions per dataset
    Kde(AnalyzeKdeArgs),
    /// Length statistics per dataset
    Lengths(AnalyzeLengthsArgs),
}

#[derive(Args)]
struct AnalyzeKdeArgs {
    /// Datasets as name=path pairs (plain domain lists)
    #[arg(long = "dataset", required = true)]
    datasets: Vec<String>,
    /// Features to compare (default: the six standard panels)
    #[arg(long)]
    features: Option<String>,
    /// Benign corpus for the n-gram tables (plain domain list)
    #[arg(long)]
    tables_from: PathBuf,
}

#[derive(Args)]
struct AnalyzeLengthsArgs {
    /// Datasets as name=path pairs (plain domain lists)
    #[arg(long = "dataset", required = true)]
    datasets: Vec<String>,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct WeakLabelArgs {
    /// Query log CSV: domain,timestamp,response
    #[arg(long)]
    log: PathBuf,
    /// Write the benign list here instead of standard output
    #[arg(long)]
    out_file: Option<PathBuf>,
}

/// Errors carrying their process exit code.
enum CliError {
    Input(String),
    Exhausted(String),
    Schema(String),
    Degenerate(String),
    NoUsableCell(String),
    Infeasible(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Exhausted(_) => 3,
            CliError::Schema(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::NoUsableCell(_) => 6,
            CliError::Infeasible(_) => 7,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m)
            | CliError::Exhausted(m)
            | CliError::Schema(m)
            | CliError::Degenerate(m)
            | CliError::NoUsableCell(m)
            | CliError::Infeasible(m) => m,
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CharbotError> for CliError {
    fn from(e: CharbotError) -> Self {
        match e {
            CharbotError::ExhaustedAttempts { .. } => CliError::Exhausted(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::SchemaMismatch { .. } | FeatureError::MissingTable { .. } => {
                CliError::Schema(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ForestError> for CliError {
    fn from(e: ForestError) -> Self {
        match e {
            ForestError::SingleClassData | ForestError::DegenerateData(_) => {
                CliError::Degenerate(e.to_string())
            }
            ForestError::SchemaMismatch { .. } => CliError::Schema(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Feature(inner) => inner.into(),
            EvalError::Forest(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<DefenseError> for CliError {
    fn from(e: DefenseError) -> Self {
        match e {
            DefenseError::InfeasiblePlan {
                ref plan,
                predicted_insertions,
                needed_bytes,
                budget_bytes,
            } => CliError::Infeasible(format!(
                "infeasible filter plan: {predicted_insertions} predicted insertions over {} sources \
                 (mean SLD length {:.1}, k={}) need {needed_bytes} bytes, over the {budget_bytes}-byte budget",
                plan.n_sources, plan.mean_sld_len, plan.k
            )),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<dgalab::analysis::AnalysisError> for CliError {
    fn from(e: dgalab::analysis::AnalysisError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Key = value config file with `DGALAB_<KEY>` environment overrides.
struct Config {
    values: HashMap<String, String>,
}

impl Config {
    fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path = explicit
            .map(PathBuf::from)
            .or_else(|| std::env::var("DGALAB_CONFIG").ok().map(PathBuf::from));
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Input(format!(
                        "{} line {}: expected key = value",
                        path.display(),
                        idx + 1
                    ))
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> Option<String> {
        std::env::var(format!("DGALAB_{}", key.to_uppercase()))
            .ok()
            .or_else(|| self.values.get(key).cloned())
    }

    fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }
}

struct Ctx {
    config: Config,
    out_dir: PathBuf,
    quiet: bool,
    seed_arg: Option<String>,
}

impl Ctx {
    fn info(&self, msg: &str) {
        if !self.quiet {
            eprintln!("dgalab: {msg}");
        }
    }

    fn seed(&self, explicit: Option<&str>) -> Result<u64, CliError> {
        let text = explicit
            .map(str::to_string)
            .or_else(|| self.seed_arg.clone())
            .or_else(|| self.config.get("seed"))
            .ok_or_else(|| {
                CliError::Input("no seed given (use --seed <u64|YYYY-MM-DD>)".to_string())
            })?;
        parse_seed(&text)
    }

    fn tld_context(&self) -> Result<TldContext, CliError> {
        let valid = self.config.get_path("valid_tlds").ok_or_else(|| {
            CliError::Input("valid_tlds not configured (set it in the config file)".to_string())
        })?;
        let malicious = self.config.get_path("malicious_tlds").ok_or_else(|| {
            CliError::Input("malicious_tlds not configured (set it in the config file)".to_string())
        })?;
        Ok(TldContext::from_files(&valid, &malicious)?)
    }

    /// Tables from configured table files, or rebuilt from a benign corpus.
    fn tables(&self, fallback_benign: Option<&Dataset>) -> Result<NgramTables, CliError> {
        match (
            self.config.get_path("table2"),
            self.config.get_path("table3"),
        ) {
            (Some(two), Some(three)) => Ok(NgramTables::new(
                NgramTable::load(&two)?,
                NgramTable::load(&three)?,
            )),
            _ => match fallback_benign {
                Some(benign) => Ok(NgramTables::from_benign(benign)?),
                None => Err(CliError::Schema(
                    "n-gram tables required: configure table2/table3 or provide a corpus"
                        .to_string(),
                )),
            },
        }
    }
}

fn parse_seed(text: &str) -> Result<u64, CliError> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    Ok(seed_from_date(text)?)
}

fn domains_of(dataset: &Dataset) -> Vec<Domain> {
    dataset.iter().map(|e| e.domain.clone()).collect()
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dgalab: {}", e.message());
            return ExitCode::from(e.code());
        }
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var("DGALAB_OUT").ok().map(PathBuf::from))
        .or_else(|| config.get_path("out_dir"))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx {
        config,
        out_dir,
        quiet: cli.quiet,
        seed_arg: cli.seed.clone(),
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(&ctx, args),
        Command::Featurize(args) => cmd_featurize(&ctx, args),
        Command::Train(args) => cmd_train(&ctx, args),
        Command::Score(args) => cmd_score(&ctx, args),
        Command::Evaluate(args) => cmd_evaluate(&ctx, args),
        Command::Defend(DefendCommand::Build(args)) => cmd_defend_build(&ctx, args),
        Command::Defend(DefendCommand::Check(args)) => cmd_defend_check(&ctx, args),
        Command::Analyze(AnalyzeCommand::Kde(args)) => cmd_analyze_kde(&ctx, args),
        Command::Analyze(AnalyzeCommand::Lengths(args)) => cmd_analyze_lengths(&ctx, args),
        Command::WeakLabel(args) => cmd_weak_label(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dgalab: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn cmd_generate(ctx: &Ctx, args: GenerateArgs) -> Result<(), CliError> {
    let seed_text = args.date.clone().or_else(|| ctx.seed_arg.clone());
    let seed = ctx.seed(seed_text.as_deref())?;
    let sources_path = args
        .sources
        .or_else(|| ctx.config.get_path("sources"))
        .ok_or_else(|| CliError::Input("no source file (use --sources)".to_string()))?;
    let loaded = load_alexa(&sources_path, args.min_sld_len, args.limit)?;
    if loaded.skipped_lines > 0 {
        ctx.info(&format!(
            "skipped {} unparseable source line(s)",
            loaded.skipped_lines
        ));
    }
    let sources = domains_of(&loaded.dataset);
    ctx.info(&format!(
        "generating {} domains from {} sources under seed {seed}",
        args.count,
        sources.len()
    ));
    let cfg = CharbotConfig::default();
    let records = generate_batch(&cfg, &sources, seed, args.count)?;

    let stem = args
        .name
        .unwrap_or_else(|| format!("charbot_{}", seed_text.unwrap_or_else(|| seed.to_string())));
    let list_path = ctx.out_dir.join(format!("{stem}.txt"));
    let sidecar_path = ctx.out_dir.join(format!("{stem}_provenance.csv"));
    let mut list = Vec::new();
    write_domains(&records, &mut list).expect("writing to memory");
    write_output(&list_path, &list)?;
    let mut sidecar = Vec::new();
    write_provenance(&records, &mut sidecar).expect("writing to memory");
    write_output(&sidecar_path, &sidecar)?;
    ctx.info(&format!(
        "wrote {} and {}",
        list_path.display(),
        sidecar_path.display()
    ));
    Ok(())
}

fn assemble_dataset(
    name: &str,
    alexa: &[PathBuf],
    benign: &[PathBuf],
    malicious: &[PathBuf],
    min_sld_len: usize,
    limit: usize,
) -> Result<Dataset, CliError> {
    let mut dataset = Dataset::new(name);
    for path in alexa {
        let loaded = load_alexa(path, min_sld_len, limit)?;
        for ex in loaded.dataset.iter() {
            dataset.insert(ex.clone());
        }
    }
    for path in benign {
        let loaded = load_domain_list(path, Label::Benign, "benign")?;
        for ex in loaded.dataset.iter() {
            dataset.insert(ex.clone());
        }
    }
    for path in malicious {
        let loaded = load_domain_list(path, Label::Malicious, "malicious")?;
        for ex in loaded.dataset.iter() {
            dataset.insert(ex.clone());
        }
    }
    if dataset.is_empty() {
        return Err(CliError::Input("no input domains".to_string()));
    }
    Ok(dataset)
}

fn cmd_featurize(ctx: &Ctx, args: FeaturizeArgs) -> Result<(), CliError> {
    let dataset = assemble_dataset(
        "featurize",
        &args.alexa,
        &args.benign,
        &args.malicious,
        args.min_sld_len,
        args.limit,
    )?;
    let tld_ctx = ctx.tld_context()?;
    let schema = FeatureSchema::of(args.schema);
    let benign_part = Dataset::from_examples(
        "benign",
        dataset.iter().filter(|e| e.label == Label::Benign).cloned(),
    );
    let tables = if matches!(args.schema, SchemaName::Fanci) {
        NgramTables::none()
    } else if args.use_saved_tables {
        ctx.tables(None)?
    } else if benign_part.is_empty() {
        return Err(CliError::Schema(
            "no benign rows to derive n-gram tables from (or pass --use-saved-tables)".to_string(),
        ));
    } else {
        NgramTables::from_benign(&benign_part)?
    };
    if let Some(dir) = &args.save_tables {
        if let (Some(two), Some(three)) = (&tables.bigram, &tables.trigram) {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
            two.save(&dir.join("ngram2.tsv"))?;
            three.save(&dir.join("ngram3.tsv"))?;
            ctx.info(&format!("saved tables under {}", dir.display()));
        }
    }
    let matrix = featurize_dataset(&dataset, &schema, &tables, &tld_ctx)?;
    matrix.save_csv(&args.out_matrix)?;
    ctx.info(&format!(
        "wrote {} ({} rows, {} columns)",
        args.out_matrix.display(),
        matrix.n_rows(),
        matrix.width()
    ));
    Ok(())
}

fn cmd_train(ctx: &Ctx, args: TrainArgs) -> Result<(), CliError> {
    let matrix = FeatureMatrix::load_csv(&args.matrix)?;
    let seed = ctx.seed(None)?;
    let model = match args.kind {
        ModelKind::Fanci => train_fanci(&matrix, seed)?,
        ModelKind::Brf => train_brf(&matrix, seed)?,
    };
    model.save(&args.out_model)?;
    ctx.info(&format!(
        "trained {} trees on {} rows -> {}",
        model.trees.len(),
        matrix.n_rows(),
        args.out_model.display()
    ));
    Ok(())
}

fn cmd_score(ctx: &Ctx, args: ScoreArgs) -> Result<(), CliError> {
    let model = ForestModel::load(&args.model)?;
    let loaded = load_domain_list(&args.domains, Label::Malicious, "score")?;
    let tld_ctx = ctx.tld_context()?;
    let schema = FeatureSchema::of(model.schema);
    let tables = if matches!(model.schema, SchemaName::Fanci) {
        NgramTables::none()
    } else {
        ctx.tables(None)?
    };
    let matrix = featurize_dataset(&loaded.dataset, &schema, &tables, &tld_ctx)?;
    let scores = score_matrix(&model, &matrix)?;
    let mut out = String::from("domain,score\n");
    for (example, score) in loaded.dataset.iter().zip(&scores) {
        out.push_str(&format!("{},{score}\n", example.domain.render()));
    }
    match &args.out_file {
        Some(path) => write_output(path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}

/// Manifest keys: benign, malicious, benign_min_sld_len, benign_limit,
/// model, seed, train_fraction, split_seed, target_fpr (repeatable),
/// valid_tlds, malicious_tlds, augment (name:path, repeatable),
/// adversarial (name:path, repeatable).
struct Manifest {
    single: HashMap<String, String>,
    repeated: HashMap<String, Vec<String>>,
}

impl Manifest {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut single = HashMap::new();
        let mut repeated: HashMap<String, Vec<String>> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!(
                    "{} line {}: expected key = value",
                    path.display(),
                    idx + 1
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if matches!(key.as_str(), "target_fpr" | "augment" | "adversarial") {
                repeated.entry(key).or_default().push(value);
            } else {
                single.insert(key, value);
            }
        }
        Ok(Self { single, repeated })
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.single
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Input(format!("manifest is missing `{key}`")))
    }

    fn named_sets(&self, key: &str) -> Result<Vec<(String, PathBuf)>, CliError> {
        self.repeated
            .get(key)
            .map(Vec::as_slice)
            .unwrap_or(&[])
            .iter()
            .map(|entry| {
                entry
                    .split_once(':')
                    .map(|(name, path)| (name.trim().to_string(), PathBuf::from(path.trim())))
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "manifest `{key}` entries are name:path, got {entry:?}"
                        ))
                    })
            })
            .collect()
    }
}

fn cmd_evaluate(ctx: &Ctx, args: EvaluateArgs) -> Result<(), CliError> {
    let manifest = Manifest::load(&args.manifest)?;
    let benign_path = PathBuf::from(manifest.require("benign")?);
    let malicious_path = PathBuf::from(manifest.require("malicious")?);
    let min_sld_len: usize = manifest
        .single
        .get("benign_min_sld_len")
        .map(|v| {
            v.parse()
                .map_err(|_| CliError::Input("bad benign_min_sld_len".into()))
        })
        .transpose()?
        .unwrap_or(1);
    let limit: usize = manifest
        .single
        .get("benign_limit")
        .map(|v| {
            v.parse()
                .map_err(|_| CliError::Input("bad benign_limit".into()))
        })
        .transpose()?
        .unwrap_or(usize::MAX);
    let model_kind: ModelKind = manifest
        .require("model")?
        .parse()
        .map_err(CliError::Input)?;
    let seed = parse_seed(manifest.require("seed")?)?;
    let train_fraction: f64 = manifest
        .single
        .get("train_fraction")
        .map(|v| {
            v.parse()
                .map_err(|_| CliError::Input("bad train_fraction".into()))
        })
        .transpose()?
        .unwrap_or(0.8);
    let split_seed = manifest
        .single
        .get("split_seed")
        .map(|v| parse_seed(v))
        .transpose()?
        .unwrap_or(seed);
    let target_fprs: Vec<f64> = match manifest.repeated.get("target_fpr") {
        Some(values) => values
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::Input(format!("bad target_fpr {v:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![0.001, 0.01],
    };
    if !target_fprs.windows(2).all(|w| w[0] < w[1])
        || !target_fprs.iter().all(|&t| t > 0.0 && t < 1.0)
    {
        return Err(CliError::Input(
            "target_fpr values must be ascending and inside (0, 1)".to_string(),
        ));
    }
    let tld_ctx = match (
        manifest.single.get("valid_tlds"),
        manifest.single.get("malicious_tlds"),
    ) {
        (Some(v), Some(m)) => TldContext::from_files(Path::new(v), Path::new(m))?,
        _ => ctx.tld_context()?,
    };

    let benign = load_alexa(&benign_path, min_sld_len, limit)?.dataset;
    let malicious = load_domain_list(&malicious_path, Label::Malicious, "malicious")?.dataset;
    let combined = benign.merged(&malicious, "base");
    let (base_train, base_test) = split_train_test(&combined, train_fraction, split_seed)?;
    let train_benign = Dataset::from_examples(
        "train-benign",
        base_train
            .iter()
            .filter(|e| e.label == Label::Benign)
            .cloned(),
    );
    let tables = if matches!(model_kind, ModelKind::Fanci) {
        NgramTables::none()
    } else {
        NgramTables::from_benign(&train_benign)?
    };

    let mut augment_sets = Vec::new();
    for (name, path) in manifest.named_sets("augment")? {
        augment_sets.push((
            name.clone(),
            load_domain_list(&path, Label::Malicious, &name)?.dataset,
        ));
    }
    let mut adversarial_sets = Vec::new();
    for (name, path) in manifest.named_sets("adversarial")? {
        adversarial_sets.push((
            name.clone(),
            load_domain_list(&path, Label::Malicious, &name)?.dataset,
        ));
    }

    let inputs = ExperimentInputs {
        base_train: &base_train,
        base_test: &base_test,
        adversarial_train_sets: augment_sets.iter().map(|(n, d)| (n.clone(), d)).collect(),
        adversarial_test_sets: adversarial_sets
            .iter()
            .map(|(n, d)| (n.clone(), d))
            .collect(),
        model_kind,
        seed,
        target_fprs,
        tables: &tables,
        tld_ctx: &tld_ctx,
    };
    ctx.info(&format!(
        "evaluating {model_kind:?} on {} train / {} test rows, {} augmentation set(s)",
        base_train.len(),
        base_test.len(),
        inputs.adversarial_train_sets.len()
    ));
    let report = run_experiment(&inputs)?;
    let usable = report.rows.iter().filter(|r| r.status == "ok").count();
    for format in [
        ReportFormat::Json,
        ReportFormat::Csv,
        ReportFormat::RocPoints,
    ] {
        for path in emit_report(&report, format, &ctx.out_dir)? {
            ctx.info(&format!("wrote {}", path.display()));
        }
    }
    if usable == 0 {
        return Err(CliError::NoUsableCell(
            "every grid row failed; see report.json for per-row errors".to_string(),
        ));
    }
    Ok(())
}

fn cmd_defend_build(ctx: &Ctx, args: DefendBuildArgs) -> Result<(), CliError> {
    let sources_path = args
        .sources
        .or_else(|| ctx.config.get_path("sources"))
        .ok_or_else(|| CliError::Input("no source file (use --sources)".to_string()))?;
    let sources = domains_of(&load_alexa(&sources_path, args.min_sld_len, args.limit)?.dataset);
    let budget = args
        .budget_bytes
        .or_else(|| {
            ctx.config
                .get("memory_budget_bytes")
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(DEFAULT_MEMORY_BUDGET_BYTES);
    let options = FilterOptions {
        include_original: args.include_original,
        memory_budget_bytes: budget,
        ..Default::default()
    };
    let plan = plan_filter(
        &sources,
        args.edits,
        &DEFAULT_ALPHABET,
        args.target_fpr,
        &options,
    )?;
    ctx.info(&format!(
        "plan: {} insertions over {} sources -> {} bits, {} hashes",
        plan.predicted_insertions, plan.n_sources, plan.m_bits, plan.hash_count
    ));
    let filter = build_filter(&sources, &DEFAULT_ALPHABET, &plan)?;
    let out_path = args
        .out_filter
        .unwrap_or_else(|| ctx.out_dir.join("typosquat.filter"));
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
        }
    }
    filter.save(&out_path)?;
    ctx.info(&format!(
        "wrote {} ({} insertions)",
        out_path.display(),
        filter.inserted()
    ));
    Ok(())
}

fn cmd_defend_check(_ctx: &Ctx, args: DefendCheckArgs) -> Result<(), CliError> {
    let filter = TyposquatFilter::load(&args.filter)?;
    let mut queries: Vec<Domain> = Vec::new();
    for raw in &args.domain {
        queries.push(parse_domain(raw)?);
    }
    if let Some(path) = &args.domains {
        let loaded = load_domain_list(path, Label::Malicious, "check")?;
        queries.extend(loaded.dataset.iter().map(|e| e.domain.clone()));
    }
    if queries.is_empty() {
        return Err(CliError::Input(
            "nothing to check (use --domain or --domains)".to_string(),
        ));
    }
    for domain in &queries {
        println!("{},{}", domain.render(), filter.check(domain));
    }
    Ok(())
}

fn parse_named_datasets(specs: &[String]) -> Result<Vec<(String, Dataset)>, CliError> {
    let mut out = Vec::new();
    for spec in specs {
        let (name, path) = spec.split_once('=').ok_or_else(|| {
            CliError::Input(format!("--dataset entries are name=path, got {spec:?}"))
        })?;
        let loaded = load_domain_list(Path::new(path.trim()), Label::Benign, name.trim())?;
        let mut ds = loaded.dataset;
        ds.name = name.trim().to_string();
        out.push((name.trim().to_string(), ds));
    }
    Ok(out)
}

fn cmd_analyze_kde(ctx: &Ctx, args: AnalyzeKdeArgs) -> Result<(), CliError> {
    let datasets = parse_named_datasets(&args.datasets)?;
    let corpus = load_domain_list(&args.tables_from, Label::Benign, "tables")?.dataset;
    let tables = NgramTables::from_benign(&corpus)?;
    let features: Vec<AnalysisFeature> = match &args.features {
        None => AnalysisFeature::standard_panels().to_vec(),
        Some(list) => list
            .split(',')
            .map(|f| f.trim().parse().map_err(CliError::Input))
            .collect::<Result<_, _>>()?,
    };
    let refs: Vec<(&str, &Dataset)> = datasets
        .iter()
        .map(|(name, ds)| (name.as_str(), ds))
        .collect();
    let curves = compare_features(&refs, &features, &tables)?;
    fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", ctx.out_dir.display())))?;
    for curve in &curves {
        let path = curve.save_csv(&ctx.out_dir)?;
        ctx.info(&format!("wrote {}", path.display()));
    }
    Ok(())
}

fn cmd_analyze_lengths(ctx: &Ctx, args: AnalyzeLengthsArgs) -> Result<(), CliError> {
    let datasets = parse_named_datasets(&args.datasets)?;
    let mut stats = Vec::new();
    for (_, ds) in &datasets {
        stats.push(length_stats(ds)?);
    }
    match &args.out_file {
        Some(path) => {
            write_length_stats(&stats, path)?;
            ctx.info(&format!("wrote {}", path.display()));
        }
        None => {
            println!("dataset,mean,std,count");
            for s in &stats {
                println!("{},{},{},{}", s.dataset, s.mean, s.std, s.count);
            }
        }
    }
    Ok(())
}

fn cmd_weak_label(ctx: &Ctx, args: WeakLabelArgs) -> Result<(), CliError> {
    let records = load_query_log(&args.log)?;
    let labeled = weak_label(&records);
    ctx.info(&format!(
        "{} record(s) -> {} weakly-labeled benign domain(s)",
        records.len(),
        labeled.len()
    ));
    let mut out = String::new();
    for example in labeled.iter() {
        out.push_str(&example.domain.render());
        out.push('\n');
    }
    match &args.out_file {
        Some(path) => write_output(path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}
