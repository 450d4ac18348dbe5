use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cxr_icl::corpus::{self, ReportRecord};
use cxr_icl::corruption::{corrupt_test_set, train_bpe, DEFAULT_MERGES};
use cxr_icl::description::{DescriptionMode, DEFAULT_THRESHOLD};
use cxr_icl::prompting::Ablation;
use cxr_icl::retrieval::{build_index, Bm25Params};
use cxr_icl::runner::{
    emit_report, load_corrupted_sets, load_report, run_experiment, validate_corruption, write_corrupted_sets,
    BackendConfig, DataSource, ExperimentConfig, RunError, TrendVerdict,
};

#[derive(Parser)]
#[command(name = "cxr-icl", version, about = "Few-shot impression generation experiments")]
struct Cli {
    /// Experiment config (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter and split a corpus, or synthesize one.
    Prepare(PrepareArgs),
    /// Write masked copies of a test set.
    Corrupt(CorruptArgs),
    /// Build and save a BM25 index over training findings.
    Index(IndexArgs),
    /// Run the full experiment sweep and write the report.
    Run(RunArgs),
    /// Check that label agreement falls as the corruption rate rises.
    ValidateCorruption(ValidateArgs),
    /// Re-render report files from a run directory's rows.
    Report(ReportArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Line-delimited corpus to load.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Probability CSV joined to records by id.
    #[arg(long, requires = "input")]
    probabilities: Option<PathBuf>,
    /// Generate this many synthetic records instead of loading.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Drop records flagged as unsuitable before filtering.
    #[arg(long)]
    drop_unsuitable: bool,
    /// Skip the finding-length quartile filter.
    #[arg(long)]
    no_length_filter: bool,
    #[arg(long, default_value_t = 500)]
    train_size: usize,
    #[arg(long, default_value_t = 0)]
    validation_size: usize,
    #[arg(long, default_value_t = 50)]
    test_size: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    /// Findings used to learn the subword vocabulary.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated rates.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5])]
    rates: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MERGES)]
    merges: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "corrupted")]
    out: PathBuf,
}

#[derive(Args)]
struct Bm25Args {
    #[arg(long)]
    bm25_k1: Option<f64>,
    #[arg(long)]
    bm25_b: Option<f64>,
}

impl Bm25Args {
    fn apply(&self, params: &mut Bm25Params) {
        if let Some(k1) = self.bm25_k1 {
            params.k1 = k1;
        }
        if let Some(b) = self.bm25_b {
            params.b = b;
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    train: PathBuf,
    #[command(flatten)]
    bm25: Bm25Args,
    #[arg(long, default_value = "bm25.index")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, requires = "test")]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    #[arg(long, requires = "train")]
    probabilities: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Comma-separated shot counts.
    #[arg(long, value_delimiter = ',')]
    shots: Option<Vec<usize>>,
    /// Comma-separated: full, no_text, no_image, no_text_no_image, or "all".
    #[arg(long, value_delimiter = ',')]
    ablation: Option<Vec<String>>,
    #[arg(long, value_parser = ["threshold", "probability"])]
    description_mode: Option<String>,
    #[arg(long)]
    description_threshold: Option<f64>,
    #[command(flatten)]
    bm25: Bm25Args,
    /// Mock rule, e.g. echo-first-shot-impression, identity-finding, fixed:<text>.
    #[arg(long)]
    mock: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Uncorrupted test set.
    #[arg(long)]
    test: PathBuf,
    /// Output directory of `corrupt`.
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory holding rows.jsonl and summary.json.
    #[arg(long)]
    from: PathBuf,
    /// Defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig, RunError> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn usage(message: impl Into<String>) -> RunError {
    RunError::Config(message.into())
}

fn prepare(args: PrepareArgs, config: ExperimentConfig) -> Result<(), RunError> {
    let seed = args.seed.unwrap_or(config.seed);
    let mut records = match args.synthetic {
        Some(n) => {
            let synthetic = corpus::generate_synthetic(n, seed)?;
            std::fs::create_dir_all(&args.out).map_err(|e| RunError::Io { path: args.out.clone(), source: e })?;
            corpus::save_gold_labels(args.out.join("gold_labels.jsonl"), &synthetic)?;
            synthetic.records
        }
        None => {
            let mut records = corpus::load_corpus(args.input.as_ref().expect("clap enforces input"))?;
            if let Some(path) = &args.probabilities {
                let matched = corpus::attach_probabilities(&mut records, &corpus::load_probability_sidecar(path)?);
                log::info!("attached probabilities to {matched} of {} records", records.len());
            }
            records
        }
    };
    if args.drop_unsuitable {
        let before = records.len();
        records.retain(|r| !corpus::flag_unsuitable(r));
        log::info!("dropped {} unsuitable records", before - records.len());
    }
    if !args.no_length_filter {
        let before = records.len();
        records = corpus::filter_by_length_quartiles(&records)?;
        log::info!("length filter kept {} of {before} records", records.len());
    }
    let split = corpus::split_corpus(&records, seed, (args.train_size, args.validation_size, args.test_size))?;
    let parts: [(&str, &[ReportRecord]); 3] =
        [("train.jsonl", &split.train), ("validation.jsonl", &split.validation), ("test.jsonl", &split.test)];
    for (name, part) in parts {
        corpus::save_corpus(args.out.join(name), part)?;
        println!("{}\t{}", args.out.join(name).display(), part.len());
    }
    Ok(())
}

fn corrupt(args: CorruptArgs, config: ExperimentConfig) -> Result<(), RunError> {
    let seed = args.seed.unwrap_or(config.seed);
    let train = corpus::load_corpus(&args.train)?;
    let test = corpus::load_corpus(&args.test)?;
    let findings: Vec<&str> = train.iter().map(|r| r.finding.as_str()).collect();
    let vocab = train_bpe(&findings, args.merges)?;
    let sets = corrupt_test_set(&test, &args.rates, seed, &vocab)?;
    write_corrupted_sets(&args.out, &sets, seed, args.merges)?;
    let merges_path = args.out.join("bpe-merges.txt");
    std::fs::write(&merges_path, vocab.to_text()).map_err(|e| RunError::Io { path: merges_path, source: e })?;
    for set in &sets {
        println!("rate {}\tmasked {:.4} of {} subwords", set.rate, set.masked_fraction(), set.total_count);
    }
    Ok(())
}

fn index(args: IndexArgs, config: ExperimentConfig) -> Result<(), RunError> {
    let mut params = config.bm25;
    args.bm25.apply(&mut params);
    let train = corpus::load_corpus(&args.train)?;
    let docs: Vec<(&str, &str)> = train.iter().map(|r| (r.id.as_str(), r.finding.as_str())).collect();
    let index = build_index(&docs, params)?;
    index.save(&args.out)?;
    println!("{}\t{} documents, {} terms", args.out.display(), index.len(), index.terms().count());
    Ok(())
}

fn run(args: RunArgs, mut config: ExperimentConfig) -> Result<(), RunError> {
    if let (Some(train), Some(test)) = (args.train, args.test) {
        config.data = DataSource::Files { train, test, probabilities: args.probabilities };
    }
    if let Some(rates) = args.rates {
        config.rates = rates;
    }
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    if let Some(names) = args.ablation {
        config.ablations = if names.iter().any(|n| n == "all") {
            Ablation::ALL.to_vec()
        } else {
            names.iter().map(|n| n.parse()).collect::<Result<_, _>>().map_err(|e: cxr_icl::prompting::PromptError| usage(e.to_string()))?
        };
    }
    match (args.description_mode.as_deref(), args.description_threshold) {
        (Some("probability"), Some(_)) => return Err(usage("--description-threshold needs threshold mode")),
        (Some("probability"), None) => config.description = DescriptionMode::Probability,
        (Some(_), t) | (None, t @ Some(_)) => {
            config.description = DescriptionMode::Threshold { threshold: t.unwrap_or(DEFAULT_THRESHOLD) }
        }
        (None, None) => {}
    }
    args.bm25.apply(&mut config.bm25);
    if let Some(rule) = args.mock {
        config.backend = BackendConfig::Mock { rule };
    }
    if args.cache_dir.is_some() {
        config.cache_dir = args.cache_dir;
    }
    if let Some(n) = args.max_in_flight {
        config.max_in_flight = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    let report = run_experiment(&config)?;
    emit_report(&report, &config.output_dir)?;
    print!("{}", cxr_icl::runner::render_tables(&report));
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), RunError> {
    let full = corpus::load_corpus(&args.test)?;
    let sets = load_corrupted_sets(&args.dir)?;
    let trend = validate_corruption(&full, &sets)?;
    println!("rate\tmasked\tlabel_micro_f1");
    for p in &trend.points {
        println!("{}\t{:.4}\t{:.4}", p.rate, p.masked_fraction, p.micro_f1());
    }
    println!("verdict: {:?}", trend.verdict);
    if trend.verdict == TrendVerdict::NotDecreasing {
        return Err(RunError::Misaligned("label F1 does not strictly decrease with the corruption rate".into()));
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), RunError> {
    let report = load_report(&args.from)?;
    emit_report(&report, args.out.as_ref().unwrap_or(&args.from))?;
    print!("{}", cxr_icl::runner::render_tables(&report));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    let config = || base_config(cli.config.as_deref());
    match cli.command {
        Command::Prepare(a) => prepare(a, config()?),
        Command::Corrupt(a) => corrupt(a, config()?),
        Command::Index(a) => index(a, config()?),
        Command::Run(a) => run(a, config()?),
        Command::ValidateCorruption(a) => validate(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
