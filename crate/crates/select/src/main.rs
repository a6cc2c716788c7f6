use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use consensus_core::bench::{run_consistency_sweep, BenchConfig};
use consensus_core::curation::CapMode;
use consensus_core::metrics::DEFAULT_ECE_BINS;
use consensus_core::scl::{
    train_summary_embeddings, SclConfig, DEFAULT_DIM, DEFAULT_LEARNING_RATE, DEFAULT_TAU, DEFAULT_TOKENS,
};
use consensus_core::selection::DEFAULT_TAU_PRIME;
use consensus_core::Method;
use consensus_select::candidates::load_candidate_sets;
use consensus_select::float::format_sig6;
use consensus_select::report::{load_report, render_report, write_report, ReportFormat};
use consensus_select::run::{evaluate, run_selection, toy_encode_sets, training_groups, RunConfig, Summary};
use consensus_select::suffix::{read_suffix, write_suffix, SuffixFile};
use consensus_select::sweep::{parse_sizes, render_sweep_csv};
use consensus_select::usc::{JudgeEndpointConfig, UscClient};
use consensus_select::{Error, Result};

#[derive(Parser)]
#[command(name = "consensus-select", version, about = "Pick the consensus response among sampled LLM outputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select one response per question and report accuracy, consistency and calibration.
    Select(SelectArgs),
    /// Train summary-token embeddings for the toy encoder.
    TrainScl(TrainArgs),
    /// Run the synthetic cluster benchmark.
    Bench(BenchArgs),
    /// Score saved predictions against a candidate file.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Jsonl => ReportFormat::Jsonl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CapModeArg {
    Drop,
    Downsample,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}` (expected one of {})", names.join(", "))
    })
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_TAU_PRIME)]
    tau_prime: f64,
    #[arg(long, env = "CONSENSUS_SELECT_SEED", default_value_t = 0)]
    seed: u64,
    /// Embed responses with the toy encoder using this suffix file.
    #[arg(long, value_name = "SUFFIXFILE")]
    toy_encode: Option<PathBuf>,
    /// Write per-question results here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: FormatArg,
    #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
    ece_bins: usize,
    #[arg(long)]
    usc_url: Option<String>,
    #[arg(long, default_value = "default")]
    usc_model: String,
    #[arg(long, env = "USC_AUTH_TOKEN", hide_env_values = true)]
    usc_auth_token: Option<String>,
    #[arg(long, default_value_t = 30.0)]
    usc_timeout_secs: f64,
    #[arg(long, default_value_t = 2)]
    usc_max_retries: u32,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, env = "CONSENSUS_SELECT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "SUFFIXFILE")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOKENS)]
    tokens: usize,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    lr: f64,
    #[arg(long, value_enum, default_value = "drop")]
    cap_mode: CapModeArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Majority sizes: `2..9` (inclusive) or a comma list.
    #[arg(long, default_value = "2..9")]
    sizes: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = "CONSENSUS_SELECT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated; any of lsc, lsc-topk, lsc-mean, random.
    #[arg(long, default_value = "lsc,lsc-topk")]
    methods: String,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.5)]
    separation: f64,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    max_minority_cluster: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    /// Report from `select`; `.csv` files are read as CSV, anything else as JSONL.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
    ece_bins: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_else(|| "n/a".into())
}

fn print_summary(summary: &Summary, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "questions: {}", summary.questions)?;
    writeln!(out, "accuracy: {}", fmt_opt(summary.accuracy))?;
    writeln!(out, "consistency: {}", fmt_opt(summary.consistency))?;
    writeln!(out, "ece: {}", fmt_opt(summary.calibration.as_ref().map(|c| c.ece)))
}

fn judge_for(args: &SelectArgs) -> Result<Option<UscClient>> {
    if args.method != Method::Usc {
        return Ok(None);
    }
    let url = args.usc_url.clone().ok_or_else(|| Error::Usage("method usc needs --usc-url".into()))?;
    let timeout = Duration::try_from_secs_f64(args.usc_timeout_secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| Error::Usage("--usc-timeout-secs must be positive".into()))?;
    let endpoint = JudgeEndpointConfig {
        timeout,
        max_retries: args.usc_max_retries,
        auth_token: args.usc_auth_token.clone(),
        ..JudgeEndpointConfig::new(url, args.usc_model.clone())
    };
    Ok(Some(UscClient::http(endpoint)))
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let cfg = RunConfig { method: args.method, tau_prime: args.tau_prime, seed: args.seed, ece_bins: args.ece_bins };
    cfg.validate()?;
    let judge = judge_for(&args)?;
    let mut sets = load_candidate_sets(&args.input)?;
    if let Some(path) = &args.toy_encode {
        toy_encode_sets(&mut sets, &read_suffix(path)?)?;
    }
    let out = run_selection(&sets, &cfg, judge.as_ref().map(|j| j as _))?;
    let format = args.format.into();
    match &args.report {
        Some(path) => {
            write_report(&out.results, path, format)?;
            print_summary(&out.summary, &mut std::io::stdout()).map_err(|e| Error::io("<stdout>", e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&render_report(&out.results, format)).map_err(|e| Error::io("<stdout>", e))?;
            print_summary(&out.summary, &mut std::io::stderr()).map_err(|e| Error::io("<stderr>", e))
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = SclConfig {
        tokens: args.tokens,
        dim: args.dim,
        tau: args.tau,
        learning_rate: args.lr,
        steps: args.steps,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let mode = match args.cap_mode {
        CapModeArg::Drop => CapMode::DropGroup,
        CapModeArg::Downsample => CapMode::Downsample,
    };
    let sets = load_candidate_sets(&args.input)?;
    let groups = training_groups(&sets, mode, args.seed);
    let outcome = train_summary_embeddings(&groups, &cfg)
        .map_err(|source| Error::Method { question_id: "<training set>".into(), source })?;
    write_suffix(&args.out, &SuffixFile { seed: args.seed, suffix: outcome.suffix })?;
    let first = outcome.loss_history.first().copied().unwrap_or(f64::NAN);
    let last = outcome.loss_history.last().copied().unwrap_or(f64::NAN);
    println!("groups: {}", groups.len());
    println!("loss: {} -> {}", format_sig6(first), format_sig6(last));
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let sizes = parse_sizes(&args.sizes)?;
    let methods = args
        .methods
        .split(',')
        .map(|m| {
            let m = parse_method(m.trim()).map_err(Error::Usage)?;
            if matches!(m, Method::SelfConsistency | Method::Wucs | Method::Usc) {
                return Err(Error::Usage(format!("method {m} needs response texts and cannot be benchmarked")));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = BenchConfig {
        n_candidates: args.n,
        majority_size: sizes[0],
        separation: args.separation,
        noise_sigma: args.noise,
        trials: args.trials,
        seed: args.seed,
        dimension: args.dim,
        max_minority_cluster: args.max_minority_cluster,
    };
    let rows = run_consistency_sweep(&methods, &sizes, &cfg).map_err(|e| Error::Usage(e.to_string()))?;
    write_bytes(&args.out, &render_sweep_csv(&rows))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io { path: path.to_owned(), source: e })
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let sets = load_candidate_sets(&args.input)?;
    let predictions = load_report(&args.predictions, ReportFormat::from_path(&args.predictions))?;
    let summary = evaluate(&sets, &predictions, args.ece_bins)?;
    print_summary(&summary, &mut std::io::stdout()).map_err(|e| Error::io("<stdout>", e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::TrainScl(a) => cmd_train(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
