use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use strucprove::datasets::load_instances;
use strucprove::search::{HintMode, Pruning};
use strucprove_cli::config::{ClientKind, RunConfig};
use strucprove_cli::results::read_results;
use strucprove_cli::{convert, exit_code, inspect, run, score, EXIT_EXHAUSTED, EXIT_USAGE};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "strucprove", version, about = "Build and score proof graphs with a prompted language model")]
struct Cli {
    /// More logging (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search every instance of a split, appending to a results file.
    Run(RunArgs),
    /// Score a results file against gold proofs.
    Score(ScoreArgs),
    /// Replay a search trace.
    Inspect { trace: PathBuf },
    /// Convert an upstream dataset release to the normalized format.
    Convert(ConvertArgs),
    /// Print the fully resolved configuration.
    PrintConfig(ConfigArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClientArg {
    Http,
    Oracle,
    NoisyOracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PruningArg {
    Div,
    ReuseIc,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HintArg {
    Hint,
    WhatsNext,
    Off,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML config; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Register or replace a split as NAME=PATH.
    #[arg(long = "data", value_name = "NAME=PATH")]
    data: Vec<String>,
    #[arg(long)]
    client: Option<ClientArg>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beam_b: Option<usize>,
    #[arg(long)]
    frontier_a: Option<usize>,
    #[arg(long)]
    pruning: Option<PruningArg>,
    #[arg(long)]
    hint_mode: Option<HintArg>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    max_calls_per_instance: Option<usize>,
    #[arg(long)]
    max_total_calls: Option<usize>,
    /// Split supplying demonstrations.
    #[arg(long)]
    demo_split: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "test")]
    split: String,
    /// Results file; existing records are skipped.
    #[arg(short, long)]
    out: PathBuf,
    /// Directory for per-instance traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(short, long)]
    results: PathBuf,
    /// Gold instances; otherwise the configured split.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: String,
    /// Directory for the report files.
    #[arg(short, long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// Source format; only `entailmentbank` is supported.
    #[arg(long, default_value = "entailmentbank")]
    from: String,
    input: PathBuf,
    output: PathBuf,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        for entry in &self.data {
            let (name, path) = entry
                .split_once('=')
                .ok_or_else(|| strucprove_cli::UsageError(format!("--data expects NAME=PATH, got `{entry}`")))?;
            cfg.dataset.splits.insert(name.into(), path.into());
        }
        if let Some(c) = self.client {
            cfg.model.client = match c {
                ClientArg::Http => ClientKind::Http,
                ClientArg::Oracle => ClientKind::Oracle,
                ClientArg::NoisyOracle => ClientKind::NoisyOracle,
            };
        }
        if let Some(p) = self.pruning {
            cfg.search.pruning = match p {
                PruningArg::Div => Pruning::Div,
                PruningArg::ReuseIc => Pruning::ReuseIc,
                PruningArg::Off => Pruning::Off,
            };
        }
        if let Some(h) = self.hint_mode {
            cfg.search.hint_mode = match h {
                HintArg::Hint => HintMode::Hint,
                HintArg::WhatsNext => HintMode::WhatsNext,
                HintArg::Off => HintMode::Off,
            };
        }
        if let Some(v) = &self.endpoint {
            cfg.model.endpoint = v.clone();
        }
        if let Some(v) = &self.model {
            cfg.search.model = v.clone();
        }
        if let Some(v) = &self.cache {
            cfg.cache_path = Some(v.clone());
        }
        if let Some(v) = &self.demo_split {
            cfg.demo_split = Some(v.clone());
        }
        cfg.concurrency = self.concurrency.unwrap_or(cfg.concurrency);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.search.beam_b = self.beam_b.unwrap_or(cfg.search.beam_b);
        cfg.search.frontier_a = self.frontier_a.or(cfg.search.frontier_a);
        cfg.dataset.max_depth = self.max_depth.unwrap_or(cfg.dataset.max_depth);
        cfg.budget.max_calls_per_instance = self.max_calls_per_instance.or(cfg.budget.max_calls_per_instance);
        cfg.budget.max_total_calls = self.max_total_calls.or(cfg.budget.max_total_calls);
        cfg.finish()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config.resolve()?;
            if args.print_config {
                print!("{}", cfg.to_toml());
                return Ok(0);
            }
            let summary = run::cmd_run(&cfg, &args.split, &args.out, args.trace_dir.as_deref())?;
            println!("{}", serde_json::to_string(&summary)?);
            Ok(if summary.exhausted > 0 { EXIT_EXHAUSTED } else { 0 })
        }
        Command::Score(args) => {
            let cfg = args.config.resolve()?;
            let gold = match &args.gold {
                Some(p) => load_instances(p)?,
                None => load_instances(cfg.split_path(&args.split)?)?,
            };
            let results = read_results(&args.results)?;
            let report = score::score_results(&results, &gold, &cfg.ged)?;
            score::write_reports(&report, &args.out_dir)?;
            print!("{}", score::breakdown_tsv(&report.breakdown));
            if let Some(agg) = &report.aggregate {
                let cells: Vec<String> = agg.values().iter().map(|v| format!("{v:.4}")).collect();
                println!("aggregate\t{}", cells.join("\t"));
            }
            Ok(0)
        }
        Command::Inspect { trace } => {
            let records = inspect::load_trace(&trace)?;
            print!("{}", inspect::render(&records));
            Ok(0)
        }
        Command::Convert(args) => {
            if !args.from.eq_ignore_ascii_case("entailmentbank") {
                anyhow::bail!(strucprove_cli::UsageError(format!("unsupported source format `{}`", args.from)));
            }
            let n = convert::convert_entailment_bank(&args.input, &args.output)?;
            println!("wrote {n} instances to {}", args.output.display());
            Ok(0)
        }
        Command::PrintConfig(args) => {
            print!("{}", args.resolve()?.to_toml());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let default = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default)))
        .with_writer(std::io::stderr)
        .init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
