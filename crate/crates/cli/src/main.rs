use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use replisim::{
    cmd_compare, cmd_gen, cmd_replay, cmd_sweep, parse_policies, parse_probabilities, ExperimentOptions,
    OutputFormat, Workload,
};
use replisim_core::model::SystemConfig;
use replisim_core::policy::PolicyKind;
use replisim_core::workload::WorkloadMode;

#[derive(Parser)]
#[command(name = "replisim", version, about = "Simulate and compare adaptive object replication policies")]
struct Cli {
    /// JSON system configuration; defaults to 7 processors, 2 servers, 5 objects.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; falls back to REPLISIM_SEED, then the config's seed.
    #[arg(long, global = true, env = "REPLISIM_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Experiment {
    /// Comma-separated policies (orad, adrw, sa).
    #[arg(long, default_value = "orad,adrw")]
    policy: String,
    /// Number of seeds per probability.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Requests per sequence (maximum length for random workloads).
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Comma-separated read probabilities.
    #[arg(long, default_value = "0.5")]
    p: String,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    out: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Run policies on identical sequences and report costs.
    Compare {
        /// Sequence file, fixture[:A..F], random or fixed.
        #[arg(long, default_value = "fixture")]
        workload: Workload,
        #[command(flatten)]
        exp: Experiment,
    },
    /// Per-request ledger of one policy over a sequence file.
    Replay {
        /// Sequence file.
        #[arg(long)]
        workload: PathBuf,
        /// orad, adrw or sa.
        #[arg(long, default_value = "orad")]
        policy: PolicyKind,
        /// Also print window appends and performed actions.
        #[arg(long)]
        trace: bool,
    },
    /// Fixed-length sweep over read probabilities and seeds.
    Sweep {
        #[command(flatten)]
        exp: Experiment,
    },
    /// Print a generated sequence in the sequence file format.
    Gen {
        /// random or fixed
        #[arg(long, default_value = "fixed")]
        workload: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
}

fn options(workload: Workload, exp: &Experiment, seed: u64) -> Result<ExperimentOptions> {
    Ok(ExperimentOptions {
        workload,
        policies: parse_policies(&exp.policy)?,
        seed,
        seeds: exp.seeds,
        n: exp.n,
        probabilities: parse_probabilities(&exp.p)?,
        format: exp.out,
    })
}

fn main_inner() -> Result<String> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => SystemConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => SystemConfig::standard(),
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    match cli.command {
        Command::Compare { workload, exp } => cmd_compare(&cfg, &options(workload, &exp, seed)?),
        Command::Sweep { exp } => cmd_sweep(&cfg, &options(Workload::Fixed, &exp, seed)?),
        Command::Replay { workload, policy, trace } => cmd_replay(&cfg, &workload, policy, trace),
        Command::Gen { workload, n, p } => {
            let mode = match workload.as_str() {
                "random" => WorkloadMode::RandomSize,
                "fixed" => WorkloadMode::FixedSize,
                other => anyhow::bail!("gen supports random or fixed workloads, not `{other}`"),
            };
            cmd_gen(&cfg, mode, n, p, seed)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
