use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use rollout_restoration::experiment::run_experiment;
use rollout_restoration::io::{load_config, write_results, Bundle, RunManifest};
use rollout_restoration::rollout::PolicyKind;

/// Post-earthquake repair scheduling experiments.
#[derive(Debug, Parser)]
#[command(name = "restore", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Monte Carlo policy comparison and write CSV results.
    Run(RunArgs),
    /// Parse and validate a configuration without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated policies: base, rollout, rollout-sa, optimal.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<PolicyKind>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Annealing iterations per decision epoch.
    #[arg(long)]
    sa_iters: Option<usize>,
    /// Initial annealing temperature.
    #[arg(long)]
    sa_t0: Option<f64>,
    /// Geometric cooling factor.
    #[arg(long)]
    sa_gamma: Option<f64>,
    /// Candidate pool size.
    #[arg(long)]
    sa_pool: Option<usize>,
    /// Number of repair crews.
    #[arg(long)]
    crews: Option<usize>,
    /// Node-expansion cap for the exact optimizer.
    #[arg(long)]
    oracle_cap: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn apply_overrides(bundle: Bundle, args: &RunArgs) -> Result<Bundle> {
    let mut exp = bundle.config.experiment.clone();
    if let Some(seed) = args.seed {
        exp.seed = seed;
    }
    if let Some(policies) = &args.policy {
        exp.policies = policies.clone();
    }
    if let Some(n) = args.replicates {
        exp.replicates = n;
    }
    if let Some(n) = args.sa_iters {
        exp.annealing.iterations = n;
    }
    if let Some(t) = args.sa_t0 {
        exp.annealing.initial_temperature = t;
    }
    if let Some(g) = args.sa_gamma {
        exp.annealing.cooling = g;
    }
    if let Some(n) = args.sa_pool {
        exp.annealing.pool_size = n;
    }
    if let Some(n) = args.crews {
        exp.crews = n;
    }
    if let Some(cap) = args.oracle_cap {
        exp.oracle_cap = cap;
    }
    Ok(bundle.with_experiment(exp)?)
}

fn run(args: RunArgs) -> Result<()> {
    let bundle = load_config(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    let bundle = apply_overrides(bundle, &args)?;
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    let exp = &bundle.config.experiment;
    info!(
        "{} components, {} replicates, {} crews, seed {}",
        bundle.community.len(),
        exp.replicates,
        exp.crews,
        exp.seed
    );
    let started = Instant::now();
    let result = run_experiment(&bundle.community, &bundle.hazard, exp)?;
    let manifest = RunManifest::new(&bundle.config, &result, started.elapsed().as_secs_f64());
    let written = write_results(&result, &manifest, &args.out)
        .with_context(|| format!("writing results to {}", args.out.display()))?;
    for summary in &manifest.policies {
        println!(
            "{:<12} mean F {:>12.2}  std {:>10.2}  min {:>12.2}  max {:>12.2}",
            summary.policy.to_string(),
            summary.mean,
            summary.std,
            summary.min,
            summary.max
        );
    }
    for path in written {
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn validate(config: PathBuf) -> Result<()> {
    let bundle = load_config(&config).with_context(|| format!("loading {}", config.display()))?;
    println!(
        "{}: ok ({} components, {} retailers, {} cells, population {})",
        config.display(),
        bundle.community.len(),
        bundle.community.retailers().len(),
        bundle.community.cells().len(),
        bundle.community.total_population()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
