//! `affine-lab`: reproducible experiments on affine Euler motions and their perturbations.

mod config;
mod error;
mod experiments;
mod output;
mod sweep;
mod verdict;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Kind, RunConfig};
use error::CliError;
use verdict::{Status, Verdict};

#[derive(Parser)]
#[command(name = "affine-lab", version, about = "Affine Euler motions, perturbations and energy diagnostics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "affine-lab-out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "AFFINE_LAB_WORKERS")]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Radial,
    #[value(name = "3d")]
    Cartesian,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the affine ODE and check conservation and asymptotics.
    Affine,
    /// Evaluate the Euler residual of the affine flow and its conformal transform.
    Fields,
    /// Evolve a linearised perturbation.
    Perturb {
        #[arg(long, value_enum)]
        model: Option<Model>,
    },
    /// Exact identities, commutator ladders and Hardy constants.
    Verify,
    /// Run the configured `[sweep]` grid for an experiment.
    Sweep {
        #[arg(value_enum)]
        experiment: SweepKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Affine,
    Fields,
    PerturbRadial,
    #[value(name = "perturb-3d")]
    Perturb3d,
}

impl From<SweepKind> for Kind {
    fn from(k: SweepKind) -> Self {
        match k {
            SweepKind::Affine => Kind::Affine,
            SweepKind::Fields => Kind::Fields,
            SweepKind::PerturbRadial => Kind::PerturbRadial,
            SweepKind::Perturb3d => Kind::Perturb3d,
        }
    }
}

/// Resolves the command against `kind` in the config file; a mismatch is an error.
fn resolve(command: &Command, configured: Option<Kind>) -> Result<Kind, CliError> {
    let wanted = match command {
        Command::Affine => Some(Kind::Affine),
        Command::Fields => Some(Kind::Fields),
        Command::Verify => Some(Kind::Verify),
        Command::Perturb { model: Some(Model::Radial) } => Some(Kind::PerturbRadial),
        Command::Perturb { model: Some(Model::Cartesian) } => Some(Kind::Perturb3d),
        Command::Perturb { model: None } => match configured {
            Some(k @ (Kind::PerturbRadial | Kind::Perturb3d)) => Some(k),
            _ => Some(Kind::PerturbRadial),
        },
        Command::Sweep { experiment } => Some(Kind::from(*experiment)),
    };
    let wanted = wanted.expect("every command names a kind");
    match configured {
        Some(k) if k != wanted => Err(CliError::config(format!(
            "config kind = \"{}\" conflicts with the requested {}",
            k.name(),
            wanted.name()
        ))),
        _ => Ok(wanted),
    }
}

fn print_verdict(v: &Verdict) {
    for (name, c) in &v.checks {
        let tag = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::ReportOnly => "info",
        };
        println!("{tag:>4}  {name:<36} {:>14.6e}  target {:.6e}", c.measured, c.target);
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let kind = resolve(&cli.command, cfg.kind)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = g.workers {
        if w == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Sweep { .. } => {
            let results = sweep::run(kind, &cfg, &g.out)?;
            for r in &results {
                let detail = r.error.clone().unwrap_or_else(|| r.failures.join(", "));
                println!(
                    "cell {:03}  gamma {:<8} delta {:<6} amplitude {:<8} {:<5} {detail}",
                    r.cell.index, r.cell.gamma, r.cell.delta, r.cell.amplitude, r.status
                );
            }
            Ok(results.iter().all(sweep::CellResult::passed))
        }
        _ => {
            let outcome = experiments::run(kind, &cfg, &g.out)?;
            print_verdict(&outcome.verdict);
            println!("{} -> {}", kind.name(), g.out.display());
            Ok(outcome.verdict.passed())
        }
    })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("affine-lab: {e}");
            e.exit_code()
        }
    }
}
