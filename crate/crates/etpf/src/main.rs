use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etpf::acceptance;
use etpf::config::ExperimentConfig;
use etpf::experiments;
use etpf::presets::{self, PRESETS};
use etpf::{CliError, Result};

/// Event-triggered predictor feedback experiments.
#[derive(Parser)]
#[command(name = "etpf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Built-in preset name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value`, applied in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Source {
    fn load(&self, default: &str) -> Result<ExperimentConfig> {
        match (&self.preset, &self.config) {
            (_, Some(path)) => ExperimentConfig::from_file(path, &self.overrides),
            (Some(name), None) => presets::load(name, &self.overrides),
            (None, None) => presets::load(default, &self.overrides),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed loop and write trace, events and summary.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "runs/simulate")]
        out: PathBuf,
    },
    /// Average |x(T)| over a (Δτ, Dψ) sensing grid.
    Heatmap {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "runs/heatmap")]
        out: PathBuf,
        /// Comma-separated Δτ values, replacing the config grid.
        #[arg(long, value_delimiter = ',')]
        delta_tau: Option<Vec<f64>>,
        /// Comma-separated Dψ values, replacing the config grid.
        #[arg(long, value_delimiter = ',')]
        d_psi: Option<Vec<f64>>,
        #[arg(long)]
        n_ic: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// δ(ν), μ(ν) and the optimal ν*(λ) for a linear system.
    Tradeoff {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "runs/tradeoff")]
        out: PathBuf,
    },
    /// Evaluate the acceptance criteria.
    Verify {
        /// Criteria to run; all when empty.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// List the built-in presets.
    Presets,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { source, out } => {
            let cfg = source.load("example1")?;
            let sim = experiments::simulate(&cfg)?;
            experiments::write_simulation(&out, &cfg.name, &sim)?;
            print!("{}", experiments::summary(&cfg.name, &sim));
            println!("runtime = {:.3}s", sim.elapsed.as_secs_f64());
            if let Some((t, reason)) = &sim.trace.diagnostics.diverged {
                return Err(CliError::Diverged { t: *t, reason: reason.clone() });
            }
            Ok(())
        }
        Command::Heatmap { source, out, delta_tau, d_psi, n_ic, seed } => {
            let mut cfg = source.load("heatmap-ex1")?;
            let mut grid = cfg
                .heatmap
                .take()
                .ok_or_else(|| CliError::Config("config has no [heatmap] section".into()))?;
            grid.delta_tau = delta_tau.unwrap_or(grid.delta_tau);
            grid.d_psi = d_psi.unwrap_or(grid.d_psi);
            grid.n_ic = n_ic.unwrap_or(grid.n_ic);
            grid.seed = seed.unwrap_or(grid.seed);
            let base = cfg.sim_config()?;
            let cells = experiments::heatmap(&base, &grid.delta_tau, &grid.d_psi, grid.n_ic, grid.seed)?;
            experiments::write_heatmap(&out, &cells)?;
            for c in &cells {
                println!("{:>6} {:>6} {:.6e}", c.delta_tau, c.d_psi, c.avg_final_norm);
            }
            Ok(())
        }
        Command::Tradeoff { source, out } => {
            let cfg = source.load("tradeoff")?;
            let result = experiments::tradeoff(&cfg)?;
            experiments::write_tradeoff(&out, &result)?;
            for o in &result.optima {
                let flag = if o.degenerate {
                    " degenerate"
                } else if o.boundary {
                    " boundary"
                } else {
                    ""
                };
                println!("lambda {:.2} nu* {:.6}{flag}", o.lambda, o.nu);
            }
            Ok(())
        }
        Command::Verify { only } => {
            let ids: Vec<u8> = if only.is_empty() { (1..=acceptance::CRITERIA).collect() } else { only };
            let mut failed = 0;
            for id in ids {
                let v = acceptance::evaluate(id);
                println!("{v}");
                failed += usize::from(!v.passed);
            }
            if failed > 0 {
                return Err(CliError::Config(format!("{failed} criteria failed")));
            }
            Ok(())
        }
        Command::Presets => {
            for p in PRESETS {
                println!("{}", p.name);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
