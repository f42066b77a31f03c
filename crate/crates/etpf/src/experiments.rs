//! Experiment runners shared by the CLI and the acceptance suite.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use etpf_core::sim::{self, HeatmapCell, SimConfig, SimTrace};
use etpf_core::tradeoff::{self, NuRow, Optimum, TradeoffConstants};
use etpf_core::trigger::{dwell_rates, min_dwell, Threshold};

use crate::config::{ExperimentConfig, TradeoffSection};
use crate::error::{CliError, Result};
use crate::output;

/// Caps sweep parallelism when set to a positive integer.
pub const THREADS_ENV: &str = "ETPF_THREADS";

pub struct Simulation {
    pub config: SimConfig,
    pub trace: SimTrace,
    pub elapsed: Duration,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    let config = cfg.sim_config()?;
    let start = Instant::now();
    let trace = sim::run(&config)?;
    Ok(Simulation { config, trace, elapsed: start.elapsed() })
}

/// `δ = ln((c + R a)/(c + R c)) / (a - c)` for rules with a fixed ratio
/// `|e| ≤ R |p|`; `None` for certificate-based thresholds.
pub fn analytic_dwell(config: &SimConfig) -> Option<f64> {
    let rule = Threshold::resolve(&config.trigger, &config.model, config.certificate.as_ref()).ok()?;
    let radius = rule.ratio()?;
    let (a, c) = dwell_rates(config.delay.big_m2(), config.model.lipschitz_f(), config.model.lipschitz_k());
    min_dwell(a, c, radius).ok()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), output::fmt_f)
}

/// Plain-text `key = value` report of a run.
pub fn summary(name: &str, sim: &Simulation) -> String {
    let t = &sim.trace;
    let d = &t.diagnostics;
    let rep = t.decay_report();
    let mut s = String::new();
    let _ = writeln!(s, "preset = {name}");
    let _ = writeln!(s, "step = {}", output::fmt_f(t.step));
    let _ = writeln!(s, "horizon = {}", output::fmt_f(sim.config.horizon));
    let _ = writeln!(s, "t0 = {}", output::fmt_f(t.t0));
    let _ = writeln!(s, "diverged = {}", d.diverged.as_ref().map_or("no".to_string(), |(t, r)| format!("at t = {t}: {r}")));
    let _ = writeln!(s, "final_norm = {}", output::fmt_f(t.final_norm()));
    let _ = writeln!(s, "events = {}", t.events.len());
    let _ = writeln!(s, "min_dwell = {}", opt(t.events.min_dwell()));
    let _ = writeln!(s, "analytic_dwell = {}", opt(analytic_dwell(&sim.config)));
    let _ = writeln!(s, "deliveries = {}", t.deliveries.len());
    let _ = writeln!(s, "max_delivery_snap = {}", output::fmt_f(d.max_delivery_snap));
    let _ = writeln!(s, "prediction_error = {}", output::fmt_f(t.prediction_error()));
    let _ = writeln!(s, "max_w = {}", output::fmt_f(d.max_w));
    let _ = writeln!(s, "w_violations = {}", d.w_violations);
    let _ = writeln!(s, "max_trigger_excess = {}", output::fmt_f(d.max_trigger_excess));
    let _ = writeln!(s, "v_rate = {}", opt(rep.rate));
    let _ = writeln!(s, "v_log_slope = {}", opt(rep.slope));
    let _ = writeln!(s, "v_increments = {}", rep.increments);
    let _ = writeln!(s, "v_max_increment = {}", output::fmt_f(rep.max_increment));
    let _ = writeln!(s, "v_envelope_ratio = {}", opt(rep.envelope_ratio));
    s
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `trace.csv`, `events.csv`, `deliveries.csv`, `summary.txt` and
/// `trace.gp` into `dir`.
pub fn write_simulation(dir: &Path, name: &str, sim: &Simulation) -> Result<()> {
    ensure_dir(dir)?;
    let t = &sim.trace;
    output::write_trace(&dir.join("trace.csv"), t)?;
    output::write_events(&dir.join("events.csv"), t)?;
    output::write_deliveries(&dir.join("deliveries.csv"), t)?;
    output::write_text(&dir.join("summary.txt"), &summary(name, sim))?;
    output::write_text(&dir.join("trace.gp"), &output::trace_script(t.state_dim, t.input_dim))
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Heatmap over the configured grids, one task per cell. Every cell sees
/// the same initial conditions and results keep row-major cell order.
pub fn heatmap(base: &SimConfig, delta_tau: &[f64], d_psi: &[f64], n_ic: usize, seed: u64) -> Result<Vec<HeatmapCell>> {
    if delta_tau.is_empty() || d_psi.is_empty() || n_ic == 0 {
        return Err(CliError::Config("heatmap grids and n_ic must be nonempty".into()));
    }
    let ics = sim::initial_conditions(base.model.state_dim(), n_ic, seed);
    let cells = sim::heatmap_cells(delta_tau, d_psi);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let values: Vec<etpf_core::Result<f64>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(dt, dp)| sim::heatmap_cell(base, dt, dp, &ics))
            .collect()
    });
    cells
        .iter()
        .zip(values)
        .map(|(&(dt, dp), v)| Ok(HeatmapCell { delta_tau: dt, d_psi: dp, avg_final_norm: v? }))
        .collect()
}

pub fn heatmap_from_config(cfg: &ExperimentConfig) -> Result<Vec<HeatmapCell>> {
    let grid = cfg
        .heatmap
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [heatmap] section".into()))?;
    heatmap(&cfg.sim_config()?, &grid.delta_tau, &grid.d_psi, grid.n_ic, grid.seed)
}

pub fn write_heatmap(dir: &Path, cells: &[HeatmapCell]) -> Result<()> {
    ensure_dir(dir)?;
    output::write_heatmap(&dir.join("heatmap.csv"), cells)?;
    output::write_text(&dir.join("heatmap.gp"), &output::heatmap_script())
}

pub struct Tradeoff {
    pub constants: TradeoffConstants,
    pub rows: Vec<NuRow>,
    pub optima: Vec<Optimum>,
}

pub fn tradeoff_constants(cfg: &ExperimentConfig) -> Result<TradeoffConstants> {
    let sys = cfg.linear_system()?;
    let section = cfg.tradeoff.clone().unwrap_or_default();
    let big_m2 = match section.big_m2 {
        Some(v) => v,
        None => cfg.sim_config()?.delay.big_m2(),
    };
    Ok(TradeoffConstants::from_linear(sys.a(), sys.b(), sys.k(), big_m2)?)
}

pub fn tradeoff(cfg: &ExperimentConfig) -> Result<Tradeoff> {
    let constants = tradeoff_constants(cfg)?;
    let TradeoffSection { nu_points, lambdas, .. } = cfg.tradeoff.clone().unwrap_or_default();
    let nu_grid = tradeoff::default_nu_grid(nu_points);
    let (rows, optima) = tradeoff::sweep(&constants, &nu_grid, &lambdas)?;
    Ok(Tradeoff { constants, rows, optima })
}

pub fn write_tradeoff(dir: &Path, result: &Tradeoff) -> Result<()> {
    ensure_dir(dir)?;
    output::write_tradeoff_nu(&dir.join("tradeoff_nu.csv"), &result.rows)?;
    output::write_tradeoff_lambda(&dir.join("tradeoff_lambda.csv"), &result.optima)?;
    output::write_text(&dir.join("tradeoff.gp"), &output::tradeoff_script())
}
