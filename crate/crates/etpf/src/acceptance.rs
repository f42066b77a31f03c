//! Machine-checkable acceptance criteria over the shipped presets.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use etpf_core::tradeoff::{delta_of_nu, grid_argmax, mu_of_nu, optimize_nu, default_nu_grid};
use etpf_core::trigger::{dwell_rates, min_dwell_numeric, Threshold};

use crate::error::{CliError, Result};
use crate::experiments::{self, analytic_dwell, Simulation};
use crate::presets::{self, PRESETS};

pub const CRITERIA: u8 = 10;

/// Criteria that do not pass as stated, with the measured reason. They are
/// still evaluated and reported as FAIL.
pub const KNOWN_SHORTFALLS: &[(u8, &str)] = &[
    (
        6,
        "the linear closed form is exact while the plant is explicit Euler; its error is \
         5.9 h (1 + O(h)) with ratio 0.5002 to 0.5005 per halving, a hair above one half",
    ),
    (
        8,
        "example2-body diverges from x(0) = (1, 1); in its last two steps |p| ~ 2e7 and the \
         rounding of p + e inside the cubic feedback leaves |w| ~ 1e-4",
    ),
];

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {tag} {}: {}", self.id, self.title, self.detail)
    }
}

fn title(id: u8) -> &'static str {
    match id {
        1 => "example1 stabilization",
        2 => "example1 robustness margin",
        3 => "heatmap structure",
        4 => "linear exponential rate",
        5 => "dwell-time bound",
        6 => "predictor exactness",
        7 => "trigger invariant",
        8 => "w identity",
        9 => "trade-off optimizer",
        10 => "determinism",
        _ => "unknown",
    }
}

/// Evaluates one criterion; errors become a failed verdict.
pub fn evaluate(id: u8) -> Verdict {
    let outcome = match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        _ => Err(CliError::Config(format!("no criterion {id}"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Verdict { id, title: title(id), passed, detail }
}

pub fn evaluate_all() -> Vec<Verdict> {
    (1..=CRITERIA).map(evaluate).collect()
}

type Outcome = Result<(bool, String)>;

fn run_preset(name: &str, overrides: &[&str]) -> Result<Simulation> {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    experiments::simulate(&presets::load(name, &overrides)?)
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn criterion_1() -> Outcome {
    let sim = run_preset("example1", &[])?;
    let t = &sim.trace;
    let norm = t.final_norm();
    let dwell = t.events.min_dwell().unwrap_or(0.0);
    let passed = !t.diverged() && norm <= 0.1 && !t.events.is_empty() && dwell > 0.0 && sim.elapsed.as_secs_f64() <= 30.0;
    Ok((
        passed,
        format!("|x(25)| = {norm:.3e}, {} events, min dwell {dwell:.3e}, runtime {}", t.events.len(), secs(sim.elapsed)),
    ))
}

fn criterion_2() -> Outcome {
    let low = run_preset("example1", &["trigger.rho_bar=0.5"])?.trace;
    let high = run_preset("example1", &["trigger.rho_bar=1.0"])?.trace;
    let (a, b) = (low.final_norm(), high.final_norm());
    let passed = !low.diverged() && a <= 0.5 && (high.diverged() || b > 10.0);
    Ok((passed, format!("rho_bar 0.5: |x(25)| = {a:.3e}; rho_bar 1.0: |x(25)| = {b:.3e}")))
}

fn criterion_3() -> Outcome {
    let cfg = presets::load("heatmap-ex1", &[])?;
    let grid = cfg.heatmap.clone().ok_or_else(|| CliError::Config("heatmap-ex1 has no grid".into()))?;
    let start = Instant::now();
    let cells = experiments::heatmap_from_config(&cfg)?;
    let elapsed = start.elapsed();
    let shape_ok = grid.delta_tau.len() == 8 && grid.d_psi.len() == 8 && grid.n_ic == 10 && cells.len() == 64;
    let anchor = cells.iter().find(|c| c.delta_tau == 2.0 && c.d_psi == 1.0);
    let corner: Vec<_> = cells.iter().filter(|c| c.delta_tau >= 5.0 || c.d_psi >= 3.0).collect();
    let unstable = corner.iter().filter(|c| c.avg_final_norm >= 10.0).count();
    let worst = corner.iter().map(|c| c.avg_final_norm).fold(0.0, f64::max);
    let anchor_val = anchor.map_or(f64::NAN, |c| c.avg_final_norm);
    let passed = shape_ok && anchor_val <= 0.5 && unstable > 0 && elapsed.as_secs_f64() <= 600.0;
    Ok((
        passed,
        format!(
            "cell (2, 1) avg {anchor_val:.3e}; {unstable} of {} cells with dtau >= 5 or dpsi >= 3 at >= 10 (max {worst:.3e}); runtime {}",
            corner.len(),
            secs(elapsed)
        ),
    ))
}

fn criterion_4() -> Outcome {
    let sim = run_preset("linear2d", &[])?;
    let sys = sim.config.model.linear().ok_or_else(|| CliError::Config("linear2d is not linear".into()))?;
    let mu = sys.decay_rate(sim.config.trigger.theta);
    let slope = sim.trace.decay_report().slope.unwrap_or(f64::NAN);
    let passed = sim.config.step == 1e-3 && slope <= -mu * 0.9;
    Ok((passed, format!("log-V slope {slope:.4} vs bound -{:.4} (mu = {mu:.4}), h = {}", mu * 0.9, sim.config.step)))
}

fn criterion_5() -> Outcome {
    let sim = run_preset("linear2d", &[])?;
    let cfg = &sim.config;
    let delta = analytic_dwell(cfg).ok_or_else(|| CliError::Config("no analytic dwell for linear2d".into()))?;
    let rule = Threshold::resolve(&cfg.trigger, &cfg.model, cfg.certificate.as_ref())?;
    let radius = rule.ratio().expect("linear rule has a ratio");
    let (a, c) = dwell_rates(cfg.delay.big_m2(), cfg.model.lipschitz_f(), cfg.model.lipschitz_k());
    let numeric = min_dwell_numeric(a, c, radius)?;
    let observed = sim.trace.events.min_dwell().unwrap_or(f64::INFINITY);
    let passed = observed >= delta && (numeric - delta).abs() <= 1e-6;
    Ok((
        passed,
        format!("observed min dwell {observed:.4e} >= delta {delta:.6e}; ODE delta {numeric:.6e} (diff {:.1e})", (numeric - delta).abs()),
    ))
}

/// Error pair at `h` and `h/2`; halving holds when the finer error is at
/// most half the coarser or both sit at the round-off floor.
fn exactness(name: &str, extra: &[&str], h: f64) -> Result<(f64, f64)> {
    let coarse = format!("sim.step={}", 2.0 * h);
    let fine = format!("sim.step={h}");
    let mut a: Vec<&str> = extra.to_vec();
    a.push(&coarse);
    let mut b: Vec<&str> = extra.to_vec();
    b.push(&fine);
    Ok((run_preset(name, &a)?.trace.prediction_error(), run_preset(name, &b)?.trace.prediction_error()))
}

const ROUND_OFF_FLOOR: f64 = 1e-10;

fn criterion_6() -> Outcome {
    let h = 1e-3;
    let checks = [
        ("example1 closed-loop", "example1", vec![]),
        ("linear2d closed-loop", "linear2d", vec!["predictor.method=closed-loop"]),
        ("linear2d linear-closed-form", "linear2d", vec!["predictor.method=linear-closed-form"]),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, preset, extra) in &checks {
        let (coarse, fine) = exactness(preset, extra, h)?;
        let halves = fine <= 0.5 * coarse || fine <= ROUND_OFF_FLOOR;
        passed &= fine <= 5e-2 && halves;
        parts.push(format!("{label} {coarse:.3e} -> {fine:.3e} (ratio {:.4})", fine / coarse));
    }
    // reported only: predictor on a uniform mesh in s
    let (coarse, fine) = exactness("example1", &["predictor.integrator=euler"], h)?;
    parts.push(format!("[info] example1 uniform-mesh {coarse:.3e} -> {fine:.3e}"));
    Ok((passed, parts.join("; ")))
}

fn all_preset_runs() -> Result<Vec<(&'static str, Simulation)>> {
    PRESETS
        .iter()
        .map(|p| Ok((p.name, experiments::simulate(&presets::load(p.name, &[])?)?)))
        .collect()
}

fn criterion_7() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, sim) in all_preset_runs()? {
        let t = &sim.trace;
        let mut excess = f64::NEG_INFINITY;
        let mut nonzero_at_event = 0;
        for i in 0..t.len() {
            if t.times[i] < t.t0 {
                continue;
            }
            excess = excess.max(t.e_norm[i] - t.threshold[i]);
            if t.event_flag[i] && t.e_norm[i] != 0.0 {
                nonzero_at_event += 1;
            }
        }
        passed &= excess <= 0.0 && nonzero_at_event == 0;
        parts.push(format!("{name}: max(|e| - thr) {excess:.2e}, {nonzero_at_event} nonzero e at events"));
    }
    Ok((passed, parts.join("; ")))
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, sim) in all_preset_runs()? {
        let d = &sim.trace.diagnostics;
        worst = worst.max(d.max_w);
        match &d.diverged {
            Some((t, _)) => parts.push(format!(
                "{name} {:.1e} ({} steps above 1e-9, run diverged at t = {t})",
                d.max_w, d.w_violations
            )),
            None => parts.push(format!("{name} {:.1e}", d.max_w)),
        }
    }
    Ok((worst <= 1e-9, format!("max |u - K(p + e)|: {}", parts.join(", "))))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let cfg = presets::load("linear2d", &[])?;
    let consts = experiments::tradeoff_constants(&cfg)?;
    let grid = default_nu_grid(100);
    let deltas: Vec<f64> = grid.iter().map(|&nu| delta_of_nu(&consts, nu)).collect::<etpf_core::Result<_>>()?;
    let mus: Vec<f64> = grid.iter().map(|&nu| mu_of_nu(&consts, nu)).collect::<etpf_core::Result<_>>()?;
    let delta_up = deltas.windows(2).all(|w| w[1] > w[0]);
    let mu_down = mus.windows(2).all(|w| w[1] < w[0]);
    let mut worst_gap: f64 = 0.0;
    let mut previous = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut stars = Vec::new();
    for i in 1..=9 {
        let lambda = i as f64 / 10.0;
        let nu = optimize_nu(&consts, lambda)?.nu;
        let oracle = grid_argmax(&consts, lambda, 10_000)?;
        worst_gap = worst_gap.max((nu - oracle).abs());
        monotone &= nu >= previous;
        previous = nu;
        stars.push(format!("{nu:.4}"));
    }
    let elapsed = start.elapsed();
    let passed = delta_up && mu_down && worst_gap <= 1e-4 && monotone && elapsed.as_secs_f64() <= 5.0;
    Ok((
        passed,
        format!(
            "delta increasing {delta_up}, mu decreasing {mu_down}, max |nu* - grid| {worst_gap:.1e}, nu*(0.1..0.9) = [{}], runtime {}",
            stars.join(", "),
            secs(elapsed)
        ),
    ))
}

static SCRATCH: AtomicUsize = AtomicUsize::new(0);

fn scratch_dir() -> PathBuf {
    let n = SCRATCH.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("etpf-verify-{}-{n}", std::process::id()))
}

/// Writes a preset's outputs into a fresh directory and returns the bytes
/// of every file, sorted by name.
fn preset_outputs(name: &str) -> Result<Vec<(String, Vec<u8>)>> {
    let dir = scratch_dir();
    let cfg = presets::load(name, &[])?;
    let sim = experiments::simulate(&cfg)?;
    experiments::write_simulation(&dir, name, &sim)?;
    if cfg.heatmap.is_some() {
        experiments::write_heatmap(&dir, &experiments::heatmap_from_config(&cfg)?)?;
    }
    if cfg.tradeoff.is_some() {
        experiments::write_tradeoff(&dir, &experiments::tradeoff(&cfg)?)?;
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))? {
        let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            files.push((path.file_name().unwrap().to_string_lossy().into_owned(), bytes));
        }
    }
    let _ = fs::remove_dir_all(&dir);
    files.sort();
    Ok(files)
}

fn criterion_10() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for p in PRESETS {
        let a = preset_outputs(p.name)?;
        let b = preset_outputs(p.name)?;
        let same = a == b && !a.is_empty();
        passed &= same;
        parts.push(format!("{} {} csv {}", p.name, a.len(), if same { "identical" } else { "DIFFER" }));
    }
    Ok((passed, parts.join(", ")))
}
