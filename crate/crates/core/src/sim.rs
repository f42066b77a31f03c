//! Fixed-step hybrid simulation of the delayed plant under event-triggered
//! predictor feedback, and the sensing-parameter sweep.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::delay::{ActuationDelay, SensingDelay, SensingSchedule};
use crate::model::{IssCertificate, SystemModel};
use crate::monitor::{self, DecayReport, FunctionalForm, MonitorConfig};
use crate::predictor::{
    held_input_rate, snap_to_grid, Anchor, Integrator, PredictionInputs, PredictorMethod, PredictorState, SigmaDotGrid,
};
use crate::signal::{Interpolation, TimedSignal};
use crate::trigger::{check_and_fire, triggering_error, EventLog, Threshold, TriggerConfig};
use crate::{norm, Error, Result};

/// State norm beyond which a run is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e9;
/// Tolerance of the `u = K(p + e)` identity.
pub const W_TOLERANCE: f64 = 1e-9;
/// Value recorded for divergent heatmap cells.
pub const SATURATED: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub enum Sensing {
    /// The controller sees `x(t)` at every step; `t₀ = 0`.
    Perfect,
    /// Transmissions every `period`, each delayed by the sensing delay.
    Sampled { period: f64, delay: SensingDelay, seed: u64 },
}

/// Controller output before the first event.
#[derive(Debug, Clone, PartialEq)]
pub enum PreHistory {
    Constant(Vec<f64>),
    /// Hold-mode samples covering `[φ(0), 0]`.
    Table(TimedSignal),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: SystemModel,
    /// Actuation delay of the plant.
    pub delay: ActuationDelay,
    /// Delay assumed by the predictor, when it differs from the plant's.
    pub controller_delay: Option<ActuationDelay>,
    pub sensing: Sensing,
    pub trigger: TriggerConfig,
    pub certificate: Option<IssCertificate>,
    pub predictor: PredictorMethod,
    pub integrator: Integrator,
    pub step: f64,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub pre_history: PreHistory,
    pub monitor: Option<MonitorConfig>,
}

impl SimConfig {
    /// Configuration with perfect sensing, zero pre-history, closed-loop
    /// prediction, Euler integration and no monitoring.
    pub fn new(model: SystemModel, delay: ActuationDelay, trigger: TriggerConfig, x0: Vec<f64>) -> Self {
        let m = model.input_dim();
        SimConfig {
            model,
            delay,
            controller_delay: None,
            sensing: Sensing::Perfect,
            trigger,
            certificate: None,
            predictor: PredictorMethod::ClosedLoop,
            integrator: Integrator::PlantMesh,
            step: 1e-2,
            horizon: 25.0,
            x0,
            pre_history: PreHistory::Constant(vec![0.0; m]),
            monitor: None,
        }
    }

    pub fn controller_delay(&self) -> &ActuationDelay {
        self.controller_delay.as_ref().unwrap_or(&self.delay)
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("step {} must be positive", self.step)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon {} must be positive", self.horizon)));
        }
        if self.x0.len() != self.model.state_dim() {
            return Err(Error::Dimension {
                expected: self.model.state_dim(),
                got: self.x0.len(),
            });
        }
        let m = self.model.input_dim();
        match &self.pre_history {
            PreHistory::Constant(u) if u.len() != m => {
                return Err(Error::Dimension { expected: m, got: u.len() })
            }
            PreHistory::Table(sig) => {
                if sig.dim() != m {
                    return Err(Error::Dimension { expected: m, got: sig.dim() });
                }
                let start = self.history_start();
                if sig.times().first().is_none_or(|&t0| t0 > start) {
                    return Err(Error::Config(format!("pre-history must start by {start}")));
                }
                if sig.last_time().is_some_and(|t| t > 0.0) {
                    return Err(Error::Config("pre-history samples must not follow time 0".into()));
                }
            }
            _ => {}
        }
        if let Sensing::Sampled { period, .. } = self.sensing {
            if !(period > 0.0) {
                return Err(Error::Config(format!("sensing period {period} must be positive")));
            }
        }
        if let Some(mon) = &self.monitor {
            mon.validate()?;
            match mon.form {
                FunctionalForm::Sup if self.certificate.is_none() => {
                    return Err(Error::Config("sup-form monitor needs an ISS certificate".into()))
                }
                FunctionalForm::Integral if self.model.linear().is_none() => {
                    return Err(Error::Config("integral-form monitor needs a linear model".into()))
                }
                _ => {}
            }
        }
        self.trigger.validate()
    }

    /// Earliest time the input history must cover.
    fn history_start(&self) -> f64 {
        self.delay.phi(0.0).min(self.controller_delay().phi(0.0)).min(0.0)
    }
}

/// One received sensor packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub index: usize,
    pub transmit_time: f64,
    pub delivery_time: f64,
    /// Grid time the packet is processed at.
    pub grid_time: f64,
    /// `grid_time - delivery_time`.
    pub snap: f64,
    /// False for stale packets overtaken by a fresher one.
    pub used: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Time and reason of the abort, if the run diverged.
    pub diverged: Option<(f64, String)>,
    /// `max |u - K(p + e)|` over grid times `≥ t₀`.
    pub max_w: f64,
    pub w_violations: usize,
    /// `max (|e| - threshold)` over the recorded (post-update) grid values.
    pub max_trigger_excess: f64,
    pub max_delivery_snap: f64,
}

/// Everything recorded along a run. Vector series are stored row-major per
/// grid time; values not defined before `t₀` are NaN.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub state_dim: usize,
    pub input_dim: usize,
    pub step: f64,
    pub t0: f64,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Plant state at `σ(t)` on the plant's Euler polygon, before any update
    /// stamped at `t` acts; NaN when `σ(t)` lies past the horizon.
    pub x_sigma: Vec<f64>,
    pub e_norm: Vec<f64>,
    pub threshold: Vec<f64>,
    pub v: Vec<f64>,
    pub l: Vec<f64>,
    pub event_flag: Vec<bool>,
    pub delivery_flag: Vec<bool>,
    pub events: EventLog,
    pub deliveries: Vec<Delivery>,
    pub diagnostics: Diagnostics,
    /// Guaranteed decay rate of `V`, when known.
    pub rate: Option<f64>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.state_dim..(i + 1) * self.state_dim]
    }

    pub fn u_at(&self, i: usize) -> &[f64] {
        &self.u[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn p_at(&self, i: usize) -> &[f64] {
        &self.p[i * self.state_dim..(i + 1) * self.state_dim]
    }

    pub fn diverged(&self) -> bool {
        self.diagnostics.diverged.is_some()
    }

    pub fn final_state(&self) -> &[f64] {
        self.x_at(self.len() - 1)
    }

    pub fn final_norm(&self) -> f64 {
        if self.diverged() {
            f64::INFINITY
        } else {
            norm(self.final_state())
        }
    }

    /// Plant state at an arbitrary recorded time, by linear interpolation.
    pub fn x_interp(&self, t: f64) -> Option<Vec<f64>> {
        let last = *self.times.last()?;
        if t < 0.0 || t > last {
            return None;
        }
        let pos = t / self.step;
        let i = (pos.floor() as usize).min(self.len() - 1);
        if i + 1 >= self.len() {
            return Some(self.x_at(i).to_vec());
        }
        let w = pos - i as f64;
        Some(
            self.x_at(i)
                .iter()
                .zip(self.x_at(i + 1))
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }

    /// `sup |p(t) - x(σ(t))|` over grid times `t ≥ t₀` with `σ(t)` inside
    /// the recorded horizon.
    pub fn prediction_error(&self) -> f64 {
        let n = self.state_dim;
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            if self.times[i] < self.t0 {
                continue;
            }
            let xs = &self.x_sigma[i * n..(i + 1) * n];
            if xs[0].is_nan() {
                continue;
            }
            let d: Vec<f64> = self.p_at(i).iter().zip(xs).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&d));
        }
        worst
    }

    /// Decay diagnostics of the monitored `V`.
    pub fn decay_report(&self) -> DecayReport {
        let (times, values): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.v)
            .filter(|(_, v)| !v.is_nan())
            .map(|(t, v)| (*t, *v))
            .unzip();
        monitor::decay_report(&times, &values, self.t0, self.rate)
    }
}

fn grid_index_at_or_after(t: f64, h: f64) -> usize {
    let k = (t / h - 1e-9).ceil();
    if k <= 0.0 {
        0
    } else {
        k as usize
    }
}

fn diverged_at(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite()) || norm(x) > DIVERGENCE_BOUND
}

/// Runs the closed loop on the grid `t_i = i h`, `0 ≤ t_i ≤ T`.
pub fn run(cfg: &SimConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let model = &cfg.model;
    let n = model.state_dim();
    let m = model.input_dim();
    let h = cfg.step;
    let steps = cfg.steps();
    let plant_delay = &cfg.delay;
    let ctrl_delay = cfg.controller_delay();
    let rule = Threshold::resolve(&cfg.trigger, model, cfg.certificate.as_ref())?;

    let schedule = match &cfg.sensing {
        Sensing::Perfect => None,
        Sensing::Sampled { period, delay, seed } => {
            Some(SensingSchedule::periodic(*period, cfg.horizon, *delay, *seed)?)
        }
    };
    let i0 = match &schedule {
        None => 0,
        Some(s) => grid_index_at_or_after(s.first_delivery(), h),
    };
    let t0 = i0 as f64 * h;

    // Controller output history, including what the plant reads before t₀.
    let start = cfg.history_start() - h;
    let mut u_hist = TimedSignal::new(m, Interpolation::Hold);
    match &cfg.pre_history {
        PreHistory::Constant(u) => u_hist.push(start, u)?,
        PreHistory::Table(sig) => {
            for i in 0..sig.len() {
                u_hist.push(sig.times()[i], sig.value(i))?;
            }
        }
    }
    let zero_u = vec![0.0; m];
    if i0 > 0 && u_hist.last_time().is_some_and(|t| t < 0.0) {
        u_hist.push(0.0, &zero_u)?;
    }

    let monitor = cfg.monitor.clone();
    let rate = match (&monitor, model.linear()) {
        (Some(mon), Some(sys)) if mon.form == FunctionalForm::Integral => Some(sys.decay_rate(cfg.trigger.theta)),
        _ => None,
    };
    let mut w_hist = TimedSignal::new(m, Interpolation::Linear);
    if monitor.is_some() {
        seed_w_history(cfg, &u_hist, &mut w_hist, t0)?;
    }

    let mut trace = SimTrace {
        state_dim: n,
        input_dim: m,
        step: h,
        t0,
        times: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(n * (steps + 1)),
        u: Vec::with_capacity(m * (steps + 1)),
        p: Vec::with_capacity(n * (steps + 1)),
        x_sigma: vec![f64::NAN; n * (steps + 1)],
        e_norm: Vec::with_capacity(steps + 1),
        threshold: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        l: Vec::with_capacity(steps + 1),
        event_flag: Vec::with_capacity(steps + 1),
        delivery_flag: Vec::with_capacity(steps + 1),
        events: EventLog::default(),
        deliveries: Vec::new(),
        diagnostics: Diagnostics::default(),
        rate,
    };

    let mut predictor = PredictorState::new(cfg.predictor, n);
    let mut sigma_dot = SigmaDotGrid::new(h, ctrl_delay.phi(0.0).min(0.0));
    let mut x = cfg.x0.clone();
    // States at the grid, kept while a transmission may still need them.
    let mut x_window: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut anchor: Option<Anchor> = None;
    let mut next_delivery = 0usize;
    let mut p_event: Vec<f64> = vec![0.0; n];
    let mut u_now: Vec<f64> = match &cfg.pre_history {
        PreHistory::Constant(u) if i0 == 0 => u.clone(),
        _ if i0 > 0 => zero_u.clone(),
        _ => u_hist.sample(0.0)?,
    };
    let mut u_plant = vec![0.0; m];
    let mut dx = vec![0.0; n];
    let mut rate = vec![0.0; n];
    let nan_n = vec![f64::NAN; n];
    let mut pending: VecDeque<(usize, f64)> = VecDeque::new();

    for i in 0..=steps {
        let t = i as f64 * h;
        trace.times.push(t);
        trace.x.extend_from_slice(&x);
        if diverged_at(&x) {
            trace.diagnostics.diverged = Some((t, format!("|x| exceeded {DIVERGENCE_BOUND:e}")));
            push_blank(&mut trace, &u_now, &nan_n);
            break;
        }
        if schedule.is_some() {
            x_window.push((t, x.clone()));
        }

        // Sensor deliveries reaching the controller by t.
        let mut delivered = false;
        match &schedule {
            None => {
                anchor = Some(Anchor { index: i, time: t, state: x.clone() });
            }
            Some(s) => {
                let order = s.delivery_order();
                while next_delivery < order.len() && s.delivery_times()[order[next_delivery]] <= t + 1e-9 * h {
                    let l = order[next_delivery];
                    let tau = s.transmit_times()[l];
                    let d = s.delivery_times()[l];
                    let fresher = anchor.as_ref().is_none_or(|a| l > a.index);
                    if fresher {
                        let state = state_at(&x_window, tau, h)?;
                        anchor = Some(Anchor { index: l, time: tau, state });
                    }
                    trace.diagnostics.max_delivery_snap = trace.diagnostics.max_delivery_snap.max(t - d);
                    trace.deliveries.push(Delivery {
                        index: l,
                        transmit_time: tau,
                        delivery_time: d,
                        grid_time: t,
                        snap: t - d,
                        used: fresher,
                    });
                    delivered = true;
                    next_delivery += 1;
                }
            }
        }
        trace.delivery_flag.push(delivered);

        let mut fired = false;
        if i >= i0 {
            let a = anchor.as_ref().ok_or_else(|| Error::Config("no sensor data at t₀".into()))?;
            let mut inputs = PredictionInputs {
                model,
                delay: ctrl_delay,
                u_history: &u_hist,
                sigma_dot: &mut sigma_dot,
                integrator: cfg.integrator,
            };
            let p = match predictor.predict(t, a, &mut inputs) {
                Ok(p) => p,
                Err(Error::Divergence(msg)) => {
                    trace.diagnostics.diverged = Some((t, msg));
                    trace.event_flag.push(false);
                    push_blank_tail(&mut trace, &u_now, &nan_n);
                    break;
                }
                Err(e) => return Err(e),
            };
            let mut e = triggering_error(&p_event, &p);
            let thr = rule.at(&p);
            if i == i0 || check_and_fire(&rule, &e, &p) {
                let pre_norm = if i == i0 { 0.0 } else { norm(&e) };
                u_now = model.eval_k(&p)?;
                if u_now.iter().any(|v| !v.is_finite()) {
                    trace.diagnostics.diverged = Some((t, "control is not finite".into()));
                    trace.event_flag.push(false);
                    push_blank_tail(&mut trace, &u_now, &nan_n);
                    break;
                }
                if u_hist.last_time().is_some_and(|last| last >= t) {
                    return Err(Error::Config(format!("input history already holds time {t}")));
                }
                u_hist.push(t, &u_now)?;
                trace.events.record(t, &u_now, norm(&p), pre_norm)?;
                p_event.copy_from_slice(&p);
                e.iter_mut().for_each(|v| *v = 0.0);
                fired = true;
            }
            let w = monitor::compute_w(model, &u_now, &p, &e);
            let wn = norm(&w);
            trace.diagnostics.max_w = trace.diagnostics.max_w.max(wn);
            if wn > W_TOLERANCE {
                trace.diagnostics.w_violations += 1;
            }
            let en = norm(&e);
            trace.diagnostics.max_trigger_excess = trace.diagnostics.max_trigger_excess.max(en - thr);
            trace.p.extend_from_slice(&p);
            pending.push_back((i, plant_delay.sigma(t)?));
            trace.e_norm.push(en);
            trace.threshold.push(thr);

            let mut v_val = f64::NAN;
            let mut l_val = f64::NAN;
            if let Some(mon) = &monitor {
                if w_hist.last_time().is_none_or(|last| t > last) {
                    w_hist.push(t, &w)?;
                }
                if (i - i0) % mon.stride == 0 {
                    let l = monitor::compute_l(mon, &w_hist, plant_delay, t, h)?;
                    v_val = match mon.form {
                        FunctionalForm::Sup => {
                            let cert = cfg.certificate.as_ref().expect("validated");
                            monitor::compute_v(cert, &x, l, mon.b)
                        }
                        FunctionalForm::Integral => {
                            monitor::compute_v_linear(model.linear().expect("validated"), &x, l)
                        }
                    };
                    l_val = l;
                }
            }
            trace.v.push(v_val);
            trace.l.push(l_val);
        } else {
            trace.p.extend_from_slice(&nan_n);
            trace.e_norm.push(f64::NAN);
            trace.threshold.push(f64::NAN);
            trace.v.push(f64::NAN);
            trace.l.push(f64::NAN);
        }
        trace.event_flag.push(fired);
        trace.u.extend_from_slice(&u_now);

        while let Some(&(j, s)) = pending.front() {
            if s > t + 1e-9 * h {
                break;
            }
            trace.x_sigma[j * n..(j + 1) * n].copy_from_slice(&x);
            pending.pop_front();
        }
        if i == steps {
            break;
        }
        while let Some(&(j, s)) = pending.front() {
            if s >= t + h - 1e-9 * h {
                break;
            }
            let a = snap_to_grid(plant_delay.phi(t), h);
            held_input_rate(model, &u_hist, a, trace.times[j], &x, &mut u_plant, &mut dx, &mut rate)?;
            for k in 0..n {
                trace.x_sigma[j * n + k] = x[k] + (s - t) * rate[k];
            }
            pending.pop_front();
        }

        plant_step(model, &u_hist, plant_delay, &mut x, t, h, &mut u_plant, &mut dx, &mut rate)?;

        if i % 1024 == 0 {
            let keep = plant_delay.phi(t).min(
                anchor
                    .as_ref()
                    .map_or(f64::NEG_INFINITY, |a| ctrl_delay.phi(a.time)),
            );
            if keep.is_finite() {
                u_hist.prune_before(keep - h);
                predictor.prune_before(keep - h);
            }
            if let Some(s) = &schedule {
                // Transmissions still in flight need their states.
                let pending = s.delivery_order()[next_delivery..]
                    .iter()
                    .map(|&l| s.transmit_times()[l])
                    .fold(t, f64::min);
                let cut = x_window.partition_point(|(s, _)| *s < pending - 2.0 * h);
                x_window.drain(..cut);
            }
            w_hist.prune_before(plant_delay.phi(t) - h);
        }
    }
    trace.x_sigma.truncate(n * trace.len());
    Ok(trace)
}

/// Euler step of the plant over `[t, t+h]` with the state frozen at `t` and
/// updates landing inside the step taking effect at their arrival time.
#[allow(clippy::too_many_arguments)]
fn plant_step(
    model: &SystemModel,
    u_hist: &TimedSignal,
    delay: &ActuationDelay,
    x: &mut [f64],
    t: f64,
    h: f64,
    u: &mut [f64],
    dx: &mut [f64],
    rate: &mut [f64],
) -> Result<()> {
    let a = snap_to_grid(delay.phi(t), h);
    let b = snap_to_grid(delay.phi(t + h), h);
    held_input_rate(model, u_hist, a, b, x, u, dx, rate)?;
    for (xi, r) in x.iter_mut().zip(rate.iter()) {
        *xi += h * r;
    }
    Ok(())
}

fn push_blank(trace: &mut SimTrace, u_now: &[f64], nan_n: &[f64]) {
    trace.delivery_flag.push(false);
    trace.event_flag.push(false);
    push_blank_tail(trace, u_now, nan_n);
}

fn push_blank_tail(trace: &mut SimTrace, u_now: &[f64], nan_n: &[f64]) {
    trace.p.extend_from_slice(nan_n);
    trace.e_norm.push(f64::NAN);
    trace.threshold.push(f64::NAN);
    trace.v.push(f64::NAN);
    trace.l.push(f64::NAN);
    trace.u.extend_from_slice(u_now);
}

/// Plant state at `tau` by linear interpolation of the stored grid states.
fn state_at(window: &[(f64, Vec<f64>)], tau: f64, h: f64) -> Result<Vec<f64>> {
    let j = window.partition_point(|(s, _)| *s <= tau + 1e-9 * h);
    if j == 0 {
        return Err(Error::Channel(format!("state at transmission time {tau} is not recorded")));
    }
    let (sa, xa) = &window[j - 1];
    if (tau - sa).abs() <= 1e-9 * h || j == window.len() {
        return Ok(xa.clone());
    }
    let (sb, xb) = &window[j];
    let w = (tau - sa) / (sb - sa);
    Ok(xa.iter().zip(xb).map(|(a, b)| a + w * (b - a)).collect())
}

/// `w = u - K(p)` on `[φ(0), t₀)`, where `p` is the prediction from `x(0)`
/// driven by the pre-history.
fn seed_w_history(cfg: &SimConfig, u_hist: &TimedSignal, w_hist: &mut TimedSignal, t0: f64) -> Result<()> {
    let model = &cfg.model;
    let h = cfg.step;
    let start = cfg.delay.phi(0.0);
    if start >= t0 {
        return Ok(());
    }
    let anchor = Anchor { index: 0, time: 0.0, state: cfg.x0.clone() };
    let mut predictor = PredictorState::new(PredictorMethod::OpenLoop, model.state_dim());
    let mut sigma_dot = SigmaDotGrid::new(h, start.min(0.0));
    let mut u = vec![0.0; model.input_dim()];
    let mut k = vec![0.0; model.input_dim()];
    let first = (start / h).ceil() as i64;
    let last = grid_index_at_or_after(t0, h) as i64;
    let mut times = vec![start];
    times.extend((first..last).map(|j| j as f64 * h).filter(|&s| s > start));
    for s in times {
        let p = if s == start {
            cfg.x0.clone()
        } else {
            let mut inputs = PredictionInputs {
                model,
                delay: &cfg.delay,
                u_history: u_hist,
                sigma_dot: &mut sigma_dot,
                integrator: cfg.integrator,
            };
            predictor.predict(s, &anchor, &mut inputs)?
        };
        u_hist.sample_into(s, &mut u)?;
        model.k_into(&p, &mut k);
        let w: Vec<f64> = u.iter().zip(&k).map(|(a, b)| a - b).collect();
        w_hist.push(s, &w)?;
    }
    Ok(())
}

/// `n_ic` standard-normal initial states of dimension `n`.
pub fn initial_conditions(n: usize, n_ic: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_ic)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// Configuration of one heatmap cell: sampled sensing with period `delta_tau`
/// and constant sensing delay `d_psi`; the base seed is kept.
pub fn cell_config(base: &SimConfig, delta_tau: f64, d_psi: f64) -> SimConfig {
    let mut cfg = base.clone();
    let seed = match base.sensing {
        Sensing::Sampled { seed, .. } => seed,
        Sensing::Perfect => 0,
    };
    cfg.sensing = Sensing::Sampled {
        period: delta_tau,
        delay: SensingDelay::Fixed(d_psi),
        seed,
    };
    cfg.monitor = None;
    cfg
}

/// Average final state norm over the initial conditions; divergent runs
/// count as [`SATURATED`].
pub fn heatmap_cell(base: &SimConfig, delta_tau: f64, d_psi: f64, ics: &[Vec<f64>]) -> Result<f64> {
    if ics.is_empty() {
        return Err(Error::Config("heatmap needs at least one initial condition".into()));
    }
    let mut cfg = cell_config(base, delta_tau, d_psi);
    let mut acc = 0.0;
    for x0 in ics {
        cfg.x0 = x0.clone();
        let trace = run(&cfg)?;
        acc += if trace.diverged() {
            SATURATED
        } else {
            trace.final_norm().min(SATURATED)
        };
    }
    Ok(acc / ics.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub delta_tau: f64,
    pub d_psi: f64,
    pub avg_final_norm: f64,
}

/// Cells in row-major order over `(Δτ, Dψ)`.
pub fn heatmap_cells(delta_tau_grid: &[f64], d_psi_grid: &[f64]) -> Vec<(f64, f64)> {
    let mut cells = Vec::with_capacity(delta_tau_grid.len() * d_psi_grid.len());
    for &dt in delta_tau_grid {
        for &dp in d_psi_grid {
            cells.push((dt, dp));
        }
    }
    cells
}

/// Sequential sweep; every cell uses the same initial conditions.
pub fn heatmap(
    base: &SimConfig,
    delta_tau_grid: &[f64],
    d_psi_grid: &[f64],
    n_ic: usize,
    seed: u64,
) -> Result<Vec<HeatmapCell>> {
    if delta_tau_grid.is_empty() || d_psi_grid.is_empty() || n_ic == 0 {
        return Err(Error::Config("heatmap grids and n_ic must be nonempty".into()));
    }
    let ics = initial_conditions(base.model.state_dim(), n_ic, seed);
    heatmap_cells(delta_tau_grid, d_psi_grid)
        .into_iter()
        .map(|(dt, dp)| {
            Ok(HeatmapCell {
                delta_tau: dt,
                d_psi: dp,
                avg_final_norm: heatmap_cell(base, dt, dp, &ics)?,
            })
        })
        .collect()
}
