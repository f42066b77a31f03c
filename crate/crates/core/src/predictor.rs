//! Prediction of the plant state one actuation delay ahead,
//! `p(t) ≈ x(σ(t))`, from the most recent delivered state.
//!
//! Four strategies are provided:
//!
//! * closed-loop: re-integrate `ṗ(s) = σ̇(s) f(p(s), u(s))` from `φ(τ)` with
//!   `p(φ(τ)) = x(τ)` at every call, so a prediction mismatch never outlives
//!   the window;
//! * semi-closed-loop: evaluate the integral form by quadrature over the
//!   stored `(p, u)` history, anchored at the delivered state;
//! * open-loop: advance `p` by one step per call from `p(φ(0)) = x(0)` and
//!   never re-anchor;
//! * linear closed form: `e^{A(σ(t)-τ)} x(τ)` plus the exact convolution of
//!   the piecewise-constant input, via matrix exponentials.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DVector;

use crate::delay::ActuationDelay;
use crate::linalg;
use crate::model::{LinearSystem, SystemModel};
use crate::signal::{Interpolation, TimedSignal};
use crate::{norm, Error, Result};

const DIVERGENCE: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorMethod {
    OpenLoop,
    SemiClosedLoop,
    ClosedLoop,
    LinearClosedForm,
}

impl PredictorMethod {
    pub fn name(self) -> &'static str {
        match self {
            PredictorMethod::OpenLoop => "open-loop",
            PredictorMethod::SemiClosedLoop => "semi-closed-loop",
            PredictorMethod::ClosedLoop => "closed-loop",
            PredictorMethod::LinearClosedForm => "linear-closed-form",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "open-loop" => PredictorMethod::OpenLoop,
            "semi-closed-loop" => PredictorMethod::SemiClosedLoop,
            "closed-loop" => PredictorMethod::ClosedLoop,
            "linear-closed-form" => PredictorMethod::LinearClosedForm,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Explicit Euler on the uniform grid `s_k = k h`.
    Euler,
    Midpoint,
    /// Explicit Euler on the mesh `s_j = φ(τ + j h)`, the image of the plant
    /// grid, so that each step spans exactly `h` of plant time. Used by the
    /// closed-loop method; the other methods treat it as [`Integrator::Euler`].
    PlantMesh,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Midpoint => "midpoint",
            Integrator::PlantMesh => "plant-mesh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "euler" => Integrator::Euler,
            "midpoint" => Integrator::Midpoint,
            "plant-mesh" => Integrator::PlantMesh,
            _ => return None,
        })
    }
}

/// Rounds `t` onto the grid of spacing `h` when it is within rounding error
/// of a grid point.
pub fn snap_to_grid(t: f64, h: f64) -> f64 {
    let k = (t / h).round();
    if (t - k * h).abs() <= 1e-9 * h {
        k * h
    } else {
        t
    }
}

/// Average of `f(x, u(s))` over one step whose input window is `s ∈ [a, b]`,
/// with `x` frozen and the hold input split at its switching times. Switch
/// times are mapped linearly onto the step.
pub fn held_input_rate(
    model: &SystemModel,
    u_history: &TimedSignal,
    a: f64,
    b: f64,
    x: &[f64],
    u: &mut [f64],
    dx: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    out.iter_mut().for_each(|v| *v = 0.0);
    let times = u_history.times();
    let lo = times.partition_point(|&s| s <= a);
    let hi = times.partition_point(|&s| s < b).max(lo);
    let mut left = a;
    for j in lo..=hi {
        let right = if j < hi { times[j] } else { b };
        let weight = if b > a { (right - left) / (b - a) } else { 1.0 };
        if weight > 0.0 || (b <= a && j == lo) {
            u_history.sample_into(left, u)?;
            model.f_into(x, u, dx);
            for (o, d) in out.iter_mut().zip(dx.iter()) {
                *o += weight * d;
            }
        }
        left = right;
    }
    Ok(())
}

/// Integrates `ṗ = σ̇ f(p, u)` on the mesh `φ(r_j)`, `r_j` the plant grid,
/// from `φ(τ)` to `t`. With `σ̇ ds = dr` each step is an Euler step of
/// plant time.
fn integrate_plant_mesh(inputs: &PredictionInputs<'_>, anchor: &Anchor, t: f64) -> Result<Vec<f64>> {
    let h = inputs.sigma_dot.step();
    let delay = inputs.delay;
    let n = anchor.state.len();
    let m = inputs.model.input_dim();
    let start = delay.phi(anchor.time);
    if start > t + 1e-9 * h {
        return Err(Error::Predictor(format!("window start {start} is after {t}")));
    }
    if inputs.u_history.is_empty() || start < inputs.u_history.times()[0] {
        return Err(Error::Predictor(format!("input history does not cover time {start}")));
    }
    let target = delay.sigma(t)?;
    let mut p = anchor.state.clone();
    let mut rate = vec![0.0; n];
    let mut u = vec![0.0; m];
    let mut dx = vec![0.0; n];
    let mut r = snap_to_grid(anchor.time, h);
    let mut k = (r / h - 1e-9).floor() as i64 + 1;
    let mut a = snap_to_grid(delay.phi(r), h);
    while r < target - 1e-9 * h {
        let grid_next = k as f64 * h;
        let (r_next, b) = if grid_next < target - 1e-9 * h {
            (grid_next, snap_to_grid(delay.phi(grid_next), h))
        } else {
            (target, t)
        };
        held_input_rate(inputs.model, inputs.u_history, a, b, &p, &mut u, &mut dx, &mut rate)?;
        for i in 0..n {
            p[i] += (r_next - r) * rate[i];
        }
        r = r_next;
        a = b;
        k += 1;
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence("prediction is not finite".into()));
    }
    Ok(p)
}

/// Delivered plant state `x(τ)` anchoring a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub index: usize,
    pub time: f64,
    pub state: Vec<f64>,
}

/// Lazily filled table of `σ̇` on a half-step grid, so that repeated
/// re-integrations over the same window do not re-invert `φ`.
#[derive(Debug, Clone)]
pub struct SigmaDotGrid {
    step: f64,
    origin: i64,
    values: Vec<f64>,
}

impl SigmaDotGrid {
    /// Grid with engine step `step` covering times from `start` on.
    pub fn new(step: f64, start: f64) -> Self {
        let half = 0.5 * step;
        SigmaDotGrid {
            step,
            origin: (start / half).floor() as i64 - 2,
            values: Vec::new(),
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `σ̇` at `k · step/2`.
    fn at_half_index(&mut self, delay: &ActuationDelay, k: i64) -> Result<f64> {
        let half = 0.5 * self.step;
        if k < self.origin {
            return delay.sigma_dot(k as f64 * half, self.step);
        }
        let idx = (k - self.origin) as usize;
        if idx >= self.values.len() {
            self.values.resize(idx + 1, f64::NAN);
        }
        let v = self.values[idx];
        if v.is_nan() {
            let v = delay.sigma_dot(k as f64 * half, self.step)?;
            self.values[idx] = v;
            Ok(v)
        } else {
            Ok(v)
        }
    }

    /// `σ̇` at grid point `i · step`.
    pub fn at_grid(&mut self, delay: &ActuationDelay, i: i64) -> Result<f64> {
        self.at_half_index(delay, 2 * i)
    }

    /// `σ̇` at `(i + ½) · step`.
    pub fn at_midpoint(&mut self, delay: &ActuationDelay, i: i64) -> Result<f64> {
        self.at_half_index(delay, 2 * i + 1)
    }
}

/// Everything a prediction reads besides the anchor.
pub struct PredictionInputs<'a> {
    pub model: &'a SystemModel,
    pub delay: &'a ActuationDelay,
    /// Controller output history (hold mode), including the pre-history.
    pub u_history: &'a TimedSignal,
    pub sigma_dot: &'a mut SigmaDotGrid,
    pub integrator: Integrator,
}

/// Forward reader over a hold signal for increasing query times.
struct HoldCursor<'a> {
    sig: &'a TimedSignal,
    idx: usize,
}

impl<'a> HoldCursor<'a> {
    fn start(sig: &'a TimedSignal, t: f64) -> Result<Self> {
        if sig.is_empty() || t < sig.times()[0] {
            return Err(Error::Predictor(format!(
                "input history does not cover time {t}"
            )));
        }
        let idx = sig.times().partition_point(|&s| s <= t) - 1;
        Ok(HoldCursor { sig, idx })
    }

    fn at(&mut self, t: f64) -> &'a [f64] {
        let times = self.sig.times();
        while self.idx + 1 < times.len() && times[self.idx + 1] <= t {
            self.idx += 1;
        }
        self.sig.value(self.idx)
    }
}

fn grid_index(t: f64, h: f64) -> i64 {
    (t / h).round() as i64
}

/// Euler (or midpoint) integration of `ṗ = σ̇ f(p, u)` from `start` (value
/// `p0`) to the grid time `t`, calling `visit(s, p)` at every grid point
/// reached.
fn integrate_window<V>(
    inputs: &mut PredictionInputs<'_>,
    start: f64,
    p0: &[f64],
    t: f64,
    mut visit: V,
) -> Result<Vec<f64>>
where
    V: FnMut(f64, &[f64]) -> Result<()>,
{
    let h = inputs.sigma_dot.step();
    let start = {
        let k = (start / h).round();
        if (start - k * h).abs() <= 1e-9 * h {
            k * h
        } else {
            start
        }
    };
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut dp = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let t_index = grid_index(t, h);
    if start > t + 1e-9 * h {
        return Err(Error::Predictor(format!("window start {start} is after {t}")));
    }
    let mut u = HoldCursor::start(inputs.u_history, start)?;
    let model = inputs.model;
    let delay = inputs.delay;

    // first grid point strictly after start
    let mut k = (start / h).floor() as i64 + 1;
    if (k as f64 * h - start) < 1e-9 * h {
        k += 1;
    }
    let mut s = start;
    let mut first = true;
    while s < t - 1e-9 * h {
        let next = if k > t_index { t } else { k as f64 * h };
        let ds = next - s;
        let sd = if first {
            delay.sigma_dot(s, h)?
        } else {
            inputs.sigma_dot.at_grid(delay, k - 1)?
        };
        model.f_into(&p, u.at(s), &mut dp);
        match inputs.integrator {
            Integrator::Euler | Integrator::PlantMesh => {
                for i in 0..n {
                    p[i] += ds * sd * dp[i];
                }
            }
            Integrator::Midpoint => {
                for i in 0..n {
                    mid[i] = p[i] + 0.5 * ds * sd * dp[i];
                }
                let sm = s + 0.5 * ds;
                let sd_mid = if first {
                    delay.sigma_dot(sm, h)?
                } else {
                    inputs.sigma_dot.at_midpoint(delay, k - 1)?
                };
                model.f_into(&mid, u.at(sm), &mut dp);
                for i in 0..n {
                    p[i] += ds * sd_mid * dp[i];
                }
            }
        }
        s = next;
        first = false;
        k += 1;
        visit(s, &p)?;
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence("prediction is not finite".into()));
    }
    Ok(p)
}

/// Closed-loop prediction: integrate `ṗ = σ̇ f(p, u)` from `φ(τ)` with
/// `p(φ(τ)) = x(τ)` up to the grid time `t`.
pub fn predict_closed_loop(t: f64, anchor: &Anchor, inputs: &mut PredictionInputs<'_>) -> Result<Vec<f64>> {
    if inputs.integrator == Integrator::PlantMesh {
        return integrate_plant_mesh(inputs, anchor, t);
    }
    let start = inputs.delay.phi(anchor.time);
    integrate_window(inputs, start, &anchor.state, t, |_, _| Ok(()))
}

/// Linear prediction `e^{A(σ(t)-τ)} x(τ) + ∫ σ̇(s) e^{A(σ(t)-σ(s))} B u(s) ds`,
/// integrating each constant piece of `u` exactly after the change of
/// variables `r = σ(s)`.
pub fn predict_linear(
    t: f64,
    anchor: &Anchor,
    u_history: &TimedSignal,
    delay: &ActuationDelay,
    sys: &LinearSystem,
) -> Result<Vec<f64>> {
    let start = delay.phi(anchor.time);
    if t < start {
        return Err(Error::Predictor(format!("window start {start} is after {t}")));
    }
    let sigma_t = delay.sigma(t)?;
    let a = sys.a();
    let x = DVector::from_column_slice(&anchor.state);
    let (flow, _) = linalg::expm_with_integral(a, sigma_t - anchor.time)?;
    let mut p = flow * x;

    let times = u_history.times();
    if times.is_empty() || start < times[0] {
        return Err(Error::Predictor(format!("input history does not cover time {start}")));
    }
    let first = times.partition_point(|&s| s <= start) - 1;
    let last = times.partition_point(|&s| s < t);
    // integral from 0 to (σ(t) - r) at the current left edge r = σ(start) = τ
    let (_, mut g_left) = linalg::expm_with_integral(a, sigma_t - anchor.time)?;
    let b = sys.b();
    for i in first..last.max(first + 1) {
        let seg_end = if i + 1 < last { times[i + 1] } else { t };
        let r_end = if i + 1 < last { delay.sigma(seg_end)? } else { sigma_t };
        let (_, g_right) = linalg::expm_with_integral(a, sigma_t - r_end)?;
        let uvec = DVector::from_column_slice(u_history.value(i));
        p += (&g_left - &g_right) * (b * uvec);
        g_left = g_right;
    }
    Ok(p.as_slice().to_vec())
}

/// Per-run predictor state.
#[derive(Debug, Clone)]
pub struct PredictorState {
    method: PredictorMethod,
    anchor_index: Option<usize>,
    p_history: TimedSignal,
    open_loop: Option<(f64, Vec<f64>)>,
}

impl PredictorState {
    pub fn new(method: PredictorMethod, state_dim: usize) -> Self {
        PredictorState {
            method,
            anchor_index: None,
            p_history: TimedSignal::new(state_dim, Interpolation::Linear),
            open_loop: None,
        }
    }

    pub fn method(&self) -> PredictorMethod {
        self.method
    }

    pub fn anchor_index(&self) -> Option<usize> {
        self.anchor_index
    }

    pub fn p_history(&self) -> &TimedSignal {
        &self.p_history
    }

    /// Drops stored predictions before `t`.
    pub fn prune_before(&mut self, t: f64) {
        self.p_history.prune_before(t);
    }

    /// Prediction at the grid time `t`, which must follow every earlier call.
    pub fn predict(&mut self, t: f64, anchor: &Anchor, inputs: &mut PredictionInputs<'_>) -> Result<Vec<f64>> {
        if let Some(prev) = self.anchor_index {
            if anchor.index < prev {
                return Err(Error::Predictor(format!(
                    "anchor index went back from {prev} to {}",
                    anchor.index
                )));
            }
        }
        self.anchor_index = Some(anchor.index);
        let p = match self.method {
            PredictorMethod::ClosedLoop => predict_closed_loop(t, anchor, inputs)?,
            PredictorMethod::LinearClosedForm => {
                let sys = inputs.model.linear().ok_or_else(|| {
                    Error::Config("linear-closed-form predictor needs a linear model".into())
                })?;
                predict_linear(t, anchor, inputs.u_history, inputs.delay, sys)?
            }
            PredictorMethod::OpenLoop => self.predict_open_loop(t, anchor, inputs)?,
            PredictorMethod::SemiClosedLoop => self.predict_semi_closed(t, anchor, inputs)?,
        };
        if !(norm(&p) <= DIVERGENCE) {
            return Err(Error::Divergence(format!("prediction diverged at t = {t}")));
        }
        if self.p_history.last_time().is_none_or(|last| t > last) {
            self.p_history.push(t, &p)?;
        }
        Ok(p)
    }

    fn predict_open_loop(&mut self, t: f64, anchor: &Anchor, inputs: &mut PredictionInputs<'_>) -> Result<Vec<f64>> {
        let (from, p0) = match self.open_loop.take() {
            Some(state) => state,
            None => (inputs.delay.phi(anchor.time), anchor.state.clone()),
        };
        let p = integrate_window(inputs, from, &p0, t, |_, _| Ok(()))?;
        self.open_loop = Some((t, p.clone()));
        Ok(p)
    }

    fn predict_semi_closed(&mut self, t: f64, anchor: &Anchor, inputs: &mut PredictionInputs<'_>) -> Result<Vec<f64>> {
        let start = inputs.delay.phi(anchor.time);
        let covered = self
            .p_history
            .times()
            .first()
            .is_some_and(|&first| first <= start)
            && self.p_history.last_time().is_some_and(|last| last < t);
        if !covered {
            // No stored predictions over the window yet: seed them by direct
            // integration.
            let hist = &mut self.p_history;
            let mut seeded = Vec::new();
            let p = integrate_window(inputs, start, &anchor.state, t, |s, p| {
                seeded.push((s, p.to_vec()));
                Ok(())
            })?;
            if hist.last_time().is_none_or(|last| start > last) {
                hist.push(start, &anchor.state)?;
            }
            for (s, v) in seeded {
                if s < t && hist.last_time().is_none_or(|last| s > last) {
                    hist.push(s, &v)?;
                }
            }
            return Ok(p);
        }

        let h = inputs.sigma_dot.step();
        let n = anchor.state.len();
        let times = self.p_history.times();
        let lo = times.partition_point(|&s| s <= start);
        let mut knots: Vec<f64> = Vec::with_capacity(times.len() - lo + 1);
        knots.push(start);
        knots.extend_from_slice(&times[lo..]);
        let mut u = HoldCursor::start(inputs.u_history, start)?;
        let mut acc = anchor.state.clone();
        let mut pa = vec![0.0; n];
        let mut pb = vec![0.0; n];
        let mut fa = vec![0.0; n];
        let mut fb = vec![0.0; n];
        for w in knots.windows(2) {
            let (sa, sb) = (w[0], w[1]);
            self.p_history.sample_into(sa, &mut pa)?;
            self.p_history.sample_into(sb, &mut pb)?;
            let u_seg = u.at(sa);
            let sda = if (sa / h - (sa / h).round()).abs() < 1e-9 {
                inputs.sigma_dot.at_grid(inputs.delay, grid_index(sa, h))?
            } else {
                inputs.delay.sigma_dot(sa, h)?
            };
            let sdb = inputs.sigma_dot.at_grid(inputs.delay, grid_index(sb, h))?;
            inputs.model.f_into(&pa, u_seg, &mut fa);
            inputs.model.f_into(&pb, u_seg, &mut fb);
            for i in 0..n {
                acc[i] += 0.5 * (sb - sa) * (sda * fa[i] + sdb * fb[i]);
            }
        }
        // last stretch to t with the left value (explicit in the unknown p(t))
        let s_last = *knots.last().expect("window has a start knot");
        self.p_history.sample_into(s_last, &mut pa)?;
        let sd = inputs.sigma_dot.at_grid(inputs.delay, grid_index(s_last, h))?;
        inputs.model.f_into(&pa, u.at(s_last), &mut fa);
        for i in 0..n {
            acc[i] += (t - s_last) * sd * fa[i];
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_rows, Matrix};
    use crate::model::{FeedbackLaw, VectorField};
    use alloc::sync::Arc;
    use approx::assert_relative_eq;

    fn integrator_model() -> SystemModel {
        let f: VectorField = Arc::new(|_, u, out| out[0] = u[0]);
        let k: FeedbackLaw = Arc::new(|x, out| out[0] = -x[0]);
        SystemModel::new(1, 1, f, k, 1.0, 1.0).unwrap()
    }

    fn constant_u(c: f64, from: f64) -> TimedSignal {
        let mut u = TimedSignal::new(1, Interpolation::Hold);
        u.push(from, &[c]).unwrap();
        u
    }

    #[test]
    fn zero_dynamics_keep_anchor() {
        let f: VectorField = Arc::new(|_, _, out| out.iter_mut().for_each(|v| *v = 0.0));
        let k: FeedbackLaw = Arc::new(|_, out| out[0] = 0.0);
        let model = SystemModel::new(2, 1, f, k, 0.0, 0.0).unwrap();
        let delay = ActuationDelay::bump();
        let u = constant_u(3.0, -5.0);
        let mut grid = SigmaDotGrid::new(1e-2, -5.0);
        let anchor = Anchor { index: 0, time: 2.0, state: vec![0.3, -1.2] };
        for method in [PredictorMethod::ClosedLoop, PredictorMethod::OpenLoop, PredictorMethod::SemiClosedLoop] {
            let mut st = PredictorState::new(method, 2);
            for i in 300..320 {
                let mut inputs = PredictionInputs {
                    model: &model,
                    delay: &delay,
                    u_history: &u,
                    sigma_dot: &mut grid,
                    integrator: Integrator::Euler,
                };
                let p = st.predict(i as f64 * 1e-2, &anchor, &mut inputs).unwrap();
                assert_eq!(p, vec![0.3, -1.2]);
            }
        }
    }

    #[test]
    fn scalar_integrator_closed_form() {
        // ṗ = u with constant delay: p(t) = x(τ) + c (t - φ(τ)).
        let model = integrator_model();
        let delay = ActuationDelay::constant(0.5).unwrap();
        let u = constant_u(2.0, -1.0);
        let mut grid = SigmaDotGrid::new(1e-3, -1.0);
        let anchor = Anchor { index: 0, time: 1.0, state: vec![0.25] };
        let t = 1.7;
        let expected = 0.25 + 2.0 * (t - 0.5);
        let mut inputs = PredictionInputs {
            model: &model,
            delay: &delay,
            u_history: &u,
            sigma_dot: &mut grid,
            integrator: Integrator::Euler,
        };
        let p = predict_closed_loop(t, &anchor, &mut inputs).unwrap();
        assert_relative_eq!(p[0], expected, epsilon = 1e-10);
        let sys = LinearSystem::new(
            Matrix::zeros(1, 1),
            from_rows(&[&[1.0]]),
            from_rows(&[&[-1.0]]),
            Matrix::identity(1, 1),
        )
        .unwrap();
        let p_lin = predict_linear(t, &anchor, &u, &delay, &sys).unwrap();
        assert_relative_eq!(p_lin[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn linear_homogeneous_flow() {
        let sys = LinearSystem::new(
            from_rows(&[&[0.0, 1.0], &[-2.0, -0.5]]),
            from_rows(&[&[0.0], &[1.0]]),
            from_rows(&[&[0.0, 0.0]]),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let delay = ActuationDelay::bump();
        let u = constant_u(0.0, -2.0);
        let anchor = Anchor { index: 0, time: 3.0, state: vec![1.0, -1.0] };
        let t = 3.4;
        let p = predict_linear(t, &anchor, &u, &delay, &sys).unwrap();
        let sig = delay.sigma(t).unwrap();
        let e = linalg::expm(&(sys.a() * (sig - 3.0))).unwrap();
        let expected = e * DVector::from_column_slice(&[1.0, -1.0]);
        assert_relative_eq!(p[0], expected[0], epsilon = 1e-12);
        assert_relative_eq!(p[1], expected[1], epsilon = 1e-12);
    }

    #[test]
    fn linear_and_closed_loop_agree_with_piecewise_input() {
        let sys = LinearSystem::new(
            from_rows(&[&[0.0, 1.0], &[-1.0, -0.3]]),
            from_rows(&[&[0.0], &[1.0]]),
            from_rows(&[&[-1.0, -1.0]]),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let model = SystemModel::from_linear(sys.clone());
        let delay = ActuationDelay::bump();
        let mut u = TimedSignal::new(1, Interpolation::Hold);
        u.push(-2.0, &[0.0]).unwrap();
        u.push(2.2, &[1.5]).unwrap();
        u.push(2.6, &[-0.7]).unwrap();
        let anchor = Anchor { index: 0, time: 2.5, state: vec![0.4, 0.1] };
        let t = 2.9;
        let p_lin = predict_linear(t, &anchor, &u, &delay, &sys).unwrap();
        let mut errs = Vec::new();
        for h in [2e-3, 1e-3] {
            let mut grid = SigmaDotGrid::new(h, -2.0);
            let mut inputs = PredictionInputs {
                model: &model,
                delay: &delay,
                u_history: &u,
                sigma_dot: &mut grid,
                integrator: Integrator::Euler,
            };
            let p = predict_closed_loop(t, &anchor, &mut inputs).unwrap();
            errs.push(norm(&[p[0] - p_lin[0], p[1] - p_lin[1]]));
        }
        assert!(errs[1] < 1e-3, "{errs:?}");
        assert!(errs[1] < errs[0]);
    }

    #[test]
    fn anchor_cannot_go_back() {
        let model = integrator_model();
        let delay = ActuationDelay::constant(0.1).unwrap();
        let u = constant_u(0.0, -1.0);
        let mut grid = SigmaDotGrid::new(1e-2, -1.0);
        let mut st = PredictorState::new(PredictorMethod::ClosedLoop, 1);
        let mut inputs = PredictionInputs {
            model: &model,
            delay: &delay,
            u_history: &u,
            sigma_dot: &mut grid,
            integrator: Integrator::Euler,
        };
        st.predict(1.0, &Anchor { index: 3, time: 0.5, state: vec![0.0] }, &mut inputs).unwrap();
        assert!(st.predict(1.01, &Anchor { index: 2, time: 0.4, state: vec![0.0] }, &mut inputs).is_err());
    }

    #[test]
    fn missing_input_history_is_an_error() {
        let model = integrator_model();
        let delay = ActuationDelay::constant(0.5).unwrap();
        let u = constant_u(1.0, 0.0);
        let mut grid = SigmaDotGrid::new(1e-2, -1.0);
        let mut inputs = PredictionInputs {
            model: &model,
            delay: &delay,
            u_history: &u,
            sigma_dot: &mut grid,
            integrator: Integrator::Euler,
        };
        let anchor = Anchor { index: 0, time: 0.0, state: vec![0.0] };
        assert!(matches!(predict_closed_loop(0.2, &anchor, &mut inputs), Err(Error::Predictor(_))));
    }
}
