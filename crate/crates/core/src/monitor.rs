//! Lyapunov-Krasovskii monitoring: the input mismatch `w`, the delay-window
//! functional `L`, the value `V` and the decay report.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::delay::ActuationDelay;
use crate::model::{ClassK, IssCertificate, LinearSystem, SystemModel};
use crate::signal::{Interpolation, TimedSignal};
use crate::{norm, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalForm {
    /// `L(t) = sup_{t ≤ τ ≤ σ(t)} e^{b(τ-t)} |w(φ(τ))|`.
    Sup,
    /// `L(t) = ∫_t^{σ(t)} e^{b(τ-t)} |w(φ(τ))|² dτ`, for linear plants.
    Integral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub b: f64,
    pub form: FunctionalForm,
    /// Engine steps between two evaluations of `V`.
    pub stride: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            b: 10.0,
            form: FunctionalForm::Sup,
            stride: 10,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::Config("monitor b must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("monitor stride must be at least 1".into()));
        }
        Ok(())
    }

    /// True when `b` is large enough for the linear rate to be
    /// `(2-θ) λ_min(Q) / (4 λ_max(P))`.
    pub fn b_dominates_rate(&self, sys: &LinearSystem, theta: f64) -> bool {
        self.b >= sys.decay_rate(theta)
    }
}

/// `w = u - K(p + e)`.
pub fn compute_w(model: &SystemModel, u: &[f64], p: &[f64], e: &[f64]) -> Vec<f64> {
    let arg: Vec<f64> = p.iter().zip(e).map(|(a, b)| a + b).collect();
    let mut k = vec![0.0; u.len()];
    model.k_into(&arg, &mut k);
    u.iter().zip(&k).map(|(a, b)| a - b).collect()
}

/// `L(t)` on a uniform grid of spacing at most `step` over `[t, σ(t)]`,
/// reading `w` at `φ(τ)` from the (linear-mode) history.
pub fn compute_l(
    cfg: &MonitorConfig,
    w_history: &TimedSignal,
    delay: &ActuationDelay,
    t: f64,
    step: f64,
) -> Result<f64> {
    let end = delay.sigma(t)?;
    let span = end - t;
    let pieces = ((span / step).ceil() as usize).max(1);
    let mut buf = vec![0.0; w_history.dim()];
    match cfg.form {
        FunctionalForm::Sup => {
            let mut composed = TimedSignal::new(w_history.dim(), Interpolation::Linear);
            for j in 0..=pieces {
                let tau = if j == pieces { end } else { t + span * j as f64 / pieces as f64 };
                w_history.sample_into(delay.phi(tau).min(t), &mut buf)?;
                if j == 0 || tau > composed.last_time().unwrap_or(f64::NEG_INFINITY) {
                    composed.push(tau, &buf)?;
                }
            }
            composed.weighted_sup(t, end, cfg.b)
        }
        FunctionalForm::Integral => {
            let mut composed = TimedSignal::new(1, Interpolation::Linear);
            for j in 0..=pieces {
                let tau = if j == pieces { end } else { t + span * j as f64 / pieces as f64 };
                w_history.sample_into(delay.phi(tau).min(t), &mut buf)?;
                let wn = norm(&buf);
                if j == 0 || tau > composed.last_time().unwrap_or(f64::NEG_INFINITY) {
                    composed.push(tau, &[(cfg.b * (tau - t)).exp() * wn * wn])?;
                }
            }
            Ok(composed.integrate(t, end, 1, |v, o| o[0] = v[0])?[0])
        }
    }
}

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫₀^upper ρ(r)/r dr` by composite Gauss-Legendre (no endpoint evaluation).
pub fn rho_over_r_quadrature(rho: &ClassK, upper: f64) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let pieces = 256;
    let width = upper / pieces as f64;
    let mut acc = 0.0;
    for i in 0..pieces {
        let mid = (i as f64 + 0.5) * width;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            for r in [mid - 0.5 * width * x, mid + 0.5 * width * x] {
                acc += w * rho.eval(r) / r;
            }
        }
    }
    acc * 0.5 * width
}

/// `∫₀^upper ρ(r)/r dr`, closed form `c upper²/2` for `ρ = c r²`.
pub fn rho_over_r_integral(rho: &ClassK, upper: f64) -> f64 {
    match rho.quadratic_coeff() {
        Some(c) => 0.5 * c * upper * upper,
        None => rho_over_r_quadrature(rho, upper),
    }
}

/// `V = S(x) + (2/b) ∫₀^{2L} ρ(r)/r dr`.
pub fn compute_v(cert: &IssCertificate, x: &[f64], l: f64, b: f64) -> f64 {
    (cert.s)(x) + 2.0 / b * rho_over_r_integral(&cert.rho, 2.0 * l)
}

/// `V = xᵀPx + (4|PB|²/λ_min(Q)) L`.
pub fn compute_v_linear(sys: &LinearSystem, x: &[f64], l: f64) -> f64 {
    let p = sys.p();
    let n = x.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += x[i] * p[(i, j)] * x[j];
        }
    }
    let pb = sys.pb_norm();
    quad + 4.0 * pb * pb / sys.lambda_min_q() * l
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// Largest `V(t_{j+1}) - V(t_j)` after `t₀` (0 when `V` never grows).
    pub max_increment: f64,
    pub increments: usize,
    /// Least-squares slope of `ln V` against `t` on `[t₀, T]`.
    pub slope: Option<f64>,
    /// Guaranteed rate `μ`, when known.
    pub rate: Option<f64>,
    /// `max_{i<j} V(t_j) e^{μ(t_j - t_i)} / V(t_i)`; at most 1 when the
    /// exponential envelope holds exactly.
    pub envelope_ratio: Option<f64>,
    pub at_equilibrium: bool,
}

/// Decay diagnostics for `V` sampled at `times`, restricted to `t ≥ t0`.
pub fn decay_report(times: &[f64], values: &[f64], t0: f64, rate: Option<f64>) -> DecayReport {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= t0 && v.is_finite())
        .map(|(t, v)| (*t, *v))
        .collect();
    let mut max_increment: f64 = 0.0;
    let mut increments = 0;
    for w in pts.windows(2) {
        let d = w[1].1 - w[0].1;
        if d > 0.0 {
            increments += 1;
            max_increment = max_increment.max(d);
        }
    }
    let at_equilibrium = pts.iter().all(|(_, v)| *v == 0.0);
    let logs: Vec<(f64, f64)> = pts.iter().filter(|(_, v)| *v > 0.0).map(|(t, v)| (*t, v.ln())).collect();
    let slope = if logs.len() >= 2 && !at_equilibrium {
        let n = logs.len() as f64;
        let mt = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = logs.iter().map(|(t, l)| (t - mt) * (l - ml)).sum();
        let sxx: f64 = logs.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };
    let envelope_ratio = match rate {
        Some(mu) if logs.len() >= 2 => {
            let mut best_prev = f64::INFINITY;
            let mut worst = f64::NEG_INFINITY;
            for (t, l) in &logs {
                let scaled = l + mu * t;
                if best_prev.is_finite() {
                    worst = worst.max(scaled - best_prev);
                }
                best_prev = best_prev.min(scaled);
            }
            Some(worst.exp())
        }
        _ => None,
    };
    DecayReport {
        max_increment,
        increments,
        slope,
        rate,
        envelope_ratio,
        at_equilibrium,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_rows, Matrix};
    use crate::model::linear_certificate;
    use approx::assert_relative_eq;

    fn unit_sys() -> LinearSystem {
        LinearSystem::new(
            -Matrix::identity(2, 2),
            from_rows(&[&[0.0], &[1.0]]),
            Matrix::zeros(1, 2),
            Matrix::identity(2, 2) * 2.0,
        )
        .unwrap()
    }

    fn const_w(c: f64, from: f64, to: f64) -> TimedSignal {
        let mut w = TimedSignal::new(1, Interpolation::Linear);
        w.push(from, &[c]).unwrap();
        w.push(to, &[c]).unwrap();
        w
    }

    #[test]
    fn w_vanishes_after_reset() {
        let model = crate::model::compliant_benchmark();
        let p_tk = [0.4, -0.2];
        let p = [0.1, 0.3];
        let e: Vec<f64> = p_tk.iter().zip(&p).map(|(a, b)| a - b).collect();
        let u = model.eval_k(&p_tk).unwrap();
        assert!(norm(&compute_w(&model, &u, &p, &e)) <= 1e-12);
    }

    #[test]
    fn w_before_start_is_prehistory() {
        let sys = unit_sys();
        let model = crate::model::SystemModel::from_linear(sys);
        assert_eq!(compute_w(&model, &[0.7], &[1.0, 2.0], &[0.0, 0.0]), vec![0.7]);
    }

    #[test]
    fn l_forms() {
        let delay = ActuationDelay::constant(0.8).unwrap();
        let zero = const_w(0.0, -1.0, 5.0);
        for form in [FunctionalForm::Sup, FunctionalForm::Integral] {
            let cfg = MonitorConfig { b: 10.0, form, stride: 1 };
            assert_eq!(compute_l(&cfg, &zero, &delay, 1.0, 1e-2).unwrap(), 0.0);
        }
        let w = const_w(-1.5, -1.0, 5.0);
        let sup = MonitorConfig { b: 2.0, form: FunctionalForm::Sup, stride: 1 };
        assert_relative_eq!(compute_l(&sup, &w, &delay, 1.0, 1e-2).unwrap(), 1.5 * 1.6f64.exp(), max_relative = 1e-12);
        let int = MonitorConfig { b: 1e-300, form: FunctionalForm::Integral, stride: 1 };
        assert_relative_eq!(compute_l(&int, &w, &delay, 1.0, 1e-2).unwrap(), 2.25 * 0.8, max_relative = 1e-12);
    }

    #[test]
    fn v_values() {
        let sys = unit_sys();
        let cert = linear_certificate(&sys);
        assert_eq!(compute_v(&cert, &[0.0, 0.0], 0.0, 10.0), 0.0);
        let unit_rho = IssCertificate { rho: ClassK::quadratic(1.0), s: alloc::sync::Arc::new(|_| 0.0), ..cert.clone() };
        assert_relative_eq!(compute_v(&unit_rho, &[0.0, 0.0], 1.0, 2.0), 2.0);
        // P = I, |PB| = 1, λ_min(Q) = 2: V = 1 + 2 · 0.5
        assert_relative_eq!(compute_v_linear(&sys, &[1.0, 0.0], 0.5), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_closed_form_matches_quadrature() {
        for c in [0.3, 1.0, 17.0] {
            let rho = ClassK::quadratic(c);
            for upper in [1e-3, 0.5, 4.0, 100.0] {
                let closed = rho_over_r_integral(&rho, upper);
                let quad = rho_over_r_quadrature(&rho, upper);
                assert!((closed - quad).abs() <= 1e-12 * closed.max(1e-300), "{closed} {quad}");
            }
        }
    }

    #[test]
    fn decay_report_cases() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let rep = decay_report(&times, &v, 0.0, Some(0.5));
        assert_relative_eq!(rep.slope.unwrap(), -0.7, epsilon = 1e-10);
        assert_eq!(rep.increments, 0);
        assert!(rep.envelope_ratio.unwrap() <= 1.0);

        let zeros = vec![0.0; 100];
        let rep = decay_report(&times, &zeros, 0.0, None);
        assert!(rep.at_equilibrium);
        assert_eq!(rep.slope, None);
    }
}
