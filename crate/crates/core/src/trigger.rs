//! Event trigger on the prediction error and the minimum dwell time.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{IssCertificate, SystemModel};
use crate::{norm, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TriggerMode {
    /// `|e| ≤ ρ⁻¹(θ γ(|p|)) / (2 L_K)` from an ISS certificate.
    Nonlinear,
    /// `|e| ≤ λ_min(Q) √θ / (4 |PB| L_K) · |p|` for linear plants.
    Linear,
    /// `|e| ≤ ρ̄ |p|`.
    FixedRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig {
    pub theta: f64,
    pub mode: TriggerMode,
    pub rho_bar: Option<f64>,
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!("theta = {} must lie in (0, 1)", self.theta)));
        }
        if self.mode == TriggerMode::FixedRatio && !self.rho_bar.is_some_and(|r| r > 0.0) {
            return Err(Error::Config("fixed-ratio trigger needs rho_bar > 0".into()));
        }
        Ok(())
    }
}

/// Threshold rule resolved from the configuration and the model data.
#[derive(Debug, Clone)]
pub enum Threshold {
    Certificate {
        cert: IssCertificate,
        theta: f64,
        lipschitz_k: f64,
    },
    Proportional(f64),
}

impl Threshold {
    pub fn resolve(cfg: &TriggerConfig, model: &SystemModel, cert: Option<&IssCertificate>) -> Result<Self> {
        cfg.validate()?;
        match cfg.mode {
            TriggerMode::FixedRatio => Ok(Threshold::Proportional(cfg.rho_bar.unwrap_or_default())),
            TriggerMode::Linear => {
                let sys = model
                    .linear()
                    .ok_or_else(|| Error::Config("linear trigger needs a linear model".into()))?;
                Ok(Threshold::Proportional(linear_coefficient(
                    sys.lambda_min_q(),
                    cfg.theta,
                    sys.pb_norm(),
                    model.lipschitz_k(),
                )))
            }
            TriggerMode::Nonlinear => {
                let cert = cert.ok_or_else(|| {
                    Error::Config("nonlinear trigger needs an ISS certificate".into())
                })?;
                if model.lipschitz_k() <= 0.0 {
                    return Err(Error::Config("nonlinear trigger needs L_K > 0".into()));
                }
                Ok(Threshold::Certificate {
                    cert: cert.clone(),
                    theta: cfg.theta,
                    lipschitz_k: model.lipschitz_k(),
                })
            }
        }
    }

    /// Admissible `|e|` at prediction `p`.
    pub fn at(&self, p: &[f64]) -> f64 {
        let r = norm(p);
        match self {
            Threshold::Proportional(c) => c * r,
            Threshold::Certificate {
                cert,
                theta,
                lipschitz_k,
            } => cert.rho.inv(theta * cert.gamma.eval(r)) / (2.0 * lipschitz_k),
        }
    }

    /// Ratio `threshold / |p|` when the rule is proportional.
    pub fn ratio(&self) -> Option<f64> {
        match self {
            Threshold::Proportional(c) => Some(*c),
            Threshold::Certificate {
                cert,
                theta,
                lipschitz_k,
            } => match (cert.gamma.quadratic_coeff(), cert.rho.quadratic_coeff()) {
                (Some(g), Some(r)) => Some((theta * g / r).sqrt() / (2.0 * lipschitz_k)),
                _ => None,
            },
        }
    }
}

/// `λ_min(Q) √θ / (4 |PB| L_K)`.
pub fn linear_coefficient(lambda_min_q: f64, theta: f64, pb_norm: f64, lipschitz_k: f64) -> f64 {
    lambda_min_q * theta.sqrt() / (4.0 * pb_norm * lipschitz_k)
}

/// Convenience form of [`Threshold::at`].
pub fn threshold(cfg: &TriggerConfig, model: &SystemModel, cert: Option<&IssCertificate>, p: &[f64]) -> Result<f64> {
    Ok(Threshold::resolve(cfg, model, cert)?.at(p))
}

/// `e = p(t_k) - p(t)`.
pub fn triggering_error(p_at_event: &[f64], p_now: &[f64]) -> Vec<f64> {
    p_at_event.iter().zip(p_now).map(|(a, b)| a - b).collect()
}

/// Control updates `t_k`, `u(t_k)` and per-event diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub times: Vec<f64>,
    pub controls: Vec<Vec<f64>>,
    /// `|p(t_k)|`.
    pub p_norms: Vec<f64>,
    /// `|e(t_k)|` just before the reset.
    pub error_norms: Vec<f64>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn record(&mut self, t: f64, control: &[f64], p_norm: f64, error_norm: f64) -> Result<()> {
        if self.times.last().is_some_and(|&last| t <= last) {
            return Err(Error::Config(format!("event at {t} does not follow the previous one")));
        }
        self.times.push(t);
        self.controls.push(control.to_vec());
        self.p_norms.push(p_norm);
        self.error_norms.push(error_norm);
        Ok(())
    }

    /// Smallest `t_{k+1} - t_k`, or `None` with fewer than two events.
    pub fn min_dwell(&self) -> Option<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }
}

/// Fires iff `e ≠ 0` and `|e| ≥ threshold(p)`. The caller records the event
/// and resets `p(t_k)`; at `p = e = 0` nothing fires.
pub fn check_and_fire(rule: &Threshold, e: &[f64], p: &[f64]) -> bool {
    let err = norm(e);
    err > 0.0 && err >= rule.at(p)
}

/// Dwell-time constants `a = M₂ L_f L_K` and `c = M₂ L_f (1 + L_K)`.
pub fn dwell_rates(big_m2: f64, lipschitz_f: f64, lipschitz_k: f64) -> (f64, f64) {
    (big_m2 * lipschitz_f * lipschitz_k, big_m2 * lipschitz_f * (1.0 + lipschitz_k))
}

fn check_dwell_inputs(a: f64, c: f64, radius: f64) -> Result<()> {
    if !(a > 0.0 && c > 0.0 && radius > 0.0) {
        return Err(Error::Domain(format!(
            "dwell time needs a, c, R > 0 (got {a}, {c}, {radius})"
        )));
    }
    if a == c {
        return Err(Error::Domain("dwell time needs a != c".into()));
    }
    Ok(())
}

/// Time for `ṙ = (1 + r)(c + a r)`, `r(0) = 0` to reach `R`:
/// `δ = ln((c + R a)/(c + R c)) / (a - c)`.
pub fn min_dwell(a: f64, c: f64, radius: f64) -> Result<f64> {
    check_dwell_inputs(a, c, radius)?;
    Ok(((c + radius * a) / (c + radius * c)).ln() / (a - c))
}

/// Same quantity obtained by integrating the ratio ODE with RK4 and
/// bisecting the last step.
pub fn min_dwell_numeric(a: f64, c: f64, radius: f64) -> Result<f64> {
    check_dwell_inputs(a, c, radius)?;
    let rhs = |r: f64| (1.0 + r) * (c + a * r);
    let rk4 = |r: f64, dt: f64| {
        let k1 = rhs(r);
        let k2 = rhs(r + 0.5 * dt * k1);
        let k3 = rhs(r + 0.5 * dt * k2);
        let k4 = rhs(r + dt * k3);
        r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    // step small against the initial rate c and the blow-up scale
    let dt = (radius / c).min(1.0 / c) * 1e-3;
    let mut t = 0.0;
    let mut r = 0.0;
    for _ in 0..10_000_000 {
        let next = rk4(r, dt);
        if next >= radius {
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if rk4(r, mid) < radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        r = next;
        t += dt;
    }
    Err(Error::Numerical("ratio ODE did not reach R".into()))
}

/// `R = 1 / (2 L_𝒢 L_K)` where `L_𝒢` is the largest slope of
/// `𝒢: r ↦ γ⁻¹(ρ(r)/θ)` sampled on `[0, 2 L_K e_max]`.
pub fn nonlinear_dwell_radius(cert: &IssCertificate, theta: f64, lipschitz_k: f64, e_max: f64) -> Result<f64> {
    if !(e_max > 0.0 && lipschitz_k > 0.0 && theta > 0.0) {
        return Err(Error::Domain("dwell radius needs e_max, L_K, theta > 0".into()));
    }
    let g = |r: f64| cert.gamma.inv(cert.rho.eval(r) / theta);
    let span = 2.0 * lipschitz_k * e_max;
    let points = 2000;
    let mut slope: f64 = 0.0;
    let mut prev = g(0.0);
    for i in 1..=points {
        let r = span * i as f64 / points as f64;
        let v = g(r);
        slope = slope.max((v - prev) / (span / points as f64));
        prev = v;
    }
    if !(slope > 0.0) {
        return Err(Error::Numerical("gain map has no positive slope".into()));
    }
    Ok(1.0 / (2.0 * slope * lipschitz_k))
}
