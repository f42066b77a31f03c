//! Actuation delay `φ`, its inverse `σ`, and the sensing schedule.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Shape of the actuation delay `t - φ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayProfile {
    /// `t - φ(t) = d`.
    Constant { d: f64 },
    /// `t - φ(t) = ((t-5)² + 2) / (2(t-5)² + 2)`, between 1/2 and 1.
    Bump,
    /// `t - φ(t) = d + a sin t`.
    Sinusoidal { d: f64, a: f64 },
    /// Piecewise-linear delay through `(t, delay)` knots, held flat outside.
    Table { times: Vec<f64>, delays: Vec<f64> },
}

impl DelayProfile {
    fn delay(&self, t: f64) -> f64 {
        match self {
            DelayProfile::Constant { d } => *d,
            DelayProfile::Bump => {
                let y = t - 5.0;
                (y * y + 2.0) / (2.0 * y * y + 2.0)
            }
            DelayProfile::Sinusoidal { d, a } => d + a * t.sin(),
            DelayProfile::Table { times, delays } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return delays[0];
                }
                if t >= times[last] {
                    return delays[last];
                }
                let i = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                delays[i] + w * (delays[i + 1] - delays[i])
            }
        }
    }

    fn delay_rate(&self, t: f64) -> f64 {
        match self {
            DelayProfile::Constant { .. } => 0.0,
            DelayProfile::Bump => {
                let y = t - 5.0;
                let s = y * y + 1.0;
                -y / (s * s)
            }
            DelayProfile::Sinusoidal { a, .. } => a * t.cos(),
            DelayProfile::Table { times, delays } => {
                let last = times.len() - 1;
                if t < times[0] || t >= times[last] {
                    return 0.0;
                }
                let i = times.partition_point(|&s| s <= t) - 1;
                (delays[i + 1] - delays[i]) / (times[i + 1] - times[i])
            }
        }
    }
}

/// Known actuation delay `φ` with the bounds `t - φ(t) ≤ M₀` and
/// `m₂ ≤ φ̇ ≤ M₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuationDelay {
    profile: DelayProfile,
    m0: f64,
    m1: f64,
    m2: f64,
}

impl ActuationDelay {
    pub fn new(profile: DelayProfile, m0: f64, m1: f64, m2: f64) -> Result<Self> {
        if let DelayProfile::Table { times, delays } = &profile {
            if times.is_empty() || times.len() != delays.len() {
                return Err(Error::Channel("delay table needs matching, nonempty columns".into()));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Channel("delay table times must be strictly increasing".into()));
            }
        }
        if !(m0 >= 0.0 && m2 > 0.0 && m1 >= m2) {
            return Err(Error::Channel(format!(
                "invalid delay bounds M0={m0}, M1={m1}, m2={m2}"
            )));
        }
        Ok(ActuationDelay { profile, m0, m1, m2 })
    }

    /// Constant delay `d`, with `M₀ = d` and `M₁ = m₂ = 1`.
    pub fn constant(d: f64) -> Result<Self> {
        Self::new(DelayProfile::Constant { d }, d, 1.0, 1.0)
    }

    /// The bump delay with `M₀ = 1` and `(M₁, m₂) = 1 ± 3√3/16`.
    pub fn bump() -> Self {
        let slope = 3.0 * 3f64.sqrt() / 16.0;
        ActuationDelay {
            profile: DelayProfile::Bump,
            m0: 1.0,
            m1: 1.0 + slope,
            m2: 1.0 - slope,
        }
    }

    /// `d + a sin t`, with `M₀ = d + |a|` and `(M₁, m₂) = 1 ± |a|`.
    pub fn sinusoidal(d: f64, a: f64) -> Result<Self> {
        Self::new(DelayProfile::Sinusoidal { d, a }, d + a.abs(), 1.0 + a.abs(), 1.0 - a.abs())
    }

    /// Piecewise-linear table; bounds are derived from the knots.
    pub fn table(times: Vec<f64>, delays: Vec<f64>) -> Result<Self> {
        let m0 = delays.iter().cloned().fold(0.0, f64::max);
        let mut max_rate: f64 = 0.0;
        let mut min_rate: f64 = 0.0;
        for i in 1..times.len() {
            let rate = (delays[i] - delays[i - 1]) / (times[i] - times[i - 1]);
            max_rate = max_rate.max(rate);
            min_rate = min_rate.min(rate);
        }
        Self::new(DelayProfile::Table { times, delays }, m0, 1.0 - min_rate, 1.0 - max_rate)
    }

    pub fn profile(&self) -> &DelayProfile {
        &self.profile
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// `1/M₀`.
    pub fn little_m0(&self) -> f64 {
        1.0 / self.m0
    }

    /// `1/M₁`, the lower bound of `σ̇`.
    pub fn little_m1(&self) -> f64 {
        1.0 / self.m1
    }

    /// `1/m₂`, the upper bound of `σ̇`.
    pub fn big_m2(&self) -> f64 {
        1.0 / self.m2
    }

    /// Delay `t - φ(t)` of a message sent at `t`.
    #[inline]
    pub fn delay_at(&self, t: f64) -> f64 {
        self.profile.delay(t)
    }

    #[inline]
    pub fn phi(&self, t: f64) -> f64 {
        t - self.profile.delay(t)
    }

    #[inline]
    pub fn phi_dot(&self, t: f64) -> f64 {
        1.0 - self.profile.delay_rate(t)
    }

    /// `σ(t) = φ⁻¹(t)`: bracket `[t, t + 2M₀]`, then Newton steps safeguarded
    /// by bisection until `|φ(s) - t| ≤ 1e-12 (1 + |t|)`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        if let DelayProfile::Constant { d } = self.profile {
            return Ok(t + d);
        }
        let tol = 1e-12 * (1.0 + t.abs());
        let mut lo = t;
        let mut hi = t + 2.0 * self.m0;
        let f_lo = self.phi(lo) - t;
        let f_hi = self.phi(hi) - t;
        if f_lo.abs() <= tol {
            return Ok(lo);
        }
        if f_hi.abs() <= tol {
            return Ok(hi);
        }
        if f_lo > 0.0 || f_hi < 0.0 {
            return Err(Error::Channel(format!(
                "cannot bracket sigma({t}) in [{lo}, {hi}]: phi violates its delay bounds"
            )));
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = self.phi(s) - t;
            if g.abs() <= tol {
                return Ok(s);
            }
            if g < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = self.phi_dot(s);
            let newton = s - g / slope;
            s = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * (1.0 + t.abs()) {
                return Ok(s);
            }
        }
        Err(Error::Channel(format!("sigma({t}) did not converge")))
    }

    /// `σ̇(t)` by a centered difference of `σ` with the given spacing.
    pub fn sigma_dot(&self, t: f64, spacing: f64) -> Result<f64> {
        if let DelayProfile::Constant { .. } = self.profile {
            return Ok(1.0);
        }
        let half = 0.5 * spacing;
        Ok((self.sigma(t + half)? - self.sigma(t - half)?) / spacing)
    }
}

/// Worst margins of the delay bounds on a grid. Margins are negative where
/// a bound is violated.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBoundsReport {
    pub max_delay: f64,
    pub min_delay: f64,
    pub max_phi_dot: f64,
    pub min_phi_dot: f64,
    pub passed: bool,
}

/// Checks `0 < t - φ(t) ≤ M₀` and `m₂ ≤ φ̇ ≤ M₁` on the grid, with `φ̇`
/// estimated by finite differences between consecutive grid points.
pub fn verify_delay_bounds(delay: &ActuationDelay, grid: &[f64]) -> Result<DelayBoundsReport> {
    if grid.is_empty() {
        return Err(Error::Channel("empty validation grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Channel("validation grid must be increasing".into()));
    }
    let mut max_delay = f64::NEG_INFINITY;
    let mut min_delay = f64::INFINITY;
    for &t in grid {
        let d = delay.delay_at(t);
        max_delay = max_delay.max(d);
        min_delay = min_delay.min(d);
    }
    let mut max_rate = f64::NEG_INFINITY;
    let mut min_rate = f64::INFINITY;
    for w in grid.windows(2) {
        let rate = (delay.phi(w[1]) - delay.phi(w[0])) / (w[1] - w[0]);
        max_rate = max_rate.max(rate);
        min_rate = min_rate.min(rate);
    }
    if grid.len() == 1 {
        max_rate = delay.phi_dot(grid[0]);
        min_rate = max_rate;
    }
    let slack = 1e-9;
    let passed = min_delay > 0.0
        && max_delay <= delay.m0() + slack
        && max_rate <= delay.m1() + slack
        && min_rate >= delay.m2() - slack;
    Ok(DelayBoundsReport {
        max_delay,
        min_delay,
        max_phi_dot: max_rate,
        min_phi_dot: min_rate,
        passed,
    })
}

/// Transport delay applied to each sensed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensingDelay {
    Fixed(f64),
    /// `N(mean, std²)` truncated to nonnegative values.
    Gaussian { mean: f64, std: f64 },
}

/// Plant-side transmissions at `τ_ℓ = ℓ Δτ` and their delivery times at the
/// controller. Deliveries are drawn once at construction from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSchedule {
    transmit_times: Vec<f64>,
    delivery_times: Vec<f64>,
    /// Transmission indices ordered by delivery time (stable).
    by_delivery: Vec<usize>,
    /// Running max of transmission index along `by_delivery`.
    freshest: Vec<usize>,
    seed: u64,
}

impl SensingSchedule {
    /// Transmissions every `period` on `[0, horizon]`.
    pub fn periodic(period: f64, horizon: f64, delay: SensingDelay, seed: u64) -> Result<Self> {
        if !(period > 0.0) || !(horizon >= 0.0) {
            return Err(Error::Channel(format!(
                "sensing period {period} and horizon {horizon} must be positive"
            )));
        }
        let count = (horizon / period + 1e-9).floor() as usize + 1;
        let times = (0..count).map(|l| l as f64 * period).collect();
        Self::from_transmissions(times, delay, seed)
    }

    pub fn from_transmissions(transmit_times: Vec<f64>, delay: SensingDelay, seed: u64) -> Result<Self> {
        if transmit_times.first() != Some(&0.0) {
            return Err(Error::Channel("first transmission must be at time 0".into()));
        }
        if transmit_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Channel("transmission times must be nondecreasing".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delivery_times: Vec<f64> = match delay {
            SensingDelay::Fixed(d) => {
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::Channel(format!("sensing delay {d} must be nonnegative")));
                }
                transmit_times.iter().map(|t| t + d).collect()
            }
            SensingDelay::Gaussian { mean, std } => {
                let normal = Normal::new(mean, std)
                    .map_err(|e| Error::Channel(format!("invalid sensing delay distribution: {e}")))?;
                transmit_times
                    .iter()
                    .map(|t| t + truncated_sample(&normal, &mut rng))
                    .collect()
            }
        };
        let mut by_delivery: Vec<usize> = (0..transmit_times.len()).collect();
        by_delivery.sort_by(|&i, &j| delivery_times[i].total_cmp(&delivery_times[j]));
        let mut freshest = Vec::with_capacity(by_delivery.len());
        let mut best = 0;
        for &i in &by_delivery {
            best = best.max(i);
            freshest.push(best);
        }
        Ok(SensingSchedule {
            transmit_times,
            delivery_times,
            by_delivery,
            freshest,
            seed,
        })
    }

    pub fn transmit_times(&self) -> &[f64] {
        &self.transmit_times
    }

    pub fn delivery_times(&self) -> &[f64] {
        &self.delivery_times
    }

    /// Transmission indices in delivery order.
    pub fn delivery_order(&self) -> &[usize] {
        &self.by_delivery
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// First time any state reaches the controller.
    pub fn first_delivery(&self) -> f64 {
        self.delivery_times[self.by_delivery[0]]
    }

    /// Largest transmission index delivered at or before `t`, or `None`
    /// before the first delivery.
    pub fn latest_delivered_index(&self, t: f64) -> Option<usize> {
        let delivered = self
            .by_delivery
            .partition_point(|&i| self.delivery_times[i] <= t);
        delivered.checked_sub(1).map(|k| self.freshest[k])
    }
}

fn truncated_sample(normal: &Normal<f64>, rng: &mut ChaCha8Rng) -> f64 {
    for _ in 0..64 {
        let v = normal.sample(rng);
        if v >= 0.0 {
            return v;
        }
    }
    0.0
}
