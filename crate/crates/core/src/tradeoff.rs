//! Communication/convergence trade-off for linear plants: dwell time `δ(ν)`,
//! decay rate `μ(ν)` and the optimal `ν` for `J = λδ + (1-λ)μ`, with
//! `θ = ν²` and `Q = I`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, Matrix};
use crate::model::LinearSystem;
use crate::trigger::dwell_rates;
use crate::{Error, Result};

/// Upper end of the admissible `ν` range is `√2 - NU_MARGIN`.
pub const NU_MARGIN: f64 = 1e-6;

pub fn nu_max() -> f64 {
    core::f64::consts::SQRT_2 - NU_MARGIN
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffConstants {
    pub a: f64,
    pub c: f64,
    /// Solution of `(A+BK)ᵀP₁ + P₁(A+BK) = -I`.
    pub p1: Matrix,
    pub lam_max_p1: f64,
    pub pb1: f64,
    pub k_norm: f64,
}

impl TradeoffConstants {
    /// Constants with `L_f = √2(|A|+|B|)` and `L_K = |K|`.
    pub fn from_linear(a: &Matrix, b: &Matrix, k: &Matrix, big_m2: f64) -> Result<Self> {
        let n = a.nrows();
        let sys = LinearSystem::new(a.clone(), b.clone(), k.clone(), Matrix::identity(n, n))?;
        let lf = sys.default_lipschitz_f();
        let lk = sys.k_norm();
        let (ra, rc) = dwell_rates(big_m2, lf, lk);
        Self::new(ra, rc, sys.p().clone(), sys.pb_norm(), lk)
    }

    pub fn new(a: f64, c: f64, p1: Matrix, pb1: f64, k_norm: f64) -> Result<Self> {
        if !(a > 0.0 && c > a) {
            return Err(Error::Config(format!("need 0 < a < c, got a = {a}, c = {c}")));
        }
        if !(pb1 > 0.0 && k_norm > 0.0) {
            return Err(Error::Config("|P₁B| and |K| must be positive".into()));
        }
        let (_, lam_max_p1) = linalg::sym_eig_extremes(&p1);
        Ok(TradeoffConstants {
            a,
            c,
            p1,
            lam_max_p1,
            pb1,
            k_norm,
        })
    }

    /// Constants given directly by their scalar values.
    pub fn from_scalars(a: f64, c: f64, lam_max_p1: f64, pb1: f64, k_norm: f64) -> Result<Self> {
        let mut consts = Self::new(a, c, Matrix::identity(1, 1) * lam_max_p1, pb1, k_norm)?;
        consts.lam_max_p1 = lam_max_p1;
        Ok(consts)
    }

    fn pk(&self) -> f64 {
        self.pb1 * self.k_norm
    }
}

pub fn delta_of_nu(consts: &TradeoffConstants, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("ν = {nu} must be positive")));
    }
    let s = nu / consts.pk();
    let (a, c) = (consts.a, consts.c);
    Ok(((c + s * a) / (c + s * c)).ln() / (a - c))
}

pub fn mu_of_nu(consts: &TradeoffConstants, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu * nu < 2.0) {
        return Err(Error::Domain(format!("ν = {nu} must lie in (0, √2)")));
    }
    Ok((2.0 - nu * nu) / (4.0 * consts.lam_max_p1))
}

/// `J(ν) = λ δ(ν) + (1-λ) μ(ν)`.
pub fn objective(consts: &TradeoffConstants, lambda: f64, nu: f64) -> Result<f64> {
    Ok(lambda * delta_of_nu(consts, nu)? + (1.0 - lambda) * mu_of_nu(consts, nu)?)
}

/// Coefficients `[c₃, c₂, c₁, c₀]` of the stationarity cubic.
pub fn cubic(consts: &TradeoffConstants, lambda: f64) -> [f64; 4] {
    let pk = consts.pk();
    let w = 1.0 - lambda;
    [
        consts.a * w,
        (consts.a + consts.c) * pk * w,
        consts.c * pk * pk * w,
        -2.0 * consts.lam_max_p1 * pk * lambda,
    ]
}

pub fn eval_cubic(coeffs: &[f64; 4], nu: f64) -> f64 {
    ((coeffs[0] * nu + coeffs[1]) * nu + coeffs[2]) * nu + coeffs[3]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub lambda: f64,
    pub nu: f64,
    /// `λ = 0`: the optimum sits at `ν → 0`, returned as the margin.
    pub boundary: bool,
    /// `λ = 1`: the cubic collapses to a negative constant.
    pub degenerate: bool,
    /// The root exceeded `√2 - ε` and was clipped.
    pub clipped: bool,
    /// `θ = ν² ≥ 1`, outside the range the trigger requires.
    pub theta_at_least_one: bool,
}

pub fn optimize_nu(consts: &TradeoffConstants, lambda: f64) -> Result<Optimum> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("λ = {lambda} must lie in [0, 1]")));
    }
    let hi_nu = nu_max();
    let mut out = Optimum {
        lambda,
        nu: hi_nu,
        boundary: false,
        degenerate: false,
        clipped: false,
        theta_at_least_one: false,
    };
    if lambda == 1.0 {
        out.degenerate = true;
    } else if lambda == 0.0 {
        out.boundary = true;
        out.nu = NU_MARGIN;
    } else {
        let coeffs = cubic(consts, lambda);
        // The cubic increases on ν ≥ 0 from c₀ < 0, so it has exactly one
        // positive root.
        let mut hi = 1.0;
        while eval_cubic(&coeffs, hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Numerical("cubic root bracket failed".into()));
            }
        }
        let root = bracketed_root(&coeffs, 0.0, hi);
        if root > hi_nu {
            out.clipped = true;
            out.nu = hi_nu;
        } else {
            out.nu = root.max(NU_MARGIN);
        }
    }
    out.theta_at_least_one = out.nu >= 1.0;
    Ok(out)
}

/// Newton steps kept inside a shrinking bracket.
fn bracketed_root(coeffs: &[f64; 4], mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = eval_cubic(coeffs, x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = (3.0 * coeffs[0] * x + 2.0 * coeffs[1]) * x + coeffs[2];
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    x
}

/// Maximizer of `J` over `points` equally spaced `ν` in `(0, √2)`, refined
/// by a parabola through the best grid point and its neighbours.
pub fn grid_argmax(consts: &TradeoffConstants, lambda: f64, points: usize) -> Result<f64> {
    let points = points.max(3);
    let span = core::f64::consts::SQRT_2;
    let step = span / (points + 1) as f64;
    let nus: Vec<f64> = (1..=points).map(|i| i as f64 * step).collect();
    let mut vals = Vec::with_capacity(points);
    for &nu in &nus {
        vals.push(objective(consts, lambda, nu)?);
    }
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = i;
        }
    }
    if best == 0 || best + 1 == points {
        return Ok(nus[best]);
    }
    let (f0, f1, f2) = (vals[best - 1], vals[best], vals[best + 1]);
    let curv = f0 - 2.0 * f1 + f2;
    if curv < 0.0 {
        Ok(nus[best] + 0.5 * step * (f0 - f2) / curv)
    } else {
        Ok(nus[best])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuRow {
    pub nu: f64,
    pub delta: f64,
    pub mu: f64,
}

/// `(ν, δ(ν), μ(ν))` over the grid and `ν*(λ)` over the λ grid.
pub fn sweep(consts: &TradeoffConstants, nu_grid: &[f64], lambda_grid: &[f64]) -> Result<(Vec<NuRow>, Vec<Optimum>)> {
    if nu_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::Config("trade-off grids must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(nu_grid.len());
    for &nu in nu_grid {
        rows.push(NuRow {
            nu,
            delta: delta_of_nu(consts, nu)?,
            mu: mu_of_nu(consts, nu)?,
        });
    }
    let mut opts = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        opts.push(optimize_nu(consts, lambda)?);
    }
    Ok((rows, opts))
}

/// `points` equally spaced values strictly inside `(0, √2)`.
pub fn default_nu_grid(points: usize) -> Vec<f64> {
    let span = core::f64::consts::SQRT_2;
    (1..=points).map(|i| span * i as f64 / (points + 1) as f64).collect()
}
