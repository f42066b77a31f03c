//! Plant models, feedback laws and ISS certificates.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{self, Matrix};
use crate::{norm, Error, Result};

/// Plant vector field `(x, u, out)`, writing `f(x, u)` into `out`.
pub type VectorField = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// State feedback `(x, out)`, writing `K(x)` into `out`.
pub type FeedbackLaw = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Scalar map on `[0, ∞)`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Map from a state to a scalar.
pub type StateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Gradient `(x, out)`.
pub type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

const ORIGIN_TOL: f64 = 1e-12;

/// Plant `ẋ = f(x, u)` together with the stabilizing feedback `K` and the
/// Lipschitz data used by the dwell-time analysis.
#[derive(Clone)]
pub struct SystemModel {
    state_dim: usize,
    input_dim: usize,
    f: VectorField,
    k: FeedbackLaw,
    lipschitz_f: f64,
    lipschitz_k: f64,
    linear: Option<LinearSystem>,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("lipschitz_f", &self.lipschitz_f)
            .field("lipschitz_k", &self.lipschitz_k)
            .field("linear", &self.linear.is_some())
            .finish()
    }
}

impl SystemModel {
    /// Builds a model, checking `f(0, 0) = 0` and `K(0) = 0`.
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        f: VectorField,
        k: FeedbackLaw,
        lipschitz_f: f64,
        lipschitz_k: f64,
    ) -> Result<Self> {
        if state_dim == 0 || input_dim == 0 {
            return Err(Error::Config("state and input dimensions must be positive".into()));
        }
        if !(lipschitz_f >= 0.0 && lipschitz_k >= 0.0) {
            return Err(Error::Config("Lipschitz constants must be nonnegative".into()));
        }
        let model = SystemModel {
            state_dim,
            input_dim,
            f,
            k,
            lipschitz_f,
            lipschitz_k,
            linear: None,
        };
        let zero_x = vec![0.0; state_dim];
        let zero_u = vec![0.0; input_dim];
        let mut dx = vec![0.0; state_dim];
        (model.f)(&zero_x, &zero_u, &mut dx);
        if norm(&dx) > ORIGIN_TOL {
            return Err(Error::Config(format!("f(0, 0) = {dx:?} is not zero")));
        }
        let mut k0 = vec![0.0; input_dim];
        (model.k)(&zero_x, &mut k0);
        if norm(&k0) > ORIGIN_TOL {
            return Err(Error::Config(format!("K(0) = {k0:?} is not zero")));
        }
        Ok(model)
    }

    /// Linear plant `ẋ = Ax + Bu` with `K(x) = K_gain x`. `L_f` defaults to
    /// `√2(|A| + |B|)` and `L_K` to `|K_gain|`.
    pub fn from_linear(sys: LinearSystem) -> Self {
        let n = sys.state_dim();
        let m = sys.input_dim();
        let a = sys.a.clone();
        let b = sys.b.clone();
        let f: VectorField = Arc::new(move |x, u, out| {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += a[(i, j)] * x[j];
                }
                for j in 0..m {
                    acc += b[(i, j)] * u[j];
                }
                out[i] = acc;
            }
        });
        let gain = sys.k.clone();
        let k: FeedbackLaw = Arc::new(move |x, out| {
            for i in 0..m {
                out[i] = (0..n).map(|j| gain[(i, j)] * x[j]).sum();
            }
        });
        SystemModel {
            state_dim: n,
            input_dim: m,
            f,
            k,
            lipschitz_f: sys.default_lipschitz_f(),
            lipschitz_k: sys.k_norm(),
            linear: Some(sys),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn lipschitz_f(&self) -> f64 {
        self.lipschitz_f
    }

    pub fn lipschitz_k(&self) -> f64 {
        self.lipschitz_k
    }

    pub fn with_lipschitz(mut self, lipschitz_f: f64, lipschitz_k: f64) -> Self {
        self.lipschitz_f = lipschitz_f;
        self.lipschitz_k = lipschitz_k;
        self
    }

    pub fn linear(&self) -> Option<&LinearSystem> {
        self.linear.as_ref()
    }

    /// Evaluates `f(x, u)` with dimension checks.
    pub fn eval_f(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, Some(u))?;
        let mut out = vec![0.0; self.state_dim];
        (self.f)(x, u, &mut out);
        Ok(out)
    }

    /// Unchecked `f(x, u)` for inner loops; slices must have model dimensions.
    #[inline]
    pub fn f_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        (self.f)(x, u, out)
    }

    pub fn eval_k(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, None)?;
        let mut out = vec![0.0; self.input_dim];
        (self.k)(x, &mut out);
        Ok(out)
    }

    #[inline]
    pub fn k_into(&self, x: &[f64], out: &mut [f64]) {
        (self.k)(x, out)
    }

    /// Largest observed ratio `|K(x) - K(y)| / (L_K |x - y|)` over the pairs;
    /// values above 1 contradict the declared `L_K`.
    pub fn lipschitz_k_ratio(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut kx = vec![0.0; self.input_dim];
        let mut ky = vec![0.0; self.input_dim];
        for (x, y) in pairs {
            self.check_dims(x, None)?;
            self.check_dims(y, None)?;
            let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist == 0.0 {
                continue;
            }
            (self.k)(x, &mut kx);
            (self.k)(y, &mut ky);
            let dk: f64 = kx.iter().zip(&ky).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let bound = self.lipschitz_k * dist;
            let ratio = if bound > 0.0 { dk / bound } else if dk > 0.0 { f64::INFINITY } else { 0.0 };
            worst = worst.max(ratio);
        }
        Ok(worst)
    }

    fn check_dims(&self, x: &[f64], u: Option<&[f64]>) -> Result<()> {
        if x.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                got: x.len(),
            });
        }
        if let Some(u) = u {
            if u.len() != self.input_dim {
                return Err(Error::Dimension {
                    expected: self.input_dim,
                    got: u.len(),
                });
            }
        }
        Ok(())
    }
}

/// Class-K∞ scalar function with its inverse.
#[derive(Clone)]
pub struct ClassK {
    forward: ScalarFn,
    inverse: ScalarFn,
    quadratic: Option<f64>,
}

impl fmt::Debug for ClassK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.quadratic {
            Some(c) => write!(f, "ClassK({c}·r²)"),
            None => f.write_str("ClassK(custom)"),
        }
    }
}

impl ClassK {
    /// `r ↦ c r²` with `c > 0`.
    pub fn quadratic(c: f64) -> Self {
        ClassK {
            forward: Arc::new(move |r| c * r * r),
            inverse: Arc::new(move |v| (v.max(0.0) / c).sqrt()),
            quadratic: Some(c),
        }
    }

    pub fn custom(forward: ScalarFn, inverse: ScalarFn) -> Self {
        ClassK {
            forward,
            inverse,
            quadratic: None,
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (self.forward)(r)
    }

    #[inline]
    pub fn inv(&self, v: f64) -> f64 {
        (self.inverse)(v)
    }

    /// Coefficient `c` when the map is exactly `c r²`.
    pub fn quadratic_coeff(&self) -> Option<f64> {
        self.quadratic
    }

    /// Checks value 0 at 0 and strict increase on a log-spaced grid.
    pub fn is_class_k_on(&self, lo: f64, hi: f64, points: usize) -> bool {
        if self.eval(0.0).abs() > ORIGIN_TOL {
            return false;
        }
        let mut prev = 0.0;
        let ratio = (hi / lo).ln() / (points.max(2) - 1) as f64;
        for i in 0..points.max(2) {
            let r = lo * (ratio * i as f64).exp();
            let v = self.eval(r);
            if !(v > prev) {
                return false;
            }
            prev = v;
        }
        true
    }
}

/// ISS-Lyapunov certificate `(S, α₁, α₂, γ, ρ)` for `ẋ = f(x, K(x) + w)`.
#[derive(Clone)]
pub struct IssCertificate {
    pub s: StateFn,
    pub grad_s: GradientFn,
    pub alpha1: ClassK,
    pub alpha2: ClassK,
    pub gamma: ClassK,
    pub rho: ClassK,
    /// Records `∫₀¹ ρ(r)/r dr < ∞`.
    pub rho_integrable: bool,
}

impl fmt::Debug for IssCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IssCertificate")
            .field("alpha1", &self.alpha1)
            .field("alpha2", &self.alpha2)
            .field("gamma", &self.gamma)
            .field("rho", &self.rho)
            .field("rho_integrable", &self.rho_integrable)
            .finish()
    }
}

impl IssCertificate {
    /// Every scalar map passes the class-K check on `[1e-6, 1e6]`.
    pub fn maps_are_class_k(&self) -> bool {
        [&self.alpha1, &self.alpha2, &self.gamma, &self.rho]
            .iter()
            .all(|m| m.is_class_k_on(1e-6, 1e6, 121))
    }
}

/// Linear plant data with the Lyapunov solution `P` of
/// `(A + BK)ᵀP + P(A + BK) = -Q`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: Matrix,
    b: Matrix,
    k: Matrix,
    q: Matrix,
    p: Matrix,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix, k: Matrix, q: Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || k.ncols() != n || k.nrows() != b.ncols() {
            return Err(Error::Config(format!(
                "inconsistent shapes: A {}x{}, B {}x{}, K {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                k.nrows(),
                k.ncols()
            )));
        }
        let a_cl = &a + &b * &k;
        let p = linalg::solve_lyapunov(&a_cl, &q)?;
        let residual = a_cl.transpose() * &p + &p * &a_cl + &q;
        let tol = 1e-9 * (1.0 + linalg::spectral_norm(&q));
        if residual.abs().max() > tol {
            return Err(Error::Numerical(format!(
                "Lyapunov residual {} exceeds {tol}",
                residual.abs().max()
            )));
        }
        Ok(LinearSystem { a, b, k, q, p })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn closed_loop(&self) -> Matrix {
        &self.a + &self.b * &self.k
    }

    /// `|PB|`.
    pub fn pb_norm(&self) -> f64 {
        linalg::spectral_norm(&(&self.p * &self.b))
    }

    /// `|K|`.
    pub fn k_norm(&self) -> f64 {
        linalg::spectral_norm(&self.k)
    }

    pub fn lambda_min_q(&self) -> f64 {
        linalg::sym_eig_extremes(&self.q).0
    }

    pub fn lambda_extremes_p(&self) -> (f64, f64) {
        linalg::sym_eig_extremes(&self.p)
    }

    /// `√2(|A| + |B|)`.
    pub fn default_lipschitz_f(&self) -> f64 {
        2f64.sqrt() * (linalg::spectral_norm(&self.a) + linalg::spectral_norm(&self.b))
    }

    /// Exponential rate `(2 - θ) λ_min(Q) / (4 λ_max(P))` guaranteed under
    /// the linear trigger.
    pub fn decay_rate(&self, theta: f64) -> f64 {
        (2.0 - theta) * self.lambda_min_q() / (4.0 * self.lambda_extremes_p().1)
    }
}

/// Quadratic certificate of a linear closed loop: `S = xᵀPx`,
/// `α₁ = λ_min(P) r²`, `α₂ = λ_max(P) r²`, `γ = ½ λ_min(Q) r²`,
/// `ρ = (2|PB|²/λ_min(Q)) r²`.
pub fn linear_certificate(sys: &LinearSystem) -> IssCertificate {
    let (p_min, p_max) = sys.lambda_extremes_p();
    let q_min = sys.lambda_min_q();
    let pb = sys.pb_norm();
    let p = sys.p.clone();
    let p_grad = sys.p.clone();
    let n = sys.state_dim();
    IssCertificate {
        s: Arc::new(move |x| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += x[i] * p[(i, j)] * x[j];
                }
            }
            acc
        }),
        grad_s: Arc::new(move |x, out| {
            for i in 0..n {
                out[i] = 2.0 * (0..n).map(|j| p_grad[(i, j)] * x[j]).sum::<f64>();
            }
        }),
        alpha1: ClassK::quadratic(p_min),
        alpha2: ClassK::quadratic(p_max),
        gamma: ClassK::quadratic(0.5 * q_min),
        rho: ClassK::quadratic(2.0 * pb * pb / q_min),
        rho_integrable: true,
    }
}

/// Worst-case violations found by [`verify_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub samples: usize,
    /// `max(α₁(|x|) - S(x), S(x) - α₂(|x|))` over the states.
    pub sandwich_violation: f64,
    /// `max(∇S·f(x, K(x)+w) + γ(|x|) - ρ(|w|))` over the (x, w) pairs.
    pub dissipation_violation: f64,
    pub passed: bool,
    pub warning: Option<&'static str>,
}

/// Checks the ISS-Lyapunov inequalities on samples: the sandwich on every
/// state and the dissipation inequality on `states[i]` paired with
/// `disturbances[i]`. Passes iff every violation is at most 1e-9.
pub fn verify_certificate(
    model: &SystemModel,
    cert: &IssCertificate,
    states: &[Vec<f64>],
    disturbances: &[Vec<f64>],
) -> Result<CertificateReport> {
    let n = model.state_dim();
    let m = model.input_dim();
    let mut sandwich = f64::NEG_INFINITY;
    let mut dissipation = f64::NEG_INFINITY;
    let mut grad = vec![0.0; n];
    let mut kx = vec![0.0; m];
    let mut dx = vec![0.0; n];
    for x in states {
        model.check_dims(x, None)?;
        let r = norm(x);
        let s = (cert.s)(x);
        sandwich = sandwich.max(cert.alpha1.eval(r) - s).max(s - cert.alpha2.eval(r));
    }
    let pairs = states.len().min(disturbances.len());
    for (x, w) in states.iter().zip(disturbances) {
        model.check_dims(x, Some(w))?;
        model.k_into(x, &mut kx);
        for (ki, wi) in kx.iter_mut().zip(w) {
            *ki += wi;
        }
        model.f_into(x, &kx, &mut dx);
        (cert.grad_s)(x, &mut grad);
        let lie: f64 = grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
        let bound = -cert.gamma.eval(norm(x)) + cert.rho.eval(norm(w));
        dissipation = dissipation.max(lie - bound);
    }
    let warning = if states.is_empty() {
        Some("empty sample set: certificate check is vacuous")
    } else if pairs == 0 {
        Some("no disturbance samples: dissipation inequality not checked")
    } else {
        None
    };
    let sandwich = if sandwich.is_finite() { sandwich } else { 0.0 };
    let dissipation = if dissipation.is_finite() { dissipation } else { 0.0 };
    Ok(CertificateReport {
        samples: states.len(),
        sandwich_violation: sandwich,
        dissipation_violation: dissipation,
        passed: sandwich <= 1e-9 && dissipation <= 1e-9,
        warning,
    })
}

/// Linearization of the two benchmark plants: `A = [1 1; 0 1]`, `B = [0; 1]`,
/// `K = [-6 -5]` and the given `Q`.
pub fn benchmark_linearization(q: Matrix) -> Result<LinearSystem> {
    LinearSystem::new(
        linalg::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
        linalg::from_rows(&[&[0.0], &[1.0]]),
        linalg::from_rows(&[&[-6.0, -5.0]]),
        q,
    )
}

/// Compliant benchmark: `f = (x₁ + x₂, tanh x₁ + x₂ + u)`,
/// `K = -6x₁ - 5x₂ - tanh x₁`, `L_f = 2√3`, `L_K = 7√2`.
pub fn compliant_benchmark() -> SystemModel {
    let f: VectorField = Arc::new(|x, u, out| {
        out[0] = x[0] + x[1];
        out[1] = x[0].tanh() + x[1] + u[0];
    });
    let k: FeedbackLaw = Arc::new(|x, out| {
        out[0] = -6.0 * x[0] - 5.0 * x[1] - x[0].tanh();
    });
    SystemModel::new(2, 1, f, k, 2.0 * 3f64.sqrt(), 7.0 * 2f64.sqrt())
        .expect("benchmark vanishes at the origin")
}

/// Non-compliant benchmark: `f = (x₁ + x₂, x₁³ + x₂ + u)`,
/// `K = -6x₁ - 5x₂ - x₁³`. `K` is not globally Lipschitz; the constants
/// passed here are local bounds used only for diagnostics.
pub fn cubic_benchmark(lipschitz_f: f64, lipschitz_k: f64) -> SystemModel {
    let f: VectorField = Arc::new(|x, u, out| {
        out[0] = x[0] + x[1];
        out[1] = x[0] * x[0] * x[0] + x[1] + u[0];
    });
    let k: FeedbackLaw = Arc::new(|x, out| {
        out[0] = -6.0 * x[0] - 5.0 * x[1] - x[0] * x[0] * x[0];
    });
    SystemModel::new(2, 1, f, k, lipschitz_f, lipschitz_k).expect("benchmark vanishes at the origin")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compliant_vector_field_value() {
        let model = compliant_benchmark();
        let dx = model.eval_f(&[1.0, 1.0], &[0.0]).unwrap();
        assert_relative_eq!(dx[0], 2.0);
        assert_relative_eq!(dx[1], 1f64.tanh() + 1.0, epsilon = 1e-15);
        assert!((dx[1] - 1.76159).abs() < 1e-5);
        assert_eq!(model.eval_f(&[0.0, 0.0], &[0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_vector_field_value() {
        let sys = LinearSystem::new(
            linalg::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
            linalg::from_rows(&[&[0.0], &[1.0]]),
            linalg::from_rows(&[&[-1.0, -2.0]]),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let model = SystemModel::from_linear(sys);
        assert_eq!(model.eval_f(&[1.0, 0.0], &[2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = compliant_benchmark();
        let err = model.eval_f(&[1.0], &[0.0]).unwrap_err();
        assert_eq!(err, Error::Dimension { expected: 2, got: 1 });
        assert!(model.eval_f(&[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn nonzero_equilibrium_rejected() {
        let f: VectorField = Arc::new(|_, _, out| out[0] = 1.0);
        let k: FeedbackLaw = Arc::new(|_, out| out[0] = 0.0);
        assert!(matches!(SystemModel::new(1, 1, f, k, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn certificate_of_stable_diagonal() {
        let sys = LinearSystem::new(
            Matrix::zeros(2, 2),
            linalg::from_rows(&[&[0.0], &[1.0]]),
            Matrix::zeros(1, 2),
            Matrix::identity(2, 2),
        );
        // A + BK = 0 is not Hurwitz.
        assert!(matches!(sys, Err(Error::NotHurwitz(_))));

        let sys = LinearSystem::new(
            -Matrix::identity(2, 2),
            linalg::from_rows(&[&[0.0], &[1.0]]),
            Matrix::zeros(1, 2),
            Matrix::identity(2, 2) * 2.0,
        )
        .unwrap();
        let cert = linear_certificate(&sys);
        assert_relative_eq!(cert.gamma.quadratic_coeff().unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cert.rho.quadratic_coeff().unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cert.gamma.eval(0.0), 0.0);
        assert_eq!(cert.rho.eval(0.0), 0.0);
        assert_relative_eq!(cert.rho.inv(cert.rho.eval(3.0)), 3.0, epsilon = 1e-12);
        assert!(cert.maps_are_class_k());
        assert!(cert.rho_integrable);
    }

    #[test]
    fn empty_samples_pass_with_warning() {
        let sys = benchmark_linearization(Matrix::identity(2, 2)).unwrap();
        let model = SystemModel::from_linear(sys.clone());
        let report = verify_certificate(&model, &linear_certificate(&sys), &[], &[]).unwrap();
        assert!(report.passed);
        assert!(report.warning.is_some());
    }

    #[test]
    fn corrupted_gamma_fails() {
        let sys = benchmark_linearization(Matrix::identity(2, 2)).unwrap();
        let model = SystemModel::from_linear(sys.clone());
        let mut cert = linear_certificate(&sys);
        // xᵀQx = |x|² exactly, so a gamma of 2|x|² cannot hold along x with w = 0.
        cert.gamma = ClassK::quadratic(2.0);
        let states = vec![vec![1.0, 0.0], vec![0.3, -0.7]];
        let dist = vec![vec![0.0], vec![0.0]];
        let report = verify_certificate(&model, &cert, &states, &dist).unwrap();
        assert!(!report.passed);
        assert!(report.dissipation_violation > 0.0);
    }

    #[test]
    fn compliant_feedback_lipschitz_on_samples() {
        let model = compliant_benchmark();
        let pairs: Vec<_> = (0..50)
            .map(|i| {
                let a = i as f64 * 0.37 - 9.0;
                (vec![a, -0.5 * a], vec![a * 0.3 + 1.0, a - 2.0])
            })
            .collect();
        assert!(model.lipschitz_k_ratio(&pairs).unwrap() <= 1.0);
    }
}
