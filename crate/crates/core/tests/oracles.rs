//! Closed-form values computed by hand, independent of the code under test.

use approx::assert_relative_eq;
use etpf_core::delay::{ActuationDelay, SensingDelay, SensingSchedule};
use etpf_core::linalg::{from_rows, solve_lyapunov, Matrix};
use etpf_core::model::{benchmark_linearization, compliant_benchmark, ClassK, IssCertificate};
use etpf_core::monitor::{compute_v, compute_v_linear};
use etpf_core::tradeoff::{delta_of_nu, mu_of_nu, TradeoffConstants};
use etpf_core::trigger::{linear_coefficient, min_dwell};
use std::sync::Arc;

#[test]
fn compliant_field_at_one_one() {
    let model = compliant_benchmark();
    let dx = model.eval_f(&[1.0, 1.0], &[0.0]).unwrap();
    assert_relative_eq!(dx[0], 2.0);
    assert_relative_eq!(dx[1], 1f64.tanh() + 1.0, epsilon = 1e-15);
    let u = model.eval_k(&[1.0, 1.0]).unwrap();
    assert_relative_eq!(u[0], -11.0 - 1f64.tanh(), epsilon = 1e-15);
}

// (A+BK)ᵀP + P(A+BK) = -I with A+BK = [1 1; -6 -4] solved by hand:
// 2p - 12q = -1, p - 3q - 6r = 0, 2q - 8r = -1.
#[test]
fn benchmark_lyapunov_matrix() {
    let a_cl = from_rows(&[&[1.0, 1.0], &[-6.0, -4.0]]);
    let p = solve_lyapunov(&a_cl, &Matrix::identity(2, 2)).unwrap();
    let want = from_rows(&[&[4.5, 5.0 / 6.0], &[5.0 / 6.0, 1.0 / 3.0]]);
    assert!((p - &want).abs().max() < 1e-12);

    let sys = benchmark_linearization(Matrix::identity(2, 2)).unwrap();
    assert!((sys.p() - &want).abs().max() < 1e-12);
    assert_relative_eq!(sys.pb_norm(), 29f64.sqrt() / 6.0, epsilon = 1e-12);
}

#[test]
fn bump_delay_inverse() {
    let d = ActuationDelay::bump();
    assert_relative_eq!(d.sigma(4.0).unwrap(), 5.0, epsilon = 1e-9);
    assert_relative_eq!(d.phi(5.0), 4.0, epsilon = 1e-12);
    assert_relative_eq!(d.m1(), 1.0 + 3.0 * 3f64.sqrt() / 16.0);
}

#[test]
fn freshest_delivered_sample() {
    // transmissions at 0, 2, 4, ... delivered one unit later
    let s = SensingSchedule::periodic(2.0, 10.0, SensingDelay::Fixed(1.0), 0).unwrap();
    assert_eq!(s.latest_delivered_index(0.5), None);
    assert_eq!(s.latest_delivered_index(3.5), Some(1));
    assert_eq!(s.latest_delivered_index(5.0), Some(2));
    assert_relative_eq!(s.first_delivery(), 1.0);
}

#[test]
fn linear_threshold_coefficient() {
    let lk = 7.0 * 2f64.sqrt();
    let pb = 29f64.sqrt() / 6.0;
    let want = 0.5f64.sqrt() / (4.0 * pb * lk);
    assert_relative_eq!(linear_coefficient(1.0, 0.5, pb, lk), want, epsilon = 1e-15);
    assert!((want - 0.019896).abs() < 5e-6);
}

#[test]
fn dwell_closed_form() {
    assert_relative_eq!(min_dwell(1.0, 2.0, 1.0).unwrap(), (4.0f64 / 3.0).ln(), epsilon = 1e-15);
    let c = TradeoffConstants::from_scalars(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
    assert_relative_eq!(delta_of_nu(&c, 1.0).unwrap(), (4.0f64 / 3.0).ln(), epsilon = 1e-15);
    assert_relative_eq!(mu_of_nu(&c, 1.0).unwrap(), 0.25, epsilon = 1e-15);
}

#[test]
fn lyapunov_functional_values() {
    // ρ(r) = r², so (2/b) ∫₀^{2L} r dr = (2/b)(2L²) = 2 for b = 2, L = 1
    let cert = IssCertificate {
        s: Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum()),
        grad_s: Arc::new(|x: &[f64], out: &mut [f64]| {
            for (o, v) in out.iter_mut().zip(x) {
                *o = 2.0 * v;
            }
        }),
        alpha1: ClassK::quadratic(1.0),
        alpha2: ClassK::quadratic(1.0),
        gamma: ClassK::quadratic(1.0),
        rho: ClassK::quadratic(1.0),
        rho_integrable: true,
    };
    assert_relative_eq!(compute_v(&cert, &[0.0, 0.0], 1.0, 2.0), 2.0, epsilon = 1e-9);
    assert_relative_eq!(compute_v(&cert, &[1.0, 0.0], 1.0, 2.0), 3.0, epsilon = 1e-9);

    // xᵀPx + 4|PB|²/λ_min(Q) L with |PB|² = 29/36
    let sys = benchmark_linearization(Matrix::identity(2, 2)).unwrap();
    assert_relative_eq!(compute_v_linear(&sys, &[0.0, 0.0], 18.0 / 29.0), 2.0, epsilon = 1e-12);
    assert_relative_eq!(compute_v_linear(&sys, &[1.0, 0.0], 0.0), 4.5, epsilon = 1e-12);
}
