//! Property tests for the model, channel, signal, trigger and linear-algebra
//! invariants.

use etpf_core::delay::{ActuationDelay, SensingDelay, SensingSchedule};
use etpf_core::linalg::{solve_lyapunov, spectral_abscissa, Matrix};
use etpf_core::model::{benchmark_linearization, linear_certificate, verify_certificate, ClassK, SystemModel};
use etpf_core::norm;
use etpf_core::signal::{Interpolation, TimedSignal};
use etpf_core::trigger::min_dwell;
use proptest::prelude::*;

fn signal(mode: Interpolation, values: &[f64]) -> TimedSignal {
    let mut s = TimedSignal::new(1, mode);
    for (i, v) in values.iter().enumerate() {
        s.push(0.25 * i as f64, &[*v]).unwrap();
    }
    s
}

proptest! {
    #[test]
    fn linear_certificate_dissipates(
        x in prop::array::uniform2(-7.0..7.0f64),
        w in -10.0..10.0f64,
    ) {
        let sys = benchmark_linearization(Matrix::identity(2, 2)).unwrap();
        let cert = linear_certificate(&sys);
        let model = SystemModel::from_linear(sys);
        let rep = verify_certificate(&model, &cert, &[x.to_vec()], &[vec![w]]).unwrap();
        let scale = 1.0 + norm(&x).powi(2) + w * w;
        prop_assert!(rep.dissipation_violation <= 1e-12 * scale);
        prop_assert!(rep.sandwich_violation <= 1e-12 * scale);
    }

    #[test]
    fn class_k_inverse_round_trips(c in 1e-3..1e3f64, e in -6.0..6.0f64) {
        let k = ClassK::quadratic(c);
        let r = 10f64.powf(e);
        prop_assert!((k.inv(k.eval(r)) - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn sigma_inverts_phi(t in 0.0..30.0f64, d in 0.1..1.0f64, a in 0.0..0.09f64) {
        for delay in [ActuationDelay::bump(), ActuationDelay::sinusoidal(d, a).unwrap()] {
            let s = delay.sigma(delay.phi(t)).unwrap();
            prop_assert!((s - t).abs() < 1e-8, "{s} vs {t}");
            let later = delay.sigma(t + 0.01).unwrap();
            prop_assert!(later > delay.sigma(t).unwrap());
            prop_assert!(t - delay.phi(t) > 0.0 && t - delay.phi(t) <= delay.m0() + 1e-12);
        }
    }

    #[test]
    fn sensing_is_seeded_and_monotone(seed in any::<u64>(), mean in 0.0..2.0f64, std in 0.0..1.0f64) {
        let delay = SensingDelay::Gaussian { mean, std };
        let a = SensingSchedule::periodic(0.5, 10.0, delay, seed).unwrap();
        let b = SensingSchedule::periodic(0.5, 10.0, delay, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for (tx, rx) in a.transmit_times().iter().zip(a.delivery_times()) {
            prop_assert!(rx >= tx);
        }
        let mut last = None;
        for i in 0..200 {
            let now = a.latest_delivered_index(0.07 * i as f64);
            prop_assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn integral_is_additive(
        values in prop::collection::vec(-5.0..5.0f64, 2..20),
        u in 0.0..1.0f64,
        v in 0.0..1.0f64,
        hold in any::<bool>(),
    ) {
        let mode = if hold { Interpolation::Hold } else { Interpolation::Linear };
        let s = signal(mode, &values);
        let end = 0.25 * (values.len() - 1) as f64;
        let (a, b) = if u <= v { (u * end, v * end) } else { (v * end, u * end) };
        let m = 0.5 * (a + b);
        let id = |x: &[f64], o: &mut [f64]| o[0] = x[0];
        let whole = s.integrate(a, b, 1, id).unwrap()[0];
        let parts = s.integrate(a, m, 1, id).unwrap()[0] + s.integrate(m, b, 1, id).unwrap()[0];
        prop_assert!((whole - parts).abs() < 1e-12 * (1.0 + whole.abs()));
    }

    #[test]
    fn unweighted_sup_is_max(values in prop::collection::vec(-5.0..5.0f64, 1..20), hold in any::<bool>()) {
        let mode = if hold { Interpolation::Hold } else { Interpolation::Linear };
        let s = signal(mode, &values);
        let end = 0.25 * (values.len() - 1) as f64;
        let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert_eq!(s.weighted_sup(0.0, end, 0.0).unwrap(), max);
    }

    #[test]
    fn dwell_monotone(a in 0.1..50.0f64, c in 0.1..50.0f64, r in 0.01..5.0f64) {
        prop_assume!((a - c).abs() > 1e-6 && (a - c - 0.5).abs() > 1e-6);
        let d = min_dwell(a, c, r).unwrap();
        prop_assert!(d > 0.0);
        prop_assert!(min_dwell(a, c, 1.1 * r).unwrap() > d);
        prop_assert!(min_dwell(a, c + 0.5, r).unwrap() < d);
    }

    #[test]
    fn lyapunov_residual(entries in prop::collection::vec(-3.0..3.0f64, 9), shift in 0.1..2.0f64) {
        let m = Matrix::from_row_slice(3, 3, &entries);
        let a = &m - Matrix::identity(3, 3) * (spectral_abscissa(&m) + shift);
        let p = solve_lyapunov(&a, &Matrix::identity(3, 3)).unwrap();
        let res = a.transpose() * &p + &p * &a + Matrix::identity(3, 3);
        prop_assert!(res.abs().max() < 1e-8 * (1.0 + p.abs().max()));
        prop_assert!((&p - p.transpose()).abs().max() < 1e-12 * (1.0 + p.abs().max()));
    }
}
