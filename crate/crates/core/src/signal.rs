//! Append-only timestamped sample buffers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{norm, Error, Result};

/// How a signal is read between stamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Value of the latest stamp `≤ t`; the value at a stamp is the new value.
    Hold,
    Linear,
}

/// Vector samples at strictly increasing time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSignal {
    dim: usize,
    mode: Interpolation,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimedSignal {
    pub fn new(dim: usize, mode: Interpolation) -> Self {
        TimedSignal {
            dim,
            mode,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn last_value(&self) -> Option<&[f64]> {
        if self.is_empty() {
            None
        } else {
            Some(self.value(self.len() - 1))
        }
    }

    /// Appends a sample; stamps must strictly increase.
    pub fn push(&mut self, t: f64, value: &[f64]) -> Result<()> {
        if value.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: value.len(),
            });
        }
        if let Some(last) = self.last_time() {
            if !(t > last) {
                return Err(Error::Config(format!(
                    "time stamp {t} does not follow {last}"
                )));
            }
        }
        self.times.push(t);
        self.values.extend_from_slice(value);
        Ok(())
    }

    fn coverage_error(&self, t: f64) -> Error {
        Error::OutOfRange {
            t,
            start: self.times.first().copied().unwrap_or(f64::NAN),
            end: self.last_time().unwrap_or(f64::NAN),
        }
    }

    /// Reads the signal at `t` into `out`. Hold signals extend past their last
    /// stamp; linear signals do not.
    pub fn sample_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.len();
        if n == 0 || t < self.times[0] {
            return Err(self.coverage_error(t));
        }
        // index of the last stamp <= t
        let i = self.times.partition_point(|&s| s <= t) - 1;
        match self.mode {
            Interpolation::Hold => out.copy_from_slice(self.value(i)),
            Interpolation::Linear => {
                if i == n - 1 {
                    if t > self.times[i] {
                        return Err(self.coverage_error(t));
                    }
                    out.copy_from_slice(self.value(i));
                } else {
                    let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
                    let (a, b) = (self.value(i), self.value(i + 1));
                    for k in 0..self.dim {
                        out[k] = a[k] + w * (b[k] - a[k]);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(t, &mut out)?;
        Ok(out)
    }

    /// `max e^{b(τ-t)} |value(τ)|` over the stamps in `[t, end]` and both
    /// endpoints. An empty window gives 0.
    pub fn weighted_sup(&self, t: f64, end: f64, b: f64) -> Result<f64> {
        if self.is_empty() || end < t {
            return Ok(0.0);
        }
        let mut buf = vec![0.0; self.dim];
        let mut best: f64 = 0.0;
        for tau in [t, end] {
            self.sample_into(tau, &mut buf)?;
            best = best.max((b * (tau - t)).exp() * norm(&buf));
        }
        let lo = self.times.partition_point(|&s| s < t);
        let hi = self.times.partition_point(|&s| s <= end);
        for i in lo..hi {
            let tau = self.times[i];
            best = best.max((b * (tau - t)).exp() * norm(self.value(i)));
        }
        Ok(best)
    }

    /// `∫ₐᵇ transform(value(s)) ds` on the stored grid: trapezoids for linear
    /// signals, exact rectangles per hold segment for hold signals.
    pub fn integrate<F>(&self, a: f64, b: f64, out_dim: usize, mut transform: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        if b < a {
            return Err(Error::Config(format!("integration bounds {a} > {b}")));
        }
        let mut acc = vec![0.0; out_dim];
        if b == a {
            return Ok(acc);
        }
        // Breakpoints: a, interior stamps, b.
        let lo = self.times.partition_point(|&s| s <= a);
        let hi = self.times.partition_point(|&s| s < b);
        let mut knots = Vec::with_capacity(hi.saturating_sub(lo) + 2);
        knots.push(a);
        knots.extend_from_slice(&self.times[lo..hi.max(lo)]);
        knots.push(b);

        let mut va = vec![0.0; self.dim];
        let mut vb = vec![0.0; self.dim];
        let mut fa = vec![0.0; out_dim];
        let mut fb = vec![0.0; out_dim];
        match self.mode {
            Interpolation::Hold => {
                for w in knots.windows(2) {
                    self.sample_into(w[0], &mut va)?;
                    transform(&va, &mut fa);
                    for k in 0..out_dim {
                        acc[k] += fa[k] * (w[1] - w[0]);
                    }
                }
                // coverage of the right end
                self.sample_into(b, &mut vb)?;
            }
            Interpolation::Linear => {
                self.sample_into(knots[0], &mut va)?;
                transform(&va, &mut fa);
                for w in knots.windows(2) {
                    self.sample_into(w[1], &mut vb)?;
                    transform(&vb, &mut fb);
                    for k in 0..out_dim {
                        acc[k] += 0.5 * (fa[k] + fb[k]) * (w[1] - w[0]);
                    }
                    core::mem::swap(&mut fa, &mut fb);
                }
            }
        }
        Ok(acc)
    }

    /// Drops samples before `t` while keeping the last stamp `≤ t`, so the
    /// signal still covers `t`.
    pub fn prune_before(&mut self, t: f64) {
        let keep_from = self.times.partition_point(|&s| s <= t);
        if keep_from <= 1 {
            return;
        }
        let drop = keep_from - 1;
        self.times.drain(..drop);
        self.values.drain(..drop * self.dim);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar(mode: Interpolation, pts: &[(f64, f64)]) -> TimedSignal {
        let mut s = TimedSignal::new(1, mode);
        for &(t, v) in pts {
            s.push(t, &[v]).unwrap();
        }
        s
    }

    #[test]
    fn hold_and_linear_sampling() {
        let hold = scalar(Interpolation::Hold, &[(0.0, 1.0), (2.0, 5.0)]);
        assert_eq!(hold.sample(1.9).unwrap(), vec![1.0]);
        assert_eq!(hold.sample(2.0).unwrap(), vec![5.0]);
        assert_eq!(hold.sample(7.0).unwrap(), vec![5.0]);
        assert!(hold.sample(-0.1).is_err());

        let lin = scalar(Interpolation::Linear, &[(0.0, 0.0), (2.0, 4.0)]);
        assert_eq!(lin.sample(1.0).unwrap(), vec![2.0]);
        assert!(matches!(lin.sample(2.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn push_rejects_non_increasing() {
        let mut s = scalar(Interpolation::Hold, &[(1.0, 0.0)]);
        assert!(s.push(1.0, &[2.0]).is_err());
        assert!(s.push(0.5, &[2.0]).is_err());
        assert!(s.push(2.0, &[2.0, 3.0]).is_err());
    }

    #[test]
    fn weighted_sup_cases() {
        let zero = scalar(Interpolation::Linear, &[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(zero.weighted_sup(0.0, 1.0, 10.0).unwrap(), 0.0);
        let c = scalar(Interpolation::Hold, &[(0.0, -3.0)]);
        assert_relative_eq!(c.weighted_sup(0.0, 0.8, 0.0).unwrap(), 3.0);
        assert_relative_eq!(c.weighted_sup(0.0, 0.8, 2.0).unwrap(), 3.0 * 1.6f64.exp(), max_relative = 1e-14);
        assert_eq!(c.weighted_sup(1.0, 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn integrate_cases() {
        let c = scalar(Interpolation::Hold, &[(0.0, 3.0)]);
        assert_relative_eq!(c.integrate(0.0, 2.0, 1, |v, o| o[0] = v[0]).unwrap()[0], 6.0);
        let lin = scalar(Interpolation::Linear, &[(0.0, 0.0), (2.0, 4.0)]);
        assert_relative_eq!(lin.integrate(0.0, 2.0, 1, |v, o| o[0] = v[0]).unwrap()[0], 4.0);
        let step = scalar(Interpolation::Hold, &[(0.0, 1.0), (1.0, 4.0)]);
        assert_relative_eq!(step.integrate(0.0, 2.0, 1, |v, o| o[0] = v[0]).unwrap()[0], 5.0);
        assert_relative_eq!(step.integrate(0.5, 1.25, 1, |v, o| o[0] = v[0]).unwrap()[0], 0.5 + 1.0);
    }

    #[test]
    fn prune_keeps_coverage() {
        let mut s = scalar(Interpolation::Hold, &[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0)]);
        s.prune_before(2.5);
        assert_eq!(s.times(), &[2.0, 3.0]);
        assert_eq!(s.sample(2.5).unwrap(), vec![3.0]);
    }

    fn arb_signal(mode: Interpolation) -> impl Strategy<Value = TimedSignal> {
        prop::collection::vec((0.01f64..1.0, -5.0f64..5.0), 2..30).prop_map(move |steps| {
            let mut s = TimedSignal::new(1, mode);
            let mut t = 0.0;
            for (dt, v) in steps {
                s.push(t, &[v]).unwrap();
                t += dt;
            }
            s
        })
    }

    proptest! {
        #[test]
        fn sample_exact_at_stamps(sig in arb_signal(Interpolation::Linear)) {
            for i in 0..sig.len() {
                prop_assert_eq!(sig.sample(sig.times()[i]).unwrap(), sig.value(i).to_vec());
            }
        }

        #[test]
        fn integrate_is_additive(sig in arb_signal(Interpolation::Hold), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
            let end = sig.last_time().unwrap();
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let (a, b, c) = (0.0, lo * end, hi * end);
            let id = |v: &[f64], o: &mut [f64]| o[0] = v[0];
            let whole = sig.integrate(a, c, 1, id).unwrap()[0];
            let parts = sig.integrate(a, b, 1, id).unwrap()[0] + sig.integrate(b, c, 1, id).unwrap()[0];
            let scale: f64 = 1.0 + whole.abs();
            prop_assert!((whole - parts).abs() <= 1e-12 * scale);
        }

        #[test]
        fn unweighted_sup_is_plain_max(sig in arb_signal(Interpolation::Linear)) {
            let end = sig.last_time().unwrap();
            let max = (0..sig.len()).map(|i| sig.value(i)[0].abs()).fold(0.0, f64::max);
            prop_assert_eq!(sig.weighted_sup(0.0, end, 0.0).unwrap(), max);
        }
    }
}
