use etpf::config::{apply_override, ExperimentConfig};
use etpf::core::monitor::{compute_v, compute_v_linear};
use etpf::experiments;
use etpf::output::{fmt_f, read_table, write_trace};
use etpf::presets;
use proptest::prelude::*;

/// Re-parses `trace.csv` and recomputes `V` from the stored `x` and `L`.
fn recompute_v(preset: &str, overrides: &[&str]) -> usize {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let cfg = presets::load(preset, &overrides).unwrap();
    let sim = experiments::simulate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&path, &sim.trace).unwrap();
    let table = read_table(&path).unwrap();
    let n = sim.trace.state_dim;
    let xs: Vec<usize> = (1..=n).map(|i| table.column(&format!("x_{i}")).unwrap()).collect();
    let (vc, lc) = (table.column("V").unwrap(), table.column("L").unwrap());
    let mon = sim.config.monitor.as_ref().unwrap();
    let mut checked = 0;
    for row in &table.rows {
        if row[vc].is_nan() {
            continue;
        }
        let x: Vec<f64> = xs.iter().map(|&c| row[c]).collect();
        let v = match sim.config.model.linear() {
            Some(sys) if mon.form == etpf::core::monitor::FunctionalForm::Integral => compute_v_linear(sys, &x, row[lc]),
            _ => compute_v(sim.config.certificate.as_ref().unwrap(), &x, row[lc], mon.b),
        };
        assert!((v - row[vc]).abs() <= 1e-9 * (1.0 + v.abs()), "{v} vs {}", row[vc]);
        checked += 1;
    }
    checked
}

#[test]
fn trace_round_trip_recovers_v_sup_form() {
    assert!(recompute_v("example1", &["sim.horizon=5.0"]) > 10);
}

#[test]
fn trace_round_trip_recovers_v_integral_form() {
    assert!(recompute_v("linear2d", &["sim.horizon=2.0"]) > 10);
}

#[test]
fn trace_values_round_trip_exactly() {
    let cfg = presets::load("example2", &["sim.horizon=3.0".into()]).unwrap();
    let sim = experiments::simulate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&path, &sim.trace).unwrap();
    let table = read_table(&path).unwrap();
    let xc = table.column("x_1").unwrap();
    for (i, row) in table.rows.iter().enumerate() {
        assert_eq!(row[0].to_bits(), sim.trace.times[i].to_bits());
        assert_eq!(row[xc].to_bits(), sim.trace.x_at(i)[0].to_bits());
    }
}

proptest! {
    #[test]
    fn seventeen_digits_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn numeric_override_lands_in_config(theta in 0.01f64..0.99, step in 1e-4f64..1e-1) {
        let src = presets::find("example1").unwrap().source;
        let cfg = ExperimentConfig::parse(src, &[format!("trigger.theta={theta:?}"), format!("sim.step={step:?}")]).unwrap();
        prop_assert_eq!(cfg.trigger.theta, theta);
        prop_assert_eq!(cfg.sim.step, step);
    }

    #[test]
    fn override_creates_missing_sections(seed in any::<u32>()) {
        let mut doc = toml::Table::new();
        apply_override(&mut doc, &format!("heatmap.seed={seed}")).unwrap();
        prop_assert_eq!(doc["heatmap"]["seed"].as_integer(), Some(seed as i64));
    }
}
