use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn etpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etpf")).args(args).output().expect("binary runs")
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn simulate_example1_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = etpf(&["simulate", "--preset", "example1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    let norm: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("final_norm = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(norm <= 0.1);
    for file in ["trace.csv", "events.csv", "deliveries.csv", "trace.gp"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    // t = 0, 0.01, .., 25
    assert_eq!(lines(&dir.path().join("trace.csv")).len(), 2502);
}

#[test]
fn malformed_config_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[system]\nkind = \"compliant\"\n[trigger]\ntheta = \n").unwrap();
    let out = etpf(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml") && err.contains("line 4"), "{err}");
}

#[test]
fn unknown_field_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = etpf(&["simulate", "--preset", "example1", "--override", "trigger.gain=2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gain"));
}

#[test]
fn large_ratio_diverges_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = etpf(&["simulate", "--preset", "example1", "--override", "trigger.rho_bar=5.0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    // the partial trace is still written
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn single_cell_heatmap_is_one_row_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = etpf(&[
            "heatmap", "--preset", "heatmap-ex1", "--delta-tau", "2", "--d-psi", "1", "--n-ic", "3",
            "--out", dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let rows = lines(&a.path().join("heatmap.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "delta_tau,d_psi,avg_xT");
    assert_eq!(fs::read(a.path().join("heatmap.csv")).unwrap(), fs::read(b.path().join("heatmap.csv")).unwrap());
}

#[test]
fn tradeoff_on_linear2d() {
    let dir = tempfile::tempdir().unwrap();
    let out = etpf(&["tradeoff", "--preset", "linear2d", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<Vec<String>> = lines(&dir.path().join("tradeoff_lambda.csv"))
        .iter()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    let nus: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(nus.windows(2).all(|w| w[1] >= w[0]));
    let last = rows.last().unwrap();
    assert_eq!(last[0].parse::<f64>().unwrap(), 1.0);
    assert_eq!(last[3], "1", "lambda = 1 is flagged degenerate");
    assert_eq!(lines(&dir.path().join("tradeoff_nu.csv")).len(), 101);
}

#[test]
fn non_hurwitz_tradeoff_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = etpf(&["tradeoff", "--preset", "linear2d", "--override", "system.K=[[0.0, 0.0]]", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Hurwitz"));
}

#[test]
fn presets_are_listed() {
    let out = etpf(&["presets"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["example1", "example2", "example2-body", "linear2d", "heatmap-ex1", "tradeoff"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}
