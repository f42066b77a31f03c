//! CSV tables, run summaries and gnuplot scripts.
//!
//! Floats are written with 17 significant digits so that every value
//! re-parses to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use etpf_core::sim::{HeatmapCell, SimTrace};
use etpf_core::tradeoff::{NuRow, Optimum};

use crate::error::{CliError, Result};

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Column names of `trace.csv`.
pub fn trace_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h.extend((1..=m).map(|i| format!("u_{i}")));
    h.extend((1..=n).map(|i| format!("p_{i}")));
    for name in ["e_norm", "threshold", "V", "L", "event_flag", "delivery_flag"] {
        h.push(name.to_string());
    }
    h
}

pub fn write_trace(path: &Path, trace: &SimTrace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(trace_header(trace.state_dim, trace.input_dim))?;
    for i in 0..trace.len() {
        let mut row = vec![fmt_f(trace.times[i])];
        row.extend(trace.x_at(i).iter().map(|v| fmt_f(*v)));
        row.extend(trace.u_at(i).iter().map(|v| fmt_f(*v)));
        row.extend(trace.p_at(i).iter().map(|v| fmt_f(*v)));
        row.push(fmt_f(trace.e_norm[i]));
        row.push(fmt_f(trace.threshold[i]));
        row.push(fmt_f(trace.v[i]));
        row.push(fmt_f(trace.l[i]));
        row.push(flag(trace.event_flag[i]));
        row.push(flag(trace.delivery_flag[i]));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_events(path: &Path, trace: &SimTrace) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["k".to_string(), "t".to_string()];
    header.extend((1..=trace.input_dim).map(|i| format!("u_{i}")));
    header.extend(["p_norm", "e_norm", "dwell"].map(String::from));
    w.write_record(&header)?;
    let ev = &trace.events;
    for k in 0..ev.len() {
        let mut row = vec![k.to_string(), fmt_f(ev.times[k])];
        row.extend(ev.controls[k].iter().map(|v| fmt_f(*v)));
        row.push(fmt_f(ev.p_norms[k]));
        row.push(fmt_f(ev.error_norms[k]));
        row.push(if k == 0 { fmt_f(f64::NAN) } else { fmt_f(ev.times[k] - ev.times[k - 1]) });
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_deliveries(path: &Path, trace: &SimTrace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["index", "transmit_time", "delivery_time", "grid_time", "snap", "used"])?;
    for d in &trace.deliveries {
        w.write_record([
            d.index.to_string(),
            fmt_f(d.transmit_time),
            fmt_f(d.delivery_time),
            fmt_f(d.grid_time),
            fmt_f(d.snap),
            flag(d.used),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_heatmap(path: &Path, cells: &[HeatmapCell]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["delta_tau", "d_psi", "avg_xT"])?;
    for c in cells {
        w.write_record([fmt_f(c.delta_tau), fmt_f(c.d_psi), fmt_f(c.avg_final_norm)])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_tradeoff_nu(path: &Path, rows: &[NuRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["nu", "delta", "mu"])?;
    for r in rows {
        w.write_record([fmt_f(r.nu), fmt_f(r.delta), fmt_f(r.mu)])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_tradeoff_lambda(path: &Path, optima: &[Optimum]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["lambda", "nu_star", "boundary", "degenerate", "clipped", "theta_at_least_one"])?;
    for o in optima {
        w.write_record([
            fmt_f(o.lambda),
            fmt_f(o.nu),
            flag(o.boundary),
            flag(o.degenerate),
            flag(o.clipped),
            flag(o.theta_at_least_one),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header and numeric rows of a CSV written by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// gnuplot script with state, input, prediction and Lyapunov panels over
/// `trace.csv`.
pub fn trace_script(n: usize, m: usize) -> String {
    let col = |name: &str| trace_header(n, m).iter().position(|h| h == name).expect("known column") + 1;
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,1100");
    let _ = writeln!(s, "set output 'trace.png'");
    let _ = writeln!(s, "set multiplot layout 4,1");
    let _ = writeln!(s, "set xlabel 't'");
    let xs: Vec<String> = (1..=n).map(|i| format!("'trace.csv' using 1:{} with lines", col(&format!("x_{i}")))).collect();
    let _ = writeln!(s, "set ylabel 'x'\nplot {}", xs.join(", "));
    let ps: Vec<String> = (1..=n).map(|i| format!("'trace.csv' using 1:{} with lines", col(&format!("p_{i}")))).collect();
    let _ = writeln!(s, "set ylabel 'p'\nplot {}", ps.join(", "));
    let us: Vec<String> = (1..=m).map(|i| format!("'trace.csv' using 1:{} with steps", col(&format!("u_{i}")))).collect();
    let _ = writeln!(s, "set ylabel 'u'\nplot {}", us.join(", "));
    let _ = writeln!(s, "set logscale y\nset ylabel 'V'");
    let _ = writeln!(s, "plot 'trace.csv' using 1:{} with lines, 'events.csv' using 2:(1e-12) with impulses title 'events'", col("V"));
    let _ = writeln!(s, "unset multiplot");
    s
}

pub fn heatmap_script() -> String {
    "set datafile separator ','\n\
     set terminal pngcairo size 700,600\n\
     set output 'heatmap.png'\n\
     set xlabel 'delta_tau'\n\
     set ylabel 'd_psi'\n\
     set logscale cb\n\
     set view map\n\
     plot 'heatmap.csv' using 1:2:3 skip 1 with points pointtype 5 pointsize 3 palette notitle\n"
        .to_string()
}

pub fn tradeoff_script() -> String {
    "set datafile separator ','\n\
     set key autotitle columnhead\n\
     set terminal pngcairo size 900,400\n\
     set output 'tradeoff.png'\n\
     set multiplot layout 1,2\n\
     set xlabel 'nu'\n\
     set ylabel 'delta'\n\
     set y2label 'mu'\n\
     set y2tics\n\
     plot 'tradeoff_nu.csv' using 1:2 with lines, '' using 1:3 axes x1y2 with lines\n\
     unset y2label\n\
     unset y2tics\n\
     set xlabel 'lambda'\n\
     set ylabel 'nu*'\n\
     plot 'tradeoff_lambda.csv' using 1:2 with linespoints\n\
     unset multiplot\n"
        .to_string()
}
