//! Experiment configuration: a TOML file with the sections `system`,
//! `delay`, `controller_delay`, `sensing`, `trigger`, `predictor`,
//! `monitor`, `sim`, `heatmap` and `tradeoff`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use etpf_core::delay::{ActuationDelay, SensingDelay};
use etpf_core::linalg::Matrix;
use etpf_core::model::{self, linear_certificate, IssCertificate, LinearSystem, SystemModel};
use etpf_core::monitor::{FunctionalForm, MonitorConfig};
use etpf_core::predictor::{Integrator, PredictorMethod};
use etpf_core::signal::{Interpolation, TimedSignal};
use etpf_core::sim::{PreHistory, Sensing, SimConfig};
use etpf_core::trigger::{TriggerConfig, TriggerMode};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Acceptance criteria this experiment is expected to satisfy.
    #[serde(default)]
    pub expect: Vec<String>,
    pub system: SystemSection,
    pub delay: DelaySection,
    /// Delay the controller assumes; defaults to the plant's.
    #[serde(default)]
    pub controller_delay: Option<DelaySection>,
    #[serde(default)]
    pub sensing: SensingSection,
    pub trigger: TriggerSection,
    #[serde(default)]
    pub predictor: PredictorSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub heatmap: Option<HeatmapSection>,
    #[serde(default)]
    pub tradeoff: Option<TradeoffSection>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// "linear", "compliant" or "cubic".
    pub kind: String,
    #[serde(rename = "A", default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "K", default)]
    pub k: Option<Vec<Vec<f64>>>,
    /// Weight of the Lyapunov equation; identity when absent.
    #[serde(rename = "Q", default)]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub lipschitz_f: Option<f64>,
    #[serde(default)]
    pub lipschitz_k: Option<f64>,
    /// "linearization" (certificate of the benchmark linearization) or
    /// "none". Linear systems always carry their own certificate.
    #[serde(default)]
    pub certificate: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DelaySection {
    /// "constant", "example1", "sinusoidal" or "custom-table".
    pub kind: String,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    /// CSV of `(t, delay)` rows for "custom-table".
    #[serde(default)]
    pub table: Option<String>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub delays: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    /// "perfect" or "sampled".
    #[serde(default = "default_sensing_mode")]
    pub mode: String,
    #[serde(default)]
    pub period: Option<f64>,
    /// "fixed" or "gaussian".
    #[serde(default = "default_sensing_delay")]
    pub delay: String,
    #[serde(default)]
    pub d_psi: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub std: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_sensing_mode() -> String {
    "perfect".into()
}

fn default_sensing_delay() -> String {
    "fixed".into()
}

impl Default for SensingSection {
    fn default() -> Self {
        SensingSection {
            mode: default_sensing_mode(),
            period: None,
            delay: default_sensing_delay(),
            d_psi: None,
            mean: None,
            std: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TriggerSection {
    pub theta: f64,
    /// "nonlinear", "linear" or "fixed-ratio". When absent, a given
    /// `rho_bar` selects "fixed-ratio", otherwise linear systems use
    /// "linear" and the rest "nonlinear".
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub rho_bar: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PredictorSection {
    #[serde(default = "default_method")]
    pub method: String,
    /// "plant-mesh", "euler" or "midpoint".
    #[serde(default = "default_integrator")]
    pub integrator: String,
}

fn default_method() -> String {
    "closed-loop".into()
}

fn default_integrator() -> String {
    "plant-mesh".into()
}

impl Default for PredictorSection {
    fn default() -> Self {
        PredictorSection { method: default_method(), integrator: default_integrator() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_b")]
    pub b: f64,
    /// "sup" or "integral".
    #[serde(default = "default_form")]
    pub form: String,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_b() -> f64 {
    10.0
}

fn default_form() -> String {
    "sup".into()
}

fn default_stride() -> usize {
    10
}

impl Default for MonitorSection {
    fn default() -> Self {
        MonitorSection { enabled: false, b: default_b(), form: default_form(), stride: default_stride() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Constant input before the first event.
    #[serde(default)]
    pub pre_history: Option<Vec<f64>>,
    /// CSV of `(t, u_1, .., u_m)` rows covering `[φ(0), 0]`.
    #[serde(default)]
    pub pre_history_table: Option<String>,
}

fn default_step() -> f64 {
    1e-2
}

fn default_horizon() -> f64 {
    25.0
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            step: default_step(),
            horizon: default_horizon(),
            x0: None,
            pre_history: None,
            pre_history_table: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSection {
    pub delta_tau: Vec<f64>,
    pub d_psi: Vec<f64>,
    #[serde(default = "default_n_ic")]
    pub n_ic: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_ic() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSection {
    #[serde(default = "default_nu_points")]
    pub nu_points: usize,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Overrides `M₂` of the configured delay.
    #[serde(default)]
    pub big_m2: Option<f64>,
}

fn default_nu_points() -> usize {
    100
}

/// `0, 0.05, .., 0.95, 1`.
pub fn default_lambdas() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

impl Default for TradeoffSection {
    fn default() -> Self {
        TradeoffSection { nu_points: default_nu_points(), lambdas: default_lambdas(), big_m2: None }
    }
}

/// Sets `section.key` (any depth) in a parsed document. The value is read
/// as a TOML value, falling back to a bare string.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form section.key=value")))?;
    let path = path.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override key `{path}` must be section.key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut table = doc;
    for key in &keys[..keys.len() - 1] {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{path}`: `{key}` is not a section")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses a document and applies the overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ExperimentConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text, overrides)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), strip_prefix(&e))))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if !(self.trigger.theta > 0.0 && self.trigger.theta < 1.0) {
            return Err(CliError::Config(format!("trigger.theta = {} must lie in (0, 1)", self.trigger.theta)));
        }
        if !(self.sim.step > 0.0) || !(self.sim.horizon > 0.0) {
            return Err(CliError::Config("sim.step and sim.horizon must be positive".into()));
        }
        Ok(())
    }

    fn resolve(&self, path: &str) -> PathBuf {
        match &self.base_dir {
            Some(dir) => dir.join(path),
            None => PathBuf::from(path),
        }
    }

    /// The plant and, when one is available, its ISS certificate.
    pub fn build_model(&self) -> Result<(SystemModel, Option<IssCertificate>)> {
        let s = &self.system;
        let q = match &s.q {
            Some(rows) => matrix("system.Q", rows)?,
            None => Matrix::identity(2, 2),
        };
        let with_bounds = |m: SystemModel| match (s.lipschitz_f, s.lipschitz_k) {
            (None, None) => m,
            (f, k) => {
                let lf = f.unwrap_or(m.lipschitz_f());
                let lk = k.unwrap_or(m.lipschitz_k());
                m.with_lipschitz(lf, lk)
            }
        };
        let linearization_cert = || -> Result<Option<IssCertificate>> {
            match s.certificate.as_deref().unwrap_or("linearization") {
                "linearization" => Ok(Some(linear_certificate(&model::benchmark_linearization(q.clone())?))),
                "none" => Ok(None),
                other => Err(CliError::Config(format!("system.certificate: unknown value `{other}`"))),
            }
        };
        match s.kind.as_str() {
            "linear" => {
                let sys = self.linear_system()?;
                let cert = linear_certificate(&sys);
                Ok((with_bounds(SystemModel::from_linear(sys)), Some(cert)))
            }
            "compliant" => Ok((with_bounds(model::compliant_benchmark()), linearization_cert()?)),
            "cubic" => {
                let (lf, lk) = match (s.lipschitz_f, s.lipschitz_k) {
                    (Some(f), Some(k)) => (f, k),
                    _ => {
                        return Err(CliError::Config(
                            "system.kind = \"cubic\" needs lipschitz_f and lipschitz_k for the operating region".into(),
                        ))
                    }
                };
                Ok((model::cubic_benchmark(lf, lk), linearization_cert()?))
            }
            other => Err(CliError::Config(format!("system.kind: unknown value `{other}`"))),
        }
    }

    /// The configured `(A, B, K, Q)`; only for `kind = "linear"`.
    pub fn linear_system(&self) -> Result<LinearSystem> {
        let s = &self.system;
        if s.kind != "linear" {
            return Err(CliError::Config(format!("system.kind = `{}` is not linear", s.kind)));
        }
        let need = |name: &str, m: &Option<Vec<Vec<f64>>>| -> Result<Matrix> {
            match m {
                Some(rows) => matrix(&format!("system.{name}"), rows),
                None => Err(CliError::Config(format!("system.{name} is required for a linear system"))),
            }
        };
        let a = need("A", &s.a)?;
        let q = match &s.q {
            Some(rows) => matrix("system.Q", rows)?,
            None => Matrix::identity(a.nrows(), a.nrows()),
        };
        Ok(LinearSystem::new(a, need("B", &s.b)?, need("K", &s.k)?, q)?)
    }

    fn build_delay(&self, section: &DelaySection, name: &str) -> Result<ActuationDelay> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| CliError::Config(format!("{name}.{key} is required for kind `{}`", section.kind)))
        };
        Ok(match section.kind.as_str() {
            "constant" => ActuationDelay::constant(need(section.d, "d")?)?,
            "example1" => ActuationDelay::bump(),
            "sinusoidal" => ActuationDelay::sinusoidal(need(section.d, "d")?, need(section.a, "a")?)?,
            "custom-table" => {
                let (times, delays) = match (&section.times, &section.delays, &section.table) {
                    (Some(t), Some(d), _) => (t.clone(), d.clone()),
                    (_, _, Some(path)) => read_columns(&self.resolve(path), 2).map(|mut c| {
                        let d = c.pop().expect("two columns");
                        (c.pop().expect("two columns"), d)
                    })?,
                    _ => return Err(CliError::Config(format!("{name}: custom-table needs `table` or `times`/`delays`"))),
                };
                ActuationDelay::table(times, delays)?
            }
            other => return Err(CliError::Config(format!("{name}.kind: unknown value `{other}`"))),
        })
    }

    pub fn trigger_config(&self, linear: bool) -> Result<TriggerConfig> {
        let t = &self.trigger;
        let mode = match (t.mode.as_deref(), t.rho_bar) {
            (Some("nonlinear"), _) => TriggerMode::Nonlinear,
            (Some("linear"), _) => TriggerMode::Linear,
            (Some("fixed-ratio"), _) | (None, Some(_)) => TriggerMode::FixedRatio,
            (None, None) if linear => TriggerMode::Linear,
            (None, None) => TriggerMode::Nonlinear,
            (Some(other), _) => return Err(CliError::Config(format!("trigger.mode: unknown value `{other}`"))),
        };
        if mode != TriggerMode::FixedRatio && t.rho_bar.is_some() {
            return Err(CliError::Config("trigger.rho_bar only applies to mode = \"fixed-ratio\"".into()));
        }
        Ok(TriggerConfig { theta: t.theta, mode, rho_bar: t.rho_bar })
    }

    fn sensing(&self) -> Result<Sensing> {
        let s = &self.sensing;
        match s.mode.as_str() {
            "perfect" => Ok(Sensing::Perfect),
            "sampled" => {
                let period = s.period.ok_or_else(|| CliError::Config("sensing.period is required".into()))?;
                let delay = match s.delay.as_str() {
                    "fixed" => SensingDelay::Fixed(s.d_psi.unwrap_or(0.0)),
                    "gaussian" => SensingDelay::Gaussian {
                        mean: s.mean.ok_or_else(|| CliError::Config("sensing.mean is required".into()))?,
                        std: s.std.ok_or_else(|| CliError::Config("sensing.std is required".into()))?,
                    },
                    other => return Err(CliError::Config(format!("sensing.delay: unknown value `{other}`"))),
                };
                Ok(Sensing::Sampled { period, delay, seed: s.seed })
            }
            other => Err(CliError::Config(format!("sensing.mode: unknown value `{other}`"))),
        }
    }

    /// Full engine configuration.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let (model, cert) = self.build_model()?;
        let n = model.state_dim();
        let m = model.input_dim();
        let linear = model.linear().is_some();
        let delay = self.build_delay(&self.delay, "delay")?;
        let trigger = self.trigger_config(linear)?;
        let x0 = self.sim.x0.clone().unwrap_or_else(|| vec![0.0; n]);
        let mut cfg = SimConfig::new(model, delay, trigger, x0);
        cfg.controller_delay = match &self.controller_delay {
            Some(section) => Some(self.build_delay(section, "controller_delay")?),
            None => None,
        };
        cfg.sensing = self.sensing()?;
        cfg.certificate = cert;
        cfg.predictor = PredictorMethod::from_name(&self.predictor.method)
            .ok_or_else(|| CliError::Config(format!("predictor.method: unknown value `{}`", self.predictor.method)))?;
        cfg.integrator = Integrator::from_name(&self.predictor.integrator).ok_or_else(|| {
            CliError::Config(format!("predictor.integrator: unknown value `{}`", self.predictor.integrator))
        })?;
        cfg.step = self.sim.step;
        cfg.horizon = self.sim.horizon;
        cfg.pre_history = match (&self.sim.pre_history, &self.sim.pre_history_table) {
            (_, Some(path)) => {
                let cols = read_columns(&self.resolve(path), 1 + m)?;
                let mut sig = TimedSignal::new(m, Interpolation::Hold);
                for i in 0..cols[0].len() {
                    let u: Vec<f64> = cols[1..].iter().map(|c| c[i]).collect();
                    sig.push(cols[0][i], &u)?;
                }
                PreHistory::Table(sig)
            }
            (Some(u), None) => PreHistory::Constant(u.clone()),
            (None, None) => PreHistory::Constant(vec![0.0; m]),
        };
        if self.monitor.enabled {
            let form = match self.monitor.form.as_str() {
                "sup" => FunctionalForm::Sup,
                "integral" => FunctionalForm::Integral,
                other => return Err(CliError::Config(format!("monitor.form: unknown value `{other}`"))),
            };
            cfg.monitor = Some(MonitorConfig { b: self.monitor.b, form, stride: self.monitor.stride });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn strip_prefix(e: &CliError) -> String {
    match e {
        CliError::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config(format!("{name} must be a nonempty rectangular array of rows")));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Numeric CSV columns; a header row is skipped when it does not parse.
fn read_columns(path: &Path, expected: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cols = vec![Vec::new(); expected];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(vals) if vals.len() == expected => {
                for (c, v) in cols.iter_mut().zip(vals) {
                    c.push(v);
                }
            }
            Err(_) if line == 0 => continue,
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected {expected} numeric fields",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    if cols[0].is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
kind = "compliant"

[delay]
kind = "example1"

[trigger]
theta = 0.5
"#;

    #[test]
    fn override_sets_nested_values() {
        let cfg = ExperimentConfig::parse(MINIMAL, &["trigger.rho_bar=0.7".into(), "sim.x0=[1, 2]".into()]).unwrap();
        assert_eq!(cfg.trigger.rho_bar, Some(0.7));
        assert_eq!(cfg.sim.x0, Some(vec![1.0, 2.0]));
        assert_eq!(cfg.trigger_config(false).unwrap().mode, TriggerMode::FixedRatio);
    }

    #[test]
    fn override_string_fallback() {
        let cfg = ExperimentConfig::parse(MINIMAL, &["predictor.method=open-loop".into()]).unwrap();
        assert_eq!(cfg.predictor.method, "open-loop");
    }

    #[test]
    fn unknown_key_is_reported() {
        let err = ExperimentConfig::parse(MINIMAL, &["trigger.thet=0.5".into()]).unwrap_err();
        assert!(err.to_string().contains("thet"), "{err}");
    }

    #[test]
    fn malformed_document_reports_line() {
        let err = ExperimentConfig::parse("[system]\nkind = \n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn theta_out_of_range() {
        assert!(ExperimentConfig::parse(MINIMAL, &["trigger.theta=1.5".into()]).is_err());
    }
}
