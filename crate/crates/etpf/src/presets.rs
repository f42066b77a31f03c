//! Experiment presets shipped with the binary.

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub source: &'static str,
}

pub const PRESETS: &[ExperimentPreset] = &[
    ExperimentPreset { name: "example1", source: include_str!("../presets/example1.toml") },
    ExperimentPreset { name: "example2", source: include_str!("../presets/example2.toml") },
    ExperimentPreset { name: "example2-body", source: include_str!("../presets/example2-body.toml") },
    ExperimentPreset { name: "linear2d", source: include_str!("../presets/linear2d.toml") },
    ExperimentPreset { name: "heatmap-ex1", source: include_str!("../presets/heatmap-ex1.toml") },
    ExperimentPreset { name: "tradeoff", source: include_str!("../presets/tradeoff.toml") },
];

/// Presets that describe a single closed-loop run.
pub const SIMULATION_PRESETS: &[&str] = &["example1", "example2", "example2-body", "linear2d"];

pub fn find(name: &str) -> Option<&'static ExperimentPreset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn load(name: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let preset = find(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown preset `{name}` (available: {})", names.join(", ")))
    })?;
    ExperimentConfig::parse(preset.source, overrides)
        .map_err(|e| CliError::Config(format!("preset {name}: {}", e.to_string().trim_start_matches("config error: "))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_complete() {
        let mut names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
        for required in ["example1", "example2", "linear2d", "heatmap-ex1", "tradeoff"] {
            assert!(find(required).is_some(), "{required}");
        }
    }

    #[test]
    fn every_preset_builds() {
        for p in PRESETS {
            let cfg = load(p.name, &[]).unwrap();
            assert_eq!(cfg.name, p.name);
            cfg.sim_config().unwrap();
        }
    }
}
