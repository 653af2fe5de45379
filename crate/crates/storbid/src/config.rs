//! Run configuration: a TOML file (JSON accepted for `.json` paths) with
//! optional `[storage]`, `[scenario]`, `[monitor]`, and `[paths]` sections.
//! Every field has a default; command-line flags override config values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use storbid_core::model::StorageSpec;

pub const DEFAULT_POWER_CAP_MW: f64 = 2.5;
pub const DEFAULT_ENERGY_CAP_MWH: f64 = 10.0;
pub const DEFAULT_EFFICIENCY: f64 = 0.9;
pub const DEFAULT_ALPHA_LEVELS: [f64; 3] = [0.0, 1.0, 2.0];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub storage: StorageSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSection {
    pub power_cap_mw: Option<f64>,
    pub energy_cap_mwh: Option<f64>,
    pub efficiency: Option<f64>,
    pub soc_init_mwh: Option<f64>,
    /// Target state of charge for the final interval. Omitted means "return
    /// to the initial state"; set `soc_terminal_free = true` to drop the
    /// constraint entirely.
    pub soc_terminal_mwh: Option<f64>,
    pub soc_terminal_free: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Price-impact levels to simulate; 0 is the no-market-power benchmark.
    pub alpha_levels: Option<Vec<f64>>,
    /// Scheduling horizon in intervals; the series must tile into it.
    pub period_length: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    pub classify_tol_frac: Option<f64>,
    pub price_slack: Option<f64>,
    /// Audit period length in intervals; defaults to the whole window.
    pub period_length: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub prices: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Loads and validates a config file. Relative input paths are resolved
    /// against the config file's directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .with_context(|| format!("config {} is not valid JSON", path.display()))?
        } else {
            toml::from_str(&text)
                .with_context(|| format!("config {} is not valid TOML", path.display()))?
        };

        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.paths.prices, &mut config.paths.observations]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.exists() {
                bail!("config {}: input path {} does not exist", path.display(), p.display());
            }
        }
        if let Some(dir) = &mut config.paths.output_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    /// Builds the storage spec from overrides, config values, and defaults,
    /// in that precedence order.
    pub fn storage_spec(&self, overrides: &SpecOverrides) -> Result<StorageSpec> {
        let section = &self.storage;
        let power_cap = overrides
            .power_cap_mw
            .or(section.power_cap_mw)
            .unwrap_or(DEFAULT_POWER_CAP_MW);
        let energy_cap = overrides
            .energy_cap_mwh
            .or(section.energy_cap_mwh)
            .unwrap_or(DEFAULT_ENERGY_CAP_MWH);
        let efficiency = overrides
            .efficiency
            .or(section.efficiency)
            .unwrap_or(DEFAULT_EFFICIENCY);
        let soc_init = overrides
            .soc_init_mwh
            .or(section.soc_init_mwh)
            .unwrap_or(energy_cap / 2.0);
        let terminal_free =
            overrides.soc_terminal_free || section.soc_terminal_free.unwrap_or(false);
        let soc_terminal = if terminal_free {
            None
        } else {
            Some(
                overrides
                    .soc_terminal_mwh
                    .or(section.soc_terminal_mwh)
                    .unwrap_or(soc_init),
            )
        };
        StorageSpec::new(power_cap, energy_cap, efficiency, soc_init, soc_terminal)
            .context("invalid storage parameters")
    }
}

/// Storage fields collected from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct SpecOverrides {
    pub power_cap_mw: Option<f64>,
    pub energy_cap_mwh: Option<f64>,
    pub efficiency: Option<f64>,
    pub soc_init_mwh: Option<f64>,
    pub soc_terminal_mwh: Option<f64>,
    pub soc_terminal_free: bool,
}
