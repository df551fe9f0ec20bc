//! Scenario configuration files (TOML).
//!
//! ```toml
//! schema = "ghostks-scenario/1"
//! kind = "broad"            # broad | narrow | supergaussian | tabulated
//! alpha_per_nm = 0.016      # broad only
//! # sigma_nm = 6.0          # narrow only
//! n_signal = 30000
//! # detected_target = 228   # supergaussian/tabulated: choose n_signal for this expected total
//! # n_reference = 350000    # optional override of the family default
//! seed = 7
//!
//! [grid]
//! start_nm = 790.0
//! step_nm = 0.25
//! bins = 120
//!
//! # tabulated only
//! # [table]
//! # wavelengths_nm = [780.0, 830.0]
//! # transmittance = [0.95, 1.0]
//! ```

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::sim::{
    broad_absorber_on, narrow_dip_on, supergaussian_filter_on, tabulated_on, Scenario,
};
use crate::spectra::{TabulatedTransmission, WavelengthGrid};

pub const SCENARIO_SCHEMA: &str = "ghostks-scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Broad,
    Narrow,
    Supergaussian,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_nm: f64,
    pub step_nm: f64,
    pub bins: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            start_nm: 790.0,
            step_nm: 0.25,
            bins: 120,
        }
    }
}

impl GridConfig {
    pub fn build<T: Real>(&self) -> Result<WavelengthGrid<T>> {
        WavelengthGrid::uniform(T::lit(self.start_nm), T::lit(self.step_nm), self.bins)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub wavelengths_nm: Vec<f64>,
    pub transmittance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_per_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_signal: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected_target: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_reference: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableConfig>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    FormatError::Config(msg.into()).into()
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        if cfg.schema != SCENARIO_SCHEMA {
            return Err(FormatError::SchemaVersion {
                expected: SCENARIO_SCHEMA.into(),
                found: cfg.schema,
            }
            .into());
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        super::write_atomic(path.as_ref(), self.to_toml().as_bytes())?;
        Ok(())
    }

    /// Validates every field and builds the scenario.
    pub fn to_scenario<T: Real>(&self) -> Result<Scenario<T>> {
        let grid = self.grid.build::<T>()?;
        let n_signal_or_one = self.n_signal.unwrap_or(1);
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| cfg_err(format!("`{name}` is required for this kind")))
        };
        let reject = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(cfg_err(format!("`{name}` does not apply to this kind"))),
            None => Ok(()),
        };
        let mut scenario = match self.kind {
            ScenarioKind::Broad => {
                reject(self.sigma_nm, "sigma_nm")?;
                broad_absorber_on(
                    &grid,
                    T::lit(need(self.alpha_per_nm, "alpha_per_nm")?),
                    n_signal_or_one,
                    self.seed,
                )?
            }
            ScenarioKind::Narrow => {
                reject(self.alpha_per_nm, "alpha_per_nm")?;
                narrow_dip_on(
                    &grid,
                    T::lit(need(self.sigma_nm, "sigma_nm")?),
                    n_signal_or_one,
                    self.seed,
                )?
            }
            ScenarioKind::Supergaussian => {
                supergaussian_filter_on(&grid, n_signal_or_one, self.seed)?
            }
            ScenarioKind::Tabulated => {
                let t = self
                    .table
                    .as_ref()
                    .ok_or_else(|| cfg_err("`[table]` is required for kind tabulated"))?;
                let table = TabulatedTransmission::new(
                    t.wavelengths_nm.iter().map(|&w| T::lit(w)).collect(),
                    t.transmittance.iter().map(|&v| T::lit(v)).collect(),
                )?;
                tabulated_on(&grid, table, n_signal_or_one, self.seed)?
            }
        };
        if self.table.is_some() && self.kind != ScenarioKind::Tabulated {
            return Err(cfg_err("`[table]` only applies to kind tabulated"));
        }
        let n_signal = match (self.n_signal, self.detected_target) {
            (Some(n), None) => n,
            (None, Some(target)) => scenario.signal_resources_for_detected(target)?,
            (Some(_), Some(_)) => {
                return Err(cfg_err(
                    "give either `n_signal` or `detected_target`, not both",
                ))
            }
            (None, None) => {
                return Err(cfg_err(
                    "one of `n_signal` or `detected_target` is required",
                ))
            }
        };
        scenario = scenario.with_signal_resources(n_signal)?;
        if let Some(nr) = self.n_reference {
            scenario = Scenario::new(
                scenario.reference().clone(),
                scenario.object().clone(),
                nr,
                scenario.n_signal(),
                scenario.seed(),
            )?;
        }
        Ok(scenario)
    }
}
