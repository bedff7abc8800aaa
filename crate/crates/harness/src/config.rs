//! JSON experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use thinfilm_core::dynamics::EvolutionConfig;
use thinfilm_core::steady::CanonicalOptions;
use thinfilm_core::{Exponent, ModelParams, RadialProfile};

/// Version stamped into every JSON artifact and required in every config.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    /// Grid intervals across the support of the canonical profile.
    pub support_nodes: usize,
    pub total_nodes: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { support_nodes: 256, total_nodes: 512 }
    }
}

impl GridSettings {
    pub fn canonical_options(&self) -> CanonicalOptions {
        CanonicalOptions::with_nodes(self.support_nodes, self.total_nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSettings {
    pub t_max: f64,
    /// Node cap for expanding regrids; defaults to the initial node count, so
    /// spreading runs coarsen instead of growing.
    #[serde(default)]
    pub max_nodes: Option<usize>,
    /// Full integrator settings; when absent they are derived from the
    /// intrinsic time of each initial profile.
    #[serde(default)]
    pub integrator: Option<EvolutionConfig>,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self { t_max: 1.0, max_nodes: None, integrator: None }
    }
}

impl EvolutionSettings {
    pub fn resolve(&self, u0: &RadialProfile, m: f64) -> EvolutionConfig {
        match self.integrator {
            Some(c) => c,
            None => EvolutionConfig {
                max_nodes: self.max_nodes.unwrap_or(u0.grid().n()),
                ..EvolutionConfig::scaled_to(u0, m, self.t_max)
            },
        }
    }
}

fn unit() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("thinfilm-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub d: u32,
    pub m: Exponent,
    #[serde(default = "unit")]
    pub mass: f64,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub evolution: EvolutionSettings,
    /// Dilation factors of the steady state used as initial data.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(d: u32, m: Exponent) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            d,
            m,
            mass: 1.0,
            grid: GridSettings::default(),
            evolution: EvolutionSettings::default(),
            lambdas: Vec::new(),
            output_dir: default_output(),
            seed: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.d, self.m)?)
    }

    /// Checks everything except the output directory.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version);
        }
        self.params()?;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            bail!("mass must be positive and finite, got {}", self.mass);
        }
        if self.grid.support_nodes < 8 || self.grid.total_nodes < self.grid.support_nodes + 2 {
            bail!("grid needs at least 8 support nodes and two nodes beyond the support");
        }
        if !(self.evolution.t_max > 0.0 && self.evolution.t_max.is_finite()) {
            bail!("t_max must be positive and finite");
        }
        if let Some(c) = &self.evolution.integrator {
            c.validate()?;
        }
        for (i, &l) in self.lambdas.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                bail!("dilation factors must be positive, got {l}");
            }
            if self.lambdas[..i].contains(&l) {
                bail!("dilation factor {l} listed twice");
            }
        }
        Ok(())
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output(&self) -> Result<&Path> {
        let dir = self.output_dir.as_path();
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let probe = dir.join(".write-probe");
        fs::write(&probe, b"").with_context(|| format!("{} is not writable", dir.display()))?;
        fs::remove_file(&probe)?;
        Ok(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::new(3, Exponent::rational(2, 1))
    }

    #[test]
    fn round_trip() {
        let mut c = base();
        c.lambdas = vec![0.8, 1.25];
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"schema_version\":1"));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
    }

    #[test]
    fn defaults_fill_in() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"schema_version": 1, "d": 3, "m": "5/3"}"#).unwrap();
        assert_eq!(c.mass, 1.0);
        assert_eq!(c.grid, GridSettings::default());
        assert!(c.params().unwrap().is_mass_critical());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"schema_version": 1, "d": 3, "m": 2, "typo": 0}"#).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = base();
        assert!(c.validate().is_ok());
        c.lambdas = vec![0.8, 0.8];
        assert!(c.validate().is_err());
        c.lambdas = vec![-1.0];
        assert!(c.validate().is_err());
        let mut c = base();
        c.schema_version = 2;
        assert!(c.validate().is_err());
        let mut c = base();
        c.d = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn output_must_be_writable() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = base();
        c.output_dir = dir.path().join("nested/out");
        assert!(c.prepare_output().is_ok());
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        c.output_dir = file.join("sub");
        assert!(c.prepare_output().is_err());
    }
}
