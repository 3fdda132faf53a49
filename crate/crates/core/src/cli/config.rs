//! The run configuration file: one TOML document with a table per stage.
//! Every field has a default, so an empty file is valid and
//! `--dump-config` prints the complete effective settings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::DEFAULT_ALPHA;
use crate::error::{Error, Result};
use crate::features::{DEFAULT_POINTS, DEFAULT_PROBE};
use crate::net::ModelConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoxelizeSection {
    /// Structures with more usable residues than this are subsampled.
    pub sample_threshold: usize,
    /// Residues kept from a subsampled structure.
    pub sample_cap: usize,
    pub probe: f64,
    pub sasa_points: usize,
    pub include_hetatm: bool,
}

impl Default for VoxelizeSection {
    fn default() -> Self {
        VoxelizeSection {
            sample_threshold: 200,
            sample_cap: 100,
            probe: DEFAULT_PROBE,
            sasa_points: DEFAULT_POINTS,
            include_hetatm: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub alpha: f64,
    pub bin_width: f64,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            alpha: DEFAULT_ALPHA,
            bin_width: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives residue sampling, weight initialisation and shuffling.
    pub seed: u64,
    pub voxelize: VoxelizeSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub analyze: AnalyzeSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks cross-field constraints after flags have been applied.
    pub fn validate(&self) -> Result<()> {
        let v = &self.voxelize;
        if v.sample_cap > v.sample_threshold {
            return Err(Error::Invalid(format!(
                "sample_cap {} exceeds sample_threshold {}",
                v.sample_cap, v.sample_threshold
            )));
        }
        if !(v.probe >= 0.0 && v.probe.is_finite()) || v.sasa_points == 0 {
            return Err(Error::Invalid("probe must be non-negative and sasa_points positive".into()));
        }
        let a = &self.analyze;
        if !(a.alpha > 0.0 && a.alpha < 1.0) || !(a.bin_width > 0.0 && a.bin_width <= 1.0) {
            return Err(Error::Invalid("alpha must lie in (0, 1) and bin_width in (0, 1]".into()));
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical TOML form.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Training settings with the run seed filled in.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}
