//! Whole-run configuration: every stage's parameters in one serializable
//! struct, loadable from TOML. A pipeline run is a pure function of this
//! config, and each stage's hash is pinned into dataset manifests.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::container::Manifest;
use crate::dispersion::DispersionGrid;
use crate::geo::{pow2_norm_constant, GeneratorParams};
use crate::hash::config_hash;
use crate::metrics::SsimParams;
use crate::nn::TrainConfig;
use crate::sim::SimConfig;
use crate::xai::OutputScore;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XaiConfig {
    /// Background reference images sampled from the training split.
    pub background_count: usize,
    pub background_seed: u64,
    pub score: OutputScore,
}

impl Default for XaiConfig {
    fn default() -> Self {
        XaiConfig {
            background_count: 16,
            background_seed: 1,
            score: OutputScore::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub generator: GeneratorParams,
    pub sim: SimConfig,
    pub dispersion: DispersionGrid,
    pub train: TrainConfig,
    pub ssim: SsimParams,
    pub xai: XaiConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: "out".into(),
            generator: GeneratorParams::default(),
            sim: SimConfig::default(),
            dispersion: DispersionGrid::default(),
            train: TrainConfig::default(),
            ssim: SsimParams::default(),
            xai: XaiConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::Internal(format!("config serialize: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.sim.validate()?;
        self.dispersion.validate()?;
        self.train.validate()?;
        self.ssim.validate()?;
        self.xai.score.validate()?;
        if self.xai.background_count == 0 {
            return Err(Error::InvalidConfig("background_count must be positive".into()));
        }
        // The label window is the central 48 m; receivers must sit above it.
        if self.generator.width_m < 48.0 {
            return Err(Error::InvalidConfig("model width must cover the 48 m label window".into()));
        }
        let span = self.sim.receivers.span_m();
        if span > self.generator.width_m {
            return Err(Error::InvalidConfig(format!(
                "receiver span {span} m exceeds the model width {} m",
                self.generator.width_m
            )));
        }
        Ok(())
    }

    /// Label normalization constant: the next power of two above the largest
    /// Vs the generator can produce. Powers of two divide exactly, keeping
    /// denormalization bit-exact, and the value is known before any model is
    /// drawn, which keeps dataset generation resumable.
    pub fn norm_constant(&self) -> f64 {
        pow2_norm_constant(self.generator.rock_vs_range.1 * (1.0 + self.generator.perturbation_max))
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            gen_hash: config_hash(&self.generator),
            sim_hash: config_hash(&self.sim),
            disp_hash: config_hash(&self.dispersion),
            base_seed: self.seed,
            norm_constant: self.norm_constant(),
        }
    }
}
