//! Workbench configuration file.
//!
//! One TOML file drives every subcommand; each command reads the sections it
//! needs and rejects configs with unknown keys. All random state derives
//! from `master_seed` through fixed streams (scenario 0, measurement noise
//! 1, training 3, sweep SNR point i at 16+i), so a config plus a seed fully
//! determines every output. Seed fields inside sections are overwritten by
//! that derivation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use onebit_mimo::channel::{AoaGrid, ArrayGeometry, GainModel, ScenarioConfig};
use onebit_mimo::estimator::TrainingConfig;
use onebit_mimo::evaluation::EstimatorKind;
use onebit_mimo::quantize::NoiseMode;
use onebit_mimo::seed::derive_seed;
use onebit_mimo::{Error, Result};

/// Seed streams hanging off `master_seed`.
pub const STREAM_SCENARIO: u64 = 0;
pub const STREAM_NOISE: u64 = 1;
pub const STREAM_TRAINING: u64 = 3;
pub const STREAM_SNR_POINT_BASE: u64 = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub master_seed: u64,
    pub output: OutputSection,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub pilot: Option<PilotSection>,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub training: Option<TrainingConfig>,
    #[serde(default)]
    pub analysis: Option<AnalysisSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub eval: Option<EvalSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub num_antennas: usize,
    pub num_users: usize,
    #[serde(default = "one")]
    pub num_paths: usize,
    #[serde(default = "half")]
    pub element_spacing: f64,
    pub aoa_grid: AoaGrid,
    pub gain_model: GainModel,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

impl ScenarioSection {
    pub fn to_config(&self, master_seed: u64) -> Result<ScenarioConfig> {
        Ok(ScenarioConfig {
            geometry: ArrayGeometry::new(self.num_antennas, self.element_spacing)?,
            num_users: self.num_users,
            num_paths: self.num_paths,
            aoa_grid: self.aoa_grid.clone(),
            gain_model: self.gain_model,
            seed: derive_seed(master_seed, STREAM_SCENARIO),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSection {
    pub length: usize,
    #[serde(default = "unit_power")]
    pub power: f64,
}

fn unit_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub mode: NoiseMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Pilot lengths the distinguishability scan runs at.
    pub pilot_lengths: Vec<usize>,
    #[serde(default = "default_pair_cap")]
    pub max_reported_pairs: usize,
}

fn default_pair_cap() -> usize {
    onebit_mimo::pilot::DEFAULT_MAX_REPORTED_PAIRS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub antenna_counts: Vec<usize>,
    pub pilot_lengths: Vec<usize>,
    pub snr_points: Vec<NoiseMode>,
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub rho_db: f64,
    /// Channel dataset manifest to sweep over instead of the scenario.
    #[serde(default)]
    pub channels: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub rho_db: f64,
}

impl WorkbenchConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: WorkbenchConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn scenario(&self) -> Result<&ScenarioSection> {
        self.scenario
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a [scenario] section".into()))
    }

    pub fn pilot(&self) -> Result<&PilotSection> {
        self.pilot
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a [pilot] section".into()))
    }

    pub fn noise_mode(&self) -> NoiseMode {
        self.noise
            .as_ref()
            .map(|n| n.mode)
            .unwrap_or(NoiseMode::Noiseless)
    }

    /// Training config with its seed pinned to the master seed.
    pub fn training(&self) -> TrainingConfig {
        let mut t = self.training.clone().unwrap_or_default();
        t.seed = derive_seed(self.master_seed, STREAM_TRAINING);
        t
    }

    pub fn sweep(&self) -> Result<&SweepSection> {
        self.sweep
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a [sweep] section".into()))
    }
}
