use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::SamplingPolicy;
use crate::care::{seed_transforms, CmuConfig};
use crate::simulator::{NoiseSpec, ProbeConfig, Roi};
use crate::{Error, KernelParams, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Expected Improvement with periodic exploration.
    #[default]
    Ei,
    /// Fixed evenly spaced lattice, no feedback from the GP.
    Uniform,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ei => "ei",
            Strategy::Uniform => "uniform",
        }
    }
}

/// Random registration seeds added after `cmu.seed_transforms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationSeeds {
    pub random_count: usize,
    pub max_translation_mm: f64,
    pub max_rotation_deg: f64,
}

impl Default for RegistrationSeeds {
    fn default() -> Self {
        RegistrationSeeds {
            random_count: 10,
            max_translation_mm: 10.0,
            max_rotation_deg: 15.0,
        }
    }
}

/// Experiment description, read from a single JSON document.
///
/// Relative paths resolve against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phantom: PathBuf,
    /// Jitter (mm, per axis) applied to the phantom's inclusion centres.
    #[serde(default)]
    pub bump_perturbation_mm: f64,
    pub roi: Roi,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default = "NoiseSpec::none")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub kernel: KernelParams,
    #[serde(default)]
    pub policy: SamplingPolicy,
    /// Probes beyond the initial set.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub cmu: CmuConfig,
    #[serde(default)]
    pub registration_seeds: RegistrationSeeds,
    #[serde(default)]
    pub strategy: Strategy,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_budget() -> usize {
    100
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.phantom = base_dir.join(&config.phantom);
        config.output_dir = base_dir.join(&config.output_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.roi.validate()?;
        self.probe.validate()?;
        self.noise.validate()?;
        self.kernel.validate().map_err(as_config)?;
        self.policy.validate().map_err(as_config)?;
        self.cmu.validate().map_err(as_config)?;
        let s = &self.registration_seeds;
        if !(s.max_translation_mm >= 0.0) || !(s.max_rotation_deg >= 0.0) {
            return Err(Error::Config(
                "registration seed ranges must be non-negative".into(),
            ));
        }
        if !(self.bump_perturbation_mm >= 0.0) {
            return Err(Error::Config(
                "bump_perturbation_mm must be non-negative".into(),
            ));
        }
        if !self.phantom.is_file() {
            return Err(Error::Config(format!(
                "phantom file {} does not exist",
                self.phantom.display()
            )));
        }
        Ok(())
    }

    /// Registration configuration with the random seeds appended.
    pub fn cmu_with_seeds<R: Rng + ?Sized>(&self, rng: &mut R) -> CmuConfig {
        let s = &self.registration_seeds;
        let mut cmu = self.cmu.clone();
        let random = seed_transforms(
            s.random_count,
            s.max_translation_mm,
            s.max_rotation_deg,
            rng,
        );
        cmu.seed_transforms.extend(random.into_iter().skip(1));
        cmu
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::Config(m),
        other => other,
    }
}
