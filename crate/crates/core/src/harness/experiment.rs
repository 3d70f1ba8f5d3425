use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{InferenceSettings, ModelKind, TrainSettings};
use crate::data::{
    load_csv, make_windows, simulate_ar, simulate_arx, simulate_chen, IoSeries, NoiseKind, WindowConfig,
    WindowDataset,
};
use crate::ebm::NceConfig;
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::training::TrainConfig;

/// Simulated systems available to experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Ar { noise: NoiseKind },
    Arx,
    Chen { sigma_v: f64, sigma_w: f64 },
}

impl Generator {
    pub fn simulate(&self, len: usize, seed: u64) -> Result<IoSeries<f64>> {
        match *self {
            Generator::Ar { noise } => simulate_ar(noise, len, seed),
            Generator::Arx => simulate_arx(len, seed),
            Generator::Chen { sigma_v, sigma_w } => simulate_chen(len, sigma_v, sigma_w, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// `n_train` training and `n_val` validation rows from one simulated run.
    Simulated {
        generator: Generator,
        n_train: usize,
        n_val: usize,
        seed: u64,
    },
    /// A `u,y` CSV file split chronologically; the first `train_fraction` of
    /// samples provides the training targets.
    Csv { path: PathBuf, train_fraction: f64 },
}

/// Windowed training and validation sets.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: WindowDataset<f64>,
    pub validation: WindowDataset<f64>,
}

impl DataSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            DataSource::Simulated { n_train, n_val, .. } => {
                if *n_train == 0 || *n_val == 0 {
                    return Err(Error::Config("n_train and n_val must be positive".into()));
                }
            }
            DataSource::Csv { train_fraction, .. } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "train_fraction {train_fraction} must lie in (0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(&self, window: WindowConfig) -> Result<LoadedData> {
        self.validate()?;
        window.validate()?;
        let (series, split_sample) = match self {
            DataSource::Simulated {
                generator,
                n_train,
                n_val,
                seed,
            } => {
                let len = n_train + n_val + window.lag();
                (generator.simulate(len, *seed)?, n_train + window.lag())
            }
            DataSource::Csv { path, train_fraction } => {
                let series = load_csv::<f64>(path)?;
                let k = (series.len() as f64 * train_fraction).round() as usize;
                (series, k)
            }
        };
        split_windows(&series, window, split_sample)
    }
}

/// Windows the whole series and splits so that training targets are the
/// samples before `split_sample`; validation regressors may reach back
/// into the training samples.
pub(crate) fn split_windows(series: &IoSeries<f64>, window: WindowConfig, split_sample: usize) -> Result<LoadedData> {
    let all = make_windows(series, window)?;
    if split_sample <= all.t0 {
        return Err(Error::Input(format!(
            "split at sample {split_sample} leaves no training rows with lag {}",
            window.lag()
        )));
    }
    let (train, validation) = all.split_at(split_sample - all.t0)?;
    Ok(LoadedData { train, validation })
}

/// One experiment: data, model family and the hyperparameter grid to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub data: DataSource,
    pub window: WindowConfig,
    pub model: ModelKind,
    pub widths: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Caps the number of trials taken from the grid, in order.
    #[serde(default)]
    pub max_trials: Option<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub nce: NceConfig,
    #[serde(default = "default_fcn_depth")]
    pub fcn_depth: usize,
    #[serde(default = "default_activation")]
    pub fcn_activation: Activation,
    #[serde(default)]
    pub inference: InferenceSettings,
    /// Skips the log-likelihood metric (it needs a full grid per row).
    #[serde(default)]
    pub skip_log_likelihood: bool,
}

fn default_fcn_depth() -> usize {
    2
}

fn default_activation() -> Activation {
    Activation::Tanh
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub width: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.window.validate()?;
        if self.widths.is_empty() || self.batch_sizes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("widths, batch_sizes and seeds must be non-empty".into()));
        }
        if self.max_trials == Some(0) {
            return Err(Error::Config("max_trials must be at least 1".into()));
        }
        if self.widths.contains(&0) || self.batch_sizes.contains(&0) {
            return Err(Error::Config("widths and batch sizes must be positive".into()));
        }
        self.train.validate()?;
        self.nce.validate()
    }

    /// Widths × batch sizes × seeds, seeds varying fastest.
    pub fn trials(&self) -> Vec<Trial> {
        let mut out = Vec::new();
        for &width in &self.widths {
            for &batch_size in &self.batch_sizes {
                for &seed in &self.seeds {
                    out.push(Trial {
                        index: out.len(),
                        width,
                        batch_size,
                        seed,
                    });
                }
            }
        }
        if let Some(cap) = self.max_trials {
            out.truncate(cap);
        }
        out
    }

    pub fn train_settings(&self, trial: &Trial) -> TrainSettings {
        let mut train = self.train.clone();
        train.batch_size = trial.batch_size;
        TrainSettings {
            model: self.model,
            width: trial.width,
            fcn_depth: self.fcn_depth,
            fcn_activation: self.fcn_activation,
            train,
            nce: self.nce.clone(),
        }
        .with_seed(trial.seed)
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&json)))
    }
}
