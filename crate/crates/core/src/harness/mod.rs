//! Experiment orchestration: model wrapper, evaluation, sweeps and exports.

mod experiment;
mod export;
mod sweep;

pub use experiment::{DataSource, ExperimentSpec, Generator, LoadedData, Trial};
pub use export::{export_density_sequence, ExportPaths};
pub use sweep::{run_sweep, ResultRecord, SweepReport, RESULTS_FILE};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Standardizer, WindowConfig, WindowDataset};
use crate::ebm::{log_likelihood, train_ebm, EbNarxModel, EbmArchitecture, NceConfig};
use crate::error::{Error, Result};
use crate::fcn::{train_fcn, FcnArchitecture, FcnModel};
use crate::inference::{
    density, map_estimate, predict, AscentConfig, DensityGrid, GridSpec, Prediction, DEFAULT_LEVELS,
};
use crate::nn::Activation;
use crate::training::{TrainConfig, TrainingLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ebm,
    Fcn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ebm => "ebm",
            ModelKind::Fcn => "fcn",
        })
    }
}

/// A trained model of either kind, saved as one JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Ebm(EbNarxModel<f64>),
    Fcn(FcnModel<f64>),
}

/// Grid, ascent and credible-level settings for inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceSettings {
    pub grid_points: usize,
    /// Grid padding beyond the training target range, in units of σ_y.
    pub padding: f64,
    /// Explicit `[lo, hi]`, overriding the padded range.
    pub bounds: Option<[f64; 2]>,
    pub ascent: AscentConfig,
    pub levels: Vec<f64>,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        Self {
            grid_points: 2048,
            padding: 3.0,
            bounds: None,
            ascent: AscentConfig::default(),
            levels: DEFAULT_LEVELS.to_vec(),
        }
    }
}

impl InferenceSettings {
    pub fn grid_for(&self, standardizer: &Standardizer<f64>) -> Result<GridSpec<f64>> {
        match self.bounds {
            Some([lo, hi]) => GridSpec::new(lo, hi, self.grid_points),
            None => standardizer.padded_grid(self.padding, self.grid_points),
        }
    }
}

/// Everything needed to train one model besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub model: ModelKind,
    /// Feature and predictor width (EBM) or hidden width (FCN).
    pub width: usize,
    pub fcn_depth: usize,
    pub fcn_activation: Activation,
    pub train: TrainConfig,
    pub nce: NceConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            model: ModelKind::Ebm,
            width: 100,
            fcn_depth: 2,
            fcn_activation: Activation::Tanh,
            train: TrainConfig::default(),
            nce: NceConfig::default(),
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("model width must be positive".into()));
        }
        if self.model == ModelKind::Fcn && self.fcn_depth == 0 {
            return Err(Error::Config("fcn_depth must be positive".into()));
        }
        self.train.validate()?;
        self.nce.validate()
    }

    /// Same settings with the training and noise seeds replaced.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.train.seed = seed;
        s.nce.seed = seed;
        s
    }
}

pub fn train_model(settings: &TrainSettings, data: &WindowDataset<f64>) -> Result<(TrainedModel, TrainingLog)> {
    settings.validate()?;
    match settings.model {
        ModelKind::Ebm => {
            let arch = EbmArchitecture::uniform(settings.width);
            let (m, log) = train_ebm(data, &arch, &settings.nce, &settings.train)?;
            Ok((TrainedModel::Ebm(m), log))
        }
        ModelKind::Fcn => {
            let arch = FcnArchitecture {
                hidden: vec![settings.width; settings.fcn_depth],
                activation: settings.fcn_activation,
            };
            let (m, log) = train_fcn(data, &settings.train, &arch)?;
            Ok((TrainedModel::Fcn(m), log))
        }
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Ebm(_) => ModelKind::Ebm,
            TrainedModel::Fcn(_) => ModelKind::Fcn,
        }
    }

    pub fn standardizer(&self) -> &Standardizer<f64> {
        match self {
            TrainedModel::Ebm(m) => &m.standardizer,
            TrainedModel::Fcn(m) => &m.standardizer,
        }
    }

    pub fn window(&self) -> WindowConfig {
        match self {
            TrainedModel::Ebm(m) => m.window,
            TrainedModel::Fcn(m) => m.window,
        }
    }

    pub fn grid(&self, settings: &InferenceSettings) -> Result<GridSpec<f64>> {
        settings.grid_for(self.standardizer())
    }

    fn check_regressor(&self, x: &[f64]) -> Result<()> {
        let d = self.window().regressor_dim();
        if x.len() != d {
            return Err(Error::Input(format!("regressor has {} values, model expects {d}", x.len())));
        }
        Ok(())
    }

    /// Point prediction: the density maximizer, or the mean for the baseline.
    pub fn map(&self, x: &[f64], settings: &InferenceSettings) -> Result<f64> {
        self.check_regressor(x)?;
        match self {
            TrainedModel::Ebm(m) => map_estimate(m, x, &self.grid(settings)?, &settings.ascent),
            TrainedModel::Fcn(m) => m.predict(x).map(|(mean, _)| mean),
        }
    }

    pub fn density(&self, x: &[f64], settings: &InferenceSettings) -> Result<DensityGrid<f64>> {
        self.check_regressor(x)?;
        let grid = self.grid(settings)?;
        match self {
            TrainedModel::Ebm(m) => density(m, x, &grid),
            TrainedModel::Fcn(m) => density(m, x, &grid),
        }
    }

    pub fn predict(&self, x: &[f64], settings: &InferenceSettings) -> Result<Prediction<f64>> {
        self.check_regressor(x)?;
        let grid = self.grid(settings)?;
        match self {
            TrainedModel::Ebm(m) => predict(m, x, &grid, &settings.ascent, &settings.levels),
            TrainedModel::Fcn(m) => {
                let mut p = predict(m, x, &grid, &settings.ascent, &settings.levels)?;
                p.map = m.predict(x)?.0;
                Ok(p)
            }
        }
    }

    pub fn log_likelihood(&self, data: &WindowDataset<f64>, settings: &InferenceSettings) -> Result<f64> {
        let grid = self.grid(settings)?;
        match self {
            TrainedModel::Ebm(m) => log_likelihood(m, data, &grid),
            TrainedModel::Fcn(m) => log_likelihood(m, data, &grid),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Mean squared error of the point predictions, in raw units.
pub fn evaluate_mse(model: &TrainedModel, data: &WindowDataset<f64>, settings: &InferenceSettings) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("evaluation needs a non-empty dataset".into()));
    }
    if data.window != model.window() {
        return Err(Error::Input(format!(
            "dataset window {:?} differs from the model's {:?}",
            data.window,
            model.window()
        )));
    }
    let mut total = 0.0;
    for (row, &y) in data.x.outer_iter().zip(data.targets.iter()) {
        let x = row.to_vec();
        let e = model.map(&x, settings)? - y;
        total += e * e;
    }
    Ok(total / data.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse: f64,
    pub log_likelihood: f64,
}

pub fn evaluate(model: &TrainedModel, data: &WindowDataset<f64>, settings: &InferenceSettings) -> Result<Evaluation> {
    Ok(Evaluation {
        mse: evaluate_mse(model, data, settings)?,
        log_likelihood: model.log_likelihood(data, settings)?,
    })
}
