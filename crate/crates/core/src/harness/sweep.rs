use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentSpec, Trial};
use super::{evaluate_mse, train_model, ModelKind};
use crate::error::{Error, Result};

/// Append-only NDJSON sink inside the sweep directory.
pub const RESULTS_FILE: &str = "results.ndjson";

/// Outcome of one successful trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub spec_hash: String,
    pub trial: usize,
    pub model: ModelKind,
    pub width: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Validation MSE of the point predictions.
    pub mse: f64,
    /// Mean validation log-likelihood; absent when skipped or not computable.
    pub log_likelihood: Option<f64>,
    pub epochs: usize,
    pub wall_time_s: f64,
    pub model_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub spec_hash: String,
    /// Records of this spec, in trial order.
    pub records: Vec<ResultRecord>,
    /// Index into `records` of the minimum-MSE trial.
    pub best: usize,
}

impl SweepReport {
    pub fn best_record(&self) -> &ResultRecord {
        &self.records[self.best]
    }
}

fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Load {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn append_record(path: &Path, record: &ResultRecord) -> Result<()> {
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))
}

fn run_trial(
    spec: &ExperimentSpec,
    hash: &str,
    trial: &Trial,
    data: &super::LoadedData,
    models_dir: &Path,
) -> Result<ResultRecord> {
    let start = Instant::now();
    let settings = spec.train_settings(trial);
    let (model, log) = train_model(&settings, &data.train)?;
    let mse = evaluate_mse(&model, &data.validation, &spec.inference)?;
    let log_likelihood = if spec.skip_log_likelihood {
        None
    } else {
        match model.log_likelihood(&data.validation, &spec.inference) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("trial {}: log-likelihood unavailable: {e}", trial.index);
                None
            }
        }
    };
    let model_path = models_dir.join(format!("{}-{:03}.json", &hash[..12], trial.index));
    model.save(&model_path)?;
    Ok(ResultRecord {
        spec_hash: hash.to_string(),
        trial: trial.index,
        model: spec.model,
        width: trial.width,
        batch_size: trial.batch_size,
        seed: trial.seed,
        mse,
        log_likelihood,
        epochs: log.epochs.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        model_path,
    })
}

/// Trains and evaluates every trial of `spec`, appending one record per
/// success to `out_dir/results.ndjson`.
///
/// Trials already recorded under the same spec hash are not rerun. A failed
/// trial is logged and skipped; the sweep fails only when no trial succeeds.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: impl AsRef<Path>) -> Result<SweepReport> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let models_dir = out_dir.join("models");
    fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
    let results = out_dir.join(RESULTS_FILE);
    let hash = spec.hash()?;

    let mut existing: Vec<ResultRecord> = read_records(&results)?
        .into_iter()
        .filter(|r| r.spec_hash == hash)
        .collect();
    let trials = spec.trials();
    let pending: Vec<&Trial> = trials
        .iter()
        .filter(|t| !existing.iter().any(|r| r.trial == t.index))
        .collect();

    let mut failures = Vec::new();
    if !pending.is_empty() {
        let data = spec.data.load(spec.window)?;
        for trial in pending {
            log::info!(
                "trial {}/{}: width {} batch {} seed {}",
                trial.index + 1,
                trials.len(),
                trial.width,
                trial.batch_size,
                trial.seed
            );
            match run_trial(spec, &hash, trial, &data, &models_dir) {
                Ok(record) => {
                    append_record(&results, &record)?;
                    existing.push(record);
                }
                Err(e) => {
                    log::warn!("trial {} failed: {e}", trial.index);
                    failures.push(format!("trial {}: {e}", trial.index));
                }
            }
        }
    }

    existing.retain(|r| r.trial < trials.len());
    existing.sort_by_key(|r| r.trial);
    existing.dedup_by_key(|r| r.trial);
    if existing.is_empty() {
        return Err(Error::Training(format!("all trials failed: {}", failures.join("; "))));
    }
    let best = existing
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mse.total_cmp(&b.1.mse))
        .map(|(i, _)| i)
        .expect("non-empty");
    Ok(SweepReport {
        spec_hash: hash,
        records: existing,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{NoiseKind, WindowConfig};
    use crate::harness::{DataSource, Generator, InferenceSettings};
    use crate::training::TrainConfig;

    fn spec() -> ExperimentSpec {
        ExperimentSpec {
            data: DataSource::Simulated {
                generator: Generator::Ar { noise: NoiseKind::Gaussian },
                n_train: 60,
                n_val: 10,
                seed: 4,
            },
            window: WindowConfig { dy: 1, du: 0 },
            model: ModelKind::Fcn,
            widths: vec![3],
            batch_sizes: vec![16, 32],
            seeds: vec![0],
            max_trials: None,
            train: TrainConfig { max_epochs: 4, ..Default::default() },
            nce: Default::default(),
            fcn_depth: 1,
            fcn_activation: crate::nn::Activation::Tanh,
            inference: InferenceSettings { grid_points: 256, ..Default::default() },
            skip_log_likelihood: false,
        }
    }

    #[test]
    fn best_is_minimum_and_reruns_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec();
        let report = run_sweep(&s, dir.path()).unwrap();
        assert_eq!(report.records.len(), 2);
        let min = report.records.iter().map(|r| r.mse).fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_record().mse, min);
        assert!(report.best_record().model_path.exists());

        let again = run_sweep(&s, dir.path()).unwrap();
        assert_eq!(again.records, report.records);
        let lines = fs::read_to_string(dir.path().join(RESULTS_FILE)).unwrap();
        assert_eq!(lines.lines().count(), 2);
    }

    #[test]
    fn all_failures_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec();
        // Larger than the 60-row training set.
        s.batch_sizes = vec![500];
        assert!(matches!(run_sweep(&s, dir.path()), Err(Error::Training(_))));
    }
}
