//! Settings and bookkeeping shared by the EBM and least-squares trainers.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minibatch Adam schedule with held-out early stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    /// Trailing fraction of the training rows held out for early stopping.
    pub val_fraction: f64,
    /// Seeds parameter initialization and minibatch order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 300,
            patience: 20,
            lr0: 1e-3,
            lr_decay: 0.99,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config(
                "batch_size, max_epochs and patience must be positive".into(),
            ));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!("lr_decay {} must lie in (0, 1]", self.lr_decay)));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "val_fraction {} must lie in (0, 1)",
                self.val_fraction
            )));
        }
        Ok(())
    }

    /// Splits `n` rows into (fit, held-out) counts.
    pub(crate) fn holdout(&self, n: usize) -> Result<(usize, usize)> {
        if n < self.batch_size {
            return Err(Error::Input(format!(
                "dataset has {n} rows, fewer than batch size {}",
                self.batch_size
            )));
        }
        let held = ((n as f64 * self.val_fraction).round() as usize).max(1);
        if n < held + 2 {
            return Err(Error::Input(format!("dataset of {n} rows is too small to hold out {held}")));
        }
        Ok((n - held, held))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Held-out loss of the freshly initialized model.
    pub initial_val_loss: f64,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainingLog {
    pub(crate) fn new(initial_val_loss: f64) -> Self {
        Self {
            epochs: Vec::new(),
            initial_val_loss,
            best_epoch: 0,
            best_val_loss: initial_val_loss,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,lr\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.lr);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Tracks the best held-out loss. The initial model counts as epoch 0.
pub(crate) struct EarlyStopping {
    patience: usize,
    since_best: usize,
}

pub(crate) enum Progress {
    Improved,
    Stalled,
    Stop,
}

impl EarlyStopping {
    pub(crate) fn new(patience: usize) -> Self {
        Self {
            patience,
            since_best: 0,
        }
    }

    pub(crate) fn observe(&mut self, log: &mut TrainingLog, record: EpochRecord) -> Progress {
        let improved = record.val_loss < log.best_val_loss;
        if improved {
            log.best_val_loss = record.val_loss;
            log.best_epoch = record.epoch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        log.epochs.push(record);
        if improved {
            Progress::Improved
        } else if self.since_best >= self.patience {
            Progress::Stop
        } else {
            Progress::Stalled
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_zero_patience() {
        let tc = TrainConfig {
            patience: 0,
            ..Default::default()
        };
        assert!(tc.validate().is_err());
    }

    #[test]
    fn holdout_counts() {
        let tc = TrainConfig::default();
        assert_eq!(tc.holdout(1000).unwrap(), (900, 100));
        assert!(tc.holdout(10).is_err());
    }

    #[test]
    fn stops_after_patience() {
        let mut log = TrainingLog::new(1.0);
        let mut es = EarlyStopping::new(2);
        let rec = |epoch, val_loss| EpochRecord { epoch, train_loss: 0.0, val_loss, lr: 0.0 };
        assert!(matches!(es.observe(&mut log, rec(1, 0.5)), Progress::Improved));
        assert!(matches!(es.observe(&mut log, rec(2, 0.6)), Progress::Stalled));
        assert!(matches!(es.observe(&mut log, rec(3, 0.7)), Progress::Stop));
        assert_eq!(log.best_epoch, 1);
        assert!(log.to_csv_string().starts_with("epoch,train_loss,val_loss,lr\n1,0,0.5,0\n"));
    }
}
