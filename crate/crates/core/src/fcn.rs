//! Least-squares network baseline with a constant-variance Gaussian
//! predictive density.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Standardizer, WindowConfig, WindowDataset};
use crate::error::{Error, Result};
use crate::inference::{ConditionalEnergy, GridSpec};
use crate::nn::{Activation, AdamConfig, AdamState, LayerSpec, MlpNetwork, NetworkConfig};
use crate::scalar::Scalar;
use crate::training::{EarlyStopping, EpochRecord, Progress, TrainConfig, TrainingLog};

const SHUFFLE_STREAM: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnArchitecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for FcnArchitecture {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100],
            activation: Activation::Tanh,
        }
    }
}

impl FcnArchitecture {
    pub fn network_config(&self, regressor_dim: usize) -> NetworkConfig {
        let mut layers: Vec<LayerSpec> = self
            .hidden
            .iter()
            .map(|&w| LayerSpec::new(w, self.activation))
            .collect();
        layers.push(LayerSpec::new(1, Activation::Identity));
        NetworkConfig::new(regressor_dim, layers)
    }
}

/// Point predictor `f(x)` plus the training-residual variance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FcnModel<T> {
    pub net: MlpNetwork<T>,
    pub standardizer: Standardizer<T>,
    pub window: WindowConfig,
    /// Population variance of the training residuals, raw units.
    pub residual_variance: T,
}

impl<T: Scalar> FcnModel<T> {
    /// Predicted mean and (constant) variance at a raw regressor.
    pub fn predict(&self, x: &[T]) -> Result<(T, T)> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite regressor value {v}")));
        }
        let xs = self.standardizer.apply_x(ArrayView1::from(x))?;
        let out = self.net.evaluate_batch(xs.view().insert_axis(Axis(0)))?;
        Ok((self.standardizer.invert_y(out[[0, 0]]), self.residual_variance))
    }

    /// Predicted means for raw regressor rows.
    pub fn predict_rows(&self, x: ndarray::ArrayView2<T>) -> Result<Array1<T>> {
        let xs = self.standardizer.apply_x_rows(x)?;
        let out = self.net.evaluate_batch(xs.view())?;
        Ok(out.column(0).mapv(|v| self.standardizer.invert_y(v)))
    }

    pub fn default_grid(&self, n_points: usize) -> Result<GridSpec<T>> {
        self.standardizer.default_grid(n_points)
    }
}

pub fn fcn_predict<T: Scalar>(model: &FcnModel<T>, x: &[T]) -> Result<(T, T)> {
    model.predict(x)
}

/// Gaussian log-density up to a constant: `−(y − f(x))² / (2σ²)`.
impl<T: Scalar> ConditionalEnergy<T> for FcnModel<T> {
    type Query = T;

    fn prepare(&self, x: &[T]) -> Result<T> {
        if !(self.residual_variance > T::zero()) {
            return Err(Error::Evaluation(
                "least-squares model has zero residual variance; its density is degenerate".into(),
            ));
        }
        self.predict(x).map(|(m, _)| m)
    }

    fn energies(&self, mean: &T, ys: &[T]) -> Result<Vec<T>> {
        let two_var = self.residual_variance + self.residual_variance;
        Ok(ys.iter().map(|&y| -(y - *mean) * (y - *mean) / two_var).collect())
    }

    fn energy_and_slope(&self, mean: &T, y: T) -> Result<(T, T)> {
        let two_var = self.residual_variance + self.residual_variance;
        Ok((-(y - *mean) * (y - *mean) / two_var, -(y - *mean) / self.residual_variance))
    }
}

fn mse_loss<T: Scalar>(net: &MlpNetwork<T>, x: &Array2<T>, y: &Array1<T>) -> Result<T> {
    let pred = net.evaluate_batch(x.view())?;
    let n = T::of(y.len() as f64);
    Ok(pred
        .column(0)
        .iter()
        .zip(y)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<T>()
        / n)
}

/// Fits the baseline by minibatch Adam on the squared error, with the same
/// schedule and held-out early stopping as the energy model.
pub fn train_fcn<T: Scalar>(
    data: &WindowDataset<T>,
    tc: &TrainConfig,
    arch: &FcnArchitecture,
) -> Result<(FcnModel<T>, TrainingLog)> {
    tc.validate()?;
    let (n_fit, _) = tc.holdout(data.len())?;
    let standardizer = Standardizer::fit_allow_constant_target(data)?;
    let x_std = standardizer.apply_x_rows(data.x.view())?;
    let y_std: Array1<T> = data.targets.mapv(|y| standardizer.apply_y(y));
    let holdout_rows: Vec<usize> = (n_fit..data.len()).collect();
    let x_hold = x_std.select(Axis(0), &holdout_rows);
    let y_hold = y_std.select(Axis(0), &holdout_rows);

    let mut net = crate::nn::init_network(&arch.network_config(data.window.regressor_dim()), tc.seed)?;
    let mut opt = AdamState::new(&net, tc.lr0, AdamConfig::default());
    let mut log = TrainingLog::new(mse_loss(&net, &x_hold, &y_hold)?.as_f64());
    let mut stopping = EarlyStopping::new(tc.patience);
    let mut best = net.clone();
    let mut order: Vec<usize> = (0..n_fit).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ SHUFFLE_STREAM);

    for epoch in 1..=tc.max_epochs {
        let lr = opt.learning_rate.as_f64();
        order.shuffle(&mut rng);
        let mut train_total = 0.0;
        for rows in order.chunks(tc.batch_size) {
            let x = x_std.select(Axis(0), rows);
            let (pred, cache) = net.forward_batch(x.view())?;
            let scale = T::of(2.0 / rows.len() as f64);
            let mut d_out = Array2::zeros(pred.raw_dim());
            let mut loss = T::zero();
            for (k, &r) in rows.iter().enumerate() {
                let err = pred[[k, 0]] - y_std[r];
                loss += err * err;
                d_out[[k, 0]] = err * scale;
            }
            if !loss.is_finite() {
                return Err(Error::Training(format!("epoch {epoch}: non-finite squared error")));
            }
            let (grads, _) = net.backward_batch(&cache, d_out.view())?;
            opt.step(&mut net, &grads)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            train_total += loss.as_f64();
        }
        let val_loss = mse_loss(&net, &x_hold, &y_hold)?.as_f64();
        if !val_loss.is_finite() {
            return Err(Error::Training(format!("epoch {epoch}: non-finite held-out loss")));
        }
        let record = EpochRecord {
            epoch,
            train_loss: train_total / n_fit as f64,
            val_loss,
            lr,
        };
        match stopping.observe(&mut log, record) {
            Progress::Improved => best = net.clone(),
            Progress::Stalled => {}
            Progress::Stop => break,
        }
        opt.decay_learning_rate(tc.lr_decay);
    }

    let mut model = FcnModel {
        net: best,
        standardizer,
        window: data.window,
        residual_variance: T::zero(),
    };
    let pred = model.predict_rows(data.x.view())?;
    let residuals: Vec<T> = data.targets.iter().zip(&pred).map(|(&y, &p)| y - p).collect();
    let n = T::of(residuals.len() as f64);
    let mean = residuals.iter().copied().sum::<T>() / n;
    model.residual_variance = residuals.iter().map(|&r| (r - mean) * (r - mean)).sum::<T>() / n;
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Standardizer;
    use crate::inference::{density, GridSpec};

    fn zero_model() -> FcnModel<f64> {
        let arch = FcnArchitecture { hidden: vec![4], activation: Activation::Tanh };
        let mut net: MlpNetwork<f64> = crate::nn::init_network(&arch.network_config(2), 0).unwrap();
        for l in net.layers_mut() {
            l.weights.fill(0.0);
        }
        FcnModel {
            net,
            standardizer: Standardizer {
                mean_x: vec![0.0, 0.0],
                std_x: vec![1.0, 1.0],
                mean_y: 3.5,
                std_y: 2.0,
                min_y: 0.0,
                max_y: 7.0,
            },
            window: WindowConfig { dy: 1, du: 1 },
            residual_variance: 0.09,
        }
    }

    #[test]
    fn zero_net_predicts_training_mean() {
        let m = zero_model();
        assert_eq!(m.predict(&[1.0, -4.0]).unwrap().0, 3.5);
    }

    #[test]
    fn variance_is_constant() {
        let m = zero_model();
        assert_eq!(m.predict(&[1.0, -4.0]).unwrap().1, m.predict(&[0.0, 9.0]).unwrap().1);
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        let m = zero_model();
        let g = GridSpec::new(-5.0, 12.0, 4096).unwrap();
        let d = density(&m, &[0.0, 0.0], &g).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-3);
        assert!((d.mean() - 3.5).abs() < 1e-6);
        assert!((d.variance() - 0.09).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(zero_model().predict(&[1.0]), Err(Error::Input(_))));
    }
}
