use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::NceConfig;
use crate::data::{Standardizer, WindowConfig};
use crate::error::{Error, Result};
use crate::inference::{ConditionalEnergy, GridSpec};
use crate::nn::{Activation, Gradients, LayerSpec, MlpNetwork, NetworkConfig};
use crate::scalar::Scalar;

/// Widths of the feature and predictor nets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EbmArchitecture {
    pub feature_dim: usize,
    pub hidden_dim: usize,
}

impl Default for EbmArchitecture {
    fn default() -> Self {
        Self {
            feature_dim: 100,
            hidden_dim: 100,
        }
    }
}

impl EbmArchitecture {
    pub fn uniform(width: usize) -> Self {
        Self {
            feature_dim: width,
            hidden_dim: width,
        }
    }

    /// Two relu layers from the regressor to the feature vector.
    pub fn feature_config(&self, regressor_dim: usize) -> NetworkConfig {
        NetworkConfig::new(
            regressor_dim,
            vec![
                LayerSpec::new(self.feature_dim, Activation::Relu),
                LayerSpec::new(self.feature_dim, Activation::Relu),
            ],
        )
    }

    /// Four tanh layers (linear output) with residual skips over pairs of layers.
    pub fn predictor_config(&self) -> NetworkConfig {
        let h = self.hidden_dim;
        NetworkConfig::new(
            self.feature_dim + 1,
            vec![
                LayerSpec::new(h, Activation::Tanh),
                LayerSpec::new(h, Activation::Tanh),
                LayerSpec::new(h, Activation::Tanh),
                LayerSpec::new(1, Activation::Identity),
            ],
        )
        .with_skips(vec![(0, 2), (1, 3)])
    }
}

/// Energy-based NARX model: `g(y, x) = predictor([feature(std(x)), std(y)])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EbNarxModel<T> {
    pub feature_net: MlpNetwork<T>,
    pub predictor_net: MlpNetwork<T>,
    pub standardizer: Standardizer<T>,
    pub window: WindowConfig,
    pub nce: NceConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbmGradients<T> {
    pub feature: Gradients<T>,
    pub predictor: Gradients<T>,
}

impl<T: Scalar> EbmGradients<T> {
    pub fn to_flat(&self) -> Vec<T> {
        let mut v = self.feature.to_flat();
        v.extend(self.predictor.to_flat());
        v
    }
}

impl<T: Scalar> EbNarxModel<T> {
    pub fn new(
        arch: &EbmArchitecture,
        standardizer: Standardizer<T>,
        window: WindowConfig,
        nce: NceConfig,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feature_net = MlpNetwork::init_with_rng(&arch.feature_config(window.regressor_dim()), &mut rng)?;
        let predictor_net = MlpNetwork::init_with_rng(&arch.predictor_config(), &mut rng)?;
        Self::from_parts(feature_net, predictor_net, standardizer, window, nce)
    }

    pub fn from_parts(
        feature_net: MlpNetwork<T>,
        predictor_net: MlpNetwork<T>,
        standardizer: Standardizer<T>,
        window: WindowConfig,
        nce: NceConfig,
    ) -> Result<Self> {
        window.validate()?;
        let d = window.regressor_dim();
        if feature_net.input_dim() != d || standardizer.dim() != d {
            return Err(Error::Config(format!(
                "feature net takes {} inputs and standardizer {} columns, window needs {d}",
                feature_net.input_dim(),
                standardizer.dim()
            )));
        }
        if predictor_net.input_dim() != feature_net.output_dim() + 1 {
            return Err(Error::Config(format!(
                "predictor net takes {} inputs, expected feature width {} + 1",
                predictor_net.input_dim(),
                feature_net.output_dim()
            )));
        }
        if predictor_net.output_dim() != 1 {
            return Err(Error::Config("predictor net must have a scalar output".into()));
        }
        Ok(Self {
            feature_net,
            predictor_net,
            standardizer,
            window,
            nce,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_net.output_dim()
    }

    /// Feature vectors for standardized regressor rows.
    pub fn features(&self, x_std: ArrayView2<T>) -> Result<Array2<T>> {
        self.feature_net.evaluate_batch(x_std)
    }

    /// Predictor input rows: row `i * C + c` is `[features_i, candidates[i, c]]`.
    pub(crate) fn predictor_input(features: ArrayView2<T>, candidates: ArrayView2<T>) -> Array2<T> {
        let (b, f) = features.dim();
        let c = candidates.ncols();
        let mut out = Array2::zeros((b * c, f + 1));
        for i in 0..b {
            let feat = features.row(i);
            for j in 0..c {
                let mut row = out.row_mut(i * c + j);
                row.slice_mut(s![..f]).assign(&feat);
                row[f] = candidates[[i, j]];
            }
        }
        out
    }

    /// Energies at standardized outputs for one feature vector.
    pub fn energies_std(&self, features: ArrayView1<T>, ys_std: &[T]) -> Result<Vec<T>> {
        let cand = ArrayView2::from_shape((1, ys_std.len()), ys_std)
            .map_err(|e| Error::Input(e.to_string()))?;
        let inp = Self::predictor_input(features.insert_axis(Axis(0)), cand);
        let out = self.predictor_net.evaluate_batch(inp.view())?;
        Ok(out.column(0).to_vec())
    }

    /// `g` and `∂g/∂y_std` at one standardized output.
    pub fn energy_and_slope_std(&self, features: ArrayView1<T>, y_std: T) -> Result<(T, T)> {
        let mut inp: Vec<T> = features.to_vec();
        inp.push(y_std);
        let (out, cache) = self.predictor_net.forward(&inp)?;
        let (_, input_grad) = self.predictor_net.backward(&cache, &[T::one()])?;
        Ok((out[0], input_grad[inp.len() - 1]))
    }

    fn standardized_features(&self, x: &[T]) -> Result<Array1<T>> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite regressor value {v}")));
        }
        let xs = self.standardizer.apply_x(ArrayView1::from(x))?;
        let f = self.features(xs.view().insert_axis(Axis(0)))?;
        Ok(f.row(0).to_owned())
    }

    /// `g(y, x)` at a raw regressor and raw output.
    pub fn energy(&self, x: &[T], y: T) -> Result<T> {
        if !y.is_finite() {
            return Err(Error::Input(format!("non-finite output value {y}")));
        }
        let f = self.standardized_features(x)?;
        Ok(self.energies_std(f.view(), &[self.standardizer.apply_y(y)])?[0])
    }

    /// `[min_y − 3σ_y, max_y + 3σ_y]` from the training targets.
    pub fn default_grid(&self, n_points: usize) -> Result<GridSpec<T>> {
        self.standardizer.default_grid(n_points)
    }
}

impl<T: Scalar> ConditionalEnergy<T> for EbNarxModel<T> {
    type Query = Array1<T>;

    fn prepare(&self, x: &[T]) -> Result<Array1<T>> {
        self.standardized_features(x)
    }

    fn energies(&self, features: &Array1<T>, ys: &[T]) -> Result<Vec<T>> {
        let ys_std: Vec<T> = ys.iter().map(|&y| self.standardizer.apply_y(y)).collect();
        self.energies_std(features.view(), &ys_std)
    }

    fn energy_and_slope(&self, features: &Array1<T>, y: T) -> Result<(T, T)> {
        let (g, slope_std) = self.energy_and_slope_std(features.view(), self.standardizer.apply_y(y))?;
        Ok((g, slope_std / self.standardizer.std_y))
    }
}
