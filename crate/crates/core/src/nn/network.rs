use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, LayerGradient};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(out_dim: usize, activation: Activation) -> Self {
        Self {
            out_dim,
            activation,
        }
    }
}

/// Layer sizes, activations and additive skips of a network.
///
/// A skip `(a, b)` adds the output of layer `a` to the input of layer `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub skips: Vec<(usize, usize)>,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>) -> Self {
        Self {
            input_dim,
            layers,
            skips: Vec::new(),
        }
    }

    pub fn with_skips(mut self, skips: Vec<(usize, usize)>) -> Self {
        self.skips = skips;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        if let Some(i) = self.layers.iter().position(|l| l.out_dim == 0) {
            return Err(Error::Config(format!("layer {i} has zero width")));
        }
        let in_dim = |b: usize| {
            if b == 0 {
                self.input_dim
            } else {
                self.layers[b - 1].out_dim
            }
        };
        validate_skips(&self.skips, self.layers.len(), |a| self.layers[a].out_dim, in_dim)
    }
}

fn validate_skips(
    skips: &[(usize, usize)],
    n_layers: usize,
    out_dim: impl Fn(usize) -> usize,
    in_dim: impl Fn(usize) -> usize,
) -> Result<()> {
    for &(a, b) in skips {
        if a >= b || b >= n_layers {
            return Err(Error::Config(format!(
                "skip ({a}, {b}) must satisfy from < to < {n_layers}"
            )));
        }
        if out_dim(a) != in_dim(b) {
            return Err(Error::Config(format!(
                "skip ({a}, {b}) joins width {} to input width {}",
                out_dim(a),
                in_dim(b)
            )));
        }
    }
    Ok(())
}

/// Dense feed-forward network with optional additive skip connections.
#[derive(Debug, PartialEq)]
pub struct MlpNetwork<T> {
    layers: Vec<DenseLayer<T>>,
    skips: Vec<(usize, usize)>,
    id: u64,
    generation: u64,
}

impl<T: Clone> Clone for MlpNetwork<T> {
    /// Clones get a new identity so caches from the original are rejected.
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            skips: self.skips.clone(),
            id: fresh_id(),
            generation: 0,
        }
    }
}

/// Builds a network with Glorot-uniform weights and zero biases.
pub fn init_network<T: Scalar>(config: &NetworkConfig, seed: u64) -> Result<MlpNetwork<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MlpNetwork::init_with_rng(config, &mut rng)
}

impl<T: Scalar> MlpNetwork<T> {
    pub fn init_with_rng<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.layers.len());
        let mut fan_in = config.input_dim;
        for spec in &config.layers {
            let bound = (6.0 / (fan_in + spec.out_dim) as f64).sqrt();
            let weights = Array2::from_shape_simple_fn((spec.out_dim, fan_in), || {
                T::of(rng.random_range(-bound..=bound))
            });
            layers.push(DenseLayer {
                weights,
                biases: Array1::zeros(spec.out_dim),
                activation: spec.activation,
            });
            fan_in = spec.out_dim;
        }
        Ok(Self {
            layers,
            skips: config.skips.clone(),
            id: fresh_id(),
            generation: 0,
        })
    }

    pub fn from_layers(layers: Vec<DenseLayer<T>>, skips: Vec<(usize, usize)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Config(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        validate_skips(&skips, layers.len(), |a| layers[a].out_dim(), |b| layers[b].in_dim())?;
        Ok(Self {
            layers,
            skips,
            id: fresh_id(),
            generation: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn skips(&self) -> &[(usize, usize)] {
        &self.skips
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Mutable access to the layers. Invalidates outstanding forward caches.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        self.generation += 1;
        &mut self.layers
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.layers.iter().position(|l| !l.is_finite()) {
            Some(i) => Err(Error::Training(format!(
                "layer {i} parameters became non-finite"
            ))),
            None => Ok(()),
        }
    }

    fn check_input(&self, input: &ArrayView2<T>) -> Result<()> {
        if input.ncols() != self.input_dim() {
            return Err(Error::Input(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.ncols()
            )));
        }
        if let Some(pos) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite network input at row {}, column {}",
                pos / input.ncols().max(1),
                pos % input.ncols().max(1)
            )));
        }
        Ok(())
    }

    fn layer_input(&self, i: usize, outputs: &[Array2<T>], input: &ArrayView2<T>) -> Array2<T> {
        if i == 0 {
            return input.to_owned();
        }
        let mut v = outputs[i - 1].clone();
        for &(a, b) in &self.skips {
            if b == i {
                v += &outputs[a];
            }
        }
        v
    }

    fn apply_layer(layer: &DenseLayer<T>, input: &Array2<T>) -> Array2<T> {
        let mut z = input.dot(&layer.weights.t());
        z += &layer.biases;
        let act = layer.activation;
        if act != Activation::Identity {
            z.mapv_inplace(|v| act.apply(v));
        }
        z
    }

    /// Evaluates a row batch, keeping what [`backward_batch`](Self::backward_batch) needs.
    pub fn forward_batch(&self, input: ArrayView2<T>) -> Result<(Array2<T>, ForwardCache<T>)> {
        self.check_input(&input)?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut outputs: Vec<Array2<T>> = Vec::with_capacity(n);
        for (i, layer) in self.layers.iter().enumerate() {
            let x = self.layer_input(i, &outputs, &input);
            outputs.push(Self::apply_layer(layer, &x));
            inputs.push(x);
        }
        let out = outputs[n - 1].clone();
        Ok((
            out,
            ForwardCache {
                network_id: self.id,
                generation: self.generation,
                inputs,
                outputs,
            },
        ))
    }

    /// Evaluates a row batch without retaining intermediates.
    pub fn evaluate_batch(&self, input: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&input)?;
        let mut outputs: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = self.layer_input(i, &outputs, &input);
            outputs.push(Self::apply_layer(layer, &x));
        }
        Ok(outputs.pop().expect("at least one layer"))
    }

    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        let view = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::Input(e.to_string()))?;
        let (out, cache) = self.forward_batch(view)?;
        Ok((out.row(0).to_vec(), cache))
    }

    /// Reverse-mode pass: gradients of `sum(output * output_gradient)` with
    /// respect to all parameters and to the input rows.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache<T>,
        output_gradient: ArrayView2<T>,
    ) -> Result<(Gradients<T>, Array2<T>)> {
        if cache.network_id != self.id || cache.generation != self.generation {
            return Err(Error::Usage(
                "forward cache does not belong to this network state".into(),
            ));
        }
        let n = self.layers.len();
        if cache.outputs.len() != n || cache.outputs[n - 1].dim() != output_gradient.dim() {
            return Err(Error::Usage(format!(
                "output gradient shape {:?} does not match cached output {:?}",
                output_gradient.dim(),
                cache.outputs.last().map(|o| o.dim())
            )));
        }

        let mut grad_outputs: Vec<Option<Array2<T>>> = vec![None; n];
        grad_outputs[n - 1] = Some(output_gradient.to_owned());
        let mut layer_grads = Vec::with_capacity(n);
        let mut input_grad = None;

        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let mut delta = grad_outputs[i]
                .take()
                .unwrap_or_else(|| Array2::zeros(cache.outputs[i].raw_dim()));
            if layer.activation != Activation::Identity {
                let act = layer.activation;
                ndarray::Zip::from(&mut delta)
                    .and(&cache.outputs[i])
                    .for_each(|d, &a| *d = *d * act.derivative_at_output(a));
            }
            let weights = delta.t().dot(&cache.inputs[i]);
            let biases = delta.sum_axis(Axis(0));
            layer_grads.push(LayerGradient { weights, biases });

            let g_in = delta.dot(&layer.weights);
            if i == 0 {
                input_grad = Some(g_in);
            } else {
                for &(a, b) in &self.skips {
                    if b == i {
                        accumulate(&mut grad_outputs[a], &g_in);
                    }
                }
                accumulate(&mut grad_outputs[i - 1], &g_in);
            }
        }
        layer_grads.reverse();
        Ok((
            Gradients {
                layers: layer_grads,
            },
            input_grad.expect("layer 0 visited"),
        ))
    }

    pub fn backward(&self, cache: &ForwardCache<T>, output_gradient: &[T]) -> Result<(Gradients<T>, Vec<T>)> {
        let view = ArrayView2::from_shape((1, output_gradient.len()), output_gradient)
            .map_err(|e| Error::Usage(e.to_string()))?;
        let (grads, input_grad) = self.backward_batch(cache, view)?;
        Ok((grads, input_grad.row(0).to_vec()))
    }

    pub(crate) fn apply_update(&mut self, mut f: impl FnMut(usize, &mut DenseLayer<T>)) {
        self.generation += 1;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            f(i, layer);
        }
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Array2<T>>, g: &Array2<T>) {
    match slot {
        Some(acc) => *acc += g,
        None => *slot = Some(g.clone()),
    }
}

/// Activation trace of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    network_id: u64,
    generation: u64,
    inputs: Vec<Array2<T>>,
    outputs: Vec<Array2<T>>,
}

impl<T> ForwardCache<T> {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |x| x.nrows())
    }
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGradient<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &MlpNetwork<T>) -> Self {
        Self {
            layers: net.layers.iter().map(LayerGradient::zeros_like).collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for g in &mut self.layers {
            g.weights *= factor;
            g.biases *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.biases += &b.biases;
        }
    }

    /// Flattened view: per layer, weights row-major then biases.
    pub fn to_flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.biases.iter()).copied())
            .collect()
    }

    pub(crate) fn first_non_finite(&self) -> Option<String> {
        for (i, g) in self.layers.iter().enumerate() {
            if g.weights.iter().any(|v| !v.is_finite()) {
                return Some(format!("layer {i} weights"));
            }
            if g.biases.iter().any(|v| !v.is_finite()) {
                return Some(format!("layer {i} biases"));
            }
        }
        None
    }
}

impl<T: Scalar> MlpNetwork<T> {
    /// Flattened parameters in the same order as [`Gradients::to_flat`].
    pub fn parameters_flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
            .collect()
    }

    /// Overwrites parameters from a flat slice laid out as [`parameters_flat`](Self::parameters_flat).
    pub fn set_parameters_flat(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.num_parameters() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                self.num_parameters(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        self.apply_update(|_, layer| {
            for w in layer.weights.iter_mut() {
                *w = it.next().expect("length checked");
            }
            for b in layer.biases.iter_mut() {
                *b = it.next().expect("length checked");
            }
        });
        Ok(())
    }
}

// JSON layout: {layers:[{weights:[[..]],biases:[..],activation}], skips:[[a,b]]}

#[derive(Serialize, Deserialize)]
struct LayerRepr<T> {
    weights: Vec<Vec<T>>,
    biases: Vec<T>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr<T> {
    layers: Vec<LayerRepr<T>>,
    #[serde(default)]
    skips: Vec<[usize; 2]>,
}

impl<T: Scalar> Serialize for MlpNetwork<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = NetworkRepr {
            layers: self
                .layers
                .iter()
                .map(|l| LayerRepr {
                    weights: l.weights.outer_iter().map(|r| r.to_vec()).collect(),
                    biases: l.biases.to_vec(),
                    activation: l.activation,
                })
                .collect(),
            skips: self.skips.iter().map(|&(a, b)| [a, b]).collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for MlpNetwork<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = NetworkRepr::<T>::deserialize(deserializer)?;
        let mut layers = Vec::with_capacity(repr.layers.len());
        for (i, l) in repr.layers.into_iter().enumerate() {
            let rows = l.weights.len();
            let cols = l.weights.first().map_or(0, Vec::len);
            if l.weights.iter().any(|r| r.len() != cols) {
                return Err(D::Error::custom(format!("layer {i}: ragged weight matrix")));
            }
            let flat: Vec<T> = l.weights.into_iter().flatten().collect();
            let weights = Array2::from_shape_vec((rows, cols), flat).map_err(D::Error::custom)?;
            let layer = DenseLayer::from_parts(weights, Array1::from(l.biases), l.activation)
                .map_err(|e| D::Error::custom(format!("layer {i}: {e}")))?;
            layers.push(layer);
        }
        let skips = repr.skips.into_iter().map(|[a, b]| (a, b)).collect();
        MlpNetwork::from_layers(layers, skips).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn three_layer(seed: u64, skip: bool) -> MlpNetwork<f64> {
        let mut cfg = NetworkConfig::new(
            3,
            vec![
                LayerSpec::new(5, Activation::Tanh),
                LayerSpec::new(5, Activation::Relu),
                LayerSpec::new(4, Activation::Tanh),
                LayerSpec::new(2, Activation::Identity),
            ],
        );
        if skip {
            cfg = cfg.with_skips(vec![(0, 2)]);
        }
        init_network(&cfg, seed).unwrap()
    }

    #[test]
    fn zero_bias_init() {
        let cfg = NetworkConfig::new(2, vec![LayerSpec::new(1, Activation::Identity)]);
        let net: MlpNetwork<f64> = init_network(&cfg, 42).unwrap();
        assert_eq!(net.layers()[0].biases(), &array![0.0]);
    }

    #[test]
    fn init_is_deterministic() {
        let a = three_layer(9, true);
        let b = three_layer(9, true);
        assert_eq!(a.parameters_flat(), b.parameters_flat());
        let c = three_layer(10, true);
        assert_ne!(a.parameters_flat(), c.parameters_flat());
    }

    #[test]
    fn init_respects_glorot_bounds() {
        let cfg = NetworkConfig::new(
            3,
            vec![
                LayerSpec::new(5, Activation::Tanh),
                LayerSpec::new(1, Activation::Identity),
            ],
        );
        let net: MlpNetwork<f64> = init_network(&cfg, 7).unwrap();
        let b0 = (6.0f64 / 8.0).sqrt();
        let b1 = (6.0f64 / 6.0).sqrt();
        assert!(net.layers()[0].weights().iter().all(|w| w.abs() <= b0));
        assert!(net.layers()[1].weights().iter().all(|w| w.abs() <= b1));
    }

    #[test]
    fn config_errors() {
        let bad_skip = NetworkConfig::new(
            2,
            vec![
                LayerSpec::new(3, Activation::Tanh),
                LayerSpec::new(4, Activation::Tanh),
                LayerSpec::new(1, Activation::Identity),
            ],
        )
        .with_skips(vec![(0, 2)]);
        assert!(matches!(init_network::<f64>(&bad_skip, 0), Err(Error::Config(_))));
        let backwards = NetworkConfig::new(2, vec![LayerSpec::new(2, Activation::Tanh); 3])
            .with_skips(vec![(2, 1)]);
        assert!(init_network::<f64>(&backwards, 0).is_err());
        let zero = NetworkConfig::new(0, vec![LayerSpec::new(1, Activation::Tanh)]);
        assert!(init_network::<f64>(&zero, 0).is_err());
    }

    #[test]
    fn zero_weights_output_last_bias() {
        let l0 = DenseLayer::from_parts(Array2::zeros((3, 2)), array![1.0, 2.0, 3.0], Activation::Identity).unwrap();
        let l1 = DenseLayer::from_parts(Array2::zeros((2, 3)), array![0.5, -0.25], Activation::Identity).unwrap();
        let net = MlpNetwork::from_layers(vec![l0, l1], vec![]).unwrap();
        let (out, _) = net.forward(&[3.0, -7.0]).unwrap();
        assert_eq!(out, vec![0.5, -0.25]);
    }

    #[test]
    fn single_relu_clamps() {
        let l = DenseLayer::from_parts(array![[2.0]], array![0.0], Activation::Relu).unwrap();
        let net = MlpNetwork::from_layers(vec![l], vec![]).unwrap();
        assert_eq!(net.forward(&[-3.0]).unwrap().0, vec![0.0]);
    }

    #[test]
    fn forward_input_errors() {
        let net = three_layer(1, false);
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Input(_))));
        assert!(matches!(net.forward(&[1.0, f64::NAN, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn zero_weights_backward() {
        let l0 = DenseLayer::from_parts(Array2::zeros((3, 2)), Array1::zeros(3), Activation::Identity).unwrap();
        let l1 = DenseLayer::from_parts(Array2::zeros((2, 3)), Array1::zeros(2), Activation::Identity).unwrap();
        let net = MlpNetwork::from_layers(vec![l0, l1], vec![]).unwrap();
        let (_, cache) = net.forward(&[0.3, 0.1]).unwrap();
        let (g, input_grad) = net.backward(&cache, &[1.5, -2.0]).unwrap();
        assert_eq!(g.layers[1].biases, array![1.5, -2.0]);
        assert_eq!(input_grad, vec![0.0, 0.0]);
    }

    #[test]
    fn tanh_input_gradient_at_zero() {
        let l = DenseLayer::from_parts(array![[1.0]], array![0.0], Activation::Tanh).unwrap();
        let net = MlpNetwork::from_layers(vec![l], vec![]).unwrap();
        let (_, cache) = net.forward(&[0.0]).unwrap();
        let (_, ig) = net.backward(&cache, &[0.7]).unwrap();
        assert_eq!(ig, vec![0.7]);
    }

    #[test]
    fn stale_cache_rejected() {
        let mut net = three_layer(3, true);
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let other = net.clone();
        assert!(matches!(other.backward(&cache, &[1.0, 1.0]), Err(Error::Usage(_))));
        net.layers_mut();
        assert!(matches!(net.backward(&cache, &[1.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn wrong_output_gradient_shape_rejected() {
        let net = three_layer(3, false);
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(net.backward(&cache, &[1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let net = three_layer(5, true);
        let json = serde_json::to_string(&net).unwrap();
        let back: MlpNetwork<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(net.parameters_flat(), back.parameters_flat());
        assert_eq!(net.skips(), back.skips());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["layers"][0]["activation"], "tanh");
        assert_eq!(v["skips"][0], serde_json::json!([0, 2]));
    }

    #[test]
    fn json_rejects_mismatched_dims() {
        let json = r#"{"layers":[{"weights":[[1.0,2.0]],"biases":[0.0],"activation":"tanh"},
                      {"weights":[[1.0,2.0]],"biases":[0.0],"activation":"identity"}],"skips":[]}"#;
        assert!(serde_json::from_str::<MlpNetwork<f64>>(json).is_err());
    }
}
