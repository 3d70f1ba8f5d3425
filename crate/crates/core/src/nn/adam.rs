use serde::{Deserialize, Serialize};

use super::network::{Gradients, MlpNetwork};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one network. The learning rate is decayed by the caller.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub first_moment: Gradients<T>,
    pub second_moment: Gradients<T>,
    pub step_count: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub learning_rate: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &MlpNetwork<T>, learning_rate: f64, config: AdamConfig) -> Self {
        Self {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step_count: 0,
            beta1: T::of(config.beta1),
            beta2: T::of(config.beta2),
            epsilon: T::of(config.epsilon),
            learning_rate: T::of(learning_rate),
        }
    }

    pub fn decay_learning_rate(&mut self, factor: f64) {
        self.learning_rate = self.learning_rate * T::of(factor);
    }

    /// One bias-corrected Adam update of `net` in place.
    pub fn step(&mut self, net: &mut MlpNetwork<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.layers.len() != net.layers().len()
            || grads
                .layers
                .iter()
                .zip(&self.first_moment.layers)
                .any(|(g, m)| g.weights.dim() != m.weights.dim() || g.biases.dim() != m.biases.dim())
        {
            return Err(Error::Usage("gradient shapes do not match optimizer state".into()));
        }
        if let Some(which) = grads.first_non_finite() {
            return Err(Error::Training(format!("non-finite gradient in {which}")));
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let one = T::one();
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let step_size = self.learning_rate / (one - b1.powi(t));
        let v_correction = one / (one - b2.powi(t));

        let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p = *p - step_size * *m / ((*v * v_correction).sqrt() + eps);
        };

        let first = &mut self.first_moment;
        let second = &mut self.second_moment;
        net.apply_update(|i, layer| {
            let g = &grads.layers[i];
            ndarray::Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut first.layers[i].weights)
                .and(&mut second.layers[i].weights)
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut layer.biases)
                .and(&g.biases)
                .and(&mut first.layers[i].biases)
                .and(&mut second.layers[i].biases)
                .for_each(|p, &g, m, v| update(p, g, m, v));
        });
        net.check_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer};
    use ndarray::array;

    fn scalar_net(w: f64) -> MlpNetwork<f64> {
        let l = DenseLayer::from_parts(array![[w]], array![0.0], Activation::Identity).unwrap();
        MlpNetwork::from_layers(vec![l], vec![]).unwrap()
    }

    fn grads(gw: f64, gb: f64) -> Gradients<f64> {
        Gradients {
            layers: vec![crate::nn::LayerGradient {
                weights: array![[gw]],
                biases: array![gb],
            }],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(0.3);
        let mut state = AdamState::new(&net, 0.001, AdamConfig::default());
        state.step(&mut net, &grads(0.0, 0.0)).unwrap();
        assert_eq!(net.parameters_flat(), vec![0.3, 0.0]);
        assert_eq!(state.first_moment.to_flat(), vec![0.0, 0.0]);
        assert_eq!(state.second_moment.to_flat(), vec![0.0, 0.0]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = 1, v̂ = 1 on step one, so Δ = -lr / (1 + 1e-8).
        let mut net = scalar_net(0.0);
        let mut state = AdamState::new(&net, 0.001, AdamConfig::default());
        state.step(&mut net, &grads(1.0, 0.0)).unwrap();
        let w = net.parameters_flat()[0];
        assert!((w - (-0.001 / (1.0 + 1e-8))).abs() < 1e-15, "w = {w}");
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut net = scalar_net(0.0);
        let mut state = AdamState::new(&net, 0.01, AdamConfig::default());
        let mut prev = 0.0;
        for _ in 0..200 {
            state.step(&mut net, &grads(-0.5, 0.0)).unwrap();
            let w = net.parameters_flat()[0];
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn non_finite_gradient_named() {
        let mut net = scalar_net(0.0);
        let mut state = AdamState::new(&net, 0.001, AdamConfig::default());
        let err = state.step(&mut net, &grads(0.0, f64::INFINITY)).unwrap_err();
        assert!(err.to_string().contains("layer 0 biases"), "{err}");
        assert_eq!(state.step_count, 0);
    }

    #[test]
    fn learning_rate_decay_is_multiplicative() {
        let net = scalar_net(0.0);
        let mut state = AdamState::new(&net, 0.001, AdamConfig::default());
        state.decay_learning_rate(0.99);
        state.decay_learning_rate(0.99);
        assert!((state.learning_rate - 0.001 * 0.99 * 0.99).abs() < 1e-18);
    }
}
