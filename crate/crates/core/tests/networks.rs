use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

use ebnarx::nn::{init_network, Activation, AdamConfig, AdamState, DenseLayer, LayerSpec, MlpNetwork, NetworkConfig};

fn layer(w: Array2<f64>, b: Array1<f64>, a: Activation) -> DenseLayer<f64> {
    DenseLayer::from_parts(w, b, a).unwrap()
}

#[test]
fn forward_matches_hand_computation() {
    let net = MlpNetwork::from_layers(
        vec![
            layer(array![[0.5, -1.0], [2.0, 0.25]], array![0.1, -0.2], Activation::Tanh),
            layer(array![[1.5, -0.5]], array![0.3], Activation::Identity),
        ],
        vec![],
    )
    .unwrap();
    let (x0, x1) = (0.4, -0.8);
    let h0 = (0.5 * x0 - 1.0 * x1 + 0.1f64).tanh();
    let h1 = (2.0 * x0 + 0.25 * x1 - 0.2f64).tanh();
    let expected = 1.5 * h0 - 0.5 * h1 + 0.3;
    let (out, _) = net.forward(&[x0, x1]).unwrap();
    assert!((out[0] - expected).abs() < 1e-15);
}

#[test]
fn relu_layer_by_hand() {
    let net = MlpNetwork::from_layers(
        vec![layer(array![[1.0, 1.0], [-1.0, 2.0], [0.0, -3.0]], array![0.0, 0.5, 0.0], Activation::Relu)],
        vec![],
    )
    .unwrap();
    let (out, _) = net.forward(&[1.0, -1.0]).unwrap();
    assert_eq!(out, vec![0.0, 0.0, 3.0]);
}

/// A skip (a, b) adds layer a's output to layer b's input.
#[test]
fn skip_equals_manual_composition() {
    let cfg = NetworkConfig::new(
        3,
        vec![
            LayerSpec::new(4, Activation::Tanh),
            LayerSpec::new(4, Activation::Tanh),
            LayerSpec::new(2, Activation::Identity),
        ],
    )
    .with_skips(vec![(0, 2)]);
    let net: MlpNetwork<f64> = init_network(&cfg, 8).unwrap();
    let x = array![0.3, -0.7, 1.1];
    let l = net.layers();
    let a0 = (l[0].weights().dot(&x) + l[0].biases()).mapv(f64::tanh);
    let a1 = (l[1].weights().dot(&a0) + l[1].biases()).mapv(f64::tanh);
    let expected = l[2].weights().dot(&(&a1 + &a0)) + l[2].biases();
    let (out, _) = net.forward(x.as_slice().unwrap()).unwrap();
    for (o, e) in out.iter().zip(expected.iter()) {
        assert!((o - e).abs() < 1e-14);
    }
}

#[test]
fn batch_and_single_row_agree() {
    let cfg = NetworkConfig::new(2, vec![LayerSpec::new(5, Activation::Relu), LayerSpec::new(1, Activation::Identity)]);
    let net: MlpNetwork<f64> = init_network(&cfg, 2).unwrap();
    let xs = array![[0.1, 0.2], [-1.0, 0.5], [2.0, -2.0]];
    let batch = net.evaluate_batch(xs.view()).unwrap();
    for (i, row) in xs.outer_iter().enumerate() {
        assert_eq!(net.forward(row.as_slice().unwrap()).unwrap().0[0], batch[[i, 0]]);
    }
}

#[test]
fn f32_network_tracks_f64() {
    let cfg = NetworkConfig::new(3, vec![LayerSpec::new(6, Activation::Tanh), LayerSpec::new(1, Activation::Identity)]);
    let n64: MlpNetwork<f64> = init_network(&cfg, 4).unwrap();
    let n32: MlpNetwork<f32> = init_network(&cfg, 4).unwrap();
    let a = n64.forward(&[0.2, -0.1, 0.7]).unwrap().0[0];
    let b = n32.forward(&[0.2, -0.1, 0.7]).unwrap().0[0];
    assert!((a - b as f64).abs() < 1e-5);
}

fn weighted_output(net: &MlpNetwork<f64>, x: &[f64], w: &[f64]) -> f64 {
    net.forward(x).unwrap().0.iter().zip(w).map(|(o, c)| o * c).sum()
}

fn fd_check(cfg: &NetworkConfig, seed: u64, x: &[f64], w: &[f64]) -> f64 {
    let net: MlpNetwork<f64> = init_network(cfg, seed).unwrap();
    let (_, cache) = net.forward(x).unwrap();
    let (grads, input_grad) = net.backward(&cache, w).unwrap();
    let theta = net.parameters_flat();
    let mut probe = net.clone();
    let e = 1e-6;
    let mut worst: f64 = 0.0;
    let mut rel = |a: f64, fd: f64| worst = worst.max((a - fd).abs() / (a.abs() + fd.abs()).max(1e-6));
    for (i, &a) in grads.to_flat().iter().enumerate() {
        let mut p = theta.clone();
        p[i] += e;
        probe.set_parameters_flat(&p).unwrap();
        let up = weighted_output(&probe, x, w);
        p[i] -= 2.0 * e;
        probe.set_parameters_flat(&p).unwrap();
        rel(a, (up - weighted_output(&probe, x, w)) / (2.0 * e));
    }
    for (k, &a) in input_grad.iter().enumerate() {
        let mut xp = x.to_vec();
        xp[k] += e;
        let up = weighted_output(&net, &xp, w);
        xp[k] -= 2.0 * e;
        rel(a, (up - weighted_output(&net, &xp, w)) / (2.0 * e));
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tanh_gradients_match_finite_differences(
        depth in 1usize..=4,
        width in 2usize..=12,
        input in 1usize..=6,
        skip in any::<bool>(),
        seed in 0u64..1000,
        x in proptest::collection::vec(-1.5f64..1.5, 6),
    ) {
        let mut layers: Vec<LayerSpec> = (0..depth - 1).map(|_| LayerSpec::new(width, Activation::Tanh)).collect();
        layers.push(LayerSpec::new(2, Activation::Identity));
        let mut cfg = NetworkConfig::new(input, layers);
        if skip && depth >= 3 {
            cfg = cfg.with_skips(vec![(0, 2)]);
        }
        let worst = fd_check(&cfg, seed, &x[..input], &[0.7, -1.3]);
        prop_assert!(worst < 1e-4, "max relative error {}", worst);
    }
}

#[test]
fn predictor_topology_gradients() {
    let cfg = NetworkConfig::new(
        5,
        vec![
            LayerSpec::new(6, Activation::Tanh),
            LayerSpec::new(6, Activation::Tanh),
            LayerSpec::new(6, Activation::Tanh),
            LayerSpec::new(1, Activation::Identity),
        ],
    )
    .with_skips(vec![(0, 2), (1, 3)]);
    assert!(fd_check(&cfg, 3, &[0.1, -0.4, 0.9, 0.0, 0.3], &[1.0]) < 1e-4);
}

#[test]
fn adam_descends_a_quadratic() {
    // Fit a single linear unit to y = 2x − 1 by gradient steps on squared error.
    let cfg = NetworkConfig::new(1, vec![LayerSpec::new(1, Activation::Identity)]);
    let mut net: MlpNetwork<f64> = init_network(&cfg, 0).unwrap();
    let mut opt = AdamState::new(&net, 0.05, AdamConfig::default());
    let xs = array![[-1.0], [0.0], [1.0], [2.0]];
    let ys = [-3.0, -1.0, 1.0, 3.0];
    for _ in 0..2000 {
        let (out, cache) = net.forward_batch(xs.view()).unwrap();
        let d = Array2::from_shape_fn((4, 1), |(i, _)| 2.0 * (out[[i, 0]] - ys[i]) / 4.0);
        let (g, _) = net.backward_batch(&cache, d.view()).unwrap();
        opt.step(&mut net, &g).unwrap();
    }
    let w = net.layers()[0].weights()[[0, 0]];
    let b = net.layers()[0].biases()[0];
    assert!((w - 2.0).abs() < 1e-3 && (b + 1.0).abs() < 1e-3, "w={w} b={b}");
}
