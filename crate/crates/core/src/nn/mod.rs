//! Dense feed-forward networks with exact reverse-mode gradients and Adam.
//!
//! Networks evaluate row-batched inputs (`batch × input_dim`) so the energy
//! model can score many candidate outputs with one matrix product per layer.
//! Gradients are available with respect to every parameter and to the input,
//! the latter being what MAP refinement ascends along.

mod adam;
mod layer;
mod network;

pub use adam::{AdamConfig, AdamState};
pub use layer::{Activation, DenseLayer, LayerGradient};
pub use network::{
    init_network, ForwardCache, Gradients, LayerSpec, MlpNetwork, NetworkConfig,
};
