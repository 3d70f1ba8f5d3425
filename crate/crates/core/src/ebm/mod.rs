//! Energy-based NARX model and its noise-contrastive training.
//!
//! The energy `g(y, x)` is a feature net applied to the standardized lag window,
//! concatenated with the standardized candidate output and passed through a
//! residual predictor net. `p(y | x) ∝ exp(g(y, x))`.

mod model;
mod nce;
mod noise;
mod train;

pub use model::{EbNarxModel, EbmArchitecture, EbmGradients};
pub use nce::{nce_loss, nce_loss_with, nce_objective, NceBatch};
pub use noise::{sample_noise, NceConfig, NoiseMixture};
pub use train::{log_likelihood, train_ebm};
