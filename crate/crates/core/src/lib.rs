//! Energy-based NARX models.
//!
//! Learns the full conditional density `p(y_t | x_t)` of a dynamic system from
//! input/output records. The density is `exp(g(y, x)) / Z(x)` with `g` a
//! two-stage neural network (feature net on the lag window, predictor net on
//! features plus candidate output), trained by noise contrastive estimation.
//! A least-squares network with a constant-variance Gaussian serves as the
//! baseline.
//!
//! All numerical code is generic over [`Scalar`] (`f32`/`f64`); the aliases
//! at the crate root fix the 64-bit precision used for training.

pub mod data;
pub mod ebm;
pub mod fcn;
pub mod harness;
pub mod inference;
pub mod nn;
pub mod scalar;
pub mod training;

mod error;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mlp = nn::MlpNetwork<f64>;
pub type MlpF32 = nn::MlpNetwork<f32>;
pub type EbNarx = ebm::EbNarxModel<f64>;
pub type EbNarxF32 = ebm::EbNarxModel<f32>;
pub type Fcn = fcn::FcnModel<f64>;
pub type FcnF32 = fcn::FcnModel<f32>;
pub type Series = data::IoSeries<f64>;
pub type Windows = data::WindowDataset<f64>;
pub type Density = inference::DensityGrid<f64>;
pub type Grid = inference::GridSpec<f64>;
