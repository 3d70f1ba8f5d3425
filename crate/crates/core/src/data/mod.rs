//! Input/output records, simulated systems, lag windowing and standardization.

mod series;
mod simulate;
mod standardize;
mod window;

pub use series::{load_csv, parse_csv, write_csv, IoSeries, SeriesMeta};
pub use simulate::{
    ar_recursion, arx_recursion, chen_recursion, chen_step, simulate_ar, simulate_arx,
    simulate_chen, simulate_chen_detailed, ChenSimulation, NoiseKind, AR_COEFFICIENT,
    ARX_NOISE_MIXTURE,
};
pub use standardize::Standardizer;
pub use window::{make_windows, WindowConfig, WindowDataset};
