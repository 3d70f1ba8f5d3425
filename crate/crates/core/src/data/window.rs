use std::fmt::Write as _;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::series::IoSeries;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximum output and input delays of the regressor window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowConfig {
    pub dy: usize,
    pub du: usize,
}

impl WindowConfig {
    pub fn new(dy: usize, du: usize) -> Result<Self> {
        let cfg = Self { dy, du };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dy + self.du == 0 {
            return Err(Error::Config("window needs at least one delay".into()));
        }
        Ok(())
    }

    pub fn regressor_dim(&self) -> usize {
        self.dy + self.du
    }

    /// Number of leading samples consumed before the first full window.
    pub fn lag(&self) -> usize {
        self.dy.max(self.du)
    }
}

/// Supervised regressor/target pairs cut from a series.
///
/// Row `r` holds `[y_{t-1}, …, y_{t-dy}, u_{t-1}, …, u_{t-du}]` for
/// `t = t0 + r` (0-based series index), and `targets[r] = y_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset<T> {
    pub x: Array2<T>,
    pub targets: Array1<T>,
    pub t0: usize,
    pub window: WindowConfig,
}

pub fn make_windows<T: Scalar>(series: &IoSeries<T>, window: WindowConfig) -> Result<WindowDataset<T>> {
    window.validate()?;
    let lag = window.lag();
    let len = series.len();
    if len <= lag {
        return Err(Error::Input(format!(
            "series of length {len} is too short for a window of lag {lag}"
        )));
    }
    let rows = len - lag;
    let dim = window.regressor_dim();
    let mut x = Array2::zeros((rows, dim));
    for (r, mut row) in x.outer_iter_mut().enumerate() {
        let t = lag + r;
        for k in 0..window.dy {
            row[k] = series.y[t - 1 - k];
        }
        for k in 0..window.du {
            row[window.dy + k] = series.u[t - 1 - k];
        }
    }
    let targets = Array1::from(series.y[lag..].to_vec());
    Ok(WindowDataset {
        x,
        targets,
        t0: lag,
        window,
    })
}

impl<T: Scalar> WindowDataset<T> {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn regressor(&self, row: usize) -> ArrayView1<'_, T> {
        self.x.row(row)
    }

    /// Chronological split: the first `n_first` rows and the rest.
    pub fn split_at(&self, n_first: usize) -> Result<(Self, Self)> {
        if n_first == 0 || n_first >= self.len() {
            return Err(Error::Input(format!(
                "split point {n_first} must lie strictly inside 0..{}",
                self.len()
            )));
        }
        let head = Self {
            x: self.x.slice(s![..n_first, ..]).to_owned(),
            targets: self.targets.slice(s![..n_first]).to_owned(),
            t0: self.t0,
            window: self.window,
        };
        let tail = Self {
            x: self.x.slice(s![n_first.., ..]).to_owned(),
            targets: self.targets.slice(s![n_first..]).to_owned(),
            t0: self.t0 + n_first,
            window: self.window,
        };
        Ok((head, tail))
    }

    /// Split with the first `fraction` of rows (rounded) in the head.
    pub fn split_fraction(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Config(format!("split fraction {fraction} must lie in (0, 1)")));
        }
        self.split_at((self.len() as f64 * fraction).round() as usize)
    }

    pub fn select_rows(&self, rows: &[usize]) -> (Array2<T>, Array1<T>) {
        let x = self.x.select(ndarray::Axis(0), rows);
        let y = self.targets.select(ndarray::Axis(0), rows);
        (x, y)
    }

    /// CSV with columns `x_1..x_D,y`.
    pub fn to_csv_string(&self) -> String {
        let dim = self.x.ncols();
        let mut out = String::new();
        for k in 1..=dim {
            let _ = write!(out, "x_{k},");
        }
        out.push_str("y\n");
        for (row, y) in self.x.outer_iter().zip(self.targets.iter()) {
            for v in row {
                let _ = write!(out, "{},", v.as_f64());
            }
            let _ = writeln!(out, "{}", y.as_f64());
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}
