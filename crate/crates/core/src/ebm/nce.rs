use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::model::{EbNarxModel, EbmGradients};
use super::noise::{NceConfig, NoiseMixture};
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

/// Targets and their noise samples for one minibatch (standardized units).
///
/// Column 0 of `candidates` is the observed target; columns `1..=M` are noise
/// draws centred on it. `log_q` holds `ln q(candidate | target)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NceBatch<T> {
    pub x_std: Array2<T>,
    pub candidates: Array2<T>,
    pub log_q: Array2<T>,
}

impl<T: Scalar> NceBatch<T> {
    pub fn draw<R: Rng + ?Sized>(
        x_std: Array2<T>,
        y_std: &[T],
        mixture: &NoiseMixture<T>,
        num_noise: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if x_std.nrows() != y_std.len() || y_std.is_empty() {
            return Err(Error::Input(format!(
                "NCE batch needs matching non-empty rows, got {} regressors and {} targets",
                x_std.nrows(),
                y_std.len()
            )));
        }
        let cols = num_noise + 1;
        let mut candidates = Array2::zeros((y_std.len(), cols));
        let mut log_q = Array2::zeros((y_std.len(), cols));
        for (i, &y) in y_std.iter().enumerate() {
            candidates[[i, 0]] = y;
            log_q[[i, 0]] = mixture.log_density(y, y);
            for m in 1..cols {
                let (v, lq) = mixture.sample(y, rng);
                candidates[[i, m]] = v;
                log_q[[i, m]] = lq;
            }
        }
        Ok(Self {
            x_std,
            candidates,
            log_q,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn rows(&self, range: std::ops::Range<usize>) -> NceBatch<T> {
        NceBatch {
            x_std: self.x_std.slice(s![range.clone(), ..]).to_owned(),
            candidates: self.candidates.slice(s![range.clone(), ..]).to_owned(),
            log_q: self.log_q.slice(s![range, ..]).to_owned(),
        }
    }
}

/// Mean NCE loss over rows and its gradient with respect to each energy.
///
/// Per row the logits are `g_m − ln q_m`; the loss is the cross-entropy of
/// an `(M+1)`-way softmax with class 0 as the label.
pub fn nce_objective<T: Scalar>(energies: ArrayView2<T>, log_q: ArrayView2<T>) -> Result<(T, Array2<T>)> {
    if energies.dim() != log_q.dim() || energies.nrows() == 0 {
        return Err(Error::Input(format!(
            "energies {:?} and log-densities {:?} must share a non-empty shape",
            energies.dim(),
            log_q.dim()
        )));
    }
    let rows = energies.nrows();
    let inv_b = T::one() / T::of(rows as f64);
    let mut grad = Array2::zeros(energies.raw_dim());
    let mut total = T::zero();
    for i in 0..rows {
        let logits: Vec<T> = energies
            .row(i)
            .iter()
            .zip(log_q.row(i))
            .map(|(&g, &q)| g - q)
            .collect();
        let lse = log_sum_exp(logits.iter().copied());
        let loss_i = lse - logits[0];
        if !loss_i.is_finite() {
            return Err(Error::Training(format!("non-finite NCE loss at batch element {i}")));
        }
        total += loss_i.max(T::zero());
        let mut g_row = grad.row_mut(i);
        for (m, &s) in logits.iter().enumerate() {
            g_row[m] = (s - lse).exp() * inv_b;
        }
        g_row[0] -= inv_b;
    }
    Ok((total * inv_b, grad))
}

/// NCE loss of an arbitrary energy `g(x_std_row, y_std)` on a fixed batch.
pub fn nce_loss_with<T: Scalar>(batch: &NceBatch<T>, energy: impl Fn(ArrayView1<T>, T) -> T) -> Result<T> {
    let energies = Array2::from_shape_fn(batch.candidates.raw_dim(), |(i, m)| {
        energy(batch.x_std.row(i), batch.candidates[[i, m]])
    });
    nce_objective(energies.view(), batch.log_q.view()).map(|(l, _)| l)
}

impl<T: Scalar> EbNarxModel<T> {
    fn batch_energies(&self, batch: &NceBatch<T>) -> Result<Array2<T>> {
        let feats = self.features(batch.x_std.view())?;
        let inp = Self::predictor_input(feats.view(), batch.candidates.view());
        let g = self.predictor_net.evaluate_batch(inp.view())?;
        Ok(g.into_shape_with_order(batch.candidates.raw_dim())
            .expect("one energy per candidate"))
    }

    pub fn nce_loss_value(&self, batch: &NceBatch<T>) -> Result<T> {
        let g = self.batch_energies(batch)?;
        nce_objective(g.view(), batch.log_q.view()).map(|(l, _)| l)
    }

    /// Row-weighted mean loss, evaluated `chunk` rows at a time.
    pub(crate) fn nce_loss_chunked(&self, batch: &NceBatch<T>, chunk: usize) -> Result<T> {
        let n = batch.len();
        let mut total = T::zero();
        let mut start = 0;
        while start < n {
            let end = (start + chunk.max(1)).min(n);
            let part = batch.rows(start..end);
            total += self.nce_loss_value(&part)? * T::of((end - start) as f64);
            start = end;
        }
        Ok(total / T::of(n as f64))
    }

    /// NCE loss and its exact gradient for the given (fixed) noise samples.
    pub fn nce_loss_and_grad(&self, batch: &NceBatch<T>) -> Result<(T, EbmGradients<T>)> {
        let (b, c) = batch.candidates.dim();
        let (feats, feat_cache) = self.feature_net.forward_batch(batch.x_std.view())?;
        let f = feats.ncols();
        let inp = Self::predictor_input(feats.view(), batch.candidates.view());
        let (g, pred_cache) = self.predictor_net.forward_batch(inp.view())?;
        let energies = g
            .into_shape_with_order((b, c))
            .expect("one energy per candidate");
        let (loss, d_energy) = nce_objective(energies.view(), batch.log_q.view())?;
        let d_out = d_energy
            .into_shape_with_order((b * c, 1))
            .expect("row-major reshape");
        let (predictor, d_inp) = self.predictor_net.backward_batch(&pred_cache, d_out.view())?;
        let mut d_feats = Array2::zeros((b, f));
        for i in 0..b {
            let block = d_inp.slice(s![i * c..(i + 1) * c, ..f]);
            d_feats.row_mut(i).assign(&block.sum_axis(Axis(0)));
        }
        let (feature, _) = self.feature_net.backward_batch(&feat_cache, d_feats.view())?;
        Ok((loss, EbmGradients { feature, predictor }))
    }
}

/// Draws fresh noise for `(x_std, y_std)` and returns the loss and gradients.
pub fn nce_loss<T: Scalar, R: Rng + ?Sized>(
    model: &EbNarxModel<T>,
    x_std: Array2<T>,
    y_std: &[T],
    cfg: &NceConfig,
    rng: &mut R,
) -> Result<(T, EbmGradients<T>)> {
    let mixture = NoiseMixture::new(cfg)?;
    let batch = NceBatch::draw(x_std, y_std, &mixture, cfg.num_noise, rng)?;
    model.nce_loss_and_grad(&batch)
}
