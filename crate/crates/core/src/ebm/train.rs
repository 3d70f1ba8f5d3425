use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{EbNarxModel, EbmArchitecture};
use super::nce::NceBatch;
use super::noise::{NceConfig, NoiseMixture};
use crate::data::{Standardizer, WindowDataset};
use crate::error::{Error, Result};
use crate::inference::{density_from_energies, ConditionalEnergy, GridSpec};
use crate::nn::{AdamConfig, AdamState};
use crate::scalar::Scalar;
use crate::training::{EarlyStopping, EpochRecord, Progress, TrainConfig, TrainingLog};

const SHUFFLE_STREAM: u64 = 0x5eed_0001;
const HOLDOUT_NOISE_STREAM: u64 = 0x5eed_0002;

/// Fits an EB-NARX model by minibatch Adam on the NCE loss.
///
/// The trailing `val_fraction` of rows is held out with one fixed noise draw;
/// training stops when its loss has not improved for `patience` epochs and
/// the best parameters are returned. Fresh noise is drawn every epoch.
pub fn train_ebm<T: Scalar>(
    data: &WindowDataset<T>,
    arch: &EbmArchitecture,
    nce: &NceConfig,
    tc: &TrainConfig,
) -> Result<(EbNarxModel<T>, TrainingLog)> {
    tc.validate()?;
    nce.validate()?;
    let (n_fit, _) = tc.holdout(data.len())?;
    let standardizer = Standardizer::fit(data)?;
    let x_std = standardizer.apply_x_rows(data.x.view())?;
    let y_std: Array1<T> = data.targets.mapv(|y| standardizer.apply_y(y));

    let mut model = EbNarxModel::new(arch, standardizer, data.window, nce.clone(), tc.seed)?;
    let mixture = NoiseMixture::new(nce)?;

    let holdout_rows: Vec<usize> = (n_fit..data.len()).collect();
    let mut holdout_rng = ChaCha8Rng::seed_from_u64(nce.seed ^ HOLDOUT_NOISE_STREAM);
    let holdout = NceBatch::draw(
        x_std.select(Axis(0), &holdout_rows),
        y_std.select(Axis(0), &holdout_rows).as_slice().expect("owned"),
        &mixture,
        nce.num_noise,
        &mut holdout_rng,
    )?;
    let eval_chunk = tc.batch_size.max(64);

    let initial = model.nce_loss_chunked(&holdout, eval_chunk)?.as_f64();
    let mut log = TrainingLog::new(initial);
    let mut stopping = EarlyStopping::new(tc.patience);
    let mut best = (model.feature_net.clone(), model.predictor_net.clone());

    let adam = AdamConfig::default();
    let mut feature_opt = AdamState::new(&model.feature_net, tc.lr0, adam);
    let mut predictor_opt = AdamState::new(&model.predictor_net, tc.lr0, adam);
    let mut order: Vec<usize> = (0..n_fit).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ SHUFFLE_STREAM);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(nce.seed);

    for epoch in 1..=tc.max_epochs {
        let lr = feature_opt.learning_rate.as_f64();
        order.shuffle(&mut shuffle_rng);
        let mut train_total = 0.0;
        for rows in order.chunks(tc.batch_size) {
            let x: Array2<T> = x_std.select(Axis(0), rows);
            let y: Vec<T> = rows.iter().map(|&r| y_std[r]).collect();
            let batch = NceBatch::draw(x, &y, &mixture, nce.num_noise, &mut noise_rng)?;
            let (loss, grads) = model
                .nce_loss_and_grad(&batch)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            feature_opt
                .step(&mut model.feature_net, &grads.feature)
                .and_then(|_| predictor_opt.step(&mut model.predictor_net, &grads.predictor))
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            train_total += loss.as_f64() * rows.len() as f64;
        }
        let val_loss = model
            .nce_loss_chunked(&holdout, eval_chunk)
            .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?
            .as_f64();
        let record = EpochRecord {
            epoch,
            train_loss: train_total / n_fit as f64,
            val_loss,
            lr,
        };
        log::debug!("ebm epoch {epoch}: train {:.5} val {val_loss:.5}", record.train_loss);
        match stopping.observe(&mut log, record) {
            Progress::Improved => best = (model.feature_net.clone(), model.predictor_net.clone()),
            Progress::Stalled => {}
            Progress::Stop => break,
        }
        feature_opt.decay_learning_rate(tc.lr_decay);
        predictor_opt.decay_learning_rate(tc.lr_decay);
    }

    model.feature_net = best.0;
    model.predictor_net = best.1;
    Ok((model, log))
}

/// Mean `ln p(y_t | x_t)` over a dataset, with `Z(x_t)` from trapezoidal
/// quadrature on `grid`.
pub fn log_likelihood<T: Scalar, E: ConditionalEnergy<T> + ?Sized>(
    model: &E,
    data: &WindowDataset<T>,
    grid: &GridSpec<T>,
) -> Result<T> {
    grid.validate()?;
    if data.is_empty() {
        return Err(Error::Input("log-likelihood needs at least one row".into()));
    }
    let ys = grid.points();
    let mut total = T::zero();
    for (row, &y) in data.x.outer_iter().zip(data.targets.iter()) {
        let x = row.to_vec();
        let q = model.prepare(&x)?;
        let energies = model.energies(&q, &ys)?;
        let d = density_from_energies(grid, ys.clone(), &energies)?;
        let g = model.energies(&q, &[y])?[0];
        total += g - d.log_partition;
    }
    Ok(total / T::of(data.len() as f64))
}
