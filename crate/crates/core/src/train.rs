//! Minibatch training loop: shuffled windows, averaged gradients,
//! global-norm clipping, ADAM, and per-epoch validation with
//! best-checkpoint retention.

use std::fmt::Write as _;
use std::time::Instant;

use crate::data::WindowedDataset;
use crate::dct::Trajectory;
use crate::error::{Error, Result};
use crate::eval::{euler_error_at, mpjpe_at_traj, zero_velocity_trajectory};
use crate::kin::expmap_traj_to_euler;
use crate::optim::{
    adam_step, clip_gradients, loss_grad, lr_at, AdamState, ClipConfig, LossKind, LrSchedule,
};
use crate::pipeline::Pipeline;
use crate::rng::SeededRng;

/// How validation predictions are scored against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValMetricKind {
    /// Mean unsquared per-joint position error over future frames.
    Mpjpe,
    /// Mean per-frame L2 error of Euler angles over future frames,
    /// converting from the exponential map.
    Euler,
    /// Mean per-frame L2 norm of the channel difference; fallback when
    /// channels do not form triples.
    ChannelL2,
}

impl ValMetricKind {
    /// Representation-appropriate default.
    pub fn for_loss(loss: LossKind, channels: usize) -> Self {
        if channels % 3 != 0 {
            return ValMetricKind::ChannelL2;
        }
        match loss {
            LossKind::Mpjpe => ValMetricKind::Mpjpe,
            LossKind::Angle => ValMetricKind::Euler,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub clip: ClipConfig,
    pub loss: LossKind,
    pub val_metric: ValMetricKind,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(loss: LossKind, channels: usize) -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            schedule: LrSchedule::default(),
            clip: ClipConfig::default(),
            loss,
            val_metric: ValMetricKind::for_loss(loss, channels),
            seed: 1,
        }
    }
}

/// One row of the training log. Epoch 0 records the untrained model.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_metric: Option<f64>,
    pub wallclock_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,val_metric,wallclock_seconds\n");
        for r in &self.records {
            let val = r.val_metric.map(|v| format!("{v:.12e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.12e},{:.12e},{},{:.3}",
                r.epoch, r.lr, r.train_loss, val, r.wallclock_seconds
            )
            .expect("writing to string cannot fail");
        }
        out
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub log: TrainingLog,
    /// Epoch whose parameters the pipeline now holds (best validation, or
    /// the last epoch without a validation set).
    pub selected_epoch: usize,
    pub steps_taken: usize,
}

fn future_slice(window: &Trajectory, n_observed: usize) -> Result<Trajectory> {
    window.slice_frames(n_observed, window.frames() - n_observed)
}

/// Scores one prediction window against ground truth over the future
/// frames only.
fn window_metric(
    kind: ValMetricKind,
    pred_future: &Trajectory,
    gt_future: &Trajectory,
) -> Result<f64> {
    let frames = pred_future.frames();
    let mut total = 0.0;
    match kind {
        ValMetricKind::Mpjpe => {
            for n in 0..frames {
                total += mpjpe_at_traj(pred_future, gt_future, n)?;
            }
        }
        ValMetricKind::Euler => {
            let pred_e = expmap_traj_to_euler(pred_future)?;
            let gt_e = expmap_traj_to_euler(gt_future)?;
            for n in 0..frames {
                total += euler_error_at(&pred_e, &gt_e, n)?;
            }
        }
        ValMetricKind::ChannelL2 => {
            for n in 0..frames {
                let mut sum = 0.0;
                for k in 0..pred_future.channels() {
                    let d = pred_future.values().get(k, n) - gt_future.values().get(k, n);
                    sum += d * d;
                }
                total += sum.sqrt();
            }
        }
    }
    Ok(total / frames as f64)
}

/// Mean error of the pipeline's predictions over all windows of a dataset.
pub fn validation_metric(
    pipeline: &Pipeline,
    data: &WindowedDataset,
    kind: ValMetricKind,
) -> Result<f64> {
    let mut total = 0.0;
    for idx in 0..data.len() {
        let gt = data.window(idx)?;
        let observed = data.observed(idx)?;
        let pred = pipeline.predict(&observed)?;
        let pred_future = future_slice(&pred, data.n_observed())?;
        let gt_future = future_slice(&gt, data.n_observed())?;
        total += window_metric(kind, &pred_future, &gt_future)?;
    }
    Ok(total / data.len() as f64)
}

/// Same metric for the zero-velocity baseline.
pub fn baseline_metric(data: &WindowedDataset, kind: ValMetricKind) -> Result<f64> {
    let mut total = 0.0;
    for idx in 0..data.len() {
        let gt = data.window(idx)?;
        let observed = data.observed(idx)?;
        let pred_future = zero_velocity_trajectory(&observed, data.n_future())?;
        let gt_future = future_slice(&gt, data.n_observed())?;
        total += window_metric(kind, &pred_future, &gt_future)?;
    }
    Ok(total / data.len() as f64)
}

/// Mean training loss over all windows without updating anything.
pub fn dataset_loss(pipeline: &Pipeline, data: &WindowedDataset, loss: LossKind) -> Result<f64> {
    let mut total = 0.0;
    for idx in 0..data.len() {
        let gt = data.window(idx)?;
        let observed = data.observed(idx)?;
        let pred = pipeline.predict(&observed)?;
        let (l, _) = loss_grad(loss, &pred, &gt)?;
        total += l;
    }
    Ok(total / data.len() as f64)
}

/// Trains the pipeline in place and returns the log. The model ends up
/// holding the best-validation parameters when a validation set is given,
/// otherwise the last epoch's.
pub fn train(
    pipeline: &mut Pipeline,
    train_set: &WindowedDataset,
    val_set: Option<&WindowedDataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be positive".to_string()));
    }
    if train_set.channels() != pipeline.dims().channels {
        return Err(Error::shape(format!(
            "dataset has {} channels, pipeline expects {}",
            train_set.channels(),
            pipeline.dims().channels
        )));
    }
    let started = Instant::now();
    let mut rng = SeededRng::new(cfg.seed).fork(0x5455_4646); // shuffling stream
    let mut adam = AdamState::new(pipeline.model().params());
    let mut log = TrainingLog::default();
    let mut steps_taken = 0usize;

    let eval_val = |pipeline: &Pipeline| -> Result<Option<f64>> {
        val_set.map(|v| validation_metric(pipeline, v, cfg.val_metric)).transpose()
    };

    // Epoch 0: the untrained model.
    let initial_loss = dataset_loss(pipeline, train_set, cfg.loss)?;
    let initial_val = eval_val(pipeline)?;
    log.records.push(EpochRecord {
        epoch: 0,
        lr: lr_at(&cfg.schedule, 0),
        train_loss: initial_loss,
        val_metric: initial_val,
        wallclock_seconds: started.elapsed().as_secs_f64(),
    });

    let mut best_val = initial_val;
    let mut best_values = pipeline.model().params().snapshot_values();
    let mut best_epoch = 0usize;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = lr_at(&cfg.schedule, epoch);
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            pipeline.model_mut().params_mut().zero_grads();
            let mut batch_loss = 0.0;
            for &idx in batch {
                let gt = train_set.window(idx)?;
                let observed = train_set.observed(idx)?;
                let (pred, tape) = pipeline.forward(&observed)?;
                let (loss, grad) = loss_grad(cfg.loss, &pred, &gt)?;
                if !loss.is_finite() {
                    return Err(Error::state(format!(
                        "non-finite loss at epoch {} window {} (param norm {:.3e}, grad norm {:.3e})",
                        epoch + 1,
                        idx,
                        pipeline.model().params().global_value_norm(),
                        pipeline.model().params().global_grad_norm()
                    )));
                }
                batch_loss += loss;
                pipeline.backward(&tape, &grad)?;
            }
            // average the summed sample gradients before clipping
            pipeline.model_mut().params_mut().scale_grads(1.0 / batch.len() as f64);
            clip_gradients(pipeline.model_mut().params_mut(), &cfg.clip);
            adam_step(pipeline.model_mut().params_mut(), &mut adam, lr)?;
            steps_taken += 1;
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::state(format!(
                "non-finite epoch loss at epoch {} (param norm {:.3e})",
                epoch + 1,
                pipeline.model().params().global_value_norm()
            )));
        }
        let val = eval_val(pipeline)?;
        log.records.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            train_loss,
            val_metric: val,
            wallclock_seconds: started.elapsed().as_secs_f64(),
        });
        match (val, best_val) {
            (Some(v), Some(b)) if v < b => {
                best_val = Some(v);
                best_values = pipeline.model().params().snapshot_values();
                best_epoch = epoch + 1;
            }
            _ => {}
        }
    }

    let selected_epoch = if val_set.is_some() {
        pipeline.model_mut().params_mut().restore_values(&best_values)?;
        best_epoch
    } else {
        cfg.epochs
    };
    Ok(TrainOutcome { log, selected_epoch, steps_taken })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_sequence;
    use crate::pipeline::{build_variant, ArchConfig, PipelineDims, VariantConfig};

    fn tiny_setup(seed: u64) -> (Pipeline, WindowedDataset) {
        let mut rng = SeededRng::new(seed);
        let sequences: Vec<Trajectory> =
            (0..2).map(|_| generate_sequence(4, 14, &mut rng)).collect();
        let data = WindowedDataset::new(sequences, 5, 5, 1).unwrap();
        let dims = PipelineDims { channels: 4, n_observed: 5, n_future: 5, dct_coeffs: 10 };
        let arch = ArchConfig { width: 8, blocks: 1, use_bias: true };
        let pipeline =
            build_variant(VariantConfig::default(), dims, arch, None, &mut rng).unwrap();
        (pipeline, data)
    }

    #[test]
    fn epoch_zero_val_equals_baseline_at_full_rank() {
        let (mut pipeline, data) = tiny_setup(64);
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::new(LossKind::Angle, 4)
        };
        let outcome = train(&mut pipeline, &data, Some(&data), &cfg).unwrap();
        let epoch0 = outcome.log.records[0].val_metric.unwrap();
        let baseline = baseline_metric(&data, cfg.val_metric).unwrap();
        assert!(
            (epoch0 - baseline).abs() < 1e-8,
            "epoch0 {epoch0} vs baseline {baseline}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let (mut pipeline, data) = tiny_setup(99);
            let cfg = TrainConfig {
                epochs: 3,
                batch_size: 4,
                ..TrainConfig::new(LossKind::Angle, 4)
            };
            let outcome = train(&mut pipeline, &data, Some(&data), &cfg).unwrap();
            let losses: Vec<f64> = outcome.log.records.iter().map(|r| r.train_loss).collect();
            let params: Vec<f64> = pipeline
                .model()
                .params()
                .iter()
                .flat_map(|e| e.value.data().to_vec())
                .collect();
            (losses, params)
        };
        let (l1, p1) = run();
        let (l2, p2) = run();
        assert_eq!(l1, l2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn one_small_step_decreases_loss() {
        // The squared 3D loss is smooth, so a single full-batch step at a
        // small learning rate must strictly descend.
        let mut rng = SeededRng::new(5);
        let sequences: Vec<Trajectory> =
            (0..2).map(|_| generate_sequence(6, 14, &mut rng)).collect();
        let data = WindowedDataset::new(sequences, 5, 5, 1).unwrap();
        let dims = PipelineDims { channels: 6, n_observed: 5, n_future: 5, dct_coeffs: 10 };
        let arch = ArchConfig { width: 8, blocks: 1, use_bias: true };
        let mut pipeline =
            build_variant(VariantConfig::default(), dims, arch, None, &mut rng).unwrap();
        let before = dataset_loss(&pipeline, &data, LossKind::Mpjpe).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: data.len(),
            schedule: LrSchedule { base_lr: 1e-5, decay: 1.0, decay_every: 1 },
            ..TrainConfig::new(LossKind::Mpjpe, 6)
        };
        train(&mut pipeline, &data, None, &cfg).unwrap();
        let after = dataset_loss(&pipeline, &data, LossKind::Mpjpe).unwrap();
        assert!(after < before, "loss {before} -> {after}");
    }

    #[test]
    fn overfit_single_sequence_mostly_monotone() {
        let mut rng = SeededRng::new(12);
        let data =
            WindowedDataset::new(vec![generate_sequence(4, 10, &mut rng)], 5, 5, 1).unwrap();
        let dims = PipelineDims { channels: 4, n_observed: 5, n_future: 5, dct_coeffs: 10 };
        let arch = ArchConfig { width: 16, blocks: 1, use_bias: true };
        let mut pipeline =
            build_variant(VariantConfig::default(), dims, arch, None, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 10, batch_size: 16, ..TrainConfig::new(LossKind::Angle, 4) };
        let outcome = train(&mut pipeline, &data, None, &cfg).unwrap();
        let losses: Vec<f64> = outcome.log.records.iter().map(|r| r.train_loss).collect();
        let mut non_monotone = 0;
        for w in losses.windows(2) {
            if w[1] > w[0] {
                non_monotone += 1;
            }
        }
        assert!(non_monotone <= 2, "losses {losses:?}");
        assert!(losses.last().unwrap() < losses.first().unwrap());
    }
}
