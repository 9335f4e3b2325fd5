//! Evaluation command: per-action error tables at millisecond horizons for
//! the trained model and the zero-velocity baseline side by side.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use trajgcn::checkpoint::load_checkpoint;
use trajgcn::data::WindowedDataset;
use trajgcn::dct::Trajectory;
use trajgcn::error::{Error, Result};
use trajgcn::eval::{
    euler_error_at, horizon_frames, mpjpe_at_traj, zero_velocity_trajectory, HorizonReport,
    HorizonRow,
};
use trajgcn::kin::{expmap_traj_to_euler, ChannelMask};
use trajgcn::pipeline::Pipeline;
use trajgcn::train::ValMetricKind;

use crate::commands::common::{build_pipeline, emit, load_split, preprocess_split};
use crate::commands::train::mask_path_for;
use crate::config::RunConfig;

pub struct EvalArgs<'a> {
    pub cfg: &'a RunConfig,
    pub checkpoint: &'a Path,
    pub mask: Option<PathBuf>,
    pub data_dir: &'a Path,
    pub out: Option<PathBuf>,
    pub horizons: Option<Vec<usize>>,
}

/// Error of one predicted window at a frame of the predicted range,
/// measured with the representation-appropriate metric.
fn metric_at(
    kind: ValMetricKind,
    pred: &Trajectory,
    gt: &Trajectory,
    frame: usize,
) -> Result<f64> {
    match kind {
        ValMetricKind::Mpjpe => mpjpe_at_traj(pred, gt, frame),
        ValMetricKind::Euler => {
            let pred_e = expmap_traj_to_euler(pred)?;
            let gt_e = expmap_traj_to_euler(gt)?;
            euler_error_at(&pred_e, &gt_e, frame)
        }
        ValMetricKind::ChannelL2 => {
            let mut sum = 0.0;
            for k in 0..pred.channels() {
                let d = pred.values().get(k, frame) - gt.values().get(k, frame);
                sum += d * d;
            }
            Ok(sum.sqrt())
        }
    }
}

/// Per-horizon mean errors of the model and the baseline over the windows
/// of one dataset.
fn evaluate_dataset(
    pipeline: &Pipeline,
    data: &WindowedDataset,
    frames: &[usize],
    kind: ValMetricKind,
    eval_windows: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let selected = data.select_windows(eval_windows);
    let mut model_sums = vec![0.0; frames.len()];
    let mut base_sums = vec![0.0; frames.len()];
    for &idx in &selected {
        let gt = data.window(idx)?;
        let observed = data.observed(idx)?;
        let pred = pipeline.predict(&observed)?;
        let baseline = zero_velocity_trajectory(&observed, data.n_future())?;
        for (h, &frame) in frames.iter().enumerate() {
            // frame is 1-based into the predicted range
            let full_idx = data.n_observed() + frame - 1;
            model_sums[h] += metric_at(kind, &pred, &gt, full_idx)?;
            let gt_future = gt.slice_frames(data.n_observed(), data.n_future())?;
            base_sums[h] += metric_at(kind, &baseline, &gt_future, frame - 1)?;
        }
    }
    let n = selected.len() as f64;
    Ok((
        model_sums.into_iter().map(|s| s / n).collect(),
        base_sums.into_iter().map(|s| s / n).collect(),
    ))
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let cfg = args.cfg;
    let test_split = load_split(&args.data_dir.join("test"), cfg)?;
    let total_channels = test_split.trajectories[0].channels();
    let mask_path = args.mask.clone().unwrap_or_else(|| mask_path_for(args.checkpoint));
    let mask = ChannelMask::load(&mask_path, total_channels)?;

    let mut pipeline = build_pipeline(cfg, mask.retained_count())?;
    load_checkpoint(args.checkpoint, pipeline.model_mut().params_mut())?;

    let horizons = args.horizons.clone().unwrap_or_else(|| cfg.resolved_horizons());
    let frames = horizon_frames(test_split.fps, &horizons, cfg.n_future)?;
    let kind = ValMetricKind::for_loss(cfg.loss_kind(), mask.retained_count());

    // group sequences by action
    let processed = preprocess_split(&test_split, &mask, cfg)?;
    let mut by_action: BTreeMap<String, Vec<Trajectory>> = BTreeMap::new();
    for (action, traj) in test_split.actions.iter().zip(processed) {
        by_action.entry(action.clone()).or_default().push(traj);
    }

    let mut rows = Vec::new();
    for (action, trajectories) in by_action {
        let data = WindowedDataset::new(trajectories, cfg.n_observed, cfg.n_future, 1)
            .map_err(|e| Error::data(format!("action '{action}': {e}")))?;
        let (model, baseline) =
            evaluate_dataset(&pipeline, &data, &frames, kind, cfg.eval_windows)?;
        rows.push(HorizonRow { action, model, baseline });
    }
    let report = HorizonReport::new(horizons, rows)?;
    emit(args.out.as_deref(), &report.to_csv())
}
