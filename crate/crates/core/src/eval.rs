//! Evaluation metrics at fixed millisecond horizons, and the zero-velocity
//! baseline every prediction is compared against.

use std::fmt::Write as _;

use crate::dct::Trajectory;
use crate::error::{Error, Result};
use crate::kin::Pose3dSequence;
use crate::matrix::Matrix;

/// Predicts `future_frames` copies of the last observed frame. The result
/// is a raw `channels x future_frames` matrix so that zero future frames
/// yield an empty prediction.
pub fn zero_velocity_predict(observed: &Trajectory, future_frames: usize) -> Matrix {
    let last = observed.last_frame();
    let mut m = Matrix::zeros(observed.channels(), future_frames);
    for (k, v) in last.iter().enumerate() {
        for n in 0..future_frames {
            m.set(k, n, *v);
        }
    }
    m
}

/// [`zero_velocity_predict`] wrapped as a trajectory; needs at least one
/// future frame.
pub fn zero_velocity_trajectory(observed: &Trajectory, future_frames: usize) -> Result<Trajectory> {
    Trajectory::new(zero_velocity_predict(observed, future_frames))
}

fn check_frame(frames: usize, frame_index: usize) -> Result<()> {
    if frame_index >= frames {
        return Err(Error::config(format!(
            "frame index {frame_index} out of range for {frames} frames"
        )));
    }
    Ok(())
}

/// L2 norm of the per-channel angle difference at one frame; both inputs
/// must already be in Euler representation.
pub fn euler_error_at(pred: &Trajectory, gt: &Trajectory, frame_index: usize) -> Result<f64> {
    if pred.values().shape() != gt.values().shape() {
        return Err(Error::shape(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.channels(),
            pred.frames(),
            gt.channels(),
            gt.frames()
        )));
    }
    check_frame(pred.frames(), frame_index)?;
    let mut sum = 0.0;
    for k in 0..pred.channels() {
        let d = pred.values().get(k, frame_index) - gt.values().get(k, frame_index);
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Mean over joints of the unsquared Euclidean distance at one frame, in
/// the data's units (millimeters for mocap). This is the reported metric;
/// the squared variant used as the training loss lives in the optimizer
/// module.
pub fn mpjpe_at(pred: &Pose3dSequence, gt: &Pose3dSequence, frame_index: usize) -> Result<f64> {
    if pred.joints() != gt.joints() || pred.frame_count() != gt.frame_count() {
        return Err(Error::shape(format!(
            "prediction has {} joints x {} frames, ground truth {} x {}",
            pred.joints(),
            pred.frame_count(),
            gt.joints(),
            gt.frame_count()
        )));
    }
    check_frame(pred.frame_count(), frame_index)?;
    let mut sum = 0.0;
    for (p, g) in pred.frame(frame_index).iter().zip(gt.frame(frame_index)) {
        sum += ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt();
    }
    Ok(sum / pred.joints() as f64)
}

/// [`mpjpe_at`] over channel-major trajectories grouped in xyz triples.
pub fn mpjpe_at_traj(pred: &Trajectory, gt: &Trajectory, frame_index: usize) -> Result<f64> {
    if pred.values().shape() != gt.values().shape() {
        return Err(Error::shape(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.channels(),
            pred.frames(),
            gt.channels(),
            gt.frames()
        )));
    }
    if pred.channels() % 3 != 0 {
        return Err(Error::shape(format!(
            "mpjpe needs channels in xyz triples, got {}",
            pred.channels()
        )));
    }
    check_frame(pred.frames(), frame_index)?;
    let joints = pred.channels() / 3;
    let mut sum = 0.0;
    for j in 0..joints {
        let mut d2 = 0.0;
        for c in 0..3 {
            let d = pred.values().get(3 * j + c, frame_index)
                - gt.values().get(3 * j + c, frame_index);
            d2 += d * d;
        }
        sum += d2.sqrt();
    }
    Ok(sum / joints as f64)
}

/// Maps millisecond horizons to 1-based frame indices in the predicted
/// window: `round_half_up(ms * fps / 1000)`. Errors when an index exceeds
/// the prediction length.
pub fn horizon_frames(fps: usize, horizons_ms: &[usize], prediction_frames: usize) -> Result<Vec<usize>> {
    if fps == 0 {
        return Err(Error::config("fps must be positive".to_string()));
    }
    let mut frames = Vec::with_capacity(horizons_ms.len());
    for &ms in horizons_ms {
        let idx = (ms * fps + 500) / 1000;
        if idx == 0 {
            return Err(Error::config(format!(
                "horizon {ms} ms is below one frame at {fps} fps"
            )));
        }
        if idx > prediction_frames {
            return Err(Error::config(format!(
                "horizon {ms} ms needs frame {idx} but only {prediction_frames} are predicted"
            )));
        }
        frames.push(idx);
    }
    Ok(frames)
}

/// One action row of a horizon report.
#[derive(Debug, Clone)]
pub struct HorizonRow {
    pub action: String,
    pub model: Vec<f64>,
    pub baseline: Vec<f64>,
}

/// Per-action, per-horizon error table with model and zero-velocity
/// baseline side by side, plus an Average row over actions.
#[derive(Debug, Clone)]
pub struct HorizonReport {
    pub horizons_ms: Vec<usize>,
    pub rows: Vec<HorizonRow>,
}

impl HorizonReport {
    pub fn new(horizons_ms: Vec<usize>, mut rows: Vec<HorizonRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::data("report needs at least one action".to_string()));
        }
        let h = horizons_ms.len();
        if rows.iter().any(|r| r.model.len() != h || r.baseline.len() != h) {
            return Err(Error::shape("report rows disagree with horizon count".to_string()));
        }
        let n = rows.len() as f64;
        let avg = HorizonRow {
            action: "Average".to_string(),
            model: (0..h).map(|i| rows.iter().map(|r| r.model[i]).sum::<f64>() / n).collect(),
            baseline: (0..h)
                .map(|i| rows.iter().map(|r| r.baseline[i]).sum::<f64>() / n)
                .collect(),
        };
        rows.push(avg);
        Ok(HorizonReport { horizons_ms, rows })
    }

    /// CSV with one row per action plus the Average row; model columns
    /// first, then the zero-velocity baseline columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("action");
        for ms in &self.horizons_ms {
            write!(out, ",model_{ms}ms").expect("writing to string cannot fail");
        }
        for ms in &self.horizons_ms {
            write!(out, ",zerovel_{ms}ms").expect("writing to string cannot fail");
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{}", row.action).expect("writing to string cannot fail");
            for v in &row.model {
                write!(out, ",{v:.6}").expect("writing to string cannot fail");
            }
            for v in &row.baseline {
                write!(out, ",{v:.6}").expect("writing to string cannot fail");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rows: &[Vec<f64>]) -> Trajectory {
        Trajectory::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn zero_velocity_repeats_last_frame() {
        let obs = traj(&[vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 5.0]]);
        let pred = zero_velocity_predict(&obs, 4);
        for n in 0..4 {
            assert_eq!(pred.get(0, n), 3.0);
            assert_eq!(pred.get(1, n), 5.0);
        }
    }

    #[test]
    fn zero_velocity_zero_future_is_empty() {
        let obs = traj(&[vec![1.0, 2.0]]);
        let m = zero_velocity_predict(&obs, 0);
        assert_eq!(m.shape(), (1, 0));
    }

    #[test]
    fn zero_velocity_on_constant_sequence_has_zero_error() {
        let obs = traj(&[vec![0.5; 6]]);
        let pred = zero_velocity_trajectory(&obs, 3).unwrap();
        let gt = traj(&[vec![0.5; 3]]);
        assert_eq!(pred.values().max_abs_diff(gt.values()).unwrap(), 0.0);
    }

    #[test]
    fn euler_error_values() {
        let gt = traj(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(euler_error_at(&gt, &gt, 0).unwrap(), 0.0);

        let pred = traj(&[vec![0.3, 0.3], vec![0.0, 0.4]]);
        assert!((euler_error_at(&pred, &gt, 0).unwrap() - 0.3).abs() < 1e-15);
        assert!((euler_error_at(&pred, &gt, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn euler_error_frame_out_of_range() {
        let t = traj(&[vec![0.0, 0.0]]);
        assert!(euler_error_at(&t, &t, 2).is_err());
    }

    #[test]
    fn mpjpe_hand_values() {
        // two joints, one off by (3,4,0): mean distance 5/2
        let gt = traj(&[vec![0.0], vec![0.0], vec![0.0], vec![1.0], vec![1.0], vec![1.0]]);
        let pred =
            traj(&[vec![3.0], vec![4.0], vec![0.0], vec![1.0], vec![1.0], vec![1.0]]);
        assert!((mpjpe_at_traj(&pred, &gt, 0).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn mpjpe_rigid_translation_is_exact_norm() {
        let gt = traj(&[
            vec![0.1, 0.9],
            vec![0.4, -0.3],
            vec![2.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.6, 0.6],
            vec![0.0, 3.0],
        ]);
        let d = [1.0, 2.0, 2.0]; // norm 3
        let mut shifted = gt.values().clone();
        for k in 0..6 {
            for n in 0..2 {
                shifted.set(k, n, shifted.get(k, n) + d[k % 3]);
            }
        }
        let pred = Trajectory::new(shifted).unwrap();
        for n in 0..2 {
            assert!((mpjpe_at_traj(&pred, &gt, n).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mpjpe_invariant_under_joint_permutation() {
        let gt = traj(&[
            vec![0.1],
            vec![0.2],
            vec![0.3],
            vec![1.0],
            vec![2.0],
            vec![3.0],
        ]);
        let pred = traj(&[
            vec![0.4],
            vec![0.1],
            vec![0.0],
            vec![1.5],
            vec![2.5],
            vec![2.0],
        ]);
        let base = mpjpe_at_traj(&pred, &gt, 0).unwrap();
        // swap the two joints in both
        let swap = |t: &Trajectory| {
            let mut rows: Vec<Vec<f64>> = (0..6).map(|k| t.values().row(k).to_vec()).collect();
            rows.rotate_left(3);
            traj(&rows)
        };
        let swapped = mpjpe_at_traj(&swap(&pred), &swap(&gt), 0).unwrap();
        assert!((base - swapped).abs() < 1e-15);
    }

    #[test]
    fn horizon_frames_at_25_fps() {
        let frames = horizon_frames(25, &[80, 160, 320, 400, 560, 1000], 25).unwrap();
        assert_eq!(frames, vec![2, 4, 8, 10, 14, 25]);
    }

    #[test]
    fn horizon_beyond_prediction_is_an_error() {
        assert!(horizon_frames(25, &[1000], 10).is_err());
    }

    #[test]
    fn report_appends_average_row() {
        let report = HorizonReport::new(
            vec![80, 160],
            vec![
                HorizonRow {
                    action: "a".to_string(),
                    model: vec![1.0, 2.0],
                    baseline: vec![2.0, 4.0],
                },
                HorizonRow {
                    action: "b".to_string(),
                    model: vec![3.0, 4.0],
                    baseline: vec![6.0, 8.0],
                },
            ],
        )
        .unwrap();
        assert_eq!(report.rows.len(), 3);
        let avg = &report.rows[2];
        assert_eq!(avg.action, "Average");
        assert_eq!(avg.model, vec![2.0, 3.0]);
        assert_eq!(avg.baseline, vec![4.0, 6.0]);
        let csv = report.to_csv();
        assert!(csv.starts_with("action,model_80ms,model_160ms,zerovel_80ms,zerovel_160ms\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn zero_velocity_error_grows_linearly_on_constant_velocity_data() {
        // channel moving at constant velocity v: baseline error at horizon
        // h is exactly v*h
        let v = 0.25;
        let obs = traj(&[(0..5).map(|n| v * n as f64).collect()]);
        let pred = zero_velocity_predict(&obs, 6);
        let gt = traj(&[(5..11).map(|n| v * n as f64).collect()]);
        for h in 1..=6usize {
            let err = (pred.get(0, h - 1) - gt.values().get(0, h - 1)).abs();
            assert!((err - v * h as f64).abs() < 1e-9);
        }
    }
}
