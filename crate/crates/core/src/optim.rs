//! Training losses, ADAM, global-norm gradient clipping, and the
//! epoch-indexed learning-rate schedule.

use crate::dct::Trajectory;
use crate::error::{Error, Result};
use crate::kin::Pose3dSequence;
use crate::matrix::Matrix;
use crate::params::ParameterStore;

/// Which training loss the pipeline optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean absolute error over all channels and frames (angle
    /// representations).
    Angle,
    /// Mean squared per-joint position error (3D coordinates; channels are
    /// grouped in xyz triples).
    Mpjpe,
}

fn check_traj_shapes(pred: &Trajectory, gt: &Trajectory) -> Result<()> {
    if pred.values().shape() != gt.values().shape() {
        return Err(Error::shape(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.channels(),
            pred.frames(),
            gt.channels(),
            gt.frames()
        )));
    }
    Ok(())
}

/// Average L1 distance over all channels and frames (observed and future
/// alike): sum |pred - gt| / (frames * channels).
pub fn loss_angle(pred: &Trajectory, gt: &Trajectory) -> Result<f64> {
    loss_angle_grad(pred, gt).map(|(l, _)| l)
}

/// [`loss_angle`] together with dLoss/dpred. The subgradient at exact ties
/// is taken as zero.
pub fn loss_angle_grad(pred: &Trajectory, gt: &Trajectory) -> Result<(f64, Matrix)> {
    check_traj_shapes(pred, gt)?;
    let scale = 1.0 / (pred.channels() * pred.frames()) as f64;
    let mut grad = Matrix::zeros(pred.channels(), pred.frames());
    let mut total = 0.0;
    for (i, (p, g)) in pred.values().data().iter().zip(gt.values().data()).enumerate() {
        let d = p - g;
        total += d.abs();
        grad.data_mut()[i] = scale * d.signum() * if d == 0.0 { 0.0 } else { 1.0 };
    }
    Ok((scale * total, grad))
}

/// Mean per-joint squared position error over all frames:
/// sum_n sum_j ||pred_jn - gt_jn||^2 / (J * frames). This is the training
/// loss; the reported MPJPE metric uses the unsquared distance and lives in
/// the evaluation module.
pub fn loss_mpjpe(pred: &Pose3dSequence, gt: &Pose3dSequence) -> Result<f64> {
    loss_mpjpe_traj(&pred.to_trajectory()?, &gt.to_trajectory()?)
}

/// [`loss_mpjpe`] over channel-major trajectories whose rows are grouped in
/// xyz triples.
pub fn loss_mpjpe_traj(pred: &Trajectory, gt: &Trajectory) -> Result<f64> {
    loss_mpjpe_traj_grad(pred, gt).map(|(l, _)| l)
}

/// [`loss_mpjpe_traj`] together with dLoss/dpred.
pub fn loss_mpjpe_traj_grad(pred: &Trajectory, gt: &Trajectory) -> Result<(f64, Matrix)> {
    check_traj_shapes(pred, gt)?;
    if pred.channels() % 3 != 0 {
        return Err(Error::shape(format!(
            "3D loss needs channels in xyz triples, got {}",
            pred.channels()
        )));
    }
    let joints = pred.channels() / 3;
    let scale = 1.0 / (joints * pred.frames()) as f64;
    let mut grad = Matrix::zeros(pred.channels(), pred.frames());
    let mut total = 0.0;
    for (i, (p, g)) in pred.values().data().iter().zip(gt.values().data()).enumerate() {
        let d = p - g;
        total += d * d;
        grad.data_mut()[i] = 2.0 * scale * d;
    }
    Ok((scale * total, grad))
}

/// Evaluates the configured loss with its gradient.
pub fn loss_grad(kind: LossKind, pred: &Trajectory, gt: &Trajectory) -> Result<(f64, Matrix)> {
    match kind {
        LossKind::Angle => loss_angle_grad(pred, gt),
        LossKind::Mpjpe => loss_mpjpe_traj_grad(pred, gt),
    }
}

/// Gradient clipping threshold on the global L2 norm.
#[derive(Debug, Clone, Copy)]
pub struct ClipConfig {
    pub max_norm: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig { max_norm: 1.0 }
    }
}

/// Scales every gradient by a common factor so the global L2 norm does not
/// exceed `max_norm`; returns the pre-clip norm.
pub fn clip_gradients(store: &mut ParameterStore, cfg: &ClipConfig) -> f64 {
    let norm = store.global_grad_norm();
    if norm > cfg.max_norm {
        store.scale_grads(cfg.max_norm / norm);
    }
    norm
}

/// Learning rate decayed by a fixed factor every `decay_every` epochs.
#[derive(Debug, Clone, Copy)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub decay: f64,
    pub decay_every: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule { base_lr: 0.0005, decay: 0.96, decay_every: 2 }
    }
}

/// base_lr * decay^floor(epoch / decay_every).
pub fn lr_at(schedule: &LrSchedule, epoch: usize) -> f64 {
    schedule.base_lr * schedule.decay.powi((epoch / schedule.decay_every) as i32)
}

/// ADAM moment estimates mirroring a parameter store.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(store: &ParameterStore) -> Self {
        let m = store.iter().map(|e| Matrix::zeros(e.value.rows(), e.value.cols())).collect();
        let v = store.iter().map(|e| Matrix::zeros(e.value.rows(), e.value.cols())).collect();
        AdamState { m, v, t: 0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One ADAM update over every parameter, followed by zeroing the
/// gradients:
///   t += 1
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
pub fn adam_step(store: &mut ParameterStore, state: &mut AdamState, lr: f64) -> Result<()> {
    if state.m.len() != store.len() {
        return Err(Error::state(format!(
            "optimizer tracks {} parameters, store has {}",
            state.m.len(),
            store.len()
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for (i, entry) in store.iter_mut().enumerate() {
        if state.m[i].shape() != entry.value.shape() {
            return Err(Error::state(format!(
                "optimizer state shape mismatch for '{}'",
                entry.name
            )));
        }
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let theta = entry.value.data_mut();
        let grad = entry.grad.data();
        for j in 0..theta.len() {
            let g = grad[j];
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            theta[j] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    store.zero_grads();
    Ok(())
}
