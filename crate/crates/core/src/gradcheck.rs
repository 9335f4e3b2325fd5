//! Central finite-difference verification of every analytic parameter
//! gradient, run through the complete prediction pipeline (padding, DCT,
//! network, residual composition, inverse DCT, loss).

use crate::data::generate_sequence;
use crate::error::{Error, Result};
use crate::optim::{loss_grad, LossKind};
use crate::pipeline::{build_variant, ArchConfig, Pipeline, PipelineDims, VariantConfig};
use crate::rng::SeededRng;

/// Ceilings keeping the finite-difference sweep cheap.
pub const MAX_CHANNELS: usize = 8;
pub const MAX_WIDTH: usize = 32;
pub const MAX_BLOCKS: usize = 2;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub channels: usize,
    pub n_observed: usize,
    pub n_future: usize,
    pub dct_coeffs: usize,
    pub width: usize,
    pub blocks: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub epsilon: f64,
    /// Scale of the generic perturbation applied to every parameter before
    /// probing.
    pub param_noise: f64,
    /// Scale applied to the synthetic probe window.
    pub data_scale: f64,
    /// Scale of the prediction-to-truth offset; sets the probe's loss
    /// magnitude and with it the finite-difference noise floor.
    pub offset_scale: f64,
}

impl GradCheckConfig {
    pub fn new(loss: LossKind) -> Self {
        GradCheckConfig {
            channels: 6,
            n_observed: 5,
            n_future: 5,
            dct_coeffs: 5,
            width: 16,
            blocks: 2,
            loss,
            seed: 1,
            epsilon: DEFAULT_EPSILON,
            param_noise: 0.05,
            data_scale: 0.05,
            offset_scale: 0.001,
        }
    }
}

/// Worst entry of one parameter's gradient comparison.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

/// Worst relative error per parameter, plus the overall maximum.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<ParamCheck>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

fn scalar_loss(
    pipeline: &Pipeline,
    observed: &crate::dct::Trajectory,
    gt: &crate::dct::Trajectory,
    loss: LossKind,
) -> Result<f64> {
    let pred = pipeline.predict(observed)?;
    loss_grad(loss, &pred, gt).map(|(l, _)| l)
}

/// Builds a tiny pipeline from the config, computes analytic gradients of
/// the scalar loss, and compares every parameter entry against a central
/// finite difference. Relative error uses
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    grad_check_scaled(cfg, 1.0)
}

/// Self-test fixture: runs the same comparison with the analytic gradients
/// deliberately scaled, to confirm the checker flags wrong gradients.
#[doc(hidden)]
pub fn grad_check_perturbed(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    grad_check_scaled(cfg, 1.5)
}

fn grad_check_scaled(cfg: &GradCheckConfig, analytic_scale: f64) -> Result<GradCheckReport> {
    if cfg.channels > MAX_CHANNELS || cfg.width > MAX_WIDTH || cfg.blocks > MAX_BLOCKS {
        return Err(Error::config(format!(
            "gradient check is limited to channels<={MAX_CHANNELS}, width<={MAX_WIDTH}, blocks<={MAX_BLOCKS}"
        )));
    }
    if cfg.loss == LossKind::Mpjpe && cfg.channels % 3 != 0 {
        return Err(Error::config(
            "3D loss needs a channel count divisible by 3".to_string(),
        ));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let dims = PipelineDims {
        channels: cfg.channels,
        n_observed: cfg.n_observed,
        n_future: cfg.n_future,
        dct_coeffs: cfg.dct_coeffs,
    };
    let arch = ArchConfig { width: cfg.width, blocks: cfg.blocks, use_bias: true };
    let mut pipeline = build_variant(VariantConfig::default(), dims, arch, None, &mut rng)?;

    // Give every parameter a generic value: the zero-initialized decoder
    // would hide gradient errors upstream of it. The probe scales are
    // deliberately small: the finite-difference noise is set by the ulp of
    // the prediction entries, so small activations keep the numeric
    // derivative accurate enough for the 1e-4 tolerance even on gradient
    // entries that cancel to zero.
    for id in pipeline.model().params().ids().collect::<Vec<_>>() {
        let m = pipeline.model_mut().params_mut().value_mut(id);
        for v in m.data_mut() {
            *v += rng.uniform(-cfg.param_noise, cfg.param_noise);
        }
    }

    let total = cfg.n_observed + cfg.n_future;
    let probe = crate::dct::Trajectory::new(
        generate_sequence(cfg.channels, total, &mut rng)
            .values()
            .scale(cfg.data_scale),
    )?;
    let observed = probe.slice_frames(0, cfg.n_observed)?;

    // Ground truth sits close to the network's own prediction. The loss
    // magnitude sets the cancellation noise of the central differences, so
    // a small loss keeps the numeric probe accurate while the gradient
    // structure stays generic. The offset magnitude is floored so no
    // prediction-minus-truth entry sits on the L1 kink within the probe
    // radius.
    let pred0 = pipeline.predict(&observed)?;
    let offset = generate_sequence(cfg.channels, total, &mut rng)
        .values()
        .map(|o| cfg.offset_scale * (o + 0.3_f64.copysign(o)));
    let gt_full = crate::dct::Trajectory::new(pred0.values().add(&offset)?)?;

    // analytic pass
    pipeline.model_mut().params_mut().zero_grads();
    let (pred, tape) = pipeline.forward(&observed)?;
    let (_, grad_pred) = loss_grad(cfg.loss, &pred, &gt_full)?;
    pipeline.backward(&tape, &grad_pred)?;
    let analytic: Vec<(String, Vec<f64>)> = pipeline
        .model()
        .params()
        .iter()
        .map(|e| {
            let grads = e.grad.data().iter().map(|g| g * analytic_scale).collect();
            (e.name.clone(), grads)
        })
        .collect();

    let mut entries = Vec::with_capacity(analytic.len());
    let mut max_rel = 0.0_f64;
    let ids: Vec<_> = pipeline.model().params().ids().collect();
    for (id, (name, grads)) in ids.into_iter().zip(analytic) {
        let mut check = ParamCheck {
            name,
            max_rel_error: 0.0,
            analytic_at_worst: 0.0,
            numeric_at_worst: 0.0,
        };
        for i in 0..grads.len() {
            let original = pipeline.model().params().value(id).data()[i];
            pipeline.model_mut().params_mut().value_mut(id).data_mut()[i] =
                original + cfg.epsilon;
            let up = scalar_loss(&pipeline, &observed, &gt_full, cfg.loss)?;
            pipeline.model_mut().params_mut().value_mut(id).data_mut()[i] =
                original - cfg.epsilon;
            let down = scalar_loss(&pipeline, &observed, &gt_full, cfg.loss)?;
            pipeline.model_mut().params_mut().value_mut(id).data_mut()[i] = original;
            let numeric = (up - down) / (2.0 * cfg.epsilon);
            let rel = (grads[i] - numeric).abs()
                / grads[i].abs().max(numeric.abs()).max(1e-8);
            if rel > check.max_rel_error {
                check.max_rel_error = rel;
                check.analytic_at_worst = grads[i];
                check.numeric_at_worst = numeric;
            }
        }
        max_rel = max_rel.max(check.max_rel_error);
        entries.push(check);
    }
    Ok(GradCheckReport { entries, max_rel_error: max_rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_pipeline_gradients_match() {
        let report = grad_check(&GradCheckConfig::new(LossKind::Angle)).unwrap();
        assert!(
            report.passes(DEFAULT_TOLERANCE),
            "max relative error {}",
            report.max_rel_error
        );
    }

    #[test]
    fn mpjpe_pipeline_gradients_match() {
        let report = grad_check(&GradCheckConfig::new(LossKind::Mpjpe)).unwrap();
        assert!(
            report.passes(DEFAULT_TOLERANCE),
            "max relative error {}",
            report.max_rel_error
        );
    }

    #[test]
    fn report_lists_every_parameter() {
        let cfg = GradCheckConfig { blocks: 1, width: 8, ..GradCheckConfig::new(LossKind::Angle) };
        let report = grad_check(&cfg).unwrap();
        // encoder + 2 block layers + decoder, each with A, W, b
        assert_eq!(report.entries.len(), 4 * 3);
    }

    #[test]
    fn oversized_dims_are_rejected() {
        let cfg = GradCheckConfig { width: 64, ..GradCheckConfig::new(LossKind::Angle) };
        assert!(grad_check(&cfg).is_err());
    }

    #[test]
    fn perturbed_gradient_is_detected() {
        let cfg = GradCheckConfig { blocks: 1, width: 8, ..GradCheckConfig::new(LossKind::Angle) };
        let report = grad_check_perturbed(&cfg).unwrap();
        assert!(
            !report.passes(DEFAULT_TOLERANCE),
            "perturbed gradients slipped through with max relative error {}",
            report.max_rel_error
        );
    }
}
