//! Gradient-check command: every analytic parameter gradient against
//! central finite differences of the configured loss.

use trajgcn::error::Result;
use trajgcn::gradcheck::{
    grad_check, grad_check_perturbed, GradCheckConfig, DEFAULT_TOLERANCE,
};

use crate::config::RunConfig;

pub struct GradcheckArgs<'a> {
    pub cfg: &'a RunConfig,
    /// Self-test fixture: scale the analytic gradients and expect failure.
    pub perturb: bool,
}

/// Returns whether the check passed; the caller maps that to the exit
/// status.
pub fn run(args: &GradcheckArgs) -> Result<bool> {
    let cfg = args.cfg;
    let gc = GradCheckConfig {
        channels: cfg.channels,
        n_observed: cfg.n_observed,
        n_future: cfg.n_future,
        dct_coeffs: cfg.resolved_dct_coeffs().min(cfg.n_observed + cfg.n_future),
        width: cfg.width,
        blocks: cfg.blocks,
        loss: cfg.loss_kind(),
        seed: cfg.seed,
        ..GradCheckConfig::new(cfg.loss_kind())
    };
    let report = if args.perturb { grad_check_perturbed(&gc)? } else { grad_check(&gc)? };
    for entry in &report.entries {
        println!(
            "{:<14} max_rel_error {:.3e}  (analytic {:.6e}, numeric {:.6e})",
            entry.name, entry.max_rel_error, entry.analytic_at_worst, entry.numeric_at_worst
        );
    }
    let passed = report.passes(DEFAULT_TOLERANCE);
    println!(
        "gradcheck {}: max relative error {:.3e} (tolerance {:.0e})",
        if passed { "PASS" } else { "FAIL" },
        report.max_rel_error,
        DEFAULT_TOLERANCE
    );
    Ok(passed)
}
