//! The composed prediction pipeline and its ablation variants.
//!
//! The default path is: replicate-pad the observed frames, transform to
//! truncated DCT coefficients, run the graph network, add the predicted
//! residual back onto the input coefficients, and invert the transform.
//! Each ablation switches off one stage:
//!
//! * `use_dct = false` feeds raw pose values in place of coefficients.
//! * `use_padding = false` encodes only the observed frames and the network
//!   predicts the full-sequence encoding directly (no residual composition
//!   is possible across the two different bases).
//! * `use_residual = false` drops the input-plus-residual composition.
//! * `FixedTree` freezes every adjacency to the normalized kinematic-tree
//!   connectivity; only weights and biases train.
//! * `FullyConnected` flattens the coefficient matrix to a single node and
//!   runs the two-layer residual multilayer perceptron with encode/decode
//!   layers.

use crate::dct::{
    build_basis, compose_residual, dct, idct, pad_replicate, DctBasis, DctCoefficients,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::gcn::{Connectivity, ForwardTape, ModelConfig, MotionGcn};
use crate::kin::KinematicTree;
use crate::matrix::Matrix;
use crate::rng::SeededRng;

/// Which graph structure the network uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectivityMode {
    /// A learnable dense adjacency per layer (the main model).
    Learned,
    /// Kinematic-tree adjacency, frozen; requires channels in xyz/joint
    /// triples and a tree.
    FixedTree,
    /// No graph at all: one node holding the flattened coefficient matrix.
    FullyConnected,
}

/// Ablation switches; the default reproduces the main model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariantConfig {
    pub use_dct: bool,
    pub use_padding: bool,
    pub use_residual: bool,
    pub connectivity: ConnectivityMode,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            use_dct: true,
            use_padding: true,
            use_residual: true,
            connectivity: ConnectivityMode::Learned,
        }
    }
}

/// Data-side dimensions of the prediction task.
#[derive(Debug, Clone, Copy)]
pub struct PipelineDims {
    /// Pose channels after preprocessing.
    pub channels: usize,
    /// Observed frames per window.
    pub n_observed: usize,
    /// Future frames to predict.
    pub n_future: usize,
    /// Retained DCT coefficients (ignored when `use_dct` is off).
    pub dct_coeffs: usize,
}

impl PipelineDims {
    pub fn total_frames(&self) -> usize {
        self.n_observed + self.n_future
    }
}

/// Network-side architecture knobs.
#[derive(Debug, Clone, Copy)]
pub struct ArchConfig {
    pub width: usize,
    pub blocks: usize,
    pub use_bias: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            width: crate::gcn::DEFAULT_WIDTH,
            blocks: crate::gcn::DEFAULT_BLOCKS,
            use_bias: true,
        }
    }
}

/// A model bound to its encoding stages. All predictions return the full
/// reconstructed window of `n_observed + n_future` frames.
#[derive(Debug, Clone)]
pub struct Pipeline {
    variant: VariantConfig,
    dims: PipelineDims,
    model: MotionGcn,
    /// Basis over the padded window, present when `use_dct` is on.
    basis_full: Option<DctBasis>,
    /// Basis over the observed window, present when `use_dct` is on and
    /// padding is off.
    basis_obs: Option<DctBasis>,
    /// Feature width leaving the model (per node, before flattening).
    f_out: usize,
}

/// Caches carried from [`Pipeline::forward`] to [`Pipeline::backward`].
#[derive(Debug)]
pub struct PipelineTape {
    model_tape: ForwardTape,
}

/// Assembles the requested ablation variant with freshly initialized
/// parameters. `tree` is required for [`ConnectivityMode::FixedTree`].
pub fn build_variant(
    variant: VariantConfig,
    dims: PipelineDims,
    arch: ArchConfig,
    tree: Option<&KinematicTree>,
    rng: &mut SeededRng,
) -> Result<Pipeline> {
    if dims.channels == 0 || dims.n_observed == 0 || dims.n_future == 0 {
        return Err(Error::config("pipeline dimensions must be positive".to_string()));
    }
    let total = dims.total_frames();
    let (f_in, f_out, basis_full, basis_obs) = if variant.use_dct {
        if dims.dct_coeffs == 0 || dims.dct_coeffs > total {
            return Err(Error::config(format!(
                "dct_coeffs must lie in 1..={total}, got {}",
                dims.dct_coeffs
            )));
        }
        let basis_full = build_basis(total, dims.dct_coeffs)?;
        if variant.use_padding {
            (dims.dct_coeffs, dims.dct_coeffs, Some(basis_full), None)
        } else {
            let l_in = dims.dct_coeffs.min(dims.n_observed);
            let basis_obs = build_basis(dims.n_observed, l_in)?;
            (l_in, dims.dct_coeffs, Some(basis_full), Some(basis_obs))
        }
    } else if variant.use_padding {
        (total, total, None, None)
    } else {
        (dims.n_observed, total, None, None)
    };

    let model_cfg = match variant.connectivity {
        ConnectivityMode::Learned => ModelConfig {
            nodes: dims.channels,
            f_in,
            f_out,
            width: arch.width,
            blocks: arch.blocks,
            use_bias: arch.use_bias,
            connectivity: Connectivity::Learned,
        },
        ConnectivityMode::FixedTree => {
            let tree = tree.ok_or_else(|| {
                Error::config("fixed-tree connectivity needs a kinematic tree".to_string())
            })?;
            let adjacency = tree.channel_adjacency();
            if adjacency.rows() != dims.channels {
                return Err(Error::config(format!(
                    "tree covers {} channels but the data has {}",
                    adjacency.rows(),
                    dims.channels
                )));
            }
            ModelConfig {
                nodes: dims.channels,
                f_in,
                f_out,
                width: arch.width,
                blocks: arch.blocks,
                use_bias: arch.use_bias,
                connectivity: Connectivity::Fixed(adjacency),
            }
        }
        // One node, flattened features, a single residual block of two
        // fully connected layers plus encode/decode layers. The 1x1
        // adjacency is frozen at identity, which reduces the layer to
        // H*W + b.
        ConnectivityMode::FullyConnected => ModelConfig {
            nodes: 1,
            f_in: dims.channels * f_in,
            f_out: dims.channels * f_out,
            width: arch.width,
            blocks: 1,
            use_bias: arch.use_bias,
            connectivity: Connectivity::Fixed(Matrix::identity(1)),
        },
    };

    let mut model = MotionGcn::new(&model_cfg)?;
    model.init_parameters(rng);

    Ok(Pipeline {
        variant,
        dims,
        model,
        basis_full,
        basis_obs,
        f_out,
    })
}

impl Pipeline {
    pub fn variant(&self) -> &VariantConfig {
        &self.variant
    }

    pub fn dims(&self) -> &PipelineDims {
        &self.dims
    }

    pub fn model(&self) -> &MotionGcn {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut MotionGcn {
        &mut self.model
    }

    fn check_observed(&self, observed: &Trajectory) -> Result<()> {
        if observed.channels() != self.dims.channels {
            return Err(Error::shape(format!(
                "pipeline expects {} channels, got {}",
                self.dims.channels,
                observed.channels()
            )));
        }
        if observed.frames() != self.dims.n_observed {
            return Err(Error::shape(format!(
                "pipeline expects {} observed frames, got {}",
                self.dims.n_observed,
                observed.frames()
            )));
        }
        Ok(())
    }

    /// Encodes the observed window into the model-input matrix (before any
    /// flattening), together with the coefficients used for residual
    /// composition when applicable.
    fn encode(&self, observed: &Trajectory) -> Result<Matrix> {
        let input = if self.variant.use_padding {
            pad_replicate(observed, self.dims.n_future)
        } else {
            observed.clone()
        };
        if self.variant.use_dct {
            let basis = if self.variant.use_padding {
                self.basis_full.as_ref().expect("basis exists when dct is on")
            } else {
                self.basis_obs.as_ref().expect("observed basis exists without padding")
            };
            Ok(dct(&input, basis)?.into_values())
        } else {
            Ok(input.into_values())
        }
    }

    /// Residual composition applies only when the input and output
    /// encodings live in the same basis, i.e. when padding is on.
    fn composes_residual(&self) -> bool {
        self.variant.use_residual && self.variant.use_padding
    }

    fn flatten(&self, m: &Matrix) -> Matrix {
        // row-major K x F -> 1 x (K*F)
        Matrix::from_vec(1, m.len(), m.data().to_vec()).expect("flatten preserves length")
    }

    fn unflatten(&self, m: &Matrix, cols: usize) -> Matrix {
        Matrix::from_vec(self.dims.channels, cols, m.data().to_vec())
            .expect("unflatten preserves length")
    }

    fn decode(&self, out_values: Matrix) -> Result<Trajectory> {
        if self.variant.use_dct {
            let basis = self.basis_full.as_ref().expect("basis exists when dct is on");
            idct(&DctCoefficients::new(out_values)?, basis)
        } else {
            Trajectory::new(out_values)
        }
    }

    /// Full forward pass to a reconstructed `channels x (N+T)` window,
    /// keeping the tape needed for [`backward`](Self::backward).
    pub fn forward(&self, observed: &Trajectory) -> Result<(Trajectory, PipelineTape)> {
        self.check_observed(observed)?;
        let encoded = self.encode(observed)?;
        let model_in = if self.variant.connectivity == ConnectivityMode::FullyConnected {
            self.flatten(&encoded)
        } else {
            encoded.clone()
        };
        let (model_out, model_tape) = self.model.forward(&model_in)?;
        let mut out_values = if self.variant.connectivity == ConnectivityMode::FullyConnected {
            self.unflatten(&model_out, self.f_out)
        } else {
            model_out
        };
        if self.composes_residual() {
            out_values = compose_residual(
                &DctCoefficients::new(encoded)?,
                &DctCoefficients::new(out_values)?,
            )?
            .into_values();
        }
        let pred = self.decode(out_values)?;
        Ok((pred, PipelineTape { model_tape }))
    }

    /// Forward pass without a tape.
    pub fn predict(&self, observed: &Trajectory) -> Result<Trajectory> {
        self.forward(observed).map(|(pred, _)| pred)
    }

    /// Propagates dLoss/dprediction back into the parameter gradients.
    pub fn backward(&mut self, tape: &PipelineTape, grad_pred: &Matrix) -> Result<()> {
        if grad_pred.shape() != (self.dims.channels, self.dims.total_frames()) {
            return Err(Error::shape(format!(
                "prediction gradient is {}x{}, window is {}x{}",
                grad_pred.rows(),
                grad_pred.cols(),
                self.dims.channels,
                self.dims.total_frames()
            )));
        }
        // Through the inverse transform: pred = coeffs * forward, so
        // d/dcoeffs = grad * forward^T. Residual composition passes the
        // gradient through unchanged.
        let grad_coeffs = if self.variant.use_dct {
            let basis = self.basis_full.as_ref().expect("basis exists when dct is on");
            grad_pred.matmul(&basis.forward().transpose())?
        } else {
            grad_pred.clone()
        };
        let grad_model_out = if self.variant.connectivity == ConnectivityMode::FullyConnected {
            self.flatten(&grad_coeffs)
        } else {
            grad_coeffs
        };
        self.model.backward(&tape.model_tape, &grad_model_out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn dims(channels: usize) -> PipelineDims {
        PipelineDims { channels, n_observed: 5, n_future: 5, dct_coeffs: 10 }
    }

    fn arch() -> ArchConfig {
        ArchConfig { width: 8, blocks: 1, use_bias: true }
    }

    fn observed(channels: usize, rng: &mut SeededRng) -> Trajectory {
        let mut m = Matrix::zeros(channels, 5);
        for v in m.data_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        Trajectory::new(m).unwrap()
    }

    #[test]
    fn default_variant_at_init_is_zero_velocity_at_full_rank() {
        let mut rng = SeededRng::new(21);
        let pipeline =
            build_variant(VariantConfig::default(), dims(3), arch(), None, &mut rng).unwrap();
        let obs = observed(3, &mut rng);
        let pred = pipeline.predict(&obs).unwrap();
        let padded = pad_replicate(&obs, 5);
        let diff = pred.values().max_abs_diff(padded.values()).unwrap();
        assert!(diff < 1e-10, "diff {diff}");
    }

    #[test]
    fn truncated_initial_prediction_matches_truncated_reconstruction() {
        let mut rng = SeededRng::new(22);
        let d = PipelineDims { channels: 3, n_observed: 5, n_future: 5, dct_coeffs: 6 };
        let pipeline =
            build_variant(VariantConfig::default(), d, arch(), None, &mut rng).unwrap();
        let obs = observed(3, &mut rng);
        let pred = pipeline.predict(&obs).unwrap();
        let padded = pad_replicate(&obs, 5);
        let basis = build_basis(10, 6).unwrap();
        let truncated = idct(&dct(&padded, &basis).unwrap(), &basis).unwrap();
        let diff = pred.values().max_abs_diff(truncated.values()).unwrap();
        assert!(diff < 1e-12);
    }

    #[test]
    fn all_variants_produce_full_windows() {
        let mut rng = SeededRng::new(23);
        let variants = [
            VariantConfig { use_dct: false, ..Default::default() },
            VariantConfig { use_padding: false, ..Default::default() },
            VariantConfig { use_residual: false, ..Default::default() },
            VariantConfig { connectivity: ConnectivityMode::FullyConnected, ..Default::default() },
        ];
        for v in variants {
            let pipeline = build_variant(v, dims(3), arch(), None, &mut rng).unwrap();
            let obs = observed(3, &mut rng);
            let pred = pipeline.predict(&obs).unwrap();
            assert_eq!(pred.channels(), 3);
            assert_eq!(pred.frames(), 10);
        }
    }

    #[test]
    fn fixed_tree_requires_tree_and_matching_channels() {
        let mut rng = SeededRng::new(24);
        let v = VariantConfig { connectivity: ConnectivityMode::FixedTree, ..Default::default() };
        assert!(build_variant(v, dims(6), arch(), None, &mut rng).is_err());
        let tree = crate::kin::KinematicTree::chain(2, [1.0, 0.0, 0.0]).unwrap();
        let ok = build_variant(v, dims(6), arch(), Some(&tree), &mut rng);
        assert!(ok.is_ok());
        let bad = build_variant(v, dims(5), arch(), Some(&tree), &mut rng);
        assert!(bad.is_err());
    }

    #[test]
    fn same_seed_builds_identical_pipelines() {
        let build = || {
            let mut rng = SeededRng::new(31);
            build_variant(VariantConfig::default(), dims(4), arch(), None, &mut rng).unwrap()
        };
        let a = build();
        let b = build();
        for (ea, eb) in a.model().params().iter().zip(b.model().params().iter()) {
            assert_eq!(ea.value, eb.value);
        }
        let mut rng = SeededRng::new(77);
        let obs = observed(4, &mut rng);
        assert_eq!(
            a.predict(&obs).unwrap().values().data(),
            b.predict(&obs).unwrap().values().data()
        );
    }

    #[test]
    fn fully_connected_parameter_count_matches_closed_form() {
        let mut rng = SeededRng::new(41);
        let d = dims(3); // K=3, L=10
        let v = VariantConfig { connectivity: ConnectivityMode::FullyConnected, ..Default::default() };
        let pipeline = build_variant(v, d, arch(), None, &mut rng).unwrap();
        let (kl, w) = (3 * 10, 8);
        // 4 layers of frozen 1x1 adjacency, encoder KL->w, one block of two
        // w->w layers, decoder w->KL, biases everywhere.
        let expect = 4 * 1 + (kl * w + w) + 2 * (w * w + w) + (w * kl + kl);
        assert_eq!(pipeline.model().param_count(), expect);
        assert_eq!(pipeline.model().trainable_param_count(), expect - 4);
    }

    #[test]
    fn no_padding_variant_uses_observed_basis() {
        let mut rng = SeededRng::new(51);
        let d = PipelineDims { channels: 2, n_observed: 5, n_future: 5, dct_coeffs: 8 };
        let v = VariantConfig { use_padding: false, ..Default::default() };
        let pipeline = build_variant(v, d, arch(), None, &mut rng).unwrap();
        // L_in is capped at the observed frame count
        assert_eq!(pipeline.model().f_in(), 5);
        assert_eq!(pipeline.model().f_out(), 8);
    }
}
