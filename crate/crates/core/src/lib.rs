//! Trajectory-space motion prediction.
//!
//! Pose sequences are encoded per channel as truncated DCT coefficients,
//! transformed by a residual graph convolutional network whose adjacency
//! matrices are fully learnable, and decoded back to pose space. The crate
//! also ships the training stack (ADAM, gradient clipping, stepped
//! learning-rate decay), evaluation metrics at millisecond horizons, the
//! zero-velocity baseline, kinematic conversions, and the ablation
//! variants of the full pipeline.

pub mod checkpoint;
pub mod data;
pub mod dct;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod gradcheck;
pub mod kin;
pub mod matrix;
pub mod optim;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use matrix::{tanh_map, Matrix};
pub use params::{global_l2_norm, ParamId, ParameterStore};
pub use rng::{uniform_init, xavier_init, SeededRng};

pub use dct::{
    build_basis, compose_residual, dct, idct, pad_replicate, DctBasis, DctCoefficients,
    Trajectory,
};
pub use gcn::{
    layer_forward, Activation, Connectivity, ForwardTape, GraphConvLayer, ModelConfig,
    MotionGcn, ResidualBlock,
};
pub use optim::{
    adam_step, clip_gradients, loss_angle, loss_mpjpe, loss_mpjpe_traj, lr_at, AdamState,
    ClipConfig, LossKind, LrSchedule,
};
pub use kin::{
    expmap_to_rotmat, expmap_traj_to_euler, forward_kinematics, preprocess, preprocess_apply,
    restore_channels, rotmat_to_euler, ChannelMask, ExpMapPose, KinematicTree, Pose3dSequence,
    PreprocessConfig,
};
pub use eval::{
    euler_error_at, horizon_frames, mpjpe_at, mpjpe_at_traj, zero_velocity_predict,
    HorizonReport, HorizonRow,
};
pub use pipeline::{
    build_variant, ArchConfig, ConnectivityMode, Pipeline, PipelineDims, VariantConfig,
};
pub use train::{
    baseline_metric, dataset_loss, train, validation_metric, TrainConfig, TrainOutcome,
    TrainingLog, ValMetricKind,
};
