pub mod common;
pub mod dct_analyze;
pub mod eval;
pub mod gradcheck;
pub mod predict;
pub mod synth;
pub mod train;
