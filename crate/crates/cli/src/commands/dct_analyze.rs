//! Coefficient-count study: reconstruction error of one sequence as a
//! function of how many DCT coefficients are kept.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use trajgcn::data::read_sequence;
use trajgcn::dct::{build_basis, dct, idct};
use trajgcn::error::Result;

use crate::commands::common::emit;

pub struct DctAnalyzeArgs<'a> {
    pub input: &'a Path,
    pub max_coeffs: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn run(args: &DctAnalyzeArgs) -> Result<()> {
    let seq = read_sequence(args.input)?;
    let traj = seq.values;
    let frames = traj.frames();
    let max_coeffs = args.max_coeffs.unwrap_or(frames).min(frames);

    let rms = (traj.values().frobenius_sq() / traj.values().len() as f64).sqrt();
    let mut csv = String::from("num_coeffs,mean_abs_error,relative_error\n");
    for l in 1..=max_coeffs {
        let basis = build_basis(frames, l)?;
        let back = idct(&dct(&traj, &basis)?, &basis)?;
        let mean_abs: f64 = back
            .values()
            .data()
            .iter()
            .zip(traj.values().data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / traj.values().len() as f64;
        let relative = if rms > 0.0 { mean_abs / rms } else { 0.0 };
        writeln!(csv, "{l},{mean_abs:.12e},{relative:.12e}").expect("writing to string cannot fail");
    }
    emit(args.out.as_deref(), &csv)
}
