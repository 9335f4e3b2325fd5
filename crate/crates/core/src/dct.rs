//! Temporal encoding in trajectory space.
//!
//! Each channel of a motion sequence is treated as a time series and
//! expressed in a truncated orthonormal DCT basis. Truncation lives in the
//! basis itself (only the first `num_coeffs` rows are materialized), so the
//! forward and inverse transforms are always shape-consistent and high
//! frequencies beyond the cut are irrecoverably dropped.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A `channels x frames` slab of per-channel trajectories. Row `k` holds
/// the time series of joint parameter `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: Matrix,
}

impl Trajectory {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::data("trajectory needs at least 1 channel and 1 frame".to_string()));
        }
        if !values.is_finite() {
            return Err(Error::data("trajectory contains non-finite values".to_string()));
        }
        Ok(Trajectory { values })
    }

    pub fn channels(&self) -> usize {
        self.values.rows()
    }

    pub fn frames(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    /// One frame (column) as a channel vector.
    pub fn frame(&self, n: usize) -> Vec<f64> {
        (0..self.channels()).map(|k| self.values.get(k, n)).collect()
    }

    pub fn last_frame(&self) -> Vec<f64> {
        self.frame(self.frames() - 1)
    }

    /// The sub-trajectory covering columns `[start, start + len)`.
    pub fn slice_frames(&self, start: usize, len: usize) -> Result<Trajectory> {
        if start + len > self.frames() || len == 0 {
            return Err(Error::shape(format!(
                "frame slice [{start}, {}) out of range for {} frames",
                start + len,
                self.frames()
            )));
        }
        let mut m = Matrix::zeros(self.channels(), len);
        for k in 0..self.channels() {
            for n in 0..len {
                m.set(k, n, self.values.get(k, start + n));
            }
        }
        Trajectory::new(m)
    }
}

/// Orthonormal DCT basis over `total_frames` samples, truncated to the
/// first `num_coeffs` frequencies.
///
/// Row `l` (1-based) of the forward matrix is
/// `sqrt(2/F) / sqrt(1 + delta(l,1)) * cos(pi*(2n-1)*(l-1) / (2F))`,
/// evaluated exactly as printed, with the 1-based indices mapped to 0-based
/// storage. The inverse transform is the transpose.
#[derive(Debug, Clone)]
pub struct DctBasis {
    total_frames: usize,
    num_coeffs: usize,
    forward: Matrix,
}

impl DctBasis {
    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn num_coeffs(&self) -> usize {
        self.num_coeffs
    }

    /// The `num_coeffs x total_frames` analysis matrix.
    pub fn forward(&self) -> &Matrix {
        &self.forward
    }
}

/// Builds the truncated orthonormal basis; requires
/// `1 <= num_coeffs <= total_frames`.
pub fn build_basis(total_frames: usize, num_coeffs: usize) -> Result<DctBasis> {
    if total_frames == 0 || num_coeffs == 0 || num_coeffs > total_frames {
        return Err(Error::config(format!(
            "need 1 <= num_coeffs <= total_frames, got num_coeffs={num_coeffs}, total_frames={total_frames}"
        )));
    }
    let f = total_frames as f64;
    let mut forward = Matrix::zeros(num_coeffs, total_frames);
    for l in 1..=num_coeffs {
        let norm = if l == 1 { 1.0 / 2.0_f64.sqrt() } else { 1.0 };
        for n in 1..=total_frames {
            let angle = std::f64::consts::PI * ((2 * n - 1) * (l - 1)) as f64 / (2.0 * f);
            forward.set(l - 1, n - 1, (2.0 / f).sqrt() * norm * angle.cos());
        }
    }
    Ok(DctBasis { total_frames, num_coeffs, forward })
}

/// Per-channel DCT coefficients, `channels x num_coeffs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DctCoefficients {
    values: Matrix,
}

impl DctCoefficients {
    pub fn new(values: Matrix) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::data("coefficients contain non-finite values".to_string()));
        }
        Ok(DctCoefficients { values })
    }

    pub fn channels(&self) -> usize {
        self.values.rows()
    }

    pub fn num_coeffs(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }
}

/// Forward transform: coefficients = values * forward^T.
pub fn dct(traj: &Trajectory, basis: &DctBasis) -> Result<DctCoefficients> {
    if traj.frames() != basis.total_frames() {
        return Err(Error::shape(format!(
            "trajectory has {} frames but basis covers {}",
            traj.frames(),
            basis.total_frames()
        )));
    }
    let coeffs = traj.values().matmul(&basis.forward().transpose())?;
    DctCoefficients::new(coeffs)
}

/// Inverse transform truncated at the basis width: values = coeffs * forward.
pub fn idct(coeffs: &DctCoefficients, basis: &DctBasis) -> Result<Trajectory> {
    if coeffs.num_coeffs() != basis.num_coeffs() {
        return Err(Error::shape(format!(
            "coefficients have {} columns but basis keeps {}",
            coeffs.num_coeffs(),
            basis.num_coeffs()
        )));
    }
    let values = coeffs.values().matmul(basis.forward())?;
    Trajectory::new(values)
}

/// Extends the trajectory by repeating its final frame `future_frames`
/// times.
pub fn pad_replicate(observed: &Trajectory, future_frames: usize) -> Trajectory {
    let k = observed.channels();
    let n = observed.frames();
    let mut m = Matrix::zeros(k, n + future_frames);
    for row in 0..k {
        for col in 0..n {
            m.set(row, col, observed.values().get(row, col));
        }
        let last = observed.values().get(row, n - 1);
        for col in n..n + future_frames {
            m.set(row, col, last);
        }
    }
    Trajectory { values: m }
}

/// Elementwise sum of input coefficients and a predicted residual.
pub fn compose_residual(
    input_coeffs: &DctCoefficients,
    residual: &DctCoefficients,
) -> Result<DctCoefficients> {
    let values = input_coeffs.values().add(residual.values()).map_err(|_| {
        Error::shape(format!(
            "residual shape {}x{} does not match input {}x{}",
            residual.channels(),
            residual.num_coeffs(),
            input_coeffs.channels(),
            input_coeffs.num_coeffs()
        ))
    })?;
    DctCoefficients::new(values)
}
