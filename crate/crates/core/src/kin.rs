//! Pose representations and preprocessing: exponential map, rotation
//! matrices, Euler angles, forward kinematics over a kinematic tree, and
//! the channel-level preprocessing (centering, constant-channel masking,
//! downsampling) applied before training.

use std::fmt::Write as _;
use std::path::Path;

use crate::dct::Trajectory;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// 3x3 rotation matrix as a fixed-size array, row-major.
pub type Rot3 = [[f64; 3]; 3];

pub const ROT3_IDENTITY: Rot3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn rot_mul(a: &Rot3, b: &Rot3) -> Rot3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn rot_apply(r: &Rot3, v: &[f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}

/// Rodrigues formula: rotation by `|v|` radians about `v/|v|`.
///
/// For tiny angles the sin(t)/t and (1-cos(t))/t^2 factors are evaluated by
/// series so the zero vector maps exactly to the identity.
pub fn expmap_to_rotmat(v: &[f64; 3]) -> Rot3 {
    let theta_sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let theta = theta_sq.sqrt();
    let (a, b) = if theta < 1e-8 {
        // sin(t)/t = 1 - t^2/6 + ...,  (1-cos t)/t^2 = 1/2 - t^2/24 + ...
        (1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
    };
    // R = I + a*[v]_x + b*[v]_x^2
    let (x, y, z) = (v[0], v[1], v[2]);
    [
        [
            1.0 + b * (-z * z - y * y),
            -a * z + b * x * y,
            a * y + b * x * z,
        ],
        [
            a * z + b * x * y,
            1.0 + b * (-z * z - x * x),
            -a * x + b * y * z,
        ],
        [
            -a * y + b * x * z,
            a * x + b * y * z,
            1.0 + b * (-y * y - x * x),
        ],
    ]
}

/// Euler angles `(rx, ry, rz)` composing as `R = Rz(rz) * Ry(ry) * Rx(rx)`
/// (intrinsic Z-then-Y-then-X).
pub fn euler_to_rotmat(angles: &[f64; 3]) -> Rot3 {
    let (sx, cx) = angles[0].sin_cos();
    let (sy, cy) = angles[1].sin_cos();
    let (sz, cz) = angles[2].sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    rot_mul(&rz, &rot_mul(&ry, &rx))
}

/// Threshold on the gimbal-lock pivot entry |R[2][0]|.
const GIMBAL_LOCK_EPS: f64 = 1e-7;

/// Decomposes a rotation into `(rx, ry, rz)` with `R = Rz * Ry * Rx`.
///
/// At gimbal lock (|R[2][0]| within 1e-7 of 1) only the sum or difference
/// of rx and rz is determined; the convention here zeroes rx and solves the
/// rest.
pub fn rotmat_to_euler(r: &Rot3) -> Result<[f64; 3]> {
    let ortho = rot_mul(r, &transpose3(r));
    let mut any_dev = 0.0_f64;
    for (i, row) in ortho.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            any_dev = any_dev.max((v - target).abs());
        }
    }
    if any_dev > 1e-6 {
        return Err(Error::data(format!(
            "matrix is not orthonormal (deviation {any_dev:.2e})"
        )));
    }
    let pivot = r[2][0];
    if pivot.abs() > 1.0 - GIMBAL_LOCK_EPS {
        // ry = +-pi/2; column 1 of R is unaffected by Ry, so rz comes from it.
        let ry = if pivot < 0.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            -std::f64::consts::FRAC_PI_2
        };
        let rz = (-r[0][1]).atan2(r[1][1]);
        Ok([0.0, ry, rz])
    } else {
        let ry = (-pivot).asin();
        let rx = r[2][1].atan2(r[2][2]);
        let rz = r[1][0].atan2(r[0][0]);
        Ok([rx, ry, rz])
    }
}

fn transpose3(r: &Rot3) -> Rot3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in r.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

/// One frame of exponential-map joint angles, three channels per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMapPose {
    channels: Vec<f64>,
}

impl ExpMapPose {
    pub fn new(channels: Vec<f64>) -> Result<Self> {
        if channels.is_empty() || channels.len() % 3 != 0 {
            return Err(Error::data(format!(
                "exponential-map pose needs 3 channels per joint, got {}",
                channels.len()
            )));
        }
        Ok(ExpMapPose { channels })
    }

    pub fn joint_count(&self) -> usize {
        self.channels.len() / 3
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }

    pub fn joint(&self, j: usize) -> [f64; 3] {
        [self.channels[3 * j], self.channels[3 * j + 1], self.channels[3 * j + 2]]
    }
}

/// One frame of Euler joint angles in the documented Z-Y-X order, three
/// channels per joint, laid out like [`ExpMapPose`].
#[derive(Debug, Clone, PartialEq)]
pub struct EulerPose {
    pub angles: Vec<f64>,
}

/// Skeleton topology: parent index per joint (root has none) and a bone
/// offset expressed in the parent frame, in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    parents: Vec<Option<usize>>,
    offsets: Vec<[f64; 3]>,
}

impl KinematicTree {
    /// Parents must form a forest with every parent index smaller than its
    /// child, so a single in-order pass is a valid topological traversal.
    pub fn new(parents: Vec<Option<usize>>, offsets: Vec<[f64; 3]>) -> Result<Self> {
        if parents.is_empty() || parents.len() != offsets.len() {
            return Err(Error::config(format!(
                "tree needs matching parents and offsets, got {} and {}",
                parents.len(),
                offsets.len()
            )));
        }
        for (j, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                if *p >= j {
                    return Err(Error::config(format!(
                        "joint {j} has parent {p}; parents must precede children"
                    )));
                }
            }
        }
        Ok(KinematicTree { parents, offsets })
    }

    /// Simple chain: joint j hangs off joint j-1 with a constant bone.
    pub fn chain(joints: usize, bone: [f64; 3]) -> Result<Self> {
        let parents = (0..joints).map(|j| if j == 0 { None } else { Some(j - 1) }).collect();
        let offsets = vec![bone; joints];
        KinematicTree::new(parents, offsets)
    }

    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parents[j]
    }

    pub fn offset(&self, j: usize) -> [f64; 3] {
        self.offsets[j]
    }

    /// Symmetric-normalized adjacency with self-loops over joints:
    /// D^{-1/2} (A + I) D^{-1/2}.
    pub fn normalized_adjacency(&self) -> Matrix {
        let j = self.joint_count();
        let mut a = Matrix::identity(j);
        for (child, parent) in self.parents.iter().enumerate() {
            if let Some(p) = parent {
                a.set(child, *p, 1.0);
                a.set(*p, child, 1.0);
            }
        }
        let degrees: Vec<f64> = (0..j)
            .map(|r| (0..j).map(|c| a.get(r, c)).sum::<f64>())
            .collect();
        let mut out = Matrix::zeros(j, j);
        for r in 0..j {
            for c in 0..j {
                let v = a.get(r, c);
                if v != 0.0 {
                    out.set(r, c, v / (degrees[r] * degrees[c]).sqrt());
                }
            }
        }
        out
    }

    /// The joint-level normalized adjacency broadcast to the three channels
    /// per joint (Kronecker product with the 3x3 identity), yielding a
    /// `3J x 3J` channel adjacency.
    pub fn channel_adjacency(&self) -> Matrix {
        let base = self.normalized_adjacency();
        let j = self.joint_count();
        let mut out = Matrix::zeros(3 * j, 3 * j);
        for r in 0..j {
            for c in 0..j {
                let v = base.get(r, c);
                if v != 0.0 {
                    for axis in 0..3 {
                        out.set(3 * r + axis, 3 * c + axis, v);
                    }
                }
            }
        }
        out
    }

    /// Serializes as one joint per line: `index parent_index x y z`, with
    /// -1 as the root's parent sentinel.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for j in 0..self.joint_count() {
            let parent = self.parents[j].map(|p| p as i64).unwrap_or(-1);
            let o = self.offsets[j];
            writeln!(text, "{} {} {:.17e} {:.17e} {:.17e}", j, parent, o[0], o[1], o[2])
                .expect("writing to string cannot fail");
        }
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut parents = Vec::new();
        let mut offsets = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::data(format!(
                    "tree line {}: expected 'index parent x y z', got '{line}'",
                    lineno + 1
                )));
            }
            let idx: usize = fields[0]
                .parse()
                .map_err(|_| Error::data(format!("tree line {}: bad index", lineno + 1)))?;
            if idx != parents.len() {
                return Err(Error::data(format!(
                    "tree line {}: joints must be listed in order",
                    lineno + 1
                )));
            }
            let parent: i64 = fields[1]
                .parse()
                .map_err(|_| Error::data(format!("tree line {}: bad parent", lineno + 1)))?;
            let mut offset = [0.0; 3];
            for (k, f) in fields[2..5].iter().enumerate() {
                offset[k] = f.parse().map_err(|_| {
                    Error::data(format!("tree line {}: bad offset value", lineno + 1))
                })?;
            }
            parents.push(if parent < 0 { None } else { Some(parent as usize) });
            offsets.push(offset);
        }
        KinematicTree::new(parents, offsets)
    }
}

/// One frame of 3D joint positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose3d {
    pub positions: Vec<[f64; 3]>,
}

/// A sequence of 3D poses; converts to and from the channel-major
/// trajectory layout (channel 3j+c = coordinate c of joint j).
#[derive(Debug, Clone, PartialEq)]
pub struct Pose3dSequence {
    joints: usize,
    frames: Vec<Vec<[f64; 3]>>,
}

impl Pose3dSequence {
    pub fn new(frames: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        if frames.is_empty() || frames[0].is_empty() {
            return Err(Error::data("pose sequence needs at least one frame and joint".to_string()));
        }
        let joints = frames[0].len();
        if frames.iter().any(|f| f.len() != joints) {
            return Err(Error::data("pose sequence has ragged frames".to_string()));
        }
        Ok(Pose3dSequence { joints, frames })
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, n: usize) -> &[[f64; 3]] {
        &self.frames[n]
    }

    pub fn to_trajectory(&self) -> Result<Trajectory> {
        let mut m = Matrix::zeros(3 * self.joints, self.frames.len());
        for (n, frame) in self.frames.iter().enumerate() {
            for (j, p) in frame.iter().enumerate() {
                for c in 0..3 {
                    m.set(3 * j + c, n, p[c]);
                }
            }
        }
        Trajectory::new(m)
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        if traj.channels() % 3 != 0 {
            return Err(Error::shape(format!(
                "3D sequence needs channels in xyz triples, got {}",
                traj.channels()
            )));
        }
        let joints = traj.channels() / 3;
        let frames = (0..traj.frames())
            .map(|n| {
                (0..joints)
                    .map(|j| {
                        [
                            traj.values().get(3 * j, n),
                            traj.values().get(3 * j + 1, n),
                            traj.values().get(3 * j + 2, n),
                        ]
                    })
                    .collect()
            })
            .collect();
        Pose3dSequence::new(frames)
    }
}

/// Composes rotations down the tree: the root sits at its own offset and
/// every child at `parent_position + parent_global_rotation * offset`.
pub fn forward_kinematics(pose: &ExpMapPose, tree: &KinematicTree) -> Result<Pose3d> {
    if pose.joint_count() != tree.joint_count() {
        return Err(Error::shape(format!(
            "pose has {} joints, tree has {}",
            pose.joint_count(),
            tree.joint_count()
        )));
    }
    let j = tree.joint_count();
    let mut global_rot = vec![ROT3_IDENTITY; j];
    let mut positions = vec![[0.0; 3]; j];
    for joint in 0..j {
        let local = expmap_to_rotmat(&pose.joint(joint));
        match tree.parent(joint) {
            None => {
                global_rot[joint] = local;
                positions[joint] = tree.offset(joint);
            }
            Some(p) => {
                global_rot[joint] = rot_mul(&global_rot[p], &local);
                let limb = rot_apply(&global_rot[p], &tree.offset(joint));
                let base = positions[p];
                positions[joint] = [base[0] + limb[0], base[1] + limb[1], base[2] + limb[2]];
            }
        }
    }
    Ok(Pose3d { positions })
}

/// Converts every frame of an exponential-map trajectory (channels in
/// per-joint triples) to Euler angles in the documented Z-Y-X order.
pub fn expmap_traj_to_euler(traj: &Trajectory) -> Result<Trajectory> {
    if traj.channels() % 3 != 0 {
        return Err(Error::shape(format!(
            "euler conversion needs channels in triples, got {}",
            traj.channels()
        )));
    }
    let mut out = Matrix::zeros(traj.channels(), traj.frames());
    for n in 0..traj.frames() {
        for j in 0..traj.channels() / 3 {
            let v = [
                traj.values().get(3 * j, n),
                traj.values().get(3 * j + 1, n),
                traj.values().get(3 * j + 2, n),
            ];
            let euler = rotmat_to_euler(&expmap_to_rotmat(&v))?;
            for c in 0..3 {
                out.set(3 * j + c, n, euler[c]);
            }
        }
    }
    Trajectory::new(out)
}

/// Which channels of the raw data survive preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMask {
    total: usize,
    retained: Vec<usize>,
}

impl ChannelMask {
    pub fn new(total: usize, retained: Vec<usize>) -> Result<Self> {
        if retained.is_empty() {
            return Err(Error::data("mask retains no channels".to_string()));
        }
        if retained.windows(2).any(|w| w[0] >= w[1]) || *retained.last().unwrap() >= total {
            return Err(Error::data("mask indices must be strictly increasing and in range".to_string()));
        }
        Ok(ChannelMask { total, retained })
    }

    pub fn identity(total: usize) -> Self {
        ChannelMask { total, retained: (0..total).collect() }
    }

    pub fn total_channels(&self) -> usize {
        self.total
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn retained_count(&self) -> usize {
        self.retained.len()
    }

    pub fn is_identity(&self) -> bool {
        self.retained.len() == self.total
    }

    /// One retained channel index per line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for idx in &self.retained {
            writeln!(text, "{idx}").expect("writing to string cannot fail");
        }
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path, total: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut retained = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            retained.push(line.parse().map_err(|_| {
                Error::data(format!("mask line {}: bad channel index", lineno + 1))
            })?);
        }
        ChannelMask::new(total, retained)
    }
}

/// Preprocessing switches. Defaults drop nothing, center 3D data, and keep
/// every frame.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Keep every `downsample`-th frame, starting at the first.
    pub downsample: usize,
    /// Subtract the per-frame centroid over retained channels (3D data).
    /// Skipped when the data is already centered within 1e-9, which makes
    /// the operation idempotent bit-for-bit.
    pub center: bool,
    /// Drop the first three channels (the global rotation of mocap angle
    /// data).
    pub strip_global: bool,
    /// Channels whose sample standard deviation over the training split is
    /// below this are dropped and recorded in the mask.
    pub const_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            downsample: 1,
            center: false,
            strip_global: false,
            const_threshold: 1e-4,
        }
    }
}

/// Everything needed to undo the bookkeeping parts of preprocessing.
#[derive(Debug, Clone)]
pub struct PreprocessInfo {
    /// First raw frame (post-downsample), used to refill dropped channels.
    pub reference: Vec<f64>,
}

fn downsample(traj: &Trajectory, stride: usize) -> Result<Trajectory> {
    if stride <= 1 {
        return Ok(traj.clone());
    }
    let kept: Vec<usize> = (0..traj.frames()).step_by(stride).collect();
    let mut m = Matrix::zeros(traj.channels(), kept.len());
    for (out_col, src_col) in kept.iter().enumerate() {
        for k in 0..traj.channels() {
            m.set(k, out_col, traj.values().get(k, *src_col));
        }
    }
    Trajectory::new(m)
}

fn channel_stddev(traj: &Trajectory, k: usize) -> f64 {
    let f = traj.frames() as f64;
    let mean: f64 = (0..traj.frames()).map(|n| traj.values().get(k, n)).sum::<f64>() / f;
    let var: f64 = (0..traj.frames())
        .map(|n| {
            let d = traj.values().get(k, n) - mean;
            d * d
        })
        .sum::<f64>()
        / f;
    var.sqrt()
}

/// Computes a channel mask over one or more training sequences: channels
/// dropped are the stripped global block plus every channel whose standard
/// deviation stays below the threshold in all of the training data
/// combined.
pub fn fit_channel_mask(train: &[Trajectory], cfg: &PreprocessConfig) -> Result<ChannelMask> {
    if train.is_empty() {
        return Err(Error::data("no training sequences to fit the mask on".to_string()));
    }
    let total = train[0].channels();
    if train.iter().any(|t| t.channels() != total) {
        return Err(Error::data("training sequences disagree on channel count".to_string()));
    }
    let mut retained = Vec::new();
    for k in 0..total {
        if cfg.strip_global && k < 3 {
            continue;
        }
        // pooled variance across sequences: keep the channel if any
        // sequence moves it
        let moves = train.iter().any(|t| {
            let ds = downsample(t, cfg.downsample).expect("downsample of valid trajectory");
            channel_stddev(&ds, k) >= cfg.const_threshold
        });
        if moves {
            retained.push(k);
        }
    }
    if retained.is_empty() {
        return Err(Error::data("all channels are constant".to_string()));
    }
    ChannelMask::new(total, retained)
}

fn select_channels(traj: &Trajectory, mask: &ChannelMask) -> Result<Trajectory> {
    if traj.channels() != mask.total_channels() {
        return Err(Error::shape(format!(
            "mask covers {} channels, trajectory has {}",
            mask.total_channels(),
            traj.channels()
        )));
    }
    let mut m = Matrix::zeros(mask.retained_count(), traj.frames());
    for (row, &k) in mask.retained().iter().enumerate() {
        for n in 0..traj.frames() {
            m.set(row, n, traj.values().get(k, n));
        }
    }
    Trajectory::new(m)
}

fn center_frames(traj: &Trajectory) -> Trajectory {
    let k = traj.channels();
    let mut m = traj.values().clone();
    let mut max_centroid = 0.0_f64;
    let mut centroids = vec![0.0; traj.frames()];
    for (n, centroid) in centroids.iter_mut().enumerate() {
        *centroid = (0..k).map(|r| m.get(r, n)).sum::<f64>() / k as f64;
        max_centroid = max_centroid.max(centroid.abs());
    }
    // Already centered: leave bits untouched so preprocessing is idempotent.
    if max_centroid < 1e-9 {
        return traj.clone();
    }
    for (n, centroid) in centroids.iter().enumerate() {
        for r in 0..k {
            m.set(r, n, m.get(r, n) - centroid);
        }
    }
    Trajectory::new(m).expect("centering preserves finiteness")
}

/// Applies a fitted mask to one sequence: downsample, drop masked
/// channels, then center the retained channels if configured.
pub fn preprocess_apply(
    raw: &Trajectory,
    mask: &ChannelMask,
    cfg: &PreprocessConfig,
) -> Result<Trajectory> {
    let ds = downsample(raw, cfg.downsample)?;
    let selected = select_channels(&ds, mask)?;
    Ok(if cfg.center { center_frames(&selected) } else { selected })
}

/// Fits the mask on a single sequence and applies it, returning the
/// processed trajectory, the mask, and restoration metadata. Multi-sequence
/// training splits should use [`fit_channel_mask`] + [`preprocess_apply`]
/// so the mask is shared.
pub fn preprocess(
    raw: &Trajectory,
    cfg: &PreprocessConfig,
) -> Result<(Trajectory, ChannelMask, PreprocessInfo)> {
    let mask = fit_channel_mask(std::slice::from_ref(raw), cfg)?;
    let ds = downsample(raw, cfg.downsample)?;
    let info = PreprocessInfo { reference: ds.frame(0) };
    let processed = preprocess_apply(raw, &mask, cfg)?;
    Ok((processed, mask, info))
}

/// Re-expands a predicted trajectory to the full channel dimension:
/// retained channels pass through unchanged and dropped channels are
/// refilled with their reference-frame values.
pub fn restore_channels(
    pred: &Trajectory,
    mask: &ChannelMask,
    reference: &[f64],
) -> Result<Trajectory> {
    if pred.channels() != mask.retained_count() {
        return Err(Error::shape(format!(
            "prediction has {} channels, mask retains {}",
            pred.channels(),
            mask.retained_count()
        )));
    }
    if reference.len() != mask.total_channels() {
        return Err(Error::shape(format!(
            "reference frame has {} channels, mask covers {}",
            reference.len(),
            mask.total_channels()
        )));
    }
    let mut m = Matrix::zeros(mask.total_channels(), pred.frames());
    for (k, &value) in reference.iter().enumerate() {
        for n in 0..pred.frames() {
            m.set(k, n, value);
        }
    }
    for (row, &k) in mask.retained().iter().enumerate() {
        for n in 0..pred.frames() {
            m.set(k, n, pred.values().get(row, n));
        }
    }
    Trajectory::new(m)
}
