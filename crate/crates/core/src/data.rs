//! Canonical sequence files, sliding-window datasets, and the synthetic
//! smooth-motion generator used for desk-scale training and evaluation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dct::Trajectory;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

/// Pose representation of a sequence file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    ExpMap,
    Xyz,
}

impl Repr {
    pub fn as_str(&self) -> &'static str {
        match self {
            Repr::ExpMap => "expmap",
            Repr::Xyz => "xyz",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "expmap" => Ok(Repr::ExpMap),
            "xyz" => Ok(Repr::Xyz),
            other => Err(Error::data(format!("unknown representation '{other}'"))),
        }
    }
}

/// One motion sequence: a header describing its layout plus `frames` lines
/// of `channels` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFile {
    pub fps: usize,
    pub repr: Repr,
    pub values: Trajectory,
}

impl SequenceFile {
    pub fn channels(&self) -> usize {
        self.values.channels()
    }

    pub fn frames(&self) -> usize {
        self.values.frames()
    }
}

/// Serializes with the header
/// `channels=<K> frames=<F> fps=<int> repr=<expmap|xyz>` followed by one
/// line per frame, 17 significant digits per value.
pub fn format_sequence(seq: &SequenceFile) -> String {
    let mut out = format!(
        "channels={} frames={} fps={} repr={}\n",
        seq.channels(),
        seq.frames(),
        seq.fps,
        seq.repr.as_str()
    );
    for n in 0..seq.frames() {
        for k in 0..seq.channels() {
            if k > 0 {
                out.push(' ');
            }
            write!(out, "{:.16e}", seq.values.values().get(k, n))
                .expect("writing to string cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn write_sequence(path: &Path, seq: &SequenceFile) -> Result<()> {
    std::fs::write(path, format_sequence(seq))?;
    Ok(())
}

pub fn parse_sequence(text: &str) -> Result<SequenceFile> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::data("empty sequence file".to_string()))?;
    let mut channels = None;
    let mut frames = None;
    let mut fps = None;
    let mut repr = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::data(format!("bad header field '{field}'")))?;
        match key {
            "channels" => {
                channels = Some(value.parse::<usize>().map_err(|_| {
                    Error::data(format!("bad channel count '{value}'"))
                })?)
            }
            "frames" => {
                frames = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| Error::data(format!("bad frame count '{value}'")))?,
                )
            }
            "fps" => {
                fps = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| Error::data(format!("bad fps '{value}'")))?,
                )
            }
            "repr" => repr = Some(Repr::parse(value)?),
            other => return Err(Error::data(format!("unknown header key '{other}'"))),
        }
    }
    let channels = channels.ok_or_else(|| Error::data("header misses channels".to_string()))?;
    let frames = frames.ok_or_else(|| Error::data("header misses frames".to_string()))?;
    let fps = fps.ok_or_else(|| Error::data("header misses fps".to_string()))?;
    let repr = repr.ok_or_else(|| Error::data("header misses repr".to_string()))?;

    let mut m = Matrix::zeros(channels, frames);
    let mut n = 0;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if n >= frames {
            return Err(Error::data(format!(
                "sequence has more than the declared {frames} frames"
            )));
        }
        let mut k = 0;
        for field in line.split_whitespace() {
            if k >= channels {
                return Err(Error::data(format!(
                    "frame {} has more than {channels} values",
                    n + 1
                )));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::data(format!("bad value '{field}' in frame {}", n + 1)))?;
            if !v.is_finite() {
                return Err(Error::data(format!("non-finite value in frame {}", n + 1)));
            }
            m.set(k, n, v);
            k += 1;
        }
        if k != channels {
            return Err(Error::data(format!(
                "frame {} has {k} values, expected {channels}",
                n + 1
            )));
        }
        n += 1;
    }
    if n != frames {
        return Err(Error::data(format!(
            "sequence has {n} frames, header declares {frames}"
        )));
    }
    Ok(SequenceFile { fps, repr, values: Trajectory::new(m)? })
}

pub fn read_sequence(path: &Path) -> Result<SequenceFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_sequence(&text)
}

/// Paths of all `.txt` sequences in a directory, sorted so every run sees
/// the same order.
pub fn list_sequences(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Action label of a sequence file: the stem up to the last underscore
/// (`walk_003.txt` -> `walk`), or the whole stem when there is none.
pub fn action_of(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sequence");
    match stem.rsplit_once('_') {
        Some((prefix, suffix)) if !prefix.is_empty() && suffix.chars().all(|c| c.is_ascii_digit()) => {
            prefix.to_string()
        }
        _ => stem.to_string(),
    }
}

/// Start offsets of every `window`-frame slice at the given stride.
pub fn window_starts(frames: usize, window: usize, stride: usize) -> Vec<usize> {
    if window > frames || stride == 0 {
        return Vec::new();
    }
    (0..=frames - window).step_by(stride).collect()
}

/// Windowed view over preprocessed sequences: every sample is a full
/// `(n_observed + n_future)`-frame ground-truth slice.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    sequences: Vec<Trajectory>,
    windows: Vec<(usize, usize)>,
    n_observed: usize,
    n_future: usize,
}

impl WindowedDataset {
    pub fn new(
        sequences: Vec<Trajectory>,
        n_observed: usize,
        n_future: usize,
        stride: usize,
    ) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::data("dataset needs at least one sequence".to_string()));
        }
        let channels = sequences[0].channels();
        if sequences.iter().any(|s| s.channels() != channels) {
            return Err(Error::data("sequences disagree on channel count".to_string()));
        }
        let window = n_observed + n_future;
        let mut windows = Vec::new();
        for (i, seq) in sequences.iter().enumerate() {
            for start in window_starts(seq.frames(), window, stride) {
                windows.push((i, start));
            }
        }
        if windows.is_empty() {
            return Err(Error::data(format!(
                "no sequence is long enough for {window}-frame windows"
            )));
        }
        Ok(WindowedDataset { sequences, windows, n_observed, n_future })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.sequences[0].channels()
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn n_future(&self) -> usize {
        self.n_future
    }

    /// Ground-truth window `idx` (observed plus future frames).
    pub fn window(&self, idx: usize) -> Result<Trajectory> {
        let (seq, start) = self.windows[idx];
        self.sequences[seq].slice_frames(start, self.n_observed + self.n_future)
    }

    /// The observed prefix of window `idx`.
    pub fn observed(&self, idx: usize) -> Result<Trajectory> {
        let (seq, start) = self.windows[idx];
        self.sequences[seq].slice_frames(start, self.n_observed)
    }

    /// At most `count` window indices, evenly spaced; 0 selects all.
    pub fn select_windows(&self, count: usize) -> Vec<usize> {
        if count == 0 || count >= self.len() {
            return (0..self.len()).collect();
        }
        (0..count).map(|i| i * self.len() / count).collect()
    }
}

/// Synthetic generator settings. Channels are sums of a small number of
/// random-phase sinusoids plus a linear drift, so nearly all of their
/// spectral energy sits in the first few DCT coefficients.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub sequences: usize,
    pub channels: usize,
    pub frames: usize,
    pub fps: usize,
    pub repr: Repr,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { sequences: 32, channels: 12, frames: 35, fps: 25, repr: Repr::Xyz }
    }
}

/// One smooth channel: 2-4 sinusoids below ~1.2 cycles per sequence plus a
/// linear ramp.
pub fn generate_channel(frames: usize, rng: &mut SeededRng) -> Vec<f64> {
    let parts = 2 + rng.index(3); // 2..=4
    let mut waves = Vec::with_capacity(parts);
    for _ in 0..parts {
        let cycles = rng.uniform(0.25, 1.2);
        let phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
        let amplitude = rng.uniform(0.3, 1.0);
        waves.push((cycles, phase, amplitude));
    }
    let offset = rng.uniform(-1.0, 1.0);
    let drift = rng.uniform(-0.8, 0.8);
    (0..frames)
        .map(|n| {
            let t = n as f64 / frames as f64;
            let mut v = offset + drift * t;
            for (cycles, phase, amplitude) in &waves {
                v += amplitude * (2.0 * std::f64::consts::PI * cycles * t + phase).cos();
            }
            v
        })
        .collect()
}

/// A full `channels x frames` synthetic sequence.
pub fn generate_sequence(channels: usize, frames: usize, rng: &mut SeededRng) -> Trajectory {
    let rows: Vec<Vec<f64>> = (0..channels).map(|_| generate_channel(frames, rng)).collect();
    Trajectory::new(Matrix::from_rows(&rows).expect("generator rows are rectangular"))
        .expect("generator output is finite")
}

/// Train/val/test split sizes for `n` sequences: roughly 70/15/15 with at
/// least one sequence per split when `n >= 3`.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    if n <= 2 {
        return (n, 0, 0);
    }
    let val = (n * 15 / 100).max(1);
    let test = (n * 15 / 100).max(1);
    (n - val - test, val, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::{build_basis, dct};

    #[test]
    fn sequence_round_trip_is_bit_exact() {
        let mut rng = SeededRng::new(100);
        let traj = generate_sequence(3, 7, &mut rng);
        let seq = SequenceFile { fps: 25, repr: Repr::ExpMap, values: traj };
        let text = format_sequence(&seq);
        let parsed = parse_sequence(&text).unwrap();
        assert_eq!(parsed, seq);
        // and the serialization itself is stable
        assert_eq!(format_sequence(&parsed), text);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(parse_sequence("").is_err());
        assert!(parse_sequence("channels=2 frames=1 fps=25 repr=xyz\n1.0\n").is_err());
        assert!(parse_sequence("channels=1 frames=2 fps=25 repr=xyz\n1.0\n").is_err());
        assert!(parse_sequence("channels=1 frames=1 fps=25 repr=wat\n1.0\n").is_err());
        assert!(parse_sequence("channels=1 frames=1 fps=25 repr=xyz\nnan\n").is_err());
    }

    #[test]
    fn action_comes_from_file_stem() {
        assert_eq!(action_of(Path::new("/tmp/walk_003.txt")), "walk");
        assert_eq!(action_of(Path::new("jump.txt")), "jump");
        assert_eq!(action_of(Path::new("wash_window_12.txt")), "wash_window");
    }

    #[test]
    fn window_starts_cover_stride() {
        assert_eq!(window_starts(10, 4, 1), vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(window_starts(10, 4, 3), vec![0, 3, 6]);
        assert_eq!(window_starts(3, 4, 1), Vec::<usize>::new());
    }

    #[test]
    fn windowed_dataset_slices_are_consistent() {
        let mut rng = SeededRng::new(4);
        let seqs = vec![generate_sequence(2, 12, &mut rng), generate_sequence(2, 9, &mut rng)];
        let ds = WindowedDataset::new(seqs, 4, 3, 1).unwrap();
        assert_eq!(ds.len(), (12 - 7 + 1) + (9 - 7 + 1));
        for idx in 0..ds.len() {
            let full = ds.window(idx).unwrap();
            let obs = ds.observed(idx).unwrap();
            assert_eq!(full.frames(), 7);
            assert_eq!(obs.frames(), 4);
            for k in 0..2 {
                for n in 0..4 {
                    assert_eq!(obs.values().get(k, n), full.values().get(k, n));
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_sequence(4, 20, &mut SeededRng::new(9));
        let b = generate_sequence(4, 20, &mut SeededRng::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn generator_energy_concentrates_in_low_coefficients() {
        // Contract of the generator: at F=35, the first 10 DCT coefficients
        // carry at least 95% of every channel's energy.
        let mut rng = SeededRng::new(2718);
        let frames = 35;
        let basis = build_basis(frames, frames).unwrap();
        for _ in 0..50 {
            let traj = generate_sequence(1, frames, &mut rng);
            let coeffs = dct(&traj, &basis).unwrap();
            let total: f64 = coeffs.values().data().iter().map(|c| c * c).sum();
            let low: f64 = coeffs.values().data()[..10].iter().map(|c| c * c).sum();
            assert!(low >= 0.95 * total, "low-frequency share {}", low / total);
        }
    }

    #[test]
    fn split_sizes_cover_all_sequences() {
        for n in [3, 10, 100, 257] {
            let (train, val, test) = split_sizes(n);
            assert_eq!(train + val + test, n);
            assert!(train >= 1 && val >= 1 && test >= 1);
        }
    }
}
