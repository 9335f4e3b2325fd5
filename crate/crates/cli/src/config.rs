//! `key=value` run configuration. Defaults reproduce the main model's
//! published training setup; every key can be overridden by the file.

use std::path::{Path, PathBuf};

use trajgcn::data::Repr;
use trajgcn::error::{Error, Result};
use trajgcn::optim::{ClipConfig, LossKind, LrSchedule};
use trajgcn::pipeline::{ArchConfig, ConnectivityMode, VariantConfig};
use trajgcn::kin::PreprocessConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_observed: usize,
    pub n_future: usize,
    /// Retained DCT coefficients; `None` resolves per representation and
    /// horizon (15/30 for 3D short/long, 20/35 for angles).
    pub dct_coeffs: Option<usize>,
    pub width: usize,
    pub blocks: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub batch: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    pub seed: u64,
    pub repr: Repr,
    pub use_dct: bool,
    pub use_padding: bool,
    pub use_residual: bool,
    pub connectivity: ConnectivityMode,
    pub use_bias: bool,
    pub tree_file: Option<PathBuf>,
    pub window_stride: usize,
    pub eval_windows: usize,
    /// Per-frame centering of 3D data; defaults to on for xyz.
    pub center: Option<bool>,
    pub strip_global: bool,
    pub const_threshold: f64,
    pub downsample: usize,
    pub horizons: Option<Vec<usize>>,
    /// Channel count for commands that build a model without data
    /// (gradient checking).
    pub channels: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_observed: 10,
            n_future: 10,
            dct_coeffs: None,
            width: 256,
            blocks: 12,
            lr: 0.0005,
            lr_decay: 0.96,
            decay_every: 2,
            batch: 16,
            epochs: 50,
            clip_norm: 1.0,
            seed: 1,
            repr: Repr::Xyz,
            use_dct: true,
            use_padding: true,
            use_residual: true,
            connectivity: ConnectivityMode::Learned,
            use_bias: true,
            tree_file: None,
            window_stride: 1,
            eval_windows: 0,
            center: None,
            strip_global: false,
            const_threshold: 1e-4,
            downsample: 1,
            horizons: None,
            channels: 6,
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "on" => Ok(true),
        "false" | "0" | "off" => Ok(false),
        _ => Err(Error::config(format!("{key} expects true/false, got '{value}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key} has invalid value '{value}'")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n_observed" => cfg.n_observed = parse_num(key, value)?,
                "n_future" => cfg.n_future = parse_num(key, value)?,
                "dct_coeffs" => cfg.dct_coeffs = Some(parse_num(key, value)?),
                "width" => cfg.width = parse_num(key, value)?,
                "blocks" => cfg.blocks = parse_num(key, value)?,
                "lr" => cfg.lr = parse_num(key, value)?,
                "lr_decay" => cfg.lr_decay = parse_num(key, value)?,
                "decay_every" => cfg.decay_every = parse_num(key, value)?,
                "batch" => cfg.batch = parse_num(key, value)?,
                "epochs" => cfg.epochs = parse_num(key, value)?,
                "clip_norm" => cfg.clip_norm = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "repr" => cfg.repr = Repr::parse(value).map_err(|_| {
                    Error::config(format!("repr expects expmap or xyz, got '{value}'"))
                })?,
                "use_dct" => cfg.use_dct = parse_bool(key, value)?,
                "use_padding" => cfg.use_padding = parse_bool(key, value)?,
                "use_residual" => cfg.use_residual = parse_bool(key, value)?,
                "connectivity" => {
                    cfg.connectivity = match value {
                        "learned" => ConnectivityMode::Learned,
                        "fixed_tree" => ConnectivityMode::FixedTree,
                        "fully_connected" => ConnectivityMode::FullyConnected,
                        _ => {
                            return Err(Error::config(format!(
                                "connectivity expects learned|fixed_tree|fully_connected, got '{value}'"
                            )))
                        }
                    }
                }
                "use_bias" => cfg.use_bias = parse_bool(key, value)?,
                "tree_file" => cfg.tree_file = Some(PathBuf::from(value)),
                "window_stride" => cfg.window_stride = parse_num(key, value)?,
                "eval_windows" => cfg.eval_windows = parse_num(key, value)?,
                "center" => cfg.center = Some(parse_bool(key, value)?),
                "strip_global" => cfg.strip_global = parse_bool(key, value)?,
                "const_threshold" => cfg.const_threshold = parse_num(key, value)?,
                "downsample" => cfg.downsample = parse_num(key, value)?,
                "horizons" => {
                    let mut hs = Vec::new();
                    for part in value.split(',') {
                        hs.push(parse_num("horizons", part.trim())?);
                    }
                    cfg.horizons = Some(hs);
                }
                "channels" => cfg.channels = parse_num(key, value)?,
                other => return Err(Error::config(format!("unknown config key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.n_observed == 0 || self.n_future == 0 {
            return Err(Error::config("n_observed and n_future must be positive".to_string()));
        }
        if self.batch == 0 || self.window_stride == 0 || self.downsample == 0 {
            return Err(Error::config(
                "batch, window_stride and downsample must be positive".to_string(),
            ));
        }
        if self.lr <= 0.0 || self.lr_decay <= 0.0 || self.clip_norm <= 0.0 {
            return Err(Error::config("lr, lr_decay and clip_norm must be positive".to_string()));
        }
        if let Some(l) = self.dct_coeffs {
            let total = self.n_observed + self.n_future;
            if l == 0 || l > total {
                return Err(Error::config(format!(
                    "dct_coeffs must lie in 1..={total}, got {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.n_observed + self.n_future
    }

    /// Coefficient count: explicit, or the published defaults (3D 15/30,
    /// angles 20/35 for short/long horizons), capped at the window length.
    pub fn resolved_dct_coeffs(&self) -> usize {
        if let Some(l) = self.dct_coeffs {
            return l;
        }
        let short = self.n_future <= 10;
        let default = match (self.repr, short) {
            (Repr::Xyz, true) => 15,
            (Repr::Xyz, false) => 30,
            (Repr::ExpMap, true) => 20,
            (Repr::ExpMap, false) => 35,
        };
        default.min(self.total_frames())
    }

    pub fn resolved_center(&self) -> bool {
        self.center.unwrap_or(self.repr == Repr::Xyz)
    }

    /// Default horizons: the short-term set, extended for long windows.
    pub fn resolved_horizons(&self) -> Vec<usize> {
        if let Some(h) = &self.horizons {
            return h.clone();
        }
        if self.n_future > 10 {
            vec![80, 160, 320, 400, 560, 1000]
        } else {
            vec![80, 160, 320, 400]
        }
    }

    pub fn loss_kind(&self) -> LossKind {
        match self.repr {
            Repr::Xyz => LossKind::Mpjpe,
            Repr::ExpMap => LossKind::Angle,
        }
    }

    pub fn variant(&self) -> VariantConfig {
        VariantConfig {
            use_dct: self.use_dct,
            use_padding: self.use_padding,
            use_residual: self.use_residual,
            connectivity: self.connectivity,
        }
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig { width: self.width, blocks: self.blocks, use_bias: self.use_bias }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule { base_lr: self.lr, decay: self.lr_decay, decay_every: self.decay_every }
    }

    pub fn clip(&self) -> ClipConfig {
        ClipConfig { max_norm: self.clip_norm }
    }

    pub fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            downsample: self.downsample,
            center: self.resolved_center(),
            strip_global: self.strip_global,
            const_threshold: self.const_threshold,
        }
    }
}
