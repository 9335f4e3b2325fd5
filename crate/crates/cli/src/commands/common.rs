//! Shared data-loading steps for the train/eval/predict commands.

use std::path::Path;

use trajgcn::data::{list_sequences, read_sequence, Repr, SequenceFile, WindowedDataset};
use trajgcn::dct::Trajectory;
use trajgcn::error::{Error, Result};
use trajgcn::kin::{fit_channel_mask, preprocess_apply, ChannelMask, KinematicTree};
use trajgcn::pipeline::{build_variant, Pipeline, PipelineDims};
use trajgcn::rng::SeededRng;

use crate::config::RunConfig;

pub struct LoadedSplit {
    pub trajectories: Vec<Trajectory>,
    pub actions: Vec<String>,
    pub fps: usize,
}

/// Reads every sequence of one split directory, validating that all files
/// agree on channels, fps and representation.
pub fn load_split(dir: &Path, cfg: &RunConfig) -> Result<LoadedSplit> {
    let paths = list_sequences(dir)?;
    if paths.is_empty() {
        return Err(Error::data(format!("no .txt sequences in {}", dir.display())));
    }
    let mut trajectories = Vec::with_capacity(paths.len());
    let mut actions = Vec::with_capacity(paths.len());
    let mut fps = None;
    let mut channels = None;
    for path in &paths {
        let seq = read_sequence(path)?;
        if seq.repr != cfg.repr {
            return Err(Error::data(format!(
                "{} is {} but the run expects {}",
                path.display(),
                seq.repr.as_str(),
                cfg.repr.as_str()
            )));
        }
        if *fps.get_or_insert(seq.fps) != seq.fps {
            return Err(Error::data(format!("{} disagrees on fps", path.display())));
        }
        if *channels.get_or_insert(seq.channels()) != seq.channels() {
            return Err(Error::data(format!("{} disagrees on channel count", path.display())));
        }
        actions.push(trajgcn::data::action_of(path));
        trajectories.push(seq.values);
    }
    Ok(LoadedSplit { trajectories, actions, fps: fps.expect("at least one sequence") })
}

/// Fits the channel mask on the training split.
pub fn fit_mask(train: &LoadedSplit, cfg: &RunConfig) -> Result<ChannelMask> {
    fit_channel_mask(&train.trajectories, &cfg.preprocess())
}

/// Applies mask and centering to every sequence of a split.
pub fn preprocess_split(
    split: &LoadedSplit,
    mask: &ChannelMask,
    cfg: &RunConfig,
) -> Result<Vec<Trajectory>> {
    split
        .trajectories
        .iter()
        .map(|t| preprocess_apply(t, mask, &cfg.preprocess()))
        .collect()
}

pub fn windowed(
    trajectories: Vec<Trajectory>,
    cfg: &RunConfig,
    stride: usize,
) -> Result<WindowedDataset> {
    WindowedDataset::new(trajectories, cfg.n_observed, cfg.n_future, stride)
}

/// Loads the kinematic tree for fixed-tree runs: the configured file, or a
/// simple chain over `channels/3` joints when none is given.
pub fn tree_for(cfg: &RunConfig, channels: usize) -> Result<Option<KinematicTree>> {
    if cfg.connectivity != trajgcn::pipeline::ConnectivityMode::FixedTree {
        return Ok(None);
    }
    if let Some(path) = &cfg.tree_file {
        return Ok(Some(KinematicTree::load(path)?));
    }
    if channels % 3 != 0 {
        return Err(Error::config(format!(
            "fixed-tree connectivity needs channels in joint triples, got {channels}"
        )));
    }
    Ok(Some(KinematicTree::chain(channels / 3, [100.0, 0.0, 0.0])?))
}

/// Builds the configured pipeline for a given channel count.
pub fn build_pipeline(cfg: &RunConfig, channels: usize) -> Result<Pipeline> {
    let dims = PipelineDims {
        channels,
        n_observed: cfg.n_observed,
        n_future: cfg.n_future,
        dct_coeffs: cfg.resolved_dct_coeffs(),
    };
    let tree = tree_for(cfg, channels)?;
    let mut rng = SeededRng::new(cfg.seed);
    build_variant(cfg.variant(), dims, cfg.arch(), tree.as_ref(), &mut rng)
}

/// Writes text to a path, or stdout when none is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Representation check between a sequence file and the run config.
pub fn check_repr(seq: &SequenceFile, repr: Repr, what: &str) -> Result<()> {
    if seq.repr != repr {
        return Err(Error::data(format!(
            "{what} is {} but the run expects {}",
            seq.repr.as_str(),
            repr.as_str()
        )));
    }
    Ok(())
}
