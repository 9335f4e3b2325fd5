//! Prediction command: run the full pipeline on the trailing observed
//! window of one sequence and write the reconstructed window plus future
//! frames, restored to the input's channel layout.

use std::path::{Path, PathBuf};

use trajgcn::checkpoint::load_checkpoint;
use trajgcn::data::{read_sequence, write_sequence, SequenceFile};
use trajgcn::error::{Error, Result};
use trajgcn::kin::{preprocess_apply, restore_channels, ChannelMask};

use crate::commands::common::{build_pipeline, check_repr};
use crate::commands::train::mask_path_for;
use crate::config::RunConfig;

pub struct PredictArgs<'a> {
    pub cfg: &'a RunConfig,
    pub checkpoint: &'a Path,
    pub mask: Option<PathBuf>,
    pub input: &'a Path,
    pub out: &'a Path,
}

pub fn run(args: &PredictArgs) -> Result<()> {
    let cfg = args.cfg;
    let seq = read_sequence(args.input)?;
    check_repr(&seq, cfg.repr, "input sequence")?;

    let mask_path = args.mask.clone().unwrap_or_else(|| mask_path_for(args.checkpoint));
    let mask = ChannelMask::load(&mask_path, seq.channels())?;

    let mut pipeline = build_pipeline(cfg, mask.retained_count())?;
    load_checkpoint(args.checkpoint, pipeline.model_mut().params_mut())?;

    // preprocess the whole input, then take the trailing observed window
    let processed = preprocess_apply(&seq.values, &mask, &cfg.preprocess())?;
    if processed.frames() < cfg.n_observed {
        return Err(Error::data(format!(
            "input has {} usable frames, need at least {}",
            processed.frames(),
            cfg.n_observed
        )));
    }
    let start = processed.frames() - cfg.n_observed;
    let observed = processed.slice_frames(start, cfg.n_observed)?;
    let pred = pipeline.predict(&observed)?;

    // dropped channels are refilled from the most recent raw frame
    let reference = seq.values.frame(seq.values.frames() - 1);
    let restored = restore_channels(&pred, &mask, &reference)?;
    let out_seq = SequenceFile { fps: seq.fps, repr: seq.repr, values: restored };
    write_sequence(args.out, &out_seq)?;
    println!(
        "wrote {} frames ({} observed + {} predicted) to {}",
        out_seq.frames(),
        cfg.n_observed,
        cfg.n_future,
        args.out.display()
    );
    Ok(())
}
