//! Training command: fit the channel mask, window the data, run the
//! training loop, and write the selected checkpoint, the mask, and the
//! per-epoch log.

use std::path::{Path, PathBuf};

use trajgcn::checkpoint::save_checkpoint;
use trajgcn::error::Result;
use trajgcn::train::{train, TrainConfig, ValMetricKind};

use crate::commands::common::{fit_mask, load_split, preprocess_split, windowed, build_pipeline};
use crate::config::RunConfig;

pub struct TrainArgs<'a> {
    pub cfg: &'a RunConfig,
    pub data_dir: &'a Path,
    pub out_checkpoint: &'a Path,
    pub log_path: Option<PathBuf>,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let cfg = args.cfg;
    let train_split = load_split(&args.data_dir.join("train"), cfg)?;
    let mask = fit_mask(&train_split, cfg)?;
    let train_data = windowed(preprocess_split(&train_split, &mask, cfg)?, cfg, cfg.window_stride)?;

    let val_dir = args.data_dir.join("val");
    let val_data = if val_dir.is_dir() && !trajgcn::data::list_sequences(&val_dir)?.is_empty() {
        let split = load_split(&val_dir, cfg)?;
        Some(windowed(preprocess_split(&split, &mask, cfg)?, cfg, cfg.window_stride)?)
    } else {
        None
    };

    let mut pipeline = build_pipeline(cfg, mask.retained_count())?;
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch,
        schedule: cfg.schedule(),
        clip: cfg.clip(),
        loss: cfg.loss_kind(),
        val_metric: ValMetricKind::for_loss(cfg.loss_kind(), mask.retained_count()),
        seed: cfg.seed,
    };
    let outcome = train(&mut pipeline, &train_data, val_data.as_ref(), &train_cfg)?;

    save_checkpoint(args.out_checkpoint, pipeline.model().params())?;
    let mask_path = mask_path_for(args.out_checkpoint);
    mask.save(&mask_path)?;
    let log_path = args
        .log_path
        .clone()
        .unwrap_or_else(|| log_path_for(args.out_checkpoint));
    std::fs::write(&log_path, outcome.log.to_csv())?;

    let last = outcome.log.records.last().expect("log has at least epoch 0");
    println!(
        "trained {} epochs ({} steps) on {} windows; selected epoch {}; final train loss {:.6e}",
        cfg.epochs,
        outcome.steps_taken,
        train_data.len(),
        outcome.selected_epoch,
        last.train_loss
    );
    println!(
        "checkpoint: {}  mask: {}  log: {}",
        args.out_checkpoint.display(),
        mask_path.display(),
        log_path.display()
    );
    Ok(())
}

pub fn mask_path_for(checkpoint: &Path) -> PathBuf {
    let mut os = checkpoint.as_os_str().to_os_string();
    os.push(".mask");
    PathBuf::from(os)
}

pub fn log_path_for(checkpoint: &Path) -> PathBuf {
    let mut os = checkpoint.as_os_str().to_os_string();
    os.push(".log.csv");
    PathBuf::from(os)
}
