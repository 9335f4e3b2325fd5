//! Synthetic dataset generation: smooth multi-sinusoid sequences written
//! as canonical sequence files, split into train/val/test.

use std::path::Path;

use trajgcn::data::{
    format_sequence, generate_sequence, split_sizes, Repr, SequenceFile,
};
use trajgcn::error::Result;
use trajgcn::rng::SeededRng;

pub struct SynthArgs<'a> {
    pub out_dir: &'a Path,
    pub seed: u64,
    pub sequences: usize,
    pub channels: usize,
    pub frames: usize,
    pub fps: usize,
    pub repr: Repr,
    pub actions: Vec<String>,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let (n_train, n_val, n_test) = split_sizes(args.sequences);
    let splits = [("train", n_train), ("val", n_val), ("test", n_test)];
    let mut rng = SeededRng::new(args.seed);
    let mut index = 0usize;
    for (split, count) in splits {
        let dir = args.out_dir.join(split);
        std::fs::create_dir_all(&dir)?;
        for _ in 0..count {
            let action = &args.actions[index % args.actions.len()];
            let traj = generate_sequence(args.channels, args.frames, &mut rng);
            let seq = SequenceFile { fps: args.fps, repr: args.repr, values: traj };
            let path = dir.join(format!("{action}_{index:03}.txt"));
            std::fs::write(&path, format_sequence(&seq))?;
            index += 1;
        }
    }
    println!(
        "wrote {} sequences ({} train, {} val, {} test) to {}",
        args.sequences,
        n_train,
        n_val,
        n_test,
        args.out_dir.display()
    );
    Ok(())
}
