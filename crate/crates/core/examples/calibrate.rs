use std::time::Instant;
use trajgcn::data::{generate_sequence, WindowedDataset};
use trajgcn::dct::Trajectory;
use trajgcn::eval::{mpjpe_at_traj, zero_velocity_trajectory};
use trajgcn::optim::LossKind;
use trajgcn::pipeline::{build_variant, ArchConfig, PipelineDims, VariantConfig};
use trajgcn::rng::SeededRng;
use trajgcn::train::{train, TrainConfig, ValMetricKind};

fn main() {
    // criterion 6 calibration: overfit 8 sequences
    let t0 = Instant::now();
    let mut rng = SeededRng::new(606);
    let seqs: Vec<Trajectory> = (0..8).map(|_| generate_sequence(12, 35, &mut rng)).collect();
    let data = WindowedDataset::new(seqs, 10, 10, 1).unwrap();
    println!("overfit windows: {}", data.len());
    let dims = PipelineDims { channels: 12, n_observed: 10, n_future: 10, dct_coeffs: 15 };
    let arch = ArchConfig { width: 64, blocks: 4, use_bias: true };
    let mut pipeline = build_variant(VariantConfig::default(), dims, arch, None, &mut rng).unwrap();
    let steps_per_epoch = data.len().div_ceil(16);
    let epochs = 2000 / steps_per_epoch;
    let cfg = TrainConfig { epochs, ..TrainConfig::new(LossKind::Mpjpe, 12) };
    let outcome = train(&mut pipeline, &data, None, &cfg).unwrap();
    let initial = outcome.log.records[0].train_loss;
    let min = outcome.log.records.iter().map(|r| r.train_loss).fold(f64::INFINITY, f64::min);
    println!(
        "criterion6: initial {initial:.4e} min {min:.4e} ratio {:.4} steps {} time {:.1}s",
        min / initial, outcome.steps_taken, t0.elapsed().as_secs_f64()
    );

    // criterion 7 calibration: 200 train / 50 test
    let t0 = Instant::now();
    let mut rng = SeededRng::new(707);
    let train_seqs: Vec<Trajectory> = (0..200).map(|_| generate_sequence(12, 20, &mut rng)).collect();
    let test_seqs: Vec<Trajectory> = (0..50).map(|_| generate_sequence(12, 20, &mut rng)).collect();
    let train_data = WindowedDataset::new(train_seqs, 10, 10, 1).unwrap();
    let test_data = WindowedDataset::new(test_seqs, 10, 10, 1).unwrap();
    let mut pipeline = build_variant(VariantConfig::default(), dims, arch, None, &mut rng).unwrap();
    for epochs in [10usize, 20, 40] {
        let cfg = TrainConfig { epochs: if epochs == 10 { 10 } else { 10 + epochs - epochs.min(epochs) + 0 }, ..TrainConfig::new(LossKind::Mpjpe, 12) };
        let _ = cfg; break;
    }
    let cfg = TrainConfig { epochs: 40, ..TrainConfig::new(LossKind::Mpjpe, 12) };
    let outcome = train(&mut pipeline, &train_data, None, &cfg).unwrap();
    // mean MPJPE across horizons for model and baseline
    let frames = [2usize, 4, 8, 10];
    let mut model_sum = 0.0;
    let mut base_sum = 0.0;
    for idx in 0..test_data.len() {
        let gt = test_data.window(idx).unwrap();
        let obs = test_data.observed(idx).unwrap();
        let pred = pipeline.predict(&obs).unwrap();
        let base = zero_velocity_trajectory(&obs, 10).unwrap();
        let gt_future = gt.slice_frames(10, 10).unwrap();
        for &h in &frames {
            model_sum += mpjpe_at_traj(&pred, &gt, 10 + h - 1).unwrap();
            base_sum += mpjpe_at_traj(&base, &gt_future, h - 1).unwrap();
        }
    }
    println!(
        "criterion7: model {:.4} baseline {:.4} ratio {:.4} steps {} time {:.1}s",
        model_sum, base_sum, model_sum / base_sum, outcome.steps_taken, t0.elapsed().as_secs_f64()
    );
}
