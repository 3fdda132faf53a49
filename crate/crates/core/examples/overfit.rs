//! Drives a small network to near-perfect accuracy on 64 residues from one
//! synthetic protein. Useful as a smoke test after touching an operator: a
//! broken gradient shows up as a loss that stalls early.
//!
//! Arguments (all optional): width, learning rate, steps.
//! `cargo run --release --example overfit -- 8 5e-3 80`

use std::time::Instant;

use emocpd::features::Featurizer;
use emocpd::net::ModelConfig;
use emocpd::pipeline::{voxelize_model, VoxelizeOptions};
use emocpd::synth::random_protein;
use emocpd::train::{train, Dataset, TrainConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).map_or(default, |s| s.parse().unwrap_or_else(|_| panic!("argument {i} is malformed")))
}

fn main() {
    let (width, lr, steps) = (arg(1, 8usize), arg(2, 5e-3f64), arg(3, 80usize));
    let protein = random_protein(1, 2, 32, "toy");
    let (grids, _) = voxelize_model(&protein, &Featurizer::default(), &VoxelizeOptions::default()).expect("voxelizes");
    let data = Dataset::new(grids);
    println!("{} samples, class histogram {:?}", data.len(), data.class_histogram());

    let cfg = TrainConfig { lr, weight_decay: 0.0, batch_size: data.len(), epochs: steps, seed: 1, ..TrainConfig::default() };
    let start = Instant::now();
    train(&ModelConfig::uniform(width, 64), &cfg, &data, None, |r| {
        println!("step {:>3}  loss {:.4}  accuracy {:.3}  {:>6.1}s", r.step, r.train_loss, r.train_acc, start.elapsed().as_secs_f64());
    })
    .expect("training succeeds");
}
