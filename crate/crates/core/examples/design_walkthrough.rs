//! From coordinates to substitution suggestions in one process.
//!
//! Two synthetic proteins are written out as PDB text and parsed back. The
//! first one trains a small network for a few dozen steps. Forty residues
//! are far too few to generalise from, so expect the query accuracy to sit
//! near chance; the point is the data flow, not the numbers. The second one is
//! then scored, and for a handful of its residues the example prints the
//! three most probable amino acids, which is the list a designer would
//! consult when choosing a mutation.
//!
//! Run with `cargo run --release --example design_walkthrough`.

use emocpd::amino::AminoAcid;
use emocpd::features::Featurizer;
use emocpd::net::ModelConfig;
use emocpd::pipeline::{voxelize_model, VoxelizeOptions};
use emocpd::predictions::{write_topk_csv, PredictionRow};
use emocpd::structure::{parse_pdb, write_pdb, PdbOptions};
use emocpd::synth::random_protein;
use emocpd::train::{evaluate_accuracy, predict, ranked_classes, train, Dataset, MetricsReport, TrainConfig};

fn load(seed: u64, id: &str) -> Dataset {
    let text = write_pdb(&random_protein(seed, 1, 40, id));
    let model = parse_pdb(&text, &PdbOptions { include_hetatm: false, source_id: id.into() }).expect("valid PDB");
    let (grids, stats) = voxelize_model(&model, &Featurizer::default(), &VoxelizeOptions::default()).expect("voxelizes");
    println!("{id}: {} atoms, {} sites kept of {} found", stats.atoms, grids.len(), stats.sites_found);
    Dataset::new(grids)
}

fn main() {
    let train_set = load(7, "design_train");
    let query = load(8, "design_query");

    let model_cfg = ModelConfig::uniform(8, 32);
    let cfg = TrainConfig { lr: 2e-3, weight_decay: 0.0, batch_size: 40, epochs: 40, seed: 7, ..TrainConfig::default() };
    let outcome = train(&model_cfg, &cfg, &train_set, None, |row| {
        if row.step % 10 == 0 {
            println!("step {:>3}  loss {:.3}  batch accuracy {:.2}", row.step, row.train_loss, row.train_acc);
        }
    })
    .expect("training succeeds");

    // Eval mode normalises with running averages of the batch statistics.
    // After only forty steps those averages still trail the current weights,
    // so this number sits well below the batch accuracy printed above.
    let fit = evaluate_accuracy(&outcome.last, &train_set, 32).expect("forward pass");
    println!("accuracy on the training protein {fit:.3}");
    let probs = predict(&outcome.last, &query, 32).expect("forward pass");
    let report = MetricsReport::compute(&probs, &query.labels()).expect("metrics");
    println!("query accuracy {:.3}, top-3 {:.3}", report.accuracy, report.topk[2]);

    println!("\nsuggestions for the first five query residues:");
    for (grid, row) in query.samples.iter().zip(&probs).take(5) {
        let picks: Vec<String> = ranked_classes(row)
            .into_iter()
            .take(3)
            .map(|c| format!("{} {:.2}", AminoAcid::from_index(c).unwrap().three_letter(), row[c]))
            .collect();
        println!("  {:<18} native {}  ->  {}", grid.site_id, grid.label.three_letter(), picks.join(", "));
    }

    // The same ranking in the layout `emocpd predict --topk` writes.
    let rows: Vec<PredictionRow> =
        query.samples.iter().zip(&probs).map(|(g, p)| PredictionRow::new(&g.site_id, g.label, p.clone())).collect();
    let csv = write_topk_csv(&rows[..2], 3, "");
    println!("\n{csv}");
}
