//! What the featurizer sees for one small chain, and what a grid holds.
//!
//! Each residue's atoms are listed with their element class, charge and
//! solvent-accessible area, then the first site's grid is summarised
//! channel by channel. Buried residues show small areas; the terminal ones
//! are the most exposed.

use emocpd::features::{Featurizer, FEATURE_DIM};
use emocpd::pipeline::{featurize_model, voxelize_model, VoxelizeOptions};
use emocpd::synth::random_protein;
use emocpd::voxel::GRID_SIZE;

fn main() {
    let protein = random_protein(3, 1, 8, "tour");
    let featurizer = Featurizer::default();
    let (model, features) = featurize_model(&protein, &[], &featurizer).expect("featurizes");
    println!("{} atoms, {} featurized, {FEATURE_DIM} features each\n", model.atoms.len(), features.included());

    let mut current = None;
    let mut area = 0.0;
    for (atom, feat) in model.atoms.iter().zip(&features.features) {
        if current != Some(atom.residue_seq) {
            if current.is_some() {
                println!("    residue SASA {area:.1} Å²");
            }
            current = Some(atom.residue_seq);
            area = 0.0;
            println!("{} {}", atom.residue_name, atom.residue_seq);
        }
        if let Some(f) = feat {
            area += f.sasa;
            println!("    {:<4} {:<2} charge {:+.3}  sasa {:6.2}", atom.name, f.class.symbol(), f.fc, f.sasa);
        }
    }
    println!("    residue SASA {area:.1} Å²\n");

    let (grids, _) = voxelize_model(&protein, &featurizer, &VoxelizeOptions::default()).expect("voxelizes");
    let grid = &grids[0];
    let cells = GRID_SIZE * GRID_SIZE * GRID_SIZE;
    println!("grid for {} (label {}):", grid.site_id, grid.label.three_letter());
    for (c, channel) in grid.values.chunks(cells).enumerate() {
        let occupied = channel.iter().filter(|v| **v != 0.0).count();
        let sum: f32 = channel.iter().sum();
        println!("  channel {c}: {occupied:>4} non-zero cells, sum {sum:9.3}");
    }
}
