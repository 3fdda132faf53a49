//! Structure file → features → site grids, as used by the CLI and tests.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureSet, Featurizer};
use crate::structure::{extract_sites, parse_pdb, parse_pqr, sample_sites, select_chains, PdbOptions, ProteinModel};
use crate::voxel::{build_grids, MicroEnvGrid};

/// Site selection for [`voxelize_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelizeOptions {
    /// Chains to keep; empty keeps all.
    pub chains: Vec<char>,
    pub sample_threshold: usize,
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for VoxelizeOptions {
    fn default() -> Self {
        VoxelizeOptions {
            chains: Vec::new(),
            sample_threshold: 200,
            sample_cap: 100,
            seed: 0,
        }
    }
}

/// Counts reported next to a voxelized dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct VoxelizeStats {
    pub atoms: usize,
    pub featurized_atoms: usize,
    pub charge_misses: usize,
    pub sites_found: usize,
    pub sites_sampled: usize,
    pub skipped_incomplete: usize,
    pub skipped_nonstandard: usize,
    pub skipped_geometry: usize,
    pub skipped_frame: usize,
}

/// The id a file contributes to site ids: its file stem.
pub fn source_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads a `.pqr` file (charges and radii from the file) or PDB text.
pub fn load_structure(path: &Path, include_hetatm: bool) -> Result<ProteinModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = source_id(path);
    let is_pqr = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pqr"));
    Ok(if is_pqr {
        parse_pqr(&text, &id)?
    } else {
        parse_pdb(
            &text,
            &PdbOptions {
                include_hetatm,
                source_id: id,
            },
        )?
    })
}

/// Chain selection followed by per-atom featurization.
pub fn featurize_model(model: &ProteinModel, chains: &[char], featurizer: &Featurizer) -> Result<(ProteinModel, FeatureSet)> {
    let mut model = if chains.is_empty() { model.clone() } else { select_chains(model, chains)? };
    let features = featurizer.featurize(&mut model)?;
    Ok((model, features))
}

/// Every usable site of the model (after sampling) as a labelled grid.
pub fn voxelize_model(
    model: &ProteinModel,
    featurizer: &Featurizer,
    opts: &VoxelizeOptions,
) -> Result<(Vec<MicroEnvGrid>, VoxelizeStats)> {
    let (model, features) = featurize_model(model, &opts.chains, featurizer)?;
    let found = extract_sites(&model);
    let sites = sample_sites(&found.sites, opts.sample_threshold, opts.sample_cap, opts.seed)?;
    let (grids, skipped_frame) = build_grids(&sites, &model, &features);
    let stats = VoxelizeStats {
        atoms: model.atoms.len(),
        featurized_atoms: features.included(),
        charge_misses: features.charge_misses,
        sites_found: found.sites.len(),
        sites_sampled: sites.len(),
        skipped_incomplete: found.skipped_incomplete,
        skipped_nonstandard: found.skipped_nonstandard,
        skipped_geometry: found.skipped_geometry,
        skipped_frame,
    };
    Ok((grids, stats))
}
