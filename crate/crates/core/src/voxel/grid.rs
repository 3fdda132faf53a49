use std::collections::HashSet;

use super::frame::LocalFrame;
use super::FrameError;
use crate::amino::AminoAcid;
use crate::features::{FeatureSet, FEATURE_DIM};
use crate::structure::{ProteinModel, ResidueSite};

/// Cells per axis.
pub const GRID_SIZE: usize = 20;
/// Cell edge, Å.
pub const CELL: f64 = 1.0;
pub const GRID_LEN: usize = FEATURE_DIM * GRID_SIZE * GRID_SIZE * GRID_SIZE;

/// A 7×20×20×20 microenvironment with its label. Values are channel-major
/// (`[c][i][j][k]`, `i` along the local x axis).
#[derive(Debug, Clone, PartialEq)]
pub struct MicroEnvGrid {
    pub label: AminoAcid,
    pub site_id: String,
    pub values: Vec<f32>,
}

pub fn cell_offset(c: usize, i: usize, j: usize, k: usize) -> usize {
    ((c * GRID_SIZE + i) * GRID_SIZE + j) * GRID_SIZE + k
}

/// Cell index along one axis for a local coordinate; cells are half-open
/// `[i - 10, i - 9)` Å.
pub fn cell_index(coord: f64) -> Option<usize> {
    let half = (GRID_SIZE as f64 * CELL) / 2.0;
    let i = ((coord + half) / CELL).floor();
    (i >= 0.0 && i < GRID_SIZE as f64).then_some(i as usize)
}

/// Sums the features of every included atom inside the box around `site`,
/// skipping the site's own side chain.
pub fn build_grid(
    site: &ResidueSite,
    model: &ProteinModel,
    features: &FeatureSet,
    source_id: &str,
) -> Result<MicroEnvGrid, FrameError> {
    let frame = LocalFrame::for_site(site)?;
    let masked: HashSet<usize> = site.sidechain_atom_ids.iter().copied().collect();
    let mut acc = vec![0f64; GRID_LEN];
    for (idx, (atom, feat)) in model.atoms.iter().zip(&features.features).enumerate() {
        let Some(feat) = feat else { continue };
        if masked.contains(&idx) {
            continue;
        }
        let p = frame.to_local(atom.position);
        let (Some(i), Some(j), Some(k)) = (cell_index(p.x), cell_index(p.y), cell_index(p.z)) else {
            continue;
        };
        for (c, v) in feat.to_vector().into_iter().enumerate() {
            acc[cell_offset(c, i, j, k)] += v;
        }
    }
    Ok(MicroEnvGrid {
        label: site.label,
        site_id: site.site_id(source_id),
        values: acc.into_iter().map(|v| v as f32).collect(),
    })
}

/// Grids for every site; sites with degenerate frames are counted and skipped.
pub fn build_grids(
    sites: &[ResidueSite],
    model: &ProteinModel,
    features: &FeatureSet,
) -> (Vec<MicroEnvGrid>, usize) {
    let mut skipped = 0;
    let grids = sites
        .iter()
        .filter_map(|s| match build_grid(s, model, features, &model.source_id) {
            Ok(g) => Some(g),
            Err(_) => {
                skipped += 1;
                None
            }
        })
        .collect();
    (grids, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_cells() {
        assert_eq!(cell_index(-10.0), Some(0));
        assert_eq!(cell_index(-10.000001), None);
        assert_eq!(cell_index(0.5), Some(10));
        assert_eq!(cell_index(0.0), Some(10));
        assert_eq!(cell_index(-1e-9), Some(9));
        assert_eq!(cell_index(9.999), Some(19));
        assert_eq!(cell_index(10.0), None);
        assert_eq!(cell_index(25.0), None);
    }
}
