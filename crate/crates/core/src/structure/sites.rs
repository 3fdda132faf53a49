use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ProteinModel, StructureError};
use crate::amino::AminoAcid;
use crate::geometry::Vec3;

/// Atom names that belong to the backbone rather than the side chain.
pub const BACKBONE_NAMES: [&str; 13] = [
    "N", "CA", "C", "O", "OXT", "H", "HN", "H1", "H2", "H3", "HA", "HA2", "HA3",
];

const MIN_BOND: f64 = 0.5;
const MAX_BOND: f64 = 3.0;

/// A classifiable residue: a standard amino acid with a complete N/CA/C backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSite {
    pub label: AminoAcid,
    pub chain_id: char,
    pub residue_seq: i32,
    pub insertion_code: Option<char>,
    pub n: Vec3,
    pub ca: Vec3,
    pub c: Vec3,
    pub o: Option<Vec3>,
    /// Observed CB position; absent for glycine and for truncated side chains.
    pub cbeta: Option<Vec3>,
    /// Indices into `ProteinModel::atoms` of every atom in the residue.
    pub atom_ids: Vec<usize>,
    /// Subset of `atom_ids` that forms the side chain (CB onwards, hydrogens included).
    pub sidechain_atom_ids: Vec<usize>,
}

impl ResidueSite {
    /// `source/chain/seq` with the insertion code appended when present.
    pub fn site_id(&self, source: &str) -> String {
        let icode = self.insertion_code.map(String::from).unwrap_or_default();
        format!("{source}/{}/{}{icode}", self.chain_id, self.residue_seq)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiteExtraction {
    pub sites: Vec<ResidueSite>,
    /// Standard residues missing N, CA or C.
    pub skipped_incomplete: usize,
    /// Residues whose name maps to no class.
    pub skipped_nonstandard: usize,
    /// Residues with backbone distances outside (0.5, 3.0) Å.
    pub skipped_geometry: usize,
}

/// Groups atoms into residues (in order of first appearance) and keeps the
/// classifiable ones.
pub fn extract_sites(model: &ProteinModel) -> SiteExtraction {
    let mut order: Vec<(char, i32, Option<char>)> = Vec::new();
    let mut members: HashMap<(char, i32, Option<char>), Vec<usize>> = HashMap::new();
    for (i, a) in model.atoms.iter().enumerate() {
        let key = a.residue_key();
        members
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(i);
    }

    let mut out = SiteExtraction::default();
    for key in order {
        let ids = &members[&key];
        let first = &model.atoms[ids[0]];
        let Some(label) = AminoAcid::from_residue_name(&first.residue_name) else {
            out.skipped_nonstandard += 1;
            continue;
        };
        let find = |name: &str| ids.iter().map(|&i| &model.atoms[i]).find(|a| a.name == name).map(|a| a.position);
        let (Some(n), Some(ca), Some(c)) = (find("N"), find("CA"), find("C")) else {
            out.skipped_incomplete += 1;
            continue;
        };
        let ok = |d: f64| d > MIN_BOND && d < MAX_BOND;
        if !ok(n.distance(ca)) || !ok(ca.distance(c)) || !ok(n.distance(c)) {
            out.skipped_geometry += 1;
            continue;
        }
        let sidechain_atom_ids = ids
            .iter()
            .copied()
            .filter(|&i| !BACKBONE_NAMES.contains(&model.atoms[i].name.as_str()))
            .collect();
        out.sites.push(ResidueSite {
            label,
            chain_id: key.0,
            residue_seq: key.1,
            insertion_code: key.2,
            n,
            ca,
            c,
            o: find("O"),
            cbeta: find("CB"),
            atom_ids: ids.clone(),
            sidechain_atom_ids,
        });
    }
    out
}

/// Returns all sites when there are at most `threshold`, otherwise `cap`
/// distinct sites drawn uniformly with the given seed. Input order is kept.
pub fn sample_sites(
    sites: &[ResidueSite],
    threshold: usize,
    cap: usize,
    seed: u64,
) -> Result<Vec<ResidueSite>, StructureError> {
    if cap > threshold {
        return Err(StructureError::SamplingConfig { threshold, cap });
    }
    if sites.len() <= threshold {
        return Ok(sites.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, sites.len(), cap).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| sites[i].clone()).collect())
}
