//! Parsed structure model: atoms, residue sites and chain selection.

mod pdb;
mod pqr;
mod sites;

pub use pdb::{parse_pdb, write_pdb, PdbOptions};
pub use pqr::{parse_pqr, write_pqr};
pub use sites::{extract_sites, sample_sites, ResidueSite, SiteExtraction, BACKBONE_NAMES};

use thiserror::Error;

use crate::amino::AminoAcid;
use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no atoms found in input")]
    EmptyModel,
    #[error("no atoms on requested chain(s) {requested:?}")]
    NoMatchingChains { requested: Vec<char> },
    #[error("chain selection is empty")]
    EmptySelection,
    #[error("sampling cap {cap} exceeds threshold {threshold}")]
    SamplingConfig { threshold: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub serial: i64,
    pub name: String,
    pub element: String,
    pub residue_name: String,
    pub chain_id: char,
    pub residue_seq: i32,
    pub insertion_code: Option<char>,
    pub position: Vec3,
    pub occupancy: f64,
    /// Partial charge in elementary charges, when the input carries one.
    pub charge: Option<f64>,
    /// Van der Waals radius in Å, when the input carries one.
    pub vdw_radius: Option<f64>,
    pub hetero: bool,
}

impl Atom {
    /// Residue identity used to group atoms.
    pub fn residue_key(&self) -> (char, i32, Option<char>) {
        (self.chain_id, self.residue_seq, self.insertion_code)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProteinModel {
    pub atoms: Vec<Atom>,
    pub source_id: String,
}

impl ProteinModel {
    pub fn chains(&self) -> Vec<char> {
        let mut out: Vec<char> = Vec::new();
        for a in &self.atoms {
            if !out.contains(&a.chain_id) {
                out.push(a.chain_id);
            }
        }
        out
    }

    pub fn residue_count(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for a in &self.atoms {
            let key = Some(a.residue_key());
            if key != last {
                n += 1;
                last = key;
            }
        }
        n
    }
}

/// Keeps only atoms on the listed chains.
pub fn select_chains(model: &ProteinModel, chain_ids: &[char]) -> Result<ProteinModel, StructureError> {
    if chain_ids.is_empty() {
        return Err(StructureError::EmptySelection);
    }
    let atoms: Vec<Atom> = model
        .atoms
        .iter()
        .filter(|a| chain_ids.contains(&a.chain_id))
        .cloned()
        .collect();
    if atoms.is_empty() {
        return Err(StructureError::NoMatchingChains {
            requested: chain_ids.to_vec(),
        });
    }
    Ok(ProteinModel {
        atoms,
        source_id: model.source_id.clone(),
    })
}

/// Residue class of an atom's residue, if standard.
pub fn residue_class(atom: &Atom) -> Option<AminoAcid> {
    AminoAcid::from_residue_name(&atom.residue_name)
}

/// Element symbol from an atom name when the element columns are blank.
/// Two-letter symbols are only considered for non-standard residues, so a
/// protein hydrogen such as `HG21` never reads as mercury.
pub(crate) fn infer_element(raw_name: &str, residue_name: &str) -> String {
    const TWO_LETTER: [&str; 14] = [
        "SE", "FE", "ZN", "MG", "CL", "BR", "NA", "CU", "MN", "CO", "NI", "CA", "CD", "HG",
    ];
    let standard = AminoAcid::from_residue_name(residue_name).is_some();
    let letters: String = raw_name
        .trim_start_matches(|c: char| c.is_ascii_digit() || c == ' ')
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_ascii_uppercase();
    let starts_in_col13 = !raw_name.starts_with(' ') && raw_name.len() >= 4;
    if (!standard || residue_name.trim() == "MSE") && letters.len() >= 2 {
        let two = &letters[..2];
        if TWO_LETTER.contains(&two) && (starts_in_col13 || !standard) {
            return two.to_string();
        }
    }
    letters.chars().next().map(String::from).unwrap_or_default()
}
