//! Per-atom features: element one-hot (C, N, O, S, H), partial charge and SASA.

mod sasa;
mod tables;

pub use sasa::{fibonacci_sphere, shrake_rupley, DEFAULT_POINTS, DEFAULT_PROBE};
pub use tables::{ChargeTable, RadiiTable};

use thiserror::Error;

use crate::structure::{Atom, ProteinModel};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no radius for atom {serial} {name} ({element})")]
    MissingRadius { serial: i64, name: String, element: String },
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementClass {
    C,
    N,
    O,
    S,
    H,
}

impl ElementClass {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        ["C", "N", "O", "S", "H"][self.index()]
    }
}

/// Element class of an atom; selenium counts as sulfur, anything else
/// outside C/N/O/S/H is excluded.
pub fn classify_element(atom: &Atom) -> Option<ElementClass> {
    match atom.element.trim().to_ascii_uppercase().as_str() {
        "C" => Some(ElementClass::C),
        "N" => Some(ElementClass::N),
        "O" => Some(ElementClass::O),
        "S" | "SE" => Some(ElementClass::S),
        "H" => Some(ElementClass::H),
        _ => None,
    }
}

/// The seven-channel atom descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomFeature {
    pub class: ElementClass,
    /// Partial charge, elementary charges.
    pub fc: f64,
    /// Solvent-accessible surface area, Å².
    pub sasa: f64,
}

pub const FEATURE_DIM: usize = 7;

impl AtomFeature {
    pub fn to_vector(&self) -> [f64; FEATURE_DIM] {
        let mut v = [0.0; FEATURE_DIM];
        v[self.class.index()] = 1.0;
        v[5] = self.fc;
        v[6] = self.sasa;
        v
    }
}

/// Fills missing charges from `table`. Charges already present (PQR input)
/// are kept. Returns the number of included atoms that fell back to 0.
pub fn assign_charges(model: &mut ProteinModel, table: &ChargeTable) -> usize {
    let mut misses = 0;
    for atom in &mut model.atoms {
        if atom.charge.is_some() || classify_element(atom).is_none() {
            continue;
        }
        atom.charge = Some(table.get(&atom.residue_name, &atom.name).unwrap_or_else(|| {
            misses += 1;
            0.0
        }));
    }
    misses
}

/// Fills missing radii of included atoms from the element table.
pub fn assign_radii(model: &mut ProteinModel, table: &RadiiTable) -> Result<(), FeatureError> {
    for atom in &mut model.atoms {
        let Some(class) = classify_element(atom) else { continue };
        if atom.vdw_radius.is_some() {
            continue;
        }
        let r = table.get(&atom.element).or_else(|| table.get(class.symbol()));
        atom.vdw_radius = Some(r.ok_or_else(|| FeatureError::MissingRadius {
            serial: atom.serial,
            name: atom.name.clone(),
            element: atom.element.clone(),
        })?);
    }
    Ok(())
}

/// SASA of every included atom (indexed like `model.atoms`; `None` for
/// excluded elements). Excluded atoms neither receive area nor occlude.
pub fn compute_sasa(model: &ProteinModel, probe: f64, n_points: usize) -> Result<Vec<Option<f64>>, FeatureError> {
    let mut idx = Vec::new();
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    for (i, a) in model.atoms.iter().enumerate() {
        if classify_element(a).is_none() {
            continue;
        }
        let r = a.vdw_radius.ok_or_else(|| FeatureError::MissingRadius {
            serial: a.serial,
            name: a.name.clone(),
            element: a.element.clone(),
        })?;
        idx.push(i);
        centers.push(a.position);
        radii.push(r);
    }
    let areas = shrake_rupley(&centers, &radii, probe, n_points);
    let mut out = vec![None; model.atoms.len()];
    for (i, s) in idx.into_iter().zip(areas) {
        out[i] = Some(s);
    }
    Ok(out)
}

/// Settings for the full featurization pass.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub radii: RadiiTable,
    pub charges: ChargeTable,
    pub probe: f64,
    pub n_points: usize,
}

impl Default for Featurizer {
    fn default() -> Self {
        Featurizer {
            radii: RadiiTable::default(),
            charges: ChargeTable::default(),
            probe: DEFAULT_PROBE,
            n_points: DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// One entry per model atom; `None` for excluded elements.
    pub features: Vec<Option<AtomFeature>>,
    pub charge_misses: usize,
}

impl FeatureSet {
    pub fn included(&self) -> usize {
        self.features.iter().flatten().count()
    }
}

impl Featurizer {
    /// Assigns radii and charges in place, then computes features.
    pub fn featurize(&self, model: &mut ProteinModel) -> Result<FeatureSet, FeatureError> {
        assign_radii(model, &self.radii)?;
        let charge_misses = assign_charges(model, &self.charges);
        let sasa = compute_sasa(model, self.probe, self.n_points)?;
        let features = model
            .atoms
            .iter()
            .zip(sasa)
            .map(|(a, s)| {
                Some(AtomFeature {
                    class: classify_element(a)?,
                    fc: a.charge.unwrap_or(0.0),
                    sasa: s?,
                })
            })
            .collect();
        Ok(FeatureSet { features, charge_misses })
    }
}
