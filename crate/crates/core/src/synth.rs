//! Ideal-geometry peptide builder.
//!
//! Chains are grown residue by residue from backbone torsions with standard
//! bond lengths and angles, and side chains are placed from a fixed
//! internal-coordinate table (heavy atoms only). The output is ordinary
//! [`ProteinModel`] data, so it can be written as PDB text and sent through
//! the same parser as any deposited structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amino::{AminoAcid, NUM_CLASSES};
use crate::geometry::{place, Vec3};
use crate::structure::{Atom, ProteinModel};
use crate::voxel::{CB_ANGLE, CB_BOND, CB_DIHEDRAL};

const N_CA: f64 = 1.458;
const CA_C: f64 = 1.525;
const C_N: f64 = 1.329;
const C_O: f64 = 1.231;
const ANG_N_CA_C: f64 = 111.2;
const ANG_CA_C_N: f64 = 116.2;
const ANG_C_N_CA: f64 = 121.7;
const ANG_CA_C_O: f64 = 120.5;
const OMEGA: f64 = 180.0;

/// Right-handed alpha helix backbone torsions.
pub const HELIX: (f64, f64) = (-57.0, -47.0);
/// Extended beta strand backbone torsions.
pub const STRAND: (f64, f64) = (-120.0, 130.0);

/// `(atom, a, b, c, bond, angle, torsion)`: the atom sits `bond` Å from `c`,
/// makes `angle` degrees with `b`–`c` and the dihedral `a`–`b`–`c`–atom.
type Ic = (&'static str, &'static str, &'static str, &'static str, f64, f64, f64);

fn side_chain(aa: AminoAcid) -> &'static [Ic] {
    use AminoAcid::*;
    match aa {
        Gly | Ala => &[],
        Ser => &[("OG", "N", "CA", "CB", 1.417, 110.8, -60.0)],
        Cys => &[("SG", "N", "CA", "CB", 1.808, 113.8, -60.0)],
        Val => &[
            ("CG1", "N", "CA", "CB", 1.527, 110.7, 177.2),
            ("CG2", "N", "CA", "CB", 1.527, 110.4, -63.3),
        ],
        Thr => &[
            ("OG1", "N", "CA", "CB", 1.43, 109.2, 60.0),
            ("CG2", "N", "CA", "CB", 1.53, 111.1, -60.0),
        ],
        Ile => &[
            ("CG1", "N", "CA", "CB", 1.527, 110.7, 59.7),
            ("CG2", "N", "CA", "CB", 1.527, 110.4, -61.6),
            ("CD1", "CA", "CB", "CG1", 1.52, 114.0, 169.8),
        ],
        Leu => &[
            ("CG", "N", "CA", "CB", 1.53, 116.1, -60.0),
            ("CD1", "CA", "CB", "CG", 1.524, 110.3, 174.9),
            ("CD2", "CA", "CB", "CG", 1.525, 110.6, 66.7),
        ],
        Asp => &[
            ("CG", "N", "CA", "CB", 1.52, 113.0, -60.0),
            ("OD1", "CA", "CB", "CG", 1.25, 119.2, -60.0),
            ("OD2", "CA", "CB", "CG", 1.25, 118.2, 120.0),
        ],
        Asn => &[
            ("CG", "N", "CA", "CB", 1.52, 113.0, -60.0),
            ("OD1", "CA", "CB", "CG", 1.23, 120.9, -60.0),
            ("ND2", "CA", "CB", "CG", 1.33, 116.5, 120.0),
        ],
        Glu => &[
            ("CG", "N", "CA", "CB", 1.52, 113.8, -60.0),
            ("CD", "CA", "CB", "CG", 1.52, 113.3, 180.0),
            ("OE1", "CB", "CG", "CD", 1.25, 119.0, -60.0),
            ("OE2", "CB", "CG", "CD", 1.25, 118.1, 120.0),
        ],
        Gln => &[
            ("CG", "N", "CA", "CB", 1.52, 113.8, -60.0),
            ("CD", "CA", "CB", "CG", 1.52, 112.8, 180.0),
            ("OE1", "CB", "CG", "CD", 1.23, 120.9, -60.0),
            ("NE2", "CB", "CG", "CD", 1.33, 116.5, 120.0),
        ],
        Lys => &[
            ("CG", "N", "CA", "CB", 1.52, 113.8, -60.0),
            ("CD", "CA", "CB", "CG", 1.52, 111.8, 180.0),
            ("CE", "CB", "CG", "CD", 1.52, 111.7, 180.0),
            ("NZ", "CG", "CD", "CE", 1.49, 111.9, 180.0),
        ],
        Arg => &[
            ("CG", "N", "CA", "CB", 1.52, 113.8, -60.0),
            ("CD", "CA", "CB", "CG", 1.52, 111.8, 180.0),
            ("NE", "CB", "CG", "CD", 1.46, 112.0, 180.0),
            ("CZ", "CG", "CD", "NE", 1.33, 124.2, 180.0),
            ("NH1", "CD", "NE", "CZ", 1.33, 120.0, 0.0),
            ("NH2", "CD", "NE", "CZ", 1.33, 120.0, 180.0),
        ],
        Met => &[
            ("CG", "N", "CA", "CB", 1.52, 113.7, -60.0),
            ("SD", "CA", "CB", "CG", 1.81, 112.7, 180.0),
            ("CE", "CB", "CG", "SD", 1.79, 100.6, 70.0),
        ],
        Phe => &[
            ("CG", "N", "CA", "CB", 1.50, 113.8, -60.0),
            ("CD1", "CA", "CB", "CG", 1.39, 120.0, 90.0),
            ("CD2", "CA", "CB", "CG", 1.39, 120.0, -90.0),
            ("CE1", "CB", "CG", "CD1", 1.39, 120.0, 180.0),
            ("CE2", "CB", "CG", "CD2", 1.39, 120.0, 180.0),
            ("CZ", "CG", "CD1", "CE1", 1.39, 120.0, 0.0),
        ],
        Tyr => &[
            ("CG", "N", "CA", "CB", 1.51, 113.8, -60.0),
            ("CD1", "CA", "CB", "CG", 1.39, 120.8, 90.0),
            ("CD2", "CA", "CB", "CG", 1.39, 121.2, -90.0),
            ("CE1", "CB", "CG", "CD1", 1.39, 121.2, 180.0),
            ("CE2", "CB", "CG", "CD2", 1.39, 120.6, 180.0),
            ("CZ", "CG", "CD1", "CE1", 1.39, 119.6, 0.0),
            ("OH", "CD1", "CE1", "CZ", 1.36, 119.9, 180.0),
        ],
        His => &[
            ("CG", "N", "CA", "CB", 1.50, 113.7, -60.0),
            ("ND1", "CA", "CB", "CG", 1.38, 122.7, 90.0),
            ("CD2", "CA", "CB", "CG", 1.36, 131.0, -90.0),
            ("CE1", "CB", "CG", "ND1", 1.32, 109.0, 180.0),
            ("NE2", "CB", "CG", "CD2", 1.37, 107.0, 180.0),
        ],
        Trp => &[
            ("CG", "N", "CA", "CB", 1.50, 114.1, -60.0),
            ("CD1", "CA", "CB", "CG", 1.37, 127.1, 90.0),
            ("CD2", "CA", "CB", "CG", 1.43, 126.6, -90.0),
            ("NE1", "CB", "CG", "CD1", 1.38, 110.2, 180.0),
            ("CE2", "CB", "CG", "CD2", 1.40, 107.2, 180.0),
            ("CE3", "CB", "CG", "CD2", 1.40, 133.9, 0.0),
            ("CZ2", "CG", "CD2", "CE2", 1.40, 122.4, 180.0),
            ("CZ3", "CG", "CD2", "CE3", 1.39, 118.7, 180.0),
            ("CH2", "CD2", "CE2", "CZ2", 1.37, 117.5, 0.0),
        ],
        Pro => &[
            ("CG", "N", "CA", "CB", 1.50, 104.5, 30.0),
            ("CD", "CA", "CB", "CG", 1.51, 105.5, -35.0),
        ],
    }
}

fn element_of(name: &str) -> &'static str {
    match name.as_bytes()[0] {
        b'N' => "N",
        b'O' => "O",
        b'S' => "S",
        _ => "C",
    }
}

/// Heavy-atom names of a residue in build order (backbone first).
pub fn residue_atom_names(aa: AminoAcid) -> Vec<&'static str> {
    let mut names = vec!["N", "CA", "C", "O"];
    if aa != AminoAcid::Gly {
        names.push("CB");
    }
    names.extend(side_chain(aa).iter().map(|ic| ic.0));
    names
}

/// Backbone torsions and the chain placement for [`build_chain`].
#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub chain_id: char,
    pub sequence: Vec<AminoAcid>,
    /// `(phi, psi)` per residue in degrees; phi of the first and psi of the
    /// last residue only matter through the carbonyl oxygen.
    pub torsions: Vec<(f64, f64)>,
    /// Where the first N atom goes; the chain grows from there.
    pub origin: Vec3,
    pub first_seq: i32,
}

fn atom(serial: i64, name: &str, aa: AminoAcid, chain: char, seq: i32, p: Vec3) -> Atom {
    Atom {
        serial,
        name: name.to_string(),
        element: element_of(name).to_string(),
        residue_name: aa.three_letter().to_string(),
        chain_id: chain,
        residue_seq: seq,
        insertion_code: None,
        position: p,
        occupancy: 1.0,
        charge: None,
        vdw_radius: None,
        hetero: false,
    }
}

/// Grows one chain. Serial numbers continue from `first_serial`.
pub fn build_chain(spec: &ChainSpec, first_serial: i64) -> Vec<Atom> {
    assert_eq!(spec.sequence.len(), spec.torsions.len(), "one torsion pair per residue");
    let mut atoms = Vec::new();
    let mut serial = first_serial;
    // Seed frame: N at the origin, CA along +x, C in the xy-plane.
    let mut n = spec.origin;
    let mut ca = n + Vec3::new(N_CA, 0.0, 0.0);
    let theta = (180.0 - ANG_N_CA_C).to_radians();
    let mut c = ca + Vec3::new(CA_C * theta.cos(), CA_C * theta.sin(), 0.0);
    for (i, (&aa, &(phi, psi))) in spec.sequence.iter().zip(&spec.torsions).enumerate() {
        if i > 0 {
            let (prev_n, prev_ca, prev_c) = (n, ca, c);
            let prev_psi = spec.torsions[i - 1].1;
            n = place(prev_n, prev_ca, prev_c, C_N, ANG_CA_C_N, prev_psi).expect("non-degenerate backbone");
            ca = place(prev_ca, prev_c, n, N_CA, ANG_C_N_CA, OMEGA).expect("non-degenerate backbone");
            c = place(prev_c, n, ca, CA_C, ANG_N_CA_C, phi).expect("non-degenerate backbone");
        }
        let o = place(n, ca, c, C_O, ANG_CA_C_O, psi + 180.0).expect("non-degenerate backbone");
        let seq = spec.first_seq + i as i32;
        let mut placed: Vec<(&str, Vec3)> = vec![("N", n), ("CA", ca), ("C", c), ("O", o)];
        if aa != AminoAcid::Gly {
            let cb = place(c, n, ca, CB_BOND, CB_ANGLE, CB_DIHEDRAL).expect("non-degenerate backbone");
            placed.push(("CB", cb));
        }
        for &(name, a, b, r, bond, angle, torsion) in side_chain(aa) {
            let get = |k: &str| placed.iter().find(|(n, _)| *n == k).expect("reference placed earlier").1;
            let p = place(get(a), get(b), get(r), bond, angle, torsion).expect("non-degenerate side chain");
            placed.push((name, p));
        }
        for (name, p) in placed {
            atoms.push(atom(serial, name, aa, spec.chain_id, seq, p));
            serial += 1;
        }
    }
    atoms
}

/// A small globule-free "protein" of `chains` chains of `length` residues.
/// Residue types cycle through all twenty classes from a seeded offset, and
/// each residue gets helix or strand torsions with up to ±12° of jitter.
/// Chains are laid out 12 Å apart so neighbouring chains share
/// microenvironments.
pub fn random_protein(seed: u64, chains: usize, length: usize, source_id: &str) -> ProteinModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::new();
    let offset = rng.random_range(0..NUM_CLASSES);
    for ch in 0..chains {
        let chain_id = (b'A' + (ch % 26) as u8) as char;
        let sequence: Vec<AminoAcid> = (0..length)
            .map(|i| {
                let k = if rng.random_bool(0.5) { offset + ch * length + i } else { rng.random_range(0..NUM_CLASSES) };
                AminoAcid::from_index(k % NUM_CLASSES).expect("class index")
            })
            .collect();
        let helix = rng.random_bool(0.5);
        let torsions = (0..length)
            .map(|_| {
                let (phi, psi) = if helix { HELIX } else { STRAND };
                (phi + rng.random_range(-12.0..12.0), psi + rng.random_range(-12.0..12.0))
            })
            .collect();
        let spec = ChainSpec {
            chain_id,
            sequence,
            torsions,
            origin: Vec3::new(0.0, 12.0 * ch as f64, rng.random_range(-3.0..3.0)),
            first_seq: 1,
        };
        let first = atoms.len() as i64 + 1;
        atoms.extend(build_chain(&spec, first));
    }
    ProteinModel {
        atoms,
        source_id: source_id.to_string(),
    }
}
