//! The twenty residue classes and their fixed label ordering.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Amino-acid class. The discriminant is the class label: classes are
/// ordered alphabetically by three-letter code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum AminoAcid {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
}

pub const NUM_CLASSES: usize = 20;

use AminoAcid::*;

impl AminoAcid {
    pub const ALL: [AminoAcid; NUM_CLASSES] = [
        Ala, Arg, Asn, Asp, Cys, Gln, Glu, Gly, His, Ile, Leu, Lys, Met, Phe, Pro, Ser, Thr, Trp, Tyr, Val,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn three_letter(self) -> &'static str {
        const CODES: [&str; NUM_CLASSES] = [
            "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET", "PHE",
            "PRO", "SER", "THR", "TRP", "TYR", "VAL",
        ];
        CODES[self.index()]
    }

    pub fn one_letter(self) -> char {
        b"ARNDCQEGHILKMFPSTWYV"[self.index()] as char
    }

    pub fn from_one_letter(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.one_letter() == c.to_ascii_uppercase())
    }

    /// Standard three-letter code lookup. Selenomethionine (MSE) is read as
    /// methionine; every other non-standard name yields `None`.
    pub fn from_residue_name(name: &str) -> Option<Self> {
        let name = name.trim();
        if name.eq_ignore_ascii_case("MSE") {
            return Some(Met);
        }
        Self::ALL.into_iter().find(|a| a.three_letter().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.three_letter())
    }
}

impl FromStr for AminoAcid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_one_letter(c),
            _ => Self::from_residue_name(s),
        }
        .ok_or_else(|| format!("unknown amino acid {s:?}"))
    }
}
