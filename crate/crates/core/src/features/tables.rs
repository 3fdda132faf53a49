//! Plain-text radius and charge tables.

use std::collections::HashMap;

use super::FeatureError;

const DEFAULT_RADII: &str = include_str!("../../data/radii.txt");
const DEFAULT_CHARGES: &str = include_str!("../../data/charges.txt");

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn number(line: usize, tok: &str) -> Result<f64, FeatureError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| FeatureError::Table {
            line,
            message: format!("not a number: {tok:?}"),
        })
}

/// Van der Waals radius per element symbol, in Å.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiiTable {
    radii: HashMap<String, f64>,
}

impl Default for RadiiTable {
    fn default() -> Self {
        Self::parse(DEFAULT_RADII).expect("shipped radii table is valid")
    }
}

impl RadiiTable {
    /// Parses `ELEMENT radius` rows; `#` starts a comment. Radii must lie in (0.5, 3.0).
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut radii = HashMap::new();
        for (line, f) in rows(text) {
            if f.len() != 2 {
                return Err(FeatureError::Table {
                    line,
                    message: "expected `element radius`".into(),
                });
            }
            let r = number(line, f[1])?;
            if !(r > 0.5 && r < 3.0) {
                return Err(FeatureError::Table {
                    line,
                    message: format!("radius {r} outside (0.5, 3.0)"),
                });
            }
            radii.insert(f[0].to_ascii_uppercase(), r);
        }
        Ok(RadiiTable { radii })
    }

    pub fn get(&self, element: &str) -> Option<f64> {
        self.radii.get(&element.to_ascii_uppercase()).copied()
    }
}

/// Partial charge per (residue, atom name), with `*` as a residue wildcard.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeTable {
    charges: HashMap<(String, String), f64>,
}

impl Default for ChargeTable {
    fn default() -> Self {
        Self::parse(DEFAULT_CHARGES).expect("shipped charge table is valid")
    }
}

impl ChargeTable {
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut charges = HashMap::new();
        for (line, f) in rows(text) {
            if f.len() != 3 {
                return Err(FeatureError::Table {
                    line,
                    message: "expected `residue atom charge`".into(),
                });
            }
            charges.insert((f[0].to_ascii_uppercase(), f[1].to_ascii_uppercase()), number(line, f[2])?);
        }
        Ok(ChargeTable { charges })
    }

    /// Exact entry first, then the wildcard row. Selenomethionine is looked
    /// up as methionine with SE standing in for SD.
    pub fn get(&self, residue: &str, atom: &str) -> Option<f64> {
        let (mut residue, mut atom) = (residue.trim().to_ascii_uppercase(), atom.trim().to_ascii_uppercase());
        if residue == "MSE" {
            residue = "MET".into();
            if atom == "SE" {
                atom = "SD".into();
            }
        }
        self.charges
            .get(&(residue, atom.clone()))
            .or_else(|| self.charges.get(&("*".to_string(), atom)))
            .copied()
    }

    /// Every (residue, atom) entry, wildcard rows included.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.charges.iter().map(|((r, a), q)| (r.as_str(), a.as_str(), *q))
    }
}
