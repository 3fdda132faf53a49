use std::fmt::Write;

use super::{infer_element, Atom, ProteinModel, StructureError};
use crate::geometry::Vec3;

fn err(line: usize, message: impl Into<String>) -> StructureError {
    StructureError::Parse {
        line,
        message: message.into(),
    }
}

/// Splits a residue number token such as `52` or `52A`.
fn split_seq(tok: &str) -> Option<(i32, Option<char>)> {
    match tok.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => Some((tok[..i].parse().ok()?, Some(c))),
        _ => Some((tok.parse().ok()?, None)),
    }
}

/// Reads whitespace-delimited PQR rows:
/// `ATOM serial name resName [chain] resSeq x y z charge radius`.
pub fn parse_pqr(text: &str, source_id: &str) -> Result<ProteinModel, StructureError> {
    let mut atoms = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(&record) = fields.first() else { continue };
        if record == "ENDMDL" && !atoms.is_empty() {
            break;
        }
        if record != "ATOM" && record != "HETATM" {
            continue;
        }
        let (chain_id, rest) = match fields.len() {
            11 => (fields[4].chars().next().unwrap_or(' '), &fields[5..]),
            10 => (' ', &fields[4..]),
            n => return Err(err(lineno, format!("expected 10 or 11 fields, found {n}"))),
        };
        let num = |idx: usize, what: &str| {
            rest[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(lineno, format!("non-numeric {what} {:?}", rest[idx])))
        };
        let (residue_seq, insertion_code) =
            split_seq(rest[0]).ok_or_else(|| err(lineno, format!("malformed residue number {:?}", rest[0])))?;
        let radius = num(5, "radius")?;
        if radius <= 0.0 {
            return Err(err(lineno, format!("non-positive radius {radius}")));
        }
        atoms.push(Atom {
            serial: fields[1]
                .parse()
                .map_err(|_| err(lineno, format!("malformed serial {:?}", fields[1])))?,
            name: fields[2].to_string(),
            element: infer_element(fields[2], fields[3]),
            residue_name: fields[3].to_string(),
            chain_id,
            residue_seq,
            insertion_code,
            position: Vec3::new(num(1, "x")?, num(2, "y")?, num(3, "z")?),
            occupancy: 1.0,
            charge: Some(num(4, "charge")?),
            vdw_radius: Some(radius),
            hetero: record == "HETATM",
        });
    }
    if atoms.is_empty() {
        return Err(StructureError::EmptyModel);
    }
    Ok(ProteinModel {
        atoms,
        source_id: source_id.to_string(),
    })
}

/// Serialises a model as PQR. Numbers use shortest round-trip formatting,
/// so reparsing reproduces every value exactly. Missing charges and radii
/// are written as 0 and 1.
pub fn write_pqr(model: &ProteinModel) -> String {
    let mut out = String::new();
    for a in &model.atoms {
        let record = if a.hetero { "HETATM" } else { "ATOM" };
        let chain = if a.chain_id == ' ' { String::new() } else { format!(" {}", a.chain_id) };
        let icode = a.insertion_code.map(String::from).unwrap_or_default();
        let _ = writeln!(
            out,
            "{record} {} {} {}{chain} {}{icode} {:?} {:?} {:?} {:?} {:?}",
            a.serial,
            a.name,
            a.residue_name,
            a.residue_seq,
            a.position.x,
            a.position.y,
            a.position.z,
            a.charge.unwrap_or(0.0),
            a.vdw_radius.unwrap_or(1.0),
        );
    }
    out
}
