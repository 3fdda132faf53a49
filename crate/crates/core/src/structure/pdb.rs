use std::collections::HashMap;

use super::{infer_element, Atom, ProteinModel, StructureError};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Default)]
pub struct PdbOptions {
    /// Also read HETATM records. Selenomethionine records are read either way.
    pub include_hetatm: bool,
    pub source_id: String,
}

/// 1-based inclusive column range, clipped to the line.
fn cols(line: &str, from: usize, to: usize) -> &str {
    let bytes = line.as_bytes();
    let start = (from - 1).min(bytes.len());
    let end = to.min(bytes.len());
    line.get(start..end).unwrap_or("")
}

fn err(line: usize, message: impl Into<String>) -> StructureError {
    StructureError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads ATOM records of the first model in fixed-column PDB text.
///
/// Alternate locations collapse to the highest-occupancy conformer (the first
/// seen wins ties) and keep the position of the first record in the output.
pub fn parse_pdb(text: &str, opts: &PdbOptions) -> Result<ProteinModel, StructureError> {
    let mut atoms: Vec<Atom> = Vec::new();
    let mut alt_index: HashMap<(char, i32, Option<char>, String), usize> = HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let record = cols(line, 1, 6).trim_end();
        match record {
            "ENDMDL" | "END" if !atoms.is_empty() => break,
            "ATOM" => {}
            "HETATM" if opts.include_hetatm || cols(line, 18, 20).trim() == "MSE" => {}
            _ => continue,
        }
        if line.len() < 54 {
            return Err(err(lineno, format!("record too short for coordinates ({} columns)", line.len())));
        }
        let coord = |from, to, axis| {
            cols(line, from, to)
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(lineno, format!("malformed {axis} coordinate {:?}", cols(line, from, to))))
        };
        let position = Vec3::new(coord(31, 38, "x")?, coord(39, 46, "y")?, coord(47, 54, "z")?);
        let serial_field = cols(line, 7, 11).trim();
        let serial = serial_field
            .parse::<i64>()
            .map_err(|_| err(lineno, format!("malformed serial {serial_field:?}")))?;
        let raw_name = cols(line, 13, 16);
        let residue_name = cols(line, 18, 20).trim().to_string();
        let seq_field = cols(line, 23, 26).trim();
        let residue_seq = seq_field
            .parse::<i32>()
            .map_err(|_| err(lineno, format!("malformed residue number {seq_field:?}")))?;
        let occ_field = cols(line, 55, 60).trim();
        let occupancy = if occ_field.is_empty() {
            1.0
        } else {
            occ_field
                .parse::<f64>()
                .ok()
                .filter(|o| (0.0..=1.0).contains(o))
                .ok_or_else(|| err(lineno, format!("malformed occupancy {occ_field:?}")))?
        };
        let element_field = cols(line, 77, 78).trim();
        let element = if element_field.is_empty() {
            infer_element(raw_name, &residue_name)
        } else {
            element_field.to_ascii_uppercase()
        };
        let alt = cols(line, 17, 17).chars().next().filter(|c| *c != ' ');
        let atom = Atom {
            serial,
            name: raw_name.trim().to_string(),
            element,
            residue_name,
            chain_id: cols(line, 22, 22).chars().next().unwrap_or(' '),
            residue_seq,
            insertion_code: cols(line, 27, 27).chars().next().filter(|c| *c != ' '),
            position,
            occupancy,
            charge: None,
            vdw_radius: None,
            hetero: record == "HETATM",
        };
        if alt.is_some() {
            let key = (atom.chain_id, atom.residue_seq, atom.insertion_code, atom.name.clone());
            if let Some(&idx) = alt_index.get(&key) {
                if atom.occupancy > atoms[idx].occupancy {
                    atoms[idx] = atom;
                }
                continue;
            }
            alt_index.insert(key, atoms.len());
        }
        atoms.push(atom);
    }
    if atoms.is_empty() {
        return Err(StructureError::EmptyModel);
    }
    Ok(ProteinModel {
        atoms,
        source_id: opts.source_id.clone(),
    })
}

/// Atom-name field as it sits in columns 13–16: names shorter than four
/// characters with a one-letter element start in column 14.
fn name_field(atom: &Atom) -> String {
    if atom.name.len() < 4 && atom.element.len() == 1 {
        format!(" {:<3}", atom.name)
    } else {
        format!("{:<4}", atom.name)
    }
}

/// Writes ATOM/HETATM records (with element columns), TER between chains
/// and a closing END. Coordinates are rounded to the format's 3 decimals.
pub fn write_pdb(model: &ProteinModel) -> String {
    let mut out = String::new();
    let mut prev_chain: Option<char> = None;
    for a in &model.atoms {
        if prev_chain.is_some_and(|c| c != a.chain_id) {
            out.push_str("TER\n");
        }
        prev_chain = Some(a.chain_id);
        out.push_str(&format!(
            "{:<6}{:>5} {} {:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}\n",
            if a.hetero { "HETATM" } else { "ATOM" },
            a.serial,
            name_field(a),
            a.residue_name,
            a.chain_id,
            a.residue_seq,
            a.insertion_code.unwrap_or(' '),
            a.position.x,
            a.position.y,
            a.position.z,
            a.occupancy,
            0.0,
            a.element,
        ));
    }
    if !model.atoms.is_empty() {
        out.push_str("TER\n");
    }
    out.push_str("END\n");
    out
}
