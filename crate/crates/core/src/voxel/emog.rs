//! "EMOG" grid dataset container.
//!
//! ```text
//! magic    4 bytes  "EMOG"
//! version  u16 LE
//! count    u64 LE
//! count × {
//!   label    u8        class index 0..19
//!   id_len   u32 LE
//!   id       id_len bytes UTF-8
//!   values   56000 × f32 LE
//! }
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::grid::{MicroEnvGrid, GRID_LEN};
use crate::amino::AminoAcid;

pub const EMOG_MAGIC: &[u8; 4] = b"EMOG";
pub const EMOG_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum EmogError {
    #[error("not an EMOG file (bad magic)")]
    BadMagic,
    #[error("EMOG version {found} unsupported (expected {EMOG_VERSION})")]
    VersionMismatch { found: u16 },
    #[error("EMOG file truncated")]
    Truncated,
    #[error("EMOG file corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), EmogError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => EmogError::Truncated,
        _ => EmogError::Io(e),
    })
}

pub fn write_emog<W: Write>(mut w: W, grids: &[MicroEnvGrid]) -> Result<(), EmogError> {
    w.write_all(EMOG_MAGIC)?;
    w.write_all(&EMOG_VERSION.to_le_bytes())?;
    w.write_all(&(grids.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(GRID_LEN * 4);
    for g in grids {
        if g.values.len() != GRID_LEN {
            return Err(EmogError::Corrupt(format!("grid {} has {} values", g.site_id, g.values.len())));
        }
        w.write_all(&[g.label.index() as u8])?;
        w.write_all(&(g.site_id.len() as u32).to_le_bytes())?;
        w.write_all(g.site_id.as_bytes())?;
        buf.clear();
        for v in &g.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_emog<R: Read>(mut r: R) -> Result<Vec<MicroEnvGrid>, EmogError> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != EMOG_MAGIC {
        return Err(EmogError::BadMagic);
    }
    let mut v = [0u8; 2];
    read_exact(&mut r, &mut v)?;
    let found = u16::from_le_bytes(v);
    if found != EMOG_VERSION {
        return Err(EmogError::VersionMismatch { found });
    }
    let mut n = [0u8; 8];
    read_exact(&mut r, &mut n)?;
    let count = u64::from_le_bytes(n);
    let mut grids = Vec::new();
    let mut raw = vec![0u8; GRID_LEN * 4];
    for _ in 0..count {
        let mut label = [0u8; 1];
        read_exact(&mut r, &mut label)?;
        let label = AminoAcid::from_index(label[0] as usize)
            .ok_or_else(|| EmogError::Corrupt(format!("label byte {}", label[0])))?;
        let mut len = [0u8; 4];
        read_exact(&mut r, &mut len)?;
        let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
        read_exact(&mut r, &mut id)?;
        let site_id = String::from_utf8(id).map_err(|_| EmogError::Corrupt("site id is not UTF-8".into()))?;
        read_exact(&mut r, &mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        grids.push(MicroEnvGrid { label, site_id, values });
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(EmogError::Corrupt("trailing bytes after last sample".into()));
    }
    Ok(grids)
}
