//! "EMOC" checkpoint container.
//!
//! ```text
//! magic      4 bytes  "EMOC"
//! version    u16 LE
//! header_len u32 LE, then header_len bytes of UTF-8 TOML
//!            ([provenance] and [model] tables)
//! n_tensors  u32 LE
//! n_tensors × {
//!   name_len u32 LE, name bytes
//!   rank     u32 LE, rank × u32 LE dims
//!   dtype    u8 (0 = f32, 1 = f64)
//!   data     prod(dims) little-endian values
//! }
//! ```
//!
//! Parameters and batch-norm running statistics are both stored, in
//! registration order.

use std::collections::HashSet;
use std::io::{self, Read, Write};

use emocpd_autograd::{DType, Scalar, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ModelConfig;
use super::model::Model;

pub const EMOC_MAGIC: &[u8; 4] = b"EMOC";
pub const EMOC_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not an EMOC checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint version {found} unsupported (expected {EMOC_VERSION})")]
    VersionMismatch { found: u16 },
    #[error("checkpoint truncated")]
    Truncated,
    #[error("tensor {name}: shape {found:?} does not match config shape {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("checkpoint lacks tensor {0}")]
    Missing(String),
    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for CheckpointError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof => CheckpointError::Truncated,
            _ => CheckpointError::Io(e),
        }
    }
}

/// Where a checkpoint came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub config_sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Header {
    provenance: Provenance,
    model: ModelConfig,
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn save_checkpoint<W: Write, T: Scalar>(
    mut w: W,
    model: &Model<T>,
    provenance: &Provenance,
) -> Result<(), CheckpointError> {
    let header = toml::to_string(&Header {
        provenance: provenance.clone(),
        model: model.config.clone(),
    })
    .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    w.write_all(EMOC_MAGIC)?;
    w.write_all(&EMOC_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    w.write_all(&(model.store.len() as u32).to_le_bytes())?;
    let mut buf = Vec::new();
    for (_, p) in model.store.iter() {
        buf.clear();
        buf.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(p.name.as_bytes());
        buf.extend_from_slice(&(p.value.rank() as u32).to_le_bytes());
        for &d in p.value.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        buf.push(T::DTYPE.tag());
        for &v in p.value.data() {
            v.write_le(&mut buf);
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn decode<T: Scalar>(bytes: &[u8], dtype: DType) -> Vec<T> {
    match dtype {
        DType::F32 => bytes
            .chunks_exact(4)
            .map(|b| T::from_f64_lossy(f32::read_le(b) as f64))
            .collect(),
        DType::F64 => bytes.chunks_exact(8).map(|b| T::from_f64_lossy(f64::read_le(b))).collect(),
    }
}

/// Rebuilds the model described by the header and fills every tensor.
/// Nothing is returned unless the whole file is consistent.
pub fn load_checkpoint<R: Read, T: Scalar>(mut r: R) -> Result<(Model<T>, Provenance), CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != EMOC_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    let found = u16::from_le_bytes(v);
    if found != EMOC_VERSION {
        return Err(CheckpointError::VersionMismatch { found });
    }
    let len = read_u32(&mut r)? as usize;
    let mut text = vec![0u8; len];
    r.read_exact(&mut text)?;
    let text = String::from_utf8(text).map_err(|_| CheckpointError::Corrupt("header is not UTF-8".into()))?;
    let header: Header = toml::from_str(&text).map_err(|e| CheckpointError::Corrupt(format!("header: {e}")))?;
    let mut model = Model::<T>::new(&header.model, 0).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;

    let count = read_u32(&mut r)? as usize;
    let mut seen = HashSet::new();
    for _ in 0..count {
        let n = read_u32(&mut r)? as usize;
        if n > 4096 {
            return Err(CheckpointError::Corrupt(format!("tensor name length {n}")));
        }
        let mut name = vec![0u8; n];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| CheckpointError::Corrupt("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 8 {
            return Err(CheckpointError::Corrupt(format!("{name}: rank {rank}")));
        }
        let dims = (0..rank).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let dtype = DType::from_tag(tag[0]).ok_or_else(|| CheckpointError::Corrupt(format!("{name}: dtype tag {}", tag[0])))?;
        let id = model
            .store
            .id(&name)
            .ok_or_else(|| CheckpointError::Corrupt(format!("unexpected tensor {name}")))?;
        let expected = model.store.value(id).shape().to_vec();
        if dims != expected {
            return Err(CheckpointError::ShapeMismatch {
                name,
                expected,
                found: dims,
            });
        }
        let mut raw = vec![0u8; expected.iter().product::<usize>() * dtype.size()];
        r.read_exact(&mut raw)?;
        let t = Tensor::new(expected, decode(&raw, dtype)).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        model.store.set_value(id, t).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        if !seen.insert(name.clone()) {
            return Err(CheckpointError::Corrupt(format!("duplicate tensor {name}")));
        }
    }
    if let Some((_, p)) = model.store.iter().find(|(_, p)| !seen.contains(&p.name)) {
        return Err(CheckpointError::Missing(p.name.clone()));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    Ok((model, header.provenance))
}
