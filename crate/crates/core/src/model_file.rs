//! Portable model file.
//!
//! ```text
//! "MLGC"                 4 bytes
//! version                1 byte (= 1)
//! d, h, c                u64 little-endian each
//! W0 (d x h), W1 (h x c), Z (c x h)
//!                        f64 little-endian, row-major
//! ```

use std::fs;
use std::path::Path;

use crate::embed::LabelEmbedding;
use crate::error::{Error, Result};
use crate::gcn::GcnParams;
use crate::tensor::DenseMatrix;
use crate::trainer::Model;

pub const MAGIC: &[u8; 4] = b"MLGC";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 3 * 8;

pub fn encode(model: &Model) -> Vec<u8> {
    let (d, h, c) = model.dims();
    let tensors = [&model.params.w0, &model.params.w1, &model.embedding.z];
    let floats: usize = tensors.iter().map(|t| t.values().len()).sum();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * floats);
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    for dim in [d, h, c] {
        buf.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for t in tensors {
        for v in t.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn decode(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Model(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Model("bad magic bytes".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Model(format!("unsupported version {}", bytes[4])));
    }
    let dim = |k: usize| {
        let start = 5 + 8 * k;
        u64::from_le_bytes(bytes[start..start + 8].try_into().unwrap()) as usize
    };
    let (d, h, c) = (dim(0), dim(1), dim(2));
    let counts = [d * h, h * c, c * h];
    let expected = HEADER_LEN + 8 * counts.iter().sum::<usize>();
    if bytes.len() != expected {
        return Err(Error::Model(format!(
            "expected {expected} bytes for d={d}, h={h}, c={c}, found {}",
            bytes.len()
        )));
    }
    let mut floats = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    let mut take = |rows: usize, cols: usize| {
        DenseMatrix::new(rows, cols, floats.by_ref().take(rows * cols).collect())
            .map_err(|e| Error::Model(e.to_string()))
    };
    let w0 = take(d, h)?;
    let w1 = take(h, c)?;
    let z = take(c, h)?;
    Ok(Model {
        params: GcnParams { w0, w1 },
        embedding: LabelEmbedding { z },
    })
}

pub fn write(path: &Path, model: &Model) -> Result<()> {
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Model> {
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
