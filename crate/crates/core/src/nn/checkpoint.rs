//! Binary model checkpoints.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic      8 bytes  "DBUECKPT"
//! version    u32      CHECKPOINT_VERSION
//! scalar     u8 len + ASCII name ("f32" | "f64")
//! config     u32 len + JSON-encoded NetworkConfig
//! layers     u32 count, then per layer:
//!              u32 rows, u32 cols, rows*cols weights (row-major), rows bias
//! ```
//!
//! Parameters are stored as raw IEEE-754 bits, so a round trip is exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::network::{DenseLayer, Network, NetworkConfig};
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DBUECKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + net.parameter_count() * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(T::NAME.len() as u8);
    out.extend_from_slice(T::NAME.as_bytes());
    let config = serde_json::to_vec(net.config()).expect("config serializes");
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        out.extend_from_slice(&(layer.outputs() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.inputs() as u32).to_le_bytes());
        for &w in layer.weights.iter() {
            w.write_le(&mut out);
        }
        for &b in layer.bias.iter() {
            b.write_le(&mut out);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            Error::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let name_len = r.take(1)?[0] as usize;
    let name = r.take(name_len)?;
    if name != T::NAME.as_bytes() {
        return Err(Error::Checkpoint(format!(
            "scalar type mismatch: file holds {}, requested {}",
            String::from_utf8_lossy(name),
            T::NAME
        )));
    }
    let config_len = r.u32()? as usize;
    let config: NetworkConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| Error::Checkpoint(format!("config: {e}")))?;
    let count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let weights: Vec<T> = r
            .take(rows * cols * T::BYTES)?
            .chunks_exact(T::BYTES)
            .map(T::read_le)
            .collect();
        let bias: Vec<T> = r
            .take(rows * T::BYTES)?
            .chunks_exact(T::BYTES)
            .map(T::read_le)
            .collect();
        layers.push(DenseLayer {
            weights: Array2::from_shape_vec((rows, cols), weights).expect("sized"),
            bias: Array1::from(bias),
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Network::from_layers(config, layers)
}

pub fn save_checkpoint<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(net)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
