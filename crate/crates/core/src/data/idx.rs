//! IDX (MNIST-family) binary files: big-endian header, u8 payload.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{LabeledDataset, Provenance};
use crate::{Error, Result, Scalar};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Raw image payload; `pixels` holds `count * rows * cols` bytes, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn header(bytes: &[u8], words: usize, path: &Path) -> Result<Vec<u32>> {
    if bytes.len() < 4 * words {
        return Err(Error::Truncated {
            path: path.into(),
            detail: format!("header needs {} bytes, file has {}", 4 * words, bytes.len()),
        });
    }
    Ok(bytes[..4 * words]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn check_magic(found: u32, expected: u32, path: &Path) -> Result<()> {
    if found != expected {
        return Err(Error::WrongMagic {
            path: path.into(),
            expected,
            found,
        });
    }
    Ok(())
}

fn payload<'a>(bytes: &'a [u8], offset: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    let have = bytes.len() - offset;
    if have < len {
        return Err(Error::Truncated {
            path: path.into(),
            detail: format!("payload needs {len} bytes, found {have}"),
        });
    }
    Ok(&bytes[offset..offset + len])
}

/// `path` is only used in error messages.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<IdxImages> {
    let h = header(bytes, 1, path)?;
    check_magic(h[0], IMAGE_MAGIC, path)?;
    let h = header(bytes, 4, path)?;
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let pixels = payload(bytes, 16, count * rows * cols, path)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let h = header(bytes, 1, path)?;
    check_magic(h[0], LABEL_MAGIC, path)?;
    let h = header(bytes, 2, path)?;
    Ok(payload(bytes, 8, h[1] as usize, path)?.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image/label file pair with pixels scaled to `[0, 1]`.
pub fn load_idx<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    provenance: Provenance,
) -> Result<LabeledDataset<T>> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = parse_idx_images(&read(ip)?, ip)?;
    let labels = parse_idx_labels(&read(lp)?, lp)?;
    if images.count != labels.len() {
        return Err(Error::CountMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    let d = images.rows * images.cols;
    let scale = T::lit(1.0 / 255.0);
    let features = Array2::from_shape_vec(
        (images.count, d),
        images.pixels.iter().map(|&p| T::lit(p as f64) * scale).collect(),
    )
    .expect("sized");
    let classes = labels.iter().max().map_or(0, |&m| m as usize + 1).max(10);
    LabeledDataset::with_numeric_schema(
        features,
        Some(labels.into_iter().map(usize::from).collect()),
        classes,
        provenance,
    )
}
