//! Additive Gaussian corruption of selected features.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Provenance};
use crate::rng::seeded;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    /// Every feature (e.g. all pixels).
    All,
    /// A feature by schema name.
    Feature(String),
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub target: NoiseTarget,
    pub mean: f64,
    pub std: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub entries: Vec<NoiseEntry>,
    #[serde(default)]
    pub seed: u64,
    /// Applied to the noised features after all entries, in scaled units.
    #[serde(default)]
    pub clip: Option<[f64; 2]>,
    /// Features are multiplied by this before noise and clipping and divided
    /// afterwards, so noise can be specified in raw units (255 for pixels).
    #[serde(default = "unit_scale")]
    pub value_scale: f64,
}

impl NoiseSpec {
    /// Mean 2, std 100 on raw 0-255 pixels, clipped to the pixel range.
    pub fn mnist(seed: u64) -> Self {
        Self {
            entries: vec![NoiseEntry {
                target: NoiseTarget::All,
                mean: 2.0,
                std: 100.0,
            }],
            seed,
            clip: Some([0.0, 255.0]),
            value_scale: 255.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if !(e.std >= 0.0 && e.std.is_finite()) {
                return Err(Error::InvalidNoise(format!("std must be finite and >= 0, got {}", e.std)));
            }
            if !e.mean.is_finite() {
                return Err(Error::InvalidNoise(format!("mean must be finite, got {}", e.mean)));
            }
        }
        if !(self.value_scale > 0.0 && self.value_scale.is_finite()) {
            return Err(Error::InvalidNoise(format!("value_scale must be positive, got {}", self.value_scale)));
        }
        if let Some([lo, hi]) = self.clip {
            // written so NaN bounds fail too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(lo <= hi) {
                return Err(Error::InvalidNoise(format!("clip range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }
}

fn columns<T: Scalar>(ds: &LabeledDataset<T>, target: &NoiseTarget) -> Result<Vec<usize>> {
    match target {
        NoiseTarget::All => Ok((0..ds.dim()).collect()),
        NoiseTarget::Index(i) if *i < ds.dim() => Ok(vec![*i]),
        NoiseTarget::Index(i) => Err(Error::InvalidNoise(format!(
            "feature index {i} out of range for {} features",
            ds.dim()
        ))),
        NoiseTarget::Feature(name) => ds
            .schema()
            .iter()
            .position(|s| &s.name == name)
            .map(|i| vec![i])
            .ok_or_else(|| Error::UnknownColumn(name.clone())),
    }
}

/// `x' = clip(x * scale + N(mean, std^2)) / scale` on the targeted features.
/// Labels and row count are untouched; the result is marked noisy.
pub fn add_gaussian_noise<T: Scalar>(ds: &LabeledDataset<T>, spec: &NoiseSpec) -> Result<LabeledDataset<T>> {
    spec.validate()?;
    let targets = spec
        .entries
        .iter()
        .map(|e| columns(ds, &e.target))
        .collect::<Result<Vec<_>>>()?;
    let scale = spec.value_scale;
    let mut raw = ds.features().mapv(|v| v.as_f64() * scale);
    let mut touched = vec![false; ds.dim()];
    let mut rng = seeded(spec.seed);
    for (entry, cols) in spec.entries.iter().zip(&targets) {
        let normal = Normal::new(entry.mean, entry.std).expect("validated");
        for mut row in raw.rows_mut() {
            for &c in cols {
                row[c] += normal.sample(&mut rng);
            }
        }
        for &c in cols {
            touched[c] = true;
        }
    }
    if let Some([lo, hi]) = spec.clip {
        for mut row in raw.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                if touched[c] {
                    *v = v.clamp(lo, hi);
                }
            }
        }
    }
    ds.replace_features(raw.mapv(|v| T::lit(v / scale)), Provenance::Noisy)
}
