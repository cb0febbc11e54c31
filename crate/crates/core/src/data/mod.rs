//! Datasets and the transformations applied to them before evaluation.

mod idx;
mod noise;
mod ood;
mod rotate;
mod tabular;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IdxImages, IMAGE_MAGIC, LABEL_MAGIC};
pub use noise::{add_gaussian_noise, NoiseEntry, NoiseSpec, NoiseTarget};
pub use ood::align_ood_features;
pub use rotate::{rotate_image, ImageShape, MNIST_SHAPE};
pub use tabular::{
    load_csv_tabular, read_csv_table, CategoricalEncoding, CategoricalSpec, RawTable,
    TabularEncoder, TabularSchema,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Train,
    Test,
    Noisy,
    Ood,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    CategoricalEncoded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::CategoricalEncoded,
        }
    }
}

/// Feature matrix (`N x d`, row-major) with optional labels.
///
/// `labels` is `None` for data whose labels are unusable for scoring, such as
/// an OOD set from a different label space; such sets report label `-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset<T: Scalar = f64> {
    features: Array2<T>,
    labels: Option<Vec<usize>>,
    class_count: usize,
    schema: Vec<FeatureSpec>,
    provenance: Provenance,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(
        features: Array2<T>,
        labels: Option<Vec<usize>>,
        class_count: usize,
        schema: Vec<FeatureSpec>,
        provenance: Provenance,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if schema.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                actual: schema.len(),
            });
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        if let Some(labels) = &labels {
            if labels.len() != features.nrows() {
                return Err(Error::CountMismatch {
                    images: features.nrows(),
                    labels: labels.len(),
                });
            }
            if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
                return Err(Error::LabelOutOfRange {
                    label: bad,
                    classes: class_count,
                });
            }
        }
        let features = if features.is_standard_layout() {
            features
        } else {
            features.as_standard_layout().into_owned()
        };
        Ok(Self {
            features,
            labels,
            class_count,
            schema,
            provenance,
        })
    }

    /// Dataset whose columns are all numeric and named `x0, x1, ...`.
    pub fn with_numeric_schema(
        features: Array2<T>,
        labels: Option<Vec<usize>>,
        class_count: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        let schema = (0..features.ncols())
            .map(|i| FeatureSpec::numeric(format!("x{i}")))
            .collect();
        Self::new(features, labels, class_count, schema, provenance)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[T] {
        let start = i * self.dim();
        &self.features.as_slice().expect("standard layout")[start..start + self.dim()]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Label of row `i`, `-1` when labels are unusable.
    pub fn label_or_placeholder(&self, i: usize) -> i64 {
        self.labels.as_ref().map_or(-1, |l| l[i] as i64)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Drops the labels (placeholder `-1` for every row).
    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: bad,
            });
        }
        Ok(Self {
            features: self.features.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            class_count: self.class_count,
            schema: self.schema.clone(),
            provenance: self.provenance,
        })
    }

    /// First `n` rows (all rows when `n >= len`).
    pub fn head(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        self.select(&(0..n).collect::<Vec<_>>())
    }

    pub(crate) fn replace_features(&self, features: Array2<T>, provenance: Provenance) -> Result<Self> {
        Self::new(
            features,
            self.labels.clone(),
            self.class_count,
            self.schema.clone(),
            provenance,
        )
    }
}
