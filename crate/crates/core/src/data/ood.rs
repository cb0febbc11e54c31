use ndarray::{Array2, Axis};

use super::{FeatureKind, FeatureSpec, LabeledDataset, Provenance};
use crate::{Error, Result, Scalar};

/// Fits an out-of-distribution table to a model's input width.
///
/// Numeric columns are standardized with the set's own statistics (columns
/// with zero spread are only centered), then the matrix is truncated or
/// zero-padded on the right to `target_dim`. Labels are dropped: the OOD
/// label space is unrelated to the model's `class_count`.
pub fn align_ood_features<T: Scalar>(
    ood: &LabeledDataset<T>,
    target_dim: usize,
    class_count: usize,
) -> Result<LabeledDataset<T>> {
    if ood.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if target_dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    if !ood.schema().iter().any(|s| s.kind == FeatureKind::Numeric) {
        return Err(Error::Domain("OOD set has no numeric feature".into()));
    }
    let n = ood.len() as f64;
    let mut features = Array2::<T>::zeros((ood.len(), target_dim));
    let mut schema = Vec::with_capacity(target_dim);
    for j in 0..target_dim {
        if j >= ood.dim() {
            schema.push(FeatureSpec::numeric(format!("pad{j}")));
            continue;
        }
        let spec = &ood.schema()[j];
        schema.push(spec.clone());
        let col = ood.features().index_axis(Axis(1), j);
        let mut out = features.index_axis_mut(Axis(1), j);
        if spec.kind == FeatureKind::Numeric {
            let mean = col.iter().map(|v| v.as_f64()).sum::<f64>() / n;
            let var = col.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / n;
            let std = if var > 0.0 { var.sqrt() } else { 1.0 };
            out.zip_mut_with(&col, |o, &v| *o = T::lit((v.as_f64() - mean) / std));
        } else {
            out.assign(&col);
        }
    }
    LabeledDataset::new(features, None, class_count, schema, Provenance::Ood)
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn ood() -> LabeledDataset {
        LabeledDataset::with_numeric_schema(
            array![[1.0, 10.0, 5.0], [3.0, 30.0, 5.0]],
            Some(vec![0, 1]),
            2,
            Provenance::Test,
        )
        .unwrap()
    }

    #[test]
    fn same_width_only_standardizes() {
        let out = align_ood_features(&ood(), 3, 2).unwrap();
        assert_eq!(out.features(), &array![[-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]]);
        assert_eq!(out.labels(), None);
        assert_eq!(out.label_or_placeholder(0), -1);
        assert_eq!(out.provenance(), Provenance::Ood);
    }

    #[test]
    fn pads_and_truncates() {
        let wide = align_ood_features(&ood(), 5, 2).unwrap();
        assert_eq!(wide.dim(), 5);
        assert!(wide.features().column(3).iter().chain(wide.features().column(4).iter()).all(|&v| v == 0.0));
        let narrow = align_ood_features(&ood(), 2, 2).unwrap();
        assert_eq!(narrow.features(), &array![[-1.0, -1.0], [1.0, 1.0]]);
    }

    #[test]
    fn needs_a_numeric_feature() {
        let cat = LabeledDataset::new(
            array![[1.0]],
            None,
            2,
            vec![FeatureSpec::categorical("c")],
            Provenance::Ood,
        )
        .unwrap();
        assert!(align_ood_features(&cat, 1, 2).is_err());
    }
}
