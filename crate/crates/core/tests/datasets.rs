//! Checks against the real dataset files; skipped when `data/` is absent.

use std::path::PathBuf;

use dbue_core::data::{load_idx, parse_idx_images, read_csv_table, TabularEncoder, TabularSchema};
use dbue_core::{Error, LabeledDataset, Provenance};

fn data_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("DBUE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    if dir.join("t10k-images-idx3-ubyte").exists() {
        Some(dir)
    } else {
        eprintln!("skipping: no dataset files in {}", dir.display());
        None
    }
}

#[test]
fn mnist_test_split_shape() {
    let Some(dir) = data_dir() else { return };
    let ds: LabeledDataset = load_idx(
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
        Provenance::Test,
    )
    .unwrap();
    assert_eq!((ds.len(), ds.dim()), (10_000, 784));
    assert!(ds.labels().unwrap().iter().all(|&y| y <= 9));
    assert!(ds.features().iter().all(|&v| (0.0..=1.0).contains(&v)));
    let again: LabeledDataset = load_idx(
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
        Provenance::Test,
    )
    .unwrap();
    assert_eq!(ds, again);
}

#[test]
fn label_file_is_not_an_image_file() {
    let Some(dir) = data_dir() else { return };
    let path = dir.join("t10k-labels-idx1-ubyte");
    let bytes = std::fs::read(&path).unwrap();
    let err = parse_idx_images(&bytes, &path).unwrap_err();
    assert!(matches!(err, Error::WrongMagic { found: 2049, expected: 2051, .. }));
    assert!(err.to_string().contains("wrong magic"));
}

#[test]
fn titanic_encodes_to_nine_features() {
    let Some(dir) = data_dir() else { return };
    let table = read_csv_table(dir.join("titanic.csv")).unwrap();
    let enc = TabularEncoder::fit(&table, &TabularSchema::titanic()).unwrap();
    assert_eq!(enc.dim(), 9);
    let ds: LabeledDataset = enc.transform(&table, Provenance::Train).unwrap();
    assert_eq!(ds.len(), table.len());
    assert!(ds.labels().unwrap().iter().all(|&y| y < 2));
}
