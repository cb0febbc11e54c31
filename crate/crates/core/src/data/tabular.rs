//! CSV ingestion with training-split standardization, imputation and
//! categorical encoding.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{FeatureSpec, LabeledDataset, Provenance};
use crate::{Error, Result, Scalar};

/// Header plus untyped cells, as read from disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            headers: self.headers.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

pub fn read_csv_table(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyFile(path.into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record?.iter().map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.into()));
    }
    Ok(RawTable { headers, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalEncoding {
    /// One 0/1 column: 1 for the lexicographically larger of two levels.
    Binary,
    /// One column per training level, in sorted order.
    OneHot,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub name: String,
    pub encoding: CategoricalEncoding,
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "?".into(), "NA".into()]
}

fn default_classes() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularSchema {
    /// Integer label column; `None` for unlabeled (OOD) tables.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<CategoricalSpec>,
    #[serde(default = "default_missing")]
    pub missing_tokens: Vec<String>,
}

impl TabularSchema {
    /// Titanic passenger features: Pclass, Sex, Age, SibSp, Parch, Fare, Embarked.
    pub fn titanic() -> Self {
        Self {
            label: Some("survived".into()),
            classes: 2,
            numeric: ["pclass", "age", "sibsp", "parch", "fare"].map(String::from).to_vec(),
            categorical: vec![
                CategoricalSpec {
                    name: "sex".into(),
                    encoding: CategoricalEncoding::Binary,
                },
                CategoricalSpec {
                    name: "embarked".into(),
                    encoding: CategoricalEncoding::OneHot,
                },
            ],
            missing_tokens: default_missing(),
        }
    }

    /// Every column of `table` as an unlabeled numeric feature.
    pub fn all_numeric(table: &RawTable) -> Self {
        Self {
            label: None,
            classes: 2,
            numeric: table.headers.clone(),
            categorical: Vec::new(),
            missing_tokens: default_missing(),
        }
    }

    fn is_missing(&self, cell: &str) -> bool {
        self.missing_tokens.iter().any(|t| t == cell)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct NumericStats {
    median: f64,
    mean: f64,
    std: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct CategoricalStats {
    encoding: CategoricalEncoding,
    levels: Vec<String>,
    mode: String,
}

/// Statistics fitted on a training split and reused verbatim for every
/// other split of the same schema.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularEncoder {
    schema: TabularSchema,
    numeric: Vec<NumericStats>,
    categorical: Vec<CategoricalStats>,
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        })
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl TabularEncoder {
    pub fn fit(table: &RawTable, schema: &TabularSchema) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(label) = &schema.label {
            table.column(label)?;
        }
        let mut numeric = Vec::with_capacity(schema.numeric.len());
        for name in &schema.numeric {
            let column = table.column(name)?;
            let mut observed = Vec::new();
            for (r, row) in table.rows.iter().enumerate() {
                let cell = &row[column];
                if !schema.is_missing(cell) {
                    observed.push(parse_cell(cell, r + 1, name)?);
                }
            }
            let median = if observed.is_empty() { 0.0 } else { median(observed.clone()) };
            let n = table.len() as f64;
            let seen = observed.len() as f64;
            let mean = (observed.iter().sum::<f64>() + (n - seen) * median) / n;
            let var = (observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                + (n - seen) * (median - mean).powi(2))
                / n;
            let std = if var > 0.0 { var.sqrt() } else { 1.0 };
            numeric.push(NumericStats {
                median,
                mean,
                std,
            });
        }
        let mut categorical = Vec::with_capacity(schema.categorical.len());
        for spec in &schema.categorical {
            let column = table.column(&spec.name)?;
            let mut counts = std::collections::BTreeMap::<&str, usize>::new();
            for row in &table.rows {
                let cell = row[column].as_str();
                if !schema.is_missing(cell) {
                    *counts.entry(cell).or_default() += 1;
                }
            }
            // ties resolve to the smallest level
            let mode = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map_or_else(String::new, |(k, _)| k.to_string());
            let levels: Vec<String> = if counts.is_empty() {
                vec![mode.clone()]
            } else {
                counts.keys().map(|k| k.to_string()).collect()
            };
            if spec.encoding == CategoricalEncoding::Binary && levels.len() > 2 {
                return Err(Error::Domain(format!(
                    "binary column `{}` has {} levels",
                    spec.name,
                    levels.len()
                )));
            }
            categorical.push(CategoricalStats {
                encoding: spec.encoding,
                levels,
                mode,
            });
        }
        Ok(Self {
            schema: schema.clone(),
            numeric,
            categorical,
        })
    }

    pub fn schema(&self) -> &TabularSchema {
        &self.schema
    }

    pub fn feature_specs(&self) -> Vec<FeatureSpec> {
        let mut specs: Vec<FeatureSpec> = self
            .schema
            .numeric
            .iter()
            .map(FeatureSpec::numeric)
            .collect();
        for (spec, stats) in self.schema.categorical.iter().zip(&self.categorical) {
            match stats.encoding {
                CategoricalEncoding::Binary => {
                    let level = stats.levels.last().expect("nonempty");
                    specs.push(FeatureSpec::categorical(format!("{}={level}", spec.name)));
                }
                CategoricalEncoding::OneHot => specs.extend(
                    stats
                        .levels
                        .iter()
                        .map(|l| FeatureSpec::categorical(format!("{}={l}", spec.name))),
                ),
            }
        }
        specs
    }

    pub fn dim(&self) -> usize {
        self.feature_specs().len()
    }

    /// Encodes `table`, which must carry the fitted columns (by name).
    pub fn transform<T: Scalar>(&self, table: &RawTable, provenance: Provenance) -> Result<LabeledDataset<T>> {
        if table.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = self.dim();
        // the table may have been read separately, so columns resolve by name
        let numeric_cols = self
            .schema
            .numeric
            .iter()
            .map(|n| table.column(n))
            .collect::<Result<Vec<_>>>()?;
        let categorical_cols = self
            .schema
            .categorical
            .iter()
            .map(|c| table.column(&c.name))
            .collect::<Result<Vec<_>>>()?;
        let label_col = self.schema.label.as_deref().map(|l| table.column(l)).transpose()?;

        let mut features = Vec::with_capacity(table.len() * d);
        let mut labels = label_col.map(|_| Vec::with_capacity(table.len()));
        for (r, row) in table.rows.iter().enumerate() {
            for ((stats, &c), name) in self.numeric.iter().zip(&numeric_cols).zip(&self.schema.numeric) {
                let cell = &row[c];
                let v = if self.schema.is_missing(cell) {
                    stats.median
                } else {
                    parse_cell(cell, r + 1, name)?
                };
                features.push(T::lit((v - stats.mean) / stats.std));
            }
            for (stats, &c) in self.categorical.iter().zip(&categorical_cols) {
                let cell = row[c].as_str();
                let value = if self.schema.is_missing(cell) { stats.mode.as_str() } else { cell };
                match stats.encoding {
                    CategoricalEncoding::Binary => {
                        let hot = stats.levels.len() == 2 && value == stats.levels[1];
                        features.push(if hot { T::one() } else { T::zero() });
                    }
                    CategoricalEncoding::OneHot => {
                        features.extend(stats.levels.iter().map(|l| if l == value { T::one() } else { T::zero() }))
                    }
                }
            }
            if let (Some(labels), Some(c)) = (labels.as_mut(), label_col) {
                let name = self.schema.label.as_deref().unwrap_or_default();
                let v = parse_cell(&row[c], r + 1, name)?;
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::Parse {
                        row: r + 1,
                        column: name.to_string(),
                        value: row[c].clone(),
                    });
                }
                labels.push(v as usize);
            }
        }
        let features = Array2::from_shape_vec((table.len(), d), features).expect("sized");
        LabeledDataset::new(features, labels, self.schema.classes, self.feature_specs(), provenance)
    }
}

/// Reads `path` and encodes it with statistics fitted on the whole file.
/// Callers holding separate splits should use [`TabularEncoder`] directly.
pub fn load_csv_tabular<T: Scalar>(path: impl AsRef<Path>, schema: &TabularSchema) -> Result<LabeledDataset<T>> {
    let table = read_csv_table(path)?;
    TabularEncoder::fit(&table, schema)?.transform(&table, Provenance::Train)
}
