use std::fs;
use std::path::Path;

use dbue_core::EpochMetrics;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method, Seeds};
use crate::{HarnessError, Result};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    Noisy,
    Ood,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Test, Split::Noisy, Split::Ood];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Noisy => "noisy",
            Split::Ood => "ood",
        }
    }
}

/// Counts of `log10(u)` in fixed-width bins over `[LOG10_MIN, LOG10_MAX)`;
/// values outside land in `underflow` / `overflow`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub log10_min: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub const LOG10_MIN: f64 = -8.0;
    pub const LOG10_MAX: f64 = 4.0;
    pub const BIN_WIDTH: f64 = 0.25;

    pub fn of(values: &[f64]) -> Self {
        let bins = ((Self::LOG10_MAX - Self::LOG10_MIN) / Self::BIN_WIDTH).round() as usize;
        let mut h = Histogram {
            log10_min: Self::LOG10_MIN,
            bin_width: Self::BIN_WIDTH,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        };
        for &v in values {
            let x = v.log10();
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN goes to underflow
            if !(x >= Self::LOG10_MIN) {
                h.underflow += 1;
            } else {
                let bin = ((x - Self::LOG10_MIN) / Self::BIN_WIDTH).floor() as usize;
                match h.counts.get_mut(bin) {
                    Some(c) => *c += 1,
                    None => h.overflow += 1,
                }
            }
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub split: Split,
    pub method: Method,
    /// `None` when the split has no usable labels and scoring is off.
    pub accuracy: Option<f64>,
    pub median_uncertainty: f64,
    pub n: usize,
    /// Samples where the variance or strength floor engaged (dbue only).
    pub floored_count: usize,
    /// Samples whose moment-matched strength came out negative (dbue only).
    pub negative_strength_count: usize,
    pub histogram: Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    /// `dropout` (shared by dbue) or `baseline` (shared by dec and iad).
    pub network: String,
    pub parameters: usize,
    pub epochs: Vec<EpochMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    /// Loss used to train the networks behind the evidential heads.
    pub baseline_training: String,
    pub training: Vec<TrainingSummary>,
    pub splits: Vec<SplitReport>,
}

impl EvaluationReport {
    pub fn split(&self, method: Method, split: Split) -> Option<&SplitReport> {
        self.splits.iter().find(|s| s.method == method && s.split == split)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per (method, split).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "method",
            "split",
            "accuracy",
            "median_uncertainty",
            "n",
            "floored_count",
            "negative_strength_count",
        ])?;
        for s in &self.splits {
            w.write_record([
                s.method.name().to_string(),
                s.split.name().to_string(),
                s.accuracy.map_or_else(String::new, |a| a.to_string()),
                s.median_uncertainty.to_string(),
                s.n.to_string(),
                s.floored_count.to_string(),
                s.negative_strength_count.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Precondition(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn emit_report(report: &EvaluationReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let body = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv()?,
    };
    write_file(path, body.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvaluationReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Median with the midpoint rule for even counts; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
