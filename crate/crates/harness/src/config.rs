//! Declarative experiment description, read from TOML.
//!
//! Relative paths are resolved against the directory of the config file.
//! Every seed used by a run is derived from `master_seed`; see [`Seeds`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dbue_core::data::{NoiseEntry, NoiseTarget, TabularSchema};
use dbue_core::rng::derive_seed;
use dbue_core::{Activation, NoiseSpec, OptimizerKind, TrainingHyperparams};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dbue,
    Dec,
    Iad,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dbue => "dbue",
            Method::Dec => "dec",
            Method::Iad => "iad",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    /// IDX image files; the OOD pair must share the image size.
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        ood_images: PathBuf,
        ood_labels: PathBuf,
    },
    /// One labeled CSV split into train/test, plus an unlabeled OOD CSV whose
    /// numeric columns are aligned to the model input.
    Tabular {
        path: PathBuf,
        schema: TabularSchema,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        ood_path: PathBuf,
    },
}

fn default_test_fraction() -> f64 {
    0.2
}

/// Hidden part of the architecture; input width and class count come from the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSettings {
    pub hidden_layers: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub dropout_rate: f64,
}

fn default_activation() -> Activation {
    Activation::Relu
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSettings {
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
}

fn default_batch() -> usize {
    64
}

fn default_lr() -> f64 {
    1e-3
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}

impl TrainingSettings {
    pub fn hyperparams(&self, seed: u64) -> TrainingHyperparams {
        TrainingHyperparams {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub passes: usize,
}

/// How OOD predictions are scored for accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodScoring {
    /// The OOD set's own labels when it has usable ones, otherwise every
    /// prediction counts as wrong.
    Auto,
    AllWrong,
    /// No accuracy is reported for the OOD split.
    Unscored,
}

fn default_ood_scoring() -> OodScoring {
    OodScoring::Auto
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSettings {
    /// Evaluate a seeded random subset of the training split of this size.
    #[serde(default)]
    pub train_limit: Option<usize>,
    /// Cap on test/noisy/OOD rows (first rows kept); for quick runs.
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
    #[serde(default = "default_ood_scoring")]
    pub ood_scoring: OodScoring,
    pub dataset: DatasetConfig,
    pub network: NetworkSettings,
    pub training: TrainingSettings,
    pub sampler: SamplerSettings,
    /// Its `seed` field is ignored; the noise seed is derived.
    pub noise: NoiseSpec,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
}

/// Component seeds, each `derive_seed(master_seed, name)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds(pub BTreeMap<String, u64>);

pub const SEED_NAMES: [&str; 11] = [
    "init.dropout",
    "init.baseline",
    "train.dropout",
    "train.baseline",
    "split",
    "noise",
    "eval.subsample",
    "mc.train",
    "mc.test",
    "mc.noisy",
    "mc.ood",
];

impl Seeds {
    pub fn derive(master: u64) -> Self {
        Seeds(SEED_NAMES.iter().map(|&n| (n.to_string(), derive_seed(master, n))).collect())
    }

    pub fn get(&self, name: &str) -> u64 {
        self.0[name]
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        match &mut self.dataset {
            DatasetConfig::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ood_images,
                ood_labels,
            } => {
                for p in [train_images, train_labels, test_images, test_labels, ood_images, ood_labels] {
                    fix(p);
                }
            }
            DatasetConfig::Tabular { path, ood_path, .. } => {
                fix(path);
                fix(ood_path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods must not repeat".into());
        }
        if self.network.hidden_layers.is_empty() || self.network.hidden_layers.contains(&0) {
            return bad("network.hidden_layers needs at least one positive width".into());
        }
        if !(0.0..1.0).contains(&self.network.dropout_rate) {
            return bad(format!("network.dropout_rate {} not in [0, 1)", self.network.dropout_rate));
        }
        if self.methods.contains(&Method::Dbue) && self.network.dropout_rate == 0.0 {
            return bad("dbue needs a positive dropout rate".into());
        }
        self.training.hyperparams(0).validate()?;
        if self.sampler.passes < 2 {
            return Err(dbue_core::Error::TooFewPasses(self.sampler.passes).into());
        }
        self.noise.validate()?;
        if let DatasetConfig::Tabular { test_fraction, .. } = &self.dataset {
            if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                return bad(format!("test_fraction {test_fraction} not in (0, 1)"));
            }
        }
        if matches!(self.evaluation.train_limit, Some(0)) || matches!(self.evaluation.limit, Some(0)) {
            return bad("evaluation limits must be positive".into());
        }
        Ok(())
    }

    /// Files the run will read; checked before any work starts.
    pub fn input_files(&self) -> Vec<&Path> {
        match &self.dataset {
            DatasetConfig::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ood_images,
                ood_labels,
            } => vec![train_images, train_labels, test_images, test_labels, ood_images, ood_labels]
                .into_iter()
                .map(PathBuf::as_path)
                .collect(),
            DatasetConfig::Tabular { path, ood_path, .. } => vec![path.as_path(), ood_path.as_path()],
        }
    }

    pub fn check_files(&self) -> Result<()> {
        for path in self.input_files() {
            if !path.is_file() {
                return Err(HarnessError::MissingFile(path.to_path_buf()));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::derive(self.master_seed)
    }

    /// Desk-scale MNIST: MLP 784-256-128-10, 5 epochs, p = 0.4, L = 100,
    /// FMNIST as OOD.
    pub fn mnist(data_dir: &Path, output_dir: &Path) -> Self {
        let f = |n: &str| data_dir.join(n);
        Self {
            master_seed: 2024,
            methods: vec![Method::Dbue, Method::Dec, Method::Iad],
            output_dir: output_dir.to_path_buf(),
            ood_scoring: OodScoring::Auto,
            dataset: DatasetConfig::Mnist {
                train_images: f("train-images-idx3-ubyte"),
                train_labels: f("train-labels-idx1-ubyte"),
                test_images: f("t10k-images-idx3-ubyte"),
                test_labels: f("t10k-labels-idx1-ubyte"),
                ood_images: f("fmnist-images-idx3-ubyte"),
                ood_labels: f("fmnist-labels-idx1-ubyte"),
            },
            network: NetworkSettings {
                hidden_layers: vec![256, 128],
                activation: Activation::Relu,
                dropout_rate: 0.4,
            },
            training: TrainingSettings {
                epochs: 5,
                batch_size: 64,
                learning_rate: 1e-3,
                optimizer: OptimizerKind::Adam,
            },
            sampler: SamplerSettings { passes: 100 },
            noise: NoiseSpec::mnist(0),
            evaluation: EvaluationSettings {
                train_limit: Some(10_000),
                limit: None,
            },
        }
    }

    /// Titanic MLP d-64-32-2, 350 epochs, p = 0.25, L = 100, with a housing
    /// table as OOD.
    pub fn titanic(data_dir: &Path, output_dir: &Path) -> Self {
        let noise = |name: &str, mean: f64| NoiseEntry {
            target: NoiseTarget::Feature(name.into()),
            mean,
            std: 3.0,
        };
        let ood = fs::read_to_string(data_dir.join("TABULAR_OOD"))
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|_| "forestfires.csv".into());
        Self {
            master_seed: 2024,
            methods: vec![Method::Dbue, Method::Dec, Method::Iad],
            output_dir: output_dir.to_path_buf(),
            ood_scoring: OodScoring::Auto,
            dataset: DatasetConfig::Tabular {
                path: data_dir.join("titanic.csv"),
                schema: TabularSchema::titanic(),
                test_fraction: 0.2,
                ood_path: data_dir.join(ood),
            },
            network: NetworkSettings {
                hidden_layers: vec![64, 32],
                activation: Activation::Relu,
                dropout_rate: 0.25,
            },
            training: TrainingSettings {
                epochs: 350,
                batch_size: 32,
                learning_rate: 1e-3,
                optimizer: OptimizerKind::Adam,
            },
            sampler: SamplerSettings { passes: 100 },
            noise: NoiseSpec {
                entries: vec![
                    noise("pclass", 0.0),
                    noise("age", 0.0),
                    noise("fare", 0.0),
                    noise("sibsp", 1.0),
                    noise("parch", 1.0),
                ],
                seed: 0,
                clip: None,
                value_scale: 1.0,
            },
            evaluation: EvaluationSettings::default(),
        }
    }
}
