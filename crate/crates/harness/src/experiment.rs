use std::path::Path;

use dbue_core::data::{
    add_gaussian_noise, align_ood_features, load_idx, read_csv_table, TabularEncoder, TabularSchema,
};
use dbue_core::evidential::baseline_from_logits;
use dbue_core::nn::{load_checkpoint, save_checkpoint, train_with_progress};
use dbue_core::rng::{derive_index_seed, seeded};
use dbue_core::{
    dbue_estimate, Dataset64, EpochMetrics, EvidenceMethod, Network64, NetworkConfig, Provenance,
    SamplerConfig,
};
use rand::seq::SliceRandom;

use crate::config::{DatasetConfig, ExperimentConfig, Method, OodScoring};
use crate::report::{
    median, write_file, EvaluationReport, Histogram, Split, SplitReport, TrainingSummary, REPORT_VERSION,
};
use crate::{HarnessError, Result};

/// The four evaluation sets. `train` is the full training split; the
/// evaluated subset is chosen in [`evaluate`].
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset64,
    pub test: Dataset64,
    pub noisy: Dataset64,
    pub ood: Dataset64,
}

impl Splits {
    pub fn get(&self, split: Split) -> &Dataset64 {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
            Split::Noisy => &self.noisy,
            Split::Ood => &self.ood,
        }
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed));
    idx
}

pub fn load_splits(cfg: &ExperimentConfig) -> Result<Splits> {
    cfg.check_files()?;
    let seeds = cfg.seeds();
    let (train, test, ood) = match &cfg.dataset {
        DatasetConfig::Mnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
            ood_images,
            ood_labels,
        } => {
            let train: Dataset64 = load_idx(train_images, train_labels, Provenance::Train)?;
            let test: Dataset64 = load_idx(test_images, test_labels, Provenance::Test)?;
            let ood: Dataset64 = load_idx(ood_images, ood_labels, Provenance::Ood)?;
            if ood.dim() != train.dim() {
                return Err(HarnessError::Config(format!(
                    "OOD images have {} pixels, training images {}",
                    ood.dim(),
                    train.dim()
                )));
            }
            (train, test, ood)
        }
        DatasetConfig::Tabular {
            path,
            schema,
            test_fraction,
            ood_path,
        } => {
            let table = read_csv_table(path)?;
            let order = shuffled(table.len(), seeds.get("split"));
            let n_test = ((table.len() as f64) * test_fraction).round() as usize;
            let n_test = n_test.clamp(1, table.len() - 1);
            let (mut test_idx, mut train_idx) = (order[..n_test].to_vec(), order[n_test..].to_vec());
            test_idx.sort_unstable();
            train_idx.sort_unstable();
            let train_table = table.select(&train_idx);
            let encoder = TabularEncoder::fit(&train_table, schema)?;
            let train = encoder.transform(&train_table, Provenance::Train)?;
            let test = encoder.transform(&table.select(&test_idx), Provenance::Test)?;

            let ood_table = read_csv_table(ood_path)?;
            let raw: Dataset64 = TabularEncoder::fit(&ood_table, &TabularSchema::all_numeric(&ood_table))?
                .transform(&ood_table, Provenance::Ood)?;
            let ood = align_ood_features(&raw, train.dim(), train.class_count())?;
            (train, test, ood)
        }
    };
    let (test, ood) = match cfg.evaluation.limit {
        Some(n) => (test.head(n)?, ood.head(n)?),
        None => (test, ood),
    };
    let mut noise = cfg.noise.clone();
    noise.seed = seeds.get("noise");
    let noisy = add_gaussian_noise(&test, &noise)?;
    Ok(Splits {
        train,
        test,
        noisy,
        ood: ood.with_provenance(Provenance::Ood),
    })
}

/// The trained networks: one with dropout for dbue, one without for the
/// evidential heads. Either is absent when no selected method needs it.
#[derive(Clone, Debug, PartialEq)]
pub struct Models {
    pub dropout: Option<Network64>,
    pub baseline: Option<Network64>,
    pub training: Vec<TrainingSummary>,
}

const DROPOUT_CKPT: &str = "dropout.ckpt";
const BASELINE_CKPT: &str = "baseline.ckpt";
const TRAINING_JSON: &str = "training.json";

impl Models {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        if let Some(net) = &self.dropout {
            save_checkpoint(net, dir.join(DROPOUT_CKPT))?;
        }
        if let Some(net) = &self.baseline {
            save_checkpoint(net, dir.join(BASELINE_CKPT))?;
        }
        let json = serde_json::to_string_pretty(&self.training)? + "\n";
        write_file(&dir.join(TRAINING_JSON), json.as_bytes())
    }

    /// Loads what `save` wrote, requiring the networks `methods` need.
    pub fn load(dir: &Path, methods: &[Method]) -> Result<Self> {
        let need_dropout = methods.contains(&Method::Dbue);
        let need_baseline = methods.iter().any(|m| *m != Method::Dbue);
        let load = |needed: bool, name: &str| -> Result<Option<Network64>> {
            let path = dir.join(name);
            match (needed, path.is_file()) {
                (false, _) => Ok(None),
                (true, true) => Ok(Some(load_checkpoint(&path)?)),
                (true, false) => Err(HarnessError::MissingFile(path)),
            }
        };
        let path = dir.join(TRAINING_JSON);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(Models {
            dropout: load(need_dropout, DROPOUT_CKPT)?,
            baseline: load(need_baseline, BASELINE_CKPT)?,
            training: serde_json::from_str(&text)?,
        })
    }
}

fn network_config(cfg: &ExperimentConfig, data: &Dataset64, dropout: f64, seed: u64) -> NetworkConfig {
    let mut sizes = vec![data.dim()];
    sizes.extend(&cfg.network.hidden_layers);
    sizes.push(data.class_count());
    NetworkConfig::new(sizes, cfg.network.activation, dropout, seed)
}

/// Trains the networks the configured methods need. `progress` sees every
/// epoch, tagged `dropout` or `baseline`.
pub fn train_models(
    cfg: &ExperimentConfig,
    splits: &Splits,
    progress: &mut dyn FnMut(&str, &EpochMetrics),
) -> Result<Models> {
    let seeds = cfg.seeds();
    let mut fit = |name: &str, dropout: f64| -> Result<(Network64, TrainingSummary)> {
        let net_cfg = network_config(cfg, &splits.train, dropout, seeds.get(&format!("init.{name}")));
        let net = Network64::init(net_cfg)?;
        let hp = cfg.training.hyperparams(seeds.get(&format!("train.{name}")));
        let (net, report) = train_with_progress(net, &splits.train, &hp, |m| progress(name, m))?;
        let summary = TrainingSummary {
            network: name.to_string(),
            parameters: net.parameter_count(),
            epochs: report.epochs,
        };
        Ok((net, summary))
    };
    let mut models = Models {
        dropout: None,
        baseline: None,
        training: Vec::new(),
    };
    if cfg.methods.contains(&Method::Dbue) {
        let (net, summary) = fit("dropout", cfg.network.dropout_rate)?;
        models.dropout = Some(net);
        models.training.push(summary);
    }
    if cfg.methods.iter().any(|m| *m != Method::Dbue) {
        let (net, summary) = fit("baseline", 0.0)?;
        models.baseline = Some(net);
        models.training.push(summary);
    }
    Ok(models)
}

struct Scores {
    predictions: Vec<usize>,
    uncertainties: Vec<f64>,
    floored: usize,
    negative: usize,
}

fn score_dbue(net: &Network64, data: &Dataset64, passes: usize, seed: u64) -> Result<Scores> {
    let mut s = Scores {
        predictions: Vec::with_capacity(data.len()),
        uncertainties: Vec::with_capacity(data.len()),
        floored: 0,
        negative: 0,
    };
    for i in 0..data.len() {
        let sampler = SamplerConfig::new(passes, derive_index_seed(seed, i as u64))?;
        let est = dbue_estimate(net, data.row(i), &sampler)?;
        s.predictions.push(est.score.predicted_class);
        s.uncertainties.push(est.score.value);
        s.floored += usize::from(est.score.strength.floored);
        s.negative += usize::from(est.score.strength.is_negative());
    }
    Ok(s)
}

fn score_evidential(net: &Network64, data: &Dataset64, method: EvidenceMethod) -> Result<Scores> {
    let logits = net.logits_batch(data.features().view())?;
    let mut s = Scores {
        predictions: Vec::with_capacity(data.len()),
        uncertainties: Vec::with_capacity(data.len()),
        floored: 0,
        negative: 0,
    };
    for row in logits.rows() {
        let p = baseline_from_logits(row.as_slice().expect("standard layout"), method)?;
        s.predictions.push(p.predicted_class);
        s.uncertainties.push(p.uncertainty);
    }
    Ok(s)
}

fn accuracy(split: Split, data: &Dataset64, predictions: &[usize], scoring: OodScoring) -> Option<f64> {
    let labels = data.labels();
    match (split, scoring, labels) {
        (Split::Ood, OodScoring::Unscored, _) => None,
        (Split::Ood, OodScoring::AllWrong, _) | (Split::Ood, OodScoring::Auto, None) => Some(0.0),
        (_, _, Some(labels)) => {
            let correct = labels.iter().zip(predictions).filter(|(y, p)| y == p).count();
            Some(correct as f64 / labels.len() as f64)
        }
        (_, _, None) => None,
    }
}

/// Evaluates every configured method on every split.
pub fn evaluate(cfg: &ExperimentConfig, models: &Models, splits: &Splits) -> Result<EvaluationReport> {
    let seeds = cfg.seeds();
    let train_eval = match cfg.evaluation.train_limit {
        Some(n) if n < splits.train.len() => {
            let mut idx = shuffled(splits.train.len(), seeds.get("eval.subsample"));
            idx.truncate(n);
            idx.sort_unstable();
            splits.train.select(&idx)?
        }
        _ => splits.train.clone(),
    };
    let mut methods = cfg.methods.clone();
    methods.sort();
    let mut reports = Vec::with_capacity(methods.len() * 4);
    for method in methods {
        for split in Split::ALL {
            let data = if split == Split::Train { &train_eval } else { splits.get(split) };
            let scores = match method {
                Method::Dbue => {
                    let net = models.dropout.as_ref().ok_or_else(|| {
                        HarnessError::Precondition("dbue needs the dropout network".into())
                    })?;
                    let seed = seeds.get(&format!("mc.{}", split.name()));
                    score_dbue(net, data, cfg.sampler.passes, seed)?
                }
                Method::Dec | Method::Iad => {
                    let net = models.baseline.as_ref().ok_or_else(|| {
                        HarnessError::Precondition("dec/iad need the baseline network".into())
                    })?;
                    let head = if method == Method::Dec { EvidenceMethod::DecRelu } else { EvidenceMethod::IadSoftplus };
                    score_evidential(net, data, head)?
                }
            };
            if let Some(bad) = scores.uncertainties.iter().find(|u| !(u.is_finite() && **u >= 0.0)) {
                return Err(HarnessError::Precondition(format!("invalid uncertainty {bad}")));
            }
            reports.push(SplitReport {
                split,
                method,
                accuracy: accuracy(split, data, &scores.predictions, cfg.ood_scoring),
                median_uncertainty: median(&scores.uncertainties).expect("nonempty split"),
                n: data.len(),
                floored_count: scores.floored,
                negative_strength_count: scores.negative,
                histogram: Histogram::of(&scores.uncertainties),
            });
        }
    }
    Ok(EvaluationReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        seeds,
        baseline_training: "cross_entropy".into(),
        training: models.training.clone(),
        splits: reports,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    run_experiment_with_progress(cfg, &mut |_, _| {})
}

pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    progress: &mut dyn FnMut(&str, &EpochMetrics),
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let splits = load_splits(cfg)?;
    let models = train_models(cfg, &splits, progress)?;
    evaluate(cfg, &models, &splits)
}
