use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbue_core::data::{load_idx, MNIST_SHAPE};
use dbue_core::{Dataset64, EpochMetrics, Provenance, SamplerConfig};
use dbue_harness::config::DatasetConfig;
use dbue_harness::plot::{histogram_svg, rotation_svg, write_svg};
use dbue_harness::report::read_report;
use dbue_harness::{
    emit_report, evaluate, load_splits, rotation_sweep, train_models, ExperimentConfig, HarnessError, Method,
    Models, ReportFormat, Result, RotationSeries,
};

/// Dirichlet MC-dropout uncertainty experiments.
#[derive(Parser)]
#[command(name = "dbue", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo passes.
    #[arg(long)]
    passes: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the networks and save checkpoints to the output directory.
    Train(Common),
    /// Evaluate saved checkpoints on all splits; writes report.json/report.csv.
    Eval(Common),
    /// Train and evaluate in one go, plus per-method histogram plots.
    Compare(Common),
    /// Rotation sweep of the first test image of each digit (image datasets).
    Rotate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30.0)]
        step: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 4])]
        digits: Vec<usize>,
        /// Sweep the first N test images of each digit.
        #[arg(long, default_value_t = 1)]
        per_digit: usize,
    },
    /// Render an SVG from a report (histogram) or a rotation series.
    Plot {
        #[arg(long, conflicts_with = "series", required_unless_present = "series")]
        report: Option<PathBuf>,
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long, default_value = "dbue")]
        method: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    if let Some(passes) = c.passes {
        cfg.sampler.passes = passes;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn progress(network: &str, m: &EpochMetrics) {
    eprintln!("[{network}] epoch {} loss {:.4} accuracy {:.4}", m.epoch, m.loss, m.accuracy);
}

fn write_reports(cfg: &ExperimentConfig, report: &dbue_harness::EvaluationReport) -> Result<()> {
    let json = cfg.output_dir.join("report.json");
    emit_report(report, &json, ReportFormat::Json)?;
    emit_report(report, cfg.output_dir.join("report.csv"), ReportFormat::Csv)?;
    eprintln!("wrote {}", json.display());
    for s in &report.splits {
        println!(
            "{:<5} {:<6} accuracy {:>7} median_u {:.6e} n {} floored {}",
            s.method.name(),
            s.split.name(),
            s.accuracy.map_or("-".into(), |a| format!("{a:.4}")),
            s.median_uncertainty,
            s.n,
            s.floored_count
        );
    }
    Ok(())
}

fn parse_method(name: &str) -> Result<Method> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| HarnessError::Config(format!("unknown method `{name}` (dbue, dec, iad)")))
}

fn first_of_class(ds: &Dataset64, class: usize, n: usize) -> Result<Vec<usize>> {
    let found: Vec<usize> = ds
        .labels()
        .map(|l| l.iter().enumerate().filter(|(_, &y)| y == class).map(|(i, _)| i).take(n).collect())
        .unwrap_or_default();
    if found.is_empty() {
        return Err(HarnessError::Precondition(format!("no test image with label {class}")));
    }
    Ok(found)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let splits = load_splits(&cfg)?;
            let models = train_models(&cfg, &splits, &mut progress)?;
            models.save(&cfg.output_dir)?;
            eprintln!("saved models to {}", cfg.output_dir.display());
        }
        Command::Eval(c) => {
            let cfg = load_config(&c)?;
            let models = Models::load(&cfg.output_dir, &cfg.methods)?;
            let splits = load_splits(&cfg)?;
            write_reports(&cfg, &evaluate(&cfg, &models, &splits)?)?;
        }
        Command::Compare(c) => {
            let cfg = load_config(&c)?;
            let splits = load_splits(&cfg)?;
            let models = train_models(&cfg, &splits, &mut progress)?;
            models.save(&cfg.output_dir)?;
            let report = evaluate(&cfg, &models, &splits)?;
            write_reports(&cfg, &report)?;
            for &m in &cfg.methods {
                write_svg(cfg.output_dir.join(format!("histogram-{}.svg", m.name())), &histogram_svg(&report, m)?)?;
            }
        }
        Command::Rotate { common, step, digits, per_digit } => {
            let cfg = load_config(&common)?;
            let DatasetConfig::Mnist { test_images, test_labels, .. } = &cfg.dataset else {
                return Err(HarnessError::Config("rotation needs an image dataset".into()));
            };
            let models = Models::load(&cfg.output_dir, &[Method::Dbue])?;
            let net = models.dropout.expect("loaded");
            let test: Dataset64 = load_idx(test_images, test_labels, Provenance::Test)?;
            let sampler = SamplerConfig::new(cfg.sampler.passes, cfg.seeds().get("mc.test"))?;
            let mut all = Vec::new();
            for digit in digits {
                for i in first_of_class(&test, digit, per_digit)? {
                    let id = format!("digit {digit} (test #{i})");
                    let series = rotation_sweep(&net, test.row(i), MNIST_SHAPE, id, step, &sampler)?;
                    println!(
                        "{}: median u {:.6e}, max u {:.6e}",
                        series.image_id,
                        series.median_uncertainty().unwrap_or(f64::NAN),
                        series.max_uncertainty().unwrap_or(f64::NAN)
                    );
                    all.push(series);
                }
            }
            let json = serde_json::to_string_pretty(&all)? + "\n";
            let path = cfg.output_dir.join("rotation.json");
            std::fs::create_dir_all(&cfg.output_dir).map_err(|e| HarnessError::io(&cfg.output_dir, e))?;
            std::fs::write(&path, json).map_err(|e| HarnessError::io(&path, e))?;
            write_svg(cfg.output_dir.join("rotation.svg"), &rotation_svg(&all)?)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Plot { report, series, method, out } => {
            let svg = match (report, series) {
                (Some(r), _) => histogram_svg(&read_report(&r)?, parse_method(&method)?)?,
                (None, Some(s)) => rotation_svg(&read_series(&s)?)?,
                (None, None) => unreachable!("clap enforces one of --report/--series"),
            };
            write_svg(&out, &svg)?;
        }
    }
    Ok(())
}

fn read_series(path: &Path) -> Result<Vec<RotationSeries>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
