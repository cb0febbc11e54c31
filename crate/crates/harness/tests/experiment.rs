use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use dbue_harness::{run_experiment, EvaluationReport, ExperimentConfig, Method, Split};

/// Two separable gaussian blobs plus an unrelated wide table as OOD.
fn write_synthetic(dir: &Path) {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut train = String::from("a,b,c,kind,label\n");
    for i in 0..160 {
        let y = i % 2;
        let shift = if y == 1 { 2.0 } else { -2.0 };
        let kind = if next() < 0.5 { "x" } else { "y" };
        let _ = writeln!(
            train,
            "{:.4},{:.4},{:.4},{kind},{y}",
            shift + next() - 0.5,
            -shift + next() - 0.5,
            next()
        );
    }
    std::fs::write(dir.join("train.csv"), train).unwrap();
    let mut ood = String::from("p,q,r,s,t\n");
    for _ in 0..40 {
        let _ = writeln!(ood, "{:.3},{:.3},{:.3},{:.3},{:.3}", next() * 50.0, next(), next() * 9.0, next(), next());
    }
    std::fs::write(dir.join("ood.csv"), ood).unwrap();
}

fn config(dir: &Path, methods: &str) -> ExperimentConfig {
    let text = format!(
        r#"
master_seed = 7
methods = [{methods}]
output_dir = "out"

[dataset]
kind = "tabular"
path = "train.csv"
ood_path = "ood.csv"

[dataset.schema]
label = "label"
numeric = ["a", "b", "c"]
categorical = [{{ name = "kind", encoding = "binary" }}]

[network]
hidden_layers = [8]
dropout_rate = 0.2

[training]
epochs = 15
batch_size = 16
learning_rate = 0.01

[sampler]
passes = 20

[noise]
entries = [{{ target = "all", mean = 0.0, std = 3.0 }}]
"#
    );
    ExperimentConfig::from_toml_str(&text, dir).unwrap()
}

#[test]
fn dbue_only_run_reports_every_split() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path());
    let report = run_experiment(&config(dir.path(), r#""dbue""#)).unwrap();
    assert_eq!(report.splits.len(), 4);
    for split in Split::ALL {
        let s = report.split(Method::Dbue, split).unwrap();
        assert!(s.median_uncertainty.is_finite() && s.median_uncertainty > 0.0);
        assert_eq!(s.histogram.total() as usize, s.n);
    }
    let test = report.split(Method::Dbue, Split::Test).unwrap();
    assert_eq!(test.n, 32);
    assert!(test.accuracy.unwrap() > 0.9, "separable blobs: {:?}", test.accuracy);
    // unlabeled OOD table scores every prediction as wrong under "auto"
    assert_eq!(report.split(Method::Dbue, Split::Ood).unwrap().accuracy, Some(0.0));
    assert_eq!(report.training.len(), 1);
}

#[test]
fn all_methods_run_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path());
    let cfg = config(dir.path(), r#""iad", "dbue", "dec""#);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.splits.len(), 12);
    let methods: Vec<Method> = a.splits.iter().map(|s| s.method).collect();
    assert!(methods.windows(2).all(|w| w[0] <= w[1]), "methods sorted: {methods:?}");
    for m in [Method::Dec, Method::Iad] {
        for s in Split::ALL {
            let u = a.split(m, s).unwrap().median_uncertainty;
            assert!(u > 0.0 && u <= 1.0, "{m:?}/{s:?}: {u}");
        }
    }
    let again: EvaluationReport = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(again, a);

    let mut other = cfg.clone();
    other.master_seed = 8;
    assert_ne!(run_experiment(&other).unwrap().to_json(), a.to_json());
}

#[test]
fn missing_input_is_reported_before_work() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path());
    std::fs::remove_file(dir.path().join("ood.csv")).unwrap();
    let err = run_experiment(&config(dir.path(), r#""dbue""#)).unwrap_err();
    assert_eq!(err.kind(), "missing_file");
    assert!(err.to_string().contains("ood.csv"), "{err}");
}

#[test]
fn cli_prints_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path());
    let cfg = config(dir.path(), r#""dbue""#);
    std::fs::write(dir.path().join("run.toml"), cfg.to_toml_string()).unwrap();
    std::fs::remove_file(dir.path().join("train.csv")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dbue"))
        .args(["compare", "--config"])
        .arg(dir.path().join("run.toml"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(line["error"], "missing_file");
}

#[test]
fn cli_compare_writes_report_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path());
    let cfg = config(dir.path(), r#""dbue", "dec""#);
    std::fs::write(dir.path().join("run.toml"), cfg.to_toml_string()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_dbue"))
        .args(["compare", "--passes", "10", "--config"])
        .arg(dir.path().join("run.toml"))
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let out = dir.path().join("out");
    for f in ["report.json", "report.csv", "histogram-dbue.svg", "histogram-dec.svg", "dropout.ckpt", "baseline.ckpt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report = dbue_harness::report::read_report(out.join("report.json")).unwrap();
    assert_eq!(report.config.sampler.passes, 10);

    // eval reuses the checkpoints and reproduces the report byte for byte
    let first = std::fs::read(out.join("report.json")).unwrap();
    let eval = Command::new(env!("CARGO_BIN_EXE_dbue"))
        .args(["eval", "--passes", "10", "--config"])
        .arg(dir.path().join("run.toml"))
        .output()
        .unwrap();
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let second = std::fs::read(out.join("report.json")).unwrap();
    let (a, b): (serde_json::Value, serde_json::Value) =
        (serde_json::from_slice(&first).unwrap(), serde_json::from_slice(&second).unwrap());
    assert_eq!(a["splits"], b["splits"]);
}
