//! End-to-end acceptance checks, one verdict line per criterion.
//!
//! Run with `cargo test -p dbue-harness --test acceptance -- --nocapture`.
//! Data comes from `$DBUE_DATA_DIR` (default: `<workspace>/data`); artifacts
//! land in `target/tmp/acceptance/`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dbue_core::data::MNIST_SHAPE;
use dbue_core::nn::{gradient_check, DropoutMasks};
use dbue_core::rng::seeded;
use dbue_core::{
    dirichlet_mean, dirichlet_strength, dirichlet_variance, evidential_uncertainty, sample_dirichlet,
    uncertainty_from_strength, Activation, DirichletParams, DirichletStrength, EvidenceMethod, EvidenceVector,
    MomentEstimate, Network, NetworkConfig, SamplerConfig,
};
use dbue_harness::{
    emit_report, evaluate, load_splits, rotation_sweep, train_models, EvaluationReport, ExperimentConfig, Method,
    ReportFormat, RotationSeries, Split,
};
use ndarray::Array2;
use rand::Rng;

struct Verdict {
    id: u8,
    pass: bool,
    summary: String,
}

struct Suite {
    verdicts: Vec<Verdict>,
}

impl Suite {
    fn record(&mut self, id: u8, title: &str, elapsed: Duration, budget: Duration, pass: bool, detail: String) {
        let in_time = elapsed <= budget;
        let pass = pass && in_time;
        let timing = format!("{:.1}s of {:.0}s budget", elapsed.as_secs_f64(), budget.as_secs_f64());
        let summary = format!(
            "{} criterion {id}: {title} -- {detail}; {timing}{}",
            if pass { "PASS" } else { "FAIL" },
            if in_time { "" } else { " (over budget)" }
        );
        println!("{summary}");
        self.verdicts.push(Verdict { id, pass, summary });
    }
}

fn data_dir() -> PathBuf {
    std::env::var_os("DBUE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn artifacts() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn formula_suite() -> (bool, String) {
    let mut failures = Vec::new();
    let strength = |value| DirichletStrength { value, floored: false };
    // u = K / |S|
    for (s, k, u) in [(8.0, 10, 1.25), (-0.5, 10, 20.0), (3.0, 3, 1.0), (40.0, 2, 0.05)] {
        let got = uncertainty_from_strength(strength(s), k, 0).value;
        if !rel_close(got, u, 1e-12) {
            failures.push(format!("u(S={s}, K={k}) = {got}, want {u}"));
        }
    }
    // S = sum(e + 1), u = K / S, zero evidence -> u = 1
    for (e, s) in [(vec![0.0, 0.0, 0.0], 3.0), (vec![4.0, 1.0, 0.0], 8.0), (vec![10.0, 0.5], 12.5)] {
        let k = e.len();
        let out = evidential_uncertainty(&EvidenceVector::new(e.clone(), EvidenceMethod::DecRelu).unwrap(), k).unwrap();
        if !rel_close(out.strength, s, 1e-12) || !rel_close(out.uncertainty, k as f64 / s, 1e-12) {
            failures.push(format!("evidence {e:?}: S = {}, u = {}", out.strength, out.uncertainty));
        }
        if e.iter().all(|&v| v == 0.0) && out.uncertainty != 1.0 {
            failures.push(format!("zero evidence gave u = {}", out.uncertainty));
        }
    }
    // exact Dirichlet moments invert to sum(alpha)
    let mut worst: f64 = 0.0;
    for alpha in [vec![1.0f64, 1.0], vec![5.0, 3.0, 2.0], vec![0.7, 2.5, 11.0, 4.25], vec![20.0, 20.0, 10.0]] {
        let a = DirichletParams::new(alpha).unwrap();
        let means = dirichlet_mean(&a);
        for (k, &mean) in means.iter().enumerate() {
            let m = MomentEstimate { predicted_class: k, mean, variance: dirichlet_variance(&a, k).unwrap() };
            let s = dirichlet_strength(&m).unwrap().value;
            worst = worst.max((s - a.strength()).abs() / a.strength());
        }
    }
    if worst > 1e-9 {
        failures.push(format!("exact inverse off by {worst:e}"));
    }
    let detail = if failures.is_empty() {
        format!("u = K/|S|, S = sum(e+1), zero evidence u = 1; exact inverse max rel error {worst:.1e}")
    } else {
        failures.join("; ")
    };
    (failures.is_empty(), detail)
}

fn moment_matching() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, alpha) in [vec![1.0f64, 1.0], vec![5.0, 3.0, 2.0], vec![20.0, 20.0, 10.0]].into_iter().enumerate() {
        let a = DirichletParams::new(alpha.clone()).unwrap();
        let draws = sample_dirichlet(&a, 100_000, 500 + i as u64).unwrap();
        let k = dbue_core::argmax(&alpha);
        let col = draws.column(k);
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let variance = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let s = dirichlet_strength(&MomentEstimate { predicted_class: k, mean, variance }).unwrap().value;
        let err = (s - a.strength()).abs() / a.strength();
        ok &= err <= 0.05;
        parts.push(format!("{alpha:?}: S = {s:.3} vs {} ({:.2}%)", a.strength(), 100.0 * err));
    }
    (ok, parts.join(", "))
}

const ARCHITECTURES: [&[usize]; 5] = [&[3, 4, 2], &[2, 3, 3, 2], &[4, 3, 3], &[2, 5, 2], &[3, 2, 2, 3]];

fn gradient_suite() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = seeded(1000 + seed);
        let sizes = ARCHITECTURES[seed as usize % ARCHITECTURES.len()].to_vec();
        let activation = if seed % 2 == 0 { Activation::Softplus } else { Activation::Relu };
        let dropout = if seed % 3 == 0 { 0.0 } else { 0.3 };
        let config = NetworkConfig::new(sizes.clone(), activation, dropout, seed);
        let mut net: Network = Network::init(config.clone()).unwrap();
        let params: Vec<f64> = (0..net.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        net.set_parameters(&params).unwrap();
        let x = Array2::from_shape_fn((6, sizes[0]), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..6).map(|_| rng.random_range(0..config.class_count)).collect();
        let masks = (dropout > 0.0).then(|| DropoutMasks::sample(config.hidden_widths(), 6, dropout, &mut rng));
        let check = gradient_check(&net, x.view(), &y, masks.as_ref(), 1e-5, 1e-6).unwrap();
        worst = worst.max(check.max_relative_error);
    }
    (worst < 1e-4, format!("max relative error {worst:.2e} over 10 networks"))
}

fn median_u(r: &EvaluationReport, m: Method, s: Split) -> f64 {
    r.split(m, s).map_or(f64::NAN, |x| x.median_uncertainty)
}

fn accuracy(r: &EvaluationReport, m: Method, s: Split) -> f64 {
    r.split(m, s).and_then(|x| x.accuracy).unwrap_or(f64::NAN)
}

fn first_of_digit(labels: &[usize], digit: usize, n: usize) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, &y)| y == digit).map(|(i, _)| i).take(n).collect()
}

#[test]
fn acceptance() {
    let mut suite = Suite { verdicts: Vec::new() };
    let data = data_dir();
    let out = artifacts();

    let t = Instant::now();
    let (ok, detail) = formula_suite();
    suite.record(1, "formula identities", t.elapsed(), Duration::from_secs(1), ok, detail);

    let t = Instant::now();
    let (ok, detail) = moment_matching();
    suite.record(2, "moment matching on 100k Dirichlet draws", t.elapsed(), Duration::from_secs(5), ok, detail);

    let t = Instant::now();
    let (ok, detail) = gradient_suite();
    suite.record(3, "gradient check", t.elapsed(), Duration::from_secs(5), ok, detail);

    // MNIST: one training run feeds criteria 4 and 7
    let mnist = ExperimentConfig::mnist(&data, &out.join("mnist"));
    let t = Instant::now();
    let mnist_run = load_splits(&mnist).and_then(|splits| {
        let models = train_models(&mnist, &splits, &mut |_, _| {})?;
        let report = evaluate(&mnist, &models, &splits)?;
        Ok((splits, models, report))
    });
    let elapsed = t.elapsed();
    match &mnist_run {
        Ok((_, _, r)) => {
            emit_report(r, out.join("mnist/report.json"), ReportFormat::Json).unwrap();
            let (test_acc, noisy_acc) = (accuracy(r, Method::Dbue, Split::Test), accuracy(r, Method::Dbue, Split::Noisy));
            let u = Split::ALL.map(|s| median_u(r, Method::Dbue, s));
            let (ut, un, uo) = (u[1], u[2], u[3]);
            let checks = [test_acc >= 0.95, noisy_acc <= 0.20, ut < un && un < uo];
            suite.record(
                4,
                "MNIST accuracy and uncertainty ordering",
                elapsed,
                Duration::from_secs(15 * 60),
                checks.iter().all(|&c| c),
                format!(
                    "test acc {test_acc:.4} (>= 0.95: {}), noisy acc {noisy_acc:.4} (<= 0.20: {}), \
                     median u test {ut:.4} < noisy {un:.4} < ood {uo:.4} ({})",
                    checks[0], checks[1], checks[2]
                ),
            );
        }
        Err(e) => suite.record(4, "MNIST", elapsed, Duration::from_secs(15 * 60), false, format!("run failed: {e}")),
    }

    // Titanic, twice: criteria 5, 6 and 8
    let titanic = ExperimentConfig::titanic(&data, &out.join("titanic"));
    let t = Instant::now();
    let first = dbue_harness::run_experiment(&titanic);
    let elapsed = t.elapsed();
    match &first {
        Ok(r) => {
            emit_report(r, out.join("titanic/report.json"), ReportFormat::Json).unwrap();
            emit_report(r, out.join("titanic/report.csv"), ReportFormat::Csv).unwrap();
            let acc = accuracy(r, Method::Dbue, Split::Test);
            let (ut, uo) = (median_u(r, Method::Dbue, Split::Test), median_u(r, Method::Dbue, Split::Ood));
            let ratio = uo / ut;
            suite.record(
                5,
                "Titanic accuracy and OOD separation",
                elapsed,
                Duration::from_secs(120),
                acc >= 0.70 && ratio > 10.0,
                format!(
                    "test acc {acc:.4} (>= 0.70: {}), median u ood {uo:.4} / test {ut:.4} = {ratio:.2}x (> 10x: {})",
                    acc >= 0.70,
                    ratio > 10.0
                ),
            );

            let mut parts = Vec::new();
            let mut recorded = true;
            for m in [Method::Dec, Method::Iad] {
                let (t_, o) = (median_u(r, m, Split::Test), median_u(r, m, Split::Ood));
                recorded &= t_.is_finite() && o.is_finite();
                parts.push(format!(
                    "{} median u ood {o:.4} vs test {t_:.4} ({})",
                    m.name(),
                    if o <= t_ { "inversion reproduced" } else { "no inversion" }
                ));
            }
            suite.record(
                6,
                "evidential baselines on Titanic (recorded comparison)",
                elapsed,
                Duration::from_secs(120),
                recorded,
                format!("{}; artifact {}", parts.join(", "), out.join("titanic/report.json").display()),
            );
        }
        Err(e) => {
            suite.record(5, "Titanic", elapsed, Duration::from_secs(120), false, format!("run failed: {e}"));
            suite.record(6, "Titanic baselines", elapsed, Duration::from_secs(120), false, format!("run failed: {e}"));
        }
    }

    // rotation of the first test image of digit 0 and digit 4
    let t = Instant::now();
    match &mnist_run {
        Ok((splits, models, _)) => {
            let net = models.dropout.as_ref().expect("dbue network");
            let sampler = SamplerConfig::new(mnist.sampler.passes, mnist.seeds().get("mc.test")).unwrap();
            let labels = splits.test.labels().expect("labelled test set");
            let sweep = |digit: usize, n: usize| -> Vec<RotationSeries> {
                first_of_digit(labels, digit, n)
                    .into_iter()
                    .map(|i| {
                        let id = format!("digit {digit} (test #{i})");
                        rotation_sweep(net, splits.test.row(i), MNIST_SHAPE, id, 30.0, &sampler).unwrap()
                    })
                    .collect()
            };
            let (zero, four) = (sweep(0, 1).remove(0), sweep(4, 1).remove(0));
            let elapsed = t.elapsed();
            let (m0, m4) = (zero.median_uncertainty().unwrap(), four.median_uncertainty().unwrap());
            let json = serde_json::to_string_pretty(&[&zero, &four]).unwrap();
            std::fs::write(out.join("mnist/rotation.json"), json + "\n").unwrap();

            // context only, not part of the verdict: the same comparison over more images
            let per_digit = 20;
            let medians = |d| -> Vec<f64> { sweep(d, per_digit).iter().map(|s| s.median_uncertainty().unwrap()).collect() };
            let (z, f) = (medians(0), medians(4));
            let mid = |v: &[f64]| dbue_harness::median(v).unwrap();
            suite.record(
                7,
                "rotation study",
                elapsed,
                Duration::from_secs(60),
                m0 < m4,
                format!(
                    "{} median u {m0:.4} vs {} median u {m4:.4}; over the first {per_digit} images per digit \
                     the median of per-image medians is {:.4} (digit 0) vs {:.4} (digit 4)",
                    zero.image_id,
                    four.image_id,
                    mid(&z),
                    mid(&f)
                ),
            );
        }
        Err(e) => suite.record(7, "rotation study", t.elapsed(), Duration::from_secs(60), false, format!("no MNIST model: {e}")),
    }

    // determinism: a second Titanic run must emit the same bytes
    let t = Instant::now();
    match (&first, dbue_harness::run_experiment(&titanic)) {
        (Ok(a), Ok(b)) => {
            let (pa, pb) = (out.join("titanic/run-a.json"), out.join("titanic/run-b.json"));
            emit_report(a, &pa, ReportFormat::Json).unwrap();
            emit_report(&b, &pb, ReportFormat::Json).unwrap();
            let (ba, bb) = (std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
            suite.record(
                8,
                "determinism",
                t.elapsed(),
                Duration::from_secs(120),
                ba == bb,
                format!("two Titanic runs, {} vs {} bytes, identical: {}", ba.len(), bb.len(), ba == bb),
            );
        }
        (a, b) => {
            let why = a.as_ref().err().map(|e| e.to_string()).or(b.err().map(|e| e.to_string()));
            suite.record(8, "determinism", t.elapsed(), Duration::from_secs(120), false, format!("run failed: {why:?}"));
        }
    }

    println!("\n== acceptance summary ==");
    for v in &suite.verdicts {
        println!("{}", v.summary);
    }
    let failed: Vec<u8> = suite.verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
