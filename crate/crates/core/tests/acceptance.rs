//! Exit criteria. Each test writes one `PASS`/`FAIL` line to stderr
//! (uncaptured) before asserting.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mlgcn::commands::{cmd_train, MANIFEST_FILE, METRICS_FILE, MODEL_FILE};
use mlgcn::config::{benchmark_spec, RunConfig};
use mlgcn::embed::NoiseDistribution;
use mlgcn::eval::{micro_f1, Method};
use mlgcn::graph::{generate_synthetic, normalize_adjacency, Graph};
use mlgcn::par;
use mlgcn::rng;
use mlgcn::tensor::{DenseMatrix, SparseMatrix};
use mlgcn::trainer::{gradcheck, gradcheck_fixture, train, LossReport, TrainConfig};
use rand::Rng;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{verdict}] criterion {id} ({name}): {detail}");
}

const BENCH_SEEDS: u64 = 10;

struct BenchRun {
    seed: u64,
    method: Method,
    report: LossReport,
}

struct Benchmark {
    runs: Vec<BenchRun>,
    elapsed: Duration,
    lambdas: (f64, f64),
}

/// All four methods on the planted-correlation benchmark, one graph and one
/// training seed per benchmark seed. Computed once and shared.
fn benchmark() -> &'static Benchmark {
    static CELL: OnceLock<Benchmark> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let base = TrainConfig {
            hidden_dim: 32,
            epochs: 200,
            ..TrainConfig::default()
        };
        let graphs: Vec<Graph> = (0..BENCH_SEEDS)
            .map(|s| generate_synthetic(&benchmark_spec(s)).unwrap())
            .collect();
        let jobs: Vec<(u64, Method)> = (0..BENCH_SEEDS)
            .flat_map(|s| Method::ALL.map(|m| (s, m)))
            .collect();
        let runs = par::map_collect(&jobs, |&(seed, method)| {
            let cfg = TrainConfig { seed, ..method.configure(&base) };
            BenchRun {
                seed,
                method,
                report: train(&graphs[seed as usize], &cfg).unwrap().report,
            }
        });
        Benchmark {
            runs,
            elapsed: start.elapsed(),
            lambdas: (base.lambda1, base.lambda2),
        }
    })
}

#[test]
fn criterion_1_gradient_fidelity() {
    let start = Instant::now();
    let (g, cfg) = gradcheck_fixture();
    assert_eq!((g.n(), g.d(), g.c(), cfg.hidden_dim, cfg.negatives, cfg.seed), (30, 8, 4, 6, 2, 7));
    assert_eq!((cfg.lambda1, cfg.lambda2), (0.25, 0.25));
    let r = gradcheck(&g, &cfg, 1e-5).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = r.max() < 1e-4 && secs < 10.0;
    report(
        1,
        "gradient fidelity",
        pass,
        &format!(
            "max rel err W0 {:.2e} W1 {:.2e} Z {:.2e} (< 1e-4), {secs:.2} s (< 10 s)",
            r.w0, r.w1, r.z
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_objective_decomposition() {
    let b = benchmark();
    let (l1, l2) = b.lambdas;
    let mut worst: f64 = 0.0;
    let mut epochs = 0;
    for run in b.runs.iter().filter(|r| r.method == Method::MlGcn) {
        for e in &run.report.epochs {
            let p = e.parts;
            worst = worst.max((p.l_sum - (l1 * p.l_ll + l2 * p.l_nl + p.l_sigmoid)).abs());
            epochs += 1;
        }
    }
    let pass = worst < 1e-12 && epochs > 0;
    report(
        2,
        "loss decomposition",
        pass,
        &format!("max |L_sum - weighted parts| = {worst:.1e} over {epochs} epochs (< 1e-12)"),
    );
    assert!(pass);
}

fn mean_test_f1(b: &Benchmark, m: Method) -> f64 {
    let scores: Vec<f64> = b
        .runs
        .iter()
        .filter(|r| r.method == m)
        .map(|r| r.report.test.unwrap().micro_f1)
        .collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

#[test]
fn criterion_3_method_ordering() {
    let b = benchmark();
    let [mlp, gcn, partly, full] = Method::ALL.map(|m| 100.0 * mean_test_f1(b, m));
    let secs = b.elapsed.as_secs_f64();
    let beats_gcn = full > gcn;
    let beats_partly = full >= partly;
    let pass = beats_gcn && beats_partly && secs < 300.0;
    report(
        3,
        "method ordering",
        pass,
        &format!(
            "mean test micro-F1 over {BENCH_SEEDS} seeds: MLP {mlp:.2}, GCN {gcn:.2}, \
             Partly ML-GCN {partly:.2}, ML-GCN {full:.2}; ML-GCN > GCN: {beats_gcn} \
             ({:+.2} pts), ML-GCN >= Partly: {beats_partly} ({:+.2} pts); {secs:.1} s (< 300 s)",
            full - gcn,
            full - partly
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_metric_oracle() {
    let mut r = common::rng(4);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = r.gen_range(1..=20);
        let c = r.gen_range(1..=8);
        let mut bit = |_, _| if r.gen::<bool>() { 1.0 } else { 0.0 };
        let pred = DenseMatrix::from_fn(n, c, &mut bit);
        let truth = DenseMatrix::from_fn(n, c, &mut bit);
        let mut mask: Vec<bool> = (0..n).map(|_| r.gen()).collect();
        mask[0] = true;
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for i in (0..n).filter(|&i| mask[i]) {
            for j in 0..c {
                match (pred[(i, j)] == 1.0, truth[(i, j)] == 1.0) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
        }
        let want = if tp + fp + fn_ == 0 {
            1.0
        } else {
            (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
        };
        let got = micro_f1(&pred, &truth, &mask).unwrap();
        if (got.tp, got.fp, got.fn_, got.micro_f1) != (tp, fp, fn_, want) {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    report(4, "metric oracle", pass, &format!("{mismatches} mismatches in 1000 instances (exact)"));
    assert!(pass);
}

#[test]
fn criterion_5_sampler_fidelity() {
    let exact = NoiseDistribution::from_counts(&[16.0, 81.0]).unwrap();
    let exact_ok = exact.probs() == [8.0 / 35.0, 27.0 / 35.0];

    let counts = [12.0, 30.0, 7.0, 50.0, 1.0];
    let forbidden = 2;
    let dist = NoiseDistribution::from_counts(&counts).unwrap();
    let w: Vec<f64> = counts.iter().map(|c: &f64| c.powf(0.75)).collect();
    let kept: f64 = w.iter().enumerate().filter(|(i, _)| *i != forbidden).map(|(_, v)| v).sum();
    let draws = dist.sample_negatives(forbidden, 100_000, &mut rng::keyed(5, &[5])).unwrap();
    let mut hist = [0usize; 5];
    for &t in &draws {
        hist[t] += 1;
    }
    let linf = (0..5)
        .map(|i| {
            let want = if i == forbidden { 0.0 } else { w[i] / kept };
            (hist[i] as f64 / draws.len() as f64 - want).abs()
        })
        .fold(0.0, f64::max);
    let pass = exact_ok && hist[forbidden] == 0 && linf < 0.01;
    report(
        5,
        "sampler fidelity",
        pass,
        &format!(
            "[16, 81] -> exact [8/35, 27/35]: {exact_ok}; forbidden drawn {} times; \
             L-inf {linf:.4} over 100000 draws (< 0.01)",
            hist[forbidden]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_normalization_oracle() {
    let mut worst: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for k in 0..100u64 {
        let mut r = common::rng(600 + k);
        let n = r.gen_range(1..=50);
        let fill = r.gen_range(0.0..0.3);
        let g = common::random_graph(&mut r, n, 1, 2, fill);
        let a = normalize_adjacency(&g);
        let dense = a.to_dense();
        let oracle = common::dense_normalized(&g);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((dense[(i, j)] - oracle[i][j]).abs());
            }
        }
        asym = asym.max(a.max_asymmetry());
    }
    let two = Graph::new(
        SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
        DenseMatrix::identity(2),
        DenseMatrix::from_rows(&[&[1.0], &[1.0]]),
        vec![true, false],
        vec![false, true],
    )
    .unwrap();
    let two_ok = normalize_adjacency(&two).to_dense().values().iter().all(|&v| v == 0.5);
    let pass = worst < 1e-12 && asym < 1e-12 && two_ok;
    report(
        6,
        "normalization oracle",
        pass,
        &format!(
            "max deviation {worst:.1e}, max asymmetry {asym:.1e} over 100 graphs (< 1e-12); \
             two-node graph all 0.5: {two_ok}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_determinism() {
    let text = "dataset = synthetic\nepochs = 40\nhidden_dim = 16\nseed = 3\n\
                synth_n = 200\nsynth_seed = 3\n";
    let cfg = RunConfig::parse(text, std::path::Path::new(".")).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        cmd_train(&cfg, Some(d.path()), &mut std::io::sink()).unwrap();
    }
    let read = |i: usize, f: &str| std::fs::read(dirs[i].path().join(f)).unwrap();
    let metrics_same = read(0, METRICS_FILE) == read(1, METRICS_FILE);
    let model_same = read(0, MODEL_FILE) == read(1, MODEL_FILE);
    let pass = metrics_same && model_same;
    report(
        7,
        "determinism",
        pass,
        &format!("metrics.jsonl identical: {metrics_same}; model.bin identical: {model_same}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_defaults_in_manifest() {
    let tiny = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/tiny");
    let cfg = RunConfig::parse(&format!("dataset = {}\n", tiny.display()), std::path::Path::new("."))
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_train(&cfg, Some(dir.path()), &mut std::io::sink()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    let key = |k: &str| -> f64 { manifest["config"][k].as_str().unwrap().parse().unwrap() };
    let found = [
        ("lambda1", key("lambda1"), 0.25),
        ("lambda2", key("lambda2"), 0.25),
        ("negatives", key("negatives"), 5.0),
        ("lr", key("lr"), 0.01),
        ("threshold", key("threshold"), 0.5),
        ("layers", key("layers"), 2.0),
    ];
    let pass = found.iter().all(|(_, got, want)| got == want);
    let detail = found
        .iter()
        .map(|(k, got, _)| format!("{k}={got}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(8, "default configuration", pass, &detail);
    assert!(pass);
}

#[test]
fn criterion_9_training_reduces_loss() {
    let b = benchmark();
    let mut worst_ratio: f64 = 0.0;
    let mut failing = Vec::new();
    for run in b.runs.iter().filter(|r| r.method == Method::MlGcn) {
        let first = run.report.epochs.first().unwrap().parts.l_sum;
        let last = run.report.epochs.last().unwrap().parts.l_sum;
        let ratio = last / first;
        worst_ratio = worst_ratio.max(ratio);
        let halved = last < 0.5 * first;
        if !halved {
            failing.push(run.seed);
        }
    }
    let pass = failing.is_empty();
    report(
        9,
        "training reduces loss",
        pass,
        &format!(
            "worst final/epoch-1 L_sum ratio {worst_ratio:.3} over {BENCH_SEEDS} seeds (< 0.5); \
             failing seeds {failing:?}"
        ),
    );
    assert!(pass);
}
