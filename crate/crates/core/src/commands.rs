//! The five user-facing operations behind the `mlgcn` binary.
//!
//! Each command takes a parsed [`RunConfig`], an optional output directory
//! and a sink for line-delimited JSON records. Human-readable summaries are
//! returned to the caller, which decides where to print them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{
    format_table, micro_f1, run_ablation, run_size_sweep, Method, MetricReport, ResultRow,
};
use crate::graph::{save_dataset, Graph};
use crate::model_file;
use crate::par;
use crate::trainer::{gradcheck, gradcheck_fixture, predict, train, GradcheckReport, Propagation, TrainConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const MODEL_FILE: &str = "model.bin";
pub const TABLES_FILE: &str = "tables.txt";
pub const EVAL_MANIFEST_FILE: &str = "eval_manifest.json";
pub const EVAL_METRICS_FILE: &str = "eval.jsonl";

/// Gradient checks at or above this relative error fail.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Name of the method a training config corresponds to, or `custom`.
pub fn method_label(cfg: &TrainConfig) -> &'static str {
    let on = |l: f64| l != 0.0;
    match (cfg.propagation, on(cfg.lambda1), on(cfg.lambda2)) {
        (Propagation::Identity, false, false) => Method::Mlp.name(),
        (Propagation::Normalized, false, false) => Method::Gcn.name(),
        (Propagation::Normalized, false, true) => Method::PartlyMlGcn.name(),
        (Propagation::Normalized, true, true) => Method::MlGcn.name(),
        _ => "custom",
    }
}

/// Writes JSON records to the caller's sink and, when an output directory
/// is set, to `metrics.jsonl` as well.
struct RecordSink<'a> {
    out: &'a mut dyn Write,
    file: Option<BufWriter<File>>,
    path: Option<PathBuf>,
}

impl<'a> RecordSink<'a> {
    fn new(out: &'a mut dyn Write, dir: Option<&Path>) -> Result<Self> {
        Self::named(out, dir, METRICS_FILE)
    }

    fn named(out: &'a mut dyn Write, dir: Option<&Path>, name: &str) -> Result<Self> {
        let (file, path) = match dir {
            Some(d) => {
                let p = d.join(name);
                let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
                (Some(BufWriter::new(f)), Some(p))
            }
            None => (None, None),
        };
        Ok(Self { out, file, path })
    }

    fn emit<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let mut line = serde_json::to_string(record)
            .map_err(|e| Error::Config(format!("cannot serialise record: {e}")))?;
        line.push('\n');
        self.out
            .write_all(line.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?;
        if let (Some(f), Some(p)) = (self.file.as_mut(), self.path.as_ref()) {
            f.write_all(line.as_bytes()).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io("<stdout>", e))?;
        if let (Some(f), Some(p)) = (self.file.as_mut(), self.path.as_ref()) {
            f.flush().map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

fn tagged<T: Serialize>(tag: &str, body: &T) -> Value {
    let mut obj = Map::new();
    obj.insert("record".into(), Value::String(tag.into()));
    if let Value::Object(fields) = serde_json::to_value(body).expect("plain data serialises") {
        obj.extend(fields);
    }
    Value::Object(obj)
}

fn prepare_dir(dir: Option<&Path>) -> Result<()> {
    if let Some(d) = dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    Ok(())
}

fn graph_summary(g: &Graph) -> Value {
    json!({
        "nodes": g.n(),
        "features": g.d(),
        "classes": g.c(),
        "edges": g.edge_count(),
        "train_nodes": g.train_mask().iter().filter(|&&m| m).count(),
        "test_nodes": g.test_mask().iter().filter(|&&m| m).count(),
    })
}

/// The run manifest: every resolved config key plus run metadata. Passing
/// the file back as `--config` replays the run.
pub fn manifest(command: &str, cfg: &RunConfig, g: Option<&Graph>) -> Value {
    let config: Map<String, Value> = cfg
        .resolved_pairs()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "command": command,
        "created_unix": created,
        "version": env!("CARGO_PKG_VERSION"),
        "parallel": par::is_parallel(),
        "config": config,
        "graph": g.map(graph_summary),
    })
}

fn write_manifest(dir: Option<&Path>, m: &Value) -> Result<()> {
    write_manifest_as(dir, m, MANIFEST_FILE)
}

fn write_manifest_as(dir: Option<&Path>, m: &Value, name: &str) -> Result<()> {
    if let Some(d) = dir {
        let p = d.join(name);
        let text = serde_json::to_string_pretty(m).expect("manifest serialises");
        fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// Scored result of `train` or `eval`.
#[derive(Debug, Clone, Serialize)]
struct ScoreRecord {
    split: &'static str,
    method: &'static str,
    fraction: f64,
    seed: u64,
    micro_f1: f64,
    micro_f1_percent: String,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
}

impl ScoreRecord {
    fn new(split: &'static str, cfg: &TrainConfig, m: &MetricReport) -> Self {
        Self {
            split,
            method: method_label(cfg),
            fraction: 1.0,
            seed: cfg.seed,
            micro_f1: m.micro_f1,
            micro_f1_percent: format!("{:.2}", m.percent()),
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
        }
    }
}

fn score_line(split: &str, m: &MetricReport) -> String {
    format!("{split} micro-F1 {:.4} ({:.2}%)", m.micro_f1, m.percent())
}

/// Trains one model. Streams one record per epoch, then the final train and
/// test scores. With `out` set, also writes the manifest, `metrics.jsonl`
/// and `model.bin`. Returns a short summary.
pub fn cmd_train(cfg: &RunConfig, out: Option<&Path>, sink: &mut dyn Write) -> Result<String> {
    let g = cfg.graph()?;
    prepare_dir(out)?;
    write_manifest(out, &manifest("train", cfg, Some(&g)))?;
    let outcome = train(&g, &cfg.train)?;
    let mut records = RecordSink::new(sink, out)?;
    for e in &outcome.report.epochs {
        records.emit(&tagged("epoch", e))?;
    }
    let mut summary = vec![score_line("train", &outcome.report.train)];
    records.emit(&tagged("score", &ScoreRecord::new("train", &cfg.train, &outcome.report.train)))?;
    if let Some(test) = &outcome.report.test {
        records.emit(&tagged("score", &ScoreRecord::new("test", &cfg.train, test)))?;
        summary.push(score_line("test", test));
    }
    records.finish()?;
    if let Some(d) = out {
        model_file::write(&d.join(MODEL_FILE), &outcome.model)?;
    }
    Ok(summary.join("\n"))
}

/// Scores a saved model on the test split of the configured graph. Files go
/// to `eval_manifest.json` and `eval.jsonl` so a training run's outputs in
/// the same directory are left alone.
pub fn cmd_eval(
    cfg: &RunConfig,
    model_path: &Path,
    out: Option<&Path>,
    sink: &mut dyn Write,
) -> Result<(MetricReport, String)> {
    let g = cfg.graph()?;
    let model = model_file::read(model_path)?;
    let (d, _, c) = model.dims();
    if c != g.c() {
        return Err(Error::Model(format!(
            "model predicts {c} classes but the dataset has {}",
            g.c()
        )));
    }
    if d != g.d() {
        return Err(Error::Model(format!(
            "model expects {d} features but the dataset has {}",
            g.d()
        )));
    }
    prepare_dir(out)?;
    write_manifest_as(out, &manifest("eval", cfg, Some(&g)), EVAL_MANIFEST_FILE)?;
    let pred = predict(&model, &g, cfg.train.propagation, cfg.train.threshold)?;
    let report = micro_f1(&pred, g.labels(), g.test_mask())?;
    let mut records = RecordSink::named(sink, out, EVAL_METRICS_FILE)?;
    records.emit(&tagged("score", &ScoreRecord::new("test", &cfg.train, &report)))?;
    records.finish()?;
    Ok((report, score_line("test", &report)))
}

/// Generates the configured synthetic graph into `out` in the dataset
/// format. Only dataset files go into `out`, so repeated runs produce
/// identical directories; the manifest is streamed to `sink`.
pub fn cmd_gen(cfg: &RunConfig, out: &Path, sink: &mut dyn Write) -> Result<String> {
    let g = crate::graph::generate_synthetic(&cfg.synthetic)?;
    save_dataset(&g, out)?;
    let mut records = RecordSink::new(sink, None)?;
    records.emit(&tagged("manifest", &manifest("gen", cfg, Some(&g))))?;
    records.finish()?;
    Ok(format!(
        "wrote {} nodes, {} edges, {} features, {} classes to {}",
        g.n(),
        g.edge_count(),
        g.d(),
        g.c(),
        out.display()
    ))
}

/// Finite-difference gradient check. Without a config the built-in fixture
/// is used. The caller treats a maximum error at or above
/// [`GRADCHECK_TOLERANCE`] as failure.
pub fn cmd_gradcheck(
    cfg: Option<&RunConfig>,
    out: Option<&Path>,
    sink: &mut dyn Write,
) -> Result<GradcheckReport> {
    let (g, train_cfg, step, resolved) = match cfg {
        Some(c) => (c.graph()?, c.train.clone(), c.gradcheck_step, c.clone()),
        None => {
            let (g, t) = gradcheck_fixture();
            let rc = RunConfig {
                train: t.clone(),
                ..RunConfig::default()
            };
            (g, t, rc.gradcheck_step, rc)
        }
    };
    prepare_dir(out)?;
    write_manifest(out, &manifest("gradcheck", &resolved, Some(&g)))?;
    let report = gradcheck(&g, &train_cfg, step)?;
    let mut records = RecordSink::new(sink, out)?;
    records.emit(&json!({
        "record": "gradcheck",
        "step": step,
        "w0": report.w0,
        "w1": report.w1,
        "z": report.z,
        "max": report.max(),
        "tolerance": GRADCHECK_TOLERANCE,
        "passed": report.max() < GRADCHECK_TOLERANCE,
    }))?;
    records.finish()?;
    Ok(report)
}

/// Rows of both sweep experiments.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub ablation: Vec<ResultRow>,
    pub size_sweep: Vec<ResultRow>,
    pub tables: String,
}

/// Runs the four-method comparison over `seeds` seeds at the full training
/// set, then the GCN vs ML-GCN comparison over every configured fraction.
pub fn cmd_sweep(cfg: &RunConfig, out: Option<&Path>, sink: &mut dyn Write) -> Result<SweepOutput> {
    let g = cfg.graph()?;
    prepare_dir(out)?;
    write_manifest(out, &manifest("sweep", cfg, Some(&g)))?;
    let seeds = cfg.seed_list();
    let ablation = run_ablation(&g, &cfg.train, &seeds)?;
    let mut size_sweep = Vec::new();
    for &seed in &seeds {
        let base = TrainConfig {
            seed,
            ..cfg.train.clone()
        };
        size_sweep.extend(run_size_sweep(
            &g,
            &base,
            &cfg.fractions,
            &[Method::Gcn, Method::MlGcn],
        )?);
    }
    let mut records = RecordSink::new(sink, out)?;
    for row in &ablation {
        records.emit(&tagged("ablation", row))?;
    }
    for row in &size_sweep {
        records.emit(&tagged("size_sweep", row))?;
    }
    records.finish()?;
    let tables = format!(
        "Method comparison, mean test micro-F1 (%) over {} seed(s)\n{}\n\
         Training-set size, mean test micro-F1 (%) over {} seed(s)\n{}",
        seeds.len(),
        format_table(&ablation),
        seeds.len(),
        format_table(&size_sweep)
    );
    if let Some(d) = out {
        let p = d.join(TABLES_FILE);
        fs::write(&p, &tables).map_err(|e| Error::io(&p, e))?;
    }
    Ok(SweepOutput {
        ablation,
        size_sweep,
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_labels() {
        let base = TrainConfig::default();
        for m in Method::ALL {
            assert_eq!(method_label(&m.configure(&base)), m.name());
        }
        let odd = TrainConfig {
            lambda2: 0.0,
            ..base
        };
        assert_eq!(method_label(&odd), "custom");
    }

    #[test]
    fn tagged_puts_record_first() {
        let v = tagged("score", &MetricReport::from_counts(1, 0, 0));
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.starts_with("{\"record\":\"score\""), "{s}");
    }
}
