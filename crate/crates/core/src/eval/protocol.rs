//! Method comparison and training-set-size experiments.
//!
//! Every run is an independent, seeded training job over a shared read-only
//! graph, so the job list is mapped in parallel and collected in order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::rng::{self, purpose};
use crate::trainer::{train, Propagation, TrainConfig};

/// Training-set fractions of the size sweep.
pub const DEFAULT_FRACTIONS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Mlp,
    Gcn,
    PartlyMlGcn,
    MlGcn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mlp, Method::Gcn, Method::PartlyMlGcn, Method::MlGcn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mlp => "MLP",
            Method::Gcn => "GCN",
            Method::PartlyMlGcn => "Partly ML-GCN",
            Method::MlGcn => "ML-GCN",
        }
    }

    /// The base config specialised to this method:
    ///
    /// | method        | propagation | λ1      | λ2      |
    /// |---------------|-------------|---------|---------|
    /// | MLP           | identity    | 0       | 0       |
    /// | GCN           | normalized  | 0       | 0       |
    /// | Partly ML-GCN | normalized  | 0       | base λ2 |
    /// | ML-GCN        | normalized  | base λ1 | base λ2 |
    pub fn configure(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        match self {
            Method::Mlp => {
                cfg.propagation = Propagation::Identity;
                cfg.lambda1 = 0.0;
                cfg.lambda2 = 0.0;
            }
            Method::Gcn => {
                cfg.propagation = Propagation::Normalized;
                cfg.lambda1 = 0.0;
                cfg.lambda2 = 0.0;
            }
            Method::PartlyMlGcn => {
                cfg.propagation = Propagation::Normalized;
                cfg.lambda1 = 0.0;
            }
            Method::MlGcn => {
                cfg.propagation = Propagation::Normalized;
            }
        }
        cfg
    }
}

/// One scored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub fraction: f64,
    pub seed: u64,
    pub micro_f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn run_one(g: &Graph, base: &TrainConfig, method: Method, seed: u64, fraction: f64) -> Result<ResultRow> {
    let mut cfg = method.configure(base);
    cfg.seed = seed;
    let outcome = train(g, &cfg)?;
    let test = outcome
        .report
        .test
        .ok_or_else(|| Error::Validation("graph has no test nodes to score".into()))?;
    Ok(ResultRow {
        method: method.name().to_string(),
        fraction,
        seed,
        micro_f1: test.micro_f1,
        tp: test.tp,
        fp: test.fp,
        fn_: test.fn_,
    })
}

/// Trains all four methods for every seed and scores each on the test mask.
/// Rows come back seed-major, methods in [`Method::ALL`] order.
pub fn run_ablation(g: &Graph, base: &TrainConfig, seeds: &[u64]) -> Result<Vec<ResultRow>> {
    let jobs: Vec<(u64, Method)> = seeds
        .iter()
        .flat_map(|&s| Method::ALL.iter().map(move |&m| (s, m)))
        .collect();
    par::map_collect(&jobs, |&(seed, method)| run_one(g, base, method, seed, 1.0))
        .into_iter()
        .collect()
}

/// Keeps a seeded `fraction` of the current train nodes (at least one);
/// the test mask is untouched. A fraction of 1 returns the mask unchanged.
pub fn subsample_train_mask(g: &Graph, fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let mut pool: Vec<usize> = g.train_nodes().collect();
    if pool.is_empty() {
        return Err(Error::NoTrainingNodes);
    }
    let mask = if fraction == 1.0 {
        g.train_mask().to_vec()
    } else {
        let keep = ((fraction * pool.len() as f64).round() as usize).max(1);
        let mut r = rng::keyed(seed, &[purpose::SUBSAMPLE, fraction.to_bits()]);
        pool.shuffle(&mut r);
        let mut mask = vec![false; g.n()];
        for &i in &pool[..keep] {
            mask[i] = true;
        }
        mask
    };
    let classes: BTreeSet<usize> = (0..g.n())
        .filter(|&i| mask[i])
        .flat_map(|i| g.node_labels(i))
        .collect();
    if classes.len() < 2 {
        return Err(Error::Validation(format!(
            "training fraction {fraction} leaves {} labeled class(es); need at least 2",
            classes.len()
        )));
    }
    Ok(mask)
}

/// For each fraction, subsamples the train mask and trains every method in
/// `methods`. Rows come back fraction-major.
pub fn run_size_sweep(
    g: &Graph,
    base: &TrainConfig,
    fractions: &[f64],
    methods: &[Method],
) -> Result<Vec<ResultRow>> {
    let graphs: Vec<Graph> = fractions
        .iter()
        .map(|&f| g.with_train_mask(subsample_train_mask(g, f, base.seed)?))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Method)> = (0..fractions.len())
        .flat_map(|fi| methods.iter().map(move |&m| (fi, m)))
        .collect();
    par::map_collect(&jobs, |&(fi, method)| {
        run_one(&graphs[fi], base, method, base.seed, fractions[fi])
    })
    .into_iter()
    .collect()
}

/// Mean micro-F1 of one (method, fraction) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub method: String,
    pub fraction: f64,
    pub runs: usize,
    pub mean_micro_f1: f64,
}

/// Groups rows by (method, fraction) in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryCell> {
    let mut cells: Vec<SummaryCell> = Vec::new();
    for row in rows {
        match cells
            .iter_mut()
            .find(|c| c.method == row.method && c.fraction == row.fraction)
        {
            Some(c) => {
                c.mean_micro_f1 += row.micro_f1;
                c.runs += 1;
            }
            None => cells.push(SummaryCell {
                method: row.method.clone(),
                fraction: row.fraction,
                runs: 1,
                mean_micro_f1: row.micro_f1,
            }),
        }
    }
    for c in &mut cells {
        c.mean_micro_f1 /= c.runs as f64;
    }
    cells
}

fn fraction_label(f: f64) -> String {
    if f == 1.0 {
        "full".to_string()
    } else {
        format!("{}%", (f * 100.0).round())
    }
}

/// Plain-text table: one row per method, one column per fraction, cells are
/// mean micro-F1 in percent with two decimals.
pub fn format_table(rows: &[ResultRow]) -> String {
    let cells = summarize(rows);
    let mut methods: Vec<&str> = Vec::new();
    let mut fractions: Vec<f64> = Vec::new();
    for c in &cells {
        if !methods.contains(&c.method.as_str()) {
            methods.push(&c.method);
        }
        if !fractions.contains(&c.fraction) {
            fractions.push(c.fraction);
        }
    }
    fractions.sort_by(|a, b| a.total_cmp(b));

    let name_w = methods.iter().map(|m| m.len()).max().unwrap_or(0).max("method".len());
    let col_w = 8;
    let mut out = String::new();
    write!(out, "{:<name_w$}", "method").unwrap();
    for &f in &fractions {
        write!(out, "  {:>col_w$}", fraction_label(f)).unwrap();
    }
    out.push('\n');
    for m in &methods {
        write!(out, "{m:<name_w$}").unwrap();
        for &f in &fractions {
            let cell = cells
                .iter()
                .find(|c| c.method == *m && c.fraction == f)
                .map(|c| format!("{:.2}", 100.0 * c.mean_micro_f1))
                .unwrap_or_else(|| "-".into());
            write!(out, "  {cell:>col_w$}").unwrap();
        }
        out.push('\n');
    }
    out
}
