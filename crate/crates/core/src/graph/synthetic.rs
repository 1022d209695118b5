//! Planted-correlation benchmark graphs.
//!
//! Each node draws one primary label uniformly. For every planted pair
//! `(a, b, rho)`, nodes whose primary label is `a` also carry `b` with
//! probability `rho`. Nodes sharing any label connect with probability
//! `p_in`, others with `p_out`. Features are the label indicators with each
//! bit flipped with probability [`FEATURE_FLIP_RATE`], followed by
//! `noise_dims` standard-normal columns.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, purpose};
use crate::tensor::{DenseMatrix, SparseMatrix};

pub const FEATURE_FLIP_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrPair {
    pub a: usize,
    pub b: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub c: usize,
    pub corr_pairs: Vec<CorrPair>,
    pub p_in: f64,
    pub p_out: f64,
    pub noise_dims: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(format!("synthetic spec: {m}")));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.n < 4 {
            return bad(format!("n must be at least 4, got {}", self.n));
        }
        if self.c < 2 {
            return bad(format!("c must be at least 2, got {}", self.c));
        }
        if !unit(self.p_in) || !unit(self.p_out) || !unit(self.train_fraction) {
            return bad("p_in, p_out and train_fraction must lie in [0, 1]".into());
        }
        if self.p_in <= self.p_out {
            return bad(format!("p_in ({}) must exceed p_out ({})", self.p_in, self.p_out));
        }
        for p in &self.corr_pairs {
            if p.a >= self.c || p.b >= self.c || p.a == p.b {
                return bad(format!("bad correlated pair ({}, {})", p.a, p.b));
            }
            if !unit(p.rho) {
                return bad(format!("rho must lie in [0, 1], got {}", p.rho));
            }
        }
        Ok(())
    }

    /// Number of feature columns the generated graph will have.
    pub fn feature_dim(&self) -> usize {
        self.c + self.noise_dims
    }
}

/// Generates a graph; identical specs give bit-identical graphs.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Graph> {
    spec.validate()?;
    let (n, c) = (spec.n, spec.c);
    let mut rng = rng::keyed(spec.seed, &[purpose::SYNTHETIC]);

    let mut labels = DenseMatrix::zeros(n, c);
    for i in 0..n {
        let primary = rng.gen_range(0..c);
        labels[(i, primary)] = 1.0;
        for p in spec.corr_pairs.iter().filter(|p| p.a == primary) {
            if rng.gen::<f64>() < p.rho {
                labels[(i, p.b)] = 1.0;
            }
        }
    }

    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let share = (0..c).any(|k| labels[(i, k)] != 0.0 && labels[(j, k)] != 0.0);
            let p = if share { spec.p_in } else { spec.p_out };
            if rng.gen::<f64>() < p {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;

    let d = spec.feature_dim();
    let mut features = DenseMatrix::zeros(n, d);
    for i in 0..n {
        for k in 0..c {
            let bit = labels[(i, k)];
            features[(i, k)] = if rng.gen::<f64>() < FEATURE_FLIP_RATE {
                1.0 - bit
            } else {
                bit
            };
        }
        for k in c..d {
            features[(i, k)] = rng.sample(StandardNormal);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    let mut train_mask = vec![false; n];
    let mut test_mask = vec![true; n];
    for &i in &order[..n_train] {
        train_mask[i] = true;
        test_mask[i] = false;
    }

    Graph::new(adjacency, features, labels, train_mask, test_mask)
}
