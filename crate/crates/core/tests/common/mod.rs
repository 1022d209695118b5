#![allow(dead_code)]

use mlgcn::graph::Graph;
use mlgcn::tensor::{DenseMatrix, SparseMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(r: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| r.gen_range(-scale..scale))
}

/// Random symmetric weighted graph without self-loops. Every node gets at
/// least one label; the first half is train, the rest test.
pub fn random_graph(r: &mut impl Rng, n: usize, d: usize, c: usize, fill: f64) -> Graph {
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < fill {
                let w = r.gen_range(0.1..3.0);
                triplets.push((i, j, w));
                triplets.push((j, i, w));
            }
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, n, triplets).unwrap();
    let features = random_dense(r, n, d, 1.0);
    let mut labels = DenseMatrix::zeros(n, c);
    for i in 0..n {
        labels.row_mut(i)[r.gen_range(0..c)] = 1.0;
        for k in 0..c {
            if r.gen::<f64>() < 0.3 {
                labels.row_mut(i)[k] = 1.0;
            }
        }
    }
    let train: Vec<bool> = (0..n).map(|i| i < n.div_ceil(2)).collect();
    let test: Vec<bool> = train.iter().map(|t| !t).collect();
    Graph::new(adjacency, features, labels, train, test).unwrap()
}

/// `D^{-1/2} (A + I) D^{-1/2}` computed densely, entry by entry.
pub fn dense_normalized(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n();
    let a = g.adjacency().to_dense();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a[(i, j)] + if i == j { 1.0 } else { 0.0 };
        }
    }
    let deg: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            m[i][j] /= deg[i].sqrt() * deg[j].sqrt();
        }
    }
    m
}

/// Naive triple-loop product.
pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs() + 1e-8)
}

/// Largest relative error between `analytic` and central differences of
/// `f` around `x`.
pub fn fd_check(
    x: &DenseMatrix,
    analytic: &DenseMatrix,
    step: f64,
    mut f: impl FnMut(&DenseMatrix) -> f64,
) -> f64 {
    let mut probe = x.clone();
    let mut worst: f64 = 0.0;
    for idx in 0..x.values().len() {
        let orig = probe.values()[idx];
        probe.values_mut()[idx] = orig + step;
        let plus = f(&probe);
        probe.values_mut()[idx] = orig - step;
        let minus = f(&probe);
        probe.values_mut()[idx] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        worst = worst.max(relative_error(analytic.values()[idx], numeric));
    }
    worst
}
