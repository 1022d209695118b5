//! Attributed multi-label graphs.

mod io;
mod normalize;
mod synthetic;

pub use io::{load_dataset, save_dataset};
pub use normalize::normalize_adjacency;
pub use synthetic::{generate_synthetic, CorrPair, SyntheticSpec};

use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, SparseMatrix};

/// An undirected, weighted graph with node features, 0-1 labels and a
/// train/test split.
///
/// Unlabeled nodes carry all-zero label rows. Nodes outside both masks are
/// still part of the propagation but are neither trained on nor scored.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: SparseMatrix,
    features: DenseMatrix,
    labels: DenseMatrix,
    train_mask: Vec<bool>,
    test_mask: Vec<bool>,
}

impl Graph {
    /// Assembles a graph and checks every invariant.
    pub fn new(
        adjacency: SparseMatrix,
        features: DenseMatrix,
        labels: DenseMatrix,
        train_mask: Vec<bool>,
        test_mask: Vec<bool>,
    ) -> Result<Self> {
        let g = Self {
            adjacency,
            features,
            labels,
            train_mask,
            test_mask,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.adjacency.rows() != n || self.adjacency.cols() != n {
            return bad(format!(
                "adjacency is {}x{} for {n} nodes",
                self.adjacency.rows(),
                self.adjacency.cols()
            ));
        }
        if self.labels.rows() != n || self.train_mask.len() != n || self.test_mask.len() != n {
            return bad("labels and masks must have one row per node".into());
        }
        for i in 0..n {
            for (j, w) in self.adjacency.row(i) {
                if i == j {
                    return bad(format!("self-loop on node {i}"));
                }
                if w < 0.0 {
                    return bad(format!("negative weight on edge ({i}, {j})"));
                }
                if self.adjacency.get(j, i) != w {
                    return bad(format!("edge ({i}, {j}) is not symmetric"));
                }
            }
        }
        if let Some(v) = self.labels.values().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return bad(format!("label matrix must be 0-1, found {v}"));
        }
        for i in 0..n {
            if self.train_mask[i] && self.test_mask[i] {
                return bad(format!("node {i} is in both train and test masks"));
            }
            if self.train_mask[i] && self.labels.row(i).iter().all(|&v| v == 0.0) {
                return bad(format!("train node {i} has no labels"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    /// Feature dimension.
    pub fn d(&self) -> usize {
        self.features.cols()
    }

    /// Number of label classes.
    pub fn c(&self) -> usize {
        self.labels.cols()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &DenseMatrix {
        &self.labels
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn test_mask(&self) -> &[bool] {
        &self.test_mask
    }

    pub fn train_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&i| self.train_mask[i])
    }

    /// Label ids set on node `i`, ascending.
    pub fn node_labels(&self, i: usize) -> Vec<usize> {
        self.labels
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Number of undirected edges (each stored twice).
    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Same graph with a different train mask. The test mask is kept.
    pub fn with_train_mask(&self, train_mask: Vec<bool>) -> Result<Graph> {
        Graph::new(
            self.adjacency.clone(),
            self.features.clone(),
            self.labels.clone(),
            train_mask,
            self.test_mask.clone(),
        )
    }
}
