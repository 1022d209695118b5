use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Positions where the rectifier input was strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluMask {
    rows: usize,
    cols: usize,
    active: Vec<bool>,
}

impl ReluMask {
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.active[i * self.cols + j]
    }

    /// Zeroes the upstream gradient wherever the input was not positive.
    pub fn apply(&self, upstream: &DenseMatrix) -> Result<DenseMatrix> {
        if upstream.shape() != (self.rows, self.cols) {
            return Err(Error::shape(
                "ReluMask::apply",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }
        let mut out = upstream.clone();
        for (g, &on) in out.values_mut().iter_mut().zip(&self.active) {
            if !on {
                *g = 0.0;
            }
        }
        Ok(out)
    }
}

pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Subgradient at exactly zero is taken as zero.
pub fn relu_mask(x: &DenseMatrix) -> ReluMask {
    ReluMask {
        rows: x.rows(),
        cols: x.cols(),
        active: x.values().iter().map(|&v| v > 0.0).collect(),
    }
}

/// Logistic function, branching on sign so neither side overflows.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, i.e. `ln(1 + e^{-x})`, without cancellation for large |x|.
#[inline]
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

pub fn sigmoid(x: &DenseMatrix) -> DenseMatrix {
    x.map(sigmoid_scalar)
}
