//! Dense and compressed-row matrices with fixed-order kernels.
//!
//! Everything is `f64`. Kernels may split work across rows in parallel, but
//! each output entry is always accumulated by a single task in ascending
//! inner-index order, so results do not depend on the thread count.

mod activation;
mod dense;
mod sparse;

pub use activation::{neg_log_sigmoid, relu, relu_mask, sigmoid, sigmoid_scalar, ReluMask};
pub use dense::DenseMatrix;
pub use sparse::SparseMatrix;

/// `s · d`; see [`SparseMatrix::spmm`].
pub fn spmm(s: &SparseMatrix, d: &DenseMatrix) -> crate::Result<DenseMatrix> {
    s.spmm(d)
}

/// `a · b`; see [`DenseMatrix::matmul`].
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> crate::Result<DenseMatrix> {
    a.matmul(b)
}
