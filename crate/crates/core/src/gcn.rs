//! Two-layer graph convolution with a sigmoid multi-label head.
//!
//! ```text
//! Z1 = Â X W0      H1 = relu(Z1)
//! Z2 = Â H1 W1     P  = sigmoid(Z2)
//! ```
//!
//! `H1` is the hidden representation the embedding losses attach to; the
//! backward pass accepts their gradient as an extra term on `H1`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::{relu, relu_mask, sigmoid, DenseMatrix, ReluMask, SparseMatrix};

/// Probability clamp used inside the logarithms of the supervised loss.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

impl GcnParams {
    pub fn zeros(d: usize, h: usize, c: usize) -> Self {
        Self {
            w0: DenseMatrix::zeros(d, h),
            w1: DenseMatrix::zeros(h, c),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w0.cols()
    }
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `Â X`, independent of the parameters.
    pub ax: DenseMatrix,
    pub z1: DenseMatrix,
    pub h1: DenseMatrix,
    pub h1_mask: ReluMask,
    pub ah1: DenseMatrix,
    /// Logits.
    pub z2: DenseMatrix,
    /// Per-class probabilities, independent across classes.
    pub p: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub dw0: DenseMatrix,
    pub dw1: DenseMatrix,
}

fn check_params(g: &Graph, a_hat: &SparseMatrix, params: &GcnParams) -> Result<()> {
    if a_hat.rows() != g.n() || a_hat.cols() != g.n() {
        return Err(Error::shape(
            "gcn_forward",
            format!("{0}x{0} propagation matrix", g.n()),
            format!("{}x{}", a_hat.rows(), a_hat.cols()),
        ));
    }
    if params.w0.rows() != g.d() || params.w1.rows() != params.w0.cols() || params.w1.cols() != g.c()
    {
        return Err(Error::shape(
            "gcn_forward",
            format!("W0 {}xh, W1 hx{}", g.d(), g.c()),
            format!(
                "W0 {}x{}, W1 {}x{}",
                params.w0.rows(),
                params.w0.cols(),
                params.w1.rows(),
                params.w1.cols()
            ),
        ));
    }
    Ok(())
}

/// Forward pass; `ax` may be passed in to skip recomputing `Â X`.
pub fn gcn_forward_with(
    g: &Graph,
    a_hat: &SparseMatrix,
    ax: Option<&DenseMatrix>,
    params: &GcnParams,
) -> Result<ForwardCache> {
    check_params(g, a_hat, params)?;
    let ax = match ax {
        Some(ax) => ax.clone(),
        None => a_hat.spmm(g.features())?,
    };
    let z1 = ax.matmul(&params.w0)?;
    let h1 = relu(&z1);
    let h1_mask = relu_mask(&z1);
    let ah1 = a_hat.spmm(&h1)?;
    let z2 = ah1.matmul(&params.w1)?;
    let p = sigmoid(&z2);
    Ok(ForwardCache {
        ax,
        z1,
        h1,
        h1_mask,
        ah1,
        z2,
        p,
    })
}

pub fn gcn_forward(g: &Graph, a_hat: &SparseMatrix, params: &GcnParams) -> Result<ForwardCache> {
    gcn_forward_with(g, a_hat, None, params)
}

fn masked_cells(p: &DenseMatrix, y: &DenseMatrix, mask: &[bool]) -> Result<usize> {
    if p.shape() != y.shape() || mask.len() != p.rows() {
        return Err(Error::shape(
            "bce",
            format!("{}x{} with {} mask entries", p.rows(), p.cols(), p.rows()),
            format!("{}x{} with {} mask entries", y.rows(), y.cols(), mask.len()),
        ));
    }
    let rows = mask.iter().filter(|&&m| m).count();
    if rows == 0 {
        return Err(Error::NoTrainingNodes);
    }
    Ok(rows * p.cols())
}

/// Mean binary cross-entropy over the masked (node, class) cells.
pub fn bce_loss(p: &DenseMatrix, y: &DenseMatrix, mask: &[bool]) -> Result<f64> {
    let cells = masked_cells(p, y, mask)?;
    let mut total = 0.0;
    for i in (0..p.rows()).filter(|&i| mask[i]) {
        for (&pi, &yi) in p.row(i).iter().zip(y.row(i)) {
            let pc = pi.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= yi * pc.ln() + (1.0 - yi) * (1.0 - pc).ln();
        }
    }
    Ok(total / cells as f64)
}

/// Gradient of [`bce_loss`] with respect to the logits, with the sigmoid
/// folded in: `(P - Y) / cells` on masked rows, zero elsewhere.
pub fn bce_logit_grad(p: &DenseMatrix, y: &DenseMatrix, mask: &[bool]) -> Result<DenseMatrix> {
    let cells = masked_cells(p, y, mask)? as f64;
    let mut grad = DenseMatrix::zeros(p.rows(), p.cols());
    for i in (0..p.rows()).filter(|&i| mask[i]) {
        for ((g, &pi), &yi) in grad.row_mut(i).iter_mut().zip(p.row(i)).zip(y.row(i)) {
            *g = (pi - yi) / cells;
        }
    }
    Ok(grad)
}

/// Reverse pass.
///
/// `d_logits` is the gradient on `Z2` (see [`bce_logit_grad`]);
/// `d_hidden_injected` is added to the gradient reaching `H1` before the
/// rectifier mask and must be `n x h` (zeros when unused).
pub fn gcn_backward(
    cache: &ForwardCache,
    a_hat: &SparseMatrix,
    params: &GcnParams,
    d_logits: &DenseMatrix,
    d_hidden_injected: &DenseMatrix,
) -> Result<ParamGrads> {
    if d_logits.shape() != cache.z2.shape() {
        return Err(Error::shape(
            "gcn_backward",
            format!("d_logits {}x{}", cache.z2.rows(), cache.z2.cols()),
            format!("{}x{}", d_logits.rows(), d_logits.cols()),
        ));
    }
    if d_hidden_injected.shape() != cache.h1.shape() {
        return Err(Error::shape(
            "gcn_backward",
            format!("d_hidden_injected {}x{}", cache.h1.rows(), cache.h1.cols()),
            format!("{}x{}", d_hidden_injected.rows(), d_hidden_injected.cols()),
        ));
    }
    let dw1 = cache.ah1.transpose().matmul(d_logits)?;
    let d_ah1 = d_logits.matmul(&params.w1.transpose())?;
    // Â is symmetric, so Âᵀ·x = Â·x.
    let mut d_h1 = a_hat.spmm(&d_ah1)?;
    d_h1.add_assign(d_hidden_injected)?;
    let d_z1 = cache.h1_mask.apply(&d_h1)?;
    let dw0 = cache.ax.transpose().matmul(&d_z1)?;
    Ok(ParamGrads { dw0, dw1 })
}
