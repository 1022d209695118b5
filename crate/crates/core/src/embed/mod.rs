//! Label co-embedding losses.
//!
//! A trainable matrix `Z` holds one row per label class, in the same space
//! as the hidden node representation `H1`. Two negative-sampled skip-gram
//! objectives tie them together:
//!
//! * node-label: a training node predicts each of its labels,
//!   `-ln σ(z_j·h_i) - Σ_t ln σ(-z_t·h_i)`, averaged over the node's labels
//!   and then over training nodes;
//! * label-label: each label of a multi-label node predicts each other label,
//!   `-ln σ(z_b·z_a) - Σ_t ln σ(-z_t·z_a)`, averaged over the node's ordered
//!   pairs and then over multi-label training nodes.
//!
//! Negatives `t` come from [`NoiseDistribution`] and never equal the pair's
//! target. They are drawn up front into [`NegativeDraws`], so the losses
//! themselves are deterministic functions that can be finite-differenced.

mod noise;
mod pairs;

pub use noise::{sample_negatives, NoiseDistribution};
pub use pairs::{
    draw_label_label_negatives, draw_node_label_negatives, NegativeDraws, NodeSentence, PairSets,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{neg_log_sigmoid, sigmoid_scalar, DenseMatrix};

/// Label embedding matrix, `c x h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelEmbedding {
    pub z: DenseMatrix,
}

impl LabelEmbedding {
    /// Uniform on `[-0.5/h, 0.5/h]`.
    pub fn init<R: Rng + ?Sized>(c: usize, h: usize, rng: &mut R) -> Self {
        let bound = 0.5 / h as f64;
        Self {
            z: DenseMatrix::from_fn(c, h, |_, _| rng.gen_range(-bound..=bound)),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.z.rows()
    }

    pub fn dim(&self) -> usize {
        self.z.cols()
    }
}

#[derive(Debug, Clone)]
pub struct NodeLabelLoss {
    pub loss: f64,
    pub d_h1: DenseMatrix,
    pub d_z: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct LabelLabelLoss {
    pub loss: f64,
    pub d_z: DenseMatrix,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_draws(pairs: &PairSets, draws: &NegativeDraws, label_label: bool) -> Result<()> {
    let ok = draws.0.len() == pairs.sentences().len()
        && pairs.sentences().iter().zip(&draws.0).all(|(s, d)| {
            let expected = if label_label {
                s.label_pairs.len()
            } else {
                s.labels.len()
            };
            d.len() == expected
        });
    if ok {
        Ok(())
    } else {
        Err(Error::shape(
            "negative draws",
            "one slot list per positive pair",
            "draws built for a different pair set",
        ))
    }
}

/// Node-label loss and its gradients with respect to `H1` and `Z`.
///
/// Gradients are collected as a coefficient matrix `C` (`n x c`), one row
/// per node, so that `dH1 = C·Z` and `dZ = Cᵀ·H1`. Rows are filled
/// independently and the products use the fixed-order kernels.
pub fn node_label_loss(
    h1: &DenseMatrix,
    emb: &LabelEmbedding,
    pairs: &PairSets,
    negatives: &NegativeDraws,
) -> Result<NodeLabelLoss> {
    let (n, c) = (h1.rows(), emb.num_classes());
    if h1.cols() != emb.dim() {
        return Err(Error::shape(
            "node_label_loss",
            format!("H1 with {} columns", emb.dim()),
            h1.cols(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::NoTrainingNodes);
    }
    check_draws(pairs, negatives, false)?;
    let z = &emb.z;
    let n_nodes = pairs.sentences().len() as f64;

    let indexed: Vec<(usize, &NodeSentence)> = pairs.sentences().iter().enumerate().collect();
    let per_node = par::map_collect(&indexed, |&(idx, s)| {
        let h = h1.row(s.node);
        let weight = 1.0 / (n_nodes * s.labels.len() as f64);
        let mut coef = vec![0.0; c];
        let mut term = 0.0;
        for (&target, negs) in s.labels.iter().zip(negatives.for_sentence(idx)) {
            let score = dot(z.row(target), h);
            term += neg_log_sigmoid(score);
            coef[target] += weight * (sigmoid_scalar(score) - 1.0);
            for &t in negs {
                let score = dot(z.row(t), h);
                term += neg_log_sigmoid(-score);
                coef[t] += weight * sigmoid_scalar(score);
            }
        }
        (term / s.labels.len() as f64, coef)
    });

    let mut coef = DenseMatrix::zeros(n, c);
    let mut total = 0.0;
    for (s, (term, row)) in pairs.sentences().iter().zip(per_node) {
        total += term;
        for (dst, v) in coef.row_mut(s.node).iter_mut().zip(row) {
            *dst += v;
        }
    }
    let d_h1 = coef.matmul(z)?;
    let d_z = coef.transpose().matmul(h1)?;
    Ok(NodeLabelLoss {
        loss: total / n_nodes,
        d_h1,
        d_z,
    })
}

/// Label-label loss and its gradient with respect to `Z`.
///
/// Every term is a function of dot products `z_u·z_v`; the gradient is
/// collected as a symmetric coefficient matrix `M` (`c x c`) and returned as
/// `dZ = M·Z`. Nodes with a single label contribute nothing; with no
/// multi-label node the loss is zero.
pub fn label_label_loss(
    emb: &LabelEmbedding,
    pairs: &PairSets,
    negatives: &NegativeDraws,
) -> Result<LabelLabelLoss> {
    check_draws(pairs, negatives, true)?;
    let c = emb.num_classes();
    let z = &emb.z;
    let n_multi = pairs.multi_label_count();
    if n_multi == 0 {
        return Ok(LabelLabelLoss {
            loss: 0.0,
            d_z: DenseMatrix::zeros(c, emb.dim()),
        });
    }
    let n_multi = n_multi as f64;

    let indexed: Vec<(usize, &NodeSentence)> = pairs
        .sentences()
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.label_pairs.is_empty())
        .collect();
    let per_node = par::map_collect(&indexed, |&(idx, s)| {
        let weight = 1.0 / (n_multi * s.label_pairs.len() as f64);
        let mut coef = vec![0.0; c * c];
        let mut term = 0.0;
        for (&(ctx, target), negs) in s.label_pairs.iter().zip(negatives.for_sentence(idx)) {
            let zc = z.row(ctx);
            let score = dot(z.row(target), zc);
            term += neg_log_sigmoid(score);
            let g = weight * (sigmoid_scalar(score) - 1.0);
            coef[ctx * c + target] += g;
            coef[target * c + ctx] += g;
            for &t in negs {
                let score = dot(z.row(t), zc);
                term += neg_log_sigmoid(-score);
                let g = weight * sigmoid_scalar(score);
                coef[ctx * c + t] += g;
                coef[t * c + ctx] += g;
            }
        }
        (term / s.label_pairs.len() as f64, coef)
    });

    let mut coef = vec![0.0; c * c];
    let mut total = 0.0;
    for (term, m) in per_node {
        total += term;
        for (dst, v) in coef.iter_mut().zip(m) {
            *dst += v;
        }
    }
    let coef = DenseMatrix::new(c, c, coef)?;
    Ok(LabelLabelLoss {
        loss: total / n_multi,
        d_z: coef.matmul(z)?,
    })
}
