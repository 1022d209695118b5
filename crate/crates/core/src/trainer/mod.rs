//! Joint training of the GCN and the label embedding.
//!
//! Each epoch runs one full-batch forward pass, evaluates
//! `L_sum = λ1·L_ll + λ2·L_nl + L_sigmoid` with freshly drawn negatives,
//! backpropagates (the node-label gradient enters through `H1`), and takes
//! one Adam step over `W0`, `W1` and `Z`.

mod gradcheck;

pub use gradcheck::{gradcheck, gradcheck_fixture, GradcheckReport};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{
    draw_label_label_negatives, draw_node_label_negatives, label_label_loss, node_label_loss,
    LabelEmbedding, NegativeDraws, NoiseDistribution, PairSets,
};
use crate::error::{Error, Result};
use crate::eval::{micro_f1, MetricReport};
use crate::gcn::{bce_logit_grad, bce_loss, gcn_backward, gcn_forward_with, ForwardCache, GcnParams};
use crate::graph::{normalize_adjacency, Graph};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::rng::{self, purpose};
use crate::tensor::{DenseMatrix, SparseMatrix};

/// How node features are propagated between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// Symmetrically normalized adjacency with self-loops.
    Normalized,
    /// No propagation: the network degenerates to an MLP on node features.
    Identity,
}

impl Propagation {
    pub fn as_str(self) -> &'static str {
        match self {
            Propagation::Normalized => "normalized",
            Propagation::Identity => "identity",
        }
    }

    pub fn operator(self, g: &Graph) -> SparseMatrix {
        match self {
            Propagation::Normalized => normalize_adjacency(g),
            Propagation::Identity => SparseMatrix::identity(g.n()),
        }
    }
}

impl std::str::FromStr for Propagation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Propagation::Normalized),
            "identity" => Ok(Propagation::Identity),
            other => Err(Error::Config(format!(
                "propagation must be `normalized` or `identity`, got `{other}`"
            ))),
        }
    }
}

/// Only two-layer networks are supported.
pub const LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub lr: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub negatives: usize,
    pub seed: u64,
    pub propagation: Propagation,
    pub threshold: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 200,
            hidden_dim: 64,
            layers: LAYERS,
            lr: adam.lr,
            lambda1: 0.25,
            lambda2: 0.25,
            negatives: 5,
            seed: 0,
            propagation: Propagation::Normalized,
            threshold: 0.5,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs < 1 {
            return bad("epochs must be >= 1".into());
        }
        if self.hidden_dim < 1 {
            return bad("hidden_dim must be >= 1".into());
        }
        if self.layers != LAYERS {
            return bad(format!("only {LAYERS}-layer networks are supported, got {}", self.layers));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return bad("lambda1 and lambda2 must be finite".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)".into());
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn uses_embedding(&self) -> bool {
        self.lambda1 != 0.0 || self.lambda2 != 0.0
    }
}

/// Trained values: GCN weights plus the label embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: GcnParams,
    pub embedding: LabelEmbedding,
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound))
}

impl Model {
    /// Glorot-uniform weights and a small uniform label embedding, drawn
    /// from the run's init stream.
    pub fn init(d: usize, h: usize, c: usize, seed: u64) -> Self {
        let mut r = rng::keyed(seed, &[purpose::INIT]);
        let w0 = glorot(d, h, &mut r);
        let w1 = glorot(h, c, &mut r);
        let embedding = LabelEmbedding::init(c, h, &mut r);
        Self {
            params: GcnParams { w0, w1 },
            embedding,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.params.w0.rows(),
            self.params.w0.cols(),
            self.params.w1.cols(),
        )
    }
}

/// The four components of the objective for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub l_ll: f64,
    pub l_nl: f64,
    pub l_sigmoid: f64,
    pub l_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub dw0: DenseMatrix,
    pub dw1: DenseMatrix,
    pub dz: DenseMatrix,
}

/// Negatives for one epoch; `None` where the matching loss weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochNegatives {
    pub node_label: Option<NegativeDraws>,
    pub label_label: Option<NegativeDraws>,
}

pub struct Evaluation {
    pub parts: LossParts,
    pub grads: ModelGrads,
    pub cache: ForwardCache,
}

/// Everything about the objective that stays fixed across epochs.
pub struct Objective<'g> {
    graph: &'g Graph,
    cfg: TrainConfig,
    a_hat: SparseMatrix,
    ax: DenseMatrix,
    pairs: PairSets,
    noise: Option<NoiseDistribution>,
}

impl<'g> Objective<'g> {
    pub fn new(graph: &'g Graph, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if !graph.train_mask().iter().any(|&t| t) {
            return Err(Error::NoTrainingNodes);
        }
        let a_hat = cfg.propagation.operator(graph);
        let ax = a_hat.spmm(graph.features())?;
        let pairs = PairSets::from_graph(graph);
        let noise = if cfg.uses_embedding() {
            Some(NoiseDistribution::from_graph(graph)?)
        } else {
            None
        };
        Ok(Self {
            graph,
            cfg: cfg.clone(),
            a_hat,
            ax,
            pairs,
            noise,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn propagation_operator(&self) -> &SparseMatrix {
        &self.a_hat
    }

    pub fn pairs(&self) -> &PairSets {
        &self.pairs
    }

    pub fn draw_negatives(&self, epoch: u64) -> Result<EpochNegatives> {
        let (k, seed) = (self.cfg.negatives, self.cfg.seed);
        let noise = self.noise.as_ref();
        let node_label = match noise {
            Some(d) if self.cfg.lambda2 != 0.0 => {
                Some(draw_node_label_negatives(&self.pairs, d, k, seed, epoch)?)
            }
            _ => None,
        };
        let label_label = match noise {
            Some(d) if self.cfg.lambda1 != 0.0 => {
                Some(draw_label_label_negatives(&self.pairs, d, k, seed, epoch)?)
            }
            _ => None,
        };
        Ok(EpochNegatives {
            node_label,
            label_label,
        })
    }

    pub fn forward(&self, model: &Model) -> Result<ForwardCache> {
        gcn_forward_with(self.graph, &self.a_hat, Some(&self.ax), &model.params)
    }

    /// Loss components and gradients of `L_sum` with respect to `W0`, `W1`, `Z`.
    pub fn evaluate(&self, model: &Model, negs: &EpochNegatives) -> Result<Evaluation> {
        let (parts, partial) = self.loss_and_partials(model, negs)?;
        let Partials {
            cache,
            d_logits,
            d_hidden,
            dz,
        } = partial;
        let grads = gcn_backward(&cache, &self.a_hat, &model.params, &d_logits, &d_hidden)?;
        Ok(Evaluation {
            parts,
            grads: ModelGrads {
                dw0: grads.dw0,
                dw1: grads.dw1,
                dz,
            },
            cache,
        })
    }

    /// Loss components only.
    pub fn loss(&self, model: &Model, negs: &EpochNegatives) -> Result<LossParts> {
        Ok(self.loss_and_partials(model, negs)?.0)
    }

    fn loss_and_partials(&self, model: &Model, negs: &EpochNegatives) -> Result<(LossParts, Partials)> {
        let g = self.graph;
        let (lambda1, lambda2) = (self.cfg.lambda1, self.cfg.lambda2);
        let cache = self.forward(model)?;
        let l_sigmoid = bce_loss(&cache.p, g.labels(), g.train_mask())?;
        let d_logits = bce_logit_grad(&cache.p, g.labels(), g.train_mask())?;

        let (n, h, c) = (g.n(), model.params.hidden_dim(), g.c());
        let mut d_hidden = DenseMatrix::zeros(n, h);
        let mut dz = DenseMatrix::zeros(c, h);

        let mut l_nl = 0.0;
        if let Some(draws) = &negs.node_label {
            let out = node_label_loss(&cache.h1, &model.embedding, &self.pairs, draws)?;
            l_nl = out.loss;
            d_hidden.add_scaled(lambda2, &out.d_h1)?;
            dz.add_scaled(lambda2, &out.d_z)?;
        }
        let mut l_ll = 0.0;
        if let Some(draws) = &negs.label_label {
            let out = label_label_loss(&model.embedding, &self.pairs, draws)?;
            l_ll = out.loss;
            dz.add_scaled(lambda1, &out.d_z)?;
        }

        let l_sum = lambda1 * l_ll + lambda2 * l_nl + l_sigmoid;
        Ok((
            LossParts {
                l_ll,
                l_nl,
                l_sigmoid,
                l_sum,
            },
            Partials {
                cache,
                d_logits,
                d_hidden,
                dz,
            },
        ))
    }
}

struct Partials {
    cache: ForwardCache,
    d_logits: DenseMatrix,
    d_hidden: DenseMatrix,
    dz: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub parts: LossParts,
    /// Mean pairwise cosine distance between rows of `H1`. Logged only.
    pub h1_cosine_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epochs: Vec<EpochRecord>,
    pub train: MetricReport,
    /// `None` when the graph has no test nodes.
    pub test: Option<MetricReport>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub report: LossReport,
}

/// Mean cosine distance over all ordered pairs of distinct rows. Zero rows
/// count as orthogonal to everything.
pub fn mean_pairwise_cosine_distance(h: &DenseMatrix) -> f64 {
    let n = h.rows();
    if n < 2 {
        return 0.0;
    }
    let mut sum = vec![0.0; h.cols()];
    let mut self_sim = 0.0;
    for i in 0..n {
        let row = h.row(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v / norm;
            }
            self_sim += 1.0;
        }
    }
    let total: f64 = sum.iter().map(|v| v * v).sum();
    let mean_sim = (total - self_sim) / (n * (n - 1)) as f64;
    1.0 - mean_sim
}

/// Runs the full training loop.
pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let objective = Objective::new(g, cfg)?;
    let mut model = Model::init(g.d(), cfg.hidden_dim, g.c(), cfg.seed);
    let mut state = AdamState::new(&[
        &model.params.w0,
        &model.params.w1,
        &model.embedding.z,
    ]);
    let adam = cfg.adam();
    let mut epochs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let negs = objective.draw_negatives(epoch as u64)?;
        let eval = objective.evaluate(&model, &negs)?;
        if !eval.parts.l_sum.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epochs.push(EpochRecord {
            epoch,
            parts: eval.parts,
            h1_cosine_distance: mean_pairwise_cosine_distance(&eval.cache.h1),
        });
        log::debug!(
            "epoch {epoch}: l_sum {:.6} (ll {:.6}, nl {:.6}, sigmoid {:.6})",
            eval.parts.l_sum,
            eval.parts.l_ll,
            eval.parts.l_nl,
            eval.parts.l_sigmoid
        );
        let ModelGrads { dw0, dw1, dz } = eval.grads;
        adam_step(
            &mut [
                &mut model.params.w0,
                &mut model.params.w1,
                &mut model.embedding.z,
            ],
            &[&dw0, &dw1, &dz],
            &mut state,
            &adam,
        )
        .map_err(|e| match e {
            Error::NonFinite(_) => Error::Diverged { epoch },
            other => other,
        })?;
    }

    let pred = predict_with(&objective, &model)?;
    let train = micro_f1(&pred, g.labels(), g.train_mask())?;
    let test = if g.test_mask().iter().any(|&t| t) {
        Some(micro_f1(&pred, g.labels(), g.test_mask())?)
    } else {
        None
    };
    Ok(TrainOutcome {
        model,
        report: LossReport {
            epochs,
            train,
            test,
        },
    })
}

/// 1 where the predicted probability is strictly above `threshold`.
pub fn threshold_probabilities(p: &DenseMatrix, threshold: f64) -> DenseMatrix {
    p.map(|v| if v > threshold { 1.0 } else { 0.0 })
}

fn predict_with(objective: &Objective<'_>, model: &Model) -> Result<DenseMatrix> {
    let cache = objective.forward(model)?;
    Ok(threshold_probabilities(&cache.p, objective.cfg.threshold))
}

/// Binary predictions for every node. The label embedding plays no part.
pub fn predict(
    model: &Model,
    g: &Graph,
    propagation: Propagation,
    threshold: f64,
) -> Result<DenseMatrix> {
    let a_hat = propagation.operator(g);
    let cache = gcn_forward_with(g, &a_hat, None, &model.params)?;
    Ok(threshold_probabilities(&cache.p, threshold))
}
