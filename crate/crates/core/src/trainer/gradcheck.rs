//! Central finite-difference check of the full objective gradient.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{generate_synthetic, CorrPair, Graph, SyntheticSpec};
use crate::tensor::DenseMatrix;
use crate::trainer::{Model, Objective, TrainConfig};

/// Maximum relative error per parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub w0: f64,
    pub w1: f64,
    pub z: f64,
}

impl GradcheckReport {
    pub fn max(&self) -> f64 {
        self.w0.max(self.w1).max(self.z)
    }
}

/// `|a - b| / (|a| + |b| + 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-8)
}

/// Small graph and config used by the default gradient check: 30 nodes,
/// 8 features, 4 classes, hidden width 6, two negatives, seed 7.
pub fn gradcheck_fixture() -> (Graph, TrainConfig) {
    let spec = SyntheticSpec {
        n: 30,
        c: 4,
        corr_pairs: vec![
            CorrPair { a: 0, b: 1, rho: 0.8 },
            CorrPair { a: 2, b: 3, rho: 0.8 },
        ],
        p_in: 0.3,
        p_out: 0.05,
        noise_dims: 4,
        train_fraction: 0.5,
        seed: 7,
    };
    let g = generate_synthetic(&spec).expect("fixture spec is valid");
    let cfg = TrainConfig {
        hidden_dim: 6,
        negatives: 2,
        seed: 7,
        lambda1: 0.25,
        lambda2: 0.25,
        ..TrainConfig::default()
    };
    (g, cfg)
}

/// Compares the analytic gradient of `L_sum` at the seeded initial model
/// against central differences with step `step`. Negatives are drawn once
/// and held fixed so the differentiated function is deterministic.
pub fn gradcheck(g: &Graph, cfg: &TrainConfig, step: f64) -> Result<GradcheckReport> {
    let objective = Objective::new(g, cfg)?;
    let model = Model::init(g.d(), cfg.hidden_dim, g.c(), cfg.seed);
    let negs = objective.draw_negatives(1)?;
    let analytic = objective.evaluate(&model, &negs)?.grads;

    let check = |select: &dyn Fn(&mut Model) -> &mut DenseMatrix,
                 grad: &DenseMatrix|
     -> Result<f64> {
        let mut probe = model.clone();
        let mut worst: f64 = 0.0;
        for idx in 0..grad.values().len() {
            let orig = select(&mut probe).values()[idx];
            select(&mut probe).values_mut()[idx] = orig + step;
            let plus = objective.loss(&probe, &negs)?.l_sum;
            select(&mut probe).values_mut()[idx] = orig - step;
            let minus = objective.loss(&probe, &negs)?.l_sum;
            select(&mut probe).values_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(grad.values()[idx], numeric));
        }
        Ok(worst)
    };

    Ok(GradcheckReport {
        w0: check(&|m| &mut m.params.w0, &analytic.dw0)?,
        w1: check(&|m| &mut m.params.w1, &analytic.dw1)?,
        z: check(&|m| &mut m.embedding.z, &analytic.dz)?,
    })
}
