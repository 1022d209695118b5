use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Negative-sampling distribution over label classes, proportional to the
/// training-set label counts raised to the 3/4 power.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

/// `x^{3/4}` as `sqrt(x) * sqrt(sqrt(x))`, exact for perfect fourth powers.
fn three_quarter_power(x: f64) -> f64 {
    let r = x.sqrt();
    r * r.sqrt()
}

impl NoiseDistribution {
    /// From raw per-class counts. Needs at least two classes with positive
    /// count, otherwise the resampling rule could loop forever.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::Sampler("label counts must be finite and >= 0".into()));
        }
        let positive = counts.iter().filter(|&&c| c > 0.0).count();
        if positive < 2 {
            return Err(Error::Sampler(format!(
                "need at least two label classes present in training data, found {positive}"
            )));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| three_quarter_power(c)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cumulative: Vec<f64> = probs
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        // Pin the top of the last positive class to exactly 1 so a uniform
        // draw in [0, 1) always lands on a class.
        let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap();
        for c in &mut cumulative[last_positive..] {
            *c = 1.0;
        }
        Ok(Self { probs, cumulative })
    }

    /// Label occurrence counts over the train-masked rows of `g`.
    pub fn from_graph(g: &Graph) -> Result<Self> {
        let mut counts = vec![0.0; g.c()];
        for i in g.train_nodes() {
            for (c, &y) in counts.iter_mut().zip(g.labels().row(i)) {
                *c += y;
            }
        }
        Self::from_counts(&counts)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// One inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.probs.len() - 1)
    }

    /// `k` independent draws, each redrawn until it differs from `forbidden`.
    pub fn sample_negatives<R: Rng + ?Sized>(
        &self,
        forbidden: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        let admissible = self
            .probs
            .iter()
            .enumerate()
            .any(|(i, &p)| i != forbidden && p > 0.0);
        if !admissible {
            return Err(Error::Sampler(format!(
                "no class other than {forbidden} has positive probability"
            )));
        }
        Ok((0..k)
            .map(|_| loop {
                let t = self.sample(rng);
                if t != forbidden {
                    break t;
                }
            })
            .collect())
    }
}

/// Free-function form of [`NoiseDistribution::sample_negatives`].
pub fn sample_negatives<R: Rng + ?Sized>(
    dist: &NoiseDistribution,
    forbidden: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    dist.sample_negatives(forbidden, k, rng)
}
