//! Adam with bias correction over a fixed list of parameter tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per tensor, plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
    t: u64,
}

impl AdamState {
    /// Zero moments shaped like `params`.
    pub fn new(params: &[&DenseMatrix]) -> Self {
        let zeros = |p: &&DenseMatrix| DenseMatrix::zeros(p.rows(), p.cols());
        Self {
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[DenseMatrix] {
        &self.m
    }

    pub fn second_moments(&self) -> &[DenseMatrix] {
        &self.v
    }
}

/// One Adam update of every tensor in `params` with the matching entry of
/// `grads`.
///
/// Fails without touching anything if a gradient has a non-finite entry or
/// shapes disagree.
pub fn adam_step(
    params: &mut [&mut DenseMatrix],
    grads: &[&DenseMatrix],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if !(cfg.lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be > 0, got {}", cfg.lr)));
    }
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} tensors", state.m.len()),
            format!("{} params, {} grads", params.len(), grads.len()),
        ));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.m[k].shape() {
            return Err(Error::shape(
                "adam_step",
                format!("{:?}", state.m[k].shape()),
                format!("param {:?}, grad {:?}", p.shape(), g.shape()),
            ));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient of parameter tensor {k}")));
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = state.m[k].values_mut();
        let v = state.v[k].values_mut();
        for (((theta, &gi), mi), vi) in p.values_mut().iter_mut().zip(g.values()).zip(m).zip(v) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = *mi / bias1;
            let v_hat = *vi / bias2;
            *theta -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(x: f64) -> DenseMatrix {
        DenseMatrix::from_rows(&[&[x]])
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = DenseMatrix::from_rows(&[&[1.0, -2.0]]);
        let before = p.clone();
        let g = DenseMatrix::zeros(1, 2);
        let mut s = AdamState::new(&[&p]);
        adam_step(&mut [&mut p], &[&g], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_has_magnitude_lr() {
        let cfg = AdamConfig::default();
        for &g in &[3.0, -0.2, 1e-3] {
            let mut p = scalar(0.0);
            let mut s = AdamState::new(&[&p]);
            adam_step(&mut [&mut p], &[&scalar(g)], &mut s, &cfg).unwrap();
            // m̂ = g, v̂ = g² after correction
            let expected = -cfg.lr * g / (g.abs() + cfg.eps);
            assert!((p[(0, 0)] - expected).abs() < 1e-15, "g = {g}");
        }
    }

    #[test]
    fn repeated_gradient_moves_monotonically() {
        let cfg = AdamConfig::default();
        let mut p = scalar(0.5);
        let mut s = AdamState::new(&[&p]);
        adam_step(&mut [&mut p], &[&scalar(2.0)], &mut s, &cfg).unwrap();
        let after1 = p[(0, 0)];
        adam_step(&mut [&mut p], &[&scalar(2.0)], &mut s, &cfg).unwrap();
        let after2 = p[(0, 0)];
        assert!(after1 < 0.5 && after2 < after1);
        // Constant g: m̂ = g and v̂ = g² at every step, so each step is lr·g/(|g|+ε).
        let step = cfg.lr * 2.0 / (2.0 + cfg.eps);
        assert!((after2 - (0.5 - 2.0 * step)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&[&p]);
        let mut g = scalar(0.0);
        g.values_mut()[0] = f64::NAN;
        let r = adam_step(&mut [&mut p], &[&g], &mut s, &AdamConfig::default());
        assert!(matches!(r, Err(Error::NonFinite(_))));
        assert_eq!(p, scalar(1.0));
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn rejects_bad_lr_and_shapes() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&[&p]);
        let cfg = AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        };
        assert!(adam_step(&mut [&mut p], &[&scalar(1.0)], &mut s, &cfg).is_err());
        let g = DenseMatrix::zeros(2, 1);
        assert!(adam_step(&mut [&mut p], &[&g], &mut s, &AdamConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn steps_never_exceed_the_adam_bound(grads in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            // For any gradient sequence |m_hat|/sqrt(v_hat) <= (1-b1)/sqrt(1-b2)
            // when 1-b1 > sqrt(1-b2), which holds for the defaults.
            let cfg = AdamConfig::default();
            let bound = cfg.lr * (1.0 - cfg.beta1) / (1.0 - cfg.beta2).sqrt();
            let mut p = scalar(0.0);
            let mut s = AdamState::new(&[&p]);
            for g in grads {
                let before = p[(0, 0)];
                adam_step(&mut [&mut p], &[&scalar(g)], &mut s, &cfg).unwrap();
                prop_assert!((p[(0, 0)] - before).abs() <= bound * (1.0 + 1e-9));
            }
        }

        #[test]
        fn constant_magnitude_steps_are_bounded_by_lr(
            mag in 1e-3f64..1e3,
            signs in prop::collection::vec(any::<bool>(), 1..60),
        ) {
            // With |g| fixed, v_hat = g^2 exactly and |m_hat| <= |g|.
            let cfg = AdamConfig::default();
            let mut p = scalar(0.0);
            let mut s = AdamState::new(&[&p]);
            for pos in signs {
                let g = if pos { mag } else { -mag };
                let before = p[(0, 0)];
                adam_step(&mut [&mut p], &[&scalar(g)], &mut s, &cfg).unwrap();
                prop_assert!((p[(0, 0)] - before).abs() <= cfg.lr * (1.0 + 1e-9));
            }
        }

        #[test]
        fn deterministic(g in -10f64..10.0, x in -10f64..10.0) {
            let run = || {
                let mut p = scalar(x);
                let mut s = AdamState::new(&[&p]);
                adam_step(&mut [&mut p], &[&scalar(g)], &mut s, &AdamConfig::default()).unwrap();
                adam_step(&mut [&mut p], &[&scalar(-g / 2.0)], &mut s, &AdamConfig::default()).unwrap();
                (p, s)
            };
            let (a, sa) = run();
            let (b, sb) = run();
            prop_assert_eq!(a.values()[0].to_bits(), b.values()[0].to_bits());
            prop_assert_eq!(sa, sb);
        }
    }
}
