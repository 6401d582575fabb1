use serde::{Deserialize, Serialize};

use super::{Grads, Tensor, TensorGrad};
use crate::error::{AgeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            lr,
            ..Self::default()
        }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerConfig {
            lr,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

/// Optimizer state for one parameter group. Row gradients update only the
/// touched rows (lazy Adam: moments of untouched rows are left as they are).
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    moments: Vec<Moments>,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, shapes: &[(usize, usize)]) -> Self {
        let moments = shapes
            .iter()
            .map(|&(r, c)| {
                let n = if cfg.kind == OptimizerKind::Adam { r * c } else { 0 };
                Moments {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                    step: 0,
                }
            })
            .collect();
        Optimizer { cfg, moments }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    /// Applies one update. Gradients are validated before anything is
    /// written and every written value is checked afterwards.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &Grads) -> Result<()> {
        assert_eq!(params.len(), grads.len(), "parameter/gradient slot count mismatch");
        if !grads.is_finite() {
            return Err(AgeError::NonFinite {
                context: "gradient".into(),
            });
        }
        let cfg = self.cfg;
        for (i, param) in params.iter_mut().enumerate() {
            let state = &mut self.moments[i];
            let cols = param.cols();
            match grads.slot(i) {
                TensorGrad::None => {}
                TensorGrad::Dense(g) => {
                    state.step += 1;
                    let data = param.data_mut();
                    update(&cfg, state, 0, data, g)?;
                }
                TensorGrad::Rows(rows) => {
                    state.step += 1;
                    for (id, g) in rows.iter() {
                        let data = param.row_mut(id);
                        update(&cfg, state, id * cols, data, g)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn update(cfg: &OptimizerConfig, state: &mut Moments, offset: usize, data: &mut [f64], g: &[f64]) -> Result<()> {
    match cfg.kind {
        OptimizerKind::Sgd => {
            for (p, gi) in data.iter_mut().zip(g) {
                *p -= cfg.lr * gi;
            }
        }
        OptimizerKind::Adam => {
            let t = state.step as i32;
            let bc1 = 1.0 - cfg.beta1.powi(t);
            let bc2 = 1.0 - cfg.beta2.powi(t);
            let m = &mut state.m[offset..offset + data.len()];
            let v = &mut state.v[offset..offset + data.len()];
            for k in 0..data.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                data[k] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        }
    }
    if data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AgeError::NonFinite {
            context: "parameter update".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_grads(x: f64) -> Grads {
        let mut g = Grads::new(vec![(1, 1)]);
        g.dense(0)[0] = 2.0 * x;
        g
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for cfg in [OptimizerConfig::sgd(0.1), OptimizerConfig::adam(0.1)] {
            let mut p = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
            let mut opt = Optimizer::new(cfg, &[(2, 2)]);
            let mut g = Grads::new(vec![(2, 2)]);
            g.dense(0);
            opt.step(&mut [&mut p], &g).unwrap();
            assert_eq!(p.data(), &[1.0, 2.0, 3.0, 4.0]);
        }
    }

    #[test]
    fn sgd_descends_quadratic_monotonically() {
        let mut p = Tensor::from_vec(1, 1, vec![1.0]);
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.1), &[(1, 1)]);
        let mut prev = 1.0;
        for _ in 0..100 {
            let g = quad_grads(p.data()[0]);
            opt.step(&mut [&mut p], &g).unwrap();
            let x = p.data()[0];
            assert!(x.abs() < prev);
            prev = x.abs();
        }
        assert!(prev < 1e-8);
    }

    /// Scalar Adam recurrence on f(x) = x^2 written out independently.
    fn reference_adam(steps: usize, lr: f64) -> f64 {
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=steps {
            let g = 2.0 * x;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            x -= lr * (m / (1.0 - b1.powi(t as i32))) / ((v / (1.0 - b2.powi(t as i32))).sqrt() + eps);
        }
        x
    }

    #[test]
    fn adam_quadratic_matches_scalar_recurrence() {
        let mut p = Tensor::from_vec(1, 1, vec![1.0]);
        let mut opt = Optimizer::new(OptimizerConfig::adam(0.01), &[(1, 1)]);
        let mut reached = None;
        for step in 1..=500 {
            let g = quad_grads(p.data()[0]);
            opt.step(&mut [&mut p], &g).unwrap();
            if reached.is_none() && p.data()[0].abs() < 1e-3 {
                reached = Some(step);
            }
        }
        assert_eq!(p.data()[0], reference_adam(500, 0.01));
        assert!(reached.is_some(), "adam did not reach |x| < 1e-3 in 500 steps");
    }

    #[test]
    fn sparse_rows_only_touch_given_rows() {
        let mut p = Tensor::from_vec(3, 2, vec![1.0; 6]);
        let mut opt = Optimizer::new(OptimizerConfig::adam(0.1), &[(3, 2)]);
        let mut g = Grads::new(vec![(3, 2)]);
        g.rows(0).add_row(1, 1.0, &[1.0, -1.0]);
        opt.step(&mut [&mut p], &g).unwrap();
        assert_eq!(p.row(0), &[1.0, 1.0]);
        assert_eq!(p.row(2), &[1.0, 1.0]);
        assert!((p.row(1)[0] - 0.9).abs() < 1e-6);
        assert!((p.row(1)[1] - 1.1).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_rejected_without_writing() {
        let mut p = Tensor::from_vec(1, 2, vec![1.0, 1.0]);
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.1), &[(1, 2)]);
        let mut g = Grads::new(vec![(1, 2)]);
        g.dense(0).copy_from_slice(&[1.0, f64::NAN]);
        assert!(opt.step(&mut [&mut p], &g).is_err());
        assert_eq!(p.data(), &[1.0, 1.0]);
    }
}
