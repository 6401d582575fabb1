//! Implicit Gaussian generator head shared by the model families: noise
//! `eta ~ N(mean, diag(exp(log_var)))` drawn by reparameterization and pushed
//! through a transform layer.

use rand::Rng;

use crate::sampling::{reparameterize, reparameterize_backward, standard_normal};
use crate::tensor::{Activation, Tensor, TransformCache, TransformGrad, TransformLayer};

/// Noise vector drawn for one generator item, kept so the loss can be
/// replayed deterministically.
pub type Eps = Vec<f64>;

pub fn draw_eps(dim: usize, rng: &mut impl Rng) -> Eps {
    standard_normal(dim, rng)
}

pub fn eta(mean: &[f64], log_var: &Tensor, eps: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mean.len()];
    reparameterize(mean, log_var.data(), eps, &mut out);
    out
}

/// Pushes `grad_eta` back through the reparameterization: adds into
/// `grad_log_var` and returns the gradient for the mean (equal to `grad_eta`).
pub fn eta_backward<'a>(log_var: &Tensor, eps: &[f64], grad_eta: &'a [f64], grad_log_var: &mut [f64]) -> &'a [f64] {
    reparameterize_backward(log_var.data(), eps, grad_eta, grad_log_var);
    grad_eta
}

/// Log-variance vector plus one transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitHead {
    pub log_var: Tensor,
    pub f: TransformLayer,
}

impl ImplicitHead {
    pub fn new(dim: usize, hidden: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        ImplicitHead {
            log_var: Tensor::zeros(1, dim),
            f: TransformLayer::new(dim, hidden, activation, rng),
        }
    }

    pub fn forward(&self, mean: &[f64], eps: &[f64]) -> (Vec<f64>, TransformCache) {
        self.f.forward(&eta(mean, &self.log_var, eps))
    }

    /// Returns the gradient for the noise mean.
    pub fn backward(
        &self,
        cache: &TransformCache,
        eps: &[f64],
        grad_fake: &[f64],
        grad_f: &mut TransformGrad,
        grad_log_var: &mut [f64],
    ) -> Vec<f64> {
        let g_eta = self.f.backward(cache, grad_fake, grad_f);
        eta_backward(&self.log_var, eps, &g_eta, grad_log_var).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::finite_diff_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_layer_with_no_variance_returns_bias() {
        let mut head = ImplicitHead {
            log_var: Tensor::from_vec(1, 3, vec![-800.0; 3]),
            f: TransformLayer::zeros(3, 3, Activation::Tanh),
        };
        head.f.b2.data_mut().copy_from_slice(&[0.5, -1.0, 2.0]);
        let (fake, _) = head.forward(&[1.0, 2.0, 3.0], &[0.3, -0.1, 2.0]);
        assert_eq!(fake, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn noise_mean_matches_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mean = [0.4, -1.2];
        let lv = Tensor::zeros(1, 2);
        let n = 10_000;
        let mut acc = [0.0; 2];
        for _ in 0..n {
            let e = eta(&mean, &lv, &draw_eps(2, &mut rng));
            acc[0] += e[0];
            acc[1] += e[1];
        }
        for k in 0..2 {
            assert!((acc[k] / n as f64 - mean[k]).abs() <= 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn mean_and_log_var_gradients_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut head = ImplicitHead::new(4, 4, Activation::Tanh, &mut rng);
        head.log_var.data_mut().copy_from_slice(&[0.1, -0.3, 0.2, 0.0]);
        let mean = vec![0.2, -0.1, 0.5, 0.3];
        let eps = draw_eps(4, &mut rng);
        let up = vec![1.0, -0.5, 0.25, 2.0];
        let (_, cache) = head.forward(&mean, &eps);
        let mut gf = TransformGrad::zeros(&head.f);
        let mut glv = vec![0.0; 4];
        let gm = head.backward(&cache, &eps, &up, &mut gf, &mut glv);
        let loss_mean = |m: &[f64]| crate::tensor::dot(&head.forward(m, &eps).0, &up);
        assert!(finite_diff_check(loss_mean, &mean, &gm, 1e-5, 0..4).max_rel_err < 1e-6);
        let lv0 = head.log_var.data().to_vec();
        let loss_lv = |lv: &[f64]| {
            let mut h = head.clone();
            h.log_var.data_mut().copy_from_slice(lv);
            crate::tensor::dot(&h.forward(&mean, &eps).0, &up)
        };
        assert!(finite_diff_check(loss_lv, &lv0, &glv, 1e-5, 0..4).max_rel_err < 1e-6);
    }
}
