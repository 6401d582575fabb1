use rand::Rng;
use rand_distr::StandardNormal;

/// Diagonal Gaussian `N(mean, diag(exp(log_var)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Self {
        assert_eq!(mean.len(), log_var.len(), "noise mean and log-variance dimensions differ");
        NoiseSpec { mean, log_var }
    }

    /// Draws `eta = mean + exp(log_var / 2) * eps` with `eps ~ N(0, I)`.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let eps = standard_normal(self.mean.len(), rng);
        let mut out = vec![0.0; self.mean.len()];
        reparameterize(&self.mean, &self.log_var, &eps, &mut out);
        out
    }
}

pub fn standard_normal(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `out = mean + exp(log_var / 2) * eps`.
pub fn reparameterize(mean: &[f64], log_var: &[f64], eps: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = mean[i] + (0.5 * log_var[i]).exp() * eps[i];
    }
}

/// Backward pass of [`reparameterize`]: the mean receives `grad_eta`
/// unchanged, and this adds the log-variance part into `grad_log_var`.
pub fn reparameterize_backward(log_var: &[f64], eps: &[f64], grad_eta: &[f64], grad_log_var: &mut [f64]) {
    for i in 0..grad_eta.len() {
        grad_log_var[i] += grad_eta[i] * 0.5 * (0.5 * log_var[i]).exp() * eps[i];
    }
}
