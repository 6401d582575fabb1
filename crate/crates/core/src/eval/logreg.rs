//! One-vs-rest L2-regularized logistic regression, trained by deterministic
//! full-batch accelerated gradient descent.
//!
//! Per class the objective is `(1/n) Σ log(1 + exp(-y (w·x + b))) +
//! (l2 / 2n) ‖w‖²` with an unregularized bias.

use crate::error::{AgeError, Result};
use crate::tensor::dot;
use crate::tensor::math::{sigmoid, softplus};

pub const MAX_ITERS: usize = 5000;
pub const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    /// One weight vector per class.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub l2: f64,
    /// Iterations used per class.
    pub iterations: Vec<usize>,
}

impl LogRegModel {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(&self.biases).map(|(w, b)| dot(w, x) + b).collect()
    }

    /// Highest-scoring class; ties go to the lower class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for c in 1..s.len() {
            if s[c] > s[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Vec<usize> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Trains one binary classifier per class. `class_names` is used for
/// errors only.
pub fn train_logreg_ovr(
    features: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    l2: f64,
    class_names: &dyn Fn(usize) -> String,
) -> Result<LogRegModel> {
    if features.len() != labels.len() {
        return Err(AgeError::invalid("feature and label counts differ"));
    }
    if features.is_empty() {
        return Err(AgeError::invalid("no training examples"));
    }
    if num_classes < 2 {
        return Err(AgeError::invalid("classification needs at least two classes"));
    }
    if l2.is_nan() || l2 < 0.0 {
        return Err(AgeError::invalid("l2 strength must be >= 0"));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(AgeError::invalid("ragged feature matrix"));
    }
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(AgeError::invalid(format!("label {l} out of range")));
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(AgeError::MissingClass(class_names(c)));
    }
    let lipschitz = lipschitz_bound(features, l2);
    let mut model = LogRegModel {
        weights: Vec::with_capacity(num_classes),
        biases: Vec::with_capacity(num_classes),
        l2,
        iterations: Vec::with_capacity(num_classes),
    };
    for c in 0..num_classes {
        let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        let (w, b, it) = fit_binary(features, &y, l2, lipschitz);
        model.weights.push(w);
        model.biases.push(b);
        model.iterations.push(it);
    }
    Ok(model)
}

/// Objective and gradient of the binary problem; `theta` holds the
/// weights followed by the bias.
fn objective(x: &[Vec<f64>], y: &[f64], l2: f64, theta: &[f64], grad: &mut [f64]) -> f64 {
    let n = x.len() as f64;
    let p = theta.len() - 1;
    let (w, b) = (&theta[..p], theta[p]);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let m = yi * (dot(w, xi) + b);
        loss += softplus(-m);
        let coef = -yi * sigmoid(-m) / n;
        for (g, v) in grad[..p].iter_mut().zip(xi) {
            *g += coef * v;
        }
        grad[p] += coef;
    }
    for k in 0..p {
        grad[k] += l2 / n * w[k];
    }
    loss / n + 0.5 * l2 / n * dot(w, w)
}

fn fit_binary(x: &[Vec<f64>], y: &[f64], l2: f64, lipschitz: f64) -> (Vec<f64>, f64, usize) {
    let p = x[0].len();
    let step = 1.0 / lipschitz;
    let mut theta = vec![0.0; p + 1];
    let mut look = theta.clone();
    let mut grad = vec![0.0; p + 1];
    let mut t = 1.0f64;
    let mut prev_obj = f64::INFINITY;
    for it in 0..MAX_ITERS {
        let g_norm = {
            objective(x, y, l2, &theta, &mut grad);
            dot(&grad, &grad).sqrt()
        };
        if g_norm < GRAD_TOL {
            return (theta[..p].to_vec(), theta[p], it);
        }
        let _ = objective(x, y, l2, &look, &mut grad);
        let next: Vec<f64> = look.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let obj = objective(x, y, l2, &next, &mut grad);
        // Restart momentum whenever the objective goes up.
        let t_next = if obj > prev_obj {
            1.0
        } else {
            (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
        };
        let beta = if obj > prev_obj { 0.0 } else { (t - 1.0) / t_next };
        look = next.iter().zip(&theta).map(|(a, b)| a + beta * (a - b)).collect();
        theta = next;
        t = t_next;
        prev_obj = obj;
    }
    (theta[..p].to_vec(), theta[p], MAX_ITERS)
}

/// Upper bound on the gradient's Lipschitz constant:
/// `λ_max([X 1]ᵀ[X 1]) / (4n) + l2 / n`, with `λ_max` from power iteration
/// padded by 5%.
fn lipschitz_bound(x: &[Vec<f64>], l2: f64) -> f64 {
    let n = x.len() as f64;
    let p = x[0].len() + 1;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut out = vec![0.0; p];
        for xi in x {
            let s = dot(&v[..p - 1], xi) + v[p - 1];
            for (o, a) in out[..p - 1].iter_mut().zip(xi) {
                *o += s * a;
            }
            out[p - 1] += s;
        }
        let norm = dot(&out, &out).sqrt();
        if norm == 0.0 {
            break;
        }
        let converged = (norm - lambda).abs() <= 1e-9 * norm;
        lambda = norm;
        v = out.into_iter().map(|o| o / norm).collect();
        if converged {
            break;
        }
    }
    (1.05 * lambda / (4.0 * n) + l2 / n).max(1e-12)
}
