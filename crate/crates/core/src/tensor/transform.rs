use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation and the output.
    #[inline]
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Two-layer perceptron `out = act(z W1 + b1) W2 + b2` mapping `d -> h -> d`
/// (row-vector convention).
#[derive(Debug, Clone, PartialEq)]
pub struct TransformLayer {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct TransformCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
}

/// Dense gradient buffers shaped like a [`TransformLayer`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransformGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl TransformGrad {
    pub fn zeros(layer: &TransformLayer) -> Self {
        TransformGrad {
            w1: vec![0.0; layer.w1.len()],
            b1: vec![0.0; layer.b1.len()],
            w2: vec![0.0; layer.w2.len()],
            b2: vec![0.0; layer.b2.len()],
        }
    }
}

impl TransformLayer {
    /// Xavier-uniform weights, zero biases.
    pub fn new(dim: usize, hidden: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (dim + hidden) as f64).sqrt();
        TransformLayer {
            w1: Tensor::uniform(dim, hidden, bound, rng),
            b1: Tensor::zeros(1, hidden),
            w2: Tensor::uniform(hidden, dim, bound, rng),
            b2: Tensor::zeros(1, dim),
            activation,
        }
    }

    pub fn zeros(dim: usize, hidden: usize, activation: Activation) -> Self {
        TransformLayer {
            w1: Tensor::zeros(dim, hidden),
            b1: Tensor::zeros(1, hidden),
            w2: Tensor::zeros(hidden, dim),
            b2: Tensor::zeros(1, dim),
            activation,
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }

    pub fn tensors(&self) -> [&Tensor; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn forward(&self, z: &[f64]) -> (Vec<f64>, TransformCache) {
        let (d, h) = (self.dim(), self.hidden());
        assert_eq!(z.len(), d, "transform input dimension mismatch");
        let mut pre = self.b1.data().to_vec();
        let w1 = self.w1.data();
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0.0 {
                let row = &w1[i * h..(i + 1) * h];
                for (p, w) in pre.iter_mut().zip(row) {
                    *p += zi * w;
                }
            }
        }
        let hidden: Vec<f64> = pre.iter().map(|&x| self.activation.apply(x)).collect();
        let mut out = self.b2.data().to_vec();
        let w2 = self.w2.data();
        for (j, &hj) in hidden.iter().enumerate() {
            if hj != 0.0 {
                let row = &w2[j * d..(j + 1) * d];
                for (o, w) in out.iter_mut().zip(row) {
                    *o += hj * w;
                }
            }
        }
        let cache = TransformCache {
            input: z.to_vec(),
            pre,
            hidden,
        };
        (out, cache)
    }

    /// Accumulates the parameter gradient of `out · upstream` into `grad`
    /// and returns the gradient with respect to the input.
    pub fn backward(&self, cache: &TransformCache, upstream: &[f64], grad: &mut TransformGrad) -> Vec<f64> {
        let (d, h) = (self.dim(), self.hidden());
        for (g, u) in grad.b2.iter_mut().zip(upstream) {
            *g += u;
        }
        let w2 = self.w2.data();
        let mut grad_pre = vec![0.0; h];
        for j in 0..h {
            let hj = cache.hidden[j];
            let w_row = &w2[j * d..(j + 1) * d];
            let g_row = &mut grad.w2[j * d..(j + 1) * d];
            let mut acc = 0.0;
            for k in 0..d {
                g_row[k] += hj * upstream[k];
                acc += w_row[k] * upstream[k];
            }
            grad_pre[j] = acc * self.activation.derivative(cache.pre[j], hj);
        }
        for (g, gp) in grad.b1.iter_mut().zip(&grad_pre) {
            *g += gp;
        }
        let w1 = self.w1.data();
        let mut grad_in = vec![0.0; d];
        for i in 0..d {
            let zi = cache.input[i];
            let w_row = &w1[i * h..(i + 1) * h];
            let g_row = &mut grad.w1[i * h..(i + 1) * h];
            let mut acc = 0.0;
            for j in 0..h {
                g_row[j] += zi * grad_pre[j];
                acc += w_row[j] * grad_pre[j];
            }
            grad_in[i] = acc;
        }
        grad_in
    }
}
