//! Dense f64 storage, the fixed compute kernels the models need, and their
//! optimizers. There is no autodiff: every loss computes its own gradients
//! and the gradient checker verifies them against central differences.

mod gradcheck;
pub mod math;
mod optim;
mod transform;

use std::collections::HashMap;

use rand::Rng;

pub use gradcheck::{check_tensors, finite_diff_check, GradCheckReport, REL_ERR_FLOOR};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use transform::{Activation, TransformCache, TransformGrad, TransformLayer};

/// Row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// One row per entity (node or relation).
pub type EmbeddingTable = Tensor;

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data length does not match shape");
        Tensor { rows, cols, data }
    }

    /// Entries uniform in `[-bound, bound]`.
    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
        Tensor { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Order-sensitive hash of the raw bits, for change detection.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.data {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^ (self.rows as u64).rotate_left(32) ^ self.cols as u64
    }

    /// Rescales each row to unit L2 norm; zero rows are left alone.
    pub fn normalize_rows(&mut self) {
        for i in 0..self.rows {
            let row = self.row_mut(i);
            let n = norm(row);
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Gradient rows keyed by row id, in first-touch order.
#[derive(Debug, Clone)]
pub struct RowGrad {
    cols: usize,
    index: HashMap<usize, usize>,
    ids: Vec<usize>,
    data: Vec<f64>,
}

impl RowGrad {
    pub fn new(cols: usize) -> Self {
        RowGrad {
            cols,
            index: HashMap::new(),
            ids: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn row_mut(&mut self, id: usize) -> &mut [f64] {
        let slot = match self.index.get(&id) {
            Some(&s) => s,
            None => {
                let s = self.ids.len();
                self.index.insert(id, s);
                self.ids.push(id);
                self.data.resize(self.data.len() + self.cols, 0.0);
                s
            }
        };
        &mut self.data[slot * self.cols..(slot + 1) * self.cols]
    }

    pub fn add_row(&mut self, id: usize, alpha: f64, x: &[f64]) {
        axpy(alpha, x, self.row_mut(id));
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.ids
            .iter()
            .enumerate()
            .map(move |(s, &id)| (id, &self.data[s * self.cols..(s + 1) * self.cols]))
    }

    pub fn num_rows(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug, Clone)]
pub enum TensorGrad {
    None,
    Dense(Vec<f64>),
    Rows(RowGrad),
}

/// Gradients for an ordered list of tensors. Slot `i` pairs with the `i`-th
/// tensor of the parameter group that produced it.
#[derive(Debug, Clone)]
pub struct Grads {
    shapes: Vec<(usize, usize)>,
    slots: Vec<TensorGrad>,
}

impl Grads {
    pub fn new(shapes: Vec<(usize, usize)>) -> Self {
        let slots = vec![TensorGrad::None; shapes.len()];
        Grads { shapes, slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, i: usize) -> &TensorGrad {
        &self.slots[i]
    }

    /// Sparse row accumulator for slot `i`.
    pub fn rows(&mut self, i: usize) -> &mut RowGrad {
        if let TensorGrad::None = self.slots[i] {
            self.slots[i] = TensorGrad::Rows(RowGrad::new(self.shapes[i].1));
        }
        match &mut self.slots[i] {
            TensorGrad::Rows(r) => r,
            TensorGrad::Dense(_) => panic!("slot {i} already holds a dense gradient"),
            TensorGrad::None => unreachable!(),
        }
    }

    /// Dense accumulator for slot `i`.
    pub fn dense(&mut self, i: usize) -> &mut [f64] {
        if let TensorGrad::None = self.slots[i] {
            let (r, c) = self.shapes[i];
            self.slots[i] = TensorGrad::Dense(vec![0.0; r * c]);
        }
        match &mut self.slots[i] {
            TensorGrad::Dense(d) => d,
            TensorGrad::Rows(_) => panic!("slot {i} already holds a row gradient"),
            TensorGrad::None => unreachable!(),
        }
    }

    /// Adds a whole transform-layer gradient into four consecutive dense slots.
    pub fn add_transform(&mut self, first_slot: usize, g: &TransformGrad) {
        axpy(1.0, &g.w1, self.dense(first_slot));
        axpy(1.0, &g.b1, self.dense(first_slot + 1));
        axpy(1.0, &g.w2, self.dense(first_slot + 2));
        axpy(1.0, &g.b2, self.dense(first_slot + 3));
    }

    /// Full dense view of slot `i` (zeros where untouched).
    pub fn to_dense(&self, i: usize) -> Vec<f64> {
        let (r, c) = self.shapes[i];
        match &self.slots[i] {
            TensorGrad::None => vec![0.0; r * c],
            TensorGrad::Dense(d) => d.clone(),
            TensorGrad::Rows(rows) => {
                let mut out = vec![0.0; r * c];
                for (id, g) in rows.iter() {
                    axpy(1.0, g, &mut out[id * c..(id + 1) * c]);
                }
                out
            }
        }
    }

    /// Adds `other` into `self` slot by slot.
    pub fn merge(&mut self, other: &Grads) {
        assert_eq!(self.shapes, other.shapes);
        for i in 0..self.slots.len() {
            match &other.slots[i] {
                TensorGrad::None => {}
                TensorGrad::Dense(d) => axpy(1.0, d, self.dense(i)),
                TensorGrad::Rows(rows) => {
                    for (id, g) in rows.iter() {
                        self.rows(i).add_row(id, 1.0, g);
                    }
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slots.iter().all(|s| match s {
            TensorGrad::None => true,
            TensorGrad::Dense(d) => d.iter().all(|x| x.is_finite()),
            TensorGrad::Rows(r) => r.data.iter().all(|x| x.is_finite()),
        })
    }

    pub fn touches(&self, i: usize) -> bool {
        !matches!(self.slots[i], TensorGrad::None)
    }
}

pub fn shapes_of(tensors: &[&Tensor]) -> Vec<(usize, usize)> {
    tensors.iter().map(|t| t.shape()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_grad_accumulates_by_id() {
        let mut g = Grads::new(vec![(4, 2)]);
        g.rows(0).add_row(3, 1.0, &[1.0, 2.0]);
        g.rows(0).add_row(1, 2.0, &[1.0, 0.0]);
        g.rows(0).add_row(3, 1.0, &[1.0, 1.0]);
        assert_eq!(g.to_dense(0), vec![0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0, 3.0]);
    }

    #[test]
    fn merge_adds_dense_and_rows() {
        let mut a = Grads::new(vec![(2, 2), (1, 3)]);
        a.rows(0).add_row(0, 1.0, &[1.0, 1.0]);
        let mut b = Grads::new(vec![(2, 2), (1, 3)]);
        b.rows(0).add_row(1, 1.0, &[2.0, 2.0]);
        b.dense(1)[2] = 5.0;
        a.merge(&b);
        assert_eq!(a.to_dense(0), vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(a.to_dense(1), vec![0.0, 0.0, 5.0]);
    }

    #[test]
    fn normalize_rows_unit_norm() {
        let mut t = Tensor::from_vec(2, 2, vec![3.0, 4.0, 0.0, 0.0]);
        t.normalize_rows();
        assert_eq!(t.row(0), &[0.6, 0.8]);
        assert_eq!(t.row(1), &[0.0, 0.0]);
    }
}
