use rand::seq::index::sample;
use rand::Rng;

use super::{Grads, Tensor};

/// Denominator floor for relative errors, so coordinates whose true
/// gradient is zero are judged on absolute error.
pub const REL_ERR_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Coordinate with the largest error, as (tensor slot, flat index).
    pub worst: (usize, usize),
    pub checked: usize,
}

impl GradCheckReport {
    fn empty() -> Self {
        GradCheckReport {
            max_rel_err: 0.0,
            worst: (0, 0),
            checked: 0,
        }
    }

    fn absorb(&mut self, other: GradCheckReport, slot: usize) {
        if other.max_rel_err > self.max_rel_err {
            self.max_rel_err = other.max_rel_err;
            self.worst = (slot, other.worst.1);
        }
        self.checked += other.checked;
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Compares `analytic` against central differences of `loss` at `params`
/// for the listed coordinates.
pub fn finite_diff_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    eps: f64,
    coords: impl IntoIterator<Item = usize>,
) -> GradCheckReport {
    let mut x = params.to_vec();
    let mut report = GradCheckReport::empty();
    for i in coords {
        let orig = x[i];
        x[i] = orig + eps;
        let up = loss(&x);
        x[i] = orig - eps;
        let down = loss(&x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let err = rel_err(analytic[i], numeric);
        if err > report.max_rel_err || report.checked == 0 {
            report.max_rel_err = err.max(report.max_rel_err);
            report.worst = (0, i);
        }
        report.checked += 1;
    }
    report
}

/// Gradient check over a whole parameter group.
///
/// `tensors` hands out the group's tensors in slot order, `loss` evaluates
/// the (deterministic) loss of the current state. Up to `per_tensor`
/// random coordinates are probed in every tensor, always including every
/// coordinate the analytic gradient marks as nonzero when it fits.
pub fn check_tensors<M>(
    model: &mut M,
    tensors: impl Fn(&mut M) -> Vec<&mut Tensor>,
    loss: impl Fn(&M) -> f64,
    grads: &Grads,
    eps: f64,
    per_tensor: usize,
    rng: &mut impl Rng,
) -> GradCheckReport {
    let mut report = GradCheckReport::empty();
    let n_slots = tensors(model).len();
    assert_eq!(n_slots, grads.len(), "gradient slots do not match tensors");
    for slot in 0..n_slots {
        let len = tensors(model)[slot].len();
        if len == 0 {
            continue;
        }
        let analytic = grads.to_dense(slot);
        let mut coords: Vec<usize> = analytic
            .iter()
            .enumerate()
            .filter(|(_, g)| **g != 0.0)
            .map(|(i, _)| i)
            .collect();
        if coords.len() > per_tensor {
            coords = sample(rng, coords.len(), per_tensor).into_iter().map(|k| coords[k]).collect();
        }
        let extra = per_tensor.saturating_sub(coords.len()).min(len);
        coords.extend(sample(rng, len, extra));
        coords.sort_unstable();
        coords.dedup();

        let mut sub = GradCheckReport::empty();
        for i in coords {
            let orig = tensors(model)[slot].data()[i];
            tensors(model)[slot].data_mut()[i] = orig + eps;
            let up = loss(model);
            tensors(model)[slot].data_mut()[i] = orig - eps;
            let down = loss(model);
            tensors(model)[slot].data_mut()[i] = orig;
            let err = rel_err(analytic[i], (up - down) / (2.0 * eps));
            if err > sub.max_rel_err {
                sub.max_rel_err = err;
                sub.worst = (slot, i);
            }
            sub.checked += 1;
        }
        report.absorb(sub, slot);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_loss_matches_exactly() {
        let w = [0.5, -2.0, 3.0];
        let loss = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let r = finite_diff_check(loss, &[1.0, 2.0, 3.0], &w, 1e-5, 0..3);
        assert!(r.max_rel_err < 1e-10, "{r:?}");
        assert_eq!(r.checked, 3);
    }

    #[test]
    fn corrupted_gradient_is_reported() {
        let loss = |x: &[f64]| x[0] * x[0] + x[1].sin();
        let p = [0.7, 0.3];
        let good = [1.4, 0.3f64.cos()];
        assert!(finite_diff_check(loss, &p, &good, 1e-5, 0..2).max_rel_err < 1e-8);
        let bad = [-1.4, 0.3f64.cos()];
        let r = finite_diff_check(loss, &p, &bad, 1e-5, 0..2);
        assert!(r.max_rel_err > 1e-4);
        assert_eq!(r.worst, (0, 0));
    }
}
