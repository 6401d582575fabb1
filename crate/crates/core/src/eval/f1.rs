use crate::error::{AgeError, Result};

/// `(micro_f1, macro_f1)` for single-label predictions over `num_classes`.
/// Classes with neither support nor predictions score 0 in the macro mean.
pub fn f1_scores(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return Err(AgeError::invalid("prediction and truth lengths differ"));
    }
    if pred.is_empty() {
        return Err(AgeError::invalid("F1 of an empty prediction set"));
    }
    if num_classes == 0 || pred.iter().chain(truth).any(|&c| c >= num_classes) {
        return Err(AgeError::invalid("class index out of range"));
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_ = (0..num_classes).map(|c| f1(tp[c], fp[c], fn_[c])).sum::<f64>() / num_classes as f64;
    Ok((micro, macro_))
}
