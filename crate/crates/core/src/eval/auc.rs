use crate::error::{AgeError, Result};

/// ROC-AUC as the Mann-Whitney statistic, ties counted one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(AgeError::invalid("AUC needs at least one positive and one negative score"));
    }
    if pos.iter().chain(neg).any(|x| x.is_nan()) {
        return Err(AgeError::NonFinite {
            context: "link-prediction scores".into(),
        });
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Ranks are 1-based; a run of ties shares the mean of its ranks.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let n_pos = all[i..=j].iter().filter(|x| x.1).count();
        rank_sum += avg * n_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}
