use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{AgeError, Result};
use crate::graph::{Graph, NodeId};

/// Candidate ordered so that the heap top is the weakest kept entry:
/// lower score first, then higher id.
#[derive(Debug, Clone, Copy)]
struct Weakest(f64, usize);

impl PartialEq for Weakest {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Weakest {}

impl PartialOrd for Weakest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weakest {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

/// Indices of the `k` highest scores, best first, ties broken by ascending
/// index. `skip` is never selected.
pub fn top_k(scores: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut heap: BinaryHeap<Weakest> = BinaryHeap::with_capacity(k + 1);
    for (i, &s) in scores.iter().enumerate() {
        if Some(i) == skip || k == 0 {
            continue;
        }
        let cand = Weakest(s, i);
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }
    }
    let mut out = heap.into_vec();
    out.sort();
    out.into_iter().map(|w| w.1).collect()
}

/// Mean over `sample` of `|top-k ∩ out-neighbors| / k`, ranking every
/// `v != u` by `score(u, v)`.
pub fn precision_at_k(
    graph: &Graph,
    k: usize,
    sample: &[NodeId],
    score: impl Fn(NodeId, NodeId) -> f64,
) -> Result<f64> {
    let n = graph.num_nodes();
    if k == 0 || k >= n {
        return Err(AgeError::invalid(format!("k must lie in [1, {}), got {k}", n)));
    }
    if sample.is_empty() {
        return Err(AgeError::invalid("precision@k needs at least one sampled node"));
    }
    let mut total = 0.0;
    let mut row = vec![0.0; n];
    for &u in sample {
        for (v, s) in row.iter_mut().enumerate() {
            *s = score(u, v);
        }
        let hits = top_k(&row, k, Some(u)).into_iter().filter(|&v| graph.has_edge(u, v)).count();
        total += hits as f64 / k as f64;
    }
    Ok(total / sample.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    #[test]
    fn ties_prefer_low_ids() {
        assert_eq!(top_k(&[1.0, 3.0, 3.0, 2.0, 3.0], 2, None), vec![1, 2]);
        assert_eq!(top_k(&[1.0, 3.0, 3.0, 2.0, 3.0], 4, Some(2)), vec![1, 4, 3, 0]);
        assert!(top_k(&[1.0], 0, None).is_empty());
    }

    #[test]
    fn exact_adjacency_scores_give_full_precision() {
        let g = Graph::from_pairs(GraphKind::Directed, 4, &[(0, 1), (0, 2), (1, 3)]);
        let s = |u, v| if g.has_edge(u, v) { 1.0 } else { -1.0 };
        assert_eq!(precision_at_k(&g, 2, &[0], s).unwrap(), 1.0);
        assert_eq!(precision_at_k(&g, 1, &[0, 1], s).unwrap(), 1.0);
        assert!(precision_at_k(&g, 4, &[0], s).is_err());
    }
}
