//! Task pipelines built from the metric primitives: link prediction, node
//! classification and graph reconstruction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{auc, f1_scores, top_k, train_logreg_ovr, Scorer};
use crate::error::{AgeError, Result};
use crate::framework::derive_seed;
use crate::graph::split::{make_corrupted_negatives, make_negatives, split_edges, EvalSplit};
use crate::graph::{Edge, Graph, GraphKind, LabelSet, NodeId};

/// Training ratios of the sparsity sweep.
pub const SWEEP_RATIOS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_K_GRID: [usize; 7] = [1, 2, 5, 10, 20, 50, 100];

const STREAM_SPLIT: u64 = 10;
const STREAM_NEG: u64 = 11;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSettings {
    pub holdout: f64,
    pub keep_connected: bool,
    /// Reversed-negative fractions; ignored for undirected and
    /// heterogeneous graphs.
    pub gammas: Vec<f64>,
}

impl LpSettings {
    pub fn for_kind(kind: GraphKind) -> Self {
        match kind {
            GraphKind::Undirected => LpSettings {
                holdout: 0.2,
                keep_connected: true,
                gammas: vec![0.0],
            },
            GraphKind::Directed => LpSettings {
                holdout: 0.5,
                keep_connected: false,
                gammas: vec![0.0, 0.5, 1.0],
            },
            GraphKind::Heterogeneous => LpSettings {
                holdout: 0.2,
                keep_connected: true,
                gammas: vec![0.0],
            },
        }
    }
}

/// One split per gamma, all sharing the same held-out positives.
/// Heterogeneous graphs yield a single tail-corrupted split.
pub fn lp_splits(graph: &Graph, settings: &LpSettings, seed: u64) -> Result<Vec<EvalSplit>> {
    let base = split_edges(graph, settings.holdout, derive_seed(seed, STREAM_SPLIT), settings.keep_connected)?;
    let neg_seed = derive_seed(seed, STREAM_NEG);
    match graph.kind() {
        GraphKind::Heterogeneous => Ok(vec![make_corrupted_negatives(&base, graph, neg_seed)?]),
        GraphKind::Undirected => Ok(vec![make_negatives(&base, graph, 0.0, neg_seed)?]),
        GraphKind::Directed => {
            if settings.gammas.is_empty() {
                return Err(AgeError::invalid("gamma grid is empty"));
            }
            settings
                .gammas
                .iter()
                .map(|&g| make_negatives(&base, graph, g, neg_seed))
                .collect()
        }
    }
}

pub fn link_prediction_auc(scorer: &dyn Scorer, split: &EvalSplit) -> Result<f64> {
    let pos: Vec<f64> = split.pos_test.iter().map(|e| scorer.score(e)).collect();
    let neg: Vec<f64> = split.neg_test.iter().map(|e| scorer.score(e)).collect();
    auc(&pos, &neg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NcOutcome {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Trains on a random `train_ratio` share of labeled nodes. The test set is
/// every other labeled node, or a `test_fraction` share of all labeled nodes
/// drawn from outside the training set.
pub fn node_classification(
    scorer: &dyn Scorer,
    labels: &LabelSet,
    train_ratio: f64,
    test_fraction: Option<f64>,
    l2: f64,
    seed: u64,
) -> Result<NcOutcome> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(AgeError::invalid(format!("train ratio must lie in (0, 1), got {train_ratio}")));
    }
    let mut nodes = labels.labeled_nodes();
    if nodes.len() < 2 {
        return Err(AgeError::invalid("node classification needs at least two labeled nodes"));
    }
    let total = nodes.len();
    nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((train_ratio * total as f64).round() as usize).clamp(1, total - 1);
    let rest = total - n_train;
    let n_test = match test_fraction {
        None => rest,
        Some(f) if f > 0.0 && f <= 1.0 => ((f * total as f64).round() as usize).clamp(1, rest),
        Some(f) => return Err(AgeError::invalid(format!("test fraction must lie in (0, 1], got {f}"))),
    };
    let (train, tail) = nodes.split_at(n_train);
    let test = &tail[..n_test];
    let gather = |set: &[NodeId]| -> (Vec<Vec<f64>>, Vec<usize>) {
        set.iter()
            .map(|&u| (scorer.features(u), labels.get(u).expect("labeled node")))
            .unzip()
    };
    let (x_train, y_train) = gather(train);
    let (x_test, y_test) = gather(test);
    let model = train_logreg_ovr(&x_train, &y_train, labels.num_classes(), l2, &|c| {
        labels.class_name(c).to_string()
    })?;
    let pred = model.predict_all(&x_test);
    let (micro_f1, macro_f1) = f1_scores(&pred, &y_test, labels.num_classes())?;
    Ok(NcOutcome {
        micro_f1,
        macro_f1,
        n_train,
        n_test,
    })
}

/// Node classification at every ratio in [`SWEEP_RATIOS`], testing on 10%
/// of labeled nodes outside the training set.
pub fn nc_sweep(scorer: &dyn Scorer, labels: &LabelSet, l2: f64, seed: u64) -> Result<Vec<(f64, NcOutcome)>> {
    SWEEP_RATIOS
        .iter()
        .enumerate()
        .map(|(i, &r)| Ok((r, node_classification(scorer, labels, r, Some(0.1), l2, derive_seed(seed, i as u64))?)))
        .collect()
}

/// precision@k for each `k`, over a `sample_fraction` share of the nodes
/// with at least one out-neighbor.
pub fn graph_reconstruction(
    graph: &Graph,
    scorer: &dyn Scorer,
    sample_fraction: f64,
    ks: &[usize],
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if graph.kind() == GraphKind::Heterogeneous {
        return Err(AgeError::invalid("graph reconstruction applies to homogeneous graphs"));
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(AgeError::invalid(format!("sample fraction must lie in (0, 1], got {sample_fraction}")));
    }
    let n = graph.num_nodes();
    if ks.is_empty() {
        return Err(AgeError::invalid("k grid is empty"));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k >= n) {
        return Err(AgeError::invalid(format!("k must lie in [1, {n}), got {k}")));
    }
    let mut candidates: Vec<NodeId> = (0..n).filter(|&u| graph.out_degree(u) > 0).collect();
    if candidates.is_empty() {
        return Err(AgeError::invalid("graph has no edges"));
    }
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let m = ((sample_fraction * n as f64).round() as usize).clamp(1, candidates.len());
    let mut sample = candidates[..m].to_vec();
    sample.sort_unstable();

    // The selection order is total, so the top-k lists for every k are
    // prefixes of the longest one.
    let k_max = *ks.iter().max().unwrap();
    let mut hits = vec![0.0; ks.len()];
    let mut row = vec![0.0; n];
    for &u in &sample {
        for (v, s) in row.iter_mut().enumerate() {
            *s = scorer.score(&Edge::new(u, v));
        }
        let ranked = top_k(&row, k_max, Some(u));
        for (slot, &k) in ks.iter().enumerate() {
            let h = ranked[..k].iter().filter(|&&v| graph.has_edge(u, v)).count();
            hits[slot] += h as f64 / k as f64;
        }
    }
    Ok(ks.iter().zip(hits).map(|(&k, h)| (k, h / sample.len() as f64)).collect())
}
