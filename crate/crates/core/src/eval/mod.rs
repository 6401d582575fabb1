//! Metrics and evaluation protocols.

mod auc;
mod f1;
mod logreg;
pub mod protocol;
pub mod report;
mod topk;

pub use auc::auc;
pub use f1::f1_scores;
pub use logreg::{train_logreg_ovr, LogRegModel, GRAD_TOL as LOGREG_GRAD_TOL, MAX_ITERS as LOGREG_MAX_ITERS};
pub use protocol::{
    graph_reconstruction, link_prediction_auc, lp_splits, nc_sweep, node_classification, LpSettings, NcOutcome,
    DEFAULT_K_GRID, SWEEP_RATIOS,
};
pub use report::{MetricRecord, Report};
pub use topk::{precision_at_k, top_k};

use crate::graph::{Edge, NodeId};

/// Anything that can score candidate edges and expose node features.
pub trait Scorer {
    fn num_nodes(&self) -> usize;
    /// Higher means more likely. `rel` is ignored by homogeneous models.
    fn score(&self, e: &Edge) -> f64;
    /// Representation used by node classification.
    fn features(&self, u: NodeId) -> Vec<f64>;
}
