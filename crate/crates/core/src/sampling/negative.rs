use rand::Rng;

use crate::error::{AgeError, Result};
use crate::graph::{Graph, NodeId};

/// Unigram negative-sampling table with mass proportional to `deg^{3/4}`.
#[derive(Debug, Clone)]
pub struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    pub const POWER: f64 = 0.75;

    pub fn from_degrees(degrees: &[usize]) -> Result<Self> {
        let weights: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(Self::POWER)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(AgeError::invalid("negative table needs at least one node with positive degree"));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(NegativeTable { cumulative })
    }

    pub fn from_graph(graph: &Graph) -> Result<Self> {
        let degrees: Vec<usize> = (0..graph.num_nodes()).map(|u| graph.degree(u)).collect();
        Self::from_degrees(&degrees)
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn probability(&self, u: NodeId) -> f64 {
        let prev = if u == 0 { 0.0 } else { self.cumulative[u - 1] };
        self.cumulative[u] - prev
    }

    /// Binary search over the cumulative table.
    pub fn sample(&self, rng: &mut impl Rng) -> NodeId {
        let r: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= r);
        if idx < self.cumulative.len() {
            idx
        } else {
            // r landed above a last entry that rounded below 1
            self.cumulative.partition_point(|&c| c < *self.cumulative.last().unwrap())
        }
    }
}
