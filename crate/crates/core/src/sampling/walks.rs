use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AgeError, Result};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub num_walks: usize,
    pub walk_length: usize,
    pub window: usize,
    /// node2vec return parameter.
    pub p: f64,
    /// node2vec in-out parameter.
    pub q: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            num_walks: 10,
            walk_length: 80,
            window: 10,
            p: 1.0,
            q: 1.0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_walks == 0 || self.walk_length == 0 || self.window == 0 {
            return Err(AgeError::invalid("num_walks, walk_length and window must be positive"));
        }
        if self.window > self.walk_length {
            return Err(AgeError::invalid("window must not exceed walk_length"));
        }
        if !(self.p > 0.0 && self.q > 0.0) || !self.p.is_finite() || !self.q.is_finite() {
            return Err(AgeError::invalid("node2vec p and q must be positive and finite"));
        }
        Ok(())
    }
}

/// Uniform (DeepWalk-style) truncated walks following out-edges.
///
/// Each of the `num_walks` passes visits every start node once, in an order
/// shuffled per pass. A walk ends early at a node without out-neighbors.
pub fn random_walks(graph: &Graph, cfg: &WalkConfig, seed: u64) -> Vec<Vec<NodeId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<NodeId> = (0..graph.num_nodes()).collect();
    let mut walks = Vec::with_capacity(cfg.num_walks * starts.len());
    for _ in 0..cfg.num_walks {
        starts.shuffle(&mut rng);
        for &s in &starts {
            let mut walk = Vec::with_capacity(cfg.walk_length);
            walk.push(s);
            let mut cur = s;
            while walk.len() < cfg.walk_length {
                let nbrs = graph.out_neighbors(cur);
                if nbrs.is_empty() {
                    break;
                }
                cur = nbrs[rng.random_range(0..nbrs.len())].node as NodeId;
                walk.push(cur);
            }
            walks.push(walk);
        }
    }
    walks
}

/// Unnormalized second-order transition weight for stepping `prev -> cur -> next`.
fn node2vec_weight(graph: &Graph, prev: NodeId, next: NodeId, p: f64, q: f64) -> f64 {
    if next == prev {
        1.0 / p
    } else if graph.has_edge(prev, next) {
        1.0
    } else {
        1.0 / q
    }
}

/// Normalized node2vec transition distribution out of `cur` given the
/// previous node `prev`, one entry per stored out-neighbor.
pub fn node2vec_transitions(graph: &Graph, prev: NodeId, cur: NodeId, p: f64, q: f64) -> Vec<(NodeId, f64)> {
    let weights: Vec<(NodeId, f64)> = graph
        .out_neighbors(cur)
        .iter()
        .map(|n| {
            let x = n.node as NodeId;
            (x, node2vec_weight(graph, prev, x, p, q))
        })
        .collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    weights.into_iter().map(|(x, w)| (x, w / total)).collect()
}

/// Biased second-order walks with return parameter `p` and in-out parameter `q`.
pub fn node2vec_walks(graph: &Graph, cfg: &WalkConfig, seed: u64) -> Vec<Vec<NodeId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<NodeId> = (0..graph.num_nodes()).collect();
    let mut walks = Vec::with_capacity(cfg.num_walks * starts.len());
    let mut weights = Vec::new();
    for _ in 0..cfg.num_walks {
        starts.shuffle(&mut rng);
        for &s in &starts {
            let mut walk = Vec::with_capacity(cfg.walk_length);
            walk.push(s);
            while walk.len() < cfg.walk_length {
                let cur = *walk.last().unwrap();
                let nbrs = graph.out_neighbors(cur);
                if nbrs.is_empty() {
                    break;
                }
                let next = if walk.len() == 1 {
                    nbrs[rng.random_range(0..nbrs.len())].node as NodeId
                } else {
                    let prev = walk[walk.len() - 2];
                    weights.clear();
                    weights.extend(
                        nbrs.iter()
                            .map(|n| node2vec_weight(graph, prev, n.node as NodeId, cfg.p, cfg.q)),
                    );
                    let total: f64 = weights.iter().sum();
                    let mut r = rng.random::<f64>() * total;
                    let mut pick = nbrs.len() - 1;
                    for (i, w) in weights.iter().enumerate() {
                        if r < *w {
                            pick = i;
                            break;
                        }
                        r -= w;
                    }
                    nbrs[pick].node as NodeId
                };
                walk.push(next);
            }
            walks.push(walk);
        }
    }
    walks
}

/// Skip-gram (center, context) pairs: every `(w_i, w_j)` with `0 < |i - j| <= window`.
pub fn extract_pairs(walk: &[NodeId], window: usize) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for i in 0..walk.len() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len().saturating_sub(1));
        for j in lo..=hi {
            if j != i {
                out.push((walk[i], walk[j]));
            }
        }
    }
    out
}

/// Cycles through the skip-gram pairs of a walk corpus, visiting walks in a
/// shuffled order that is redrawn after every full sweep.
#[derive(Debug, Clone)]
pub struct PairStream {
    walks: Vec<Vec<NodeId>>,
    window: usize,
    order: Vec<usize>,
    walk_pos: usize,
    center: usize,
    offset: usize,
    total_pairs: usize,
}

impl PairStream {
    pub fn new(walks: Vec<Vec<NodeId>>, window: usize) -> Self {
        let total_pairs = walks.iter().map(|w| pair_count(w.len(), window)).sum();
        let order = (0..walks.len()).collect();
        PairStream {
            walks,
            window,
            order,
            walk_pos: 0,
            center: 0,
            offset: 0,
            total_pairs,
        }
    }

    pub fn total_pairs(&self) -> usize {
        self.total_pairs
    }

    pub fn walks(&self) -> &[Vec<NodeId>] {
        &self.walks
    }

    /// Next pair, or `None` when the corpus holds no pairs at all.
    pub fn next_pair(&mut self, rng: &mut impl Rng) -> Option<(NodeId, NodeId)> {
        if self.total_pairs == 0 {
            return None;
        }
        loop {
            if self.walk_pos == 0 && self.center == 0 && self.offset == 0 {
                self.order.shuffle(rng);
            }
            let walk = &self.walks[self.order[self.walk_pos]];
            let w = self.window;
            if self.center < walk.len() {
                let lo = self.center.saturating_sub(w);
                let hi = (self.center + w).min(walk.len() - 1);
                let j = lo + self.offset;
                if j <= hi {
                    self.offset += 1;
                    if j != self.center {
                        return Some((walk[self.center], walk[j]));
                    }
                    continue;
                }
                self.center += 1;
                self.offset = 0;
                continue;
            }
            self.center = 0;
            self.offset = 0;
            self.walk_pos += 1;
            if self.walk_pos == self.walks.len() {
                self.walk_pos = 0;
            }
        }
    }
}

fn pair_count(len: usize, window: usize) -> usize {
    (0..len)
        .map(|i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(len.saturating_sub(1));
            hi - lo
        })
        .sum()
}

/// One walk per line, space-separated node names.
pub fn write_walks(path: impl AsRef<std::path::Path>, graph: &Graph, walks: &[Vec<NodeId>]) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| AgeError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for walk in walks {
        let line: Vec<&str> = walk.iter().map(|&u| graph.node_name(u)).collect();
        writeln!(w, "{}", line.join(" ")).map_err(|e| AgeError::io(path, e))?;
    }
    w.flush().map_err(|e| AgeError::io(path, e))
}
