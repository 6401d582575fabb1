//! Edge holdout and negative-pair construction for link prediction.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::io::read_records;
use super::{Edge, Graph, GraphKind};
use crate::error::{AgeError, Result};

#[derive(Debug, Clone)]
pub struct EvalSplit {
    pub train_graph: Graph,
    pub pos_test: Vec<Edge>,
    pub neg_test: Vec<Edge>,
    pub holdout: f64,
    pub gamma: f64,
    pub seed: u64,
}

/// Holds out `round(holdout * |E|)` uniformly chosen edges.
///
/// With `keep_connected`, an edge whose removal would leave either endpoint
/// without any incident edge is skipped and the next candidate drawn. Every
/// edge is tried at most once, so the search stops after `|E|` draws.
pub fn split_edges(graph: &Graph, holdout: f64, seed: u64, keep_connected: bool) -> Result<EvalSplit> {
    if !(holdout > 0.0 && holdout < 1.0) {
        return Err(AgeError::invalid(format!("holdout must lie in (0, 1), got {holdout}")));
    }
    let edges = graph.edges();
    let target = (holdout * edges.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut remaining_degree: Vec<usize> = (0..graph.num_nodes()).map(|u| incident(graph, u)).collect();
    let mut held = vec![false; edges.len()];
    let mut pos_test = Vec::with_capacity(target);
    for &i in &order {
        if pos_test.len() == target {
            break;
        }
        let e = edges[i];
        if keep_connected && (remaining_degree[e.src] <= 1 || remaining_degree[e.dst] <= 1) {
            continue;
        }
        remaining_degree[e.src] -= 1;
        remaining_degree[e.dst] -= 1;
        held[i] = true;
        pos_test.push(e);
    }
    if pos_test.len() < target {
        return Err(AgeError::SplitInfeasible {
            achieved: pos_test.len(),
            target,
        });
    }
    let train_graph = graph.with_edges(
        edges
            .iter()
            .zip(&held)
            .filter(|(_, &h)| !h)
            .map(|(e, _)| *e),
    );
    Ok(EvalSplit {
        train_graph,
        pos_test,
        neg_test: Vec::new(),
        holdout,
        gamma: 0.0,
        seed,
    })
}

/// Incident edge count, counting each stored edge once per endpoint.
fn incident(graph: &Graph, u: usize) -> usize {
    match graph.kind() {
        GraphKind::Undirected => graph.out_degree(u),
        // parallel triples between the same pair are separate edges
        _ => graph.out_degree(u) + graph.in_degree(u),
    }
}

/// Fills `neg_test` with `|pos_test|` negatives for homogeneous graphs.
///
/// A `gamma` fraction are reversals `(v, u)` of held-out directed positives
/// whose reverse is not an edge of `graph`; the remainder are uniform random
/// node pairs absent from `graph`. Undirected graphs always use `gamma = 0`.
pub fn make_negatives(split: &EvalSplit, graph: &Graph, gamma: f64, seed: u64) -> Result<EvalSplit> {
    if split.pos_test.is_empty() {
        return Err(AgeError::invalid("split has no positive test edges"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(AgeError::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if graph.kind() == GraphKind::Heterogeneous {
        return Err(AgeError::invalid("use make_corrupted_negatives for heterogeneous graphs"));
    }
    let gamma = if graph.kind() == GraphKind::Undirected { 0.0 } else { gamma };
    let n = split.pos_test.len();
    let n_rev = (gamma * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut candidates: Vec<Edge> = split
        .pos_test
        .iter()
        .filter(|e| !graph.has_edge(e.dst, e.src))
        .map(|e| e.reversed())
        .collect();
    if n_rev > candidates.len() {
        return Err(AgeError::GammaInfeasible {
            requested: gamma,
            max_feasible: candidates.len() as f64 / n as f64,
        });
    }
    candidates.shuffle(&mut rng);
    let mut neg: Vec<Edge> = candidates.into_iter().take(n_rev).collect();

    let mut used: HashSet<Edge> = neg.iter().copied().collect();
    let num_nodes = graph.num_nodes();
    let max_attempts = 1000 * n + 10_000;
    let mut attempts = 0;
    while neg.len() < n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(AgeError::invalid("could not draw enough random non-edges; graph too dense"));
        }
        let u = rng.random_range(0..num_nodes);
        let v = rng.random_range(0..num_nodes);
        if u == v || graph.has_edge(u, v) {
            continue;
        }
        let e = Edge::new(u, v);
        let key = if graph.kind() == GraphKind::Undirected {
            Edge::new(u.min(v), u.max(v))
        } else {
            e
        };
        if used.insert(key) {
            neg.push(e);
        }
    }
    Ok(EvalSplit {
        neg_test: neg,
        gamma,
        ..split.clone()
    })
}

/// Tail-corrupted negatives for triples: each positive `(u, r, v)` yields
/// `(u, r, v')` with `v'` drawn uniformly among nodes of `v`'s type (any node
/// when the graph is untyped) such that the triple is not in `graph`.
pub fn make_corrupted_negatives(split: &EvalSplit, graph: &Graph, seed: u64) -> Result<EvalSplit> {
    if split.pos_test.is_empty() {
        return Err(AgeError::invalid("split has no positive test edges"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..graph.num_nodes()).collect();
    let by_type: Option<Vec<Vec<usize>>> = graph.node_types().map(|types| {
        let k = types.iter().copied().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); k];
        for (u, &t) in types.iter().enumerate() {
            groups[t].push(u);
        }
        groups
    });
    let mut neg = Vec::with_capacity(split.pos_test.len());
    for e in &split.pos_test {
        let pool: &[usize] = match (&by_type, graph.node_types()) {
            (Some(groups), Some(types)) => &groups[types[e.dst]],
            _ => &all,
        };
        let mut found = None;
        for _ in 0..(100 * pool.len()).max(100) {
            let v = pool[rng.random_range(0..pool.len())];
            if v != e.dst && v != e.src && !graph.has_triple(e.src, e.rel, v) {
                found = Some(v);
                break;
            }
        }
        let v = found.ok_or_else(|| {
            AgeError::invalid(format!("no corruption candidate for triple ({}, {}, {})", e.src, e.rel, e.dst))
        })?;
        neg.push(Edge::triple(e.src, e.rel, v));
    }
    Ok(EvalSplit {
        neg_test: neg,
        gamma: 0.0,
        ..split.clone()
    })
}

impl EvalSplit {
    /// Split file body: `u<TAB>v[<TAB>r]<TAB>{pos|neg}` per line, preceded by
    /// `#` metadata lines.
    pub fn to_file_string(&self, full: &Graph) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# holdout={} gamma={} seed={}", self.holdout, self.gamma, self.seed);
        let het = full.kind() == GraphKind::Heterogeneous;
        for (tag, list) in [("pos", &self.pos_test), ("neg", &self.neg_test)] {
            for e in list.iter() {
                s.push_str(full.node_name(e.src));
                s.push('\t');
                s.push_str(full.node_name(e.dst));
                if het {
                    s.push('\t');
                    s.push_str(full.relations().name(e.rel));
                }
                s.push('\t');
                s.push_str(tag);
                s.push('\n');
            }
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>, full: &Graph) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string(full)).map_err(|e| AgeError::io(path, e))
    }

    /// Hex digest identifying the held-out and negative sets.
    pub fn hash(&self, full: &Graph) -> String {
        let digest = Sha256::digest(self.to_file_string(full).as_bytes());
        hex::encode(&digest[..8])
    }

    /// Replays a persisted split against the full graph it was drawn from.
    pub fn read(path: impl AsRef<Path>, full: &Graph) -> Result<EvalSplit> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AgeError::io(path, e))?;
        let (mut holdout, mut gamma, mut seed) = (0.0, 0.0, 0u64);
        if let Some(meta) = text.lines().next().and_then(|l| l.strip_prefix('#')) {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("holdout", v)) => holdout = v.parse().unwrap_or(0.0),
                    Some(("gamma", v)) => gamma = v.parse().unwrap_or(0.0),
                    Some(("seed", v)) => seed = v.parse().unwrap_or(0),
                    _ => {}
                }
            }
        }
        let het = full.kind() == GraphKind::Heterogeneous;
        let width = if het { 4 } else { 3 };
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (line, fields) in read_records(path)? {
            let bad = |message: String| AgeError::Parse {
                path: path.to_path_buf(),
                line,
                message,
            };
            if fields.len() != width {
                return Err(bad(format!("expected {width} fields, found {}", fields.len())));
            }
            let node = |name: &str| full.node_id(name).ok_or_else(|| AgeError::UnknownNode(name.to_string()));
            let u = node(&fields[0])?;
            let v = node(&fields[1])?;
            let rel = if het {
                full.relations()
                    .get(&fields[2])
                    .ok_or_else(|| AgeError::UnknownRelation(fields[2].clone()))?
            } else {
                0
            };
            let e = Edge::triple(u, rel, v);
            match fields[width - 1].as_str() {
                "pos" => pos.push(e),
                "neg" => neg.push(e),
                other => return Err(bad(format!("expected pos or neg, found `{other}`"))),
            }
        }
        let held: HashSet<Edge> = pos.iter().copied().collect();
        let train_graph = full.with_edges(full.edges().iter().copied().filter(|e| {
            !(held.contains(e) || (full.kind() == GraphKind::Undirected && held.contains(&e.reversed())))
        }));
        Ok(EvalSplit {
            train_graph,
            pos_test: pos,
            neg_test: neg,
            holdout,
            gamma,
            seed,
        })
    }
}
