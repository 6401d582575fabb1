//! Seeded planted-structure graphs for smoke tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AgeError, Result};
use crate::graph::{Graph, GraphKind, LabelSet, NameTable};

/// Undirected stochastic block model with equal-size blocks; labels are
/// block indices.
pub fn sbm(n: usize, blocks: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(Graph, LabelSet)> {
    if blocks == 0 || n < blocks {
        return Err(AgeError::invalid("need at least one node per block"));
    }
    check_prob(p_in)?;
    check_prob(p_out)?;
    let block = |u: usize| u * blocks / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block(u) == block(v) { p_in } else { p_out };
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    let labels: Vec<(usize, usize)> = (0..n).map(|u| (u, block(u))).collect();
    Ok((
        Graph::from_pairs(GraphKind::Undirected, n, &pairs),
        LabelSet::from_classes(&labels, n),
    ))
}

/// Directed graph whose every edge points from the lower id to the higher
/// id; each unordered pair is linked with probability `p`.
pub fn antisymmetric(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_prob(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Ok(Graph::from_pairs(GraphKind::Directed, n, &pairs))
}

/// Two-relation typed knowledge graph. Nodes split into types A and B of
/// equal size, each cut into `blocks` blocks. Relation 0 links block k of A
/// to block k of B, relation 1 links block k of A to block k+1 of B, each
/// candidate triple kept with probability `p`.
pub fn planted_kg(n: usize, blocks: usize, p: f64, seed: u64) -> Result<Graph> {
    check_prob(p)?;
    if !n.is_multiple_of(2) || blocks == 0 || n / 2 < blocks {
        return Err(AgeError::invalid("planted KG needs an even node count and a nonempty block per type"));
    }
    let half = n / 2;
    let block = |i: usize| i * blocks / half;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    for a in 0..half {
        for b in 0..half {
            let (ka, kb) = (block(a), block(b));
            for (r, target) in [(0, ka), (1, (ka + 1) % blocks)] {
                if kb == target && rng.random::<f64>() < p {
                    triples.push((a, r, half + b));
                }
            }
        }
    }
    let mut g = Graph::from_triples(n, 2, &triples);
    let mut names = NameTable::new();
    names.intern("A");
    names.intern("B");
    g.set_node_types((0..n).map(|u| usize::from(u >= half)).collect(), names);
    Ok(g)
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(AgeError::invalid(format!("probability must lie in [0, 1], got {p}")))
    }
}
