//! Graph storage shared by every model and protocol.
//!
//! Nodes and relations are remapped to dense indices at ingestion; the
//! original names live in [`NameTable`]s and are only used again on output.
//! Adjacency is kept in CSR form with sorted, deduplicated neighbor lists so
//! membership queries are a binary search.

mod io;
mod labels;
pub mod split;

use std::collections::HashMap;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use io::{load_edge_list, load_node_types, load_triples};
pub use labels::{load_labels, LabelSet};

pub type NodeId = usize;
pub type RelationId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    Undirected,
    Directed,
    Heterogeneous,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Undirected => "undirected",
            GraphKind::Directed => "directed",
            GraphKind::Heterogeneous => "heterogeneous",
        }
    }
}

/// A stored edge. `rel` is always 0 for homogeneous graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub rel: RelationId,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Edge { src, dst, rel: 0 }
    }

    pub fn triple(src: NodeId, rel: RelationId, dst: NodeId) -> Self {
        Edge { src, dst, rel }
    }

    pub fn reversed(self) -> Self {
        Edge {
            src: self.dst,
            dst: self.src,
            rel: self.rel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Neighbor {
    pub node: u32,
    pub rel: u32,
}

/// Bidirectional map between external names and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl NameTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Names "0".."n-1", used for programmatically built graphs.
    pub fn numbered(n: usize) -> Self {
        let mut t = Self::new();
        for i in 0..n {
            t.intern(&i.to_string());
        }
        t
    }

    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    items: Vec<Neighbor>,
}

impl Csr {
    fn build(num_nodes: usize, pairs: impl Iterator<Item = (NodeId, Neighbor)>) -> Self {
        let mut lists: Vec<Vec<Neighbor>> = vec![Vec::new(); num_nodes];
        for (u, n) in pairs {
            lists[u].push(n);
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            list.dedup();
            items.extend(list);
            offsets.push(items.len());
        }
        Csr { offsets, items }
    }

    fn row(&self, u: NodeId) -> &[Neighbor] {
        &self.items[self.offsets[u]..self.offsets[u + 1]]
    }
}

/// Immutable typed adjacency store.
#[derive(Debug, Clone)]
pub struct Graph {
    kind: GraphKind,
    nodes: NameTable,
    relations: NameTable,
    edges: Vec<Edge>,
    out_adj: Csr,
    in_adj: Option<Csr>,
    node_types: Option<Vec<usize>>,
    type_names: NameTable,
    dropped_self_loops: usize,
    dropped_duplicates: usize,
}

impl Graph {
    /// Builds a graph from raw edges in the given order. Self-loops and
    /// duplicates are dropped (and counted); the surviving edges keep the
    /// order of their first occurrence.
    pub fn build(
        kind: GraphKind,
        nodes: NameTable,
        relations: NameTable,
        raw: impl IntoIterator<Item = Edge>,
    ) -> Self {
        let num_nodes = nodes.len();
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        let mut dropped_self_loops = 0;
        let mut dropped_duplicates = 0;
        for e in raw {
            assert!(e.src < num_nodes && e.dst < num_nodes, "edge endpoint out of range");
            if e.src == e.dst {
                dropped_self_loops += 1;
                continue;
            }
            let key = match kind {
                GraphKind::Undirected => (e.src.min(e.dst), e.src.max(e.dst), 0),
                GraphKind::Directed => (e.src, e.dst, 0),
                GraphKind::Heterogeneous => (e.src, e.dst, e.rel),
            };
            if !seen.insert(key) {
                dropped_duplicates += 1;
                continue;
            }
            let rel = if kind == GraphKind::Heterogeneous { e.rel } else { 0 };
            edges.push(Edge { rel, ..e });
        }

        let nb = |node: NodeId, rel: RelationId| Neighbor {
            node: node as u32,
            rel: rel as u32,
        };
        let (out_adj, in_adj) = match kind {
            GraphKind::Undirected => {
                let out = Csr::build(
                    num_nodes,
                    edges
                        .iter()
                        .flat_map(|e| [(e.src, nb(e.dst, 0)), (e.dst, nb(e.src, 0))]),
                );
                (out, None)
            }
            GraphKind::Directed | GraphKind::Heterogeneous => {
                let out = Csr::build(num_nodes, edges.iter().map(|e| (e.src, nb(e.dst, e.rel))));
                let inn = Csr::build(num_nodes, edges.iter().map(|e| (e.dst, nb(e.src, e.rel))));
                (out, Some(inn))
            }
        };

        Graph {
            kind,
            nodes,
            relations,
            edges,
            out_adj,
            in_adj,
            node_types: None,
            type_names: NameTable::new(),
            dropped_self_loops,
            dropped_duplicates,
        }
    }

    /// Homogeneous graph over nodes named "0".."n-1".
    pub fn from_pairs(kind: GraphKind, num_nodes: usize, pairs: &[(NodeId, NodeId)]) -> Self {
        assert!(kind != GraphKind::Heterogeneous, "use from_triples for heterogeneous graphs");
        Graph::build(
            kind,
            NameTable::numbered(num_nodes),
            NameTable::new(),
            pairs.iter().map(|&(u, v)| Edge::new(u, v)),
        )
    }

    /// Heterogeneous graph over nodes "0".."n-1" and relations "r0".."r{k-1}".
    pub fn from_triples(
        num_nodes: usize,
        num_relations: usize,
        triples: &[(NodeId, RelationId, NodeId)],
    ) -> Self {
        let mut rels = NameTable::new();
        for r in 0..num_relations {
            rels.intern(&format!("r{r}"));
        }
        Graph::build(
            GraphKind::Heterogeneous,
            NameTable::numbered(num_nodes),
            rels,
            triples.iter().map(|&(u, r, v)| Edge::triple(u, r, v)),
        )
    }

    /// Same node/relation tables and node types, different edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = Edge>) -> Graph {
        let mut g = Graph::build(self.kind, self.nodes.clone(), self.relations.clone(), edges);
        g.node_types = self.node_types.clone();
        g.type_names = self.type_names.clone();
        g
    }

    pub fn set_node_types(&mut self, types: Vec<usize>, names: NameTable) {
        assert_eq!(types.len(), self.num_nodes());
        self.node_types = Some(types);
        self.type_names = names;
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Relation count; homogeneous graphs report 1.
    pub fn num_relations(&self) -> usize {
        self.relations.len().max(1)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> &NameTable {
        &self.nodes
    }

    pub fn relations(&self) -> &NameTable {
        &self.relations
    }

    pub fn node_types(&self) -> Option<&[usize]> {
        self.node_types.as_deref()
    }

    pub fn type_names(&self) -> &NameTable {
        &self.type_names
    }

    pub fn node_name(&self, u: NodeId) -> &str {
        self.nodes.name(u)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.get(name)
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn dropped_duplicates(&self) -> usize {
        self.dropped_duplicates
    }

    /// Out-neighbors (all neighbors for undirected graphs), sorted by (node, relation).
    pub fn out_neighbors(&self, u: NodeId) -> &[Neighbor] {
        self.out_adj.row(u)
    }

    /// In-neighbors; for undirected graphs this is the same list as `out_neighbors`.
    pub fn in_neighbors(&self, u: NodeId) -> &[Neighbor] {
        match &self.in_adj {
            Some(inn) => inn.row(u),
            None => self.out_adj.row(u),
        }
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_neighbors(u).len()
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        self.in_neighbors(u).len()
    }

    /// Number of incident stored adjacency entries: the degree for undirected
    /// graphs, out-degree + in-degree otherwise.
    pub fn degree(&self, u: NodeId) -> usize {
        match self.kind {
            GraphKind::Undirected => self.out_degree(u),
            _ => self.out_degree(u) + self.in_degree(u),
        }
    }

    /// Edge membership ignoring relations. Undirected graphs are symmetric.
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let row = self.out_neighbors(u);
        let target = v as u32;
        let start = row.partition_point(|n| n.node < target);
        start < row.len() && row[start].node == target
    }

    pub fn has_triple(&self, u: NodeId, r: RelationId, v: NodeId) -> bool {
        self.out_neighbors(u)
            .binary_search(&Neighbor {
                node: v as u32,
                rel: r as u32,
            })
            .is_ok()
    }

    /// Membership for a stored edge value, honoring the graph kind.
    pub fn contains(&self, e: &Edge) -> bool {
        match self.kind {
            GraphKind::Heterogeneous => self.has_triple(e.src, e.rel, e.dst),
            _ => self.has_edge(e.src, e.dst),
        }
    }
}
