use std::path::Path;

use super::io::read_records;
use super::{Graph, NameTable, NodeId};
use crate::error::{AgeError, Result};

/// Node class labels with classes numbered densely in first-seen order.
#[derive(Debug, Clone)]
pub struct LabelSet {
    labels: Vec<Option<usize>>,
    classes: NameTable,
}

impl LabelSet {
    pub fn new(num_nodes: usize) -> Self {
        LabelSet {
            labels: vec![None; num_nodes],
            classes: NameTable::new(),
        }
    }

    /// Builds a label set from dense class indices; class names are the
    /// indices themselves.
    pub fn from_classes(assignments: &[(NodeId, usize)], num_nodes: usize) -> Self {
        let mut set = LabelSet::new(num_nodes);
        let max = assignments.iter().map(|&(_, c)| c).max().unwrap_or(0);
        for c in 0..=max {
            set.classes.intern(&c.to_string());
        }
        for &(u, c) in assignments {
            set.labels[u] = Some(c);
        }
        set
    }

    pub fn assign(&mut self, node: NodeId, class_name: &str) {
        let c = self.classes.intern(class_name);
        self.labels[node] = Some(c);
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.labels.get(node).copied().flatten()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_name(&self, c: usize) -> &str {
        self.classes.name(c)
    }

    /// Labeled nodes in ascending id order.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        (0..self.labels.len()).filter(|&u| self.labels[u].is_some()).collect()
    }
}

/// Loads `node<TAB>label` lines for nodes of `graph`.
pub fn load_labels(path: impl AsRef<Path>, graph: &Graph) -> Result<LabelSet> {
    let path = path.as_ref();
    let mut set = LabelSet::new(graph.num_nodes());
    for (line, fields) in read_records(path)? {
        if fields.len() != 2 {
            return Err(AgeError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let u = graph
            .node_id(&fields[0])
            .ok_or_else(|| AgeError::UnknownNode(fields[0].clone()))?;
        set.assign(u, &fields[1]);
    }
    Ok(set)
}
