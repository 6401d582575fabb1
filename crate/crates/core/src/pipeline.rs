//! Variant selection, training, persistence and export shared by the CLI
//! and the benchmarks.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::dg::{DgModel, DgOptions};
use crate::error::{AgeError, Result};
use crate::eval::Scorer;
use crate::framework::{train, AdversarialModel, Checkpoint, EpochReport, TrainConfig, TrainReport};
use crate::graph::{Edge, Graph, GraphKind, NodeId};
use crate::hin::{Flavor, HinModel};
use crate::tensor::Tensor;
use crate::ug::{UgModel, WalkSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    UgDw,
    UgNv,
    Dg,
    DgStar,
    /// Ablation: one shared table, so every score is symmetric.
    DgTied,
    DgStarTied,
    HinTe,
    HinTh,
    HinTd,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::UgDw,
        Variant::UgNv,
        Variant::Dg,
        Variant::DgStar,
        Variant::DgTied,
        Variant::DgStarTied,
        Variant::HinTe,
        Variant::HinTh,
        Variant::HinTd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::UgDw => "ug-dw",
            Variant::UgNv => "ug-nv",
            Variant::Dg => "dg",
            Variant::DgStar => "dg-star",
            Variant::DgTied => "dg-tied",
            Variant::DgStarTied => "dg-star-tied",
            Variant::HinTe => "hin-te",
            Variant::HinTh => "hin-th",
            Variant::HinTd => "hin-td",
        }
    }

    pub fn graph_kind(self) -> GraphKind {
        match self {
            Variant::UgDw | Variant::UgNv => GraphKind::Undirected,
            Variant::Dg | Variant::DgStar | Variant::DgTied | Variant::DgStarTied => GraphKind::Directed,
            Variant::HinTe | Variant::HinTh | Variant::HinTd => GraphKind::Heterogeneous,
        }
    }
}

impl FromStr for Variant {
    type Err = AgeError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                AgeError::invalid(format!("unknown variant `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Ug(UgModel),
    Dg(DgModel),
    Hin(HinModel),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            TrainedModel::Ug($m) => $body,
            TrainedModel::Dg($m) => $body,
            TrainedModel::Hin($m) => $body,
        }
    };
}

impl TrainedModel {
    /// Initializes a model, rejecting a graph of the wrong kind up front.
    pub fn build(variant: Variant, graph: &Graph, cfg: &TrainConfig) -> Result<Self> {
        if graph.kind() != variant.graph_kind() {
            return Err(AgeError::invalid(format!(
                "variant {variant} needs a {} graph, got a {} one",
                variant.graph_kind().name(),
                graph.kind().name()
            )));
        }
        let dg = |star, tied| DgModel::new(graph, cfg, DgOptions { star, tied }).map(TrainedModel::Dg);
        match variant {
            Variant::UgDw => UgModel::new(graph, cfg, WalkSource::DeepWalk).map(TrainedModel::Ug),
            Variant::UgNv => UgModel::new(graph, cfg, WalkSource::Node2vec).map(TrainedModel::Ug),
            Variant::Dg => dg(false, false),
            Variant::DgStar => dg(true, false),
            Variant::DgTied => dg(false, true),
            Variant::DgStarTied => dg(true, true),
            Variant::HinTe => HinModel::new(graph, cfg, Flavor::TransE).map(TrainedModel::Hin),
            Variant::HinTh => HinModel::new(graph, cfg, Flavor::TransH).map(TrainedModel::Hin),
            Variant::HinTd => HinModel::new(graph, cfg, Flavor::TransD).map(TrainedModel::Hin),
        }
    }

    pub fn variant(&self) -> Variant {
        let name = match self {
            TrainedModel::Ug(m) => m.variant_name(),
            TrainedModel::Dg(m) => m.variant_name(),
            TrainedModel::Hin(m) => m.flavor().variant_name(),
        };
        name.parse().expect("model names are variant names")
    }

    pub fn fit(&mut self, cfg: &TrainConfig, on_epoch: impl FnMut(&EpochReport)) -> Result<TrainReport> {
        dispatch!(self, m => train(m, cfg, on_epoch))
    }

    pub fn dim(&self) -> usize {
        dispatch!(self, m => m.dim())
    }

    pub fn tables(&self) -> Vec<(String, &Tensor)> {
        dispatch!(self, m => m.tables())
    }

    fn tables_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        dispatch!(self, m => m.tables_mut())
    }

    /// Snapshot of every parameter plus the configuration that built it.
    pub fn checkpoint(&self, cfg: &TrainConfig) -> Checkpoint {
        Checkpoint {
            variant: self.variant().name().into(),
            meta: cfg.to_kv(),
            dim: self.dim(),
            tables: self.tables().into_iter().map(|(n, t)| (n, t.clone())).collect(),
        }
    }

    /// Rebuilds a model over `graph` from a checkpoint. The configuration
    /// stored in the checkpoint is returned alongside.
    pub fn from_checkpoint(ckpt: &Checkpoint, graph: &Graph) -> Result<(Self, TrainConfig)> {
        let variant: Variant = ckpt.variant.parse()?;
        let mut cfg = TrainConfig::default();
        for (k, v) in &ckpt.meta {
            cfg.set(k, v).map_err(|e| AgeError::Checkpoint(e.to_string()))?;
        }
        ckpt.expect_dim(cfg.dim)?;
        let mut model = TrainedModel::build(variant, graph, &cfg)?;
        let n = graph.num_nodes();
        let stored_nodes = ckpt.tables.first().map_or(0, |(_, t)| t.rows());
        if stored_nodes != n {
            return Err(AgeError::Checkpoint(format!(
                "checkpoint covers {stored_nodes} nodes, graph has {n}"
            )));
        }
        ckpt.restore_into(model.tables_mut())?;
        Ok((model, cfg))
    }

    /// Named embedding tables for export: `center` for undirected models,
    /// `source` and `target` for directed ones, `node` and `relation` for
    /// heterogeneous ones. Rows of `relation` are relations.
    pub fn embeddings(&self) -> Vec<(&'static str, Tensor)> {
        match self {
            TrainedModel::Ug(m) => vec![("center", m.center.clone())],
            TrainedModel::Dg(m) => {
                let n = m.num_nodes();
                let gather = |f: &dyn Fn(NodeId) -> Vec<f64>| {
                    Tensor::from_vec(n, m.dim(), (0..n).flat_map(f).collect())
                };
                vec![
                    ("source", gather(&|u| m.s(u).to_vec())),
                    ("target", gather(&|u| m.t(u).to_vec())),
                ]
            }
            TrainedModel::Hin(m) => vec![("node", m.disc.node.clone()), ("relation", m.disc.rel.clone())],
        }
    }

    /// Word2vec-style text files keyed by table name: an `N d` header, then
    /// one `name v1 ... vd` line per row.
    pub fn embedding_files(&self, graph: &Graph) -> Vec<(String, String)> {
        self.embeddings()
            .into_iter()
            .map(|(name, t)| {
                let names: Vec<&str> = if name == "relation" {
                    graph.relations().names().iter().map(String::as_str).collect()
                } else {
                    graph.nodes().names().iter().map(String::as_str).collect()
                };
                (format!("{name}.emb"), embedding_text(&t, &names))
            })
            .collect()
    }
}

pub fn embedding_text(t: &Tensor, names: &[&str]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", t.rows(), t.cols());
    for (i, name) in names.iter().enumerate().take(t.rows()) {
        s.push_str(name);
        for x in t.row(i) {
            let _ = write!(s, " {x}");
        }
        s.push('\n');
    }
    s
}

impl Scorer for TrainedModel {
    fn num_nodes(&self) -> usize {
        match self {
            TrainedModel::Ug(m) => m.num_nodes(),
            TrainedModel::Dg(m) => m.num_nodes(),
            TrainedModel::Hin(m) => m.disc.node.rows(),
        }
    }

    fn score(&self, e: &Edge) -> f64 {
        match self {
            TrainedModel::Ug(m) => m.score(e.src, e.dst),
            TrainedModel::Dg(m) => m.score(e.src, e.dst),
            TrainedModel::Hin(m) => m.score(e.src, e.rel, e.dst),
        }
    }

    fn features(&self, u: NodeId) -> Vec<f64> {
        match self {
            TrainedModel::Ug(m) => m.center.row(u).to_vec(),
            TrainedModel::Dg(m) => m.features(u),
            TrainedModel::Hin(m) => m.disc.node.row(u).to_vec(),
        }
    }
}

/// Short digest of the canonical configuration text.
pub fn config_hash(cfg: &TrainConfig) -> String {
    let text: String = cfg.to_kv().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// Provenance pairs attached to every output: configuration hash, seed and
/// crate version, plus any caller-supplied entries.
pub fn provenance(cfg: &TrainConfig, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut p = vec![
        ("config_hash".to_string(), config_hash(cfg)),
        ("seed".to_string(), cfg.seed.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    p.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{toy_config, toy_directed, toy_triples, toy_undirected};

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("dw".parse::<Variant>().is_err());
    }

    #[test]
    fn kind_mismatch_rejected_before_training() {
        let cfg = toy_config(0);
        let err = TrainedModel::build(Variant::Dg, &toy_undirected(), &cfg).unwrap_err();
        assert!(err.to_string().contains("directed"), "{err}");
        assert!(TrainedModel::build(Variant::HinTe, &toy_directed(), &cfg).is_err());
    }

    #[test]
    fn checkpoint_round_trip_preserves_scores() {
        let mut cfg = toy_config(4);
        cfg.n_epoch = 1;
        cfg.n_d = 1;
        cfg.n_g = 1;
        for (v, g) in [
            (Variant::UgNv, toy_undirected()),
            (Variant::DgStar, toy_directed()),
            (Variant::DgTied, toy_directed()),
            (Variant::HinTd, toy_triples()),
        ] {
            let mut m = TrainedModel::build(v, &g, &cfg).unwrap();
            m.fit(&cfg, |_| {}).unwrap();
            let bytes = m.checkpoint(&cfg).to_bytes();
            let (back, cfg2) = TrainedModel::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap(), &g).unwrap();
            assert_eq!(cfg2, cfg);
            for e in g.edges() {
                assert_eq!(back.score(e), m.score(e), "{v}");
            }
            assert_eq!(back.embedding_files(&g), m.embedding_files(&g));
        }
    }

    #[test]
    fn embedding_file_header() {
        let cfg = toy_config(1);
        let g = toy_undirected();
        let m = TrainedModel::build(Variant::UgDw, &g, &cfg).unwrap();
        let files = m.embedding_files(&g);
        assert_eq!(files.len(), 1);
        let first = files[0].1.lines().next().unwrap();
        assert_eq!(first, "5 6");
        assert_eq!(files[0].1.lines().count(), 6);
    }
}
