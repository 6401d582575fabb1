//! Directed model: every node has a source vector `s_u` and a target vector
//! `t_u`, and an edge `u -> v` is scored by `s_u·t_v`. Two generators share
//! one implicit distribution per node: a single noise draw feeds both the
//! fake-source and the fake-target transform.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AgeError, Result};
use crate::framework::{derive_seed, AdversarialModel, BatchItem, Denoms, TrainConfig, STREAM_INIT};
use crate::generator::{draw_eps, eta, eta_backward, Eps};
use crate::graph::{Graph, GraphKind, NodeId};
use crate::tensor::math::{log1m_sigmoid_clamped, log_sigmoid_clamped, sigmoid};
use crate::tensor::{axpy, dot, Grads, Optimizer, Tensor, TransformGrad, TransformLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DgOptions {
    /// Single generator: only fake targets are produced.
    pub star: bool,
    /// Symmetric ablation: the target table is the source table.
    pub tied: bool,
}

#[derive(Debug, Clone)]
pub enum DgDiscItem {
    Edge { u: NodeId, v: NodeId },
    Node {
        u: NodeId,
        fake_s: Option<Vec<f64>>,
        fake_t: Vec<f64>,
    },
}

impl BatchItem for DgDiscItem {
    fn category(&self) -> usize {
        match self {
            DgDiscItem::Edge { .. } => 0,
            DgDiscItem::Node { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DgGenItem {
    pub u: NodeId,
    pub eps: Eps,
}

impl BatchItem for DgGenItem {}

pub const GEN_Z: usize = 0;
pub const GEN_LOG_VAR: usize = 1;
pub const GEN_F_T: usize = 2;
/// Source transform slots follow the target ones (absent in star mode).
pub const GEN_F_S: usize = 6;

#[derive(Debug, Clone)]
pub struct DgModel {
    pub source: Tensor,
    /// Empty when tied.
    pub target: Tensor,
    pub z: Tensor,
    pub log_var: Tensor,
    pub f_t: TransformLayer,
    pub f_s: Option<TransformLayer>,
    opts: DgOptions,
    edges: Vec<(NodeId, NodeId)>,
    node_order: Vec<NodeId>,
    node_cursor: usize,
    edges_seen: usize,
    disc_opt: Optimizer,
    gen_opt: Optimizer,
}

impl DgModel {
    pub fn new(graph: &Graph, cfg: &TrainConfig, opts: DgOptions) -> Result<Self> {
        cfg.validate()?;
        if graph.kind() != GraphKind::Directed {
            return Err(AgeError::invalid(format!(
                "directed model needs a directed graph, got {}",
                graph.kind().name()
            )));
        }
        if graph.num_edges() == 0 {
            return Err(AgeError::invalid("directed model needs at least one edge"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
        let (n, d, h) = (graph.num_nodes(), cfg.dim, cfg.hidden_width());
        let bound = 0.5 / d as f64;
        let source = Tensor::uniform(n, d, bound, &mut rng);
        let target = if opts.tied {
            Tensor::zeros(0, d)
        } else {
            Tensor::uniform(n, d, bound, &mut rng)
        };
        let z = Tensor::uniform(n, d, bound, &mut rng);
        let f_t = TransformLayer::new(d, h, cfg.activation, &mut rng);
        let f_s = (!opts.star).then(|| TransformLayer::new(d, h, cfg.activation, &mut rng));
        let mut m = DgModel {
            source,
            target,
            z,
            log_var: Tensor::zeros(1, d),
            f_t,
            f_s,
            opts,
            edges: graph.edges().iter().map(|e| (e.src, e.dst)).collect(),
            node_order: (0..n).collect(),
            node_cursor: 0,
            edges_seen: 0,
            disc_opt: Optimizer::new(cfg.optimizer, &[]),
            gen_opt: Optimizer::new(cfg.optimizer, &[]),
        };
        m.disc_opt = Optimizer::new(cfg.optimizer, &m.disc_shapes());
        m.gen_opt = Optimizer::new(cfg.optimizer, &m.gen_shapes());
        Ok(m)
    }

    pub fn options(&self) -> DgOptions {
        self.opts
    }

    pub fn variant_name(&self) -> &'static str {
        match (self.opts.star, self.opts.tied) {
            (false, false) => "dg",
            (true, false) => "dg-star",
            (false, true) => "dg-tied",
            (true, true) => "dg-star-tied",
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.source.rows()
    }

    pub fn dim(&self) -> usize {
        self.source.cols()
    }

    fn tgt_slot(&self) -> usize {
        if self.opts.tied {
            0
        } else {
            1
        }
    }

    pub fn t(&self, u: NodeId) -> &[f64] {
        if self.opts.tied {
            self.source.row(u)
        } else {
            self.target.row(u)
        }
    }

    pub fn s(&self, u: NodeId) -> &[f64] {
        self.source.row(u)
    }

    /// `D(u, v) = σ(s_u·t_v)`.
    pub fn prob(&self, u: NodeId, v: NodeId) -> f64 {
        sigmoid(self.score(u, v))
    }

    /// Pre-sigmoid edge score `s_u·t_v`.
    pub fn score(&self, u: NodeId, v: NodeId) -> f64 {
        dot(self.s(u), self.t(v))
    }

    /// `s_u ‖ t_u`.
    pub fn features(&self, u: NodeId) -> Vec<f64> {
        let mut f = self.s(u).to_vec();
        f.extend_from_slice(self.t(u));
        f
    }

    fn disc_shapes(&self) -> Vec<(usize, usize)> {
        if self.opts.tied {
            vec![self.source.shape()]
        } else {
            vec![self.source.shape(), self.target.shape()]
        }
    }

    fn gen_shapes(&self) -> Vec<(usize, usize)> {
        let mut s = vec![self.z.shape(), self.log_var.shape()];
        s.extend(self.f_t.tensors().iter().map(|t| t.shape()));
        if let Some(f) = &self.f_s {
            s.extend(f.tensors().iter().map(|t| t.shape()));
        }
        s
    }

    /// Fake (source, target) pair for `u` from one shared noise draw.
    pub fn generate(&self, u: NodeId, eps: &[f64]) -> (Option<Vec<f64>>, Vec<f64>) {
        let e = eta(self.z.row(u), &self.log_var, eps);
        let fake_s = self.f_s.as_ref().map(|f| f.forward(&e).0);
        (fake_s, self.f_t.forward(&e).0)
    }

    fn edge_loss(&self, u: NodeId, v: NodeId, w: f64, g: &mut Grads) -> f64 {
        let (val, dv) = log_sigmoid_clamped(self.score(u, v));
        let coef = -dv * w;
        g.rows(0).add_row(u, coef, self.t(v));
        g.rows(self.tgt_slot()).add_row(v, coef, self.s(u));
        -val * w
    }

    fn node_loss(&self, u: NodeId, fake_s: Option<&[f64]>, fake_t: &[f64], w: f64, g: &mut Grads) -> f64 {
        let mut loss = 0.0;
        if let Some(fs) = fake_s {
            let (val, dv) = log1m_sigmoid_clamped(dot(fs, self.t(u)));
            g.rows(self.tgt_slot()).add_row(u, -dv * w, fs);
            loss -= val;
        }
        let (val, dv) = log1m_sigmoid_clamped(dot(self.s(u), fake_t));
        g.rows(0).add_row(u, -dv * w, fake_t);
        loss -= val;
        loss * w
    }

    /// Discriminator nodes due by the time `edges_seen` edges were visited,
    /// so each pass covers every node once, spread evenly over the batches.
    fn due_nodes(&self) -> usize {
        let n = self.num_nodes() as u128;
        ((n * self.edges_seen as u128) / self.edges.len() as u128) as usize
    }
}

impl AdversarialModel for DgModel {
    type DiscItem = DgDiscItem;
    type GenItem = DgGenItem;

    fn disc_units(&self) -> usize {
        self.edges.len()
    }

    fn gen_units(&self) -> usize {
        self.num_nodes()
    }

    fn begin_disc_pass(&mut self, rng: &mut ChaCha8Rng) {
        self.node_order.shuffle(rng);
        self.node_cursor = 0;
        self.edges_seen = 0;
    }

    fn disc_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<DgDiscItem> {
        let mut items: Vec<DgDiscItem> = units
            .iter()
            .map(|&i| {
                let (u, v) = self.edges[i];
                DgDiscItem::Edge { u, v }
            })
            .collect();
        self.edges_seen += units.len();
        let due = self.due_nodes().min(self.num_nodes());
        let d = self.dim();
        while self.node_cursor < due {
            let u = self.node_order[self.node_cursor];
            self.node_cursor += 1;
            for _ in 0..n_s {
                let (fake_s, fake_t) = self.generate(u, &draw_eps(d, rng));
                items.push(DgDiscItem::Node { u, fake_s, fake_t });
            }
        }
        items
    }

    fn disc_loss(&self, items: &[DgDiscItem], denoms: &Denoms) -> (f64, Grads) {
        let mut g = Grads::new(self.disc_shapes());
        let (we, wn) = (denoms.weight(0), denoms.weight(1));
        let mut loss = 0.0;
        for it in items {
            loss += match it {
                DgDiscItem::Edge { u, v } => self.edge_loss(*u, *v, we, &mut g),
                DgDiscItem::Node { u, fake_s, fake_t } => self.node_loss(*u, fake_s.as_deref(), fake_t, wn, &mut g),
            };
        }
        (loss, g)
    }

    fn apply_disc(&mut self, grads: &Grads) -> Result<()> {
        if self.opts.tied {
            self.disc_opt.step(&mut [&mut self.source], grads)
        } else {
            self.disc_opt.step(&mut [&mut self.source, &mut self.target], grads)
        }
    }

    fn disc_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        if self.opts.tied {
            vec![&mut self.source]
        } else {
            vec![&mut self.source, &mut self.target]
        }
    }

    fn gen_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<DgGenItem> {
        let d = self.dim();
        units
            .iter()
            .flat_map(|&u| std::iter::repeat_n(u, n_s))
            .map(|u| DgGenItem { u, eps: draw_eps(d, rng) })
            .collect()
    }

    /// Minimizes `log(1 - σ(fake_s·t_u)) + log(1 - σ(s_u·fake_t))`.
    fn gen_loss(&self, items: &[DgGenItem], denoms: &Denoms) -> (f64, Grads) {
        let mut g = Grads::new(self.gen_shapes());
        let mut gf_t = TransformGrad::zeros(&self.f_t);
        let mut gf_s = self.f_s.as_ref().map(TransformGrad::zeros);
        let d = self.dim();
        let mut glv = vec![0.0; d];
        let w = denoms.weight(0);
        let mut loss = 0.0;
        for it in items {
            let e = eta(self.z.row(it.u), &self.log_var, &it.eps);
            let mut g_eta = vec![0.0; d];

            let (fake_t, cache_t) = self.f_t.forward(&e);
            let su = self.s(it.u);
            let (val, dv) = log1m_sigmoid_clamped(dot(su, &fake_t));
            loss += w * val;
            let up: Vec<f64> = su.iter().map(|x| w * dv * x).collect();
            axpy(1.0, &self.f_t.backward(&cache_t, &up, &mut gf_t), &mut g_eta);

            if let (Some(f_s), Some(gf)) = (&self.f_s, gf_s.as_mut()) {
                let (fake_s, cache_s) = f_s.forward(&e);
                let tu = self.t(it.u);
                let (val, dv) = log1m_sigmoid_clamped(dot(&fake_s, tu));
                loss += w * val;
                let up: Vec<f64> = tu.iter().map(|x| w * dv * x).collect();
                axpy(1.0, &f_s.backward(&cache_s, &up, gf), &mut g_eta);
            }

            let gm = eta_backward(&self.log_var, &it.eps, &g_eta, &mut glv);
            g.rows(GEN_Z).add_row(it.u, 1.0, gm);
        }
        g.dense(GEN_LOG_VAR).copy_from_slice(&glv);
        g.add_transform(GEN_F_T, &gf_t);
        if let Some(gf) = &gf_s {
            g.add_transform(GEN_F_S, gf);
        }
        (loss, g)
    }

    fn apply_gen(&mut self, grads: &Grads) -> Result<()> {
        let mut params: Vec<&mut Tensor> = vec![&mut self.z, &mut self.log_var];
        params.extend(self.f_t.tensors_mut());
        if let Some(f) = self.f_s.as_mut() {
            params.extend(f.tensors_mut());
        }
        self.gen_opt.step(&mut params, grads)
    }

    fn gen_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut params: Vec<&mut Tensor> = vec![&mut self.z, &mut self.log_var];
        params.extend(self.f_t.tensors_mut());
        if let Some(f) = self.f_s.as_mut() {
            params.extend(f.tensors_mut());
        }
        params
    }

    fn tables(&self) -> Vec<(String, &Tensor)> {
        let mut t: Vec<(String, &Tensor)> = vec![("source".into(), &self.source)];
        if !self.opts.tied {
            t.push(("target".into(), &self.target));
        }
        t.push(("z".into(), &self.z));
        t.push(("log_var".into(), &self.log_var));
        for (k, x) in ["w1", "b1", "w2", "b2"].iter().zip(self.f_t.tensors()) {
            t.push((format!("f_t.{k}"), x));
        }
        if let Some(f) = &self.f_s {
            for (k, x) in ["w1", "b1", "w2", "b2"].iter().zip(f.tensors()) {
                t.push((format!("f_s.{k}"), x));
            }
        }
        t
    }

    fn tables_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut t: Vec<(String, &mut Tensor)> = vec![("source".into(), &mut self.source)];
        if !self.opts.tied {
            t.push(("target".into(), &mut self.target));
        }
        t.push(("z".into(), &mut self.z));
        t.push(("log_var".into(), &mut self.log_var));
        for (k, x) in ["w1", "b1", "w2", "b2"].iter().zip(self.f_t.tensors_mut()) {
            t.push((format!("f_t.{k}"), x));
        }
        if let Some(f) = self.f_s.as_mut() {
            for (k, x) in ["w1", "b1", "w2", "b2"].iter().zip(f.tensors_mut()) {
                t.push((format!("f_s.{k}"), x));
            }
        }
        t
    }
}
