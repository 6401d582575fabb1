//! Undirected model: skip-gram structure loss over walk pairs plus an
//! adversarial term that teaches the center embeddings to reject generated
//! neighbors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AgeError, Result};
use crate::framework::{
    derive_seed, AdversarialModel, BatchItem, Denoms, TrainConfig, STREAM_INIT, STREAM_WALKS,
};
use crate::generator::{draw_eps, Eps, ImplicitHead};
use crate::graph::{Graph, GraphKind, NodeId};
use crate::sampling::{node2vec_walks, random_walks, NegativeTable, PairStream};
use crate::tensor::math::{log1m_sigmoid_clamped, log_sigmoid, sigmoid};
use crate::tensor::{dot, Grads, Optimizer, Tensor, TransformGrad};

/// Where skip-gram pairs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkSource {
    DeepWalk,
    Node2vec,
}

pub const DISC_CENTER: usize = 0;
pub const DISC_CONTEXT: usize = 1;
pub const GEN_Z: usize = 0;
pub const GEN_LOG_VAR: usize = 1;
pub const GEN_F: usize = 2;

#[derive(Debug, Clone)]
pub enum UgDiscItem {
    /// Walk pair with its negative context nodes.
    Pair { u: NodeId, v: NodeId, negs: Vec<NodeId> },
    /// Generated neighbor of `u`, a constant for the discriminator.
    Fake { u: NodeId, fake: Vec<f64> },
}

impl BatchItem for UgDiscItem {
    fn category(&self) -> usize {
        match self {
            UgDiscItem::Pair { .. } => 0,
            UgDiscItem::Fake { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UgGenItem {
    pub u: NodeId,
    pub eps: Eps,
}

impl BatchItem for UgGenItem {}

#[derive(Debug, Clone)]
pub struct UgModel {
    pub center: Tensor,
    pub context: Tensor,
    pub z: Tensor,
    pub head: ImplicitHead,
    pub lambda: f64,
    pub neg_k: usize,
    source: WalkSource,
    pairs: PairStream,
    negatives: NegativeTable,
    /// Drives pair and negative sampling only, so the structure side of
    /// training does not depend on how much randomness the generator uses.
    structure_rng: ChaCha8Rng,
    disc_opt: Optimizer,
    gen_opt: Optimizer,
}

impl UgModel {
    pub fn new(graph: &Graph, cfg: &TrainConfig, source: WalkSource) -> Result<Self> {
        cfg.validate()?;
        if graph.kind() != GraphKind::Undirected {
            return Err(AgeError::invalid(format!(
                "undirected model needs an undirected graph, got {}",
                graph.kind().name()
            )));
        }
        let walk_seed = derive_seed(cfg.seed, STREAM_WALKS);
        let walks = match source {
            WalkSource::DeepWalk => random_walks(graph, &cfg.walk, walk_seed),
            WalkSource::Node2vec => node2vec_walks(graph, &cfg.walk, walk_seed),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
        let (n, d) = (graph.num_nodes(), cfg.dim);
        let bound = 0.5 / d as f64;
        let center = Tensor::uniform(n, d, bound, &mut rng);
        let context = Tensor::uniform(n, d, bound, &mut rng);
        let z = Tensor::uniform(n, d, bound, &mut rng);
        let head = ImplicitHead::new(d, cfg.hidden_width(), cfg.activation, &mut rng);
        let structure_rng = ChaCha8Rng::seed_from_u64(derive_seed(walk_seed, 1));
        let mut m = UgModel {
            center,
            context,
            z,
            head,
            lambda: cfg.lambda,
            neg_k: cfg.neg_k,
            source,
            pairs: PairStream::new(walks, cfg.walk.window),
            negatives: NegativeTable::from_graph(graph)?,
            structure_rng,
            disc_opt: Optimizer::new(cfg.optimizer, &[]),
            gen_opt: Optimizer::new(cfg.optimizer, &[]),
        };
        m.disc_opt = Optimizer::new(cfg.optimizer, &m.disc_shapes());
        m.gen_opt = Optimizer::new(cfg.optimizer, &m.gen_shapes());
        Ok(m)
    }

    pub fn source(&self) -> WalkSource {
        self.source
    }

    pub fn variant_name(&self) -> &'static str {
        match self.source {
            WalkSource::DeepWalk => "ug-dw",
            WalkSource::Node2vec => "ug-nv",
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.center.rows()
    }

    pub fn dim(&self) -> usize {
        self.center.cols()
    }

    pub fn pair_stream(&self) -> &PairStream {
        &self.pairs
    }

    fn disc_shapes(&self) -> Vec<(usize, usize)> {
        vec![self.center.shape(), self.context.shape()]
    }

    fn gen_shapes(&self) -> Vec<(usize, usize)> {
        let f = &self.head.f;
        vec![
            self.z.shape(),
            self.head.log_var.shape(),
            f.w1.shape(),
            f.b1.shape(),
            f.w2.shape(),
            f.b2.shape(),
        ]
    }

    /// Generated neighbor for `u` under fixed noise.
    pub fn generate(&self, u: NodeId, eps: &[f64]) -> Vec<f64> {
        self.head.forward(self.z.row(u), eps).0
    }

    /// Link score: inner product of center embeddings.
    pub fn score(&self, u: NodeId, v: NodeId) -> f64 {
        dot(self.center.row(u), self.center.row(v))
    }

    /// `-[log σ(c_u·x_v) + Σ log σ(-c_u·x_n)]` for one pair, weighted.
    fn pair_loss(&self, u: NodeId, v: NodeId, negs: &[NodeId], w: f64, g: &mut Grads) -> f64 {
        let cu = self.center.row(u);
        let s = dot(cu, self.context.row(v));
        let mut loss = -log_sigmoid(s);
        let coef = -sigmoid(-s) * w;
        g.rows(DISC_CENTER).add_row(u, coef, self.context.row(v));
        g.rows(DISC_CONTEXT).add_row(v, coef, cu);
        for &n in negs {
            let s = dot(cu, self.context.row(n));
            loss -= log_sigmoid(-s);
            let coef = sigmoid(s) * w;
            g.rows(DISC_CENTER).add_row(u, coef, self.context.row(n));
            g.rows(DISC_CONTEXT).add_row(n, coef, cu);
        }
        loss * w
    }

    /// `-log(1 - σ(c_u·fake))`, clamped, weighted. Only `c_u` receives gradient.
    fn fake_loss(&self, u: NodeId, fake: &[f64], w: f64, g: &mut Grads) -> f64 {
        let (v, dv) = log1m_sigmoid_clamped(dot(self.center.row(u), fake));
        #[allow(unused_mut)]
        let mut coef = -dv * w;
        #[cfg(feature = "fault-injection")]
        {
            coef = -coef;
        }
        g.rows(DISC_CENTER).add_row(u, coef, fake);
        -v * w
    }

    /// Structure loss alone over a pair batch (mean).
    pub fn structure_loss(&self, pairs: &[(NodeId, NodeId, Vec<NodeId>)]) -> (f64, Grads) {
        let mut g = Grads::new(self.disc_shapes());
        let w = 1.0 / pairs.len().max(1) as f64;
        let loss = pairs.iter().map(|(u, v, n)| self.pair_loss(*u, *v, n, w, &mut g)).sum();
        (loss, g)
    }

    /// Adversarial loss alone over (node, fake) items (mean).
    pub fn adversarial_loss(&self, fakes: &[(NodeId, Vec<f64>)]) -> (f64, Grads) {
        let mut g = Grads::new(self.disc_shapes());
        let w = 1.0 / fakes.len().max(1) as f64;
        let loss = fakes.iter().map(|(u, f)| self.fake_loss(*u, f, w, &mut g)).sum();
        (loss, g)
    }
}

impl AdversarialModel for UgModel {
    type DiscItem = UgDiscItem;
    type GenItem = UgGenItem;

    fn disc_units(&self) -> usize {
        self.num_nodes()
    }

    fn gen_units(&self) -> usize {
        self.num_nodes()
    }

    fn disc_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<UgDiscItem> {
        let count = units.len() * n_s;
        let mut items = Vec::with_capacity(2 * count);
        for _ in 0..count {
            let Some((u, v)) = self.pairs.next_pair(&mut self.structure_rng) else {
                break;
            };
            let negs = (0..self.neg_k).map(|_| self.negatives.sample(&mut self.structure_rng)).collect();
            items.push(UgDiscItem::Pair { u, v, negs });
        }
        // With lambda = 0 the adversarial term is skipped entirely, which
        // makes the run identical to plain skip-gram training.
        if self.lambda > 0.0 {
            let d = self.dim();
            for &u in units {
                for _ in 0..n_s {
                    let eps = draw_eps(d, rng);
                    items.push(UgDiscItem::Fake {
                        u,
                        fake: self.generate(u, &eps),
                    });
                }
            }
        }
        items
    }

    fn disc_loss(&self, items: &[UgDiscItem], denoms: &Denoms) -> (f64, Grads) {
        let mut g = Grads::new(self.disc_shapes());
        let (w_pair, w_fake) = (denoms.weight(0), self.lambda * denoms.weight(1));
        let mut loss = 0.0;
        for it in items {
            loss += match it {
                UgDiscItem::Pair { u, v, negs } => self.pair_loss(*u, *v, negs, w_pair, &mut g),
                UgDiscItem::Fake { u, fake } => self.fake_loss(*u, fake, w_fake, &mut g),
            };
        }
        (loss, g)
    }

    fn apply_disc(&mut self, grads: &Grads) -> Result<()> {
        self.disc_opt.step(&mut [&mut self.center, &mut self.context], grads)
    }

    fn disc_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.center, &mut self.context]
    }

    fn gen_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<UgGenItem> {
        let d = self.dim();
        units
            .iter()
            .flat_map(|&u| std::iter::repeat_n(u, n_s))
            .map(|u| UgGenItem { u, eps: draw_eps(d, rng) })
            .collect()
    }

    /// Minimizes `log(1 - σ(c_u·f(η)))`, pushing fakes toward acceptance.
    fn gen_loss(&self, items: &[UgGenItem], denoms: &Denoms) -> (f64, Grads) {
        let mut g = Grads::new(self.gen_shapes());
        let mut gf = TransformGrad::zeros(&self.head.f);
        let mut glv = vec![0.0; self.dim()];
        let w = denoms.weight(0);
        let mut loss = 0.0;
        for it in items {
            let cu = self.center.row(it.u);
            let (fake, cache) = self.head.forward(self.z.row(it.u), &it.eps);
            let (v, dv) = log1m_sigmoid_clamped(dot(cu, &fake));
            loss += w * v;
            let grad_fake: Vec<f64> = cu.iter().map(|c| w * dv * c).collect();
            let gm = self.head.backward(&cache, &it.eps, &grad_fake, &mut gf, &mut glv);
            g.rows(GEN_Z).add_row(it.u, 1.0, &gm);
        }
        g.dense(GEN_LOG_VAR).copy_from_slice(&glv);
        g.add_transform(GEN_F, &gf);
        (loss, g)
    }

    fn apply_gen(&mut self, grads: &Grads) -> Result<()> {
        let [w1, b1, w2, b2] = self.head.f.tensors_mut();
        let mut params = [&mut self.z, &mut self.head.log_var, w1, b1, w2, b2];
        self.gen_opt.step(&mut params, grads)
    }

    fn gen_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let [w1, b1, w2, b2] = self.head.f.tensors_mut();
        vec![&mut self.z, &mut self.head.log_var, w1, b1, w2, b2]
    }

    fn tables(&self) -> Vec<(String, &Tensor)> {
        let f = &self.head.f;
        vec![
            ("center".into(), &self.center),
            ("context".into(), &self.context),
            ("z".into(), &self.z),
            ("log_var".into(), &self.head.log_var),
            ("f.w1".into(), &f.w1),
            ("f.b1".into(), &f.b1),
            ("f.w2".into(), &f.w2),
            ("f.b2".into(), &f.b2),
        ]
    }

    fn tables_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let [w1, b1, w2, b2] = self.head.f.tensors_mut();
        vec![
            ("center".into(), &mut self.center),
            ("context".into(), &mut self.context),
            ("z".into(), &mut self.z),
            ("log_var".into(), &mut self.head.log_var),
            ("f.w1".into(), w1),
            ("f.b1".into(), b1),
            ("f.w2".into(), w2),
            ("f.b2".into(), b2),
        ]
    }
}
