//! Heterogeneous model built on translate scores. The generator samples a
//! fake tail around the translated head `P(e_u) + e_r`, and the
//! discriminator scores triples by `D = σ(margin - ‖P(e_h) + e_r - P(e_t)‖)`.
//!
//! Projections (row-vector convention):
//! TransE `P(x) = x`; TransH `P(x) = x - (w_r·x) w_r`;
//! TransD `P(x) = x M` with `M = r_p u_pᵀ + I`, i.e. `x + (x·r_p) u_p`, where
//! `u_p` is the head's projection vector. Tails, real or generated, are
//! projected with the same matrix as the head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AgeError, Result};
use crate::framework::{derive_seed, AdversarialModel, BatchItem, Denoms, Norm, TrainConfig, STREAM_INIT};
use crate::generator::{draw_eps, Eps, ImplicitHead};
use crate::graph::{Graph, GraphKind, NodeId, RelationId};
use crate::sampling::sample_fake_relation;
use crate::tensor::math::{log1m_sigmoid_clamped, log_sigmoid_clamped, sigmoid};
use crate::tensor::{axpy, dot, Grads, Optimizer, Tensor, TransformGrad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    TransE,
    TransH,
    TransD,
}

impl Flavor {
    pub fn variant_name(self) -> &'static str {
        match self {
            Flavor::TransE => "hin-te",
            Flavor::TransH => "hin-th",
            Flavor::TransD => "hin-td",
        }
    }
}

pub const SLOT_NODE: usize = 0;
pub const SLOT_REL: usize = 1;
/// TransH hyperplane normals, or TransD node projection vectors.
pub const SLOT_EXTRA: usize = 2;
/// TransD relation projection vectors.
pub const SLOT_REL_PROJ: usize = 3;

/// One side's translate tables.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslateTables {
    pub flavor: Flavor,
    pub node: Tensor,
    pub rel: Tensor,
    /// TransH: hyperplane normals `w_r` (|R| x d). TransD: node projections
    /// `u_p` (|V| x d).
    pub extra: Option<Tensor>,
    /// TransD: relation projections `r_p` (|R| x d).
    pub rel_proj: Option<Tensor>,
}

impl TranslateTables {
    pub fn new(flavor: Flavor, n: usize, r: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 0.5 / d as f64;
        let node = Tensor::uniform(n, d, bound, rng);
        let rel = Tensor::uniform(r, d, bound, rng);
        let (extra, rel_proj) = match flavor {
            Flavor::TransE => (None, None),
            Flavor::TransH => {
                let mut w = Tensor::uniform(r, d, 1.0, rng);
                w.normalize_rows();
                (Some(w), None)
            }
            Flavor::TransD => (Some(Tensor::uniform(n, d, bound, rng)), Some(Tensor::uniform(r, d, bound, rng))),
        };
        TranslateTables {
            flavor,
            node,
            rel,
            extra,
            rel_proj,
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.node, &self.rel];
        v.extend(self.extra.as_ref());
        v.extend(self.rel_proj.as_ref());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.node, &mut self.rel];
        v.extend(self.extra.as_mut());
        v.extend(self.rel_proj.as_mut());
        v
    }

    fn names(&self) -> Vec<&'static str> {
        match self.flavor {
            Flavor::TransE => vec!["node", "rel"],
            Flavor::TransH => vec!["node", "rel", "hyperplane"],
            Flavor::TransD => vec!["node", "rel", "node_proj", "rel_proj"],
        }
    }

    pub fn dim(&self) -> usize {
        self.node.cols()
    }

    /// Projection of `x` under relation `r`, anchored at head `h`.
    pub fn project(&self, x: &[f64], h: NodeId, r: RelationId) -> Vec<f64> {
        match self.flavor {
            Flavor::TransE => x.to_vec(),
            Flavor::TransH => {
                let w = self.extra.as_ref().unwrap().row(r);
                let mut out = x.to_vec();
                axpy(-dot(w, x), w, &mut out);
                out
            }
            Flavor::TransD => {
                let up = self.extra.as_ref().unwrap().row(h);
                let rp = self.rel_proj.as_ref().unwrap().row(r);
                let mut out = x.to_vec();
                axpy(dot(x, rp), up, &mut out);
                out
            }
        }
    }

    /// Backward of [`project`](Self::project): returns `∂/∂x` and, when
    /// `grads` is given, adds the projection-parameter gradients into it.
    pub fn project_backward(
        &self,
        x: &[f64],
        h: NodeId,
        r: RelationId,
        g_out: &[f64],
        grads: Option<&mut Grads>,
    ) -> Vec<f64> {
        match self.flavor {
            Flavor::TransE => g_out.to_vec(),
            Flavor::TransH => {
                let w = self.extra.as_ref().unwrap().row(r);
                let (wg, wx) = (dot(w, g_out), dot(w, x));
                if let Some(g) = grads {
                    let row = g.rows(SLOT_EXTRA).row_mut(r);
                    axpy(-wg, x, row);
                    axpy(-wx, g_out, row);
                }
                let mut gx = g_out.to_vec();
                axpy(-wg, w, &mut gx);
                gx
            }
            Flavor::TransD => {
                let up = self.extra.as_ref().unwrap().row(h);
                let rp = self.rel_proj.as_ref().unwrap().row(r);
                let (gu, xr) = (dot(g_out, up), dot(x, rp));
                if let Some(g) = grads {
                    g.rows(SLOT_EXTRA).add_row(h, xr, g_out);
                    g.rows(SLOT_REL_PROJ).add_row(r, gu, x);
                }
                let mut gx = g_out.to_vec();
                axpy(gu, rp, &mut gx);
                gx
            }
        }
    }

    /// Translated head `P(e_h) + e_r`.
    pub fn translate(&self, h: NodeId, r: RelationId) -> Vec<f64> {
        let mut m = self.project(self.node.row(h), h, r);
        axpy(1.0, self.rel.row(r), &mut m);
        m
    }

    /// Residual `P(e_h) + e_r - P(tail)`.
    fn residual(&self, h: NodeId, r: RelationId, tail: &[f64]) -> Vec<f64> {
        let mut a = self.translate(h, r);
        axpy(-1.0, &self.project(tail, h, r), &mut a);
        a
    }

    pub fn distance(&self, h: NodeId, r: RelationId, tail: &[f64], norm: Norm) -> f64 {
        norm_value(&self.residual(h, r, tail), norm)
    }

    /// Gradient of `coef * distance`: parameter parts go to `grads` (head,
    /// relation and projections; the tail row only if `tail_id` is given)
    /// and the tail-vector gradient is returned.
    #[allow(clippy::too_many_arguments)]
    fn distance_backward(
        &self,
        h: NodeId,
        r: RelationId,
        tail: &[f64],
        tail_id: Option<NodeId>,
        norm: Norm,
        coef: f64,
        mut grads: Option<&mut Grads>,
    ) -> Vec<f64> {
        let a = self.residual(h, r, tail);
        let mut ga = norm_grad(&a, norm);
        ga.iter_mut().for_each(|x| *x *= coef);
        if let Some(g) = grads.as_deref_mut() {
            g.rows(SLOT_REL).add_row(r, 1.0, &ga);
            let gh = self.project_backward(self.node.row(h), h, r, &ga, Some(g));
            g.rows(SLOT_NODE).add_row(h, 1.0, &gh);
        }
        let neg: Vec<f64> = ga.iter().map(|x| -x).collect();
        let gt = self.project_backward(tail, h, r, &neg, grads.as_deref_mut());
        if let (Some(t), Some(g)) = (tail_id, grads) {
            g.rows(SLOT_NODE).add_row(t, 1.0, &gt);
        }
        gt
    }

    /// Rescales TransH normals to unit length.
    pub fn renormalize(&mut self) {
        if self.flavor == Flavor::TransH {
            self.extra.as_mut().unwrap().normalize_rows();
        }
    }
}

pub fn norm_value(a: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => a.iter().map(|x| x.abs()).sum(),
        Norm::L2 => dot(a, a).sqrt(),
    }
}

/// (Sub)gradient of the norm; zero at the origin.
fn norm_grad(a: &[f64], norm: Norm) -> Vec<f64> {
    match norm {
        Norm::L1 => a
            .iter()
            .map(|&x| {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
        Norm::L2 => {
            let n = dot(a, a).sqrt();
            if n > 0.0 {
                a.iter().map(|x| x / n).collect()
            } else {
                vec![0.0; a.len()]
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HinDiscItem {
    pub h: NodeId,
    pub r: RelationId,
    pub t: NodeId,
    /// Wrong relation for the same pair; `None` when only one relation exists.
    pub r_fake: Option<RelationId>,
    /// Generated tail for `(h, r)`, constant for the discriminator.
    pub fake: Vec<f64>,
}

impl BatchItem for HinDiscItem {}

#[derive(Debug, Clone)]
pub struct HinGenItem {
    pub h: NodeId,
    pub r: RelationId,
    pub eps: Eps,
}

impl BatchItem for HinGenItem {}

#[derive(Debug, Clone)]
pub struct HinModel {
    pub disc: TranslateTables,
    pub gen: TranslateTables,
    pub head: ImplicitHead,
    pub margin: f64,
    pub norm: Norm,
    /// Generator minimizes `-log(1 - D(fake))` instead of `log(1 - D(fake))`.
    pub negate_fake_term: bool,
    triples: Vec<(NodeId, RelationId, NodeId)>,
    num_relations: usize,
    disc_opt: Optimizer,
    gen_opt: Optimizer,
}

impl HinModel {
    pub fn new(graph: &Graph, cfg: &TrainConfig, flavor: Flavor) -> Result<Self> {
        cfg.validate()?;
        if graph.kind() != GraphKind::Heterogeneous {
            return Err(AgeError::invalid(format!(
                "heterogeneous model needs a triple graph, got {}",
                graph.kind().name()
            )));
        }
        if graph.num_edges() == 0 {
            return Err(AgeError::invalid("heterogeneous model needs at least one triple"));
        }
        let num_relations = graph.num_relations();
        if num_relations < 2 {
            log::warn!("only one relation: the wrong-relation loss term is skipped");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
        let (n, d) = (graph.num_nodes(), cfg.dim);
        let disc = TranslateTables::new(flavor, n, num_relations, d, &mut rng);
        let gen = TranslateTables::new(flavor, n, num_relations, d, &mut rng);
        let head = ImplicitHead::new(d, cfg.hidden_width(), cfg.activation, &mut rng);
        let mut m = HinModel {
            disc,
            gen,
            head,
            margin: cfg.margin,
            norm: cfg.norm,
            negate_fake_term: cfg.negate_fake_term,
            triples: graph.edges().iter().map(|e| (e.src, e.rel, e.dst)).collect(),
            num_relations,
            disc_opt: Optimizer::new(cfg.optimizer, &[]),
            gen_opt: Optimizer::new(cfg.optimizer, &[]),
        };
        m.disc_opt = Optimizer::new(cfg.optimizer, &m.disc_shapes());
        m.gen_opt = Optimizer::new(cfg.optimizer, &m.gen_shapes());
        Ok(m)
    }

    pub fn flavor(&self) -> Flavor {
        self.disc.flavor
    }

    pub fn dim(&self) -> usize {
        self.disc.dim()
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    fn disc_shapes(&self) -> Vec<(usize, usize)> {
        self.disc.tensors().iter().map(|t| t.shape()).collect()
    }

    fn gen_slot_log_var(&self) -> usize {
        self.gen.tensors().len()
    }

    fn gen_shapes(&self) -> Vec<(usize, usize)> {
        let mut s: Vec<_> = self.gen.tensors().iter().map(|t| t.shape()).collect();
        s.push(self.head.log_var.shape());
        s.extend(self.head.f.tensors().iter().map(|t| t.shape()));
        s
    }

    /// Mean of the generator's noise distribution for `(u, r)`.
    pub fn noise_mean(&self, u: NodeId, r: RelationId) -> Vec<f64> {
        self.gen.translate(u, r)
    }

    pub fn generate(&self, u: NodeId, r: RelationId, eps: &[f64]) -> Vec<f64> {
        self.head.forward(&self.noise_mean(u, r), eps).0
    }

    pub fn distance(&self, h: NodeId, r: RelationId, t: NodeId) -> f64 {
        self.disc.distance(h, r, self.disc.node.row(t), self.norm)
    }

    /// `D(e_t | h, r) = σ(margin - distance)`.
    pub fn prob(&self, h: NodeId, r: RelationId, t: NodeId) -> f64 {
        sigmoid(self.margin - self.distance(h, r, t))
    }

    /// Link-prediction score, monotone in `D`.
    pub fn score(&self, h: NodeId, r: RelationId, t: NodeId) -> f64 {
        self.margin - self.distance(h, r, t)
    }

    fn item_loss(&self, it: &HinDiscItem, w: f64, g: &mut Grads) -> f64 {
        let d = &self.disc;
        let tail = d.node.row(it.t);
        // Real node under the real relation: -log D.
        let (v1, dv1) = log_sigmoid_clamped(self.margin - d.distance(it.h, it.r, tail, self.norm));
        d.distance_backward(it.h, it.r, tail, Some(it.t), self.norm, w * dv1, Some(g));
        let mut loss = -v1;
        // Real node under a wrong relation: -log(1 - D).
        if let Some(rf) = it.r_fake {
            let (v2, dv2) = log1m_sigmoid_clamped(self.margin - d.distance(it.h, rf, tail, self.norm));
            d.distance_backward(it.h, rf, tail, Some(it.t), self.norm, w * dv2, Some(g));
            loss -= v2;
        }
        // Generated node under the real relation: -log(1 - D), fake constant.
        let (v3, dv3) = log1m_sigmoid_clamped(self.margin - d.distance(it.h, it.r, &it.fake, self.norm));
        d.distance_backward(it.h, it.r, &it.fake, None, self.norm, w * dv3, Some(g));
        loss -= v3;
        loss * w
    }
}

impl AdversarialModel for HinModel {
    type DiscItem = HinDiscItem;
    type GenItem = HinGenItem;

    fn disc_units(&self) -> usize {
        self.triples.len()
    }

    fn gen_units(&self) -> usize {
        self.triples.len()
    }

    fn disc_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<HinDiscItem> {
        let d = self.dim();
        let mut items = Vec::with_capacity(units.len() * n_s);
        for &i in units {
            let (h, r, t) = self.triples[i];
            for _ in 0..n_s {
                let r_fake = sample_fake_relation(r, self.num_relations, rng).ok();
                let fake = self.generate(h, r, &draw_eps(d, rng));
                items.push(HinDiscItem { h, r, t, r_fake, fake });
            }
        }
        items
    }

    fn disc_loss(&self, items: &[HinDiscItem], denoms: &Denoms) -> (f64, Grads) {
        let mut g = Grads::new(self.disc_shapes());
        let w = denoms.weight(0);
        let loss = items.iter().map(|it| self.item_loss(it, w, &mut g)).sum();
        (loss, g)
    }

    fn apply_disc(&mut self, grads: &Grads) -> Result<()> {
        self.disc_opt.step(&mut self.disc.tensors_mut(), grads)?;
        self.disc.renormalize();
        Ok(())
    }

    fn disc_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.disc.tensors_mut()
    }

    fn gen_items(&mut self, units: &[usize], n_s: usize, rng: &mut ChaCha8Rng) -> Vec<HinGenItem> {
        let d = self.dim();
        let mut items = Vec::with_capacity(units.len() * n_s);
        for &i in units {
            let (h, r, _) = self.triples[i];
            for _ in 0..n_s {
                items.push(HinGenItem { h, r, eps: draw_eps(d, rng) });
            }
        }
        items
    }

    /// Minimizes `log(1 - D(fake))` by default, `-log(1 - D(fake))` with the
    /// literal sign flag.
    fn gen_loss(&self, items: &[HinGenItem], denoms: &Denoms) -> (f64, Grads) {
        let mut g = Grads::new(self.gen_shapes());
        let mut gf = TransformGrad::zeros(&self.head.f);
        let mut glv = vec![0.0; self.dim()];
        let w = denoms.weight(0);
        let sign = if self.negate_fake_term { -1.0 } else { 1.0 };
        let mut loss = 0.0;
        for it in items {
            let mean = self.noise_mean(it.h, it.r);
            let (fake, cache) = self.head.forward(&mean, &it.eps);
            let dist = self.disc.distance(it.h, it.r, &fake, self.norm);
            let (v, dv) = log1m_sigmoid_clamped(self.margin - dist);
            loss += sign * w * v;
            // d(sign * v)/d(dist) = -sign * dv
            let grad_fake = self
                .disc
                .distance_backward(it.h, it.r, &fake, None, self.norm, -sign * w * dv, None);
            let gm = self.head.backward(&cache, &it.eps, &grad_fake, &mut gf, &mut glv);
            g.rows(SLOT_REL).add_row(it.r, 1.0, &gm);
            let gh = self.gen.project_backward(self.gen.node.row(it.h), it.h, it.r, &gm, Some(&mut g));
            g.rows(SLOT_NODE).add_row(it.h, 1.0, &gh);
        }
        let lv = self.gen_slot_log_var();
        g.dense(lv).copy_from_slice(&glv);
        g.add_transform(lv + 1, &gf);
        (loss, g)
    }

    fn apply_gen(&mut self, grads: &Grads) -> Result<()> {
        let mut params = self.gen.tensors_mut();
        params.push(&mut self.head.log_var);
        params.extend(self.head.f.tensors_mut());
        self.gen_opt.step(&mut params, grads)?;
        self.gen.renormalize();
        Ok(())
    }

    fn gen_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut params = self.gen.tensors_mut();
        params.push(&mut self.head.log_var);
        params.extend(self.head.f.tensors_mut());
        params
    }

    fn tables(&self) -> Vec<(String, &Tensor)> {
        let mut t: Vec<(String, &Tensor)> = Vec::new();
        for (side, tabs) in [("disc", &self.disc), ("gen", &self.gen)] {
            for (name, x) in tabs.names().into_iter().zip(tabs.tensors()) {
                t.push((format!("{side}.{name}"), x));
            }
        }
        t.push(("log_var".into(), &self.head.log_var));
        for (k, x) in ["w1", "b1", "w2", "b2"].iter().zip(self.head.f.tensors()) {
            t.push((format!("f.{k}"), x));
        }
        t
    }

    fn tables_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut t: Vec<(String, &mut Tensor)> = Vec::new();
        for (side, tabs) in [("disc", &mut self.disc), ("gen", &mut self.gen)] {
            let names = tabs.names();
            for (name, x) in names.into_iter().zip(tabs.tensors_mut()) {
                t.push((format!("{side}.{name}"), x));
            }
        }
        t.push(("log_var".into(), &mut self.head.log_var));
        for (k, x) in ["w1", "b1", "w2", "b2"].iter().zip(self.head.f.tensors_mut()) {
            t.push((format!("f.{k}"), x));
        }
        t
    }
}
