//! Finite-difference verification of every loss in every model family on
//! small built-in graphs, with noise frozen inside the batch items.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dg::{DgModel, DgOptions};
use crate::framework::{AdversarialModel, Denoms, TrainConfig};
use crate::graph::{Graph, GraphKind};
use crate::hin::{Flavor, HinModel};
use crate::tensor::{check_tensors, GradCheckReport};
use crate::ug::{UgDiscItem, UgModel, WalkSource};

pub const GRAD_EPS: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GradCheckLine {
    pub variant: String,
    pub op: String,
    pub max_rel_err: f64,
    pub checked: usize,
    pub passed: bool,
}

impl GradCheckLine {
    fn new(variant: &str, op: &str, r: GradCheckReport) -> Self {
        GradCheckLine {
            variant: variant.into(),
            op: op.into(),
            max_rel_err: r.max_rel_err,
            checked: r.checked,
            passed: r.max_rel_err <= GRAD_TOL && r.max_rel_err.is_finite(),
        }
    }
}

/// Small configuration used for every check.
pub fn toy_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig {
        dim: 6,
        hidden: 5,
        seed,
        neg_k: 3,
        ..TrainConfig::default()
    };
    cfg.walk.num_walks = 2;
    cfg.walk.walk_length = 8;
    cfg.walk.window = 2;
    cfg
}

pub fn toy_undirected() -> Graph {
    Graph::from_pairs(GraphKind::Undirected, 5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)])
}

pub fn toy_directed() -> Graph {
    Graph::from_pairs(GraphKind::Directed, 4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
}

pub fn toy_triples() -> Graph {
    Graph::from_triples(
        5,
        2,
        &[(0, 0, 1), (1, 0, 2), (2, 1, 3), (3, 1, 4), (0, 1, 4), (4, 0, 2)],
    )
}

/// Replaces every parameter with draws large enough to exercise the
/// nonlinearities (initial tables are nearly zero).
fn scramble<M: AdversarialModel>(model: &mut M, rng: &mut ChaCha8Rng) {
    for (name, t) in model.tables_mut() {
        let scale = if name.contains("log_var") { 0.3 } else { 0.6 };
        t.data_mut().iter_mut().for_each(|x| *x = rng.random_range(-scale..scale));
    }
}

fn check_disc<M: AdversarialModel>(model: &mut M, items: &[M::DiscItem], rng: &mut ChaCha8Rng) -> GradCheckReport {
    let denoms = Denoms::of(items);
    let (_, grads) = model.disc_loss(items, &denoms);
    check_tensors(
        model,
        |m| m.disc_tensors_mut(),
        |m| m.disc_loss(items, &denoms).0,
        &grads,
        GRAD_EPS,
        usize::MAX,
        rng,
    )
}

fn check_gen<M: AdversarialModel>(model: &mut M, items: &[M::GenItem], rng: &mut ChaCha8Rng) -> GradCheckReport {
    let denoms = Denoms::of(items);
    let (_, grads) = model.gen_loss(items, &denoms);
    check_tensors(
        model,
        |m| m.gen_tensors_mut(),
        |m| m.gen_loss(items, &denoms).0,
        &grads,
        GRAD_EPS,
        usize::MAX,
        rng,
    )
}

fn all_units(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn ug_checks(source: WalkSource, seed: u64, out: &mut Vec<GradCheckLine>) {
    let graph = toy_undirected();
    let cfg = toy_config(seed);
    let mut m = UgModel::new(&graph, &cfg, source).expect("toy undirected model");
    let name = m.variant_name();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scramble(&mut m, &mut rng);
    let items = m.disc_items(&all_units(m.disc_units()), 2, &mut rng);
    let pairs: Vec<UgDiscItem> = items.iter().filter(|i| matches!(i, UgDiscItem::Pair { .. })).cloned().collect();
    let fakes: Vec<UgDiscItem> = items.iter().filter(|i| matches!(i, UgDiscItem::Fake { .. })).cloned().collect();
    out.push(GradCheckLine::new(name, "disc_structure", check_disc(&mut m, &pairs, &mut rng)));
    out.push(GradCheckLine::new(name, "disc_adversarial", check_disc(&mut m, &fakes, &mut rng)));
    out.push(GradCheckLine::new(name, "disc_total", check_disc(&mut m, &items, &mut rng)));
    let gen = m.gen_items(&all_units(m.gen_units()), 2, &mut rng);
    out.push(GradCheckLine::new(name, "gen", check_gen(&mut m, &gen, &mut rng)));
}

fn dg_checks(opts: DgOptions, seed: u64, out: &mut Vec<GradCheckLine>) {
    let graph = toy_directed();
    let cfg = toy_config(seed);
    let mut m = DgModel::new(&graph, &cfg, opts).expect("toy directed model");
    let name = m.variant_name();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scramble(&mut m, &mut rng);
    m.begin_disc_pass(&mut rng);
    let items = m.disc_items(&all_units(m.disc_units()), 2, &mut rng);
    out.push(GradCheckLine::new(name, "disc", check_disc(&mut m, &items, &mut rng)));
    let gen = m.gen_items(&all_units(m.gen_units()), 2, &mut rng);
    out.push(GradCheckLine::new(name, "gen", check_gen(&mut m, &gen, &mut rng)));
}

fn hin_checks(flavor: Flavor, seed: u64, out: &mut Vec<GradCheckLine>) {
    let graph = toy_triples();
    let name = flavor.variant_name();
    for (op, norm, literal) in [
        ("l2", crate::framework::Norm::L2, false),
        ("l1", crate::framework::Norm::L1, false),
        ("l2_literal_sign", crate::framework::Norm::L2, true),
    ] {
        let mut cfg = toy_config(seed);
        cfg.norm = norm;
        cfg.negate_fake_term = literal;
        let mut m = HinModel::new(&graph, &cfg, flavor).expect("toy heterogeneous model");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        scramble(&mut m, &mut rng);
        if !literal {
            let items = m.disc_items(&all_units(m.disc_units()), 2, &mut rng);
            out.push(GradCheckLine::new(name, &format!("disc_{op}"), check_disc(&mut m, &items, &mut rng)));
        }
        let gen = m.gen_items(&all_units(m.gen_units()), 2, &mut rng);
        out.push(GradCheckLine::new(name, &format!("gen_{op}"), check_gen(&mut m, &gen, &mut rng)));
    }
}

/// One line per (variant, loss op).
pub fn run_grad_checks(seed: u64) -> Vec<GradCheckLine> {
    let mut out = Vec::new();
    ug_checks(WalkSource::DeepWalk, seed, &mut out);
    ug_checks(WalkSource::Node2vec, seed, &mut out);
    dg_checks(DgOptions::default(), seed, &mut out);
    dg_checks(DgOptions { star: true, tied: false }, seed, &mut out);
    dg_checks(DgOptions { star: false, tied: true }, seed, &mut out);
    for flavor in [Flavor::TransE, Flavor::TransH, Flavor::TransD] {
        hin_checks(flavor, seed, &mut out);
    }
    out
}
