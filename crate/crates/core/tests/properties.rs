use std::collections::HashSet;

use age_core::dg::{DgDiscItem, DgGenItem, DgModel, DgOptions};
use age_core::diagnostics::{toy_config, toy_directed, toy_triples, toy_undirected};
use age_core::eval::{auc, f1_scores, precision_at_k};
use age_core::framework::{AdversarialModel, Denoms, Norm};
use age_core::graph::split::{make_negatives, split_edges};
use age_core::graph::{Edge, Graph, GraphKind};
use age_core::hin::{Flavor, HinDiscItem, HinGenItem, HinModel};
use age_core::sampling::{sample_fake_relation, NegativeTable};
use age_core::tensor::dot;
use age_core::ug::{UgDiscItem, UgGenItem, UgModel, WalkSource};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn edge_list(n: usize, max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..n), 1..max)
}

fn fill<M: AdversarialModel>(m: &mut M, values: &[f64]) {
    let mut k = 0;
    for (_, t) in m.tables_mut() {
        for x in t.data_mut() {
            *x = values[k % values.len()];
            k += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn undirected_adjacency_is_symmetric(pairs in edge_list(12, 40)) {
        let g = Graph::from_pairs(GraphKind::Undirected, 12, &pairs);
        for u in 0..12 {
            for nb in g.out_neighbors(u) {
                let v = nb.node as usize;
                prop_assert!(g.out_neighbors(v).iter().any(|x| x.node as usize == u));
                prop_assert_ne!(u, v);
            }
        }
    }

    #[test]
    fn directed_degree_sums_match(pairs in edge_list(12, 40)) {
        let g = Graph::from_pairs(GraphKind::Directed, 12, &pairs);
        let out: usize = (0..12).map(|u| g.out_degree(u)).sum();
        let inn: usize = (0..12).map(|u| g.in_degree(u)).sum();
        prop_assert_eq!(out, g.num_edges());
        prop_assert_eq!(inn, g.num_edges());
    }

    #[test]
    fn split_partitions_edges_and_negatives_are_non_edges(
        pairs in edge_list(15, 60),
        holdout in 0.1f64..0.6,
        gamma in 0.0f64..=1.0,
        seed in any::<u64>(),
        directed in any::<bool>(),
    ) {
        let kind = if directed { GraphKind::Directed } else { GraphKind::Undirected };
        let g = Graph::from_pairs(kind, 15, &pairs);
        prop_assume!(g.num_edges() >= 4);
        // keep_connected may legitimately fail on sparse draws
        let split = match split_edges(&g, holdout, seed, !directed) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let mut union: Vec<Edge> = split.train_graph.edges().to_vec();
        union.extend(split.pos_test.iter().copied());
        let all: HashSet<Edge> = g.edges().iter().copied().collect();
        let got: HashSet<Edge> = union.iter().copied().collect();
        prop_assert_eq!(union.len(), g.num_edges());
        prop_assert_eq!(got, all);
        for e in &split.pos_test {
            prop_assert!(!split.train_graph.contains(e));
        }
        if let Ok(s) = make_negatives(&split, &g, gamma, seed ^ 1) {
            for e in &s.neg_test {
                prop_assert!(!g.has_edge(e.src, e.dst), "{:?}", e);
            }
        }
    }

    #[test]
    fn auc_invariant_under_increasing_maps(
        pos in prop::collection::vec(-5.0f64..5.0, 1..30),
        neg in prop::collection::vec(-5.0f64..5.0, 1..30),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let base = auc(&pos, &neg).unwrap();
        let affine = |v: &[f64]| v.iter().map(|x| a * x + b).collect::<Vec<_>>();
        let exp = |v: &[f64]| v.iter().map(|x| x.exp()).collect::<Vec<_>>();
        prop_assert!((auc(&affine(&pos), &affine(&neg)).unwrap() - base).abs() < 1e-12);
        prop_assert!((auc(&exp(&pos), &exp(&neg)).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn precision_invariant_under_embedding_scaling(
        pairs in edge_list(20, 60),
        emb in prop::collection::vec(-1.0f64..1.0, 20 * 3),
        scale in 0.01f64..100.0,
        k in 1usize..10,
    ) {
        let g = Graph::from_pairs(GraphKind::Undirected, 20, &pairs);
        let e = emb;
        let row = |u: usize, s: f64| e[3 * u..3 * u + 3].iter().map(|x| x * s).collect::<Vec<_>>();
        let sample: Vec<usize> = (0..20).collect();
        let p1 = precision_at_k(&g, k, &sample, |u, v| dot(&row(u, 1.0), &row(v, 1.0))).unwrap();
        let p2 = precision_at_k(&g, k, &sample, |u, v| dot(&row(u, scale), &row(v, scale))).unwrap();
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn micro_f1_equals_accuracy(
        labels in prop::collection::vec((0usize..4, 0usize..4), 1..60),
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        let (micro, macro_) = f1_scores(&pred, &truth, 4).unwrap();
        let acc = pred.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64;
        prop_assert!((micro - acc).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&macro_));
    }

    #[test]
    fn fake_relation_never_real(r in 0usize..6, extra in 1usize..6, seed in any::<u64>()) {
        let n = r + 1 + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let f = sample_fake_relation(r, n, &mut rng).unwrap();
            prop_assert!(f != r && f < n);
        }
    }

    #[test]
    fn negative_table_is_a_distribution(degrees in prop::collection::vec(0usize..50, 1..40)) {
        prop_assume!(degrees.iter().any(|&d| d > 0));
        let t = NegativeTable::from_degrees(&degrees).unwrap();
        let c = t.cumulative();
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((c[c.len() - 1] - 1.0).abs() < 1e-12);
        for (u, &d) in degrees.iter().enumerate() {
            prop_assert_eq!(t.probability(u) == 0.0, d == 0);
        }
    }

    #[test]
    fn losses_finite_for_arbitrary_embeddings(
        values in prop::collection::vec(-1e3f64..1e3, 1..50),
        eps in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let cfg = toy_config(1);

        let mut ug = UgModel::new(&toy_undirected(), &cfg, WalkSource::DeepWalk).unwrap();
        fill(&mut ug, &values);
        let fake = ug.generate(0, &eps);
        let items = vec![
            UgDiscItem::Pair { u: 0, v: 1, negs: vec![3, 4] },
            UgDiscItem::Fake { u: 2, fake },
        ];
        prop_assert!(ug.disc_loss(&items, &Denoms::of(&items)).0.is_finite());
        let gen = vec![UgGenItem { u: 1, eps: eps.clone() }];
        let (l, g) = ug.gen_loss(&gen, &Denoms::of(&gen));
        prop_assert!(l.is_finite() && g.is_finite());

        for star in [false, true] {
            let mut dg = DgModel::new(&toy_directed(), &cfg, DgOptions { star, tied: false }).unwrap();
            fill(&mut dg, &values);
            let (fake_s, fake_t) = dg.generate(1, &eps);
            let items = vec![DgDiscItem::Edge { u: 0, v: 1 }, DgDiscItem::Node { u: 1, fake_s, fake_t }];
            let (l, g) = dg.disc_loss(&items, &Denoms::of(&items));
            prop_assert!(l.is_finite() && g.is_finite());
            let gen = vec![DgGenItem { u: 2, eps: eps.clone() }];
            let (l, g) = dg.gen_loss(&gen, &Denoms::of(&gen));
            prop_assert!(l.is_finite() && g.is_finite());
        }

        for flavor in [Flavor::TransE, Flavor::TransH, Flavor::TransD] {
            let mut hin = HinModel::new(&toy_triples(), &cfg, flavor).unwrap();
            fill(&mut hin, &values);
            let fake = hin.generate(0, 1, &eps);
            let items = vec![HinDiscItem { h: 0, r: 1, t: 4, r_fake: Some(0), fake }];
            let (l, g) = hin.disc_loss(&items, &Denoms::of(&items));
            prop_assert!(l.is_finite() && g.is_finite());
            let gen = vec![HinGenItem { h: 2, r: 1, eps: eps.clone() }];
            let (l, g) = hin.gen_loss(&gen, &Denoms::of(&gen));
            prop_assert!(l.is_finite() && g.is_finite());
        }
    }

    #[test]
    fn hin_distance_nonnegative_and_prob_decreasing(
        values in prop::collection::vec(-3.0f64..3.0, 1..40),
        l1 in any::<bool>(),
    ) {
        for flavor in [Flavor::TransE, Flavor::TransH, Flavor::TransD] {
            let mut hin = HinModel::new(&toy_triples(), &toy_config(2), flavor).unwrap();
            fill(&mut hin, &values);
            hin.norm = if l1 { Norm::L1 } else { Norm::L2 };
            let mut pts = Vec::new();
            for h in 0..5 {
                for t in 0..5 {
                    let d = hin.distance(h, 0, t);
                    prop_assert!(d >= 0.0);
                    pts.push((d, hin.prob(h, 0, t)));
                }
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pts.windows(2) {
                if w[0].0 < w[1].0 {
                    prop_assert!(w[0].1 >= w[1].1);
                }
            }
        }
    }
}
