use std::fmt;
use std::io::Write;
use std::path::Path;

use age_core::diagnostics::run_grad_checks;
use age_core::eval::{
    graph_reconstruction, link_prediction_auc, lp_splits, nc_sweep, node_classification, LpSettings, MetricRecord,
    Report, SWEEP_RATIOS,
};
use age_core::framework::TrainConfig;
use age_core::graph::split::EvalSplit;
use age_core::graph::{load_labels, Graph, GraphKind, LabelSet};
use age_core::pipeline::{provenance, TrainedModel, Variant};
use age_core::AgeError;
use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use crate::setup::{build_config, dataset_name, emit, load_graph, load_model, parse_variant, provenance_json};
use crate::{usage, CheckGradArgs, EvaluateArgs, ReconstructArgs, SweepArgs, SweepKind, Task, TrainArgs};

#[derive(Debug)]
pub struct GradCheckFailed(pub usize);

impl fmt::Display for GradCheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} gradient check(s) exceeded the tolerance", self.0)
    }
}

impl std::error::Error for GradCheckFailed {}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn fit(variant: Variant, graph: &Graph, cfg: &TrainConfig) -> Result<TrainedModel> {
    let mut m = TrainedModel::build(variant, graph, cfg)?;
    m.fit(cfg, |e| log::info!("epoch {}: D {:.5} G {:.5}", e.epoch, e.disc_loss, e.gen_loss))?;
    Ok(m)
}

fn load_label_file(path: Option<&Path>, graph: &Graph) -> Result<LabelSet> {
    let path = path.ok_or_else(|| usage("node classification needs --labels"))?;
    Ok(load_labels(path, graph)?)
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let variant = parse_variant(&a.variant)?;
    let cfg = build_config(&a.config)?;
    let graph = load_graph(&a.graph, variant.graph_kind())?;
    if graph.kind() != variant.graph_kind() {
        return Err(usage(format!(
            "variant {variant} needs a {} graph, got a {} one",
            variant.graph_kind().name(),
            graph.kind().name()
        )));
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let prov = provenance(&cfg, &[("variant", variant.name().into())]);
    let prov_json = provenance_json(&prov);

    let mut split_info = Vec::new();
    let train_graph = if a.holdout {
        let splits = lp_splits(&graph, &LpSettings::for_kind(graph.kind()), cfg.seed)?;
        for s in &splits {
            let name = format!("split_gamma{}.tsv", s.gamma);
            s.write(a.out.join(&name), &graph)?;
            split_info.push(json!({ "file": name, "gamma": s.gamma, "holdout": s.holdout, "hash": s.hash(&graph) }));
        }
        splits[0].train_graph.clone()
    } else {
        graph.clone()
    };

    let epochs_path = a.out.join("epochs.jsonl");
    let mut epochs = std::io::BufWriter::new(
        std::fs::File::create(&epochs_path).with_context(|| format!("creating {}", epochs_path.display()))?,
    );
    writeln!(epochs, "{}", json!({ "provenance": prov_json }))?;
    let mut write_err = None;
    let mut model = TrainedModel::build(variant, &train_graph, &cfg)?;
    let report = model.fit(&cfg, |e| {
        log::info!("epoch {}: D {:.5} G {:.5} ({:.2}s)", e.epoch, e.disc_loss, e.gen_loss, e.seconds);
        let line = serde_json::to_string(e).expect("epoch report serializes");
        if let Err(err) = writeln!(epochs, "{line}").and_then(|_| epochs.flush()) {
            write_err.get_or_insert(err);
        }
    })?;
    if let Some(err) = write_err {
        return Err(err).with_context(|| format!("writing {}", epochs_path.display()));
    }
    drop(epochs);

    let mut files = vec!["epochs.jsonl".to_string(), "model.ckpt".to_string()];
    for (name, text) in model.embedding_files(&graph) {
        write_file(&a.out.join(&name), text)?;
        files.push(name);
    }
    model.checkpoint(&cfg).save(a.out.join("model.ckpt"))?;

    let config: Map<String, Value> = cfg.to_kv().into_iter().map(|(k, v)| (k, Value::from(v))).collect();
    let manifest = json!({
        "provenance": prov_json,
        "variant": variant.name(),
        "dataset": dataset_name(&a.graph.graph),
        "graph": { "kind": graph.kind().name(), "nodes": graph.num_nodes(), "edges": graph.num_edges() },
        "train_edges": train_graph.num_edges(),
        "config": config,
        "splits": split_info,
        "files": files,
        "training": {
            "epochs": report.epochs.len(),
            "n_disc_updates": report.n_disc_updates,
            "n_gen_updates": report.n_gen_updates,
            "disc_steps": report.disc_steps,
            "gen_steps": report.gen_steps,
            "wall_seconds": report.wall_seconds,
        },
    });
    write_file(&a.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    log::info!("wrote {} files to {}", files.len() + 1, a.out.display());
    Ok(())
}

fn lp_record(variant: Variant, dataset: &str, seed: u64, split: &EvalSplit, graph: &Graph, auc: f64) -> MetricRecord {
    MetricRecord::new("lp", variant.name(), dataset, seed, "auc", auc)
        .param("gamma", split.gamma)
        .param("split_seed", split.seed.to_string())
        .param("holdout", split.holdout)
        .param("split_hash", split.hash(graph))
}

fn nc_records(variant: Variant, dataset: &str, seed: u64, ratio: f64, o: &age_core::eval::NcOutcome) -> [MetricRecord; 2] {
    let rec = |metric, value| {
        MetricRecord::new("nc", variant.name(), dataset, seed, metric, value)
            .param("train_ratio", ratio)
            .param("n_train", o.n_train)
            .param("n_test", o.n_test)
    };
    [rec("micro_f1", o.micro_f1), rec("macro_f1", o.macro_f1)]
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (model, cfg, graph) = load_model(&a.checkpoint, &a.graph)?;
    let variant = model.variant();
    let dataset = dataset_name(&a.graph.graph);
    let mut report = Report::default();
    match a.task {
        Task::Lp => {
            if a.split.is_empty() {
                return Err(usage("link prediction needs at least one --split file"));
            }
            for path in &a.split {
                let split = EvalSplit::read(path, &graph)?;
                let auc = link_prediction_auc(&model, &split).with_context(|| format!("scoring {}", path.display()))?;
                report.push(lp_record(variant, &dataset, cfg.seed, &split, &graph, auc));
            }
        }
        Task::Nc => {
            let labels = load_label_file(a.labels.as_deref(), &graph)?;
            let o = node_classification(&model, &labels, a.train_ratio, None, a.l2, a.seed)?;
            for r in nc_records(variant, &dataset, a.seed, a.train_ratio, &o) {
                report.push(r.param("l2", a.l2));
            }
        }
    }
    emit(&report, &a.output, &cfg, &[("checkpoint", a.checkpoint.display().to_string())])
}

fn gr_report(variant: Variant, dataset: &str, seed: u64, fraction: f64, rows: &[(usize, f64)]) -> Report {
    let mut report = Report::default();
    for &(k, p) in rows {
        report.push(
            MetricRecord::new("gr", variant.name(), dataset, seed, "precision_at_k", p)
                .param("k", k)
                .param("sample_fraction", fraction),
        );
    }
    report
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let (model, cfg, graph) = load_model(&a.checkpoint, &a.graph)?;
    let rows = graph_reconstruction(&graph, &model, a.sample_fraction, &a.ks, a.seed)?;
    let report = gr_report(model.variant(), &dataset_name(&a.graph.graph), a.seed, a.sample_fraction, &rows);
    emit(&report, &a.output, &cfg, &[("checkpoint", a.checkpoint.display().to_string())])
}

/// Splits for the edge-sparsity sweep. When the connectivity constraint
/// cannot be met at a high holdout, the split is redrawn without it.
fn sparsity_splits(graph: &Graph, settings: &LpSettings, seed: u64) -> Result<(Vec<EvalSplit>, bool)> {
    match lp_splits(graph, settings, seed) {
        Ok(s) => Ok((s, settings.keep_connected)),
        Err(AgeError::SplitInfeasible { achieved, target }) if settings.keep_connected => {
            log::warn!(
                "holdout {}: only {achieved} of {target} edges removable while keeping nodes connected; \
                 redrawing without the constraint",
                settings.holdout
            );
            let relaxed = LpSettings {
                keep_connected: false,
                ..settings.clone()
            };
            Ok((lp_splits(graph, &relaxed, seed)?, false))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let variant = parse_variant(&a.variant)?;
    let cfg = build_config(&a.config)?;
    let graph = load_graph(&a.graph, variant.graph_kind())?;
    let dataset = dataset_name(&a.graph.graph);
    let seed = cfg.seed;
    let model_for_full_graph = || -> Result<TrainedModel> {
        match &a.checkpoint {
            Some(path) => {
                let ckpt = age_core::framework::Checkpoint::load(path)?;
                Ok(TrainedModel::from_checkpoint(&ckpt, &graph)?.0)
            }
            None => fit(variant, &graph, &cfg),
        }
    };
    if a.checkpoint.is_some() && matches!(a.kind, SweepKind::Gamma | SweepKind::Edges) {
        return Err(usage("gamma and edge sweeps train on held-out splits; --checkpoint is not accepted"));
    }
    let mut settings = LpSettings::for_kind(graph.kind());
    if !a.gammas.is_empty() {
        settings.gammas = a.gammas.clone();
    }

    let mut report = Report::default();
    match a.kind {
        SweepKind::Sparsity => {
            let labels = load_label_file(a.labels.as_deref(), &graph)?;
            let model = model_for_full_graph()?;
            for (ratio, o) in nc_sweep(&model, &labels, a.l2, seed)? {
                for r in nc_records(variant, &dataset, seed, ratio, &o) {
                    report.push(r.param("test_fraction", 0.1));
                }
            }
        }
        SweepKind::K => {
            let model = model_for_full_graph()?;
            let rows = graph_reconstruction(&graph, &model, a.sample_fraction, &a.ks, seed)?;
            report = gr_report(variant, &dataset, seed, a.sample_fraction, &rows);
        }
        SweepKind::Gamma => {
            if graph.kind() != GraphKind::Directed {
                return Err(usage("the gamma sweep applies to directed graphs"));
            }
            let splits = lp_splits(&graph, &settings, seed)?;
            let model = fit(variant, &splits[0].train_graph, &cfg)?;
            for s in &splits {
                report.push(lp_record(variant, &dataset, seed, s, &graph, link_prediction_auc(&model, s)?));
            }
        }
        SweepKind::Edges => {
            for ratio in SWEEP_RATIOS {
                let st = LpSettings {
                    holdout: 1.0 - ratio,
                    ..settings.clone()
                };
                let (splits, connected) = sparsity_splits(&graph, &st, seed)?;
                let model = fit(variant, &splits[0].train_graph, &cfg)?;
                for s in &splits {
                    let auc = link_prediction_auc(&model, s)?;
                    report.push(
                        lp_record(variant, &dataset, seed, s, &graph, auc)
                            .param("train_ratio", ratio)
                            .param("keep_connected", connected),
                    );
                }
            }
        }
    }
    emit(&report, &a.output, &cfg, &[("variant", variant.name().into())])
}

pub fn check_grad(a: &CheckGradArgs) -> Result<()> {
    let lines = run_grad_checks(a.seed);
    for l in &lines {
        if a.json {
            println!("{}", serde_json::to_string(l)?);
        } else {
            println!(
                "{} {:<13} {:<24} max_rel_err={:.3e} checked={}",
                if l.passed { "PASS" } else { "FAIL" },
                l.variant,
                l.op,
                l.max_rel_err,
                l.checked
            );
        }
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    if failed > 0 {
        return Err(GradCheckFailed(failed).into());
    }
    if !a.json {
        println!("all {} checks passed", lines.len());
    }
    Ok(())
}
