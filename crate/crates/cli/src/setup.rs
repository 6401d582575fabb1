//! Shared input handling: configuration, graphs, checkpoints and output.

use std::path::Path;

use age_core::eval::Report;
use age_core::framework::{Checkpoint, TrainConfig};
use age_core::graph::{load_edge_list, load_node_types, load_triples, Graph, GraphKind};
use age_core::pipeline::{provenance, TrainedModel, Variant};
use anyhow::{Context, Result};
use serde_json::{Map, Value};

use crate::{usage, ConfigArgs, GraphArgs, GraphKindArg, OutputArgs};

/// Reads a flat `key=value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str, cfg: &mut TrainConfig, origin: &str) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(usage(format!("{origin}:{}: expected key=value, got `{line}`", i + 1)));
        };
        cfg.set(k.trim(), v.trim())
            .map_err(|e| usage(format!("{origin}:{}: {e}", i + 1)))?;
    }
    Ok(())
}

/// Defaults, then the config file, then `--set` overrides, then `--seed`
/// and `--threads`. The result is validated before it is returned.
pub fn build_config(args: &ConfigArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        parse_config_text(&text, &mut cfg, &path.display().to_string())?;
    }
    for kv in &args.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| usage(format!("--set {kv}: {e}")))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.threads = args.threads;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_variant(name: &str) -> Result<Variant> {
    name.parse::<Variant>().map_err(|_| {
        let all: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        usage(format!("unknown variant `{name}`; expected one of {}", all.join(", ")))
    })
}

/// Number of fields on the first data line, for a friendlier error when
/// an edge list is handed to a triple model.
fn first_record_width(path: &Path) -> Option<usize> {
    let text = std::fs::read_to_string(path).ok()?;
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| if l.contains('\t') { l.split('\t').count() } else { l.split_whitespace().count() })
}

/// Loads `--graph` as the kind named by `--graph-kind`, or as `default`.
pub fn load_graph(args: &GraphArgs, default: GraphKind) -> Result<Graph> {
    let kind = match args.graph_kind {
        Some(GraphKindArg::Undirected) => GraphKind::Undirected,
        Some(GraphKindArg::Directed) => GraphKind::Directed,
        Some(GraphKindArg::Triples) => GraphKind::Heterogeneous,
        None => default,
    };
    let mut g = if kind == GraphKind::Heterogeneous {
        if first_record_width(&args.graph) == Some(2) {
            return Err(usage(format!(
                "{} looks like an edge list; heterogeneous models need `head relation tail` triples",
                args.graph.display()
            )));
        }
        load_triples(&args.graph)?
    } else {
        load_edge_list(&args.graph, kind)?
    };
    if let Some(types) = &args.types {
        load_node_types(types, &mut g)?;
    }
    log::info!(
        "{}: {} nodes, {} edges ({})",
        args.graph.display(),
        g.num_nodes(),
        g.num_edges(),
        g.kind().name()
    );
    Ok(g)
}

pub fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned())
}

/// Loads a checkpoint and the graph it was trained over.
pub fn load_model(ckpt_path: &Path, graph: &GraphArgs) -> Result<(TrainedModel, TrainConfig, Graph)> {
    let ckpt = Checkpoint::load(ckpt_path)?;
    let variant = parse_variant(&ckpt.variant)?;
    let g = load_graph(graph, variant.graph_kind())?;
    let (model, cfg) = TrainedModel::from_checkpoint(&ckpt, &g)
        .with_context(|| format!("restoring {} over {}", ckpt_path.display(), graph.graph.display()))?;
    Ok((model, cfg, g))
}

pub fn provenance_json(prov: &[(String, String)]) -> Map<String, Value> {
    prov.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect()
}

/// JSON lines to `--out` (or stdout), and a CSV when `--csv` is given.
pub fn emit(report: &Report, out: &OutputArgs, cfg: &TrainConfig, extra: &[(&str, String)]) -> Result<()> {
    let prov = provenance(cfg, extra);
    let header = serde_json::json!({ "provenance": provenance_json(&prov) });
    let body = format!("{header}\n{}", report.to_json_lines());
    match &out.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{body}"),
    }
    if let Some(path) = &out.csv {
        report.write_csv(path, &prov)?;
    }
    Ok(())
}
