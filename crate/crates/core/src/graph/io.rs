use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{Edge, Graph, GraphKind, NameTable};
use crate::error::{AgeError, Result};

/// Data lines of a TAB-separated file as (1-based line number, fields).
/// Blank lines and `#` comments are skipped. Lines without a TAB fall back
/// to whitespace splitting.
pub(crate) fn read_records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path).map_err(|e| AgeError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AgeError::io(path, e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = if trimmed.contains('\t') {
            trimmed.split('\t').map(|f| f.trim().to_string()).collect()
        } else {
            trimmed.split_whitespace().map(str::to_string).collect()
        };
        out.push((i + 1, fields));
    }
    if out.is_empty() {
        return Err(AgeError::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    Ok(out)
}

fn expect_fields(path: &Path, line: usize, fields: &[String], n: usize) -> Result<()> {
    if fields.len() != n || fields.iter().any(|f| f.is_empty()) {
        return Err(AgeError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected {n} non-empty fields, found {}", fields.len()),
        });
    }
    Ok(())
}

/// Loads a `src<TAB>dst` edge list as an undirected or directed graph.
pub fn load_edge_list(path: impl AsRef<Path>, kind: GraphKind) -> Result<Graph> {
    let path = path.as_ref();
    if kind == GraphKind::Heterogeneous {
        return Err(AgeError::invalid("edge lists load as undirected or directed graphs; use load_triples"));
    }
    let mut nodes = NameTable::new();
    let mut raw = Vec::new();
    for (line, fields) in read_records(path)? {
        expect_fields(path, line, &fields, 2)?;
        let u = nodes.intern(&fields[0]);
        let v = nodes.intern(&fields[1]);
        raw.push(Edge::new(u, v));
    }
    let g = Graph::build(kind, nodes, NameTable::new(), raw);
    log_drops(path, &g);
    Ok(g)
}

/// Loads `src<TAB>rel<TAB>dst` triples as a heterogeneous graph.
pub fn load_triples(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let mut nodes = NameTable::new();
    let mut rels = NameTable::new();
    let mut raw = Vec::new();
    for (line, fields) in read_records(path)? {
        expect_fields(path, line, &fields, 3)?;
        let u = nodes.intern(&fields[0]);
        let r = rels.intern(&fields[1]);
        let v = nodes.intern(&fields[2]);
        raw.push(Edge::triple(u, r, v));
    }
    let g = Graph::build(GraphKind::Heterogeneous, nodes, rels, raw);
    log_drops(path, &g);
    Ok(g)
}

/// Attaches `node<TAB>type` tags. Nodes missing from the file get type
/// `untyped`.
pub fn load_node_types(path: impl AsRef<Path>, graph: &mut Graph) -> Result<()> {
    let path = path.as_ref();
    let mut names = NameTable::new();
    let mut types: Vec<Option<usize>> = vec![None; graph.num_nodes()];
    for (line, fields) in read_records(path)? {
        expect_fields(path, line, &fields, 2)?;
        let u = graph
            .node_id(&fields[0])
            .ok_or_else(|| AgeError::UnknownNode(fields[0].clone()))?;
        types[u] = Some(names.intern(&fields[1]));
    }
    let resolved = if types.iter().any(Option::is_none) {
        let fallback = names.intern("untyped");
        types.into_iter().map(|t| t.unwrap_or(fallback)).collect()
    } else {
        types.into_iter().map(Option::unwrap).collect()
    };
    graph.set_node_types(resolved, names);
    Ok(())
}

fn log_drops(path: &Path, g: &Graph) {
    if g.dropped_self_loops() > 0 || g.dropped_duplicates() > 0 {
        log::info!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            g.dropped_self_loops(),
            g.dropped_duplicates()
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn triangle_both_kinds() {
        let f = file("a\tb\nb\tc\na\tc\n");
        let g = load_edge_list(f.path(), GraphKind::Undirected).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (3, 3));
        assert_eq!(g.degree(g.node_id("a").unwrap()), 2);

        let g = load_edge_list(f.path(), GraphKind::Directed).unwrap();
        let a = g.node_id("a").unwrap();
        assert_eq!((g.out_degree(a), g.in_degree(a)), (2, 0));
    }

    #[test]
    fn self_loop_line_is_dropped() {
        let f = file("# comment\na\ta\na\tb\n");
        let g = load_edge_list(f.path(), GraphKind::Undirected).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.dropped_self_loops(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = file("a\tb\nc\n");
        match load_edge_list(f.path(), GraphKind::Undirected) {
            Err(AgeError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = file("# only a comment\n\n");
        assert!(matches!(
            load_edge_list(f.path(), GraphKind::Directed),
            Err(AgeError::EmptyInput { .. })
        ));
        assert!(matches!(load_triples(f.path()), Err(AgeError::EmptyInput { .. })));
    }

    #[test]
    fn triples_multi_relation_and_dedup() {
        let g = load_triples(file("a\tr1\tb\na\tr2\tb\n").path()).unwrap();
        assert_eq!((g.num_edges(), g.num_relations()), (2, 2));
        let g = load_triples(file("a\tr1\tb\na\tr1\tb\n").path()).unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn triple_field_count_checked() {
        match load_triples(file("a\tr1\tb\na\tb\n").path()) {
            Err(AgeError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn node_types_attach() {
        let mut g = load_triples(file("a\tr\tb\nb\tr\tc\n").path()).unwrap();
        load_node_types(file("a\tx\nb\ty\n").path(), &mut g).unwrap();
        let types = g.node_types().unwrap();
        assert_eq!(g.type_names().name(types[2]), "untyped");
        assert_ne!(types[0], types[1]);
    }
}
