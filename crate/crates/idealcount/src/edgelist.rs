//! Plain-text edge lists.
//!
//! One record per line: `parent<TAB>child` for an edge, a single name for a
//! vertex without edges. Any run of whitespace separates the two fields.
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;

use idealcount_core::{Dag, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum EdgeListError {
    #[error("line {line}: expected `parent<TAB>child` or a single vertex, found {found:?}")]
    Malformed { line: usize, found: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn parse_edge_list(text: &str) -> Result<Dag, EdgeListError> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[..] {
            [v] => vertices.push(v),
            [u, v] => {
                vertices.push(u);
                vertices.push(v);
                edges.push((u, v));
            }
            _ => {
                return Err(EdgeListError::Malformed {
                    line: i + 1,
                    found: raw.to_string(),
                })
            }
        }
    }
    Ok(Dag::build(vertices, edges)?)
}

/// Every vertex on its own line, then every edge. Parsing the output gives
/// back an equal graph.
pub fn write_edge_list(d: &Dag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vertices={} edges={}", d.len(), d.edge_count());
    for name in d.names() {
        out.push_str(name);
        out.push('\n');
    }
    for (u, v) in d.edges() {
        let _ = writeln!(out, "{}\t{}", d.name(u), d.name(v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let d = parse_edge_list("# diamond\na\tb\na\tc\nb d\nc\td\n\nz\n").unwrap();
        assert_eq!((d.len(), d.edge_count()), (5, 4));
        assert_eq!(parse_edge_list(&write_edge_list(&d)).unwrap(), d);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_edge_list("a\tb\tc\n"),
            Err(EdgeListError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("a\tb\nb\ta\n"),
            Err(EdgeListError::Graph(GraphError::CycleDetected(_)))
        ));
    }
}
