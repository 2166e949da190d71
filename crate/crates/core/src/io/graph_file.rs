//! Line-oriented graph files.
//!
//! ```text
//! # comment
//! vertex a
//! vertex b
//! edge ab a b 3/2
//! general a
//! ```

use crate::graph::{GraphError, Multigraph, VertexId};
use crate::rational::{format, parse};
use num::Signed;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_graph(text: &str) -> Result<(Multigraph, VertexId), ParseError> {
    let mut g = Multigraph::new();
    let mut general: Option<VertexId> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let err = |message: String| ParseError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let vertex = |g: &Multigraph, name: &str| {
            g.vertex_by_name(name)
                .ok_or_else(|| err(format!("unknown vertex {name:?}")))
        };
        match words.as_slice() {
            ["vertex", name] => {
                g.add_vertex(*name).map_err(|e| err(e.to_string()))?;
            }
            ["edge", name, a, b, w] => {
                let w = parse(w).map_err(|e| err(e.to_string()))?;
                if !w.is_positive() {
                    return Err(err(format!("edge {name:?} needs a positive weight")));
                }
                let (a, b) = (vertex(&g, a)?, vertex(&g, b)?);
                if a == b {
                    return Err(err(format!("edge {name:?} is a self-loop")));
                }
                g.add_edge(*name, a, b, w).map_err(|e| err(e.to_string()))?;
            }
            ["general", name] => {
                if general.is_some() {
                    return Err(err("general given twice".into()));
                }
                general = Some(vertex(&g, name)?);
            }
            _ => return Err(err(format!("cannot read {content:?}"))),
        }
    }
    let general = general.ok_or(ParseError {
        line: last_line,
        message: "missing general".into(),
    })?;
    g.validate().map_err(|e: GraphError| ParseError {
        line: last_line,
        message: e.to_string(),
    })?;
    Ok((g, general))
}

/// Canonical text form; parsing it gives back an identical graph.
pub fn format_graph(g: &Multigraph, general: VertexId) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        out.push_str(&format!("vertex {}\n", g.vertex_name(v)));
    }
    for e in g.edges() {
        let (a, b) = g.endpoints(e);
        out.push_str(&format!(
            "edge {} {} {} {}\n",
            g.edge_name(e),
            g.vertex_name(a),
            g.vertex_name(b),
            format(g.weight(e))
        ));
    }
    out.push_str(&format!("general {}\n", g.vertex_name(general)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    const PATH: &str = "# two edges\nvertex a\nvertex b\nvertex c\nedge ab a b 2\nedge bc b c 1/1 # light\ngeneral b\n";

    #[test]
    fn reads_a_path() {
        let (g, general) = parse_graph(PATH).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.vertex_name(general), "b");
        let again = format_graph(&g, general);
        assert_eq!(parse_graph(&again).unwrap().0, g);
        let (g, _) = parse_graph("vertex a\nvertex b\nedge e a b 3/2\ngeneral a\n").unwrap();
        assert_eq!(g.weight(g.edge_by_name("e").unwrap()), &frac(3, 2));
    }

    #[test]
    fn reports_errors() {
        let e = parse_graph("vertex a\nvertex b\nedge e a b -1\ngeneral a\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(parse_graph("vertex a\nvertex b\nedge e a b 1\n")
            .unwrap_err()
            .message
            .contains("general"));
        assert_eq!(parse_graph("vertex a\nedge e a z 1\n").unwrap_err().line, 2);
        assert_eq!(
            parse_graph("vertex a\nvertex b\nvertex c\nedge e a b 1\ngeneral a\n")
                .unwrap_err()
                .message,
            "graph is disconnected"
        );
        assert_eq!(
            parse_graph("vertex a\ngeneral a\n").unwrap_err().message,
            "graph has no edges"
        );
        assert_eq!(parse_graph("frobnicate\n").unwrap_err().line, 1);
        assert!(parse_graph("vertex a\nvertex b\nedge e a b 1/0\ngeneral a\n").is_err());
    }
}
