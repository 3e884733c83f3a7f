//! Graph text/JSON readers and DOT export.
//!
//! Text format, one statement per line, `#` starts a comment:
//!
//! ```text
//! node 1
//! node 2
//! dir 1 2     # 1 -> 2
//! bi 1 2      # 1 <-> 2
//! ```

use std::fmt::Write as _;

use super::{HiddenMap, MixedGraph, RawGraph};
use crate::error::{Error, Result};

pub fn parse_text(src: &str) -> Result<RawGraph> {
    let mut raw = RawGraph::default();
    for (i, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| Error::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        match parts.as_slice() {
            ["node", label] => raw.nodes.push(label.to_string()),
            ["dir", u, v] => raw.directed.push((u.to_string(), v.to_string())),
            ["bi", u, v] => raw.bidirected.push((u.to_string(), v.to_string())),
            ["node", ..] => return Err(err("expected `node <label>`")),
            ["dir", ..] | ["bi", ..] => return Err(err("expected two vertex labels")),
            [kw, ..] => return Err(err(&format!("unknown statement `{kw}`"))),
            [] => unreachable!(),
        }
    }
    Ok(raw)
}

pub fn parse_json(src: &str) -> Result<RawGraph> {
    serde_json::from_str(src).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })
}

/// Picks the JSON reader when the first non-blank character is `{`.
pub fn parse_auto(src: &str) -> Result<RawGraph> {
    if src.trim_start().starts_with('{') {
        parse_json(src)
    } else {
        parse_text(src)
    }
}

pub fn to_text(g: &MixedGraph) -> String {
    let mut out = String::new();
    for l in g.labels() {
        let _ = writeln!(out, "node {l}");
    }
    for (u, v) in g.directed_edges() {
        let _ = writeln!(out, "dir {} {}", g.label(u), g.label(v));
    }
    for (u, v) in g.bidirected_edges() {
        let _ = writeln!(out, "bi {} {}", g.label(u), g.label(v));
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT rendering. Bidirected edges are drawn undirected with arrowheads at
/// both ends; hidden vertices are unfilled, observed ones shaded.
pub fn to_dot(g: &MixedGraph, hidden: Option<&HiddenMap>) -> String {
    let mut out = String::from("digraph G {\n");
    for (v, l) in g.labels().iter().enumerate() {
        let is_hidden = hidden.is_some_and(|h| h.is_hidden(v));
        let style = if is_hidden {
            "style=solid"
        } else {
            "style=filled, fillcolor=gray80"
        };
        let _ = writeln!(out, "  {} [{style}];", quote(l));
    }
    for (u, v) in g.directed_edges() {
        let _ = writeln!(out, "  {} -> {};", quote(g.label(u)), quote(g.label(v)));
    }
    for (u, v) in g.bidirected_edges() {
        let _ = writeln!(
            out,
            "  {} -> {} [dir=both, arrowhead=normal, arrowtail=normal, style=dashed];",
            quote(g.label(u)),
            quote(g.label(v))
        );
    }
    out.push_str("}\n");
    out
}
