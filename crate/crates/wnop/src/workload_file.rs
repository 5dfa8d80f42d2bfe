//! Workload text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! workload <name>
//! <id> <macs> <ifmap_bytes> <weight_bytes> <ofmap_bytes> <predecessors>
//! ```
//!
//! One line per layer, fields separated by whitespace. Predecessors are
//! comma separated layer ids, or `-` for none. Layers may appear in any
//! order; they are stored topologically sorted.

use std::fmt::Write as _;

use thiserror::Error;
use wnop_core::workload::{Layer, WorkloadError, WorkloadGraph};

#[derive(Debug, Error)]
pub enum WorkloadFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `workload <name>` header")]
    MissingHeader,
    #[error(transparent)]
    Graph(#[from] WorkloadError),
}

pub const EXTENSION: &str = "wl";

pub fn to_text(graph: &WorkloadGraph) -> String {
    let mut out = format!("workload {}\n# id macs ifmap_bytes weight_bytes ofmap_bytes predecessors\n", graph.name());
    for l in graph.layers() {
        let preds = if l.predecessors.is_empty() { "-".to_string() } else { l.predecessors.join(",") };
        writeln!(out, "{} {} {} {} {} {}", l.id, l.macs, l.ifmap_bytes, l.weight_bytes, l.ofmap_bytes, preds).unwrap();
    }
    out
}

pub fn parse(text: &str) -> Result<WorkloadGraph, WorkloadFileError> {
    let mut name = None;
    let mut layers = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| WorkloadFileError::Syntax { line: n + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if name.is_none() {
            match fields.as_slice() {
                ["workload", w] => name = Some(w.to_string()),
                _ => return Err(WorkloadFileError::MissingHeader),
            }
            continue;
        }
        let [id, macs, ifmap, weights, ofmap, preds] = fields.as_slice() else {
            return Err(syntax(format!("expected 6 fields, found {}", fields.len())));
        };
        let int = |field: &str, what: &str| field.parse::<u64>().map_err(|e| syntax(format!("{what} `{field}`: {e}")));
        layers.push(Layer {
            id: id.to_string(),
            macs: int(macs, "macs")?,
            ifmap_bytes: int(ifmap, "ifmap_bytes")?,
            weight_bytes: int(weights, "weight_bytes")?,
            ofmap_bytes: int(ofmap, "ofmap_bytes")?,
            predecessors: match *preds {
                "-" => Vec::new(),
                p => p.split(',').map(String::from).collect(),
            },
        });
    }
    let name = name.ok_or(WorkloadFileError::MissingHeader)?;
    Ok(WorkloadGraph::new(name, layers)?)
}
