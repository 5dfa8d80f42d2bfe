//! Mapping text format.
//!
//! ```text
//! mapping <workload> <layer count>
//! <layer id> <dram> <chiplet>:<share> [<chiplet>:<share> ...]
//! ```
//!
//! Nodes are written `c<index>` (compute, row-major) and `d<index>` (DRAM).
//! Shares are printed in shortest round-trip form, so a saved mapping loads
//! back bit-exactly. Layers appear in the workload's stored order.

use std::fmt::Write as _;

use thiserror::Error;
use wnop_core::mapper::{LayerMapping, MapError, Mapping, Placement};
use wnop_core::topology::{Layout, NodeId};
use wnop_core::workload::WorkloadGraph;

#[derive(Debug, Error)]
pub enum MappingFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("mapping is for workload `{found}`, expected `{expected}`")]
    Workload { expected: String, found: String },
    #[error("mapping has {found} layers, workload `{workload}` has {expected}")]
    LayerCount { workload: String, expected: usize, found: usize },
    #[error("line {line}: layer `{found}` where `{expected}` was expected")]
    LayerOrder { line: usize, expected: String, found: String },
    #[error(transparent)]
    Invalid(#[from] MapError),
}

pub const EXTENSION: &str = "map";

pub fn to_text(graph: &WorkloadGraph, mapping: &Mapping) -> String {
    let mut out = format!("mapping {} {}\n", graph.name(), mapping.len());
    for (layer, m) in graph.layers().iter().zip(mapping.layers()) {
        write!(out, "{} {}", layer.id, m.dram).unwrap();
        for p in &m.placement {
            write!(out, " {}:{}", p.chiplet, p.share).unwrap();
        }
        out.push('\n');
    }
    out
}

fn node(text: &str) -> Option<NodeId> {
    let (kind, index) = text.split_at(text.char_indices().nth(1)?.0);
    let index = index.parse().ok()?;
    match kind {
        "c" => Some(NodeId::compute(index)),
        "d" => Some(NodeId::dram(index)),
        _ => None,
    }
}

pub fn parse(text: &str, graph: &WorkloadGraph, layout: &Layout) -> Result<Mapping, MappingFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let syntax = |line: usize, message: &str| MappingFileError::Syntax { line, message: message.into() };

    let (n, header) = lines.next().ok_or_else(|| syntax(1, "empty mapping file"))?;
    let [tag, workload, count] = header.split_whitespace().collect::<Vec<_>>()[..] else {
        return Err(syntax(n, "expected `mapping <workload> <layer count>`"));
    };
    if tag != "mapping" {
        return Err(syntax(n, "expected `mapping <workload> <layer count>`"));
    }
    if workload != graph.name() {
        return Err(MappingFileError::Workload { expected: graph.name().into(), found: workload.into() });
    }
    let count: usize = count.parse().map_err(|_| syntax(n, "bad layer count"))?;
    if count != graph.len() {
        return Err(MappingFileError::LayerCount { workload: workload.into(), expected: graph.len(), found: count });
    }

    let mut layers = Vec::with_capacity(count);
    for (n, line) in lines {
        let mut fields = line.split_whitespace();
        let id = fields.next().unwrap_or_default();
        let expected = graph.layers().get(layers.len()).map(|l| l.id.as_str()).unwrap_or("<end of file>");
        if id != expected {
            return Err(MappingFileError::LayerOrder { line: n, expected: expected.into(), found: id.into() });
        }
        let dram = fields.next().and_then(node).ok_or_else(|| syntax(n, "missing or bad DRAM node"))?;
        let placement = fields
            .map(|f| {
                let (c, s) = f.split_once(':')?;
                Some(Placement { chiplet: node(c)?, share: s.parse().ok()? })
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| syntax(n, "placements must be `<chiplet>:<share>`"))?;
        layers.push(LayerMapping { placement, dram });
    }
    if layers.len() != count {
        return Err(MappingFileError::LayerCount { workload: workload.into(), expected: count, found: layers.len() });
    }
    Ok(Mapping::new(layers, layout)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wnop_core::mapper::{map_workload, Strategy};
    use wnop_core::topology::{ArchitectureSpec, Package};

    #[test]
    fn round_trip_is_exact() {
        let package = Package::new(ArchitectureSpec::default()).unwrap();
        let graph = wnop_core::zoo::build("googlenet").unwrap();
        let strategy = Strategy::Annealed { groups: 3, seed: 5, iterations: 50 };
        let mapping = map_workload(&graph, &package, strategy).unwrap();
        let text = to_text(&graph, &mapping);
        let back = parse(&text, &graph, package.layout()).unwrap();
        assert_eq!(back, mapping);
        assert_eq!(to_text(&graph, &back), text);
    }

    #[test]
    fn mismatches_are_rejected() {
        let package = Package::new(ArchitectureSpec::default()).unwrap();
        let layout = package.layout();
        let graph = wnop_core::workload::WorkloadGraph::new(
            "w",
            vec![wnop_core::workload::Layer {
                id: "a".into(),
                macs: 1,
                ifmap_bytes: 1,
                weight_bytes: 1,
                ofmap_bytes: 1,
                predecessors: Vec::new(),
            }],
        )
        .unwrap();
        assert!(parse("mapping w 1\na d0 c0:1\n", &graph, layout).is_ok());
        assert!(matches!(parse("mapping v 1\na d0 c0:1", &graph, layout), Err(MappingFileError::Workload { .. })));
        assert!(matches!(parse("mapping w 2\na d0 c0:1", &graph, layout), Err(MappingFileError::LayerCount { .. })));
        assert!(matches!(parse("mapping w 1\nb d0 c0:1", &graph, layout), Err(MappingFileError::LayerOrder { .. })));
        assert!(matches!(parse("mapping w 1\na d0 c0=1", &graph, layout), Err(MappingFileError::Syntax { .. })));
        assert!(matches!(parse("mapping w 1\na d0 c0:0.5", &graph, layout), Err(MappingFileError::Invalid(_))));
        assert!(matches!(parse("mapping w 1\na d9 c0:1", &graph, layout), Err(MappingFileError::Invalid(_))));
    }
}
