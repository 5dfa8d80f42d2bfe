#![allow(dead_code)]

use proptest::prelude::*;
use wnop_core::mapper::{map_workload, Mapping, Strategy as MapStrategy};
use wnop_core::topology::{midpoint_attach_points, ArchitectureSpec, Package};
use wnop_core::workload::{Layer, WorkloadGraph};

pub fn default_package() -> Package {
    Package::new(ArchitectureSpec::default()).unwrap()
}

/// Small grids with 0 to 4 edge DRAMs.
pub fn arb_spec() -> impl Strategy<Value = ArchitectureSpec> {
    (1usize..=4, 1usize..=4, 0usize..=4).prop_map(|(rows, cols, drams)| ArchitectureSpec {
        grid_rows: rows,
        grid_cols: cols,
        dram_attach_points: midpoint_attach_points(rows, cols, drams).unwrap(),
        ..ArchitectureSpec::default()
    })
}

/// Random DAG: each layer may read from up to three earlier layers.
pub fn arb_graph(max_layers: usize) -> impl Strategy<Value = WorkloadGraph> {
    prop::collection::vec(
        (
            1u64..5_000_000_000,
            0u64..50_000_000,
            0u64..20_000_000,
            1u64..50_000_000,
            prop::collection::vec(any::<prop::sample::Index>(), 0..=3),
        ),
        1..=max_layers,
    )
    .prop_map(|rows| {
        let layers = rows
            .iter()
            .enumerate()
            .map(|(i, (macs, ifmap, weights, ofmap, preds))| {
                let mut p: Vec<String> =
                    if i == 0 { Vec::new() } else { preds.iter().map(|x| format!("l{}", x.index(i))).collect() };
                p.sort();
                p.dedup();
                Layer {
                    id: format!("l{i}"),
                    macs: *macs,
                    ifmap_bytes: *ifmap,
                    weight_bytes: *weights,
                    ofmap_bytes: *ofmap,
                    predecessors: p,
                }
            })
            .collect();
        WorkloadGraph::new("random", layers).unwrap()
    })
}

pub fn arb_map_strategy() -> impl Strategy<Value = MapStrategy> {
    prop_oneof![
        Just(MapStrategy::FullSpatial),
        (1usize..=4).prop_map(|groups| MapStrategy::GreedyGroups { groups }),
        (1usize..=3, any::<u64>()).prop_map(|(groups, seed)| MapStrategy::Annealed { groups, seed, iterations: 40 }),
    ]
}

/// A random workload mapped on the default package.
pub fn arb_mapped(max_layers: usize) -> impl Strategy<Value = (WorkloadGraph, Mapping)> {
    (arb_graph(max_layers), arb_map_strategy()).prop_map(|(g, s)| {
        let groups = match s {
            MapStrategy::FullSpatial => 1,
            MapStrategy::GreedyGroups { groups } | MapStrategy::Annealed { groups, .. } => groups,
        };
        let s = if groups > g.len() { MapStrategy::FullSpatial } else { s };
        let m = map_workload(&g, &default_package(), s).unwrap();
        (g, m)
    })
}
