//! Layer-to-chiplet mapping.
//!
//! Three strategies are available. `FullSpatial` spreads every layer over the
//! whole grid. `GreedyGroups` cuts the layer sequence into groups of similar
//! compute and gives each group its own rectangle of chiplets. `Annealed`
//! refines a greedy grouping with simulated annealing against the wired
//! baseline latency.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostModel};
use crate::topology::{Layout, NodeId, NodeKind, Package};
use crate::workload::{WorkloadError, WorkloadGraph};

const SHARE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("{groups} groups requested but the grid has only {chiplets} chiplets")]
    TooManyGroups { groups: usize, chiplets: usize },
    #[error("at least one group is required")]
    NoGroups,
    #[error("the package has no DRAM chiplet to fetch weights from")]
    NoDram,
    #[error("layer {layer} has an empty placement")]
    EmptyPlacement { layer: usize },
    #[error("layer {layer}: {node} is not a compute chiplet of this package")]
    BadChiplet { layer: usize, node: NodeId },
    #[error("layer {layer}: chiplet {node} appears twice")]
    RepeatedChiplet { layer: usize, node: NodeId },
    #[error("layer {layer}: {node} is not a DRAM chiplet of this package")]
    BadDram { layer: usize, node: NodeId },
    #[error("layer {layer}: shares sum to {sum}, expected 1")]
    BadShares { layer: usize, sum: f64 },
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Placement {
    pub chiplet: NodeId,
    /// Fraction of the layer's MACs executed on this chiplet.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LayerMapping {
    pub placement: Vec<Placement>,
    pub dram: NodeId,
}

impl LayerMapping {
    /// Even split of the layer over `chiplets`.
    pub fn even(chiplets: Vec<NodeId>, dram: NodeId) -> Self {
        let share = 1.0 / chiplets.len() as f64;
        Self { placement: chiplets.into_iter().map(|chiplet| Placement { chiplet, share }).collect(), dram }
    }

    pub fn chiplets(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.placement.iter().map(|p| p.chiplet)
    }
}

/// Placement of every layer of one workload, indexed in topological order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Mapping {
    layers: Vec<LayerMapping>,
}

impl Mapping {
    pub fn new(layers: Vec<LayerMapping>, layout: &Layout) -> Result<Self, MapError> {
        for (layer, m) in layers.iter().enumerate() {
            if m.placement.is_empty() {
                return Err(MapError::EmptyPlacement { layer });
            }
            for (k, p) in m.placement.iter().enumerate() {
                if p.chiplet.kind != NodeKind::Compute || !layout.contains(p.chiplet) {
                    return Err(MapError::BadChiplet { layer, node: p.chiplet });
                }
                if m.placement[..k].iter().any(|q| q.chiplet == p.chiplet) {
                    return Err(MapError::RepeatedChiplet { layer, node: p.chiplet });
                }
            }
            let sum: f64 = m.placement.iter().map(|p| p.share).sum();
            // written so that NaN shares fail
            let valid = (sum - 1.0).abs() <= SHARE_TOLERANCE && m.placement.iter().all(|p| p.share >= 0.0);
            if !valid {
                return Err(MapError::BadShares { layer, sum });
            }
            if m.dram.kind != NodeKind::Dram || !layout.contains(m.dram) {
                return Err(MapError::BadDram { layer, node: m.dram });
            }
        }
        Ok(Self { layers })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer(&self, index: usize) -> &LayerMapping {
        &self.layers[index]
    }

    pub fn layers(&self) -> &[LayerMapping] {
        &self.layers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Strategy {
    FullSpatial,
    GreedyGroups { groups: usize },
    Annealed { groups: usize, seed: u64, iterations: usize },
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Annealed { groups: 3, seed: 1, iterations: 600 }
    }
}

/// A rectangle of compute chiplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Tile {
    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn chiplets(&self, layout: &Layout) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.area());
        for r in self.row..self.row + self.rows {
            for c in self.col..self.col + self.cols {
                out.push(layout.compute_at(r, c));
            }
        }
        out
    }
}

/// Cuts `tile` into `count` non-empty rectangles by recursive bisection
/// along the longer side. Neighbouring entries in the result are adjacent
/// on the grid.
pub fn tile_grid(tile: Tile, count: usize) -> Vec<Tile> {
    assert!(count >= 1 && count <= tile.area(), "cannot cut {} chiplets into {count}", tile.area());
    let mut out = Vec::with_capacity(count);
    bisect(tile, count, &mut out);
    out
}

fn bisect(tile: Tile, count: usize, out: &mut Vec<Tile>) {
    if count == 1 {
        out.push(tile);
        return;
    }
    let along_cols = tile.cols >= tile.rows;
    let len = if along_cols { tile.cols } else { tile.rows };
    let width = if along_cols { tile.rows } else { tile.cols };
    // proportional cut, then the group split that best matches the cut
    let cut = ((len * (count / 2)) as f64 / count as f64 + 0.5) as usize;
    let cut = cut.clamp(1, len - 1);
    let (area_a, area_b) = (cut * width, (len - cut) * width);
    let first = ((count * cut) as f64 / len as f64 + 0.5) as usize;
    let first = first.clamp(count.saturating_sub(area_b).max(1), area_a.min(count - 1));
    let (a, b) = if along_cols {
        (Tile { cols: cut, ..tile }, Tile { col: tile.col + cut, cols: len - cut, ..tile })
    } else {
        (Tile { rows: cut, ..tile }, Tile { row: tile.row + cut, rows: len - cut, ..tile })
    };
    bisect(a, first, out);
    bisect(b, count - first, out);
}

/// DRAM whose attach chiplet is closest (Manhattan) to the centroid of the
/// placement; lowest index on ties.
pub fn nearest_dram(layout: &Layout, chiplets: &[NodeId]) -> NodeId {
    assert!(layout.dram_count() > 0, "package has no DRAM chiplets");
    let n = chiplets.len() as i64;
    let (sx, sy) = chiplets.iter().fold((0i64, 0i64), |(sx, sy), &c| {
        let p = layout.coordinate(c);
        (sx + p.x as i64, sy + p.y as i64)
    });
    // distance scaled by n keeps the comparison in integers
    (0..layout.dram_count())
        .min_by_key(|&d| {
            let a = layout.coordinate(layout.dram_attach_chiplet(d));
            ((sx - n * a.x as i64).abs() + (sy - n * a.y as i64).abs(), d)
        })
        .map(NodeId::dram)
        .expect("at least one DRAM")
}

/// Group boundaries: `cuts[k]` is the first layer of group `k + 1`.
fn balanced_cuts(graph: &WorkloadGraph, groups: usize) -> Vec<usize> {
    let n = graph.len();
    let groups = groups.min(n);
    let total: f64 = graph.layers().iter().map(|l| l.macs as f64).sum();
    let mut cuts = Vec::with_capacity(groups - 1);
    let mut acc = 0.0;
    for (i, layer) in graph.layers().iter().enumerate() {
        let made = cuts.len();
        if made + 1 == groups {
            break;
        }
        acc += layer.macs as f64;
        let target = total * (made + 1) as f64 / groups as f64;
        let remaining_layers = n - (i + 1);
        let remaining_groups = groups - (made + 1);
        if (acc >= target && remaining_layers >= remaining_groups) || remaining_layers == remaining_groups {
            cuts.push(i + 1);
        }
    }
    cuts
}

#[derive(Debug, Clone, PartialEq)]
struct GroupState {
    cuts: Vec<usize>,
    /// `order[g]` is the tile of group `g`.
    order: Vec<usize>,
}

impl GroupState {
    fn groups(&self) -> usize {
        self.cuts.len() + 1
    }

    fn mapping(&self, layout: &Layout, layers: usize) -> Mapping {
        let full = Tile { row: 0, col: 0, rows: layout.rows(), cols: layout.cols() };
        let tiles = tile_grid(full, self.groups());
        let per_group: Vec<(Vec<NodeId>, NodeId)> = self
            .order
            .iter()
            .map(|&t| {
                let chiplets = tiles[t].chiplets(layout);
                let dram = nearest_dram(layout, &chiplets);
                (chiplets, dram)
            })
            .collect();
        let mut out = Vec::with_capacity(layers);
        let mut group = 0;
        for i in 0..layers {
            while group < self.cuts.len() && i >= self.cuts[group] {
                group += 1;
            }
            let (chiplets, dram) = &per_group[group];
            out.push(LayerMapping::even(chiplets.clone(), *dram));
        }
        Mapping { layers: out }
    }
}

fn check_groups(groups: usize, package: &Package) -> Result<(), MapError> {
    let chiplets = package.layout().chiplet_count();
    if groups == 0 {
        return Err(MapError::NoGroups);
    }
    if groups > chiplets {
        return Err(MapError::TooManyGroups { groups, chiplets });
    }
    Ok(())
}

/// Maps every layer of `graph` onto the package.
pub fn map_workload(graph: &WorkloadGraph, package: &Package, strategy: Strategy) -> Result<Mapping, MapError> {
    let layout = package.layout();
    if layout.dram_count() == 0 {
        return Err(MapError::NoDram);
    }
    match strategy {
        Strategy::FullSpatial => {
            let all: Vec<NodeId> = (0..layout.chiplet_count()).map(NodeId::compute).collect();
            let dram = nearest_dram(layout, &all);
            Ok(Mapping { layers: vec![LayerMapping::even(all, dram); graph.len()] })
        }
        Strategy::GreedyGroups { groups } => {
            check_groups(groups, package)?;
            Ok(greedy_state(graph, groups).mapping(layout, graph.len()))
        }
        Strategy::Annealed { groups, seed, iterations } => {
            check_groups(groups, package)?;
            let (state, _) = anneal(graph, package, greedy_state(graph, groups), seed, iterations)?;
            Ok(state.mapping(layout, graph.len()))
        }
    }
}

fn greedy_state(graph: &WorkloadGraph, groups: usize) -> GroupState {
    let cuts = balanced_cuts(graph, groups);
    let order = (0..cuts.len() + 1).collect();
    GroupState { cuts, order }
}

fn objective(graph: &WorkloadGraph, package: &Package, state: &GroupState) -> Result<f64, MapError> {
    let mapping = state.mapping(package.layout(), graph.len());
    Ok(cost::evaluate(graph, &mapping, package, &CostModel::default())?.total_latency)
}

const INITIAL_TEMPERATURE: f64 = 0.05;
const FINAL_TEMPERATURE: f64 = 1e-4;

/// Simulated annealing over group boundaries, group count and tile order.
/// Temperatures are relative to the current latency. Returns the best state
/// seen and its latency.
fn anneal(
    graph: &WorkloadGraph,
    package: &Package,
    start: GroupState,
    seed: u64,
    iterations: usize,
) -> Result<(GroupState, f64), MapError> {
    let layers = graph.len();
    let max_groups = package.layout().chiplet_count().min(layers);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current_cost = objective(graph, package, &start)?;
    let mut current = start;
    let mut best = (current.clone(), current_cost);
    let cooling = if iterations > 1 {
        libm::pow(FINAL_TEMPERATURE / INITIAL_TEMPERATURE, 1.0 / (iterations - 1) as f64)
    } else {
        1.0
    };
    let mut temperature = INITIAL_TEMPERATURE;

    for _ in 0..iterations {
        let Some(candidate) = propose(&current, layers, max_groups, &mut rng) else {
            temperature *= cooling;
            continue;
        };
        let cost = objective(graph, package, &candidate)?;
        let delta = (cost - current_cost) / current_cost.max(f64::MIN_POSITIVE);
        let draw: f64 = rng.random();
        if delta <= 0.0 || draw < libm::exp(-delta / temperature) {
            current = candidate;
            current_cost = cost;
            if cost < best.1 {
                best = (current.clone(), cost);
            }
        }
        temperature *= cooling;
    }
    Ok(best)
}

fn propose(state: &GroupState, layers: usize, max_groups: usize, rng: &mut ChaCha8Rng) -> Option<GroupState> {
    let mut next = state.clone();
    let groups = state.groups();
    match rng.random_range(0..4u32) {
        // shift one boundary by a layer
        0 if groups > 1 => {
            let k = rng.random_range(0..state.cuts.len());
            let lo = if k == 0 { 1 } else { state.cuts[k - 1] + 1 };
            let hi = if k + 1 == state.cuts.len() { layers - 1 } else { state.cuts[k + 1] - 1 };
            let cut = state.cuts[k];
            let moved = if rng.random::<bool>() { cut + 1 } else { cut.wrapping_sub(1) };
            if moved < lo || moved > hi {
                return None;
            }
            next.cuts[k] = moved;
        }
        // swap the tiles of two groups
        1 if groups > 1 => {
            let a = rng.random_range(0..groups);
            let b = rng.random_range(0..groups);
            if a == b {
                return None;
            }
            next.order.swap(a, b);
        }
        // merge two neighbouring groups
        2 if groups > 1 => {
            let k = rng.random_range(0..state.cuts.len());
            next.cuts.remove(k);
            next.order = (0..groups - 1).collect();
        }
        // split a group in two
        3 if groups < max_groups => {
            let at = rng.random_range(1..layers);
            if state.cuts.contains(&at) {
                return None;
            }
            let pos = state.cuts.partition_point(|&c| c < at);
            next.cuts.insert(pos, at);
            next.order = (0..groups + 1).collect();
        }
        _ => return None,
    }
    Some(next)
}

/// Wired-baseline latency of the greedy start and of the annealed result,
/// for inspecting how much the annealer gained.
pub fn annealing_gain(
    graph: &WorkloadGraph,
    package: &Package,
    groups: usize,
    seed: u64,
    iterations: usize,
) -> Result<(f64, f64), MapError> {
    check_groups(groups, package)?;
    let start = greedy_state(graph, groups);
    let initial = objective(graph, package, &start)?;
    let (_, best) = anneal(graph, package, start, seed, iterations)?;
    Ok((initial, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::ArchitectureSpec;
    use crate::workload::Layer;

    fn package() -> Package {
        Package::new(ArchitectureSpec::default()).unwrap()
    }

    fn chain(n: usize) -> WorkloadGraph {
        let layers = (0..n)
            .map(|i| Layer {
                id: alloc::format!("l{i}"),
                macs: 1_000_000 * (1 + i as u64 % 3),
                ifmap_bytes: 4096,
                weight_bytes: 2048 * (1 + i as u64 % 2),
                ofmap_bytes: 4096,
                predecessors: if i == 0 { Vec::new() } else { alloc::vec![alloc::format!("l{}", i - 1)] },
            })
            .collect();
        WorkloadGraph::new("chain", layers).unwrap()
    }

    #[test]
    fn full_spatial_spreads_evenly() {
        let m = map_workload(&chain(4), &package(), Strategy::FullSpatial).unwrap();
        for lm in m.layers() {
            assert_eq!(lm.placement.len(), 9);
            assert!(lm.placement.iter().all(|p| p.share == 1.0 / 9.0));
        }
    }

    #[test]
    fn single_layer_greedy_equals_full_spatial() {
        let g = chain(1);
        let greedy = map_workload(&g, &package(), Strategy::GreedyGroups { groups: 3 }).unwrap();
        let full = map_workload(&g, &package(), Strategy::FullSpatial).unwrap();
        let mut a: Vec<_> = greedy.layer(0).chiplets().collect();
        let mut b: Vec<_> = full.layer(0).chiplets().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(greedy.layer(0).dram, full.layer(0).dram);
    }

    #[test]
    fn too_many_groups_is_an_error() {
        assert_eq!(
            map_workload(&chain(20), &package(), Strategy::GreedyGroups { groups: 10 }),
            Err(MapError::TooManyGroups { groups: 10, chiplets: 9 })
        );
    }

    #[test]
    fn tiles_partition_the_grid() {
        let full = Tile { row: 0, col: 0, rows: 3, cols: 3 };
        for count in 1..=9 {
            let tiles = tile_grid(full, count);
            assert_eq!(tiles.len(), count);
            let mut seen = [false; 9];
            for t in &tiles {
                assert!(t.area() >= 1);
                for r in t.row..t.row + t.rows {
                    for c in t.col..t.col + t.cols {
                        assert!(!seen[r * 3 + c], "overlap with {count} tiles");
                        seen[r * 3 + c] = true;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn greedy_cuts_are_balanced_and_ordered() {
        let g = chain(12);
        let cuts = balanced_cuts(&g, 3);
        assert_eq!(cuts.len(), 2);
        assert!(cuts[0] < cuts[1] && cuts[1] < 12);
        assert_eq!(balanced_cuts(&g, 12), (1..12).collect::<Vec<_>>());
    }

    #[test]
    fn nearest_dram_uses_centroid_and_lowest_index() {
        let layout = Layout::build(&ArchitectureSpec::default()).unwrap();
        let all: Vec<NodeId> = (0..9).map(NodeId::compute).collect();
        // all four midpoints are equidistant from the center
        assert_eq!(nearest_dram(&layout, &all), NodeId::dram(0));
        // bottom row sits next to the South DRAM
        let bottom = [NodeId::compute(0), NodeId::compute(1), NodeId::compute(2)];
        assert_eq!(nearest_dram(&layout, &bottom), NodeId::dram(1));
        assert_eq!(nearest_dram(&layout, &[NodeId::compute(5)]), NodeId::dram(2));
    }

    #[test]
    fn annealing_never_worse_than_its_start_and_is_reproducible() {
        let g = chain(15);
        let p = package();
        let (initial, best) = annealing_gain(&g, &p, 3, 42, 200).unwrap();
        assert!(best <= initial);
        let s = Strategy::Annealed { groups: 3, seed: 42, iterations: 200 };
        assert_eq!(map_workload(&g, &p, s).unwrap(), map_workload(&g, &p, s).unwrap());
    }

    #[test]
    fn validation_rejects_bad_mappings() {
        let layout = Layout::build(&ArchitectureSpec::default()).unwrap();
        let dup = LayerMapping::even(alloc::vec![NodeId::compute(0), NodeId::compute(0)], NodeId::dram(0));
        assert!(matches!(Mapping::new(alloc::vec![dup], &layout), Err(MapError::RepeatedChiplet { .. })));
        let skew = LayerMapping {
            placement: alloc::vec![Placement { chiplet: NodeId::compute(0), share: 0.7 }],
            dram: NodeId::dram(0),
        };
        assert!(matches!(Mapping::new(alloc::vec![skew], &layout), Err(MapError::BadShares { .. })));
        let on_dram = LayerMapping::even(alloc::vec![NodeId::dram(1)], NodeId::dram(0));
        assert!(matches!(Mapping::new(alloc::vec![on_dram], &layout), Err(MapError::BadChiplet { .. })));
    }
}
