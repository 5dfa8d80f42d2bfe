//! Layer-wise analytical timing.
//!
//! Every layer gets one aggregated time per resource: compute on the busiest
//! chiplet, the busiest DRAM chiplet, the busiest NoC port, the busiest NoP
//! link and the shared wireless channel. The layer takes as long as its
//! slowest resource, and a run takes the sum of its layers. Contention and
//! pipelining between layers are not modeled.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::mapper::{LayerMapping, Mapping};
use crate::topology::{ArchitectureSpec, Layout, NodeKind, Package};
use crate::workload::{derive_traffic, Layer, Message, WorkloadError, WorkloadGraph};

/// Resources a layer can be bound by, in tie-break order: on equal times the
/// earlier resource is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Resource {
    Compute,
    Dram,
    Noc,
    Nop,
    Wireless,
}

impl Resource {
    pub const ALL: [Resource; 5] =
        [Resource::Compute, Resource::Dram, Resource::Noc, Resource::Nop, Resource::Wireless];

    pub const fn name(self) -> &'static str {
        match self {
            Resource::Compute => "compute",
            Resource::Dram => "dram",
            Resource::Noc => "noc",
            Resource::Nop => "nop",
            Resource::Wireless => "wireless",
        }
    }

    const fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ResourceShares(pub [f64; 5]);

impl ResourceShares {
    pub fn get(&self, resource: Resource) -> f64 {
        self.0[resource.slot()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Aggregated per-resource times of one layer, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LayerTiming {
    pub compute_time: f64,
    pub dram_time: f64,
    pub noc_time: f64,
    pub nop_time: f64,
    pub wireless_time: f64,
    pub bottleneck: Resource,
}

impl LayerTiming {
    pub fn new(compute_time: f64, dram_time: f64, noc_time: f64, nop_time: f64, wireless_time: f64) -> Self {
        let mut timing =
            Self { compute_time, dram_time, noc_time, nop_time, wireless_time, bottleneck: Resource::Compute };
        for r in Resource::ALL {
            if timing.time(r) > timing.time(timing.bottleneck) {
                timing.bottleneck = r;
            }
        }
        timing
    }

    pub fn time(&self, resource: Resource) -> f64 {
        match resource {
            Resource::Compute => self.compute_time,
            Resource::Dram => self.dram_time,
            Resource::Noc => self.noc_time,
            Resource::Nop => self.nop_time,
            Resource::Wireless => self.wireless_time,
        }
    }

    /// Time of the bottleneck resource.
    pub fn latency(&self) -> f64 {
        self.time(self.bottleneck)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RunResult {
    pub layers: Vec<LayerTiming>,
    pub total_latency: f64,
    pub bottleneck_shares: ResourceShares,
    /// Joules.
    pub energy: f64,
}

impl RunResult {
    pub fn from_layers(layers: Vec<LayerTiming>, energy: f64) -> Self {
        let total_latency: f64 = layers.iter().map(LayerTiming::latency).sum();
        let mut per = [0.0; 5];
        for t in &layers {
            per[t.bottleneck.slot()] += t.latency();
        }
        let shares = if total_latency > 0.0 {
            per.map(|v| v / total_latency)
        } else {
            // nothing to do at all: call it compute-bound
            [1.0, 0.0, 0.0, 0.0, 0.0]
        };
        Self { layers, total_latency, bottleneck_shares: ResourceShares(shares), energy }
    }
}

/// How per-link NoP loads become one NoP time per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum NopAggregation {
    /// Busiest directed link.
    #[default]
    MaxLink,
    /// All link loads spread evenly over all links.
    TotalVolume,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CostModel {
    /// Joules per bit per NoP hop. No measured figure exists; 1 pJ is a placeholder.
    pub wired_energy_per_bit_hop: f64,
    /// Joules per bit sent over the air (~1 pJ/bit for mm-wave transceivers).
    pub wireless_energy_per_bit: f64,
    pub nop_aggregation: NopAggregation,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            wired_energy_per_bit_hop: 1e-12,
            wireless_energy_per_bit: 1e-12,
            nop_aggregation: NopAggregation::MaxLink,
        }
    }
}

/// Which plane carries a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Channel {
    Wired,
    Wireless,
}

/// Loads one layer puts on each resource, in bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTraffic {
    /// Per directed NoP link.
    pub link_bits: Vec<u64>,
    /// Per compute chiplet, bits entering or leaving through its NoC.
    pub noc_bits: Vec<u64>,
    /// Per DRAM chiplet, bits read or written.
    pub dram_bits: Vec<u64>,
    /// Volume of messages sent over the NoP.
    pub wired_bits: u64,
    /// Volume of messages sent over the air.
    pub wireless_bits: u64,
    pub wired_bit_hops: u64,
    pub wireless_messages: u32,
}

impl LayerTraffic {
    pub fn new(layout: &Layout) -> Self {
        Self {
            link_bits: vec![0; layout.link_count()],
            noc_bits: vec![0; layout.chiplet_count()],
            dram_bits: vec![0; layout.dram_count()],
            wired_bits: 0,
            wireless_bits: 0,
            wired_bit_hops: 0,
            wireless_messages: 0,
        }
    }

    /// Adds one message. Endpoint loads (NoC and DRAM) are charged on both
    /// planes; only wired messages occupy NoP links.
    pub fn add(&mut self, message: &Message, layout: &Layout, channel: Channel) {
        let bits = message.volume_bits;
        for node in core::iter::once(&message.src).chain(&message.dsts) {
            match node.kind {
                NodeKind::Compute => self.noc_bits[node.index] += bits,
                NodeKind::Dram => self.dram_bits[node.index] += bits,
            }
        }
        match channel {
            Channel::Wired => {
                let tree = layout.multicast_tree(message.src, &message.dsts);
                for &link in &tree {
                    self.link_bits[link as usize] += bits;
                }
                self.wired_bits += bits;
                self.wired_bit_hops += bits * tree.len() as u64;
            }
            Channel::Wireless => {
                self.wireless_bits += bits;
                self.wireless_messages += 1;
            }
        }
    }

    pub fn nop_time(&self, spec: &ArchitectureSpec, aggregation: NopAggregation) -> f64 {
        match aggregation {
            NopAggregation::MaxLink => max_load(&self.link_bits) as f64 / spec.nop_link_bandwidth,
            NopAggregation::TotalVolume if self.link_bits.is_empty() => 0.0,
            NopAggregation::TotalVolume => {
                let total: u64 = self.link_bits.iter().sum();
                total as f64 / (self.link_bits.len() as f64 * spec.nop_link_bandwidth)
            }
        }
    }

    pub fn noc_time(&self, spec: &ArchitectureSpec) -> f64 {
        max_load(&self.noc_bits) as f64 / spec.noc_link_bandwidth
    }

    pub fn dram_time(&self, spec: &ArchitectureSpec) -> f64 {
        max_load(&self.dram_bits) as f64 / (8.0 * spec.dram_bandwidth)
    }
}

fn max_load(loads: &[u64]) -> u64 {
    loads.iter().copied().max().unwrap_or(0)
}

/// Time for the most loaded chiplet of the placement to execute its share.
pub fn compute_time(layer: &Layer, mapping: &LayerMapping, spec: &ArchitectureSpec) -> f64 {
    let busiest = mapping.placement.iter().map(|p| p.share).fold(0.0, f64::max);
    busiest * layer.macs as f64 / spec.chiplet_throughput
}

/// Time for the most loaded DRAM chiplet to serve every message touching it.
pub fn dram_time(messages: &[Message], package: &Package) -> f64 {
    let mut traffic = LayerTraffic::new(package.layout());
    for m in messages {
        traffic.add(m, package.layout(), Channel::Wired);
    }
    traffic.dram_time(package.spec())
}

/// `(noc_time, nop_time)` with every message sent over the wired planes and
/// NoP time taken from the busiest link.
pub fn wired_link_times(messages: &[Message], package: &Package) -> (f64, f64) {
    let mut traffic = LayerTraffic::new(package.layout());
    for m in messages {
        traffic.add(m, package.layout(), Channel::Wired);
    }
    (traffic.noc_time(package.spec()), traffic.nop_time(package.spec(), NopAggregation::MaxLink))
}

/// A run result together with the per-layer loads behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub result: RunResult,
    pub traffic: Vec<LayerTraffic>,
}

/// Evaluates a mapped workload, asking `route` which plane carries each
/// message. Messages are offered in layer order, then in the stable message
/// order of [`derive_traffic`]. Wireless loads are timed against
/// `wireless_bandwidth` (bits per second).
pub fn evaluate_with<F>(
    graph: &WorkloadGraph,
    mapping: &Mapping,
    package: &Package,
    model: &CostModel,
    wireless_bandwidth: Option<f64>,
    mut route: F,
) -> Result<Evaluation, WorkloadError>
where
    F: FnMut(&Message) -> Channel,
{
    let layout = package.layout();
    let spec = package.spec();
    let messages = derive_traffic(graph, mapping, layout)?;

    let mut timings = Vec::with_capacity(graph.len());
    let mut loads = Vec::with_capacity(graph.len());
    let mut energy = 0.0;
    for (i, layer_messages) in messages.iter().enumerate() {
        let mut traffic = LayerTraffic::new(layout);
        for m in layer_messages {
            traffic.add(m, layout, route(m));
        }
        let wireless_time = match wireless_bandwidth {
            Some(bw) => traffic.wireless_bits as f64 / bw,
            None => {
                debug_assert_eq!(traffic.wireless_bits, 0, "wireless traffic without a wireless channel");
                0.0
            }
        };
        timings.push(LayerTiming::new(
            compute_time(graph.layer(i), mapping.layer(i), spec),
            traffic.dram_time(spec),
            traffic.noc_time(spec),
            traffic.nop_time(spec, model.nop_aggregation),
            wireless_time,
        ));
        energy += traffic.wired_bit_hops as f64 * model.wired_energy_per_bit_hop
            + traffic.wireless_bits as f64 * model.wireless_energy_per_bit;
        loads.push(traffic);
    }
    Ok(Evaluation { result: RunResult::from_layers(timings, energy), traffic: loads })
}

/// Wired baseline: every message travels over the NoP.
pub fn evaluate(
    graph: &WorkloadGraph,
    mapping: &Mapping,
    package: &Package,
    model: &CostModel,
) -> Result<RunResult, WorkloadError> {
    Ok(evaluate_with(graph, mapping, package, model, None, |_| Channel::Wired)?.result)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BottleneckRow {
    pub workload: alloc::string::String,
    pub shares: ResourceShares,
}

/// Share of each workload's latency spent in layers bound by each resource.
pub fn bottleneck_report<'a, I>(results: I) -> Vec<BottleneckRow>
where
    I: IntoIterator<Item = (&'a str, &'a RunResult)>,
{
    results.into_iter().map(|(name, r)| BottleneckRow { workload: name.into(), shares: r.bottleneck_shares }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::LayerMapping;
    use crate::topology::{ArchitectureSpec, NodeId};
    use crate::workload::{Message, MessageKind};
    use alloc::string::ToString;

    fn package() -> Package {
        Package::new(ArchitectureSpec::default()).unwrap()
    }

    fn big_layer(macs: u64) -> Layer {
        Layer { id: "x".to_string(), macs, ifmap_bytes: 0, weight_bytes: 0, ofmap_bytes: 0, predecessors: Vec::new() }
    }

    #[test]
    fn compute_time_examples() {
        let spec = ArchitectureSpec::default();
        let layer = big_layer(16_000_000_000_000);
        let one = LayerMapping::even(vec![NodeId::compute(0)], NodeId::dram(0));
        assert_eq!(compute_time(&layer, &one, &spec), 1.0);
        let four = LayerMapping::even((0..4).map(NodeId::compute).collect(), NodeId::dram(0));
        assert_eq!(compute_time(&layer, &four, &spec), 0.25);
        let uneven = LayerMapping {
            placement: [0.5, 0.25, 0.25]
                .iter()
                .enumerate()
                .map(|(i, &share)| crate::mapper::Placement { chiplet: NodeId::compute(i), share })
                .collect(),
            dram: NodeId::dram(0),
        };
        assert_eq!(compute_time(&layer, &uneven, &spec), 0.5);
    }

    fn msg(src: NodeId, dsts: &[NodeId], bits: u64) -> Message {
        Message::new(MessageKind::InterLayer, src, dsts.iter().copied(), bits, 0).unwrap()
    }

    #[test]
    fn dram_time_examples() {
        let p = package();
        let gb16 = 8 * 16_000_000_000u64;
        let c = NodeId::compute(4);
        assert_eq!(dram_time(&[msg(NodeId::dram(0), &[c], gb16)], &p), 1.0);
        let split: Vec<_> = (0..4).map(|d| msg(NodeId::dram(d), &[c], gb16 / 4)).collect();
        assert_eq!(dram_time(&split, &p), 0.25);
        assert_eq!(dram_time(&[], &p), 0.0);
    }

    #[test]
    fn link_time_examples() {
        let p = package();
        let l = p.layout();
        let gb32 = 32_000_000_000u64;
        let one = [msg(l.compute_at(0, 0), &[l.compute_at(0, 1)], gb32)];
        assert_eq!(wired_link_times(&one, &p).1, 1.0);
        let disjoint = [
            msg(l.compute_at(0, 0), &[l.compute_at(0, 1)], gb32),
            msg(l.compute_at(2, 0), &[l.compute_at(2, 1)], gb32),
        ];
        assert_eq!(wired_link_times(&disjoint, &p).1, 1.0);
        let tree = [msg(l.compute_at(0, 0), &[l.compute_at(0, 2), l.compute_at(2, 2)], gb32)];
        assert_eq!(wired_link_times(&tree, &p).1, 1.0);
        // the source chiplet's NoC port carries the data once, each receiver once
        assert_eq!(wired_link_times(&tree, &p).0, 0.5);
    }

    #[test]
    fn bottleneck_tie_break_prefers_earlier_resources() {
        let t = LayerTiming::new(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(t.bottleneck, Resource::Compute);
        let t = LayerTiming::new(0.0, 0.0, 2.0, 2.0, 1.0);
        assert_eq!(t.bottleneck, Resource::Noc);
        let t = LayerTiming::new(0.0, 0.0, 0.0, 0.0, 3.0);
        assert_eq!(t.bottleneck, Resource::Wireless);
        assert_eq!(t.latency(), 3.0);
    }

    #[test]
    fn zero_traffic_is_compute_bound() {
        let p = package();
        let layers = (0..3)
            .map(|i| Layer {
                id: alloc::format!("l{i}"),
                predecessors: if i == 0 { Vec::new() } else { vec![alloc::format!("l{}", i - 1)] },
                ..big_layer(9_000_000 * (i + 1))
            })
            .collect();
        let g = WorkloadGraph::new("zero", layers).unwrap();
        let m = crate::mapper::map_workload(&g, &p, crate::mapper::Strategy::FullSpatial).unwrap();
        let r = evaluate(&g, &m, &p, &CostModel::default()).unwrap();
        assert!(r.layers.iter().all(|t| t.bottleneck == Resource::Compute && t.wireless_time == 0.0));
        let expected: f64 = r.layers.iter().map(|t| t.compute_time).sum();
        assert_eq!(r.total_latency, expected);
        assert_eq!(r.bottleneck_shares.get(Resource::Compute), 1.0);
        assert_eq!(r.energy, 0.0);
    }

    #[test]
    fn report_rows_follow_results() {
        let r = RunResult::from_layers(vec![LayerTiming::new(1.0, 0.0, 0.0, 3.0, 0.0)], 0.0);
        let rows = bottleneck_report([("w", &r)]);
        assert_eq!(rows[0].workload, "w");
        assert_eq!(rows[0].shares.get(Resource::Nop), 1.0);
    }
}
