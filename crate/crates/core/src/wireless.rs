//! Wireless network-on-package overlaid on the wired planes.
//!
//! Every chiplet carries an antenna at its center. A message is eligible for
//! the wireless channel when it is a multicast leaving its source chiplet or
//! when its wired route is longer than the distance threshold; an eligible
//! message then goes over the air with the injection probability. The channel
//! is a single shared medium: a broadcast costs one transmission no matter
//! how many antennas receive it.
//!
//! Probability draws are keyed by message identity rather than by position
//! in the message stream, so a message's draw does not depend on which other
//! messages happened to be eligible.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::cost::{self, Channel, CostModel, Evaluation, LayerTraffic, RunResult};
use crate::mapper::Mapping;
use crate::topology::{noc_hops_to_center, Layout, NodeId, NodeKind, Package};
use crate::workload::{Message, WorkloadError, WorkloadGraph};

/// Default wireless bandwidths, bits per second.
pub const SWEEP_BANDWIDTHS: [f64; 2] = [64e9, 96e9];
/// Default distance thresholds, NoP hops.
pub const SWEEP_THRESHOLDS: [u32; 4] = [1, 2, 3, 4];

/// Default injection probabilities: 10% to 80% in steps of 5%.
pub fn sweep_probabilities() -> Vec<f64> {
    (0..15).map(|i| (10 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WirelessError {
    #[error("wireless bandwidth must be finite and strictly positive (got {0})")]
    Bandwidth(f64),
    #[error("injection probability must lie in [0, 1] (got {0})")]
    Probability(f64),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

/// How the injection probability applies to eligible messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum GateMode {
    /// Every eligible message passes the probability gate.
    #[default]
    AllEligible,
    /// Cross-chiplet multicasts always go wireless; only the messages that
    /// qualify by distance alone are gated.
    MulticastBypass,
}

/// Which messages may use the wireless channel at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum EligibilityRule {
    /// Any cross-chiplet multicast, or any message whose wired tree or route
    /// has more links than the threshold.
    MulticastOrDistance,
    /// Only messages whose farthest destination lies more than the threshold
    /// NoP hops away; multicasts and unicasts alike.
    #[default]
    DistanceGated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WirelessConfig {
    pub enabled: bool,
    /// Shared channel bandwidth, bits per second.
    pub bandwidth: f64,
    /// Wired NoP hops a message must exceed to qualify by distance.
    pub distance_threshold: u32,
    pub injection_probability: f64,
    pub seed: u64,
    pub gate: GateMode,
    pub rule: EligibilityRule,
}

impl Default for WirelessConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            bandwidth: SWEEP_BANDWIDTHS[0],
            distance_threshold: 1,
            injection_probability: 0.5,
            seed: 1,
            gate: GateMode::AllEligible,
            rule: EligibilityRule::DistanceGated,
        }
    }
}

impl WirelessConfig {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), WirelessError> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(WirelessError::Bandwidth(self.bandwidth));
        }
        if !(0.0..=1.0).contains(&self.injection_probability) {
            return Err(WirelessError::Probability(self.injection_probability));
        }
        Ok(())
    }
}

/// Per-layer slice of the channel ledger.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LayerLedger {
    pub wireless_bits: u64,
    pub wireless_messages: u32,
    pub shadow_nop_hops: u64,
    /// Per directed link, what the wireless messages would have put on the NoP.
    pub shadow_link_bits: Vec<u64>,
}

/// Wireless counters of one run, plus the wired cost the wireless messages
/// avoided.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChannelLedger {
    /// Per antenna, indexed like [`Layout::dense_index`].
    pub tx_bits: Vec<u64>,
    pub rx_bits: Vec<u64>,
    pub total_wireless_bits: u64,
    pub wireless_messages: u64,
    /// Hops between the PE mesh and the central router, per compute endpoint.
    pub wireless_noc_hops: u64,
    pub shadow_wired_nop_hops: u64,
    /// Contention-free wired transfer time of the wireless messages, seconds.
    pub shadow_wired_latency: f64,
    pub layers: Vec<LayerLedger>,
}

impl ChannelLedger {
    pub fn new(layout: &Layout, layers: usize) -> Self {
        let layer = LayerLedger { shadow_link_bits: vec![0; layout.link_count()], ..LayerLedger::default() };
        Self {
            tx_bits: vec![0; layout.antenna_count()],
            rx_bits: vec![0; layout.antenna_count()],
            total_wireless_bits: 0,
            wireless_messages: 0,
            wireless_noc_hops: 0,
            shadow_wired_nop_hops: 0,
            shadow_wired_latency: 0.0,
            layers: vec![layer; layers],
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn node_bytes(node: NodeId) -> [u8; 9] {
    let mut out = [0u8; 9];
    out[0] = matches!(node.kind, NodeKind::Dram) as u8;
    out[1..].copy_from_slice(&(node.index as u64).to_le_bytes());
    out
}

/// Stable identity of a message: issuing layer, kind, source and
/// destination set.
pub fn message_key(layer_id: &str, message: &Message) -> u64 {
    let mut h = fnv(FNV_OFFSET, layer_id.as_bytes());
    h = fnv(h, &[0xff, message.kind as u8]);
    h = fnv(h, &node_bytes(message.src));
    for &d in &message.dsts {
        h = fnv(h, &node_bytes(d));
    }
    h
}

/// Uniform draw in `[0, 1)` determined by the seed and the message key.
pub fn keyed_uniform(seed: u64, key: u64) -> f64 {
    // splitmix64 finalizer over the combined state
    let mut z = key ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Wired NoP hops the eligibility rule compares against the threshold:
/// tree links for multicasts, route length for unicasts.
pub fn wired_hops(message: &Message, layout: &Layout) -> u32 {
    if message.is_multicast() {
        layout.multicast_nop_hops(message.src, &message.dsts)
    } else {
        layout.nop_hops(message.src, message.dsts[0])
    }
}

fn crosses_chiplets(message: &Message) -> bool {
    message.dsts.iter().any(|&d| d != message.src)
}

/// Why a message may use the wireless channel, if it may.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    Ineligible,
    Multicast,
    Distance,
}

/// NoP hops from the source to its farthest destination.
pub fn farthest_hops(message: &Message, layout: &Layout) -> u32 {
    message.dsts.iter().map(|&d| layout.nop_hops(message.src, d)).max().unwrap_or(0)
}

pub fn eligibility(message: &Message, layout: &Layout, threshold: u32, rule: EligibilityRule) -> Eligibility {
    let multicast = message.is_multicast() && crosses_chiplets(message);
    match rule {
        EligibilityRule::MulticastOrDistance if multicast => Eligibility::Multicast,
        EligibilityRule::MulticastOrDistance if wired_hops(message, layout) > threshold => Eligibility::Distance,
        EligibilityRule::DistanceGated if farthest_hops(message, layout) > threshold => {
            if multicast {
                Eligibility::Multicast
            } else {
                Eligibility::Distance
            }
        }
        _ => Eligibility::Ineligible,
    }
}

/// Picks the plane for one message issued by layer `layer_id`.
pub fn classify(message: &Message, layer_id: &str, layout: &Layout, config: &WirelessConfig) -> Channel {
    if !config.enabled {
        return Channel::Wired;
    }
    match (eligibility(message, layout, config.distance_threshold, config.rule), config.gate) {
        (Eligibility::Ineligible, _) => Channel::Wired,
        (Eligibility::Multicast, GateMode::MulticastBypass) => Channel::Wireless,
        _ => {
            let draw = keyed_uniform(config.seed, message_key(layer_id, message));
            if draw < config.injection_probability {
                Channel::Wireless
            } else {
                Channel::Wired
            }
        }
    }
}

/// Channel occupancy of one layer: all its wireless bits over the one
/// shared channel.
pub fn wireless_time(layer: &LayerLedger, config: &WirelessConfig) -> f64 {
    layer.wireless_bits as f64 / config.bandwidth
}

/// Records a wireless message in the ledger, including the wired route it
/// replaced and the NoC detour to the central routers at each chiplet end.
pub fn account_dual_path(message: &Message, package: &Package, noc_detour: u32, ledger: &mut ChannelLedger) {
    let layout = package.layout();
    let bits = message.volume_bits;
    ledger.tx_bits[layout.dense_index(message.src)] += bits;
    for &d in &message.dsts {
        ledger.rx_bits[layout.dense_index(d)] += bits;
    }
    ledger.total_wireless_bits += bits;
    ledger.wireless_messages += 1;

    let compute_ends =
        core::iter::once(&message.src).chain(&message.dsts).filter(|n| n.kind == NodeKind::Compute).count() as u64;
    ledger.wireless_noc_hops += noc_detour as u64 * compute_ends;

    let tree = layout.multicast_tree(message.src, &message.dsts);
    ledger.shadow_wired_nop_hops += tree.len() as u64;
    ledger.shadow_wired_latency += bits as f64 / package.spec().nop_link_bandwidth;

    let layer = &mut ledger.layers[message.layer];
    layer.wireless_bits += bits;
    layer.wireless_messages += 1;
    layer.shadow_nop_hops += tree.len() as u64;
    for link in tree {
        layer.shadow_link_bits[link as usize] += bits;
    }
}

/// Result of a hybrid wired/wireless run.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridRun {
    pub result: RunResult,
    pub ledger: ChannelLedger,
    pub traffic: Vec<LayerTraffic>,
}

/// Like [`cost::evaluate`], but every message is first classified and the
/// wireless ones load the shared channel instead of the NoP.
pub fn hybrid_evaluate(
    graph: &WorkloadGraph,
    mapping: &Mapping,
    package: &Package,
    config: &WirelessConfig,
    model: &CostModel,
) -> Result<HybridRun, WirelessError> {
    config.validate()?;
    let layout = package.layout();
    let detour = noc_hops_to_center(package.spec());
    let mut ledger = ChannelLedger::new(layout, graph.len());
    let bandwidth = config.enabled.then_some(config.bandwidth);
    let Evaluation { result, traffic } = cost::evaluate_with(graph, mapping, package, model, bandwidth, |m| {
        let channel = classify(m, &graph.layer(m.layer).id, layout, config);
        if channel == Channel::Wireless {
            account_dual_path(m, package, detour, &mut ledger);
        }
        channel
    })?;
    debug_assert!(result
        .layers
        .iter()
        .zip(&ledger.layers)
        .all(|(t, l)| !config.enabled || t.wireless_time == wireless_time(l, config)));
    Ok(HybridRun { result, ledger, traffic })
}

/// `(baseline − hybrid) / baseline`.
pub fn speedup(baseline_latency: f64, hybrid_latency: f64) -> f64 {
    if baseline_latency > 0.0 {
        (baseline_latency - hybrid_latency) / baseline_latency
    } else {
        0.0
    }
}
