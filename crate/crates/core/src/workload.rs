//! DNN layer graphs and the message traffic a mapped layer generates.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::mapper::Mapping;
use crate::topology::{Layout, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorkloadError {
    #[error("workload `{0}` has no layers")]
    Empty(String),
    #[error("layer id `{0}` is defined twice")]
    DuplicateLayer(String),
    #[error("layer `{layer}` references unknown predecessor `{predecessor}`")]
    UnknownPredecessor { layer: String, predecessor: String },
    #[error("dependency cycle through layer `{0}`")]
    Cycle(String),
    #[error("layer `{0}` lists the same predecessor twice")]
    RepeatedPredecessor(String),
    #[error("layer id must be non-empty and free of whitespace, commas and '#' (got `{0}`)")]
    BadLayerId(String),
    #[error("mapping covers {mapped} layers but workload has {layers}")]
    Unmapped { mapped: usize, layers: usize },
}

/// One DNN layer. Byte counts are per inference of the whole batch.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Layer {
    pub id: String,
    pub macs: u64,
    pub ifmap_bytes: u64,
    pub weight_bytes: u64,
    pub ofmap_bytes: u64,
    /// Empty means the input activations come from DRAM.
    pub predecessors: Vec<String>,
}

/// A validated, acyclic layer graph stored in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct WorkloadGraph {
    name: String,
    layers: Vec<Layer>,
    #[cfg_attr(feature = "serde", serde(skip))]
    predecessors: Vec<Vec<usize>>,
    #[cfg_attr(feature = "serde", serde(skip))]
    successors: Vec<Vec<usize>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c == ',' || c == '#')
}

impl WorkloadGraph {
    /// Validates the layers and orders them topologically. Among layers
    /// that are ready at the same time the input order is kept.
    pub fn new(name: impl Into<String>, layers: Vec<Layer>) -> Result<Self, WorkloadError> {
        let name = name.into();
        if layers.is_empty() {
            return Err(WorkloadError::Empty(name));
        }
        let mut index = BTreeMap::new();
        for (i, layer) in layers.iter().enumerate() {
            if !valid_id(&layer.id) {
                return Err(WorkloadError::BadLayerId(layer.id.clone()));
            }
            if index.insert(layer.id.as_str(), i).is_some() {
                return Err(WorkloadError::DuplicateLayer(layer.id.clone()));
            }
        }
        let mut preds = Vec::with_capacity(layers.len());
        for layer in &layers {
            let mut p = Vec::with_capacity(layer.predecessors.len());
            for pred in &layer.predecessors {
                let &j = index.get(pred.as_str()).ok_or_else(|| WorkloadError::UnknownPredecessor {
                    layer: layer.id.clone(),
                    predecessor: pred.clone(),
                })?;
                if p.contains(&j) {
                    return Err(WorkloadError::RepeatedPredecessor(layer.id.clone()));
                }
                p.push(j);
            }
            preds.push(p);
        }

        // Kahn's algorithm, always taking the lowest input index that is ready.
        let n = layers.len();
        let mut pending: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut succ_of: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (i, p) in preds.iter().enumerate() {
            for &j in p {
                succ_of[j].push(i);
            }
        }
        let mut ready: alloc::collections::BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &s in &succ_of[i] {
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| pending[i] > 0).expect("some layer is blocked");
            return Err(WorkloadError::Cycle(layers[stuck].id.clone()));
        }

        let mut position = alloc::vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let predecessors: Vec<Vec<usize>> =
            order.iter().map(|&i| preds[i].iter().map(|&j| position[j]).collect()).collect();
        let mut successors = alloc::vec![Vec::new(); n];
        for (i, p) in predecessors.iter().enumerate() {
            for &j in p {
                successors[j].push(i);
            }
        }
        let mut slots: Vec<Option<Layer>> = layers.into_iter().map(Some).collect();
        let layers = order.iter().map(|&i| slots[i].take().expect("each layer taken once")).collect();
        Ok(Self { name, layers, predecessors, successors })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer(&self, index: usize) -> &Layer {
        &self.layers[index]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.id == id)
    }

    /// Indices of the layers feeding `index`.
    pub fn predecessors(&self, index: usize) -> &[usize] {
        &self.predecessors[index]
    }

    /// Indices of the layers consuming the output of `index`, ascending.
    pub fn successors(&self, index: usize) -> &[usize] {
        &self.successors[index]
    }

    pub fn total_macs(&self) -> u64 {
        self.layers.iter().map(|l| l.macs).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum MessageKind {
    WeightFetch,
    ActivationIn,
    ActivationOut,
    InterLayer,
}

impl MessageKind {
    pub const fn name(self) -> &'static str {
        match self {
            MessageKind::WeightFetch => "weight_fetch",
            MessageKind::ActivationIn => "activation_in",
            MessageKind::ActivationOut => "activation_out",
            MessageKind::InterLayer => "inter_layer",
        }
    }
}

/// A unicast or multicast transfer issued while executing one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Message {
    pub kind: MessageKind,
    pub src: NodeId,
    /// Sorted, without duplicates, never containing `src`.
    pub dsts: Vec<NodeId>,
    pub volume_bits: u64,
    /// Topological index of the layer that issues the message.
    pub layer: usize,
}

impl Message {
    /// Builds a message, dropping `src` from the destinations. Returns `None`
    /// when nothing would leave the source.
    pub fn new(
        kind: MessageKind,
        src: NodeId,
        dsts: impl IntoIterator<Item = NodeId>,
        volume_bits: u64,
        layer: usize,
    ) -> Option<Self> {
        let mut dsts: Vec<NodeId> = dsts.into_iter().filter(|&d| d != src).collect();
        dsts.sort_unstable();
        dsts.dedup();
        if dsts.is_empty() || volume_bits == 0 {
            return None;
        }
        Some(Self { kind, src, dsts, volume_bits, layer })
    }

    pub fn is_multicast(&self) -> bool {
        self.dsts.len() > 1
    }

    fn order_key(&self) -> (MessageKind, NodeId, &[NodeId]) {
        (self.kind, self.src, &self.dsts)
    }
}

/// Splits `total` into `parts` integer shares; the first `total % parts`
/// shares get one extra unit.
pub(crate) fn split_even(total: u64, parts: usize, index: usize) -> u64 {
    let parts = parts as u64;
    total / parts + u64::from((index as u64) < total % parts)
}

/// Messages issued by every layer, ordered by layer, then kind, source and
/// destination set.
///
/// * weights are fetched from the layer's DRAM and replicated on every
///   chiplet of its placement;
/// * layers without predecessors read their input from DRAM;
/// * every producer chiplet sends its share of the output to each distinct
///   consumer chiplet set among the successors (one message per set);
/// * layers without successors write their output share back to DRAM.
pub fn derive_traffic(
    graph: &WorkloadGraph,
    mapping: &Mapping,
    layout: &Layout,
) -> Result<Vec<Vec<Message>>, WorkloadError> {
    if mapping.len() != graph.len() {
        return Err(WorkloadError::Unmapped { mapped: mapping.len(), layers: graph.len() });
    }
    debug_assert!(mapping.layers().iter().all(|m| m.chiplets().all(|c| layout.contains(c))));

    let mut traffic = Vec::with_capacity(graph.len());
    for (i, layer) in graph.layers().iter().enumerate() {
        let here = mapping.layer(i);
        let chiplets: Vec<NodeId> = here.chiplets().collect();
        let mut messages = Vec::new();

        messages.extend(Message::new(
            MessageKind::WeightFetch,
            here.dram,
            chiplets.iter().copied(),
            8 * layer.weight_bytes,
            i,
        ));
        if graph.predecessors(i).is_empty() {
            messages.extend(Message::new(
                MessageKind::ActivationIn,
                here.dram,
                chiplets.iter().copied(),
                8 * layer.ifmap_bytes,
                i,
            ));
        }

        let successors = graph.successors(i);
        let out_bits = 8 * layer.ofmap_bytes;
        if successors.is_empty() {
            for (k, &c) in chiplets.iter().enumerate() {
                let bits = split_even(out_bits, chiplets.len(), k);
                messages.extend(Message::new(MessageKind::ActivationOut, c, [here.dram], bits, i));
            }
        } else {
            let mut groups: Vec<Vec<NodeId>> = Vec::new();
            for &s in successors {
                let mut set: Vec<NodeId> = mapping.layer(s).chiplets().collect();
                set.sort_unstable();
                if !groups.contains(&set) {
                    groups.push(set);
                }
            }
            for (k, &c) in chiplets.iter().enumerate() {
                let bits = split_even(out_bits, chiplets.len(), k);
                // a producer that is itself a consumer may see two groups
                // collapse to the same remote set; send that data once
                let mut sent: Vec<Vec<NodeId>> = Vec::new();
                for group in &groups {
                    let remote: Vec<NodeId> = group.iter().copied().filter(|&d| d != c).collect();
                    if remote.is_empty() || sent.contains(&remote) {
                        continue;
                    }
                    messages.extend(Message::new(MessageKind::InterLayer, c, remote.iter().copied(), bits, i));
                    sent.push(remote);
                }
            }
        }

        messages.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        debug_assert!(messages.windows(2).all(|w| w[0].order_key() != w[1].order_key()));
        traffic.push(messages);
    }
    Ok(traffic)
}
