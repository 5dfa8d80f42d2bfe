//! Analytical performance model of multi-chiplet accelerators whose wired
//! network-on-package is complemented by a shared wireless channel.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cost;
pub mod explorer;
pub mod mapper;
pub mod topology;
pub mod wireless;
pub mod workload;
pub mod zoo;

pub use cost::{evaluate, CostModel, LayerTiming, Resource, RunResult};
pub use mapper::{map_workload, Mapping, Strategy};
pub use topology::{ArchitectureSpec, Layout, NodeId, Package};
pub use wireless::{hybrid_evaluate, speedup, WirelessConfig};
pub use workload::{Layer, WorkloadGraph};
