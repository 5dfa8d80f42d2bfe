//! Run settings: one flat `key = value` file whose keys double as command
//! line flags (`grid_rows` is `--grid-rows`).
//!
//! Lines are `key = value`; `#` starts a comment; lists are comma separated.
//! Rates use SI base units: bits per second for links and the wireless
//! channel, bytes per second for DRAM, MAC/s for chiplets, joules for
//! energies. Later assignments win.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;
use wnop_core::cost::{CostModel, NopAggregation};
use wnop_core::explorer::SweepGrid;
use wnop_core::mapper::Strategy;
use wnop_core::topology::{midpoint_attach_points, ArchitectureSpec, DramAttach, Package, Side, TopologyError};
use wnop_core::wireless::{EligibilityRule, GateMode, WirelessConfig, WirelessError};
use wnop_core::zoo;

#[derive(Debug, Error)]
pub enum SettingsError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("{}unknown key `{key}`", at(*.line))]
    UnknownKey { line: Option<usize>, key: String },
    #[error("{}bad value for `{key}`: `{value}` ({reason})", at(*.line))]
    BadValue { line: Option<usize>, key: &'static str, value: String, reason: String },
    #[error("architecture: {0}")]
    Architecture(#[from] TopologyError),
    #[error("wireless: {0}")]
    Wireless(#[from] WirelessError),
    #[error("heatmap_bandwidth {0} is not one of sweep_bandwidths")]
    HeatmapBandwidth(f64),
    #[error("unknown bundled workload `{0}`")]
    UnknownWorkload(String),
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapperKind {
    Annealed,
    Greedy,
    Full,
}

impl MapperKind {
    fn name(self) -> &'static str {
        match self {
            MapperKind::Annealed => "annealed",
            MapperKind::Greedy => "greedy",
            MapperKind::Full => "full",
        }
    }
}

/// Every key, with the help text shown for its flag.
pub const KEYS: &[(&str, &str)] = &[
    ("grid_rows", "Compute chiplet rows"),
    ("grid_cols", "Compute chiplet columns"),
    (
        "dram_count",
        "DRAM chiplets at the N, S, E, W edge midpoints, in that order (0-4); ignored when dram_attach is set",
    ),
    ("dram_attach", "Explicit DRAM attach points, e.g. `N1,S1,E1,W1` (side letter + position along the side)"),
    ("dram_bandwidth", "DRAM bandwidth per DRAM chiplet, bytes/s"),
    ("nop_link_bandwidth", "Bandwidth of each directed NoP link, bits/s"),
    ("noc_link_bandwidth", "NoC bandwidth at each chiplet, bits/s"),
    ("chiplet_throughput", "MAC/s per compute chiplet"),
    ("noc_mesh_dim", "PE mesh side length inside a chiplet"),
    ("mapper", "Mapping strategy: annealed, greedy or full"),
    ("mapper_groups", "Chiplet groups for the greedy and annealed mappers"),
    ("mapper_seed", "Seed of the annealing mapper"),
    ("mapper_iterations", "Annealing iterations"),
    ("wired_energy_per_bit_hop", "Wired energy, J per bit per NoP hop"),
    ("wireless_energy_per_bit", "Wireless energy, J per bit"),
    ("nop_aggregation", "NoP time from the busiest link (max-link) or the average link load (total-volume)"),
    ("wireless", "Enable the wireless channel for single evaluations (true/false)"),
    ("wireless_bandwidth", "Wireless channel bandwidth for single evaluations, bits/s"),
    ("distance_threshold", "Minimum NoP hops (exclusive) for wireless eligibility"),
    ("injection_probability", "Probability that an eligible message goes wireless"),
    ("seed", "Seed of the injection draws for single evaluations"),
    ("gate", "Probability gate: all-eligible or multicast-bypass"),
    ("eligibility", "Eligibility rule: distance-gated or multicast-or-distance"),
    ("sweep_bandwidths", "Sweep axis: wireless bandwidths, bits/s"),
    ("sweep_thresholds", "Sweep axis: distance thresholds"),
    ("sweep_probabilities", "Sweep axis: injection probabilities"),
    ("sweep_seeds", "Seeds averaged at every sweep point"),
    ("heatmap_bandwidth", "Sweep bandwidth used for the heatmap CSVs, bits/s"),
    ("workloads", "Bundled workloads, comma separated, or `all`"),
    ("batch", "Batch size of the bundled workloads"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub dram_count: usize,
    pub dram_attach: Option<Vec<DramAttach>>,
    pub dram_bandwidth: f64,
    pub nop_link_bandwidth: f64,
    pub noc_link_bandwidth: f64,
    pub chiplet_throughput: f64,
    pub noc_mesh_dim: usize,
    pub mapper: MapperKind,
    pub mapper_groups: usize,
    pub mapper_seed: u64,
    pub mapper_iterations: usize,
    pub wired_energy_per_bit_hop: f64,
    pub wireless_energy_per_bit: f64,
    pub nop_aggregation: NopAggregation,
    pub wireless: bool,
    pub wireless_bandwidth: f64,
    pub distance_threshold: u32,
    pub injection_probability: f64,
    pub seed: u64,
    pub gate: GateMode,
    pub eligibility: EligibilityRule,
    pub sweep_bandwidths: Vec<f64>,
    pub sweep_thresholds: Vec<u32>,
    pub sweep_probabilities: Vec<f64>,
    pub sweep_seeds: Vec<u64>,
    pub heatmap_bandwidth: f64,
    pub workloads: Vec<String>,
    pub batch: u64,
}

impl Default for Settings {
    fn default() -> Self {
        let arch = ArchitectureSpec::default();
        let (groups, mapper_seed, iterations) = match Strategy::default() {
            Strategy::Annealed { groups, seed, iterations } => (groups, seed, iterations),
            _ => unreachable!("the default mapper anneals"),
        };
        let wireless = WirelessConfig::default();
        let grid = SweepGrid::default();
        let model = CostModel::default();
        Self {
            grid_rows: arch.grid_rows,
            grid_cols: arch.grid_cols,
            dram_count: arch.dram_count(),
            dram_attach: None,
            dram_bandwidth: arch.dram_bandwidth,
            nop_link_bandwidth: arch.nop_link_bandwidth,
            noc_link_bandwidth: arch.noc_link_bandwidth,
            chiplet_throughput: arch.chiplet_throughput,
            noc_mesh_dim: arch.noc_mesh_dim,
            mapper: MapperKind::Annealed,
            mapper_groups: groups,
            mapper_seed,
            mapper_iterations: iterations,
            wired_energy_per_bit_hop: model.wired_energy_per_bit_hop,
            wireless_energy_per_bit: model.wireless_energy_per_bit,
            nop_aggregation: model.nop_aggregation,
            wireless: wireless.enabled,
            wireless_bandwidth: wireless.bandwidth,
            distance_threshold: wireless.distance_threshold,
            injection_probability: wireless.injection_probability,
            seed: wireless.seed,
            gate: wireless.gate,
            eligibility: wireless.rule,
            heatmap_bandwidth: grid.bandwidths[0],
            sweep_bandwidths: grid.bandwidths,
            sweep_thresholds: grid.thresholds,
            sweep_probabilities: grid.probabilities,
            sweep_seeds: grid.seeds,
            workloads: Vec::new(),
            batch: zoo::DEFAULT_BATCH,
        }
    }
}

fn bad(key: &'static str, value: &str, reason: impl ToString) -> SettingsError {
    SettingsError::BadValue { line: None, key, value: value.into(), reason: reason.to_string() }
}

fn num<T: FromStr>(key: &'static str, value: &str) -> Result<T, SettingsError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, value, e))
}

fn list<T: FromStr>(key: &'static str, value: &str) -> Result<Vec<T>, SettingsError>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

fn flag(key: &'static str, value: &str) -> Result<bool, SettingsError> {
    match value.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn attach(value: &str) -> Result<DramAttach, SettingsError> {
    let value = value.trim();
    let split = value.find(|c: char| c.is_ascii_digit()).unwrap_or(value.len());
    let side =
        Side::from_name(&value[..split]).ok_or_else(|| bad("dram_attach", value, "side must be N, S, E or W"))?;
    Ok(DramAttach::new(side, num("dram_attach", &value[split..])?))
}

fn list_text<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl Settings {
    /// Key names, in file order.
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|(k, _)| *k)
    }

    /// Assigns one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SettingsError> {
        let key: &'static str = Self::keys()
            .find(|k| *k == key)
            .ok_or_else(|| SettingsError::UnknownKey { line: None, key: key.into() })?;
        match key {
            "grid_rows" => self.grid_rows = num(key, value)?,
            "grid_cols" => self.grid_cols = num(key, value)?,
            "dram_count" => self.dram_count = num(key, value)?,
            "dram_attach" => {
                self.dram_attach = match value.trim() {
                    "" | "midpoints" => None,
                    v => Some(v.split(',').map(attach).collect::<Result<_, _>>()?),
                }
            }
            "dram_bandwidth" => self.dram_bandwidth = num(key, value)?,
            "nop_link_bandwidth" => self.nop_link_bandwidth = num(key, value)?,
            "noc_link_bandwidth" => self.noc_link_bandwidth = num(key, value)?,
            "chiplet_throughput" => self.chiplet_throughput = num(key, value)?,
            "noc_mesh_dim" => self.noc_mesh_dim = num(key, value)?,
            "mapper" => {
                self.mapper = match value.trim() {
                    "annealed" => MapperKind::Annealed,
                    "greedy" => MapperKind::Greedy,
                    "full" => MapperKind::Full,
                    _ => return Err(bad(key, value, "expected annealed, greedy or full")),
                }
            }
            "mapper_groups" => self.mapper_groups = num(key, value)?,
            "mapper_seed" => self.mapper_seed = num(key, value)?,
            "mapper_iterations" => self.mapper_iterations = num(key, value)?,
            "wired_energy_per_bit_hop" => self.wired_energy_per_bit_hop = num(key, value)?,
            "wireless_energy_per_bit" => self.wireless_energy_per_bit = num(key, value)?,
            "nop_aggregation" => {
                self.nop_aggregation = match value.trim() {
                    "max-link" => NopAggregation::MaxLink,
                    "total-volume" => NopAggregation::TotalVolume,
                    _ => return Err(bad(key, value, "expected max-link or total-volume")),
                }
            }
            "wireless" => self.wireless = flag(key, value)?,
            "wireless_bandwidth" => self.wireless_bandwidth = num(key, value)?,
            "distance_threshold" => self.distance_threshold = num(key, value)?,
            "injection_probability" => self.injection_probability = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "gate" => {
                self.gate = match value.trim() {
                    "all-eligible" => GateMode::AllEligible,
                    "multicast-bypass" => GateMode::MulticastBypass,
                    _ => return Err(bad(key, value, "expected all-eligible or multicast-bypass")),
                }
            }
            "eligibility" => {
                self.eligibility = match value.trim() {
                    "distance-gated" => EligibilityRule::DistanceGated,
                    "multicast-or-distance" => EligibilityRule::MulticastOrDistance,
                    _ => return Err(bad(key, value, "expected distance-gated or multicast-or-distance")),
                }
            }
            "sweep_bandwidths" => self.sweep_bandwidths = list(key, value)?,
            "sweep_thresholds" => self.sweep_thresholds = list(key, value)?,
            "sweep_probabilities" => self.sweep_probabilities = list(key, value)?,
            "sweep_seeds" => self.sweep_seeds = list(key, value)?,
            "heatmap_bandwidth" => self.heatmap_bandwidth = num(key, value)?,
            "workloads" => {
                self.workloads = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
            }
            "batch" => self.batch = num(key, value)?,
            _ => unreachable!("key list and match arms disagree on `{key}`"),
        }
        Ok(())
    }

    /// Applies a settings file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), SettingsError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(SettingsError::Syntax { line: n + 1 })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                SettingsError::UnknownKey { key, .. } => SettingsError::UnknownKey { line: Some(n + 1), key },
                SettingsError::BadValue { key, value, reason, .. } => {
                    SettingsError::BadValue { line: Some(n + 1), key, value, reason }
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SettingsError> {
        let mut s = Self::default();
        s.apply_text(text)?;
        Ok(s)
    }

    /// Every key with its current value, one per line. Parsing the result
    /// gives back the same settings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::keys() {
            writeln!(out, "{key} = {}", self.value(key)).unwrap();
        }
        out
    }

    fn value(&self, key: &str) -> String {
        match key {
            "grid_rows" => self.grid_rows.to_string(),
            "grid_cols" => self.grid_cols.to_string(),
            "dram_count" => self.dram_count.to_string(),
            "dram_attach" => self.dram_attach.as_deref().map(list_text).unwrap_or_else(|| "midpoints".into()),
            "dram_bandwidth" => self.dram_bandwidth.to_string(),
            "nop_link_bandwidth" => self.nop_link_bandwidth.to_string(),
            "noc_link_bandwidth" => self.noc_link_bandwidth.to_string(),
            "chiplet_throughput" => self.chiplet_throughput.to_string(),
            "noc_mesh_dim" => self.noc_mesh_dim.to_string(),
            "mapper" => self.mapper.name().into(),
            "mapper_groups" => self.mapper_groups.to_string(),
            "mapper_seed" => self.mapper_seed.to_string(),
            "mapper_iterations" => self.mapper_iterations.to_string(),
            "wired_energy_per_bit_hop" => self.wired_energy_per_bit_hop.to_string(),
            "wireless_energy_per_bit" => self.wireless_energy_per_bit.to_string(),
            "nop_aggregation" => match self.nop_aggregation {
                NopAggregation::MaxLink => "max-link".into(),
                NopAggregation::TotalVolume => "total-volume".into(),
            },
            "wireless" => self.wireless.to_string(),
            "wireless_bandwidth" => self.wireless_bandwidth.to_string(),
            "distance_threshold" => self.distance_threshold.to_string(),
            "injection_probability" => self.injection_probability.to_string(),
            "seed" => self.seed.to_string(),
            "gate" => match self.gate {
                GateMode::AllEligible => "all-eligible".into(),
                GateMode::MulticastBypass => "multicast-bypass".into(),
            },
            "eligibility" => match self.eligibility {
                EligibilityRule::DistanceGated => "distance-gated".into(),
                EligibilityRule::MulticastOrDistance => "multicast-or-distance".into(),
            },
            "sweep_bandwidths" => list_text(&self.sweep_bandwidths),
            "sweep_thresholds" => list_text(&self.sweep_thresholds),
            "sweep_probabilities" => list_text(&self.sweep_probabilities),
            "sweep_seeds" => list_text(&self.sweep_seeds),
            "heatmap_bandwidth" => self.heatmap_bandwidth.to_string(),
            "workloads" => self.workloads.join(", "),
            "batch" => self.batch.to_string(),
            _ => unreachable!("unknown key `{key}`"),
        }
    }

    pub fn architecture(&self) -> Result<ArchitectureSpec, SettingsError> {
        let dram_attach_points = match &self.dram_attach {
            Some(points) => points.clone(),
            None => midpoint_attach_points(self.grid_rows, self.grid_cols, self.dram_count)?,
        };
        let spec = ArchitectureSpec {
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            dram_bandwidth: self.dram_bandwidth,
            nop_link_bandwidth: self.nop_link_bandwidth,
            noc_link_bandwidth: self.noc_link_bandwidth,
            chiplet_throughput: self.chiplet_throughput,
            noc_mesh_dim: self.noc_mesh_dim,
            dram_attach_points,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn package(&self) -> Result<Package, SettingsError> {
        Ok(Package::new(self.architecture()?)?)
    }

    pub fn strategy(&self) -> Strategy {
        match self.mapper {
            MapperKind::Annealed => Strategy::Annealed {
                groups: self.mapper_groups,
                seed: self.mapper_seed,
                iterations: self.mapper_iterations,
            },
            MapperKind::Greedy => Strategy::GreedyGroups { groups: self.mapper_groups },
            MapperKind::Full => Strategy::FullSpatial,
        }
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel {
            wired_energy_per_bit_hop: self.wired_energy_per_bit_hop,
            wireless_energy_per_bit: self.wireless_energy_per_bit,
            nop_aggregation: self.nop_aggregation,
        }
    }

    pub fn wireless_config(&self) -> Result<WirelessConfig, SettingsError> {
        let config = WirelessConfig {
            enabled: self.wireless,
            bandwidth: self.wireless_bandwidth,
            distance_threshold: self.distance_threshold,
            injection_probability: self.injection_probability,
            seed: self.seed,
            gate: self.gate,
            rule: self.eligibility,
        };
        config.validate()?;
        Ok(config)
    }

    /// The sweep grid and the index of the heatmap bandwidth in it.
    pub fn grid(&self) -> Result<(SweepGrid, usize), SettingsError> {
        let grid = SweepGrid {
            bandwidths: self.sweep_bandwidths.clone(),
            thresholds: self.sweep_thresholds.clone(),
            probabilities: self.sweep_probabilities.clone(),
            seeds: self.sweep_seeds.clone(),
            gate: self.gate,
            rule: self.eligibility,
        };
        grid.validate().map_err(|e| bad("sweep_*", "", e))?;
        let heat = grid
            .bandwidths
            .iter()
            .position(|&b| b == self.heatmap_bandwidth)
            .ok_or(SettingsError::HeatmapBandwidth(self.heatmap_bandwidth))?;
        Ok((grid, heat))
    }

    /// Bundled workload names selected by `workloads`, with `all` expanded.
    pub fn bundled_names(&self) -> Result<Vec<String>, SettingsError> {
        let mut names = Vec::new();
        for w in &self.workloads {
            if w == "all" {
                names.extend(zoo::BUNDLED.iter().map(|s| s.to_string()));
            } else if zoo::BUNDLED.contains(&w.as_str()) {
                names.push(w.clone());
            } else {
                return Err(SettingsError::UnknownWorkload(w.clone()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        names.retain(|n| seen.insert(n.clone()));
        Ok(names)
    }
}
