//! Evaluation reports: a JSON document per run, summary CSV rows and a
//! per-layer ledger CSV.

use std::fmt::Write as _;

use serde::Serialize;
use wnop_core::cost::{CostModel, Resource, RunResult};
use wnop_core::explorer::format_sig;
use wnop_core::topology::ArchitectureSpec;
use wnop_core::wireless::{ChannelLedger, WirelessConfig};
use wnop_core::workload::WorkloadGraph;

pub const SUMMARY_HEADER: &str = "workload,config,total_latency_s,compute,dram,noc,nop,wireless,energy_j";
pub const LEDGER_HEADER: &str =
    "layer,compute_s,dram_s,noc_s,nop_s,wireless_s,bottleneck,wireless_bits,wireless_messages,shadow_nop_hops";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub workload: String,
    pub architecture: ArchitectureSpec,
    pub cost_model: CostModel,
    pub wireless: WirelessConfig,
    pub baseline: RunResult,
    pub hybrid: RunResult,
    /// Relative latency reduction over the baseline; 0 when wireless is off.
    pub speedup: f64,
    pub ledger: ChannelLedger,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports hold only plain data");
        s.push('\n');
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        out.push_str(&summary_row(&self.workload, "wired", &self.baseline));
        if self.wireless.enabled {
            out.push_str(&summary_row(&self.workload, &config_label(&self.wireless), &self.hybrid));
        }
        out
    }
}

/// Short comma-free description of a wireless configuration.
pub fn config_label(config: &WirelessConfig) -> String {
    if !config.enabled {
        return "wired".into();
    }
    format!(
        "wireless bw_gbps={} threshold={} p={} seed={}",
        format_sig(config.bandwidth / 1e9),
        config.distance_threshold,
        format_sig(config.injection_probability),
        config.seed
    )
}

pub fn summary_row(workload: &str, config: &str, run: &RunResult) -> String {
    let mut row = format!("{workload},{config},{}", format_sig(run.total_latency));
    for r in Resource::ALL {
        write!(row, ",{}", format_sig(run.bottleneck_shares.get(r))).unwrap();
    }
    writeln!(row, ",{}", format_sig(run.energy)).unwrap();
    row
}

pub fn resource_name(r: Resource) -> &'static str {
    match r {
        Resource::Compute => "compute",
        Resource::Dram => "dram",
        Resource::Noc => "noc",
        Resource::Nop => "nop",
        Resource::Wireless => "wireless",
    }
}

/// One row per layer with its resource times and wireless counters.
pub fn ledger_csv(graph: &WorkloadGraph, run: &RunResult, ledger: &ChannelLedger) -> String {
    let mut out = format!("{LEDGER_HEADER}\n");
    for ((layer, t), l) in graph.layers().iter().zip(&run.layers).zip(&ledger.layers) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            layer.id,
            format_sig(t.compute_time),
            format_sig(t.dram_time),
            format_sig(t.noc_time),
            format_sig(t.nop_time),
            format_sig(t.wireless_time),
            resource_name(t.bottleneck),
            l.wireless_bits,
            l.wireless_messages,
            l.shadow_nop_hops
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use wnop_core::cost::LayerTiming;

    #[test]
    fn summary_rows_have_nine_columns() {
        let run = RunResult::from_layers(vec![LayerTiming::new(1.0, 0.0, 0.5, 3.0, 0.0)], 2e-6);
        let row = summary_row("w", "wired", &run);
        assert_eq!(row, "w,wired,3,0,0,0,1,0,2e-6\n".replace("2e-6", &format_sig(2e-6)));
        assert_eq!(row.trim_end().split(',').count(), SUMMARY_HEADER.split(',').count());
    }

    #[test]
    fn labels_have_no_commas() {
        let c = WirelessConfig { injection_probability: 0.3, seed: 7, ..WirelessConfig::default() };
        assert_eq!(config_label(&c), "wireless bw_gbps=64 threshold=1 p=0.3 seed=7");
        assert_eq!(config_label(&WirelessConfig::disabled()), "wired");
    }
}
