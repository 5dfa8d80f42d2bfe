//! Wireless parameter sweeps and the tables behind the figures.
//!
//! A sweep freezes one mapping per workload, evaluates the wired baseline
//! once, then evaluates every (bandwidth, threshold, probability) point for
//! every seed. Points are independent [`Task`]s so a caller may evaluate them
//! in any order or in parallel; [`assemble`] puts the results back in grid
//! order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostModel, Resource, RunResult};
use crate::mapper::{self, MapError, Mapping, Strategy};
use crate::topology::Package;
use crate::wireless::{
    self, hybrid_evaluate, sweep_probabilities, EligibilityRule, GateMode, WirelessConfig, WirelessError,
    SWEEP_BANDWIDTHS, SWEEP_THRESHOLDS,
};
use crate::workload::{WorkloadError, WorkloadGraph};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExplorerError {
    #[error("sweep grid has no {0}")]
    EmptyGrid(&'static str),
    #[error("mapping {workload}: {source}")]
    Map { workload: String, source: MapError },
    #[error("baseline {workload}: {source}")]
    Baseline { workload: String, source: WorkloadError },
    #[error("{workload} at {point}: {source}")]
    Point { workload: String, point: String, source: WirelessError },
    #[error("sweep result is missing {workload} at {point}")]
    Missing { workload: String, point: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepGrid {
    /// Bits per second.
    pub bandwidths: Vec<f64>,
    pub thresholds: Vec<u32>,
    pub probabilities: Vec<f64>,
    pub seeds: Vec<u64>,
    pub gate: GateMode,
    pub rule: EligibilityRule,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            bandwidths: SWEEP_BANDWIDTHS.to_vec(),
            thresholds: SWEEP_THRESHOLDS.to_vec(),
            probabilities: sweep_probabilities(),
            seeds: alloc::vec![1],
            gate: GateMode::default(),
            rule: EligibilityRule::default(),
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), ExplorerError> {
        if self.bandwidths.is_empty() {
            return Err(ExplorerError::EmptyGrid("bandwidths"));
        }
        if self.thresholds.is_empty() {
            return Err(ExplorerError::EmptyGrid("thresholds"));
        }
        if self.probabilities.is_empty() {
            return Err(ExplorerError::EmptyGrid("probabilities"));
        }
        if self.seeds.is_empty() {
            return Err(ExplorerError::EmptyGrid("seeds"));
        }
        Ok(())
    }

    /// Points per bandwidth.
    pub fn plane_len(&self) -> usize {
        self.thresholds.len() * self.probabilities.len()
    }

    pub fn len(&self) -> usize {
        self.bandwidths.len() * self.plane_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, bandwidth-major, then threshold, then probability.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut points = Vec::with_capacity(self.len());
        for bandwidth in 0..self.bandwidths.len() {
            for threshold in 0..self.thresholds.len() {
                for probability in 0..self.probabilities.len() {
                    points.push(GridPoint { bandwidth, threshold, probability });
                }
            }
        }
        points
    }

    /// Position of `point` in [`SweepGrid::points`].
    pub fn index(&self, point: GridPoint) -> usize {
        (point.bandwidth * self.thresholds.len() + point.threshold) * self.probabilities.len() + point.probability
    }

    pub fn config(&self, point: GridPoint, seed: u64) -> WirelessConfig {
        WirelessConfig {
            enabled: true,
            bandwidth: self.bandwidths[point.bandwidth],
            distance_threshold: self.thresholds[point.threshold],
            injection_probability: self.probabilities[point.probability],
            seed,
            gate: self.gate,
            rule: self.rule,
        }
    }

    pub fn describe(&self, point: GridPoint) -> String {
        format!(
            "bw={}Gb/s dth={} p={}",
            self.bandwidths[point.bandwidth] / 1e9,
            self.thresholds[point.threshold],
            self.probabilities[point.probability]
        )
    }
}

/// Indices into the three grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridPoint {
    pub bandwidth: usize,
    pub threshold: usize,
    pub probability: usize,
}

/// A workload with its frozen mapping and wired baseline.
#[derive(Debug, Clone)]
pub struct Case {
    pub graph: WorkloadGraph,
    pub mapping: Mapping,
    pub baseline: RunResult,
}

impl Case {
    pub fn new(
        graph: WorkloadGraph,
        mapping: Mapping,
        package: &Package,
        model: &CostModel,
    ) -> Result<Self, ExplorerError> {
        let baseline = cost::evaluate(&graph, &mapping, package, model)
            .map_err(|source| ExplorerError::Baseline { workload: graph.name().into(), source })?;
        Ok(Self { graph, mapping, baseline })
    }

    /// Maps `graph` with `strategy` and evaluates its baseline.
    pub fn prepare(
        graph: WorkloadGraph,
        package: &Package,
        strategy: &Strategy,
        model: &CostModel,
    ) -> Result<Self, ExplorerError> {
        let mapping = mapper::map_workload(&graph, package, *strategy)
            .map_err(|source| ExplorerError::Map { workload: graph.name().into(), source })?;
        Self::new(graph, mapping, package, model)
    }

    pub fn name(&self) -> &str {
        self.graph.name()
    }
}

/// One grid point of one workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Task {
    pub case: usize,
    pub point: GridPoint,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PointResult {
    pub point: GridPoint,
    /// Mean over seeds.
    pub speedup: f64,
    /// Mean over seeds, seconds.
    pub total_latency: f64,
    /// Mean over seeds.
    pub wireless_messages: f64,
    /// One latency per seed, in seed order.
    pub seed_latencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WorkloadSweep {
    pub workload: String,
    pub baseline: RunResult,
    /// In [`SweepGrid::points`] order.
    pub points: Vec<PointResult>,
}

impl WorkloadSweep {
    /// Highest speedup at one bandwidth; ties go to the lowest threshold,
    /// then the lowest probability.
    pub fn best(&self, grid: &SweepGrid, bandwidth: usize) -> &PointResult {
        let plane = self.plane(grid, bandwidth);
        let mut best = &plane[0];
        for p in &plane[1..] {
            if p.speedup > best.speedup {
                best = p;
            }
        }
        best
    }

    pub fn plane<'a>(&'a self, grid: &SweepGrid, bandwidth: usize) -> &'a [PointResult] {
        let n = grid.plane_len();
        &self.points[bandwidth * n..(bandwidth + 1) * n]
    }

    pub fn cell(&self, grid: &SweepGrid, point: GridPoint) -> &PointResult {
        &self.points[grid.index(point)]
    }

    /// Speedup matrix at one bandwidth, thresholds by probabilities.
    pub fn heatmap(&self, grid: &SweepGrid, bandwidth: usize) -> Heatmap {
        let cells = self
            .plane(grid, bandwidth)
            .chunks(grid.probabilities.len())
            .map(|row| row.iter().map(|p| p.speedup).collect())
            .collect();
        Heatmap {
            workload: self.workload.clone(),
            bandwidth: grid.bandwidths[bandwidth],
            thresholds: grid.thresholds.clone(),
            probabilities: grid.probabilities.clone(),
            cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub workloads: Vec<WorkloadSweep>,
}

impl SweepResult {
    pub fn workload(&self, name: &str) -> Option<&WorkloadSweep> {
        self.workloads.iter().find(|w| w.workload == name)
    }
}

/// Every task of a sweep, in grid order.
pub fn tasks(cases: &[Case], grid: &SweepGrid) -> Vec<Task> {
    let points = grid.points();
    (0..cases.len()).flat_map(|case| points.iter().map(move |&point| Task { case, point })).collect()
}

/// Evaluates one task for every seed of the grid.
pub fn evaluate_task(
    cases: &[Case],
    package: &Package,
    model: &CostModel,
    grid: &SweepGrid,
    task: Task,
) -> Result<PointResult, ExplorerError> {
    let case = &cases[task.case];
    let base = case.baseline.total_latency;
    let mut seed_latencies = Vec::with_capacity(grid.seeds.len());
    let mut speedup = 0.0;
    let mut messages = 0.0;
    for &seed in &grid.seeds {
        let config = grid.config(task.point, seed);
        let run = hybrid_evaluate(&case.graph, &case.mapping, package, &config, model).map_err(|source| {
            ExplorerError::Point { workload: case.name().into(), point: grid.describe(task.point), source }
        })?;
        speedup += wireless::speedup(base, run.result.total_latency);
        messages += run.ledger.wireless_messages as f64;
        seed_latencies.push(run.result.total_latency);
    }
    let n = grid.seeds.len() as f64;
    let total_latency = seed_latencies.iter().sum::<f64>() / n;
    Ok(PointResult {
        point: task.point,
        speedup: speedup / n,
        total_latency,
        wireless_messages: messages / n,
        seed_latencies,
    })
}

/// Gathers task results, in any order, into a sweep result.
pub fn assemble<I>(cases: &[Case], grid: &SweepGrid, results: I) -> Result<SweepResult, ExplorerError>
where
    I: IntoIterator<Item = (Task, PointResult)>,
{
    let mut slots: Vec<Vec<Option<PointResult>>> = cases.iter().map(|_| alloc::vec![None; grid.len()]).collect();
    for (task, result) in results {
        slots[task.case][grid.index(task.point)] = Some(result);
    }
    let points = grid.points();
    let workloads = cases
        .iter()
        .zip(slots)
        .map(|(case, slot)| {
            let points = slot
                .into_iter()
                .zip(&points)
                .map(|(r, &p)| {
                    r.ok_or_else(|| ExplorerError::Missing { workload: case.name().into(), point: grid.describe(p) })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(WorkloadSweep { workload: case.name().into(), baseline: case.baseline.clone(), points })
        })
        .collect::<Result<Vec<_>, ExplorerError>>()?;
    Ok(SweepResult { grid: grid.clone(), workloads })
}

/// Sequential sweep over every case and grid point.
pub fn run_sweep(
    cases: &[Case],
    package: &Package,
    model: &CostModel,
    grid: &SweepGrid,
) -> Result<SweepResult, ExplorerError> {
    grid.validate()?;
    let results = tasks(cases, grid)
        .into_iter()
        .map(|t| evaluate_task(cases, package, model, grid, t).map(|r| (t, r)))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(cases, grid, results)
}

/// Threshold by probability speedups of one workload at one bandwidth.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Heatmap {
    pub workload: String,
    pub bandwidth: f64,
    pub thresholds: Vec<u32>,
    pub probabilities: Vec<f64>,
    /// `cells[threshold][probability]`.
    pub cells: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold");
        for p in &self.probabilities {
            out.push(',');
            out.push_str(&format_sig(*p));
        }
        out.push('\n');
        for (t, row) in self.thresholds.iter().zip(&self.cells) {
            out.push_str(&format!("{t}"));
            for v in row {
                out.push(',');
                out.push_str(&format_sig(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Heatmap of a single workload at `bandwidth`, sweeping the threshold and
/// probability axes of `grid`.
pub fn heatmap(
    case: &Case,
    package: &Package,
    model: &CostModel,
    bandwidth: f64,
    grid: &SweepGrid,
) -> Result<Heatmap, ExplorerError> {
    let grid = SweepGrid { bandwidths: alloc::vec![bandwidth], ..grid.clone() };
    let result = run_sweep(core::slice::from_ref(case), package, model, &grid)?;
    Ok(result.workloads[0].heatmap(&grid, 0))
}

/// One CSV file of a figure bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFile {
    pub name: String,
    pub contents: String,
}

pub const FIG2_HEADER: &str = "workload,compute,dram,noc,nop,wireless";
pub const FIG4_HEADER: &str =
    "workload,bandwidth_gbps,best_speedup,threshold,probability,baseline_latency_s,hybrid_latency_s";

/// Builds `fig2_bottlenecks.csv`, `fig4_speedups.csv` and one
/// `fig5_heatmap_<workload>.csv` per workload at the bandwidth with index
/// `heatmap_bandwidth`.
pub fn figure_data(result: &SweepResult, heatmap_bandwidth: usize) -> Vec<CsvFile> {
    let grid = &result.grid;
    let mut fig2 = String::from(FIG2_HEADER);
    fig2.push('\n');
    for row in cost::bottleneck_report(result.workloads.iter().map(|w| (w.workload.as_str(), &w.baseline))) {
        fig2.push_str(&row.workload);
        for r in Resource::ALL {
            fig2.push(',');
            fig2.push_str(&format_sig(row.shares.get(r)));
        }
        fig2.push('\n');
    }

    let mut fig4 = String::from(FIG4_HEADER);
    fig4.push('\n');
    for w in &result.workloads {
        for b in 0..grid.bandwidths.len() {
            let best = w.best(grid, b);
            fig4.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                w.workload,
                format_sig(grid.bandwidths[b] / 1e9),
                format_sig(best.speedup),
                grid.thresholds[best.point.threshold],
                format_sig(grid.probabilities[best.point.probability]),
                format_sig(w.baseline.total_latency),
                format_sig(best.total_latency),
            ));
        }
    }

    let mut files = alloc::vec![
        CsvFile { name: "fig2_bottlenecks.csv".into(), contents: fig2 },
        CsvFile { name: "fig4_speedups.csv".into(), contents: fig4 },
    ];
    for w in &result.workloads {
        files.push(CsvFile {
            name: format!("fig5_heatmap_{}.csv", w.workload),
            contents: w.heatmap(grid, heatmap_bandwidth).to_csv(),
        });
    }
    files
}

/// Formats `x` with six significant digits, in plain decimal notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return String::from("0");
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = libm::floor(libm::log10(libm::fabs(x))) as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit; drop the extra decimal
    let digits = s.bytes().filter(u8::is_ascii_digit).skip_while(|&b| b == b'0').count();
    let s = if digits > 6 && decimals > 0 { format!("{x:.prec$}", prec = decimals - 1) } else { s };
    trim_zeros(s)
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        String::from("0")
    } else {
        String::from(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::ArchitectureSpec;
    use crate::zoo;

    fn setup(name: &str) -> (Package, Case) {
        let package = Package::new(ArchitectureSpec::default()).unwrap();
        let graph = zoo::build(name).unwrap();
        let case =
            Case::prepare(graph, &package, &Strategy::GreedyGroups { groups: 3 }, &CostModel::default()).unwrap();
        (package, case)
    }

    #[test]
    fn default_grid_matches_table() {
        let g = SweepGrid::default();
        assert_eq!(g.len(), 120);
        assert_eq!(g.plane_len(), 60);
        assert_eq!(g.seeds, [1]);
        for (i, p) in g.points().into_iter().enumerate() {
            assert_eq!(g.index(p), i);
        }
    }

    #[test]
    fn empty_axes_are_rejected() {
        let g = SweepGrid { seeds: Vec::new(), ..SweepGrid::default() };
        assert_eq!(g.validate(), Err(ExplorerError::EmptyGrid("seeds")));
        let g = SweepGrid { thresholds: Vec::new(), ..SweepGrid::default() };
        assert_eq!(g.validate(), Err(ExplorerError::EmptyGrid("thresholds")));
    }

    #[test]
    fn zero_probability_column_is_zero() {
        let (package, case) = setup("vgg");
        let grid = SweepGrid { probabilities: alloc::vec![0.0, 0.5], ..SweepGrid::default() };
        let map = heatmap(&case, &package, &CostModel::default(), 96e9, &grid).unwrap();
        assert!(map.cells.iter().all(|row| row[0] == 0.0));
    }

    #[test]
    fn assembly_ignores_result_order() {
        let (package, case) = setup("darknet19");
        let cases = [case];
        let grid = SweepGrid { probabilities: alloc::vec![0.2, 0.6], ..SweepGrid::default() };
        let model = CostModel::default();
        let forward = run_sweep(&cases, &package, &model, &grid).unwrap();
        let mut results: Vec<_> = tasks(&cases, &grid)
            .into_iter()
            .map(|t| (t, evaluate_task(&cases, &package, &model, &grid, t).unwrap()))
            .collect();
        results.reverse();
        assert_eq!(assemble(&cases, &grid, results).unwrap(), forward);
    }

    #[test]
    fn missing_points_are_reported() {
        let (_, case) = setup("darknet19");
        let grid = SweepGrid::default();
        assert!(matches!(assemble(&[case], &grid, Vec::new()), Err(ExplorerError::Missing { .. })));
    }

    #[test]
    fn best_prefers_lowest_threshold_then_probability() {
        let grid = SweepGrid {
            bandwidths: alloc::vec![1.0],
            thresholds: alloc::vec![1, 2],
            probabilities: alloc::vec![0.1, 0.2],
            ..SweepGrid::default()
        };
        let point = |t, p, s| PointResult {
            point: GridPoint { bandwidth: 0, threshold: t, probability: p },
            speedup: s,
            total_latency: 1.0,
            wireless_messages: 0.0,
            seed_latencies: alloc::vec![1.0],
        };
        let sweep = WorkloadSweep {
            workload: "w".into(),
            baseline: RunResult::from_layers(Vec::new(), 0.0),
            points: alloc::vec![point(0, 0, 0.1), point(0, 1, 0.3), point(1, 0, 0.3), point(1, 1, 0.2)],
        };
        assert_eq!(sweep.best(&grid, 0).point, GridPoint { bandwidth: 0, threshold: 0, probability: 1 });
    }

    #[test]
    fn figure_bundle_layout() {
        let (package, case) = setup("zfnet");
        let grid = SweepGrid { probabilities: alloc::vec![0.1, 0.5], ..SweepGrid::default() };
        let result = run_sweep(&[case], &package, &CostModel::default(), &grid).unwrap();
        let files = figure_data(&result, 0);
        let names: Vec<_> = files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["fig2_bottlenecks.csv", "fig4_speedups.csv", "fig5_heatmap_zfnet.csv"]);
        assert_eq!(files[1].contents.lines().count(), 1 + 2);
        let heat: Vec<_> = files[2].contents.lines().collect();
        assert_eq!(heat[0], "threshold,0.1,0.5");
        assert_eq!(heat.len(), 5);
        let shares: f64 =
            files[0].contents.lines().nth(1).unwrap().split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((shares - 1.0).abs() < 1e-5);
        assert_eq!(figure_data(&result, 0), files);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(0.1), "0.1");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig(-0.0123456789), "-0.0123457");
        assert_eq!(format_sig(123456.7), "123457");
        assert_eq!(format_sig(9.9999996), "10");
        assert_eq!(format_sig(64.0), "64");
        assert_eq!(format_sig(1.5e-9), "1.50000e-9");
        assert_eq!(format_sig(2.5e7), "2.50000e7");
    }
}
