//! Parallel sweeps and the run manifest.

use rayon::prelude::*;
use serde::Serialize;
use wnop_core::cost::CostModel;
use wnop_core::explorer::{self, assemble, evaluate_task, Case, CsvFile, ExplorerError, SweepGrid, SweepResult};
use wnop_core::mapper::{Mapping, Strategy};
use wnop_core::topology::{ArchitectureSpec, Package};
use wnop_core::workload::WorkloadGraph;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Crate version plus the git revision it was built from, when known.
pub fn code_version() -> String {
    match option_env!("WNOP_GIT_REVISION") {
        Some(rev) if !rev.is_empty() => format!("{} ({rev})", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

/// Maps (unless a mapping is given) and evaluates the baseline of every
/// workload, `jobs` at a time.
pub fn prepare_cases(
    inputs: Vec<(WorkloadGraph, Option<Mapping>)>,
    package: &Package,
    strategy: Strategy,
    model: &CostModel,
    jobs: usize,
) -> Result<Vec<Case>, ExplorerError> {
    pool(jobs).install(|| {
        inputs
            .into_par_iter()
            .map(|(graph, mapping)| match mapping {
                Some(m) => Case::new(graph, m, package, model),
                None => Case::prepare(graph, package, &strategy, model),
            })
            .collect()
    })
}

/// Same result as [`explorer::run_sweep`] for any `jobs`.
pub fn run(
    cases: &[Case],
    package: &Package,
    model: &CostModel,
    grid: &SweepGrid,
    jobs: usize,
) -> Result<SweepResult, ExplorerError> {
    grid.validate()?;
    let tasks = explorer::tasks(cases, grid);
    let results = pool(jobs).install(|| {
        tasks
            .par_iter()
            .map(|&t| evaluate_task(cases, package, model, grid, t).map(|r| (t, r)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    assemble(cases, grid, results)
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestWorkload {
    pub name: String,
    /// `bundled` or the file it was read from.
    pub source: String,
    pub layers: usize,
    pub total_macs: u64,
    /// `mapper` or the mapping file used.
    pub mapping: String,
    pub baseline_latency_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub bytes: usize,
}

/// What a sweep was run with. Contains no timestamps, so repeated runs
/// write identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub code_version: String,
    /// The effective settings, in settings-file syntax.
    pub settings: String,
    pub architecture: ArchitectureSpec,
    pub cost_model: CostModel,
    pub strategy: Strategy,
    pub grid: SweepGrid,
    pub seeds: Vec<u64>,
    pub heatmap_bandwidth: f64,
    pub workloads: Vec<ManifestWorkload>,
    pub files: Vec<ManifestFile>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest holds only plain data");
        s.push('\n');
        s
    }

    pub fn list_files(&mut self, files: &[CsvFile]) {
        self.files = files.iter().map(|f| ManifestFile { name: f.name.clone(), bytes: f.contents.len() }).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wnop_core::explorer::figure_data;

    #[test]
    fn worker_count_does_not_change_results() {
        let package = Package::new(ArchitectureSpec::default()).unwrap();
        let model = CostModel::default();
        let inputs: Vec<_> =
            ["zfnet", "lstm", "darknet19"].iter().map(|n| (wnop_core::zoo::build(n).unwrap(), None)).collect();
        let strategy = Strategy::GreedyGroups { groups: 3 };
        let grid = SweepGrid { probabilities: vec![0.2, 0.6], ..SweepGrid::default() };
        let cases = prepare_cases(inputs, &package, strategy, &model, 3).unwrap();
        let serial = explorer::run_sweep(&cases, &package, &model, &grid).unwrap();
        for jobs in [1, 2, 7] {
            let parallel = run(&cases, &package, &model, &grid, jobs).unwrap();
            assert_eq!(figure_data(&parallel, 0), figure_data(&serial, 0), "jobs = {jobs}");
        }
    }
}
