mod common;

use proptest::prelude::*;
use wnop_core::cost::CostModel;
use wnop_core::explorer::{
    assemble, evaluate_task, figure_data, run_sweep, tasks, Case, SweepGrid, FIG2_HEADER, FIG4_HEADER,
};
use wnop_core::mapper::Strategy as MapStrategy;

fn small_grid() -> SweepGrid {
    SweepGrid {
        bandwidths: vec![64e9, 96e9],
        thresholds: vec![1, 3],
        probabilities: vec![0.1, 0.5, 0.8],
        seeds: vec![1, 2],
        ..SweepGrid::default()
    }
}

fn cases() -> Vec<Case> {
    let package = common::default_package();
    ["zfnet", "darknet19"]
        .iter()
        .map(|name| {
            let graph = wnop_core::zoo::build_batched(name, 8).unwrap();
            Case::prepare(graph, &package, &MapStrategy::GreedyGroups { groups: 3 }, &CostModel::default()).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn task_order_does_not_matter(order in Just((0..24usize).collect::<Vec<_>>()).prop_shuffle()) {
        let package = common::default_package();
        let model = CostModel::default();
        let grid = small_grid();
        let cases = cases();
        let all = tasks(&cases, &grid);
        prop_assert_eq!(all.len(), 24);
        let shuffled: Vec<_> = order
            .iter()
            .map(|&i| (all[i], evaluate_task(&cases, &package, &model, &grid, all[i]).unwrap()))
            .collect();
        let a = assemble(&cases, &grid, shuffled).unwrap();
        let b = run_sweep(&cases, &package, &model, &grid).unwrap();
        prop_assert_eq!(figure_data(&a, 0), figure_data(&b, 0));
    }
}

#[test]
fn missing_task_is_reported() {
    let package = common::default_package();
    let model = CostModel::default();
    let grid = small_grid();
    let cases = cases();
    let mut results: Vec<_> = tasks(&cases, &grid)
        .into_iter()
        .map(|t| (t, evaluate_task(&cases, &package, &model, &grid, t).unwrap()))
        .collect();
    results.pop();
    assert!(assemble(&cases, &grid, results).is_err());
}

#[test]
fn figure_files_have_the_expected_shape() {
    let package = common::default_package();
    let grid = small_grid();
    let result = run_sweep(&cases(), &package, &CostModel::default(), &grid).unwrap();
    let files = figure_data(&result, 1);
    let names: Vec<_> = files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(
        names,
        ["fig2_bottlenecks.csv", "fig4_speedups.csv", "fig5_heatmap_zfnet.csv", "fig5_heatmap_darknet19.csv"]
    );

    let fig2: Vec<&str> = files[0].contents.lines().collect();
    assert_eq!(fig2[0], FIG2_HEADER);
    assert_eq!(fig2.len(), 3);
    for row in &fig2[1..] {
        let sum: f64 = row.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-4, "{row}");
    }

    let fig4: Vec<&str> = files[1].contents.lines().collect();
    assert_eq!(fig4[0], FIG4_HEADER);
    assert_eq!(fig4.len(), 1 + 2 * 2);
    for row in &fig4[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 7);
        let (speedup, base, hybrid): (f64, f64, f64) =
            (f[2].parse().unwrap(), f[5].parse().unwrap(), f[6].parse().unwrap());
        // averaged over two seeds, so compare loosely against the mean latency
        assert!(speedup.is_finite() && base > 0.0 && hybrid > 0.0);
    }

    let heat: Vec<&str> = files[2].contents.lines().collect();
    assert_eq!(heat[0], "threshold,0.1,0.5,0.8");
    assert_eq!(heat.len(), 3);
    assert!(heat[1].starts_with("1,") && heat[2].starts_with("3,"));
    let w = result.workload("zfnet").unwrap();
    let cell = &w.plane(&grid, 1)[2];
    assert_eq!(heat[1].split(',').nth(3).unwrap(), wnop_core::explorer::format_sig(cell.speedup));
}
