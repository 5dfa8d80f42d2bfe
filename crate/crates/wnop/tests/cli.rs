use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wnop::settings::Settings;
use wnop_core::explorer::format_sig;

fn wnop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wnop")).args(args).current_dir(dir).env_remove("WNOP_OUT_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_GRID: &[&str] =
    &["--sweep-thresholds", "1,3", "--sweep-probabilities", "0.1,0.5,0.8", "--mapper", "greedy"];

fn read_dir(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read_to_string(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn help_lists_every_settings_flag() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["evaluate", "sweep", "map", "validate"] {
        let o = wnop(tmp.path(), &[sub, "--help"]);
        assert_eq!(code(&o), 0);
        let help = String::from_utf8(o.stdout).unwrap();
        for key in Settings::keys() {
            assert!(help.contains(&format!("--{}", key.replace('_', "-"))), "{sub}: {key}");
        }
        assert!(help.contains("WNOP_OUT_DIR"));
    }
}

#[test]
fn usage_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&wnop(tmp.path(), &["sweep", "--no-such-flag"])), 2);
    assert_eq!(code(&wnop(tmp.path(), &["frobnicate"])), 2);
    assert_eq!(code(&wnop(tmp.path(), &["evaluate", "--workloads", "zfnet", "--grid-rows", "many"])), 2);
    assert_eq!(code(&wnop(tmp.path(), &["evaluate"])), 2);
}

#[test]
fn sweep_without_output_dir_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wnop(tmp.path(), &["sweep", "--workloads", "zfnet"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("output directory"));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn input_errors_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("bad.wl"), "workload w\na 1 2 3 4 missing\n").unwrap();
    fs::write(d.join("bad.cfg"), "grid_rows = 3\nfrequency = 2\n").unwrap();
    let cases: [&[&str]; 5] = [
        &["validate", "--workload-file", "bad.wl"],
        &["validate", "--workload-file", "absent.wl"],
        &["validate", "--config", "bad.cfg"],
        &["validate", "--workloads", "nonet"],
        &["validate", "--dram-count", "0", "--workloads", "zfnet", "--mappings", "."],
    ];
    for args in cases {
        let o = wnop(d, args);
        assert_eq!(code(&o), 3, "{args:?}: {}", stderr(&o));
    }
    let o = wnop(d, &["validate", "--config", "bad.cfg"]);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn validate_accepts_bundled_files() {
    let tmp = tempfile::tempdir().unwrap();
    let file = Path::new(wnop::BUNDLED_DIR).join("zfnet.wl");
    let o = wnop(tmp.path(), &["validate", "--workload-file", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok: workload zfnet"));
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("run.cfg"), "grid_rows = 2\nnop_link_bandwidth = 16e9\nworkloads = lstm\nmapper = greedy\n")
        .unwrap();
    let o = wnop(d, &["evaluate", "--config", "run.cfg", "--grid-rows", "4", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("out/lstm_report.json")).unwrap()).unwrap();
    assert_eq!(report["architecture"]["grid_rows"], 4);
    assert_eq!(report["architecture"]["nop_link_bandwidth"], 16e9);
    assert_eq!(fs::read_to_string(d.join("run.cfg")).unwrap().lines().count(), 4);
}

#[test]
fn evaluate_is_repeatable_and_wired_runs_have_no_wireless_time() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let args = ["evaluate", "--workloads", "googlenet", "--wireless", "false", "--mapper", "greedy"];
    let a = wnop(d, &[&args[..], &["--out", "a"]].concat());
    let b = wnop(d, &[&args[..], &["--out", "b"]].concat());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(read_dir(&d.join("a")), read_dir(&d.join("b")));

    let ledger = fs::read_to_string(d.join("a/googlenet_ledger.csv")).unwrap();
    let mut lines = ledger.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "wireless_s").unwrap();
    let mut rows = 0;
    for line in lines {
        assert_eq!(line.split(',').nth(col), Some("0"));
        rows += 1;
    }
    assert_eq!(rows, wnop_core::zoo::build("googlenet").unwrap().len());
    let summary = fs::read_to_string(d.join("a/googlenet_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.starts_with(wnop::report::SUMMARY_HEADER));
}

#[test]
fn evaluate_matches_the_sweep_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let eval = wnop(
        d,
        &["evaluate", "--workloads", "zfnet", "--injection-probability", "0.3", "--seed", "7", "--out", "eval"],
    );
    assert_eq!(code(&eval), 0, "{}", stderr(&eval));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("eval/zfnet_report.json")).unwrap()).unwrap();
    let speedup = report["speedup"].as_f64().unwrap();

    let sweep = wnop(
        d,
        &["sweep", "--workloads", "zfnet", "--sweep-probabilities", "0.1,0.3", "--sweep-seeds", "7", "--out", "sweep"],
    );
    assert_eq!(code(&sweep), 0, "{}", stderr(&sweep));
    let heat = fs::read_to_string(d.join("sweep/fig5_heatmap_zfnet.csv")).unwrap();
    let row: Vec<&str> = heat.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[2], format_sig(speedup));
    assert_ne!(speedup, 0.0);
}

#[test]
fn sweep_writes_the_bundle_identically_for_any_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let run = |out: &str, jobs: &str| {
        let args = [&["sweep", "--workloads", "zfnet,lstm", "--out", out, "--jobs", jobs][..], SMALL_GRID].concat();
        let o = wnop(d, &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        o
    };
    let one = run("one", "1");
    run("three", "3");
    assert_eq!(read_dir(&d.join("one")), read_dir(&d.join("three")));

    let names: Vec<String> = read_dir(&d.join("one")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "fig2_bottlenecks.csv",
            "fig4_speedups.csv",
            "fig5_heatmap_lstm.csv",
            "fig5_heatmap_zfnet.csv",
            "manifest.json"
        ]
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("one/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([1]));
    assert_eq!(manifest["grid"]["probabilities"], serde_json::json!([0.1, 0.5, 0.8]));
    assert_eq!(manifest["workloads"][1]["name"], "lstm");
    assert_eq!(manifest["files"].as_array().unwrap().len(), 4);
    assert!(manifest["code_version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    let settings = Settings::parse(manifest["settings"].as_str().unwrap()).unwrap();
    assert_eq!(settings.sweep_thresholds, [1, 3]);
    assert!(String::from_utf8_lossy(&one.stdout).contains("zfnet"));
}

#[test]
fn output_dir_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = Command::new(env!("CARGO_BIN_EXE_wnop"))
        .args(["map", "--workloads", "vgg", "--mapper", "greedy"])
        .current_dir(d)
        .env("WNOP_OUT_DIR", d.join("env_out"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("env_out/vgg.map").exists());
}

#[test]
fn saved_mappings_reproduce_the_mapper() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = wnop(d, &["map", "--workloads", "zfnet,darknet19", "--out", "maps"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = wnop(d, &["validate", "--workloads", "zfnet,darknet19", "--mappings", "maps"]);
    assert_eq!(code(&v), 0, "{}", stderr(&v));

    let sweep = |out: &str, extra: &[&str]| {
        let args = [&["sweep", "--workloads", "zfnet,darknet19", "--out", out][..], extra].concat();
        let o = wnop(d, &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    sweep("fresh", &[]);
    sweep("saved", &["--mappings", "maps"]);
    let csvs = |dir: &str| read_dir(&d.join(dir)).into_iter().filter(|(n, _)| n.ends_with(".csv")).collect::<Vec<_>>();
    assert_eq!(csvs("fresh"), csvs("saved"));

    // a mapping for a different grid is rejected
    let bad = wnop(d, &["validate", "--workloads", "zfnet", "--mappings", "maps", "--grid-rows", "2"]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn inputs_are_never_overwritten() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let text = fs::read_to_string(Path::new(wnop::BUNDLED_DIR).join("lstm.wl")).unwrap();
    // named like an output evaluate would write
    fs::write(d.join("lstm_ledger.csv"), &text).unwrap();
    let o = wnop(d, &["evaluate", "--workload-file", "lstm_ledger.csv", "--mapper", "full", "--out", "."]);
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("input"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(d.join("lstm_ledger.csv")).unwrap(), text);
    assert!(!d.join("lstm_report.json").exists());
}
