//! The files under `workloads/` are the zoo exported at the default batch.
//! Run with `WNOP_BLESS=1` to regenerate them.

use std::path::Path;

use wnop::workload_file;
use wnop_core::zoo;

#[test]
fn bundled_files_match_the_zoo() {
    let dir = Path::new(wnop::BUNDLED_DIR);
    let bless = std::env::var_os("WNOP_BLESS").is_some();
    for name in zoo::BUNDLED {
        let graph = zoo::build(name).unwrap();
        let expected = workload_file::to_text(&graph);
        let path = dir.join(format!("{name}.{}", workload_file::EXTENSION));
        if bless {
            std::fs::create_dir_all(dir).unwrap();
            std::fs::write(&path, &expected).unwrap();
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, expected, "{name} is stale; rerun with WNOP_BLESS=1");
        assert_eq!(workload_file::parse(&text).unwrap(), graph);
    }
    let files = std::fs::read_dir(dir).unwrap().count();
    assert_eq!(files, zoo::BUNDLED.len(), "stray files in {}", dir.display());
}

#[test]
fn example_config_holds_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.cfg");
    let parsed = wnop::settings::Settings::parse(&std::fs::read_to_string(path).unwrap()).unwrap();
    let expected = wnop::settings::Settings { workloads: vec!["all".into()], ..Default::default() };
    assert_eq!(parsed, expected);
}
