//! Command line front end. `main` only parses arguments and maps
//! [`Failure`] to an exit code.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Args, FromArgMatches, Parser, Subcommand};
use thiserror::Error;
use wnop_core::cost::{self, Resource};
use wnop_core::explorer::{figure_data, format_sig, CsvFile, ExplorerError};
use wnop_core::mapper::{map_workload, Mapping};
use wnop_core::topology::Package;
use wnop_core::wireless::{self, hybrid_evaluate};
use wnop_core::workload::WorkloadGraph;
use wnop_core::zoo;

use crate::report::{self, EvaluationReport};
use crate::settings::{Settings, KEYS};
use crate::sweep::{self, Manifest, ManifestWorkload, MANIFEST_NAME};
use crate::{mapping_file, workload_file};

pub const OUT_DIR_ENV: &str = "WNOP_OUT_DIR";

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl From<ExplorerError> for Failure {
    fn from(e: ExplorerError) -> Self {
        match e {
            ExplorerError::Baseline { .. } | ExplorerError::Missing { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn input(context: impl std::fmt::Display) -> impl FnOnce(String) -> Failure {
    move |e| Failure::Input(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "wnop",
    version,
    about = "Layer-wise latency model of chiplet accelerators with a wireless NoP overlay"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one workload on the wired package and with the configured wireless channel
    Evaluate(RunArgs),
    /// Sweep bandwidth x threshold x probability and write the figure CSVs and a manifest
    Sweep(RunArgs),
    /// Map workloads with the configured mapper and save the mappings
    Map(RunArgs),
    /// Check a settings file, workload files and saved mappings without running anything
    Validate(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Settings file of `key = value` lines; flags override it
    #[arg(long, short, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Workload file to add to the bundled `--workloads`; may be repeated
    #[arg(long = "workload-file", value_name = "PATH")]
    pub workload_files: Vec<PathBuf>,
    /// Directory of saved mappings, one `<workload>.map` per workload
    #[arg(long, value_name = "DIR")]
    pub mappings: Option<PathBuf>,
    /// Output directory
    #[arg(long, short, value_name = "DIR", env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Worker threads for mapping and sweeping; results do not depend on it
    #[arg(long, short, value_name = "N", default_value_t = default_jobs())]
    pub jobs: usize,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(usize::from).unwrap_or(1)
}

/// One flag per settings key, `--grid-rows` for `grid_rows`.
#[derive(Debug, Clone, Default)]
pub struct Overrides(pub Vec<(&'static str, String)>);

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

impl FromArgMatches for Overrides {
    fn from_arg_matches(matches: &ArgMatches) -> Result<Self, clap::Error> {
        let mut out = Self::default();
        out.update_from_arg_matches(matches)?;
        Ok(out)
    }

    fn update_from_arg_matches(&mut self, matches: &ArgMatches) -> Result<(), clap::Error> {
        for (key, _) in KEYS {
            if let Some(v) = matches.get_one::<String>(key) {
                self.0.retain(|(k, _)| k != key);
                self.0.push((key, v.clone()));
            }
        }
        Ok(())
    }
}

impl Args for Overrides {
    fn augment_args(cmd: clap::Command) -> clap::Command {
        KEYS.iter().fold(cmd.next_help_heading("Settings"), |cmd, (key, help)| {
            cmd.arg(Arg::new(*key).long(flag_name(key)).value_name("VALUE").help(*help))
        })
    }

    fn augment_args_for_update(cmd: clap::Command) -> clap::Command {
        Self::augment_args(cmd)
    }
}

/// Everything a subcommand needs, resolved from files and flags.
struct Run {
    settings: Settings,
    package: Package,
    /// Workload, where it came from.
    workloads: Vec<(WorkloadGraph, String)>,
    inputs: Vec<PathBuf>,
    args: RunArgs,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

impl Run {
    fn load(args: RunArgs) -> Result<Self, Failure> {
        let mut inputs = Vec::new();
        let mut settings = Settings::default();
        if let Some(path) = &args.config {
            settings.apply_text(&read(path)?).map_err(|e| input(path.display())(e.to_string()))?;
            inputs.push(path.clone());
        }
        for (key, value) in &args.overrides.0 {
            settings.set(key, value).map_err(|e| Failure::Usage(format!("--{}: {e}", flag_name(key))))?;
        }
        let package = settings.package().map_err(|e| Failure::Input(e.to_string()))?;

        let mut workloads = Vec::new();
        for name in settings.bundled_names().map_err(|e| Failure::Input(e.to_string()))? {
            let graph = zoo::build_batched(&name, settings.batch).expect("bundled names resolve");
            workloads.push((graph, "bundled".to_string()));
        }
        for path in &args.workload_files {
            let graph = workload_file::parse(&read(path)?).map_err(|e| input(path.display())(e.to_string()))?;
            workloads.push((graph, path.display().to_string()));
            inputs.push(path.clone());
        }
        let mut names: Vec<&str> = workloads.iter().map(|(g, _)| g.name()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Failure::Input(format!("workload `{}` given twice", w[0])));
        }
        Ok(Self { settings, package, workloads, inputs, args })
    }

    fn require_workloads(&self) -> Result<(), Failure> {
        if self.workloads.is_empty() {
            return Err(Failure::Usage("no workloads: use --workloads (names or `all`) or --workload-file".into()));
        }
        Ok(())
    }

    fn out_dir(&self) -> Result<PathBuf, Failure> {
        self.args
            .out
            .clone()
            .ok_or_else(|| Failure::Usage(format!("no output directory: pass --out or set {OUT_DIR_ENV}")))
    }

    fn mapping_path(&self, graph: &WorkloadGraph) -> Option<PathBuf> {
        let dir = self.args.mappings.as_ref()?;
        Some(dir.join(format!("{}.{}", graph.name(), mapping_file::EXTENSION)))
    }

    /// Saved mappings, when a mapping directory was given.
    fn saved_mappings(&mut self) -> Result<Vec<Option<Mapping>>, Failure> {
        let mut out = Vec::new();
        for (graph, _) in &self.workloads {
            let Some(path) = self.mapping_path(graph) else {
                out.push(None);
                continue;
            };
            let text = read(&path)?;
            self.inputs.push(path.clone());
            let mapping = mapping_file::parse(&text, graph, self.package.layout())
                .map_err(|e| input(path.display())(e.to_string()))?;
            out.push(Some(mapping));
        }
        Ok(out)
    }

    /// Writes `files` into the output directory, refusing to replace any
    /// input file.
    fn write(&self, dir: &Path, files: &[CsvFile]) -> Result<(), Failure> {
        let internal = |e: std::io::Error, p: &Path| Failure::Internal(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| internal(e, dir))?;
        let protected: Vec<PathBuf> = self.inputs.iter().filter_map(|p| p.canonicalize().ok()).collect();
        for f in files {
            let path = dir.join(&f.name);
            if path.canonicalize().is_ok_and(|c| protected.contains(&c)) {
                return Err(Failure::Usage(format!("{} is an input; choose another output directory", path.display())));
            }
        }
        for f in files {
            let path = dir.join(&f.name);
            fs::write(&path, &f.contents).map_err(|e| internal(e, &path))?;
        }
        Ok(())
    }
}

fn shares_text(run: &cost::RunResult) -> String {
    Resource::ALL
        .iter()
        .map(|&r| format!("{}={}", report::resource_name(r), format_sig(run.bottleneck_shares.get(r))))
        .collect::<Vec<_>>()
        .join(" ")
}

fn evaluate(mut run: Run) -> Result<(), Failure> {
    run.require_workloads()?;
    if run.workloads.len() != 1 {
        return Err(Failure::Usage(format!("evaluate takes one workload, got {}", run.workloads.len())));
    }
    let config = run.settings.wireless_config().map_err(|e| Failure::Input(e.to_string()))?;
    let model = run.settings.cost_model();
    let mapping = match run.saved_mappings()?.pop().flatten() {
        Some(m) => m,
        None => map_workload(&run.workloads[0].0, &run.package, run.settings.strategy())
            .map_err(|e| Failure::Input(e.to_string()))?,
    };
    let graph = &run.workloads[0].0;
    let internal = |e: &dyn std::fmt::Display| Failure::Internal(e.to_string());
    let baseline = cost::evaluate(graph, &mapping, &run.package, &model).map_err(|e| internal(&e))?;
    let hybrid = hybrid_evaluate(graph, &mapping, &run.package, &config, &model).map_err(|e| internal(&e))?;
    let speedup =
        if config.enabled { wireless::speedup(baseline.total_latency, hybrid.result.total_latency) } else { 0.0 };

    println!("workload {}", graph.name());
    println!("baseline total_latency_s={} {}", format_sig(baseline.total_latency), shares_text(&baseline));
    if config.enabled {
        println!(
            "hybrid   total_latency_s={} {}",
            format_sig(hybrid.result.total_latency),
            shares_text(&hybrid.result)
        );
        println!("config   {}", report::config_label(&config));
        println!("wireless messages={} bits={}", hybrid.ledger.wireless_messages, hybrid.ledger.total_wireless_bits);
        println!("speedup  {}", format_sig(speedup));
    }

    if let Some(dir) = run.args.out.clone() {
        let ledger = report::ledger_csv(graph, &hybrid.result, &hybrid.ledger);
        let report = EvaluationReport {
            workload: graph.name().into(),
            architecture: run.package.spec().clone(),
            cost_model: model,
            wireless: config,
            baseline,
            hybrid: hybrid.result,
            speedup,
            ledger: hybrid.ledger,
        };
        let name = graph.name().to_string();
        run.write(
            &dir,
            &[
                CsvFile { name: format!("{name}_report.json"), contents: report.to_json() },
                CsvFile { name: format!("{name}_summary.csv"), contents: report.summary_csv() },
                CsvFile { name: format!("{name}_ledger.csv"), contents: ledger },
            ],
        )?;
    }
    Ok(())
}

fn sweep(mut run: Run) -> Result<(), Failure> {
    let dir = run.out_dir()?;
    run.require_workloads()?;
    let (grid, heat) = run.settings.grid().map_err(|e| Failure::Input(e.to_string()))?;
    let model = run.settings.cost_model();
    let strategy = run.settings.strategy();
    let saved = run.saved_mappings()?;
    let mapping_sources: Vec<String> = run
        .workloads
        .iter()
        .map(|(g, _)| run.mapping_path(g).map_or_else(|| "mapper".into(), |p| p.display().to_string()))
        .collect();
    let inputs = run.workloads.iter().map(|(g, _)| g.clone()).zip(saved).collect();
    let cases = sweep::prepare_cases(inputs, &run.package, strategy, &model, run.args.jobs)?;
    let result = sweep::run(&cases, &run.package, &model, &grid, run.args.jobs)?;
    let mut files = figure_data(&result, heat);

    let mut manifest = Manifest {
        code_version: sweep::code_version(),
        settings: run.settings.to_text(),
        architecture: run.package.spec().clone(),
        cost_model: model,
        strategy,
        seeds: grid.seeds.clone(),
        heatmap_bandwidth: grid.bandwidths[heat],
        grid: grid.clone(),
        workloads: cases
            .iter()
            .zip(&run.workloads)
            .zip(mapping_sources)
            .map(|((c, (g, source)), mapping)| ManifestWorkload {
                name: g.name().into(),
                source: source.clone(),
                layers: g.len(),
                total_macs: g.total_macs(),
                mapping,
                baseline_latency_s: c.baseline.total_latency,
            })
            .collect(),
        files: Vec::new(),
    };
    manifest.list_files(&files);
    files.push(CsvFile { name: MANIFEST_NAME.into(), contents: manifest.to_json() });
    run.write(&dir, &files)?;

    for w in &result.workloads {
        let best: Vec<String> = (0..grid.bandwidths.len())
            .map(|b| {
                let p = w.best(&grid, b);
                format!("{}Gb/s:{}", format_sig(grid.bandwidths[b] / 1e9), format_sig(p.speedup))
            })
            .collect();
        println!("{:<18} baseline_s={} best {}", w.workload, format_sig(w.baseline.total_latency), best.join(" "));
    }
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn map(mut run: Run) -> Result<(), Failure> {
    let dir = run.out_dir()?;
    run.require_workloads()?;
    let model = run.settings.cost_model();
    let inputs = run.workloads.iter().map(|(g, _)| (g.clone(), None)).collect();
    let cases = sweep::prepare_cases(inputs, &run.package, run.settings.strategy(), &model, run.args.jobs)?;
    let files: Vec<CsvFile> = cases
        .iter()
        .map(|c| CsvFile {
            name: format!("{}.{}", c.name(), mapping_file::EXTENSION),
            contents: mapping_file::to_text(&c.graph, &c.mapping),
        })
        .collect();
    run.args.mappings = None;
    run.write(&dir, &files)?;
    for c in &cases {
        println!("{:<18} baseline_s={}", c.name(), format_sig(c.baseline.total_latency));
    }
    Ok(())
}

fn validate(mut run: Run) -> Result<(), Failure> {
    // settings that only some subcommands read
    run.settings.wireless_config().map_err(|e| Failure::Input(e.to_string()))?;
    run.settings.grid().map_err(|e| Failure::Input(e.to_string()))?;
    run.saved_mappings()?;
    println!(
        "ok: {}x{} chiplets, {} DRAM",
        run.package.spec().grid_rows,
        run.package.spec().grid_cols,
        run.package.spec().dram_count()
    );
    for (g, source) in &run.workloads {
        println!("ok: workload {} ({} layers, {source})", g.name(), g.len());
    }
    if run.args.mappings.is_some() {
        println!("ok: {} mappings", run.workloads.len());
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate(args) => evaluate(Run::load(args)?),
        Command::Sweep(args) => sweep(Run::load(args)?),
        Command::Map(args) => map(Run::load(args)?),
        Command::Validate(args) => validate(Run::load(args)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use wnop_core::wireless::WirelessConfig;

    #[test]
    fn every_settings_key_has_a_flag() {
        let cmd = Cli::command();
        for sub in ["evaluate", "sweep", "map", "validate"] {
            let sub = cmd.find_subcommand(sub).unwrap();
            for key in Settings::keys() {
                let flag = flag_name(key);
                assert!(sub.get_arguments().any(|a| a.get_long() == Some(flag.as_str())), "--{flag}");
            }
        }
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_are_collected() {
        let cli = Cli::try_parse_from(["wnop", "evaluate", "--grid-rows", "2", "--workloads", "zfnet"]).unwrap();
        let Command::Evaluate(args) = cli.command else { panic!() };
        assert_eq!(args.overrides.0, [("grid_rows", "2".to_string()), ("workloads", "zfnet".to_string())]);
        assert!(Cli::try_parse_from(["wnop", "evaluate", "--grid-rowz", "2"]).is_err());
    }

    #[test]
    fn default_wireless_settings_match_the_core_defaults() {
        assert_eq!(Settings::default().wireless_config().unwrap(), WirelessConfig::default());
    }
}
