use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ipowdm_core::ledger::{Catalog, Metric};
use ipowdm_core::model::{load_topology_file, save_topology, topology_stats, LoadOptions, Scenario, Segment};
use ipowdm_core::routing::home_all;
use ipowdm_core::study::{emit_report, run_study, ReportFormat, StudyConfig, StudyError, StudyResult, TopologySource};
use ipowdm_core::synth::{synth_reference, SynthParams};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Multi-year techno-economic planner for IP-over-WDM metro aggregation.
#[derive(Parser, Debug)]
#[command(name = "ipowdm", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Synthesize a reference topology and write it as JSON.
    Synth(SynthArgs),
    /// Run the study and write reports.
    Plan(PlanArgs),
    /// Re-render reports from a previous run's report.json.
    Report(ReportArgs),
    /// Check a config, its catalog and its topology without planning.
    Validate(CommonArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Study config (JSON). Defaults reproduce the reference study.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topology file, overriding the config's topology source.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Equipment catalog CSV, overriding the config.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output file, or a directory to receive topology.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Benchmark,
    Ptp,
    Ptmp,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Repeatable; overrides the config's scenario list.
    #[arg(long, value_enum)]
    scenario: Vec<ScenarioArg>,
    /// Study horizon in years.
    #[arg(long)]
    years: Option<u32>,
    /// Annual traffic growth rate, e.g. 0.4.
    #[arg(long, allow_hyphen_values = true)]
    growth: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// A report.json written by `plan`.
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

enum Failure {
    Config(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        if e.is_config() {
            Failure::Config(e.into())
        } else {
            Failure::Internal(e.into())
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Report(a) => cmd_report(a),
        Cmd::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

/// Loads the config (or defaults) and applies the shared overrides.
/// Relative paths inside a config file resolve against its directory.
fn load_config(c: &CommonArgs) -> Result<StudyConfig, Failure> {
    let mut cfg = match &c.config {
        None => StudyConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(config_err)?;
            let mut cfg: StudyConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(config_err)?;
            let base = path.parent().unwrap_or(Path::new("."));
            if let TopologySource::File(f) = &mut cfg.topology {
                *f = base.join(&*f);
            }
            if let Some(f) = &mut cfg.catalog {
                *f = base.join(&*f);
            }
            cfg
        }
    };
    if let Some(t) = &c.topology {
        cfg.topology = TopologySource::File(t.clone());
    }
    if let Some(f) = &c.catalog {
        cfg.catalog = Some(f.clone());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn synth_params(cfg: &StudyConfig) -> SynthParams {
    let mut p = match &cfg.topology {
        TopologySource::Synth(p) => p.clone(),
        TopologySource::File(_) => SynthParams::default(),
    };
    p.seed = cfg.seed;
    p
}

fn cmd_synth(a: SynthArgs) -> Result<ExitCode, Failure> {
    let cfg = load_config(&a.common)?;
    let topo = synth_reference(&synth_params(&cfg)).map_err(config_err)?;
    let path = if a.out.is_dir() { a.out.join("topology.json") } else { a.out.clone() };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::Internal)?;
    }
    save_topology(&topo, &path).with_context(|| format!("writing {}", path.display())).map_err(Failure::Internal)?;
    let s = topology_stats(&topo);
    println!(
        "wrote {}: {} leaves, {} COs, {} MtC links, mean MtC link {:.3} km, diameter {:.3} km",
        path.display(),
        s.leaves,
        s.cos,
        s.mtc_links,
        s.mean_link_km,
        topo.meta().and_then(|m| m.mtc_diameter_km).unwrap_or(f64::NAN)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(a: PlanArgs) -> Result<ExitCode, Failure> {
    let mut cfg = load_config(&a.common)?;
    if !a.scenario.is_empty() {
        let mut list = Vec::new();
        for s in &a.scenario {
            let add: &[Scenario] = match s {
                ScenarioArg::Benchmark => &[Scenario::Benchmark],
                ScenarioArg::Ptp => &[Scenario::PtP],
                ScenarioArg::Ptmp => &[Scenario::PtMP],
                ScenarioArg::All => &Scenario::ALL,
            };
            for &x in add {
                if !list.contains(&x) {
                    list.push(x);
                }
            }
        }
        cfg.scenarios = list;
    }
    if let Some(y) = a.years {
        cfg.horizon = y;
        cfg.growth.horizon = cfg.growth.horizon.max(y);
    }
    if let Some(g) = a.growth {
        cfg.growth.rate = g;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if let Some(o) = &a.out {
        cfg.out_dir = Some(o.clone());
    }
    if cfg.scenarios.is_empty() {
        eprintln!("notice: scenario list is empty; nothing to plan, no files written");
        return Ok(ExitCode::SUCCESS);
    }
    let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));

    let r = run_study(&cfg)?;
    emit_report(&r, &out, a.format.into())?;
    print_summary(&r);
    println!("reports written to {}", out.display());
    if !r.failures.is_empty() {
        eprintln!("{} lightpath(s) infeasible; see failures.json", r.failures.len());
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(a: ReportArgs) -> Result<ExitCode, Failure> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display())).map_err(config_err)?;
    let r: StudyResult = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display())).map_err(config_err)?;
    emit_report(&r, &a.out, a.format.into())?;
    print_summary(&r);
    println!("reports written to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: CommonArgs) -> Result<ExitCode, Failure> {
    let cfg = load_config(&a)?;
    cfg.validate()?;
    if let Some(p) = &cfg.catalog {
        Catalog::from_file(p).map_err(config_err)?;
    }
    let topo = match &cfg.topology {
        TopologySource::File(p) => {
            let opts = LoadOptions { max_leaf_distance_km: cfg.max_leaf_distance_km, require_dual_homing: true };
            load_topology_file(p, &opts).map_err(config_err)?
        }
        TopologySource::Synth(_) => synth_reference(&synth_params(&cfg)).map_err(config_err)?,
    };
    home_all(&topo).map_err(config_err)?;
    let s = topology_stats(&topo);
    println!(
        "ok: {} leaves, {} COs ({} HL3, {} HL4, {} HL5), {} MtC links, all leaves dual-homed",
        s.leaves, s.cos, s.hl3, s.hl4, s.hl5, s.mtc_links
    );
    Ok(ExitCode::SUCCESS)
}

fn print_summary(r: &StudyResult) {
    let last = r.manifest.horizon;
    println!("year {last} totals (AtM):");
    for &s in &r.manifest.scenarios {
        if let Some(c) = r.cell(s, last, Segment::AtM) {
            println!(
                "  {:<10} cost {:>12.1} c.u.  power {:>12.1} W  elements {:>7}",
                s.to_string(),
                c.report.cost.cu(),
                c.report.power_w(),
                c.elements
            );
        }
    }
    if let Some(c) = r.manifest.scenarios.first().and_then(|&s| r.cell(s, last, Segment::MtC)) {
        println!(
            "  {:<10} cost {:>12.1} c.u.  power {:>12.1} W  elements {:>7}",
            "MtC",
            c.report.cost.cu(),
            c.report.power_w(),
            c.elements
        );
    }
    for row in r.comparisons.iter().filter(|c| c.year == last && c.metric == Metric::Cost) {
        println!("  {} vs {}: cost {:.1}%", row.scenario_a, row.scenario_b, row.delta_pct);
    }
}
