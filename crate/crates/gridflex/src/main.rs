//! Command-line surface: market clearing, flexibility indices, sweeps,
//! and case utilities. Every run drops a manifest describing inputs,
//! resolved configuration and produced artifacts.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridflex::flex::{
    flexibility_index, FlexError, FlexIndex, FlexOpts, SetShape, UncertaintySet,
};
use gridflex::gridmodel::{
    expand_horizon, parse_matpower, CaseError, GridCase, LoadProfileSpec,
};
use gridflex::market::{
    add_economic_bound, add_virtual_links, build_base, solve_clearing, ClearingOutcome,
    ConstraintSystem, EconKind, VlConfig,
};
use gridflex::solve::SolverBackend;
use gridflex::sweep::{
    percentile_report, run_epsilon_sweep, run_spatial_pairs, run_temporal_pairs, records_to_csv,
    summarize_temporal, SweepRecord, SweepSpec,
};
use gridflex::synth::{synth_case, SynthSpec};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_LIMIT: u8 = 5;

#[derive(Parser)]
#[command(name = "gridflex", version, about = "Space-time load-shifting flexibility analysis for DC-OPF markets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the nominal market clearing and report dispatch, prices and
    /// congestion.
    Clear(ClearArgs),
    /// Compute the flexibility index of a case.
    Flex(FlexArgs),
    /// Run a spatial / temporal / budget sweep over candidate links.
    Sweep(SweepArgs),
    /// Case utilities.
    #[command(subcommand)]
    Case(CaseCmd),
}

#[derive(Args)]
struct ClearArgs {
    /// Grid case (.m MatPower or .json).
    case: PathBuf,
    /// Virtual-link configuration (JSON).
    #[arg(long)]
    vl: Option<PathBuf>,
    /// Demand realization in MW (JSON array in xi order); nominal if absent.
    #[arg(long)]
    xi: Option<PathBuf>,
    /// Print the solution as JSON instead of the human report.
    #[arg(long)]
    json: bool,
    /// Output directory for the run manifest and artifacts.
    #[arg(long, default_value = "gridflex-out")]
    out: PathBuf,
}

#[derive(Args)]
struct FlexArgs {
    case: PathBuf,
    #[arg(long)]
    vl: Option<PathBuf>,
    /// Flex configuration file (TOML or JSON); defaults apply if absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override config fields, e.g. --set frac=0.2 --set econ.eps=0.1
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value = "gridflex-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    case: PathBuf,
    #[arg(long, value_enum)]
    kind: SweepKindArg,
    /// Sweep spec file (TOML or JSON); defaults apply if absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Links installed before the sweep (used by epsilon sweeps).
    #[arg(long)]
    vl: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Checkpoint CSV; reuse to resume an interrupted sweep.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Also draw static SVG plots.
    #[arg(long)]
    svg: bool,
    #[arg(long, default_value = "gridflex-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKindArg {
    Spatial,
    Temporal,
    Epsilon,
}

#[derive(Subcommand)]
enum CaseCmd {
    /// Parse and validate a case file, reporting its dimensions.
    Validate { case: PathBuf },
    /// Generate a seeded synthetic case, optionally expanded over a
    /// duck-curve day.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Expand this single-period case instead of generating one.
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    buses: usize,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value_t = 0.3)]
    congestion: f64,
    #[arg(long, default_value_t = 0.5)]
    ramp_frac: f64,
    /// Load profile used when expanding to a multi-period horizon.
    #[arg(long, value_enum, default_value_t = ProfileArg::Duck)]
    profile: ProfileArg,
    /// Output case file (JSON).
    #[arg(long, default_value = "case.json")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Flat,
    Duck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {:#}", e.message);
            e.code
        }
    };
    ExitCode::from(code)
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: anyhow::Error,
}

impl CliError {
    fn new(code: u8, message: anyhow::Error) -> Self {
        CliError { code, message }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::new(EXIT_INTERNAL, e)
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::new(EXIT_PARSE, anyhow!(e))
    }
}

impl From<FlexError> for CliError {
    fn from(e: FlexError) -> Self {
        let code = match &e {
            FlexError::NominalInfeasible { .. } => EXIT_INFEASIBLE,
            FlexError::Solver(_) => EXIT_LIMIT,
            _ => EXIT_USAGE,
        };
        CliError::new(code, anyhow!(e))
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::new(EXIT_USAGE, anyhow!("{e}"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Clear(args) => cmd_clear(args),
        Cmd::Flex(args) => cmd_flex(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Case(CaseCmd::Validate { case }) => cmd_validate(&case),
        Cmd::Case(CaseCmd::Synth(args)) => cmd_synth(args),
    }
}

// ---------------------------------------------------------------- helpers

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read `{}`: {e}", path.display())))
}

fn load_case(path: &Path) -> Result<GridCase, CliError> {
    let text = read_input(path)?;
    let case = if path.extension().is_some_and(|e| e == "m") {
        parse_matpower(&text)?
    } else {
        GridCase::from_json(&text)?
    };
    case.validate()?;
    Ok(case)
}

/// Loads the case and installs any configured virtual links.
fn load_system(case_path: &Path, vl_path: Option<&Path>) -> Result<ConstraintSystem, CliError> {
    let case = load_case(case_path)?;
    let sys = build_base(&case).map_err(|e| usage(e))?;
    match vl_path {
        None => Ok(sys),
        Some(p) => {
            let cfg = VlConfig::from_json(&read_input(p)?)
                .map_err(|e| CliError::new(EXIT_PARSE, anyhow!(e)))?;
            let links = cfg.resolve(&sys).map_err(|e| usage(e))?;
            add_virtual_links(&sys, &links, cfg.mode).map_err(|e| usage(e))
        }
    }
}

fn backend_from_env() -> Result<SolverBackend, CliError> {
    SolverBackend::from_env().map_err(|e| usage(e))
}

/// Parses a config file (TOML by default, JSON for .json) into a JSON
/// value and applies `--set key=value` dotted-path overrides.
fn resolved_config<T: serde::de::DeserializeOwned + Serialize>(
    defaults: T,
    path: Option<&Path>,
    sets: &[String],
) -> Result<(T, serde_json::Value), CliError> {
    let mut value = match path {
        None => serde_json::to_value(&defaults).expect("config serializes"),
        Some(p) => {
            let text = read_input(p)?;
            if p.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text)
                    .map_err(|e| CliError::new(EXIT_PARSE, anyhow!("{}: {e}", p.display())))?
            } else {
                let t: toml::Value = toml::from_str(&text)
                    .map_err(|e| CliError::new(EXIT_PARSE, anyhow!("{}: {e}", p.display())))?;
                serde_json::to_value(t).expect("toml converts to json")
            }
        }
    };
    // merge file fragment over the defaults so partial files work
    let mut merged = serde_json::to_value(&defaults).expect("config serializes");
    merge_json(&mut merged, &value);
    value = merged;
    for s in sets {
        apply_override(&mut value, s)?;
    }
    let parsed: T = serde_json::from_value(value.clone())
        .map_err(|e| usage(format!("invalid configuration: {e}")))?;
    Ok((parsed, value))
}

fn merge_json(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn apply_override(value: &mut serde_json::Value, setting: &str) -> Result<(), CliError> {
    let (key, raw) = setting
        .split_once('=')
        .ok_or_else(|| usage(format!("--set expects key=value, got `{setting}`")))?;
    let parsed: serde_json::Value =
        serde_json::from_str(raw).unwrap_or(serde_json::Value::String(raw.to_string()));
    let mut slot = value;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| usage(format!("--set {key}: `{part}` is not an object field")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        slot = obj.entry(part.to_string()).or_insert_with(|| serde_json::json!({}));
    }
    Ok(())
}

/// Six significant digits for human-facing reports.
fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-3..9).contains(&mag) {
        return format!("{v:.5e}");
    }
    let dec = (5 - mag).max(0) as usize;
    format!("{v:.dec$}")
}

#[derive(Serialize)]
struct RunManifest {
    command: Vec<String>,
    tool_version: String,
    timestamp_unix: u64,
    config: serde_json::Value,
    config_sha256: String,
    inputs: Vec<ManifestInput>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct ManifestInput {
    path: String,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

fn write_manifest(
    out_dir: &Path,
    config: serde_json::Value,
    inputs: &[&Path],
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| usage(format!("cannot create `{}`: {e}", out_dir.display())))?;
    // serde_json maps have sorted keys, so this hash ignores key order
    let config_sha256 = sha256_hex(config.to_string().as_bytes());
    let mut manifest_inputs = Vec::new();
    for p in inputs {
        let bytes = std::fs::read(p)
            .map_err(|e| usage(format!("cannot read `{}`: {e}", p.display())))?;
        manifest_inputs.push(ManifestInput {
            path: p.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        command: std::env::args().collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config,
        config_sha256,
        inputs: manifest_inputs,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
        .map_err(|e| usage(format!("cannot write `{}`: {e}", path.display())))?;
    Ok(())
}

fn write_artifact(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| usage(format!("cannot create `{}`: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| usage(format!("cannot write `{}`: {e}", path.display())))?;
    Ok(path)
}

// --------------------------------------------------------------- commands

fn cmd_clear(args: ClearArgs) -> Result<(), CliError> {
    let sys = load_system(&args.case, args.vl.as_deref())?;
    let backend = backend_from_env()?;
    let xi = match &args.xi {
        None => sys.xi_nominal_mw(),
        Some(p) => serde_json::from_str::<Vec<f64>>(&read_input(p)?)
            .map_err(|e| CliError::new(EXIT_PARSE, anyhow!("{}: {e}", p.display())))?,
    };
    let outcome = solve_clearing(&sys, &xi, &backend, &Default::default()).map_err(|e| usage(e))?;
    let mut outputs = Vec::new();
    match &outcome {
        ClearingOutcome::Optimal(sol) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(sol).expect("solution serializes"));
            } else {
                println!("clearing: optimal");
                println!("total cost: ${}", sig6(sol.total_cost));
                println!("dispatch (MW):");
                for (label, v) in sol.values.iter().filter(|(l, _)| l.starts_with("p[")) {
                    println!("  {label:<16} {}", sig6(*v));
                }
                let shifts: Vec<_> =
                    sol.values.iter().filter(|(l, _)| l.starts_with("delta[")).collect();
                if !shifts.is_empty() {
                    println!("shifts (MW):");
                    for (label, v) in shifts {
                        println!("  {label:<28} {}", sig6(*v));
                    }
                }
                println!("nodal prices ($/MWh):");
                for (label, v) in &sol.prices {
                    println!("  {label:<20} {}", sig6(*v));
                }
                let congested: Vec<&String> = sol
                    .binding
                    .iter()
                    .filter(|l| l.starts_with("f_max") || l.starts_with("f_min"))
                    .collect();
                if congested.is_empty() {
                    println!("congested lines: none");
                } else {
                    println!("congested lines:");
                    for l in congested {
                        println!("  {l}");
                    }
                }
            }
            let json = serde_json::to_string_pretty(sol).expect("solution serializes");
            outputs.push(write_artifact(&args.out, "clearing.json", &json)?);
        }
        ClearingOutcome::Infeasible { message } => {
            let inputs: Vec<&Path> =
                [Some(args.case.as_path()), args.vl.as_deref()].into_iter().flatten().collect();
            write_manifest(&args.out, serde_json::json!({"command": "clear"}), &inputs, &[])?;
            return Err(CliError::new(EXIT_INFEASIBLE, anyhow!("clearing infeasible: {message}")));
        }
    }
    let inputs: Vec<&Path> = [Some(args.case.as_path()), args.vl.as_deref(), args.xi.as_deref()]
        .into_iter()
        .flatten()
        .collect();
    write_manifest(&args.out, serde_json::json!({"command": "clear"}), &inputs, &outputs)?;
    Ok(())
}

/// Flex command configuration (file + overrides).
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
struct FlexConfig {
    shape: String,
    /// Box half-width as a fraction of nominal demand.
    frac: f64,
    alpha_cap: f64,
    warm_start: bool,
    /// MIP time budget in seconds; when set, a timed-out solve keeps the
    /// incumbent and reports the proven lower bound instead of erroring.
    #[serde(default)]
    time_limit_secs: Option<f64>,
    econ: Option<EconConfig>,
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
struct EconConfig {
    kind: EconKind,
    eps: f64,
}

impl Default for FlexConfig {
    fn default() -> Self {
        FlexConfig {
            shape: "hyperbox".into(),
            frac: 0.1,
            alpha_cap: 10.0,
            warm_start: true,
            time_limit_secs: None,
            econ: None,
        }
    }
}

fn cmd_flex(args: FlexArgs) -> Result<(), CliError> {
    let (cfg, cfg_value) = resolved_config(FlexConfig::default(), args.config.as_deref(), &args.sets)?;
    let mut sys = load_system(&args.case, args.vl.as_deref())?;
    let backend = backend_from_env()?;
    if let Some(econ) = &cfg.econ {
        let nominal = solve_clearing(&sys, &sys.xi_nominal_mw(), &backend, &Default::default())
            .map_err(|e| usage(e))?;
        let psi0 = match nominal {
            ClearingOutcome::Optimal(sol) => sol.total_cost,
            ClearingOutcome::Infeasible { message } => {
                return Err(CliError::new(EXIT_INFEASIBLE, anyhow!("nominal clearing infeasible: {message}")))
            }
        };
        sys = add_economic_bound(&sys, econ.kind, econ.eps, psi0, sys.total_nominal_demand_mw())
            .map_err(|e| usage(e))?;
    }

    let center = sys.xi_nominal_mw();
    let set = match cfg.shape.as_str() {
        "hyperbox" => UncertaintySet::hyperbox_fraction(center, cfg.frac),
        "l1" => UncertaintySet::l1(center.clone(), center.iter().map(|v| cfg.frac * v).collect()),
        "linf" => UncertaintySet::linf(center.clone(), center.iter().map(|v| cfg.frac * v).collect()),
        "ellipsoid" => {
            let axes = center.iter().map(|v| cfg.frac * v).collect();
            UncertaintySet { shape: SetShape::Ellipsoid, dev_neg: axes, ..UncertaintySet::hyperbox_fraction(center, cfg.frac) }
        }
        other => return Err(usage(format!("unknown set shape `{other}`"))),
    };
    let opts = FlexOpts {
        alpha_cap: cfg.alpha_cap,
        warm_start: cfg.warm_start,
        time_limit: cfg.time_limit_secs.map(std::time::Duration::from_secs_f64),
        accept_limit: cfg.time_limit_secs.is_some(),
        ..Default::default()
    };
    let res = flexibility_index(&sys, &set, &backend, &opts)?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&res).expect("result serializes"));
    } else {
        match res.index {
            FlexIndex::Bounded(v) => println!("flexibility index: {}", sig6(v)),
            FlexIndex::Unbounded { cap } => {
                println!("flexibility index: > {} (no boundary below the search cap)", sig6(cap))
            }
        }
        if let Some(lb) = res.stats.lower_bound {
            println!("time limit hit: incumbent reported, proven lower bound {}", sig6(lb));
        }
        println!("psi at critical point: {} MW", sig6(res.psi_at_critical));
        if !res.active_set.is_empty() {
            println!("active constraints:");
            for l in &res.active_set {
                println!("  {l}");
            }
        }
        let worst: Vec<(usize, f64)> = res
            .critical_xi
            .iter()
            .zip(&set.center)
            .enumerate()
            .filter(|(_, (v, c))| (*v - *c).abs() > 1e-6)
            .map(|(k, (v, c))| (k, v - c))
            .collect();
        if !worst.is_empty() {
            println!("critical demand deviations (MW):");
            for (k, dv) in worst {
                println!("  {:<16} {}", sys.xi_labels[k], sig6(dv));
            }
        }
        println!(
            "solver: {} ({} nodes, {:.3}s)",
            res.stats.backend,
            res.stats.nodes,
            res.stats.wall.as_secs_f64()
        );
    }
    let json = serde_json::to_string_pretty(&res).expect("result serializes");
    let artifact = write_artifact(&args.out, "flex.json", &json)?;
    let inputs: Vec<&Path> =
        [Some(args.case.as_path()), args.vl.as_deref(), args.config.as_deref()]
            .into_iter()
            .flatten()
            .collect();
    write_manifest(&args.out, cfg_value, &inputs, &[artifact])?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let (spec, cfg_value) = resolved_config(SweepSpec::default(), args.spec.as_deref(), &args.sets)?;
    let sys = load_system(&args.case, args.vl.as_deref())?;
    let backend = backend_from_env()?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| usage(format!("cannot create `{}`: {e}", args.out.display())))?;
    let checkpoint = args.checkpoint.clone();

    let records: Vec<SweepRecord> = match args.kind {
        SweepKindArg::Spatial => run_spatial_pairs(&sys, &spec, &backend, checkpoint.as_deref()),
        SweepKindArg::Temporal => run_temporal_pairs(&sys, &spec, &backend, checkpoint.as_deref()),
        SweepKindArg::Epsilon => {
            let nominal = solve_clearing(&sys, &sys.xi_nominal_mw(), &backend, &Default::default())
                .map_err(|e| usage(e))?;
            let psi0 = match nominal {
                ClearingOutcome::Optimal(sol) => sol.total_cost,
                ClearingOutcome::Infeasible { message } => {
                    return Err(CliError::new(
                        EXIT_INFEASIBLE,
                        anyhow!("nominal clearing infeasible: {message}"),
                    ))
                }
            };
            run_epsilon_sweep(&sys, &spec, &backend, psi0, checkpoint.as_deref())
        }
    }
    .map_err(|e| CliError::new(EXIT_LIMIT, anyhow!(e)))?;

    let mut outputs = Vec::new();
    outputs.push(write_artifact(&args.out, "sweep.csv", &records_to_csv(&records))?);

    let base_index = records.first().map(|r| r.base_index);
    let thresholds = [10.0, 50.0, 100.0];
    let report = percentile_report(&records, &thresholds);
    let header = serde_json::json!({
        "kind": match args.kind {
            SweepKindArg::Spatial => "spatial",
            SweepKindArg::Temporal => "temporal",
            SweepKindArg::Epsilon => "epsilon",
        },
        "base_index": base_index,
        "candidates": records.len(),
        "backend": backend.name(),
        "spec_sha256": sha256_hex(cfg_value.to_string().as_bytes()),
        "percent_at_least": report,
    });
    outputs.push(write_artifact(
        &args.out,
        "run-header.json",
        &serde_json::to_string_pretty(&header).expect("header serializes"),
    )?);

    if let Some(b) = base_index {
        println!("base index: {}", sig6(b));
    }
    println!("candidates: {}", records.len());
    for (th, share) in &report {
        println!("candidates with at least {}% gain: {}%", sig6(*th), sig6(*share));
    }
    let mut top: Vec<&SweepRecord> = records.iter().filter(|r| r.percent.is_some()).collect();
    top.sort_by(|a, b| b.percent.partial_cmp(&a.percent).expect("finite percent"));
    for r in top.iter().take(5) {
        let what = match (r.kind.as_str(), r.bus_a, r.bus_b, r.t_a, r.t_b, r.epsilon) {
            ("spatial", Some(a), Some(b), _, _, _) => format!("pair {{{a}, {b}}}"),
            ("temporal", Some(a), _, Some(ta), Some(tb), _) => format!("bus {a}, hours {ta}-{tb}"),
            (_, _, _, _, _, Some(e)) => format!("epsilon {e}"),
            _ => format!("candidate {}", r.id),
        };
        println!("  {what}: {}%", sig6(r.percent.unwrap_or(f64::NAN)));
    }

    if args.svg {
        let title = "sorted index increase";
        outputs.push(write_artifact(
            &args.out,
            "sorted-percent.svg",
            &gridflex::plot::sorted_percent_curve(&records, title),
        )?);
        match args.kind {
            SweepKindArg::Temporal => {
                let summaries = summarize_temporal(&records);
                outputs.push(write_artifact(
                    &args.out,
                    "bus-summary.svg",
                    &gridflex::plot::bus_summary_bars(&summaries, "best gain per bus"),
                )?);
            }
            SweepKindArg::Epsilon => {
                outputs.push(write_artifact(
                    &args.out,
                    "epsilon-curve.svg",
                    &gridflex::plot::epsilon_curve(&records, "budget sensitivity"),
                )?);
            }
            SweepKindArg::Spatial => {}
        }
    }

    let inputs: Vec<&Path> = [Some(args.case.as_path()), args.vl.as_deref(), args.spec.as_deref()]
        .into_iter()
        .flatten()
        .collect();
    write_manifest(&args.out, cfg_value, &inputs, &outputs)?;
    Ok(())
}

fn cmd_validate(case_path: &Path) -> Result<(), CliError> {
    let case = load_case(case_path)?;
    println!("{}: ok", case_path.display());
    println!(
        "  buses {}, generators {}, lines {}, horizon {}",
        case.buses.len(),
        case.generators.len(),
        case.lines.len(),
        case.horizon
    );
    println!("  total nominal demand: {} MW", sig6(case.total_demand()));
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let base = match &args.from {
        Some(p) => load_case(p)?,
        None => synth_case(&SynthSpec {
            seed: args.seed,
            n_buses: args.buses,
            horizon: 1,
            congestion: args.congestion,
            ramp_frac: args.ramp_frac,
            ..Default::default()
        })?,
    };
    let case = if args.horizon > 1 {
        let profile = match args.profile {
            ProfileArg::Flat => LoadProfileSpec::flat(args.seed),
            ProfileArg::Duck => LoadProfileSpec::duck(args.seed),
        };
        expand_horizon(&base, args.horizon, &profile)?
    } else {
        base
    };
    std::fs::write(&args.output, case.to_json())
        .context("writing case file")
        .map_err(CliError::from)?;
    println!(
        "wrote {} ({} buses, horizon {})",
        args.output.display(),
        case.buses.len(),
        case.horizon
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_keeps_six_significant_digits() {
        assert_eq!(sig6(2.0), "2.00000");
        assert_eq!(sig6(0.120), "0.120000");
        assert_eq!(sig6(1234.5678), "1234.57");
        assert_eq!(sig6(123456789.0), "123456789");
        assert_eq!(sig6(0.000012345), "1.23450e-5");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let mut v = serde_json::json!({"frac": 0.1, "econ": {"eps": 0.0}});
        apply_override(&mut v, "frac=0.3").unwrap();
        apply_override(&mut v, "econ.eps=0.2").unwrap();
        apply_override(&mut v, "shape=l1").unwrap();
        assert_eq!(v["frac"], serde_json::json!(0.3));
        assert_eq!(v["econ"]["eps"], serde_json::json!(0.2));
        assert_eq!(v["shape"], serde_json::json!("l1"));
        assert!(apply_override(&mut v, "nonsense").is_err());
    }

    #[test]
    fn config_hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a": 1, "b": {"c": 2, "d": 3}}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b": {"d": 3, "c": 2}, "a": 1}"#).unwrap();
        assert_eq!(sha256_hex(a.to_string().as_bytes()), sha256_hex(b.to_string().as_bytes()));
    }

    #[test]
    fn json_merge_prefers_patch_leaves() {
        let mut base = serde_json::json!({"x": 1, "sub": {"a": 1, "b": 2}});
        merge_json(&mut base, &serde_json::json!({"sub": {"b": 9}}));
        assert_eq!(base, serde_json::json!({"x": 1, "sub": {"a": 1, "b": 9}}));
    }
}
