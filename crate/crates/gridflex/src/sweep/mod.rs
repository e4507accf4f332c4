//! Sweep orchestration: evaluate the flexibility gain of many candidate
//! virtual-link placements (or economic budgets) against a common
//! baseline, in parallel, with an append-only CSV checkpoint.
//!
//! Records carry no timing data and are written in candidate order, so a
//! finished sweep file is byte-identical across runs, thread counts and
//! checkpoint resumes.

use crate::flex::{flexibility_index, FlexIndex, FlexOpts, UncertaintySet};
use crate::market::{
    add_economic_bound, add_virtual_links, ConstraintSystem, EconKind, VirtualLink, VlMode,
};
use crate::solve::SolverBackend;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("baseline failure: {0}")]
    Baseline(String),
    #[error("checkpoint `{path}`: {msg}")]
    Checkpoint { path: String, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Sweep configuration; serializable so runs can be described in TOML or
/// JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Link capacity as a fraction of the sending node's nominal demand.
    pub capacity_frac: f64,
    /// Uncertainty box half-width as a fraction of nominal demand.
    pub box_frac: f64,
    pub vl_mode: VlMode,
    /// Cost per shifted MWh on candidate links.
    pub link_cost: f64,
    pub alpha_cap: f64,
    /// Budget levels for epsilon sweeps.
    pub epsilons: Vec<f64>,
    pub econ_kind: EconKind,
    /// Worker threads; 0 or absent picks the rayon default.
    #[serde(default)]
    pub threads: usize,
    /// Per-candidate MIP time budget in seconds. When set, a candidate
    /// stopped by the clock keeps the solver's incumbent and records the
    /// unproven gap in its note instead of erroring.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            capacity_frac: 0.30,
            box_frac: 0.10,
            vl_mode: VlMode::Nonnegative,
            link_cost: 0.0,
            alpha_cap: 10.0,
            epsilons: vec![0.0, 0.05, 0.10, 0.15, 0.20],
            econ_kind: EconKind::Total,
            threads: 0,
            time_limit_secs: None,
        }
    }
}

/// One sweep outcome. Exactly what lands in the CSV, nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub id: u64,
    pub kind: String,
    pub bus_a: Option<usize>,
    pub t_a: Option<usize>,
    pub bus_b: Option<usize>,
    pub t_b: Option<usize>,
    pub epsilon: Option<f64>,
    /// "ok", "unbounded" or "error".
    pub status: String,
    pub base_index: f64,
    pub index: Option<f64>,
    pub percent: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
enum Candidate {
    SpatialPair { bus_a: usize, bus_b: usize },
    TemporalPair { bus: usize, t_a: usize, t_b: usize },
    Epsilon { eps: f64 },
}

/// Per-bus roll-up of temporal sweep results.
#[derive(Debug, Clone, Serialize)]
pub struct TemporalSummary {
    pub bus: usize,
    pub candidates: usize,
    pub min_percent: f64,
    pub median_percent: f64,
    pub max_percent: f64,
}

fn uncertainty_box(sys: &ConstraintSystem, frac: f64) -> UncertaintySet {
    UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), frac)
}

fn flex_opts(spec: &SweepSpec) -> FlexOpts {
    FlexOpts {
        alpha_cap: spec.alpha_cap,
        time_limit: spec.time_limit_secs.map(std::time::Duration::from_secs_f64),
        accept_limit: spec.time_limit_secs.is_some(),
        ..Default::default()
    }
}

fn baseline_index(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    backend: &SolverBackend,
) -> Result<f64, SweepError> {
    let set = uncertainty_box(sys, spec.box_frac);
    let res = flexibility_index(sys, &set, backend, &flex_opts(spec))
        .map_err(|e| SweepError::Baseline(e.to_string()))?;
    match res.index {
        FlexIndex::Bounded(v) if v > 0.0 => Ok(v),
        FlexIndex::Bounded(v) => Err(SweepError::Baseline(format!(
            "baseline index is {v}; relative gains are undefined"
        ))),
        FlexIndex::Unbounded { cap } => Err(SweepError::Baseline(format!(
            "baseline index exceeds the cap {cap}; widen the set or lower alpha_cap"
        ))),
    }
}

/// Both directed links of a candidate pair, each sized from its sender.
fn pair_links(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    a: (usize, usize),
    b: (usize, usize),
) -> Vec<VirtualLink> {
    let mut out = Vec::new();
    for (id, (from, to)) in [(1, (a, b)), (2, (b, a))] {
        let sender_demand = sys.nominal_demand_mw(from.0, from.1).unwrap_or(0.0);
        if sender_demand > 0.0 {
            out.push(VirtualLink {
                id,
                from,
                to,
                capacity: spec.capacity_frac * sender_demand,
                cost: spec.link_cost,
            });
        }
    }
    out
}

fn evaluate(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    backend: &SolverBackend,
    base_index: f64,
    psi0_cost: Option<f64>,
    id: u64,
    cand: &Candidate,
) -> SweepRecord {
    let mut rec = SweepRecord {
        id,
        kind: String::new(),
        bus_a: None,
        t_a: None,
        bus_b: None,
        t_b: None,
        epsilon: None,
        status: "ok".into(),
        base_index,
        index: None,
        percent: None,
        note: String::new(),
    };
    let built = match *cand {
        Candidate::SpatialPair { bus_a, bus_b } => {
            rec.kind = "spatial".into();
            rec.bus_a = Some(bus_a);
            rec.bus_b = Some(bus_b);
            let mut links = Vec::new();
            for t in 0..sys.horizon {
                for l in pair_links(sys, spec, (bus_a, t), (bus_b, t)) {
                    links.push(VirtualLink { id: links.len() + 1, ..l });
                }
            }
            add_virtual_links(sys, &links, spec.vl_mode).map_err(|e| e.to_string())
        }
        Candidate::TemporalPair { bus, t_a, t_b } => {
            rec.kind = "temporal".into();
            rec.bus_a = Some(bus);
            rec.t_a = Some(t_a);
            rec.bus_b = Some(bus);
            rec.t_b = Some(t_b);
            let mut links = pair_links(sys, spec, (bus, t_a), (bus, t_b));
            for (i, l) in links.iter_mut().enumerate() {
                l.id = i + 1;
            }
            add_virtual_links(sys, &links, spec.vl_mode).map_err(|e| e.to_string())
        }
        Candidate::Epsilon { eps } => {
            rec.kind = "epsilon".into();
            rec.epsilon = Some(eps);
            let psi0 = psi0_cost.expect("epsilon sweeps carry the nominal cost");
            add_economic_bound(sys, spec.econ_kind, eps, psi0, sys.total_nominal_demand_mw())
                .map_err(|e| e.to_string())
        }
    };
    let augmented = match built {
        Ok(s) => s,
        Err(msg) => {
            rec.status = "error".into();
            rec.note = msg;
            return rec;
        }
    };
    let set = uncertainty_box(sys, spec.box_frac);
    match flexibility_index(&augmented, &set, backend, &flex_opts(spec)) {
        Ok(res) => match res.index {
            FlexIndex::Bounded(v) => {
                rec.index = Some(v);
                rec.percent = Some((v - base_index) / base_index * 100.0);
                if let Some(lb) = res.stats.lower_bound {
                    rec.note = format!("time_limit incumbent; proven lower bound {lb:.9}");
                }
            }
            FlexIndex::Unbounded { cap } => {
                rec.status = "unbounded".into();
                rec.index = Some(cap);
            }
        },
        Err(e) => {
            rec.status = "error".into();
            rec.note = e.to_string();
        }
    }
    rec
}

fn spatial_candidates(sys: &ConstraintSystem) -> Vec<Candidate> {
    let mut buses: Vec<usize> = sys
        .demand_entries()
        .into_iter()
        .filter(|&(_, d)| d > 0.0)
        .map(|((b, _), _)| b)
        .collect();
    buses.sort_unstable();
    buses.dedup();
    let mut out = Vec::new();
    for i in 0..buses.len() {
        for j in i + 1..buses.len() {
            out.push(Candidate::SpatialPair { bus_a: buses[i], bus_b: buses[j] });
        }
    }
    out
}

fn temporal_candidates(sys: &ConstraintSystem) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut buses: Vec<usize> = sys
        .demand_entries()
        .into_iter()
        .filter(|&(_, d)| d > 0.0)
        .map(|((b, _), _)| b)
        .collect();
    buses.sort_unstable();
    buses.dedup();
    for bus in buses {
        for t_a in 0..sys.horizon {
            for t_b in t_a + 1..sys.horizon {
                let da = sys.nominal_demand_mw(bus, t_a).unwrap_or(0.0);
                let db = sys.nominal_demand_mw(bus, t_b).unwrap_or(0.0);
                if da > 0.0 || db > 0.0 {
                    out.push(Candidate::TemporalPair { bus, t_a, t_b });
                }
            }
        }
    }
    out
}

/// All-pairs spatial sweep over load buses, linking every period.
pub fn run_spatial_pairs(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    backend: &SolverBackend,
    checkpoint: Option<&Path>,
) -> Result<Vec<SweepRecord>, SweepError> {
    let base = baseline_index(sys, spec, backend)?;
    run_candidates(sys, spec, backend, base, None, spatial_candidates(sys), checkpoint)
}

/// Per-bus sweep over hour pairs.
pub fn run_temporal_pairs(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    backend: &SolverBackend,
    checkpoint: Option<&Path>,
) -> Result<Vec<SweepRecord>, SweepError> {
    if sys.horizon < 2 {
        return Err(SweepError::Argument("temporal sweeps need a horizon of at least 2".into()));
    }
    let base = baseline_index(sys, spec, backend)?;
    run_candidates(sys, spec, backend, base, None, temporal_candidates(sys), checkpoint)
}

/// Budget sweep: tightens an economic bound around `sys` (normally a
/// link-augmented system) at each epsilon. The baseline is the same
/// system without the bound, so epsilon = 0 reads as -100 percent.
pub fn run_epsilon_sweep(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    backend: &SolverBackend,
    psi0_cost: f64,
    checkpoint: Option<&Path>,
) -> Result<Vec<SweepRecord>, SweepError> {
    if spec.epsilons.is_empty() {
        return Err(SweepError::Argument("epsilon sweep needs at least one epsilon".into()));
    }
    let base = baseline_index(sys, spec, backend)?;
    let cands = spec.epsilons.iter().map(|&eps| Candidate::Epsilon { eps }).collect();
    run_candidates(sys, spec, backend, base, Some(psi0_cost), cands, checkpoint)
}

fn run_candidates(
    sys: &ConstraintSystem,
    spec: &SweepSpec,
    backend: &SolverBackend,
    base_index: f64,
    psi0_cost: Option<f64>,
    candidates: Vec<Candidate>,
    checkpoint: Option<&Path>,
) -> Result<Vec<SweepRecord>, SweepError> {
    let mut done: Vec<SweepRecord> = match checkpoint {
        Some(path) if path.exists() => load_checkpoint(path)?,
        _ => Vec::new(),
    };
    for (i, rec) in done.iter().enumerate() {
        if rec.id != i as u64 {
            return Err(SweepError::Checkpoint {
                path: checkpoint.unwrap().display().to_string(),
                msg: format!("record {i} has id {}; not a clean prefix of this sweep", rec.id),
            });
        }
    }
    if done.len() > candidates.len() {
        return Err(SweepError::Checkpoint {
            path: checkpoint.unwrap().display().to_string(),
            msg: format!("{} records for {} candidates", done.len(), candidates.len()),
        });
    }

    let work = |records: &mut Vec<SweepRecord>| -> Result<(), SweepError> {
        const CHUNK: usize = 16;
        let mut next = records.len();
        while next < candidates.len() {
            let hi = (next + CHUNK).min(candidates.len());
            let chunk: Vec<SweepRecord> = candidates[next..hi]
                .par_iter()
                .enumerate()
                .map(|(k, cand)| {
                    evaluate(sys, spec, backend, base_index, psi0_cost, (next + k) as u64, cand)
                })
                .collect();
            if let Some(path) = checkpoint {
                append_records(path, &chunk, next == 0)?;
            }
            records.extend(chunk);
            next = hi;
        }
        Ok(())
    };

    if spec.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| SweepError::Argument(e.to_string()))?;
        pool.install(|| work(&mut done))?;
    } else {
        work(&mut done)?;
    }
    Ok(done)
}

fn append_records(path: &Path, records: &[SweepRecord], with_header: bool) -> Result<(), SweepError> {
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(with_header).from_writer(file);
    for rec in records {
        w.serialize(rec).map_err(|e| SweepError::Checkpoint {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    }
    w.flush()?;
    w.into_inner()
        .map_err(|e| SweepError::Checkpoint { path: path.display().to_string(), msg: e.to_string() })?
        .flush()?;
    Ok(())
}

/// Reads a (possibly partial) sweep CSV back in.
pub fn load_checkpoint(path: &Path) -> Result<Vec<SweepRecord>, SweepError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| SweepError::Checkpoint {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec.map_err(|e| SweepError::Checkpoint {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Serializes finished records to a CSV string (same layout as the
/// checkpoint file).
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in records {
        w.serialize(rec).expect("record serializes");
    }
    String::from_utf8(w.into_inner().expect("csv buffer")).expect("csv is utf-8")
}

/// Fraction of successful candidates reaching at least each percent
/// threshold.
pub fn percentile_report(records: &[SweepRecord], thresholds: &[f64]) -> Vec<(f64, f64)> {
    let gains: Vec<f64> = records.iter().filter_map(|r| r.percent).collect();
    thresholds
        .iter()
        .map(|&th| {
            if gains.is_empty() {
                (th, 0.0)
            } else {
                let hits = gains.iter().filter(|&&g| g >= th).count();
                (th, hits as f64 / gains.len() as f64 * 100.0)
            }
        })
        .collect()
}

/// Per-bus min/median/max percent gain over temporal candidates.
pub fn summarize_temporal(records: &[SweepRecord]) -> Vec<TemporalSummary> {
    let mut by_bus: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for rec in records {
        if rec.kind == "temporal" {
            if let (Some(bus), Some(p)) = (rec.bus_a, rec.percent) {
                by_bus.entry(bus).or_default().push(p);
            }
        }
    }
    by_bus
        .into_iter()
        .map(|(bus, mut gains)| {
            gains.sort_by(|a, b| a.partial_cmp(b).expect("finite percent"));
            let n = gains.len();
            TemporalSummary {
                bus,
                candidates: n,
                min_percent: gains[0],
                median_percent: gains[n / 2],
                max_percent: gains[n - 1],
            }
        })
        .collect()
}
