//! LP and MILP solving behind a uniform adapter interface.
//!
//! The reference implementation is a bounded-variable revised simplex plus
//! a best-first branch-and-bound over binary variables. An external
//! backend can be configured for large sweeps; it speaks a JSON problem /
//! solution protocol over a subprocess.

mod branch_bound;
mod external;
mod lp_format;
mod simplex;

pub use external::{ExternalSolver, ExternalSolverConfig};
pub use lp_format::{parse_lp_format, write_lp_format};

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

pub const INF: f64 = f64::INFINITY;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("solver configuration error: {0}")]
    Config(String),
}

/// One linear row `coeffs . x (=|<=) rhs`, sparse over variable indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        SparseRow { coeffs, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// Minimization LP: `min c.x  s.t.  eq rows, ineq rows (<=), l <= x <= u`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LpProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub eq: Vec<SparseRow>,
    pub ineq: Vec<SparseRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub names: Option<Vec<String>>,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            n_vars,
            objective: vec![0.0; n_vars],
            eq: Vec::new(),
            ineq: Vec::new(),
            lower: vec![-INF; n_vars],
            upper: vec![INF; n_vars],
            names: None,
        }
    }

    pub fn check(&self) -> Result<(), SolveError> {
        if self.objective.len() != self.n_vars
            || self.lower.len() != self.n_vars
            || self.upper.len() != self.n_vars
        {
            return Err(SolveError::Malformed("vector lengths disagree with n_vars".into()));
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l > u {
                return Err(SolveError::Malformed(format!("variable {j}: lower {l} > upper {u}")));
            }
        }
        for row in self.eq.iter().chain(&self.ineq) {
            for &(j, a) in &row.coeffs {
                if j >= self.n_vars {
                    return Err(SolveError::Malformed(format!("coefficient references variable {j}")));
                }
                if !a.is_finite() || !row.rhs.is_finite() {
                    return Err(SolveError::Malformed("non-finite row data".into()));
                }
            }
        }
        Ok(())
    }

    /// Largest constraint/bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for row in &self.eq {
            v = v.max((row.dot(x) - row.rhs).abs());
        }
        for row in &self.ineq {
            v = v.max(row.dot(x) - row.rhs);
        }
        for j in 0..self.n_vars {
            v = v.max(self.lower[j] - x[j]);
            v = v.max(x[j] - self.upper[j]);
        }
        v
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// An LP plus a set of variable indices restricted to {0, 1}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MipProblem {
    pub lp: LpProblem,
    pub binaries: Vec<usize>,
}

impl MipProblem {
    pub fn check(&self) -> Result<(), SolveError> {
        self.lp.check()?;
        for &j in &self.binaries {
            if j >= self.lp.n_vars {
                return Err(SolveError::Malformed(format!("binary index {j} out of range")));
            }
            if self.lp.lower[j] < -1e-12 || self.lp.upper[j] > 1.0 + 1e-12 {
                return Err(SolveError::Malformed(format!("binary variable {j} not bounded in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub nodes: usize,
    pub wall: Duration,
    /// Best proven lower bound on the objective (MIP).
    pub lower_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals, equality rows first then inequality rows, in the
    /// `dObjective/dRhs` convention (so `<=` rows in a minimization have
    /// nonpositive duals). Empty for MIP solves.
    pub duals: Vec<f64>,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub(crate) fn failed(status: SolveStatus, msg: impl Into<String>) -> Self {
        SolveOutcome {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            stats: SolveStats { message: Some(msg.into()), ..Default::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOpts {
    /// Absolute optimality gap for MIP termination.
    pub gap_abs: f64,
    pub max_simplex_iters: usize,
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    /// Feasibility tolerance used by post-solve rechecks.
    pub feas_tol: f64,
    /// Integrality tolerance for binaries.
    pub int_tol: f64,
    /// Optional MIP warm-start point; used as initial incumbent when it
    /// passes an independent feasibility check.
    pub initial_solution: Option<Vec<f64>>,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            gap_abs: 1e-9,
            max_simplex_iters: 200_000,
            max_nodes: 2_000_000,
            time_limit: None,
            feas_tol: 1e-7,
            int_tol: 1e-6,
            initial_solution: None,
        }
    }
}

/// Solves an LP with the reference simplex.
pub fn solve_lp(p: &LpProblem, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
    p.check()?;
    let mut out = simplex::solve(p, opts);
    // Independent recheck: never report a wrong "optimal".
    if out.status == SolveStatus::Optimal {
        let viol = p.max_violation(&out.x);
        if viol > opts.feas_tol * problem_scale(p) {
            out.status = SolveStatus::Limit;
            out.stats.message = Some(format!("post-solve residual {viol:.3e} exceeds tolerance"));
        }
    }
    Ok(out)
}

/// Solves a MIP with best-first branch-and-bound over the binaries.
pub fn solve_mip(p: &MipProblem, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
    p.check()?;
    let mut out = branch_bound::solve(p, opts);
    if out.status == SolveStatus::Optimal {
        let viol = p.lp.max_violation(&out.x);
        if viol > opts.feas_tol * problem_scale(&p.lp) {
            out.status = SolveStatus::Limit;
            out.stats.message = Some(format!("post-solve residual {viol:.3e} exceeds tolerance"));
        }
    }
    Ok(out)
}

fn problem_scale(p: &LpProblem) -> f64 {
    let mut s: f64 = 1.0;
    for row in p.eq.iter().chain(&p.ineq) {
        s = s.max(row.rhs.abs());
        for &(_, a) in &row.coeffs {
            s = s.max(a.abs());
        }
    }
    s
}

/// Uniform solving interface over the reference and external backends.
#[derive(Debug, Clone)]
pub enum SolverBackend {
    Reference,
    External(ExternalSolver),
}

impl SolverBackend {
    pub fn solve_lp(&self, p: &LpProblem, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
        match self {
            SolverBackend::Reference => solve_lp(p, opts),
            SolverBackend::External(s) => s.solve_lp(p, opts),
        }
    }

    pub fn solve_mip(&self, p: &MipProblem, opts: &SolveOpts) -> Result<SolveOutcome, SolveError> {
        match self {
            SolverBackend::Reference => solve_mip(p, opts),
            SolverBackend::External(s) => s.solve_mip(p, opts),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            SolverBackend::Reference => "reference",
            SolverBackend::External(_) => "external",
        }
    }

    /// Builds the backend selected by the `GRIDFLEX_EXTERNAL_SOLVER`
    /// environment variable, falling back to the reference solver.
    pub fn from_env() -> Result<SolverBackend, SolveError> {
        match std::env::var("GRIDFLEX_EXTERNAL_SOLVER") {
            Ok(path) if !path.is_empty() => {
                let cfg = ExternalSolverConfig { command: path, ..Default::default() };
                Ok(SolverBackend::External(ExternalSolver::new(cfg)?))
            }
            _ => Ok(SolverBackend::Reference),
        }
    }
}
