//! The flexibility index: how far demand can deviate, in every direction
//! of an adjustable uncertainty set, before the market has no feasible
//! dispatch.
//!
//! `psi` is the scalar feasibility function (negative inside the feasible
//! region, zero on its boundary); `flexibility_index` finds the largest
//! set scaling via a mixed-integer reformulation of the boundary
//! condition, and `brute_force_index` is an independent bisection oracle
//! used to cross-check it.

mod milp;
mod oracle;
mod sets;

pub use milp::flexibility_index;
pub use oracle::{brute_force_index, OracleOpts};
pub use sets::{SetShape, UncertaintySet};

use crate::market::ConstraintSystem;
use crate::solve::{LpProblem, SolveOpts, SolveOutcome, SolveStatus, SolverBackend, SparseRow};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlexError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported uncertainty-set shape: {0}")]
    UnsupportedShape(String),
    #[error("nominal demand is already infeasible (psi = {psi_mw:.6} MW)")]
    NominalInfeasible { psi_mw: f64 },
    #[error("solver failure: {0}")]
    Solver(String),
}

/// The index itself: the boundary scaling, or proof that no boundary was
/// found up to the search cap.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum FlexIndex {
    Bounded(f64),
    /// Every set up to `cap` stayed feasible.
    Unbounded { cap: f64 },
}

impl FlexIndex {
    pub fn value(&self) -> f64 {
        match *self {
            FlexIndex::Bounded(v) => v,
            FlexIndex::Unbounded { cap } => cap,
        }
    }
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct FlexStats {
    pub nodes: usize,
    pub simplex_iterations: usize,
    pub wall: Duration,
    /// Largest complementarity big-M actually used.
    pub big_m_used: f64,
    pub big_m_retries: usize,
    pub backend: String,
    /// Proven lower bound on the index when a time limit stopped the
    /// solve before optimality (`None` for a proven optimum).
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FlexResult {
    pub index: FlexIndex,
    /// Worst-case demand realization, MW (nominal when no boundary).
    pub critical_xi: Vec<f64>,
    /// Independent recheck of the feasibility function at `critical_xi`,
    /// MW. Near zero for a bounded index.
    pub psi_at_critical: f64,
    /// Labels of the inequality rows active at the critical point.
    pub active_set: Vec<String>,
    /// Inequality multipliers (sum to one) and equality multipliers.
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub stats: FlexStats,
}

#[derive(Debug, Clone)]
pub struct FlexOpts {
    /// Search cap on alpha; reaching it yields `Unbounded`.
    pub alpha_cap: f64,
    /// Absolute MIP gap on alpha.
    pub gap: f64,
    /// Fallback complementarity big-M when interval bounds are infinite.
    pub big_m: f64,
    /// How many times to double the big-M when the post-check flags it.
    pub big_m_retries: usize,
    pub time_limit: Option<Duration>,
    /// Accept the solver's incumbent when the time limit strikes,
    /// reporting the proven bound in the stats, instead of erroring.
    pub accept_limit: bool,
    /// |psi| below this (per-unit) counts as "on the boundary".
    pub nominal_tol: f64,
    /// Seed the MIP with a vertex-search incumbent.
    pub warm_start: bool,
}

impl Default for FlexOpts {
    fn default() -> Self {
        FlexOpts {
            alpha_cap: 10.0,
            gap: 1e-9,
            big_m: 1e4,
            big_m_retries: 3,
            time_limit: None,
            accept_limit: false,
            nominal_tol: 1e-7,
            warm_start: true,
        }
    }
}

/// Builds the feasibility LP `min t  s.t.  A x = b - B xi,
/// C x - t <= d - D xi` at a fixed per-unit realization. The auxiliary
/// variable is the last column.
pub(crate) fn psi_lp(sys: &ConstraintSystem, xi_pu: &[f64]) -> LpProblem {
    let t_col = sys.n_x;
    let mut lp = LpProblem::new(sys.n_x + 1);
    lp.objective[t_col] = 1.0;
    for row in &sys.eq {
        let shift: f64 = row.xi.iter().map(|&(k, a)| a * xi_pu[k]).sum();
        lp.eq.push(SparseRow::new(row.x.clone(), row.rhs - shift));
    }
    for row in &sys.ineq {
        let shift: f64 = row.xi.iter().map(|&(k, a)| a * xi_pu[k]).sum();
        let mut coeffs = row.x.clone();
        coeffs.push((t_col, -1.0));
        lp.ineq.push(SparseRow::new(coeffs, row.rhs - shift));
    }
    lp
}

/// Solves the feasibility LP, returning the per-unit psi value and the
/// full LP outcome (for duals). Inconsistent equalities yield +infinity.
pub(crate) fn psi_outcome(
    sys: &ConstraintSystem,
    xi_pu: &[f64],
    backend: &SolverBackend,
    opts: &SolveOpts,
) -> Result<(f64, Option<SolveOutcome>), FlexError> {
    let lp = psi_lp(sys, xi_pu);
    let out = backend.solve_lp(&lp, opts).map_err(|e| FlexError::Solver(e.to_string()))?;
    match out.status {
        SolveStatus::Optimal => Ok((out.objective, Some(out))),
        SolveStatus::Infeasible => Ok((f64::INFINITY, None)),
        SolveStatus::Unbounded => Err(FlexError::Solver(
            "feasibility LP unbounded; the constraint system has no inequality rows".into(),
        )),
        SolveStatus::Limit => Err(FlexError::Solver(format!(
            "feasibility LP hit a limit: {}",
            out.stats.message.as_deref().unwrap_or("unknown")
        ))),
    }
}

/// Feasibility function at a demand realization in MW. Negative values
/// mean strictly feasible dispatch exists; the scale is MW-equivalent
/// (per-unit LP value times the MVA base).
pub fn psi(sys: &ConstraintSystem, xi_mw: &[f64], backend: &SolverBackend) -> Result<f64, FlexError> {
    if xi_mw.len() != sys.n_xi {
        return Err(FlexError::Argument(format!(
            "expected {} demand realizations, got {}",
            sys.n_xi,
            xi_mw.len()
        )));
    }
    let xi_pu: Vec<f64> = xi_mw.iter().map(|v| v / sys.base_mva).collect();
    let (v, _) = psi_outcome(sys, &xi_pu, backend, &SolveOpts::default())?;
    Ok(v * sys.base_mva)
}

/// Relative flexibility gain, in percent, of `new` over `base`.
pub fn percent_increase(base: f64, new: f64) -> Result<f64, FlexError> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(FlexError::Argument(format!("baseline index must be positive, got {base}")));
    }
    Ok((new - base) / base * 100.0)
}

#[cfg(test)]
mod tests;
