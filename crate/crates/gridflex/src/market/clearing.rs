use super::{ConstraintSystem, MarketError};
use crate::solve::{SolveOpts, SolveStatus, SolverBackend};
use serde::Serialize;

/// Labeled clearing result. Dispatch, flows and shifts are in MW, angles
/// in radians, prices in $/MWh, cost in $.
#[derive(Debug, Clone, Serialize)]
pub struct ClearingSolution {
    /// Full decision vector, per-unit, in system variable order.
    pub x: Vec<f64>,
    /// (variable label, value in original units) for every variable.
    pub values: Vec<(String, f64)>,
    pub total_cost: f64,
    /// Nodal prices by balance-row label, $/MWh.
    pub prices: Vec<(String, f64)>,
    /// Labels of inequality rows binding at the optimum.
    pub binding: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub enum ClearingOutcome {
    Optimal(ClearingSolution),
    /// No feasible dispatch exists for this realization; carries the
    /// labels of rows violated by the least-infeasible point if known.
    Infeasible { message: String },
}

/// Clears the market at the demand realization `xi_mw` (MW, in xi
/// component order). Pass the system's nominal xi for the nominal solve.
pub fn solve_clearing(
    sys: &ConstraintSystem,
    xi_mw: &[f64],
    backend: &SolverBackend,
    opts: &SolveOpts,
) -> Result<ClearingOutcome, MarketError> {
    if xi_mw.len() != sys.n_xi {
        return Err(MarketError::Argument(format!(
            "expected {} demand realizations, got {}",
            sys.n_xi,
            xi_mw.len()
        )));
    }
    let xi: Vec<f64> = xi_mw.iter().map(|v| v / sys.base_mva).collect();
    let lp = sys.to_lp(&xi);
    let out = backend
        .solve_lp(&lp, opts)
        .map_err(|e| MarketError::Argument(e.to_string()))?;
    match out.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Ok(ClearingOutcome::Infeasible {
                message: "no dispatch satisfies the clearing constraints at this realization".into(),
            })
        }
        SolveStatus::Unbounded => {
            return Err(MarketError::Argument(
                "clearing LP is unbounded; check cost data".into(),
            ))
        }
        SolveStatus::Limit => {
            return Err(MarketError::Argument(format!(
                "clearing solve hit a limit: {}",
                out.stats.message.as_deref().unwrap_or("unknown")
            )))
        }
    }

    let mut values = Vec::with_capacity(sys.n_x);
    for (j, label) in sys.var_labels.iter().enumerate() {
        // angles stay in radians; power-like variables scale back to MW
        let scale = if label.starts_with("theta") { 1.0 } else { sys.base_mva };
        values.push((label.clone(), out.x[j] * scale));
    }
    let total_cost = lp.objective_value(&out.x);

    // balance-row duals: dCost/dRhs is $ per per-unit of extra demand;
    // dividing by base_mva gives $/MWh.
    let mut prices = Vec::new();
    for (i, row) in sys.eq.iter().enumerate() {
        if row.label.starts_with("balance") {
            let dual = out.duals.get(i).copied().unwrap_or(f64::NAN);
            prices.push((row.label.clone(), dual / sys.base_mva));
        }
    }

    let tol = 1e-6;
    let mut binding = Vec::new();
    for (i, row) in sys.ineq.iter().enumerate() {
        let shift: f64 = row.xi.iter().map(|&(k, a)| a * xi[k]).sum();
        let slack = (row.rhs - shift) - row.x.iter().map(|&(j, a)| a * out.x[j]).sum::<f64>();
        let _ = i;
        if slack.abs() <= tol * row.rhs.abs().max(1.0) {
            binding.push(row.label.clone());
        }
    }

    Ok(ClearingOutcome::Optimal(ClearingSolution {
        x: out.x,
        values,
        total_cost,
        prices,
        binding,
    }))
}
