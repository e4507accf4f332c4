//! Brute-force cross-check of the flexibility index: bisection on the
//! set scaling with an exhaustive worst-case check at every candidate
//! vertex. Deliberately simple and independent of the MILP route.

use super::sets::{SetShape, UncertaintySet};
use super::{psi_outcome, FlexError, FlexIndex};
use crate::market::ConstraintSystem;
use crate::solve::{SolveOpts, SolverBackend};

/// Hard cap on enumerable dimensions: 2^12 vertices per probe.
const MAX_BOX_DIM: usize = 12;

#[derive(Debug, Clone)]
pub struct OracleOpts {
    pub alpha_cap: f64,
    /// Absolute tolerance on the returned alpha.
    pub tol: f64,
    /// psi values up to this (per-unit) count as feasible.
    pub psi_tol: f64,
}

impl Default for OracleOpts {
    fn default() -> Self {
        OracleOpts { alpha_cap: 10.0, tol: 1e-7, psi_tol: 1e-9 }
    }
}

/// Bisects on alpha, checking every candidate vertex of `T(alpha)`; by
/// convexity of the feasibility function this is exact for box-like and
/// 1-norm sets.
pub fn brute_force_index(
    sys: &ConstraintSystem,
    set: &UncertaintySet,
    backend: &SolverBackend,
    opts: &OracleOpts,
) -> Result<FlexIndex, FlexError> {
    set.validate(sys.n_xi)?;
    if matches!(set.shape, SetShape::Hyperbox | SetShape::Linf) {
        let free = (0..set.dim())
            .filter(|&k| set.dev_neg[k] > 0.0 || set.dev_pos[k] > 0.0)
            .count();
        if free > MAX_BOX_DIM {
            return Err(FlexError::Argument(format!(
                "brute force refuses {free} box dimensions (cap {MAX_BOX_DIM})"
            )));
        }
    }
    let lp_opts = SolveOpts::default();
    let scale = 1.0 / sys.base_mva;
    let set_pu = UncertaintySet {
        shape: set.shape,
        center: set.center.iter().map(|v| v * scale).collect(),
        dev_neg: set.dev_neg.iter().map(|v| v * scale).collect(),
        dev_pos: set.dev_pos.iter().map(|v| v * scale).collect(),
    };

    let feasible = |alpha: f64| -> Result<bool, FlexError> {
        for v in set_pu.vertices(alpha)? {
            let (psi, _) = psi_outcome(sys, &v, backend, &lp_opts)?;
            if psi > opts.psi_tol {
                return Ok(false);
            }
        }
        Ok(true)
    };

    if !feasible(0.0)? {
        return Ok(FlexIndex::Bounded(0.0));
    }
    if feasible(opts.alpha_cap)? {
        return Ok(FlexIndex::Unbounded { cap: opts.alpha_cap });
    }
    let (mut lo, mut hi) = (0.0f64, opts.alpha_cap);
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FlexIndex::Bounded(0.5 * (lo + hi)))
}
