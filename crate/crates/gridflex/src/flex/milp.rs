//! Mixed-integer computation of the flexibility index.
//!
//! By LP duality the feasibility function is a maximum of linear
//! functions of xi over the dual polyhedron of the feasibility LP:
//! psi(xi) = max { lam'(D xi - d) + mu'(B xi - b) : lam >= 0,
//! sum lam = 1, C'lam + A'mu = 0 }. A set T(alpha) stays feasible
//! exactly while every such dual ray keeps its maximum over T(alpha)
//! nonpositive, so the index is the smallest crossing ratio
//!
//!   F = min ( lam'd + mu'b - h'c ) / P(h),   h = D'lam + B'mu,
//!
//! over the (scale-invariant) dual cone, where c is the set center and
//! P(h) is the support-function weight of the deviations: for box-type
//! sets P = sum_k (dev+_k h+_k + dev-_k h-_k), for L1 sets the max over
//! components. Normalizing P = 1 turns the objective into alpha itself;
//! the only integrality left is the sign split h = h+ - h- (binary z_k),
//! whose LP relaxation already gives a positive lower bound - unlike the
//! primal big-M active-set encoding, whose relaxation bound is zero.

use super::sets::{SetShape, UncertaintySet};
use super::{psi_outcome, FlexError, FlexIndex, FlexOpts, FlexResult, FlexStats};
use crate::market::ConstraintSystem;
use crate::solve::{LpProblem, MipProblem, SolveOpts, SolveStatus, SolverBackend, SparseRow};

const LAMBDA_TOL: f64 = 1e-7;
const H_TOL: f64 = 1e-9;

/// Column layout of the dual index MILP. Components whose deviations are
/// both zero get no sign split: their h contribution is folded straight
/// into the objective.
struct Layout {
    lam: usize,
    mu: usize,
    /// h+, h-, z (and pick for L1) columns per split component.
    hp: Vec<Option<usize>>,
    hn: Vec<Option<usize>>,
    z: Vec<Option<usize>>,
    pick: Vec<Option<usize>>,
    n_total: usize,
    n_eq: usize,
    n_ineq: usize,
}

impl Layout {
    fn new(sys: &ConstraintSystem, set_pu: &UncertaintySet) -> Layout {
        let n_eq = sys.eq.len();
        let n_ineq = sys.ineq.len();
        let lam = 0;
        let mu = lam + n_ineq;
        let mut next = mu + n_eq;
        let n = sys.n_xi;
        let mut hp = vec![None; n];
        let mut hn = vec![None; n];
        let mut z = vec![None; n];
        let mut pick = vec![None; n];
        for k in 0..n {
            if set_pu.dev_pos[k] > 0.0 || set_pu.dev_neg[k] > 0.0 {
                hp[k] = Some(next);
                hn[k] = Some(next + 1);
                z[k] = Some(next + 2);
                next += 3;
                if set_pu.shape == SetShape::L1 {
                    pick[k] = Some(next);
                    next += 1;
                }
            }
        }
        Layout { lam, mu, hp, hn, z, pick, n_total: next, n_eq, n_ineq }
    }
}

/// Builds the dual index MILP. `fallback` bounds an h side whose own
/// deviation is zero (the normalization row gives no natural bound
/// there); `cutoff` caps the objective at a known incumbent value.
fn build_milp(
    sys: &ConstraintSystem,
    set_pu: &UncertaintySet,
    fallback: f64,
    cutoff: Option<f64>,
) -> (MipProblem, Layout) {
    let lay = Layout::new(sys, set_pu);
    let n = sys.n_xi;
    let mut lp = LpProblem::new(lay.n_total);

    // objective N = lam'd + mu'b - h'c, with unsplit components folded in
    for (j, row) in sys.ineq.iter().enumerate() {
        lp.objective[lay.lam + j] = row.rhs;
        lp.lower[lay.lam + j] = 0.0;
    }
    for (e, row) in sys.eq.iter().enumerate() {
        lp.objective[lay.mu + e] = row.rhs;
    }
    for (j, row) in sys.ineq.iter().enumerate() {
        for &(k, a) in &row.xi {
            if lay.hp[k].is_none() {
                lp.objective[lay.lam + j] -= set_pu.center[k] * a;
            }
        }
    }
    for (e, row) in sys.eq.iter().enumerate() {
        for &(k, a) in &row.xi {
            if lay.hp[k].is_none() {
                lp.objective[lay.mu + e] -= set_pu.center[k] * a;
            }
        }
    }
    for k in 0..n {
        let (Some(hp), Some(hn)) = (lay.hp[k], lay.hn[k]) else { continue };
        lp.objective[hp] = -set_pu.center[k];
        lp.objective[hn] = set_pu.center[k];
        let up = if set_pu.dev_pos[k] > 0.0 { 1.0 / set_pu.dev_pos[k] } else { fallback };
        let un = if set_pu.dev_neg[k] > 0.0 { 1.0 / set_pu.dev_neg[k] } else { fallback };
        lp.lower[hp] = 0.0;
        lp.upper[hp] = up;
        lp.lower[hn] = 0.0;
        lp.upper[hn] = un;
        let z = lay.z[k].expect("split component has a binary");
        lp.lower[z] = 0.0;
        lp.upper[z] = 1.0;
        // sign split: z = 1 allows h+, z = 0 allows h-
        lp.ineq.push(SparseRow::new(vec![(hp, 1.0), (z, -up)], 0.0));
        lp.ineq.push(SparseRow::new(vec![(hn, 1.0), (z, un)], un));
        if let Some(p) = lay.pick[k] {
            lp.lower[p] = 0.0;
            lp.upper[p] = 1.0;
        }
    }

    // dual feasibility of the psi LP: C'lam + A'mu = 0 per dispatch column
    let mut stat: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sys.n_x];
    for (j, row) in sys.ineq.iter().enumerate() {
        for &(col, a) in &row.x {
            stat[col].push((lay.lam + j, a));
        }
    }
    for (e, row) in sys.eq.iter().enumerate() {
        for &(col, a) in &row.x {
            stat[col].push((lay.mu + e, a));
        }
    }
    for coeffs in stat {
        lp.eq.push(SparseRow::new(coeffs, 0.0));
    }
    // h link: (D'lam + B'mu)_k - h+_k + h-_k = 0 for split components
    let mut link: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, row) in sys.ineq.iter().enumerate() {
        for &(k, a) in &row.xi {
            link[k].push((lay.lam + j, a));
        }
    }
    for (e, row) in sys.eq.iter().enumerate() {
        for &(k, a) in &row.xi {
            link[k].push((lay.mu + e, a));
        }
    }
    for (k, mut coeffs) in link.into_iter().enumerate() {
        let (Some(hp), Some(hn)) = (lay.hp[k], lay.hn[k]) else { continue };
        coeffs.push((hp, -1.0));
        coeffs.push((hn, 1.0));
        lp.eq.push(SparseRow::new(coeffs, 0.0));
    }

    // normalization P = 1
    match set_pu.shape {
        SetShape::Hyperbox | SetShape::Linf => {
            let mut coeffs = Vec::new();
            for k in 0..n {
                if let (Some(hp), Some(hn)) = (lay.hp[k], lay.hn[k]) {
                    if set_pu.dev_pos[k] > 0.0 {
                        coeffs.push((hp, set_pu.dev_pos[k]));
                    }
                    if set_pu.dev_neg[k] > 0.0 {
                        coeffs.push((hn, set_pu.dev_neg[k]));
                    }
                }
            }
            lp.eq.push(SparseRow::new(coeffs, 1.0));
        }
        SetShape::L1 => {
            // max_k u_k = 1 via a one-hot pick: u_k <= 1 and u_k >= pick_k
            let mut picks = Vec::new();
            for k in 0..n {
                let (Some(hp), Some(hn), Some(p)) = (lay.hp[k], lay.hn[k], lay.pick[k]) else {
                    continue;
                };
                let mut u = Vec::new();
                if set_pu.dev_pos[k] > 0.0 {
                    u.push((hp, set_pu.dev_pos[k]));
                }
                if set_pu.dev_neg[k] > 0.0 {
                    u.push((hn, set_pu.dev_neg[k]));
                }
                lp.ineq.push(SparseRow::new(u.clone(), 1.0));
                let mut low = vec![(p, 1.0)];
                low.extend(u.iter().map(|&(c, a)| (c, -a)));
                lp.ineq.push(SparseRow::new(low, 0.0));
                picks.push((p, 1.0));
            }
            lp.eq.push(SparseRow::new(picks, 1.0));
        }
        SetShape::Ellipsoid => unreachable!("rejected before the build"),
    }

    if let Some(cut) = cutoff {
        let coeffs: Vec<(usize, f64)> = lp
            .objective
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a != 0.0)
            .map(|(c, &a)| (c, a))
            .collect();
        lp.ineq.push(SparseRow::new(coeffs, cut));
    }

    let mut binaries: Vec<usize> = lay.z.iter().flatten().copied().collect();
    binaries.extend(lay.pick.iter().flatten().copied());
    (MipProblem { lp, binaries }, lay)
}

/// Critical point along a ray out of the set center: the largest step
/// with psi <= 0, found by bisection. Returns (alpha, xi) at the
/// boundary, or None when the whole ray up to the cap stays feasible.
fn ray_boundary(
    sys: &ConstraintSystem,
    set_pu: &UncertaintySet,
    dir: &[f64],
    backend: &SolverBackend,
    lp_opts: &SolveOpts,
    cap: f64,
) -> Result<Option<(f64, Vec<f64>)>, FlexError> {
    let point = |a: f64| -> Vec<f64> {
        set_pu
            .center
            .iter()
            .zip(dir)
            .map(|(c, d)| c + a * d)
            .collect()
    };
    let (psi_cap, _) = psi_outcome(sys, &point(cap), backend, lp_opts)?;
    if psi_cap <= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    for _ in 0..80 {
        if hi - lo <= 1e-12 * cap.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (v, _) = psi_outcome(sys, &point(mid), backend, lp_opts)?;
        if v <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo, point(lo))))
}

/// Local vertex search for a good incumbent: follow the active facet
/// normal from boundary point to boundary point until the sign pattern
/// repeats, keeping the smallest boundary alpha seen.
fn incumbent_search(
    sys: &ConstraintSystem,
    set_pu: &UncertaintySet,
    backend: &SolverBackend,
    lp_opts: &SolveOpts,
    opts: &FlexOpts,
) -> Result<Option<(f64, Vec<f64>)>, FlexError> {
    let n = set_pu.dim();
    let mut best: Option<(f64, Vec<f64>)> = None;

    match set_pu.shape {
        SetShape::Hyperbox | SetShape::Linf => {
            // initial direction from the subgradient at the center
            let (_, out0) = psi_outcome(sys, &set_pu.center, backend, lp_opts)?;
            let grad0 = out0.map(|o| subgradient(sys, &o)).unwrap_or_default();
            let mut sigma: Vec<f64> = (0..n)
                .map(|k| if grad0.get(k).copied().unwrap_or(0.0) < 0.0 { -1.0 } else { 1.0 })
                .collect();
            let mut seen: Vec<Vec<f64>> = Vec::new();
            for _ in 0..12 {
                if seen.contains(&sigma) {
                    break;
                }
                seen.push(sigma.clone());
                let dir: Vec<f64> = (0..n)
                    .map(|k| if sigma[k] > 0.0 { set_pu.dev_pos[k] } else { -set_pu.dev_neg[k] })
                    .collect();
                let Some((a, xi)) = ray_boundary(sys, set_pu, &dir, backend, lp_opts, opts.alpha_cap)?
                else {
                    continue;
                };
                if best.as_ref().map_or(true, |(b, _)| a < *b) {
                    best = Some((a, xi.clone()));
                }
                let (_, out) = psi_outcome(sys, &xi, backend, lp_opts)?;
                let Some(out) = out else { break };
                let grad = subgradient(sys, &out);
                for k in 0..n {
                    if grad[k].abs() > 1e-12 {
                        sigma[k] = grad[k].signum();
                    }
                }
            }
        }
        SetShape::L1 => {
            if n > 32 {
                return Ok(None);
            }
            for k in 0..n {
                for (w, sgn) in [(set_pu.dev_pos[k], 1.0), (set_pu.dev_neg[k], -1.0)] {
                    if w == 0.0 {
                        continue;
                    }
                    let mut dir = vec![0.0; n];
                    dir[k] = sgn * w;
                    if let Some((a, xi)) =
                        ray_boundary(sys, set_pu, &dir, backend, lp_opts, opts.alpha_cap)?
                    {
                        if best.as_ref().map_or(true, |(b, _)| a < *b) {
                            best = Some((a, xi));
                        }
                    }
                }
            }
        }
        SetShape::Ellipsoid => return Ok(None),
    }
    Ok(best)
}

/// Assembles a dual-MILP start vector from the feasibility-LP duals at a
/// boundary realization found by `incumbent_search`.
fn assemble_start(
    sys: &ConstraintSystem,
    set_pu: &UncertaintySet,
    lay: &Layout,
    xi: &[f64],
    backend: &SolverBackend,
    lp_opts: &SolveOpts,
) -> Result<Option<Vec<f64>>, FlexError> {
    let (_, out) = psi_outcome(sys, xi, backend, lp_opts)?;
    let Some(out) = out else { return Ok(None) };
    let lam: Vec<f64> = (0..lay.n_ineq).map(|j| (-out.duals[lay.n_eq + j]).max(0.0)).collect();
    let mu: Vec<f64> = (0..lay.n_eq).map(|e| -out.duals[e]).collect();
    let h = h_from(sys, &lam, &mu);
    let n = set_pu.dim();
    let weight = |k: usize| -> f64 {
        if h[k] > 0.0 { set_pu.dev_pos[k] * h[k] } else { -set_pu.dev_neg[k] * h[k] }
    };
    let p = match set_pu.shape {
        SetShape::L1 => (0..n).filter(|&k| lay.hp[k].is_some()).map(weight).fold(0.0, f64::max),
        _ => (0..n).filter(|&k| lay.hp[k].is_some()).map(weight).sum(),
    };
    if !(p > 1e-12) {
        return Ok(None);
    }
    let scale = 1.0 / p;
    let mut v = vec![0.0; lay.n_total];
    for j in 0..lay.n_ineq {
        v[lay.lam + j] = lam[j] * scale;
    }
    for e in 0..lay.n_eq {
        v[lay.mu + e] = mu[e] * scale;
    }
    for k in 0..n {
        let (Some(hp), Some(hn), Some(z)) = (lay.hp[k], lay.hn[k], lay.z[k]) else { continue };
        let hk = h[k] * scale;
        v[hp] = hk.max(0.0);
        v[hn] = (-hk).max(0.0);
        v[z] = if hk > 0.0 { 1.0 } else { 0.0 };
    }
    if set_pu.shape == SetShape::L1 {
        let kstar = (0..n)
            .filter(|&k| lay.pick[k].is_some())
            .max_by(|&a, &b| weight(a).total_cmp(&weight(b)));
        if let Some(k) = kstar {
            v[lay.pick[k].expect("picked component")] = 1.0;
        }
    }
    Ok(Some(v))
}

/// h = D'lam + B'mu, the sensitivity of the dual value to xi.
fn h_from(sys: &ConstraintSystem, lam: &[f64], mu: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; sys.n_xi];
    for (j, row) in sys.ineq.iter().enumerate() {
        for &(k, a) in &row.xi {
            h[k] += lam[j] * a;
        }
    }
    for (e, row) in sys.eq.iter().enumerate() {
        for &(k, a) in &row.xi {
            h[k] += mu[e] * a;
        }
    }
    h
}

/// Subgradient of psi with respect to xi from the feasibility-LP duals.
fn subgradient(sys: &ConstraintSystem, out: &crate::solve::SolveOutcome) -> Vec<f64> {
    let n_eq = sys.eq.len();
    let lam: Vec<f64> = (0..sys.ineq.len()).map(|j| -out.duals[n_eq + j]).collect();
    let mu: Vec<f64> = (0..n_eq).map(|e| -out.duals[e]).collect();
    h_from(sys, &lam, &mu)
}

/// Computes the flexibility index of `sys` for the adjustable set `set`
/// (MW coordinates, matching the system's xi ordering).
pub fn flexibility_index(
    sys: &ConstraintSystem,
    set: &UncertaintySet,
    backend: &SolverBackend,
    opts: &FlexOpts,
) -> Result<FlexResult, FlexError> {
    set.validate(sys.n_xi)?;
    if set.shape == SetShape::Ellipsoid {
        return Err(FlexError::UnsupportedShape(
            "ellipsoidal sets require a conic-capable solver adapter".into(),
        ));
    }
    if !(opts.alpha_cap > 0.0) {
        return Err(FlexError::Argument("alpha_cap must be positive".into()));
    }
    let start = std::time::Instant::now();
    let lp_opts = SolveOpts { time_limit: opts.time_limit, ..SolveOpts::default() };
    // the warm start solves dozens of small feasibility LPs; the
    // in-process simplex wins on small systems, a configured external
    // solver on large ones
    let reference = SolverBackend::Reference;
    let lp_backend = if sys.n_x + sys.eq.len() + sys.ineq.len() < 1500 { &reference } else { backend };

    // everything below works in per-unit
    let scale = 1.0 / sys.base_mva;
    let set_pu = UncertaintySet {
        shape: set.shape,
        center: set.center.iter().map(|v| v * scale).collect(),
        dev_neg: set.dev_neg.iter().map(|v| v * scale).collect(),
        dev_pos: set.dev_pos.iter().map(|v| v * scale).collect(),
    };

    let (psi0, out0) = psi_outcome(sys, &set_pu.center, lp_backend, &lp_opts)?;
    if psi0 > opts.nominal_tol {
        return Err(FlexError::NominalInfeasible { psi_mw: psi0 * sys.base_mva });
    }
    let mut stats = FlexStats { backend: backend.name().to_string(), ..Default::default() };
    if psi0 > -opts.nominal_tol {
        // the nominal point already sits on the boundary
        let out0 = out0.expect("finite psi has an LP outcome");
        let n_eq = sys.eq.len();
        let lambda: Vec<f64> = (0..sys.ineq.len()).map(|j| (-out0.duals[n_eq + j]).max(0.0)).collect();
        let mu: Vec<f64> = (0..n_eq).map(|e| -out0.duals[e]).collect();
        let active_set = sys
            .ineq
            .iter()
            .zip(&lambda)
            .filter(|(_, &l)| l > LAMBDA_TOL)
            .map(|(row, _)| row.label.clone())
            .collect();
        stats.wall = start.elapsed();
        return Ok(FlexResult {
            index: FlexIndex::Bounded(0.0),
            critical_xi: set.center.clone(),
            psi_at_critical: psi0 * sys.base_mva,
            active_set,
            lambda,
            mu,
            stats,
        });
    }
    let unbounded = |psi0: f64, mut stats: FlexStats| {
        stats.wall = start.elapsed();
        Ok(FlexResult {
            index: FlexIndex::Unbounded { cap: opts.alpha_cap },
            critical_xi: set.center.clone(),
            psi_at_critical: psi0 * sys.base_mva,
            active_set: Vec::new(),
            lambda: Vec::new(),
            mu: Vec::new(),
            stats,
        })
    };
    if set.is_degenerate() {
        // T(alpha) never leaves the (strictly feasible) center
        return unbounded(psi0, stats);
    }

    // A boundary point from the vertex search upper-bounds the index; its
    // value prunes the MILP and its duals seed the incumbent.
    let incumbent = if opts.warm_start {
        incumbent_search(sys, &set_pu, lp_backend, &lp_opts, opts)?
    } else {
        None
    };
    let mut use_cutoff = incumbent.is_some();
    let mut attempt = 0usize;
    loop {
        let fallback = opts.big_m * (1u64 << attempt) as f64;
        let cutoff = if use_cutoff {
            incumbent.as_ref().map(|(a, _)| a * (1.0 + 1e-6) + 1e-9)
        } else {
            None
        };
        let (mip, lay) = build_milp(sys, &set_pu, fallback, cutoff);
        let mut solve_opts = SolveOpts {
            gap_abs: opts.gap,
            time_limit: opts.time_limit,
            ..SolveOpts::default()
        };
        if let Some((_, xi)) = &incumbent {
            solve_opts.initial_solution =
                assemble_start(sys, &set_pu, &lay, xi, lp_backend, &lp_opts)?;
        }
        mip.lp.check().map_err(|e| FlexError::Solver(e.to_string()))?;
        let out = backend
            .solve_mip(&mip, &solve_opts)
            .map_err(|e| FlexError::Solver(e.to_string()))?;
        stats.nodes += out.stats.nodes;
        stats.simplex_iterations += out.stats.iterations;
        stats.big_m_retries = attempt;

        let usable_limit =
            opts.accept_limit && out.x.len() == lay.n_total && out.objective.is_finite();
        match out.status {
            SolveStatus::Infeasible if use_cutoff => {
                // an incumbent exists, so the cutoff can only have removed
                // everything through numerics; retry without it
                use_cutoff = false;
                continue;
            }
            SolveStatus::Infeasible => {
                // no dual ray reacts to the deviations: T(alpha) stays
                // feasible for every alpha
                return unbounded(psi0, stats);
            }
            SolveStatus::Unbounded => {
                return Err(FlexError::Solver(
                    "index MILP unbounded; the nominal point should have failed the boundary check".into(),
                ));
            }
            SolveStatus::Limit if !usable_limit => {
                return Err(FlexError::Solver(format!(
                    "index MILP hit a limit after {} nodes: {}",
                    out.stats.nodes,
                    out.stats.message.as_deref().unwrap_or("node/time budget exhausted")
                )));
            }
            SolveStatus::Optimal | SolveStatus::Limit => {}
        }

        if out.status == SolveStatus::Optimal {
            // fallback validity: an h side with no deviation-implied
            // bound sitting at the fallback cap may have been cut short
            let mut suspicious = false;
            let mut fallback_used = false;
            for k in 0..sys.n_xi {
                let (Some(hp), Some(hn)) = (lay.hp[k], lay.hn[k]) else { continue };
                for (col, dev) in [(hp, set_pu.dev_pos[k]), (hn, set_pu.dev_neg[k])] {
                    if dev == 0.0 {
                        fallback_used = true;
                        if out.x[col] > fallback * (1.0 - 1e-6) {
                            suspicious = true;
                        }
                    }
                }
            }
            stats.big_m_used = if fallback_used { fallback } else { 0.0 };
            if suspicious && attempt < opts.big_m_retries {
                attempt += 1;
                continue;
            }
        } else {
            // time-limited: the incumbent is an upper bound, the solver's
            // best bound a certificate of how far off it can be
            stats.lower_bound = Some(out.stats.lower_bound.max(0.0));
        }

        let alpha = out.objective;
        if alpha > opts.alpha_cap {
            return unbounded(psi0, stats);
        }
        let lam_raw: Vec<f64> = (0..lay.n_ineq).map(|j| out.x[lay.lam + j].max(0.0)).collect();
        let mu_raw: Vec<f64> = (0..lay.n_eq).map(|e| out.x[lay.mu + e]).collect();
        let h = h_from(sys, &lam_raw, &mu_raw);
        let xi_pu: Vec<f64> = match set_pu.shape {
            SetShape::L1 => {
                let kstar =
                    (0..sys.n_xi).find(|&k| lay.pick[k].map_or(false, |p| out.x[p] > 0.5));
                let mut xi = set_pu.center.clone();
                if let Some(k) = kstar {
                    if h[k] >= 0.0 {
                        xi[k] += alpha * set_pu.dev_pos[k];
                    } else {
                        xi[k] -= alpha * set_pu.dev_neg[k];
                    }
                }
                xi
            }
            _ => (0..sys.n_xi)
                .map(|k| {
                    if h[k] > H_TOL {
                        set_pu.center[k] + alpha * set_pu.dev_pos[k]
                    } else if h[k] < -H_TOL {
                        set_pu.center[k] - alpha * set_pu.dev_neg[k]
                    } else {
                        set_pu.center[k]
                    }
                })
                .collect(),
        };
        let (psi_c, _) = psi_outcome(sys, &xi_pu, lp_backend, &lp_opts)?;
        let lam_sum: f64 = lam_raw.iter().sum();
        let norm = if lam_sum > 1e-12 { 1.0 / lam_sum } else { 1.0 };
        let lambda: Vec<f64> = lam_raw.iter().map(|l| l * norm).collect();
        let mu: Vec<f64> = mu_raw.iter().map(|m| m * norm).collect();
        let active_set = sys
            .ineq
            .iter()
            .zip(&lambda)
            .filter(|(_, &l)| l > LAMBDA_TOL)
            .map(|(row, _)| row.label.clone())
            .collect();
        stats.wall = start.elapsed();
        return Ok(FlexResult {
            index: FlexIndex::Bounded(alpha),
            critical_xi: xi_pu.iter().map(|v| v * sys.base_mva).collect(),
            psi_at_critical: psi_c * sys.base_mva,
            active_set,
            lambda,
            mu,
            stats,
        });
    }
}
