//! Bounded-variable revised simplex with explicit basis inverse,
//! equilibration scaling, and Bland fallback after a bounded number of
//! Dantzig pivots.

use super::{LpProblem, SolveOpts, SolveOutcome, SolveStats, SolveStatus, INF};
use std::time::Instant;

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-8;
const BLAND_AFTER: usize = 20_000;
const REFACTOR_EVERY: usize = 100;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable, held at zero.
    FreeZero,
}

struct Tableau {
    m: usize,
    /// Total columns: structural + slacks + artificials.
    n_total: usize,
    /// Structural + slack count (artificials start here).
    n_real: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    phase1_cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    /// Nonbasic value per column (bound value or 0 for free).
    nb_value: Vec<f64>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iters: usize,
}

impl Tableau {
    fn col_dot_y(&self, j: usize, y: &[f64]) -> f64 {
        self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
    }

    /// w = binv * a_j
    fn ftran(&self, j: usize, w: &mut [f64]) {
        w.iter_mut().for_each(|v| *v = 0.0);
        for &(i, a) in &self.cols[j] {
            if a == 0.0 {
                continue;
            }
            for r in 0..self.m {
                w[r] += self.binv[r * self.m + i] * a;
            }
        }
    }

    /// y = c_B^T binv
    fn btran(&self, costs: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.m {
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[r * self.m..(r + 1) * self.m];
            for k in 0..self.m {
                y[k] += cb * row[k];
            }
        }
    }

    /// Recomputes binv by Gauss-Jordan inversion of the basis matrix and
    /// the basic values from scratch.
    fn refactor(&mut self) -> Result<(), ()> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * m + c] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            // partial pivoting
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(());
            }
            if piv != col {
                for k in 0..m {
                    a.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[col * m + k];
                    inv[r * m + k] -= f * inv[col * m + k];
                }
            }
        }
        self.binv = inv;
        self.recompute_xb();
        Ok(())
    }

    fn recompute_xb(&mut self) {
        let m = self.m;
        let mut q = self.b.clone();
        for j in 0..self.n_total {
            if self.status[j] == Status::Basic {
                continue;
            }
            let v = self.nb_value[j];
            if v == 0.0 {
                continue;
            }
            for &(i, a) in &self.cols[j] {
                q[i] -= a * v;
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.xb[r] = row.iter().zip(&q).map(|(bi, qi)| bi * qi).sum();
        }
    }

    /// Runs primal simplex with the given cost vector. Returns Ok(true)
    /// when optimal, Ok(false) on iteration limit, Err(Unbounded).
    fn iterate(&mut self, costs: &[f64], allow_unbounded: bool, max_iters: usize) -> Result<bool, SolveStatus> {
        let m = self.m;
        let mut y = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut since_refactor = 0usize;
        loop {
            if self.iters >= max_iters {
                return Ok(false);
            }
            self.iters += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                since_refactor = 0;
                if self.refactor().is_err() {
                    return Err(SolveStatus::Limit);
                }
            }
            self.btran(costs, &mut y);
            let bland = self.iters > BLAND_AFTER;
            // pricing
            let mut enter: Option<(usize, f64, f64)> = None; // (col, d_j, score)
            for j in 0..self.n_total {
                match self.status[j] {
                    Status::Basic => continue,
                    _ => {}
                }
                if self.hi[j] - self.lo[j] < 1e-15 {
                    continue; // fixed
                }
                let d = costs[j] - self.col_dot_y(j, &y);
                let viol = match self.status[j] {
                    Status::AtLower => -d,
                    Status::AtUpper => d,
                    Status::FreeZero => d.abs(),
                    Status::Basic => unreachable!(),
                };
                if viol > DUAL_TOL {
                    if bland {
                        enter = Some((j, d, viol));
                        break;
                    }
                    match enter {
                        Some((_, _, best)) if best >= viol => {}
                        _ => enter = Some((j, d, viol)),
                    }
                }
            }
            let Some((jq, dq, _)) = enter else {
                return Ok(true);
            };
            let sign = match self.status[jq] {
                Status::AtLower => 1.0,
                Status::AtUpper => -1.0,
                Status::FreeZero => {
                    if dq < 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Status::Basic => unreachable!(),
            };
            self.ftran(jq, &mut w);
            // ratio test
            let own_range = self.hi[jq] - self.lo[jq]; // may be INF
            let mut t_best = if own_range.is_finite() { own_range } else { INF };
            let mut leave: Option<usize> = None; // row index
            for r in 0..m {
                let delta = -sign * w[r];
                let jb = self.basis[r];
                let t = if delta < -PIVOT_TOL {
                    if self.lo[jb] == -INF {
                        continue;
                    }
                    ((self.xb[r] - self.lo[jb]) / (-delta)).max(0.0)
                } else if delta > PIVOT_TOL {
                    if self.hi[jb] == INF {
                        continue;
                    }
                    ((self.hi[jb] - self.xb[r]) / delta).max(0.0)
                } else {
                    continue;
                };
                // on ties prefer the row whose basic variable has the
                // smallest column index (Bland-compatible, deterministic)
                if t < t_best - FEAS_EPS {
                    t_best = t;
                    leave = Some(r);
                } else if t <= t_best + FEAS_EPS {
                    match leave {
                        Some(lr) if self.basis[lr] <= jb => {}
                        _ => {
                            t_best = t.min(t_best);
                            leave = Some(r);
                        }
                    }
                }
            }
            if t_best == INF && leave.is_none() {
                return if allow_unbounded { Err(SolveStatus::Unbounded) } else { Err(SolveStatus::Limit) };
            }
            match leave {
                None => {
                    // bound flip of the entering variable
                    let t = t_best;
                    for r in 0..m {
                        self.xb[r] -= sign * t * w[r];
                    }
                    self.status[jq] = match self.status[jq] {
                        Status::AtLower => Status::AtUpper,
                        Status::AtUpper => Status::AtLower,
                        s => s,
                    };
                    self.nb_value[jq] = match self.status[jq] {
                        Status::AtLower => self.lo[jq],
                        Status::AtUpper => self.hi[jq],
                        _ => 0.0,
                    };
                }
                Some(r) => {
                    let t = t_best;
                    let piv = w[r];
                    if piv.abs() < PIVOT_TOL {
                        // numerically unsafe pivot; refactor and retry
                        since_refactor = 0;
                        if self.refactor().is_err() {
                            return Err(SolveStatus::Limit);
                        }
                        continue;
                    }
                    let jb = self.basis[r];
                    // leaving variable goes to the bound it hit
                    let delta = -sign * piv;
                    let (st, val) = if delta < 0.0 { (Status::AtLower, self.lo[jb]) } else { (Status::AtUpper, self.hi[jb]) };
                    for i in 0..m {
                        self.xb[i] -= sign * t * w[i];
                    }
                    let enter_val = self.nb_value[jq] + sign * t;
                    self.status[jb] = st;
                    self.nb_value[jb] = val;
                    self.status[jq] = Status::Basic;
                    self.basis[r] = jq;
                    self.xb[r] = enter_val;
                    // product-form update of binv
                    let mrow: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / piv).collect();
                    for i in 0..m {
                        if i == r {
                            continue;
                        }
                        let f = w[i];
                        if f == 0.0 {
                            continue;
                        }
                        for k in 0..m {
                            self.binv[i * m + k] -= f * mrow[k];
                        }
                    }
                    self.binv[r * m..(r + 1) * m].copy_from_slice(&mrow);
                }
            }
        }
    }
}

pub(super) fn solve(p: &LpProblem, opts: &SolveOpts) -> SolveOutcome {
    let start = Instant::now();
    let n = p.n_vars;
    let m = p.eq.len() + p.ineq.len();

    if m == 0 {
        return solve_unconstrained(p, start);
    }

    // --- scaling: equilibrate rows then columns to unit max-abs ---
    let n_real = n + p.ineq.len();
    let mut row_scale = vec![1.0f64; m];
    {
        let rows = p.eq.iter().chain(&p.ineq);
        for (i, row) in rows.enumerate() {
            let mx = row.coeffs.iter().map(|&(_, a)| a.abs()).fold(0.0f64, f64::max);
            if mx > 0.0 {
                row_scale[i] = 1.0 / mx;
            }
        }
    }
    let mut col_scale = vec![1.0f64; n];
    {
        let mut colmax = vec![0.0f64; n];
        for (i, row) in p.eq.iter().chain(&p.ineq).enumerate() {
            for &(j, a) in &row.coeffs {
                colmax[j] = colmax[j].max((a * row_scale[i]).abs());
            }
        }
        for j in 0..n {
            if colmax[j] > 0.0 {
                col_scale[j] = 1.0 / colmax[j];
            }
        }
    }

    // --- build scaled tableau: structural, slacks, artificials ---
    let n_total = n_real + m;
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_total];
    for (i, row) in p.eq.iter().chain(&p.ineq).enumerate() {
        for &(j, a) in &row.coeffs {
            if a != 0.0 {
                cols[j].push((i, a * row_scale[i] * col_scale[j]));
            }
        }
    }
    for (k, _) in p.ineq.iter().enumerate() {
        let i = p.eq.len() + k;
        cols[n + k].push((i, row_scale[i]));
    }
    let mut lo = vec![0.0; n_total];
    let mut hi = vec![INF; n_total];
    for j in 0..n {
        lo[j] = if p.lower[j] == -INF { -INF } else { p.lower[j] / col_scale[j] };
        hi[j] = if p.upper[j] == INF { INF } else { p.upper[j] / col_scale[j] };
    }
    // slacks: [0, INF); artificials set below
    let mut b = vec![0.0; m];
    for (i, row) in p.eq.iter().chain(&p.ineq).enumerate() {
        b[i] = row.rhs * row_scale[i];
    }
    let mut cost = vec![0.0; n_total];
    for j in 0..n {
        cost[j] = p.objective[j] * col_scale[j];
    }
    let mut phase1_cost = vec![0.0; n_total];

    // nonbasic initial values
    let mut status = vec![Status::AtLower; n_total];
    let mut nb_value = vec![0.0; n_total];
    for j in 0..n_real {
        if lo[j].is_finite() {
            status[j] = Status::AtLower;
            nb_value[j] = lo[j];
        } else if hi[j].is_finite() {
            status[j] = Status::AtUpper;
            nb_value[j] = hi[j];
        } else {
            status[j] = Status::FreeZero;
            nb_value[j] = 0.0;
        }
    }
    // residuals determine artificial signs
    let mut resid = b.clone();
    for j in 0..n_real {
        let v = nb_value[j];
        if v == 0.0 {
            continue;
        }
        for &(i, a) in &cols[j] {
            resid[i] -= a * v;
        }
    }
    let mut basis = Vec::with_capacity(m);
    let mut xb = Vec::with_capacity(m);
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        let j = n_real + i;
        let sign = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
        cols[j].push((i, sign));
        lo[j] = 0.0;
        hi[j] = INF;
        phase1_cost[j] = 1.0;
        status[j] = Status::Basic;
        basis.push(j);
        xb.push(resid[i].abs());
        binv[i * m + i] = sign;
    }

    let mut t = Tableau {
        m,
        n_total,
        n_real,
        cols,
        cost,
        phase1_cost,
        lo,
        hi,
        b,
        basis,
        status,
        nb_value,
        binv,
        xb,
        iters: 0,
    };

    // --- phase 1 ---
    let p1_cost = t.phase1_cost.clone();
    match t.iterate(&p1_cost, false, opts.max_simplex_iters) {
        Ok(true) => {}
        Ok(false) => return limit_outcome(&t, start, "phase-1 iteration limit"),
        Err(_) => return limit_outcome(&t, start, "phase-1 numerical failure"),
    }
    let p1_obj: f64 = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(&j, _)| j >= t.n_real)
        .map(|(_, &v)| v)
        .sum::<f64>();
    if p1_obj > 1e-7 {
        return SolveOutcome {
            status: SolveStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            stats: SolveStats {
                iterations: t.iters,
                wall: start.elapsed(),
                message: Some(format!("phase-1 infeasibility {p1_obj:.3e}")),
                ..Default::default()
            },
        };
    }
    // pin artificials at zero for phase 2
    for j in t.n_real..t.n_total {
        t.hi[j] = 0.0;
        if t.status[j] != Status::Basic {
            t.status[j] = Status::AtLower;
            t.nb_value[j] = 0.0;
        }
    }

    // --- phase 2 ---
    let p2_cost = t.cost.clone();
    let status = match t.iterate(&p2_cost, true, opts.max_simplex_iters) {
        Ok(true) => SolveStatus::Optimal,
        Ok(false) => return limit_outcome(&t, start, "phase-2 iteration limit"),
        Err(SolveStatus::Unbounded) => {
            return SolveOutcome {
                status: SolveStatus::Unbounded,
                x: Vec::new(),
                objective: f64::NEG_INFINITY,
                duals: Vec::new(),
                stats: SolveStats { iterations: t.iters, wall: start.elapsed(), ..Default::default() },
            }
        }
        Err(_) => return limit_outcome(&t, start, "phase-2 numerical failure"),
    };

    // --- extract unscaled primal and duals ---
    if t.refactor().is_err() {
        return limit_outcome(&t, start, "final refactorization failed");
    }
    let mut x = vec![0.0; n];
    for j in 0..n {
        let v = match t.status[j] {
            Status::Basic => {
                let r = t.basis.iter().position(|&bj| bj == j).unwrap();
                t.xb[r]
            }
            _ => t.nb_value[j],
        };
        x[j] = v * col_scale[j];
    }
    let mut y = vec![0.0; m];
    t.btran(&p2_cost, &mut y);
    let duals: Vec<f64> = (0..m).map(|i| y[i] * row_scale[i]).collect();
    let objective = p.objective_value(&x);

    SolveOutcome {
        status,
        x,
        objective,
        duals,
        stats: SolveStats { iterations: t.iters, wall: start.elapsed(), ..Default::default() },
    }
}

fn solve_unconstrained(p: &LpProblem, start: Instant) -> SolveOutcome {
    let mut x = vec![0.0; p.n_vars];
    for j in 0..p.n_vars {
        let c = p.objective[j];
        let v = if c > 0.0 {
            p.lower[j]
        } else if c < 0.0 {
            p.upper[j]
        } else if p.lower[j].is_finite() {
            p.lower[j]
        } else if p.upper[j].is_finite() {
            p.upper[j]
        } else {
            0.0
        };
        if !v.is_finite() {
            return SolveOutcome {
                status: SolveStatus::Unbounded,
                x: Vec::new(),
                objective: f64::NEG_INFINITY,
                duals: Vec::new(),
                stats: SolveStats { wall: start.elapsed(), ..Default::default() },
            };
        }
        x[j] = v;
    }
    let objective = p.objective_value(&x);
    SolveOutcome {
        status: SolveStatus::Optimal,
        x,
        objective,
        duals: Vec::new(),
        stats: SolveStats { wall: start.elapsed(), ..Default::default() },
    }
}

fn limit_outcome(t: &Tableau, start: Instant, msg: &str) -> SolveOutcome {
    SolveOutcome {
        status: SolveStatus::Limit,
        x: Vec::new(),
        objective: f64::NAN,
        duals: Vec::new(),
        stats: SolveStats {
            iterations: t.iters,
            wall: start.elapsed(),
            message: Some(msg.to_string()),
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve_lp, LpProblem, SolveOpts, SolveStatus, SparseRow, INF};

    fn opts() -> SolveOpts {
        SolveOpts::default()
    }

    #[test]
    fn min_x_with_lower_row() {
        // min x s.t. x >= 3  (as -x <= -3)
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.ineq.push(SparseRow::new(vec![(0, -1.0)], -3.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.x[0] - 3.0).abs() < 1e-9);
        // dual: dObj/dRhs of the <= row; rhs -3 -> -(3+rhs)=0... obj = -rhs
        assert!((out.duals[0] - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn bounded_box_lp() {
        // min -x - 2y s.t. x + y <= 4, 0<=x<=3, 0<=y<=3
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -2.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![3.0, 3.0];
        p.ineq.push(SparseRow::new(vec![(0, 1.0), (1, 1.0)], 4.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - (-7.0)).abs() < 1e-9, "obj {}", out.objective);
        assert!((out.x[0] - 1.0).abs() < 1e-9);
        assert!((out.x[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn equality_with_free_variable() {
        // min y s.t. y = 2 theta + 1, theta free, -1 <= y <= 5
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 0.0];
        p.lower = vec![-1.0, -INF];
        p.upper = vec![5.0, INF];
        p.eq.push(SparseRow::new(vec![(0, 1.0), (1, -2.0)], 1.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.x[0] - (-1.0)).abs() < 1e-9);
        assert!((out.x[1] - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x <= 1, x >= 2
        let mut p = LpProblem::new(1);
        p.ineq.push(SparseRow::new(vec![(0, 1.0)], 1.0));
        p.ineq.push(SparseRow::new(vec![(0, -1.0)], -2.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(1);
        p.objective = vec![-1.0];
        p.ineq.push(SparseRow::new(vec![(0, -1.0)], 0.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        // duplicated equality rows must not cycle or fail
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.lower = vec![0.0, 0.0];
        p.eq.push(SparseRow::new(vec![(0, 1.0), (1, 1.0)], 2.0));
        p.eq.push(SparseRow::new(vec![(0, 1.0), (1, 1.0)], 2.0));
        p.eq.push(SparseRow::new(vec![(0, 2.0), (1, 2.0)], 4.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn badly_scaled_problem() {
        // min 1e6 x + y s.t. 1e-4 x + y = 1, x,y >= 0
        let mut p = LpProblem::new(2);
        p.objective = vec![1e6, 1.0];
        p.lower = vec![0.0, 0.0];
        p.eq.push(SparseRow::new(vec![(0, 1e-4), (1, 1.0)], 1.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dual_prices_satisfy_complementarity() {
        // min 3x + 2y s.t. x + y >= 4 (as -x-y<=-4), x - y = 1, x,y >= 0
        let mut p = LpProblem::new(2);
        p.objective = vec![3.0, 2.0];
        p.lower = vec![0.0, 0.0];
        p.eq.push(SparseRow::new(vec![(0, 1.0), (1, -1.0)], 1.0));
        p.ineq.push(SparseRow::new(vec![(0, -1.0), (1, -1.0)], -4.0));
        let out = solve_lp(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        // x = 2.5, y = 1.5, obj = 10.5
        assert!((out.objective - 10.5).abs() < 1e-9);
        // stationarity: c + A^T(-mu) + G^T(-lambda) with our dual sign:
        // c_j - y_eq a_eq_j - y_in a_in_j = 0 for basic x, y
        let (ye, yi) = (out.duals[0], out.duals[1]);
        assert!((3.0 - ye * 1.0 - yi * -1.0).abs() < 1e-8);
        assert!((2.0 - ye * -1.0 - yi * -1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_repeat() {
        let mut p = LpProblem::new(3);
        p.objective = vec![1.0, -2.0, 0.5];
        p.lower = vec![0.0, 0.0, -1.0];
        p.upper = vec![10.0, 4.0, 1.0];
        p.ineq.push(SparseRow::new(vec![(0, 1.0), (1, 2.0), (2, -1.0)], 7.0));
        p.eq.push(SparseRow::new(vec![(0, 1.0), (2, 1.0)], 2.0));
        let a = solve_lp(&p, &opts()).unwrap();
        let b = solve_lp(&p, &opts()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.stats.iterations, b.stats.iterations);
    }
}
