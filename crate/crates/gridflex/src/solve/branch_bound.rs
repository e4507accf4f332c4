//! Best-first branch-and-bound over binary variables with LP relaxations
//! from the reference simplex.

use super::{simplex, LpProblem, MipProblem, SolveOpts, SolveOutcome, SolveStats, SolveStatus};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

struct Node {
    bound: f64,
    id: u64,
    /// (binary index, fixed to one?)
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; invert so the smallest bound pops first,
    // ties broken by node id for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Workspace {
    lp: LpProblem,
    base_lower: Vec<f64>,
    base_upper: Vec<f64>,
}

impl Workspace {
    fn solve_with(&mut self, fixings: &[(usize, bool)], opts: &SolveOpts) -> SolveOutcome {
        for &(j, one) in fixings {
            let v = if one { 1.0 } else { 0.0 };
            self.lp.lower[j] = v;
            self.lp.upper[j] = v;
        }
        let out = simplex::solve(&self.lp, opts);
        for &(j, _) in fixings {
            self.lp.lower[j] = self.base_lower[j];
            self.lp.upper[j] = self.base_upper[j];
        }
        out
    }
}

pub(super) fn solve(p: &MipProblem, opts: &SolveOpts) -> SolveOutcome {
    let start = Instant::now();
    let scale = super::problem_scale(&p.lp);
    let mut ws = Workspace {
        lp: p.lp.clone(),
        base_lower: p.lp.lower.clone(),
        base_upper: p.lp.upper.clone(),
    };

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(x0) = &opts.initial_solution {
        if x0.len() == p.lp.n_vars {
            let mut x = x0.clone();
            let mut ok = p.lp.max_violation(&x) <= opts.feas_tol * scale;
            for &j in &p.binaries {
                if (x[j] - x[j].round()).abs() > opts.int_tol {
                    ok = false;
                    break;
                }
                x[j] = x[j].round();
            }
            if ok {
                let v = p.lp.objective_value(&x);
                incumbent = Some((v, x));
            }
        }
    }

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    let mut nodes = 0usize;
    let mut iters = 0usize;
    let mut hit_limit = false;
    let mut best_bound = f64::NEG_INFINITY;

    heap.push(Node { bound: f64::NEG_INFINITY, id: next_id, fixings: Vec::new() });
    next_id += 1;

    while let Some(node) = heap.pop() {
        // global bound is the smallest bound among open nodes
        best_bound = best_bound.max(node.bound.max(f64::NEG_INFINITY));
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - opts.gap_abs {
                // best-first: every remaining node is at least this bound
                best_bound = best_bound.max(*inc);
                break;
            }
        }
        if nodes >= opts.max_nodes {
            hit_limit = true;
            break;
        }
        if let Some(tl) = opts.time_limit {
            if start.elapsed() >= tl {
                hit_limit = true;
                break;
            }
        }
        nodes += 1;

        let out = ws.solve_with(&node.fixings, opts);
        iters += out.stats.iterations;
        match out.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                return SolveOutcome {
                    status: SolveStatus::Unbounded,
                    x: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    duals: Vec::new(),
                    stats: SolveStats {
                        iterations: iters,
                        nodes,
                        wall: start.elapsed(),
                        lower_bound: f64::NEG_INFINITY,
                        message: Some("LP relaxation unbounded".into()),
                    },
                };
            }
            SolveStatus::Limit => {
                hit_limit = true;
                continue;
            }
            SolveStatus::Optimal => {}
        }
        let obj = out.objective;
        if let Some((inc, _)) = &incumbent {
            if obj >= inc - opts.gap_abs {
                continue;
            }
        }

        // most fractional binary
        let mut branch: Option<(usize, f64)> = None;
        for &j in &p.binaries {
            let v = out.x[j];
            let frac = (v - v.round()).abs();
            if frac > opts.int_tol {
                let dist = 0.5 - (v - v.floor() - 0.5).abs();
                match branch {
                    Some((_, best)) if best >= dist => {}
                    _ => branch = Some((j, dist)),
                }
            }
        }
        match branch {
            None => {
                // integral: candidate incumbent, accepted only if it
                // independently satisfies the constraint system
                let mut x = out.x.clone();
                for &j in &p.binaries {
                    x[j] = x[j].round();
                }
                if p.lp.max_violation(&x) <= opts.feas_tol * scale {
                    let v = p.lp.objective_value(&x);
                    let better = incumbent.as_ref().map_or(true, |(inc, _)| v < inc - 1e-12);
                    if better {
                        incumbent = Some((v, x));
                    }
                }
            }
            Some((j, _)) => {
                // periodic rounding heuristic for an early incumbent
                if nodes == 1 || nodes % 64 == 0 {
                    let fixings: Vec<(usize, bool)> =
                        p.binaries.iter().map(|&k| (k, out.x[k] >= 0.5)).collect();
                    let h = ws.solve_with(&fixings, opts);
                    iters += h.stats.iterations;
                    if h.status == SolveStatus::Optimal {
                        let mut x = h.x.clone();
                        for &k in &p.binaries {
                            x[k] = if out.x[k] >= 0.5 { 1.0 } else { 0.0 };
                        }
                        if p.lp.max_violation(&x) <= opts.feas_tol * scale {
                            let v = p.lp.objective_value(&x);
                            let better = incumbent.as_ref().map_or(true, |(inc, _)| v < inc - 1e-12);
                            if better {
                                incumbent = Some((v, x));
                            }
                        }
                    }
                }
                for one in [false, true] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, one));
                    heap.push(Node { bound: obj, id: next_id, fixings });
                    next_id += 1;
                }
            }
        }
    }

    let wall = start.elapsed();
    match incumbent {
        Some((v, x)) => {
            let status = if hit_limit && heap.peek().map_or(false, |n| n.bound < v - opts.gap_abs) {
                SolveStatus::Limit
            } else if hit_limit {
                // limits were hit but every open node is dominated
                SolveStatus::Optimal
            } else {
                SolveStatus::Optimal
            };
            let lower_bound = if heap.is_empty() { v } else { best_bound.min(v) };
            SolveOutcome {
                status,
                x,
                objective: v,
                duals: Vec::new(),
                stats: SolveStats { iterations: iters, nodes, wall, lower_bound, message: None },
            }
        }
        None => {
            if hit_limit {
                SolveOutcome {
                    status: SolveStatus::Limit,
                    x: Vec::new(),
                    objective: f64::NAN,
                    duals: Vec::new(),
                    stats: SolveStats {
                        iterations: iters,
                        nodes,
                        wall,
                        lower_bound: best_bound,
                        message: Some("limit reached without incumbent".into()),
                    },
                }
            } else {
                SolveOutcome {
                    status: SolveStatus::Infeasible,
                    x: Vec::new(),
                    objective: f64::NAN,
                    duals: Vec::new(),
                    stats: SolveStats { iterations: iters, nodes, wall, lower_bound: best_bound, message: None },
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve_mip, LpProblem, MipProblem, SolveOpts, SolveStatus, SparseRow};

    #[test]
    fn knapsack_three_items() {
        // max 10a + 6b + 4c s.t. 5a + 4b + 3c <= 8  ->  min -(...)
        let mut lp = LpProblem::new(3);
        lp.objective = vec![-10.0, -6.0, -4.0];
        lp.lower = vec![0.0; 3];
        lp.upper = vec![1.0; 3];
        lp.ineq.push(SparseRow::new(vec![(0, 5.0), (1, 4.0), (2, 3.0)], 8.0));
        let p = MipProblem { lp, binaries: vec![0, 1, 2] };
        let out = solve_mip(&p, &SolveOpts::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        // optimum: a + c = 14 (5+3 <= 8); a+b = 16 needs 9 > 8
        assert!((out.objective - (-14.0)).abs() < 1e-9, "obj {}", out.objective);
        assert_eq!(out.x[0], 1.0);
        assert_eq!(out.x[1], 0.0);
        assert_eq!(out.x[2], 1.0);
    }

    #[test]
    fn mixed_integer_with_continuous() {
        // min x + y, y binary, x >= 1.5 - y, x >= 0
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.lower = vec![0.0, 0.0];
        lp.upper = vec![super::super::INF, 1.0];
        lp.ineq.push(SparseRow::new(vec![(0, -1.0), (1, -1.0)], -1.5));
        let p = MipProblem { lp, binaries: vec![1] };
        let out = solve_mip(&p, &SolveOpts::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        // y=0 -> x=1.5 cost 1.5; y=1 -> x=0.5 cost 1.5; both optimal
        assert!((out.objective - 1.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_mip() {
        let mut lp = LpProblem::new(2);
        lp.lower = vec![0.0, 0.0];
        lp.upper = vec![1.0, 1.0];
        lp.eq.push(SparseRow::new(vec![(0, 1.0), (1, 1.0)], 3.0));
        let p = MipProblem { lp, binaries: vec![0, 1] };
        let out = solve_mip(&p, &SolveOpts::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn warm_start_incumbent_is_used() {
        let mut lp = LpProblem::new(3);
        lp.objective = vec![-10.0, -6.0, -4.0];
        lp.lower = vec![0.0; 3];
        lp.upper = vec![1.0; 3];
        lp.ineq.push(SparseRow::new(vec![(0, 5.0), (1, 4.0), (2, 3.0)], 8.0));
        let p = MipProblem { lp, binaries: vec![0, 1, 2] };
        let opts = SolveOpts { initial_solution: Some(vec![1.0, 0.0, 1.0]), ..Default::default() };
        let out = solve_mip(&p, &opts).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - (-14.0)).abs() < 1e-9);
    }
}
