//! Market-clearing constraint systems in canonical linear form
//! `A x + B xi = b`, `C x + D xi <= d`, plus the nominal clearing solve.
//!
//! Variable stacking order is fixed: p (generator-major, time-minor),
//! f, theta, delta. Row order: balances, flow definitions, reference
//! pins; then ramps, p bounds, f bounds, virtual-link rows, economic
//! row. All quantities are per-unit internally; demands enter in MW and
//! are converted here, nowhere else.

mod clearing;

pub use clearing::{solve_clearing, ClearingOutcome, ClearingSolution};

use crate::gridmodel::GridCase;
use crate::solve::{LpProblem, SparseRow, INF};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unknown space-time node (bus {bus}, t {t})")]
    UnknownNode { bus: usize, t: usize },
}

/// A directed space-time shift pathway with capacity and cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualLink {
    pub id: usize,
    /// Sending space-time node (bus id, time index).
    pub from: (usize, usize),
    /// Receiving space-time node (bus id, time index).
    pub to: (usize, usize),
    /// Shift capacity, MW.
    pub capacity: f64,
    /// Shift cost, $/MWh.
    pub cost: f64,
}

impl VirtualLink {
    pub fn validate(&self) -> Result<(), MarketError> {
        if self.from == self.to {
            return Err(MarketError::Argument(format!(
                "virtual link {}: sending and receiving nodes coincide",
                self.id
            )));
        }
        if self.capacity < 0.0 || !self.capacity.is_finite() {
            return Err(MarketError::Argument(format!("virtual link {}: capacity must be >= 0", self.id)));
        }
        Ok(())
    }

    pub fn is_spatial(&self) -> bool {
        self.from.1 == self.to.1
    }

    pub fn is_temporal(&self) -> bool {
        self.from.0 == self.to.0
    }
}

/// Sign convention for the shift variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VlMode {
    /// Data-center semantics: 0 <= delta <= cap plus realized-load rows.
    Nonnegative,
    /// Battery-style: -cap <= delta <= cap, no realized-load rows.
    Signed,
}

/// Economic bound flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EconKind {
    Total,
    PerUnit,
}

/// One linear row over decision variables (`x`) and uncertain demand
/// parameters (`xi`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinRow {
    pub x: Vec<(usize, f64)>,
    pub xi: Vec<(usize, f64)>,
    pub rhs: f64,
    pub label: String,
}

impl LinRow {
    fn new(label: String, x: Vec<(usize, f64)>, xi: Vec<(usize, f64)>, rhs: f64) -> Self {
        LinRow { x, xi, rhs, label }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let vx: f64 = self.x.iter().map(|&(j, a)| a * x[j]).sum();
        let vxi: f64 = self.xi.iter().map(|&(k, a)| a * xi[k]).sum();
        vx + vxi
    }
}

/// Canonical linear constraint system `A x + B xi = b`, `C x + D xi <= d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub n_x: usize,
    pub n_xi: usize,
    pub eq: Vec<LinRow>,
    pub ineq: Vec<LinRow>,
    /// Cost row over x, in $ per unit of the per-unit variable.
    pub objective: Vec<f64>,
    pub var_labels: Vec<String>,
    pub xi_labels: Vec<String>,
    /// Nominal uncertain demands, per-unit.
    pub xi_nominal: Vec<f64>,
    pub base_mva: f64,
    pub horizon: usize,
    /// (bus id, t) -> balance equality row index.
    balance_row: BTreeMap<(usize, usize), usize>,
    /// (bus id, t) -> xi component index.
    xi_index: BTreeMap<(usize, usize), usize>,
    /// (bus id, t) -> nominal demand in MW (all nodes, uncertain or not).
    demand_mw: BTreeMap<(usize, usize), f64>,
    /// Number of virtual-link variables appended so far.
    pub n_delta: usize,
    /// delta column index and cost per appended link, by link id.
    vl_columns: Vec<(usize, usize)>,
}

impl ConstraintSystem {
    pub fn xi_index_of(&self, bus: usize, t: usize) -> Option<usize> {
        self.xi_index.get(&(bus, t)).copied()
    }

    pub fn nominal_demand_mw(&self, bus: usize, t: usize) -> Option<f64> {
        self.demand_mw.get(&(bus, t)).copied()
    }

    /// All (bus id, t) nodes with their nominal demand in MW, sorted.
    pub fn demand_entries(&self) -> Vec<((usize, usize), f64)> {
        self.demand_mw.iter().map(|(&k, &v)| (k, v)).collect()
    }

    /// Nominal xi in MW, in xi component order.
    pub fn xi_nominal_mw(&self) -> Vec<f64> {
        self.xi_nominal.iter().map(|v| v * self.base_mva).collect()
    }

    pub fn total_nominal_demand_mw(&self) -> f64 {
        self.demand_mw.values().sum()
    }

    /// Builds the fixed-realization LP `min c.x  s.t.  A x = b - B xi,
    /// C x <= d - D xi`. `xi` is per-unit.
    pub fn to_lp(&self, xi: &[f64]) -> LpProblem {
        assert_eq!(xi.len(), self.n_xi, "xi length mismatch");
        let mut lp = LpProblem::new(self.n_x);
        lp.objective = self.objective.clone();
        lp.names = Some(self.var_labels.clone());
        for row in &self.eq {
            let shift: f64 = row.xi.iter().map(|&(k, a)| a * xi[k]).sum();
            lp.eq.push(SparseRow::new(row.x.clone(), row.rhs - shift));
        }
        for row in &self.ineq {
            let shift: f64 = row.xi.iter().map(|&(k, a)| a * xi[k]).sum();
            lp.ineq.push(SparseRow::new(row.x.clone(), row.rhs - shift));
        }
        lp
    }

    /// LP-format debug dump of the system at nominal demand.
    pub fn lp_debug_dump(&self) -> String {
        crate::solve::write_lp_format(&self.to_lp(&self.xi_nominal), &[])
    }

    /// Implied interval of each decision variable, derived from the
    /// single-variable inequality rows. Used for big-M initialization.
    pub fn implied_var_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![-INF; self.n_x];
        let mut hi = vec![INF; self.n_x];
        for row in &self.ineq {
            if row.x.len() == 1 && row.xi.is_empty() {
                let (j, a) = row.x[0];
                if a > 0.0 {
                    hi[j] = hi[j].min(row.rhs / a);
                } else if a < 0.0 {
                    lo[j] = lo[j].max(row.rhs / a);
                }
            }
        }
        (lo, hi)
    }

    pub fn delta_column(&self, link_id: usize) -> Option<usize> {
        self.vl_columns.iter().find(|&&(id, _)| id == link_id).map(|&(_, c)| c)
    }
}

/// Which bus-time nodes are uncertain.
#[derive(Debug, Clone, Default)]
pub enum UncertainSelection {
    /// Every bus-time with positive nominal demand (the default).
    #[default]
    PositiveDemand,
    /// An explicit list of (bus id, time) nodes.
    Subset(Vec<(usize, usize)>),
}

pub fn build_base(case: &GridCase) -> Result<ConstraintSystem, MarketError> {
    build_base_with(case, &UncertainSelection::PositiveDemand)
}

/// Builds the base clearing system (balances, DC flow, ramping, bounds,
/// reference pins) with the chosen uncertain-demand selection.
pub fn build_base_with(case: &GridCase, unc: &UncertainSelection) -> Result<ConstraintSystem, MarketError> {
    case.validate().map_err(|e| MarketError::Argument(e.to_string()))?;
    let t_count = case.horizon;
    let base = case.base_mva;
    let n_gen = case.generators.len();
    let n_line = case.lines.len();
    let n_bus = case.buses.len();

    // variable layout: p[g][t], f[l][t], theta[b][t]
    let p_col = |g: usize, t: usize| g * t_count + t;
    let f_col = |l: usize, t: usize| n_gen * t_count + l * t_count + t;
    let th_col = |b: usize, t: usize| (n_gen + n_line) * t_count + b * t_count + t;
    let n_x = (n_gen + n_line + n_bus) * t_count;

    let mut var_labels = Vec::with_capacity(n_x);
    for g in &case.generators {
        for t in 0..t_count {
            var_labels.push(format!("p[g{},t{}]", g.id, t));
        }
    }
    for l in &case.lines {
        for t in 0..t_count {
            var_labels.push(format!("f[l{},t{}]", l.id, t));
        }
    }
    for b in &case.buses {
        for t in 0..t_count {
            var_labels.push(format!("theta[b{},t{}]", b.id, t));
        }
    }

    // uncertain parameter layout
    let mut xi_index = BTreeMap::new();
    let mut xi_labels = Vec::new();
    let mut xi_nominal = Vec::new();
    let mut demand_mw = BTreeMap::new();
    for (bi, b) in case.buses.iter().enumerate() {
        for t in 0..t_count {
            demand_mw.insert((b.id, t), b.demand[t]);
            let uncertain = match unc {
                UncertainSelection::PositiveDemand => b.demand[t] > 0.0,
                UncertainSelection::Subset(list) => list.contains(&(b.id, t)),
            };
            if uncertain {
                xi_index.insert((b.id, t), xi_labels.len());
                xi_labels.push(format!("D[b{},t{}]", b.id, t));
                xi_nominal.push(b.demand[t] / base);
            }
        }
        let _ = bi;
    }
    let n_xi = xi_labels.len();

    let mut eq = Vec::new();
    let mut balance_row = BTreeMap::new();

    // balances: one per (bus, t), bus-major
    for (bi, b) in case.buses.iter().enumerate() {
        for t in 0..t_count {
            let mut x_terms = Vec::new();
            for (gi, g) in case.generators.iter().enumerate() {
                if g.bus == b.id {
                    x_terms.push((p_col(gi, t), 1.0));
                }
            }
            for (li, l) in case.lines.iter().enumerate() {
                if l.to_bus == b.id {
                    x_terms.push((f_col(li, t), 1.0));
                }
                if l.from_bus == b.id {
                    x_terms.push((f_col(li, t), -1.0));
                }
            }
            let (xi_terms, rhs) = match xi_index.get(&(b.id, t)) {
                Some(&k) => (vec![(k, -1.0)], 0.0),
                None => (Vec::new(), b.demand[t] / base),
            };
            balance_row.insert((b.id, t), eq.len());
            eq.push(LinRow::new(format!("balance[b{},t{}]", b.id, t), x_terms, xi_terms, rhs));
            let _ = bi;
        }
    }

    // DC flow definitions: f - B(theta_snd - theta_rec) = 0
    for (li, l) in case.lines.iter().enumerate() {
        let snd = case.bus_index(l.from_bus).expect("validated");
        let rec = case.bus_index(l.to_bus).expect("validated");
        for t in 0..t_count {
            eq.push(LinRow::new(
                format!("flow[l{},t{}]", l.id, t),
                vec![
                    (f_col(li, t), 1.0),
                    (th_col(snd, t), -l.susceptance),
                    (th_col(rec, t), l.susceptance),
                ],
                Vec::new(),
                0.0,
            ));
        }
    }

    // reference-angle pin per period
    let ref_idx = case.buses.iter().position(|b| b.is_reference).expect("validated");
    for t in 0..t_count {
        eq.push(LinRow::new(
            format!("refpin[t{t}]"),
            vec![(th_col(ref_idx, t), 1.0)],
            Vec::new(),
            0.0,
        ));
    }

    let mut ineq = Vec::new();
    // ramping (only for T >= 2)
    for (gi, g) in case.generators.iter().enumerate() {
        for t in 1..t_count {
            let d = g.ramp / base;
            ineq.push(LinRow::new(
                format!("ramp_up[g{},t{}]", g.id, t),
                vec![(p_col(gi, t), 1.0), (p_col(gi, t - 1), -1.0)],
                Vec::new(),
                d,
            ));
            ineq.push(LinRow::new(
                format!("ramp_dn[g{},t{}]", g.id, t),
                vec![(p_col(gi, t), -1.0), (p_col(gi, t - 1), 1.0)],
                Vec::new(),
                d,
            ));
        }
    }
    // generator bounds
    for (gi, g) in case.generators.iter().enumerate() {
        for t in 0..t_count {
            ineq.push(LinRow::new(
                format!("p_max[g{},t{}]", g.id, t),
                vec![(p_col(gi, t), 1.0)],
                Vec::new(),
                g.p_max[t] / base,
            ));
            ineq.push(LinRow::new(
                format!("p_min[g{},t{}]", g.id, t),
                vec![(p_col(gi, t), -1.0)],
                Vec::new(),
                0.0,
            ));
        }
    }
    // flow bounds
    for (li, l) in case.lines.iter().enumerate() {
        for t in 0..t_count {
            ineq.push(LinRow::new(
                format!("f_max[l{},t{}]", l.id, t),
                vec![(f_col(li, t), 1.0)],
                Vec::new(),
                l.f_max / base,
            ));
            ineq.push(LinRow::new(
                format!("f_min[l{},t{}]", l.id, t),
                vec![(f_col(li, t), -1.0)],
                Vec::new(),
                l.f_max / base,
            ));
        }
    }

    let mut objective = vec![0.0; n_x];
    for (gi, g) in case.generators.iter().enumerate() {
        for t in 0..t_count {
            // $/MWh * base_mva converts per-unit dispatch to $.
            objective[p_col(gi, t)] = g.cost[t] * base;
        }
    }

    Ok(ConstraintSystem {
        n_x,
        n_xi,
        eq,
        ineq,
        objective,
        var_labels,
        xi_labels,
        xi_nominal,
        base_mva: base,
        horizon: t_count,
        balance_row,
        xi_index,
        demand_mw,
        n_delta: 0,
        vl_columns: Vec::new(),
    })
}

/// Appends one shift variable per link, wires it into the balances, and
/// adds the link operation rows.
pub fn add_virtual_links(
    sys: &ConstraintSystem,
    vls: &[VirtualLink],
    mode: VlMode,
) -> Result<ConstraintSystem, MarketError> {
    let mut out = sys.clone();
    if vls.is_empty() {
        return Ok(out);
    }
    let base = sys.base_mva;
    for vl in vls {
        vl.validate()?;
        for &(bus, t) in [&vl.from, &vl.to] {
            if !sys.demand_mw.contains_key(&(bus, t)) {
                return Err(MarketError::UnknownNode { bus, t });
            }
        }
    }
    let first_col = out.n_x;
    for (k, vl) in vls.iter().enumerate() {
        let col = first_col + k;
        out.var_labels.push(format!(
            "delta[v{}:b{}t{}->b{}t{}]",
            vl.id, vl.from.0, vl.from.1, vl.to.0, vl.to.1
        ));
        out.objective.push(vl.cost * base);
        // balance at the sending node gains +delta, receiving -delta
        let snd_row = out.balance_row[&vl.from];
        out.eq[snd_row].x.push((col, 1.0));
        let rec_row = out.balance_row[&vl.to];
        out.eq[rec_row].x.push((col, -1.0));
        out.vl_columns.push((vl.id, col));
    }
    out.n_x += vls.len();
    out.n_delta += vls.len();

    // capacity rows, then realized-load rows
    for (k, vl) in vls.iter().enumerate() {
        let col = first_col + k;
        let cap = vl.capacity / base;
        out.ineq.push(LinRow::new(
            format!("vl_cap_up[v{}]", vl.id),
            vec![(col, 1.0)],
            Vec::new(),
            cap,
        ));
        let lo_rhs = match mode {
            VlMode::Nonnegative => 0.0,
            VlMode::Signed => cap,
        };
        out.ineq.push(LinRow::new(
            format!("vl_cap_lo[v{}]", vl.id),
            vec![(col, -1.0)],
            Vec::new(),
            lo_rhs,
        ));
    }
    if mode == VlMode::Nonnegative {
        // realized load must stay nonnegative at every touched node:
        // sum(snd delta) - sum(rec delta) - D <= 0
        let mut touched: Vec<(usize, usize)> = Vec::new();
        for vl in vls {
            for node in [vl.from, vl.to] {
                if !touched.contains(&node) {
                    touched.push(node);
                }
            }
        }
        touched.sort_unstable();
        for node in touched {
            let mut x_terms = Vec::new();
            for (k, vl) in vls.iter().enumerate() {
                let col = first_col + k;
                if vl.from == node {
                    x_terms.push((col, 1.0));
                }
                if vl.to == node {
                    x_terms.push((col, -1.0));
                }
            }
            let (xi_terms, rhs) = match sys.xi_index.get(&node) {
                Some(&kk) => (vec![(kk, -1.0)], 0.0),
                None => (Vec::new(), sys.demand_mw[&node] / base),
            };
            out.ineq.push(LinRow::new(
                format!("load_nonneg[b{},t{}]", node.0, node.1),
                x_terms,
                xi_terms,
                rhs,
            ));
        }
    }
    Ok(out)
}

/// Virtual-link configuration file: a mode plus links whose capacity is
/// given either in MW or as a fraction of the sender's nominal demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VlConfig {
    pub mode: VlMode,
    pub links: Vec<VlConfigLink>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VlConfigLink {
    /// (bus id, time index)
    pub from: (usize, usize),
    pub to: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_frac: Option<f64>,
    #[serde(default)]
    pub cost: f64,
}

impl VlConfig {
    pub fn from_json(text: &str) -> Result<Self, MarketError> {
        serde_json::from_str(text).map_err(|e| MarketError::Argument(format!("virtual-link config: {e}")))
    }

    /// Resolves fractions against the system's nominal demands.
    pub fn resolve(&self, sys: &ConstraintSystem) -> Result<Vec<VirtualLink>, MarketError> {
        let mut out = Vec::with_capacity(self.links.len());
        for (i, l) in self.links.iter().enumerate() {
            let capacity = match (l.capacity_mw, l.capacity_frac) {
                (Some(mw), None) => mw,
                (None, Some(frac)) => {
                    let d = sys
                        .nominal_demand_mw(l.from.0, l.from.1)
                        .ok_or(MarketError::UnknownNode { bus: l.from.0, t: l.from.1 })?;
                    frac * d
                }
                _ => {
                    return Err(MarketError::Argument(format!(
                        "link {}: give exactly one of capacity_mw / capacity_frac",
                        i + 1
                    )))
                }
            };
            out.push(VirtualLink { id: i + 1, from: l.from, to: l.to, capacity, cost: l.cost });
        }
        Ok(out)
    }
}

/// Appends a total or per-unit cost bound row, normalized by `psi0` so
/// the row's coefficients stay O(1).
pub fn add_economic_bound(
    sys: &ConstraintSystem,
    kind: EconKind,
    eps: f64,
    psi0: f64,
    total_nominal_demand_mw: f64,
) -> Result<ConstraintSystem, MarketError> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(MarketError::Argument(format!("eps must be >= 0, got {eps}")));
    }
    if !(total_nominal_demand_mw > 0.0) {
        return Err(MarketError::Argument("total nominal demand must be > 0".into()));
    }
    if !(psi0 > 0.0) {
        return Err(MarketError::Argument(format!("psi0 must be > 0, got {psi0}")));
    }
    let mut out = sys.clone();
    let x_terms: Vec<(usize, f64)> = sys
        .objective
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (j, c / psi0))
        .collect();
    match kind {
        EconKind::Total => {
            out.ineq.push(LinRow::new("econ_total".into(), x_terms, Vec::new(), 1.0 + eps));
        }
        EconKind::PerUnit => {
            // served load d equals D (loads cannot be curtailed), so the
            // demand coefficients land in the xi block
            let rate = (1.0 + eps) * psi0 / total_nominal_demand_mw;
            let mut xi_terms = Vec::new();
            let mut rhs = 0.0;
            for (&node, &d_mw) in &sys.demand_mw {
                match sys.xi_index.get(&node) {
                    // xi is per-unit: d_mw = xi * base_mva
                    Some(&k) => xi_terms.push((k, -rate * sys.base_mva / psi0)),
                    None => rhs += rate * d_mw / psi0,
                }
            }
            out.ineq.push(LinRow::new("econ_perunit".into(), x_terms, xi_terms, rhs));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
