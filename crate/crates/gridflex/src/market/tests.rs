use super::*;
use crate::gridmodel::fixtures::{one_bus_case, three_bus_case, two_bus_case};
use crate::solve::{SolveOpts, SolverBackend};

fn clear(sys: &ConstraintSystem) -> ClearingSolution {
    let xi = sys.xi_nominal_mw();
    match solve_clearing(sys, &xi, &SolverBackend::Reference, &SolveOpts::default()).unwrap() {
        ClearingOutcome::Optimal(s) => s,
        ClearingOutcome::Infeasible { message } => panic!("unexpected infeasibility: {message}"),
    }
}

#[test]
fn base_system_dimensions() {
    let case = three_bus_case();
    let sys = build_base(&case).unwrap();
    // 1 gen + 2 lines + 3 buses, T = 1
    assert_eq!(sys.n_x, 6);
    // two buses carry load
    assert_eq!(sys.n_xi, 2);
    // 3 balances + 2 flow defs + 1 pin
    assert_eq!(sys.eq.len(), 6);
    // no ramps at T = 1; 2 p bounds + 4 f bounds
    assert_eq!(sys.ineq.len(), 6);
    assert_eq!(sys.var_labels.len(), sys.n_x);
    assert_eq!(sys.xi_labels, vec!["D[b2,t0]", "D[b3,t0]"]);
}

#[test]
fn multi_period_adds_ramp_rows() {
    let mut case = three_bus_case();
    case.horizon = 2;
    for b in &mut case.buses {
        b.demand = vec![b.demand[0]; 2];
    }
    for g in &mut case.generators {
        g.p_max = vec![g.p_max[0]; 2];
        g.cost = vec![g.cost[0]; 2];
    }
    let sys = build_base(&case).unwrap();
    let ramp_rows = sys.ineq.iter().filter(|r| r.label.starts_with("ramp")).count();
    // one up + one down per generator for t = 1 only
    assert_eq!(ramp_rows, 2);
}

#[test]
fn one_bus_clearing() {
    let sys = build_base(&one_bus_case()).unwrap();
    let sol = clear(&sys);
    assert!((sol.values[0].1 - 50.0).abs() < 1e-6, "dispatch {:?}", sol.values);
    assert!((sol.total_cost - 500.0).abs() < 1e-6, "cost {}", sol.total_cost);
    assert!((sol.prices[0].1 - 10.0).abs() < 1e-6, "price {:?}", sol.prices);
}

#[test]
fn congestion_raises_cost() {
    let cheap_everywhere = build_base(&two_bus_case(150.0)).unwrap();
    let congested = build_base(&two_bus_case(60.0)).unwrap();
    let free = clear(&cheap_everywhere);
    let tight = clear(&congested);
    // uncongested: all 100 MW from the cheap unit
    assert!((free.total_cost - 1000.0).abs() < 1e-6, "cost {}", free.total_cost);
    // congested: 60 MW cheap + 40 MW at $40
    assert!((tight.total_cost - (600.0 + 1600.0)).abs() < 1e-6, "cost {}", tight.total_cost);
    assert!(tight.binding.iter().any(|l| l == "f_max[l1,t0]"), "binding {:?}", tight.binding);
    // congestion splits nodal prices
    let p2 = tight.prices.iter().find(|(l, _)| l.contains("b2")).unwrap().1;
    assert!((p2 - 40.0).abs() < 1e-6, "price at load bus {p2}");
}

#[test]
fn relaxing_capacity_never_raises_cost() {
    let mut prev = f64::INFINITY;
    for cap in [50.0, 70.0, 90.0, 110.0] {
        let sys = build_base(&two_bus_case(cap)).unwrap();
        let cost = clear(&sys).total_cost;
        assert!(cost <= prev + 1e-9, "cost rose from {prev} to {cost} at cap {cap}");
        prev = cost;
    }
}

#[test]
fn balance_holds_in_solution() {
    let case = three_bus_case();
    let sys = build_base(&case).unwrap();
    let sol = clear(&sys);
    let gen: f64 = sol
        .values
        .iter()
        .filter(|(l, _)| l.starts_with("p["))
        .map(|&(_, v)| v)
        .sum();
    assert!((gen - case.total_demand()).abs() < 1e-6, "generation {gen}");
    for row in &sys.eq {
        let resid = row.eval(&sol.x, &sys.xi_nominal) - row.rhs;
        assert!(resid.abs() < 1e-7, "{} residual {resid}", row.label);
    }
}

#[test]
fn virtual_link_rows_and_columns() {
    let sys = build_base(&three_bus_case()).unwrap();
    let vls = vec![
        VirtualLink { id: 1, from: (2, 0), to: (3, 0), capacity: 15.0, cost: 0.0 },
        VirtualLink { id: 2, from: (3, 0), to: (2, 0), capacity: 15.0, cost: 0.0 },
    ];
    let with = add_virtual_links(&sys, &vls, VlMode::Nonnegative).unwrap();
    assert_eq!(with.n_x, sys.n_x + 2);
    assert_eq!(with.n_delta, 2);
    // 4 capacity rows + 2 realized-load rows
    assert_eq!(with.ineq.len(), sys.ineq.len() + 6);
    assert!(with.ineq.iter().any(|r| r.label == "load_nonneg[b2,t0]"));
    let signed = add_virtual_links(&sys, &vls, VlMode::Signed).unwrap();
    assert_eq!(signed.ineq.len(), sys.ineq.len() + 4);

    // nominal clearing is unaffected by idle links
    let base_cost = clear(&sys).total_cost;
    let vl_cost = clear(&with).total_cost;
    assert!((base_cost - vl_cost).abs() < 1e-6);
}

#[test]
fn virtual_link_validation() {
    let sys = build_base(&three_bus_case()).unwrap();
    let self_loop = vec![VirtualLink { id: 1, from: (2, 0), to: (2, 0), capacity: 5.0, cost: 0.0 }];
    assert!(add_virtual_links(&sys, &self_loop, VlMode::Signed).is_err());
    let dangling = vec![VirtualLink { id: 1, from: (2, 0), to: (9, 0), capacity: 5.0, cost: 0.0 }];
    assert!(matches!(
        add_virtual_links(&sys, &dangling, VlMode::Signed),
        Err(MarketError::UnknownNode { bus: 9, t: 0 })
    ));
}

#[test]
fn economic_bound_rows() {
    let sys = build_base(&one_bus_case()).unwrap();
    let psi0 = clear(&sys).total_cost;
    let total = add_economic_bound(&sys, EconKind::Total, 0.1, psi0, sys.total_nominal_demand_mw()).unwrap();
    let row = total.ineq.last().unwrap();
    assert_eq!(row.label, "econ_total");
    // at the nominal optimum the normalized row evaluates to 1
    let sol = clear(&sys);
    let lhs = row.eval(&sol.x, &sys.xi_nominal);
    assert!((lhs - 1.0).abs() < 1e-9, "normalized cost {lhs}");
    assert!((row.rhs - 1.1).abs() < 1e-12);

    // per-unit row at nominal demand binds identically for eps = 0
    let per = add_economic_bound(&sys, EconKind::PerUnit, 0.0, psi0, sys.total_nominal_demand_mw()).unwrap();
    let prow = per.ineq.last().unwrap();
    assert_eq!(prow.label, "econ_perunit");
    let slack = prow.rhs - prow.eval(&sol.x, &sys.xi_nominal);
    assert!(slack.abs() < 1e-9, "per-unit slack {slack}");
}

#[test]
fn economic_bound_rejects_bad_args() {
    let sys = build_base(&one_bus_case()).unwrap();
    assert!(add_economic_bound(&sys, EconKind::Total, -0.1, 500.0, 50.0).is_err());
    assert!(add_economic_bound(&sys, EconKind::Total, 0.1, 0.0, 50.0).is_err());
}

#[test]
fn implied_bounds_cover_bound_rows() {
    let sys = build_base(&two_bus_case(60.0)).unwrap();
    let (lo, hi) = sys.implied_var_bounds();
    // generator columns: [0, p_max]; flow columns: [-cap, cap]
    assert!((lo[0] - 0.0).abs() < 1e-12 && (hi[0] - 1.5).abs() < 1e-12);
    let fcol = sys.var_labels.iter().position(|l| l.starts_with("f[")).unwrap();
    assert!((lo[fcol] + 0.6).abs() < 1e-12 && (hi[fcol] - 0.6).abs() < 1e-12);
    // angles stay free
    let tcol = sys.var_labels.iter().position(|l| l.starts_with("theta")).unwrap();
    assert!(lo[tcol].is_infinite() && hi[tcol].is_infinite());
}

#[test]
fn infeasible_realization_reported() {
    let sys = build_base(&one_bus_case()).unwrap();
    // demand beyond the only generator's capacity
    let out = solve_clearing(&sys, &[150.0], &SolverBackend::Reference, &SolveOpts::default()).unwrap();
    assert!(matches!(out, ClearingOutcome::Infeasible { .. }));
}

#[test]
fn vl_config_resolves_fractions() {
    let sys = build_base(&three_bus_case()).unwrap();
    let cfg = VlConfig::from_json(
        r#"{
            "mode": "nonnegative",
            "links": [
                {"from": [2, 0], "to": [3, 0], "capacity_frac": 0.3},
                {"from": [3, 0], "to": [2, 0], "capacity_mw": 12.5, "cost": 1.0}
            ]
        }"#,
    )
    .unwrap();
    assert_eq!(cfg.mode, VlMode::Nonnegative);
    let links = cfg.resolve(&sys).unwrap();
    assert_eq!(links.len(), 2);
    assert!((links[0].capacity - 15.0).abs() < 1e-12);
    assert!((links[1].capacity - 12.5).abs() < 1e-12);
    assert_eq!(links[1].cost, 1.0);

    let bad = VlConfig::from_json(r#"{"mode": "signed", "links": [{"from": [2,0], "to": [3,0]}]}"#).unwrap();
    assert!(bad.resolve(&sys).is_err());
}

#[test]
fn lp_dump_mentions_labels() {
    let sys = build_base(&one_bus_case()).unwrap();
    let dump = sys.lp_debug_dump();
    assert!(dump.contains("Minimize"), "{dump}");
    assert!(dump.contains("p_g1_t0"), "{dump}");
}
