use super::*;
use crate::gridmodel::fixtures::{one_bus_case, ramp_case, star_case, two_bus_case};
use crate::market::{add_virtual_links, build_base, VirtualLink, VlMode};

fn backend() -> SolverBackend {
    SolverBackend::Reference
}

#[test]
fn psi_is_negative_slack_at_nominal() {
    let sys = build_base(&one_bus_case()).unwrap();
    // demand 50 of capacity 100: fifty MW of room on either side
    let v = psi(&sys, &[50.0], &backend()).unwrap();
    assert!((v + 50.0).abs() < 1e-6, "psi {v}");
    // at the capacity boundary
    let v = psi(&sys, &[100.0], &backend()).unwrap();
    assert!(v.abs() < 1e-6, "psi {v}");
    // beyond capacity
    let v = psi(&sys, &[120.0], &backend()).unwrap();
    assert!(v > 1.0, "psi {v}");
}

#[test]
fn one_bus_index_is_two() {
    let sys = build_base(&one_bus_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(vec![50.0], 0.5);
    let res = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    // 50 +- 25 alpha stays within [0, 100] exactly up to alpha = 2
    assert!((res.index.value() - 2.0).abs() < 1e-6, "index {:?}", res.index);
    assert!(res.psi_at_critical.abs() < 1e-6, "boundary residual {}", res.psi_at_critical);
    // the multiplier certificate is a proper convex combination
    let lam_sum: f64 = res.lambda.iter().sum();
    assert!((lam_sum - 1.0).abs() < 1e-7, "lambda sum {lam_sum}");
    assert!(res.lambda.iter().all(|&l| l >= -1e-9));
    assert!(!res.active_set.is_empty());
}

#[test]
fn stationarity_holds_at_optimum() {
    let sys = build_base(&two_bus_case(60.0)).unwrap();
    let set = UncertaintySet::hyperbox_fraction(vec![100.0], 0.5);
    let res = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    for j in 0..sys.n_x {
        let mut v = 0.0;
        for (row, &l) in sys.ineq.iter().zip(&res.lambda) {
            v += l * row.x.iter().filter(|&&(c, _)| c == j).map(|&(_, a)| a).sum::<f64>();
        }
        for (row, &m) in sys.eq.iter().zip(&res.mu) {
            v += m * row.x.iter().filter(|&&(c, _)| c == j).map(|&(_, a)| a).sum::<f64>();
        }
        assert!(v.abs() < 1e-6, "stationarity residual {v} at column {j}");
    }
}

#[test]
fn oracle_agrees_with_milp() {
    let cases: Vec<(crate::market::ConstraintSystem, UncertaintySet)> = vec![
        {
            let sys = build_base(&one_bus_case()).unwrap();
            let set = UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), 0.5);
            (sys, set)
        },
        {
            let sys = build_base(&two_bus_case(60.0)).unwrap();
            let set = UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), 0.3);
            (sys, set)
        },
        {
            let sys = build_base(&star_case()).unwrap();
            let set = UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), 0.5);
            (sys, set)
        },
        {
            let sys = build_base(&one_bus_case()).unwrap();
            let set = UncertaintySet::l1(vec![50.0], vec![25.0]);
            (sys, set)
        },
    ];
    for (i, (sys, set)) in cases.iter().enumerate() {
        let milp = flexibility_index(sys, set, &backend(), &FlexOpts::default()).unwrap();
        let oracle = brute_force_index(sys, set, &backend(), &OracleOpts::default()).unwrap();
        let diff = (milp.index.value() - oracle.value()).abs();
        assert!(diff < 1e-5, "case {i}: milp {:?} oracle {:?}", milp.index, oracle);
    }
}

#[test]
fn star_index_binds_on_tight_line() {
    let sys = build_base(&star_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), 0.5);
    let res = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    // 50 + 25 alpha hits the 60 MW line at alpha = 0.4
    assert!((res.index.value() - 0.4).abs() < 1e-6, "index {:?}", res.index);
    assert!(
        res.active_set.iter().any(|l| l.starts_with("f_max[l1")),
        "active set {:?}",
        res.active_set
    );
}

#[test]
fn virtual_links_raise_the_spatial_index() {
    let base = build_base(&star_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(base.xi_nominal_mw(), 0.5);
    let f0 = flexibility_index(&base, &set, &backend(), &FlexOpts::default()).unwrap();
    let vls = vec![
        VirtualLink { id: 1, from: (2, 0), to: (3, 0), capacity: 20.0, cost: 0.0 },
        VirtualLink { id: 2, from: (3, 0), to: (2, 0), capacity: 20.0, cost: 0.0 },
    ];
    let with = add_virtual_links(&base, &vls, VlMode::Nonnegative).unwrap();
    let f1 = flexibility_index(&with, &set, &backend(), &FlexOpts::default()).unwrap();
    // shifting the overflow to the other feeder moves the bind from one
    // 60 MW line to their sum
    assert!((f0.index.value() - 0.4).abs() < 1e-6);
    assert!(f1.index.value() > f0.index.value() + 0.4, "f0 {:?} f1 {:?}", f0.index, f1.index);
    let oracle = brute_force_index(&with, &set, &backend(), &OracleOpts::default()).unwrap();
    assert!((f1.index.value() - oracle.value()).abs() < 1e-5);
}

#[test]
fn temporal_links_relax_a_ramp_bind() {
    let base = build_base(&ramp_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(base.xi_nominal_mw(), 0.5);
    let f0 = flexibility_index(&base, &set, &backend(), &FlexOpts::default()).unwrap();
    let vls = vec![
        VirtualLink { id: 1, from: (1, 0), to: (1, 1), capacity: 20.0, cost: 0.0 },
        VirtualLink { id: 2, from: (1, 1), to: (1, 0), capacity: 20.0, cost: 0.0 },
    ];
    let with = add_virtual_links(&base, &vls, VlMode::Nonnegative).unwrap();
    let f1 = flexibility_index(&with, &set, &backend(), &FlexOpts::default()).unwrap();
    assert!(
        f0.active_set.iter().any(|l| l.starts_with("ramp")),
        "expected a ramp bind, got {:?}",
        f0.active_set
    );
    assert!(f1.index.value() > f0.index.value() + 1e-3, "f0 {:?} f1 {:?}", f0.index, f1.index);
    let oracle = brute_force_index(&with, &set, &backend(), &OracleOpts::default()).unwrap();
    assert!((f1.index.value() - oracle.value()).abs() < 1e-5);
}

#[test]
fn doubling_deviations_halves_the_index() {
    let sys = build_base(&two_bus_case(60.0)).unwrap();
    let s1 = UncertaintySet::hyperbox_fraction(vec![100.0], 0.25);
    let s2 = UncertaintySet::hyperbox_fraction(vec![100.0], 0.5);
    let f1 = flexibility_index(&sys, &s1, &backend(), &FlexOpts::default()).unwrap();
    let f2 = flexibility_index(&sys, &s2, &backend(), &FlexOpts::default()).unwrap();
    assert!(
        (f1.index.value() - 2.0 * f2.index.value()).abs() < 1e-6,
        "f1 {:?} f2 {:?}",
        f1.index,
        f2.index
    );
}

#[test]
fn row_scaling_does_not_move_the_index() {
    let mut sys = build_base(&star_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), 0.5);
    let before = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    for row in sys.ineq.iter_mut().filter(|r| r.label.starts_with("f_max")) {
        for c in row.x.iter_mut() {
            c.1 *= 7.0;
        }
        for c in row.xi.iter_mut() {
            c.1 *= 7.0;
        }
        row.rhs *= 7.0;
    }
    let after = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    assert!(
        (before.index.value() - after.index.value()).abs() < 1e-6,
        "before {:?} after {:?}",
        before.index,
        after.index
    );
}

#[test]
fn nominal_on_boundary_gives_zero() {
    let sys = build_base(&one_bus_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(vec![100.0], 0.5);
    let res = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    assert_eq!(res.index, FlexIndex::Bounded(0.0));
    assert!(res.active_set.iter().any(|l| l.starts_with("p_max")), "{:?}", res.active_set);
}

#[test]
fn infeasible_nominal_is_an_error() {
    let sys = build_base(&one_bus_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(vec![150.0], 0.5);
    match flexibility_index(&sys, &set, &backend(), &FlexOpts::default()) {
        Err(FlexError::NominalInfeasible { psi_mw }) => {
            assert!((psi_mw - 50.0).abs() < 1e-6, "psi {psi_mw}")
        }
        other => panic!("expected NominalInfeasible, got {other:?}"),
    }
}

#[test]
fn ellipsoid_is_rejected() {
    let sys = build_base(&one_bus_case()).unwrap();
    let set = UncertaintySet::ellipsoid(vec![50.0], vec![10.0]);
    assert!(matches!(
        flexibility_index(&sys, &set, &backend(), &FlexOpts::default()),
        Err(FlexError::UnsupportedShape(_))
    ));
}

#[test]
fn degenerate_set_is_unbounded() {
    let sys = build_base(&one_bus_case()).unwrap();
    let set = UncertaintySet::hyperbox(vec![50.0], vec![0.0], vec![0.0]);
    let res = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    assert_eq!(res.index, FlexIndex::Unbounded { cap: 10.0 });
}

#[test]
fn tiny_deviations_hit_the_cap() {
    let sys = build_base(&one_bus_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(vec![50.0], 0.01);
    let res = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    assert_eq!(res.index, FlexIndex::Unbounded { cap: 10.0 });
    let oracle = brute_force_index(&sys, &set, &backend(), &OracleOpts::default()).unwrap();
    assert_eq!(oracle, FlexIndex::Unbounded { cap: 10.0 });
}

#[test]
fn warm_start_does_not_change_the_answer() {
    let sys = build_base(&star_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(sys.xi_nominal_mw(), 0.5);
    let cold = FlexOpts { warm_start: false, ..Default::default() };
    let a = flexibility_index(&sys, &set, &backend(), &FlexOpts::default()).unwrap();
    let b = flexibility_index(&sys, &set, &backend(), &cold).unwrap();
    assert!((a.index.value() - b.index.value()).abs() < 1e-9);
}

#[test]
fn percent_increase_guards_baseline() {
    assert!((percent_increase(0.4, 1.0).unwrap() - 150.0).abs() < 1e-12);
    assert!(percent_increase(0.0, 1.0).is_err());
    assert!(percent_increase(-1.0, 1.0).is_err());
}

#[test]
fn set_dimension_mismatch_is_an_error() {
    let sys = build_base(&star_case()).unwrap();
    let set = UncertaintySet::hyperbox_fraction(vec![50.0], 0.5);
    assert!(matches!(
        flexibility_index(&sys, &set, &backend(), &FlexOpts::default()),
        Err(FlexError::Argument(_))
    ));
}
