//! Seeded synthetic test systems: small random networks whose nominal
//! clearing problem is feasible by construction.

use crate::flex::psi;
use crate::gridmodel::{Bus, CaseError, Generator, GridCase, Line};
use crate::market::build_base;
use crate::solve::SolverBackend;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_buses: usize,
    pub horizon: usize,
    /// 0 = generous line capacities, 1 = as tight as the generator dares.
    pub congestion: f64,
    /// Generator ramp as a fraction of capacity.
    pub ramp_frac: f64,
    /// Required nominal feasibility margin, MW.
    pub margin: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { seed: 0, n_buses: 3, horizon: 1, congestion: 0.3, ramp_frac: 0.5, margin: 1.0 }
    }
}

/// Draws random cases until one clears with at least `margin` MW of
/// feasibility slack at nominal demand. Deterministic in the seed.
pub fn synth_case(spec: &SynthSpec) -> Result<GridCase, CaseError> {
    if spec.n_buses == 0 || spec.horizon == 0 {
        return Err(CaseError::Argument("n_buses and horizon must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&spec.congestion) {
        return Err(CaseError::Argument("congestion must be in [0, 1]".into()));
    }
    for attempt in 0..64u64 {
        let case = draw(spec, attempt);
        if case.validate().is_err() {
            continue;
        }
        let Ok(sys) = build_base(&case) else { continue };
        let Ok(v) = psi(&sys, &sys.xi_nominal_mw(), &SolverBackend::Reference) else { continue };
        if v <= -spec.margin {
            return Ok(case);
        }
    }
    Err(CaseError::Argument(format!(
        "no feasible system found for seed {} after 64 attempts",
        spec.seed
    )))
}

fn draw(spec: &SynthSpec, attempt: u64) -> GridCase {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(attempt.wrapping_mul(0x9E3779B97F4A7C15)));
    let n = spec.n_buses;
    let t_count = spec.horizon;

    let mut buses = Vec::with_capacity(n);
    for i in 0..n {
        let has_load = i == n - 1 || rng.gen_bool(0.7);
        let base_load = if has_load { rng.gen_range(20.0..100.0) } else { 0.0 };
        let demand: Vec<f64> = (0..t_count)
            .map(|_| base_load * rng.gen_range(0.8..1.2))
            .collect();
        buses.push(Bus { id: i + 1, demand, is_reference: i == 0 });
    }
    let peak_total: f64 = (0..t_count)
        .map(|t| buses.iter().map(|b| b.demand[t]).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);

    let mut lines = Vec::new();
    // spanning tree, then a few extra corridors
    for i in 1..n {
        let to = rng.gen_range(0..i);
        lines.push((i + 1, to + 1));
    }
    let extras = if n >= 3 { rng.gen_range(0..n) } else { 0 };
    for _ in 0..extras {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        if a != b && !lines.contains(&(a, b)) && !lines.contains(&(b, a)) {
            lines.push((a, b));
        }
    }
    let slack = 1.5 - 1.1 * spec.congestion;
    let lines: Vec<Line> = lines
        .into_iter()
        .enumerate()
        .map(|(i, (from, to))| Line {
            id: i + 1,
            from_bus: from,
            to_bus: to,
            susceptance: rng.gen_range(5.0..15.0),
            f_max: (peak_total * rng.gen_range(0.5..1.0) * slack).max(10.0),
        })
        .collect();

    let n_gen = 1 + rng.gen_range(0..=(n / 2));
    let mut generators = Vec::with_capacity(n_gen);
    let mut cap_total = 0.0;
    for g in 0..n_gen {
        let bus = if g == 0 { 1 } else { rng.gen_range(1..=n) };
        let cap = peak_total * rng.gen_range(0.5..1.0);
        cap_total += cap;
        let cost = rng.gen_range(5.0..50.0);
        generators.push(Generator {
            id: g + 1,
            bus,
            p_max: vec![cap; t_count],
            ramp: (spec.ramp_frac * cap).max(1.0),
            cost: vec![cost; t_count],
        });
    }
    // keep total capacity comfortably above the peak
    if cap_total < 1.4 * peak_total {
        let scale = 1.4 * peak_total / cap_total;
        for g in &mut generators {
            for v in &mut g.p_max {
                *v *= scale;
            }
            g.ramp *= scale;
        }
    }

    GridCase { base_mva: 100.0, horizon: t_count, buses, generators, lines }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_deterministic_and_feasible() {
        let spec = SynthSpec { seed: 7, n_buses: 4, ..Default::default() };
        let a = synth_case(&spec).unwrap();
        let b = synth_case(&spec).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        a.validate().unwrap();
        let sys = build_base(&a).unwrap();
        let v = psi(&sys, &sys.xi_nominal_mw(), &SolverBackend::Reference).unwrap();
        assert!(v <= -1.0, "margin {v}");
    }

    #[test]
    fn seeds_vary_the_topology() {
        let a = synth_case(&SynthSpec { seed: 1, n_buses: 5, ..Default::default() }).unwrap();
        let b = synth_case(&SynthSpec { seed: 2, n_buses: 5, ..Default::default() }).unwrap();
        assert_ne!(a.to_json(), b.to_json());
    }

    #[test]
    fn multi_period_synth_validates() {
        let spec = SynthSpec { seed: 3, n_buses: 3, horizon: 4, ..Default::default() };
        let case = synth_case(&spec).unwrap();
        assert_eq!(case.horizon, 4);
        case.validate().unwrap();
    }

    #[test]
    fn bad_arguments_rejected() {
        assert!(synth_case(&SynthSpec { n_buses: 0, ..Default::default() }).is_err());
        assert!(synth_case(&SynthSpec { congestion: 1.5, ..Default::default() }).is_err());
    }
}
