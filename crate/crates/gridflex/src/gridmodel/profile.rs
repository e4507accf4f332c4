//! Seeded synthetic duck-curve load profiles.

use super::{CaseError, ValidationCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Parametric duck-curve profile: morning bump, midday trough, steep
/// evening ramp, plus small seeded per-bus noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfileSpec {
    pub seed: u64,
    pub morning_peak_hour: f64,
    pub trough_hour: f64,
    /// First hour of the evening-ramp window; the steepest one-step
    /// increase of every generated profile lies in
    /// [evening_ramp_start, evening_ramp_start + 2].
    pub evening_ramp_start: f64,
    /// Logistic rate of the evening ramp.
    pub ramp_steepness: f64,
    /// Overall modulation depth as a fraction of the base level.
    pub amplitude: f64,
    /// Multiplicative noise half-width per hour, per bus.
    pub noise_frac: f64,
    /// Optional per-bus demand scaling, keyed by bus id.
    #[serde(default)]
    pub bus_scale: BTreeMap<usize, f64>,
}

impl LoadProfileSpec {
    /// Flat profile: every hour equals the base demand.
    pub fn flat(seed: u64) -> Self {
        LoadProfileSpec {
            seed,
            morning_peak_hour: 7.0,
            trough_hour: 12.0,
            evening_ramp_start: 16.0,
            ramp_steepness: 1.5,
            amplitude: 0.0,
            noise_frac: 0.0,
            bus_scale: BTreeMap::new(),
        }
    }

    /// Default duck-curve shape with evening ramp starting at hour 16.
    pub fn duck(seed: u64) -> Self {
        LoadProfileSpec { amplitude: 0.35, noise_frac: 0.02, ..Self::flat(seed) }
    }
}

fn gauss(t: f64, center: f64, width: f64) -> f64 {
    let z = (t - center) / width;
    (-0.5 * z * z).exp()
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Generates the normalized (mean 1) profile for one bus, deterministic in
/// `(spec.seed, bus_id)`.
pub fn generate_profile(spec: &LoadProfileSpec, bus_id: usize, horizon: usize) -> Result<Vec<f64>, CaseError> {
    let a = spec.amplitude;
    let ramp_mid = spec.evening_ramp_start + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (bus_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut vals = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let t = t as f64;
        let base = 1.0 + 0.25 * a * gauss(t, spec.morning_peak_hour, 1.5)
            - 0.9 * a * gauss(t, spec.trough_hour, 2.5)
            + 1.6 * a * logistic(spec.ramp_steepness * (t - ramp_mid));
        let noise = if spec.noise_frac > 0.0 {
            1.0 + rng.gen_range(-spec.noise_frac..=spec.noise_frac)
        } else {
            1.0
        };
        vals.push(base * noise);
    }
    // Normalize to mean 1 so total energy tracks the base demand.
    let mean = vals.iter().sum::<f64>() / horizon as f64;
    let scale = spec.bus_scale.get(&bus_id).copied().unwrap_or(1.0) / mean;
    for v in &mut vals {
        *v *= scale;
    }
    if vals.iter().any(|&v| !(v > 0.0)) {
        return Err(CaseError::invalid(
            ValidationCode::NonPositiveProfile,
            format!("bus {bus_id}: generated profile is not strictly positive"),
        ));
    }
    if spec.amplitude > 0.0 && horizon >= 24 {
        let (mut best_t, mut best) = (0usize, f64::NEG_INFINITY);
        for t in 0..horizon - 1 {
            let step = vals[t + 1] - vals[t];
            if step > best {
                best = step;
                best_t = t;
            }
        }
        let w0 = spec.evening_ramp_start;
        if (best_t as f64) < w0 || (best_t as f64) > w0 + 2.0 {
            return Err(CaseError::invalid(
                ValidationCode::RampOutsideWindow,
                format!("bus {bus_id}: steepest step at hour {best_t}, outside [{w0}, {}]", w0 + 2.0),
            ));
        }
    }
    Ok(vals)
}
