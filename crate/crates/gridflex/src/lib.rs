//! Space-time load-shifting flexibility analysis for DC-OPF electricity
//! market models.
//!
//! The crate builds market-clearing constraint systems from MatPower-style
//! grid cases, augments them with virtual links (spatial or temporal load
//! shifting pathways) and economic budget rows, and computes the
//! deterministic flexibility index of the resulting system via an
//! active-set KKT mixed-integer reformulation.

pub mod flex;
pub mod gridmodel;
pub mod market;
pub mod plot;
pub mod solve;
pub mod sweep;
pub mod synth;
