//! Simulation of heralded spin-wave NOON states in a pair of atomic-ensemble
//! modes: write-state generation, linear-optical heralding networks,
//! collective-motion phase evolution, anti-Stokes readout with Monte-Carlo
//! click sampling, and fringe fitting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod detection;
pub mod dynamics;
pub mod experiment;
pub mod fitting;
pub mod fock;
pub mod herald;
pub mod io;
pub mod optics;
pub mod rng;

pub use config::{ConfigError, DetectorMode, ExperimentConfig};
pub use dataset::{FringeDataset, FringePoint};
pub use detection::DetectorModel;
pub use dynamics::{MotionParams, PumpModel};
pub use fitting::{FitKind, FitResult};
pub use fock::{FockError, FockVector, ModeLayout};
pub use herald::{ClickPattern, HeraldResult, Outcome, WriteParams};
pub use optics::{DetectionNetwork, OpticalElement};

/// Mode and detector labels shared by every stage of the simulation.
pub mod modes {
    /// Spin-wave mode of ensemble a.
    pub const SW_A: &str = "SWa";
    /// Spin-wave mode of ensemble b.
    pub const SW_B: &str = "SWb";
    /// Combined Stokes beam, H polarization (carries ensemble b's photons).
    pub const S_H: &str = "S_H";
    /// Combined Stokes beam, V polarization (carries ensemble a's photons).
    pub const S_V: &str = "S_V";
    /// Combined anti-Stokes beam, H polarization (retrieved from SWa).
    pub const AS_H: &str = "AS_H";
    /// Combined anti-Stokes beam, V polarization (retrieved from SWb).
    pub const AS_V: &str = "AS_V";

    pub const D_S1: &str = "D_S1";
    pub const D_S2: &str = "D_S2";
    pub const D_AS1: &str = "D_AS1";
    pub const D_AS2: &str = "D_AS2";
}
