//! Collective atomic motion and the phases it imprints on the spin waves.
//!
//! The two spin waves carry wave vectors `+dk` and `-dk` along the motion, so
//! a uniform displacement `v_c * dt` adds `dphi = dk * v_c * dt` per
//! excitation of mode a and subtracts it per excitation of mode b. Thermal
//! motion enters only through the Gaussian envelope `exp(-dt^2 / tau^2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockError, FockVector};
use crate::modes;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("collective velocity is zero: no fringe")]
    NoFringe,
    #[error("pump power must be non-negative, got {0}")]
    NegativePower(f64),
    #[error("invalid motion parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    /// Write-laser wavelength (m).
    pub lambda: f64,
    /// Detection half-angle (rad).
    pub theta: f64,
    /// Initial velocity along `dk` (m/s).
    pub v0: f64,
    /// Pump-induced velocity along `dk` (m/s).
    pub vp: f64,
    /// Spin-wave coherence time (s).
    pub tau: f64,
    /// Stabilized propagation phase `phi_1 + phi_2` (rad).
    pub phi_stab: f64,
}

impl MotionParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.lambda > 0.0) {
            return Err(DynamicsError::InvalidParams(format!("lambda = {}", self.lambda)));
        }
        if !(self.tau > 0.0) {
            return Err(DynamicsError::InvalidParams(format!("tau = {}", self.tau)));
        }
        if !(self.theta.abs() < PI / 2.0) {
            return Err(DynamicsError::InvalidParams(format!("theta = {}", self.theta)));
        }
        Ok(())
    }

    /// `v_c = v0 + vp`.
    pub fn velocity(&self) -> f64 {
        self.v0 + self.vp
    }

    /// Fringe phase offset `phi0 = -(phi_1 + phi_2) / 2`.
    pub fn phi0(&self) -> f64 {
        -self.phi_stab / 2.0
    }
}

/// `dk = (2 pi / lambda) sin(theta)` in rad/m.
pub fn delta_k(p: &MotionParams) -> f64 {
    2.0 * PI / p.lambda * p.theta.sin()
}

/// `dphi(dt) = dk * v_c * dt`.
pub fn delta_phi(dt: f64, p: &MotionParams) -> f64 {
    delta_k(p) * p.velocity() * dt
}

/// Multiplies each component by `exp(i (n_a - n_b) dphi(dt))`.
pub fn evolve(state: &FockVector, dt: f64, p: &MotionParams) -> Result<FockVector, DynamicsError> {
    evolve_phase(state, delta_phi(dt, p))
}

/// [`evolve`] with an explicit phase `dphi`.
pub fn evolve_phase(state: &FockVector, dphi: f64) -> Result<FockVector, DynamicsError> {
    let layout = state.layout();
    let ka = layout.index_of(modes::SW_A)?;
    let kb = layout.index_of(modes::SW_B)?;
    if dphi == 0.0 {
        return Ok(state.clone());
    }
    let entries = state.iter().map(|(occ, a)| {
        let dn = occ[ka] as f64 - occ[kb] as f64;
        (
            occ.iter().map(|&n| n as usize).collect(),
            a * Complex64::from_polar(1.0, dn * dphi),
        )
    });
    Ok(FockVector::from_amplitudes(layout, entries)?)
}

/// `exp(-dt^2 / tau^2)`: retrieval envelope per spin-wave excitation.
pub fn dephasing_envelope(dt: f64, p: &MotionParams) -> f64 {
    (-(dt * dt) / (p.tau * p.tau)).exp()
}

/// Saturating pump response `v_p = v_max (1 - exp(-P / P_sat))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpModel {
    pub v_max_mps: f64,
    pub p_sat_mw: f64,
}

impl Default for PumpModel {
    fn default() -> Self {
        Self {
            v_max_mps: 0.09,
            p_sat_mw: 2.0,
        }
    }
}

pub fn pump_velocity(power_mw: f64, model: &PumpModel) -> Result<f64, DynamicsError> {
    if !(power_mw >= 0.0) {
        return Err(DynamicsError::NegativePower(power_mw));
    }
    Ok(model.v_max_mps * -(-power_mw / model.p_sat_mw).exp_m1())
}

/// Fringe period `T = pi / (dk * v_c)`.
pub fn period_from_velocity(v_c: f64, p: &MotionParams) -> Result<f64, DynamicsError> {
    let w = delta_k(p) * v_c;
    if w == 0.0 {
        return Err(DynamicsError::NoFringe);
    }
    Ok(PI / w.abs())
}

/// Inverse of [`period_from_velocity`]: `v_c = pi / (dk * T)`.
pub fn velocity_from_period(t: f64, p: &MotionParams) -> Result<f64, DynamicsError> {
    let w = delta_k(p) * t;
    if w == 0.0 || !w.is_finite() {
        return Err(DynamicsError::NoFringe);
    }
    Ok(PI / w.abs())
}

/// Ideal parity-type fringe of an `n`-party GHZ state: `sin^2(n dphi + phi0)`.
pub fn ghz_fringe(n: usize, dphi: f64, phi0: f64) -> f64 {
    (n as f64 * dphi + phi0).sin().powi(2)
}

/// Fringe period of [`ghz_fringe`] in `dphi`.
pub fn ghz_period(n: usize) -> f64 {
    PI / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeLayout;
    use proptest::prelude::*;

    fn params() -> MotionParams {
        MotionParams {
            lambda: 794.98e-9,
            theta: 0.6f64.to_radians(),
            v0: 0.03,
            vp: 0.09,
            tau: 200e-6,
            phi_stab: 0.0,
        }
    }

    fn sw(entries: &[(usize, usize, Complex64)], cutoff: usize) -> FockVector {
        let l = ModeLayout::new([modes::SW_A, modes::SW_B], cutoff).unwrap();
        FockVector::from_amplitudes(&l, entries.iter().map(|&(a, b, c)| (vec![a, b], c)))
            .unwrap()
            .normalize()
            .unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn delta_k_values() {
        let mut p = params();
        assert!((delta_k(&p) / 8.28e4 - 1.0).abs() < 5e-3);
        p.theta = 0.0;
        assert_eq!(delta_k(&p), 0.0);
        p.theta = -0.6f64.to_radians();
        assert_eq!(delta_k(&p), -delta_k(&params()));
    }

    #[test]
    fn evolve_plus_to_minus_at_quarter_turn() {
        let plus = sw(&[(1, 0, c(1.0)), (0, 1, c(1.0))], 1);
        let minus = sw(&[(1, 0, c(1.0)), (0, 1, c(-1.0))], 1);
        let out = evolve_phase(&plus, PI / 2.0).unwrap();
        assert!((out.fidelity(&minus).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(evolve(&plus, 0.0, &params()).unwrap(), plus);
    }

    #[test]
    fn noon_relative_phase_runs_twice_as_fast() {
        let noon = sw(&[(2, 0, c(1.0)), (0, 2, c(-1.0))], 2);
        let out = evolve_phase(&noon, 0.3).unwrap();
        let rel = out.amplitude(&[0, 2]) / out.amplitude(&[2, 0]);
        let want = -Complex64::from_polar(1.0, -4.0 * 0.3);
        assert!((rel - want).norm() < 1e-12);
    }

    #[test]
    fn evolve_needs_spin_wave_modes() {
        let l = ModeLayout::new(["X"], 1).unwrap();
        assert!(evolve_phase(&FockVector::vacuum(&l), 0.1).is_err());
    }

    #[test]
    fn envelope_values() {
        let p = params();
        assert_eq!(dephasing_envelope(0.0, &p), 1.0);
        assert!((dephasing_envelope(p.tau, &p) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((dephasing_envelope(p.tau, &p).powi(2) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pump_velocity_limits() {
        let m = PumpModel::default();
        assert_eq!(pump_velocity(0.0, &m).unwrap(), 0.0);
        assert!((pump_velocity(1e3, &m).unwrap() - 0.09).abs() < 1e-12);
        assert!(pump_velocity(-1.0, &m).is_err());
    }

    #[test]
    fn periods_from_captions() {
        let mut p = params();
        // Pin dk to the quoted 8.28e4 rad/m.
        p.theta = (8.28e4 * p.lambda / (2.0 * PI)).asin();
        let t = period_from_velocity(0.1197, &p).unwrap();
        assert!((t / 317e-6 - 1.0).abs() < 0.01, "{t}");
        let t = period_from_velocity(0.0322, &p).unwrap();
        assert!((t / 1177e-6 - 1.0).abs() < 0.01, "{t}");
        assert_eq!(period_from_velocity(0.0, &p), Err(DynamicsError::NoFringe));
    }

    #[test]
    fn ghz_examples() {
        assert_eq!(ghz_fringe(1, 0.0, 0.0), 0.0);
        assert_eq!(ghz_period(2), ghz_period(1) / 2.0);
        // Three maxima of sin^2(3x) in one N=1 period [0, pi).
        let maxima = (0..3000)
            .map(|i| i as f64 * PI / 3000.0)
            .filter(|&x| ghz_fringe(3, x, 0.0) > 1.0 - 1e-5)
            .map(|x| (x / (PI / 3.0)).floor() as i32)
            .collect::<std::collections::BTreeSet<_>>();
        assert_eq!(maxima.len(), 3);
    }

    fn fine_maxima(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Vec<f64> {
        let h = t_end / n as f64;
        let y: Vec<f64> = (0..=n).map(|i| f(i as f64 * h)).collect();
        (1..n)
            .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
            .map(|i| {
                // Parabolic refinement.
                let d = 0.5 * (y[i - 1] - y[i + 1]) / (y[i - 1] - 2.0 * y[i] + y[i + 1]);
                (i as f64 + d) * h
            })
            .collect()
    }

    // Ideal readout of the N=1 "+" state: p(+) = cos^2(dphi); N=2 coincidence
    // of the NOON state: cos^2(2 dphi). Both computed from the evolved states.
    #[test]
    fn simulated_periods_follow_the_law() {
        let p = params();
        let t = period_from_velocity(p.velocity(), &p).unwrap();
        let plus = sw(&[(1, 0, c(1.0)), (0, 1, c(1.0))], 2);
        let noon = sw(&[(2, 0, c(1.0)), (0, 2, c(-1.0))], 2);
        let p1 = |dt: f64| {
            let s = evolve(&plus, dt, &p).unwrap();
            (s.amplitude(&[1, 0]) + s.amplitude(&[0, 1])).norm_sqr() / 2.0
        };
        let p2 = |dt: f64| {
            let s = evolve(&noon, dt, &p).unwrap();
            (s.amplitude(&[2, 0]) - s.amplitude(&[0, 2])).norm_sqr() / 2.0
        };
        let m1 = fine_maxima(p1, 4.0 * t, 40_000);
        let m2 = fine_maxima(p2, 4.0 * t, 40_000);
        let t1 = m1[1] - m1[0];
        let t2 = m2[1] - m2[0];
        assert!((t1 / t - 1.0).abs() < 1e-3, "{t1} vs {t}");
        assert!((t2 / (t / 2.0) - 1.0).abs() < 1e-3, "{t2} vs {}", t / 2.0);
    }

    proptest! {
        #[test]
        fn evolve_preserves_populations_and_composes(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
            t1 in -1e-3f64..1e-3,
            t2 in -1e-3f64..1e-3,
        ) {
            let l = ModeLayout::new([modes::SW_A, modes::SW_B], 2).unwrap();
            let entries = amps.iter().enumerate().map(|(i, &(re, im))| (vec![i / 3, i % 3], Complex64::new(re, im)));
            let s = FockVector::from_amplitudes(&l, entries).unwrap();
            prop_assume!(s.norm_sqr() > 1e-6);
            let p = params();
            let once = evolve(&s, t1, &p).unwrap();
            for ((o1, a), (o2, b)) in s.iter().zip(once.iter()) {
                prop_assert_eq!(o1, o2);
                prop_assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-12);
            }
            let twice = evolve(&once, t2, &p).unwrap();
            let joint = evolve(&s, t1 + t2, &p).unwrap();
            prop_assert!(twice.max_abs_diff(&joint).unwrap() < 1e-12);
        }

        #[test]
        fn pump_velocity_is_monotone(p1 in 0.0f64..50.0, p2 in 0.0f64..50.0) {
            let m = PumpModel::default();
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(pump_velocity(lo, &m).unwrap() <= pump_velocity(hi, &m).unwrap());
        }

        #[test]
        fn period_velocity_round_trip(t in 1e-5f64..1e-2) {
            let p = params();
            let v = velocity_from_period(t, &p).unwrap();
            let back = period_from_velocity(v, &p).unwrap();
            prop_assert!((back / t - 1.0).abs() < 1e-15);
        }
    }
}
