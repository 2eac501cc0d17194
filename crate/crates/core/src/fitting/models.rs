//! Fringe models.
//!
//! First order (joint, shared `a`, `T`, `phi0`):
//! `f_{+|+} = (1/2 + a cos^2(pi dt/T + phi0) e) / (1 + a e)`,
//! `f_{+|-} = (1/2 + a sin^2(pi dt/T + phi0) e) / (1 + a e)`,
//! with `e = exp(-dt^2/tau^2)`.
//!
//! Second order: `c = b sin^2(pi dt/T' + phi0') e^2 + d e`.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderParams {
    pub a: f64,
    /// Period (s).
    pub t: f64,
    pub phi0: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderParams {
    pub b: f64,
    pub d: f64,
    /// Period (s).
    pub t_prime: f64,
    pub phi0: f64,
    pub tau: f64,
}

/// `(f_{+|+}, f_{+|-})` at `dt`.
pub fn eval_first_order(p: &FirstOrderParams, dt: f64) -> (f64, f64) {
    let e = (-(dt * dt) / (p.tau * p.tau)).exp();
    let x = PI * dt / p.t + p.phi0;
    let den = 1.0 + p.a * e;
    (
        (0.5 + p.a * x.cos().powi(2) * e) / den,
        (0.5 + p.a * x.sin().powi(2) * e) / den,
    )
}

/// `f_{-|+}`: the complement of `f_{+|+}` under the same herald.
pub fn eval_first_order_complement(p: &FirstOrderParams, dt: f64) -> f64 {
    let e = (-(dt * dt) / (p.tau * p.tau)).exp();
    let x = PI * dt / p.t + p.phi0;
    (0.5 + p.a * x.sin().powi(2) * e) / (1.0 + p.a * e)
}

pub fn eval_second_order(p: &SecondOrderParams, dt: f64) -> f64 {
    let e = (-(dt * dt) / (p.tau * p.tau)).exp();
    let x = PI * dt / p.t_prime + p.phi0;
    p.b * x.sin().powi(2) * e * e + p.d * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_order_limits() {
        let p = FirstOrderParams {
            a: 20.0,
            t: 317e-6,
            phi0: 0.3,
            tau: 200e-6,
        };
        let (x, y) = eval_first_order(&p, 1.0);
        assert!((x - 0.5).abs() < 1e-15 && (y - 0.5).abs() < 1e-15);
        let big = FirstOrderParams { a: 1e12, phi0: 0.0, ..p };
        assert!((eval_first_order(&big, 0.0).0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_order_values() {
        let p = SecondOrderParams {
            b: 0.02,
            d: 0.001,
            t_prime: 110e-6,
            phi0: 0.0,
            tau: 200e-6,
        };
        assert_eq!(eval_second_order(&p, 0.0), 0.001);
        let flat = SecondOrderParams { b: 0.0, ..p };
        assert!((eval_second_order(&flat, 200e-6) - 0.001 * (-1.0f64).exp()).abs() < 1e-18);
        let slow = SecondOrderParams { tau: 1e9, d: 0.0, ..p };
        assert!((eval_second_order(&slow, 55e-6) - 0.02).abs() < 1e-15);
        assert!((eval_second_order(&slow, 165e-6) - 0.02).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn complement_sums_to_one(a in 0.01f64..100.0, t in 1e-5f64..1e-3, phi in -3.0f64..3.0, dt in 0.0f64..1e-3) {
            let p = FirstOrderParams { a, t, phi0: phi, tau: 200e-6 };
            let f = eval_first_order(&p, dt).0 + eval_first_order_complement(&p, dt);
            prop_assert!((f - 1.0).abs() < 1e-12);
        }
    }
}
