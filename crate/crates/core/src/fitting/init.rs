//! Starting points: the dominant period of a discrete periodogram.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Peak of the periodogram of the mean-subtracted series `(t, y)` over
/// periods in `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub period: f64,
    /// `psi` in `y ~ A cos(2 pi t / period + psi)`.
    pub phase: f64,
    pub amplitude: f64,
}

/// Fourier sum `sum (y - mean) exp(-i w t)`.
pub fn fourier(t: &[f64], y: &[f64], period: f64) -> Complex64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let w = 2.0 * PI / period;
    t.iter()
        .zip(y)
        .map(|(&t, &y)| Complex64::from_polar(y - mean, -w * t))
        .sum()
}

/// Scans 2000 frequencies evenly spaced in `1/period`. Returns `None` for a
/// flat series or fewer than four points.
pub fn periodogram_peak(t: &[f64], y: &[f64], t_min: f64, t_max: f64) -> Option<Peak> {
    if t.len() < 4 || t.len() != y.len() || !(t_max > t_min) || !(t_min > 0.0) {
        return None;
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi - lo > 1e-12) {
        return None;
    }
    let (f_lo, f_hi) = (1.0 / t_max, 1.0 / t_min);
    let steps = 2000;
    let df = (f_hi - f_lo) / steps as f64;
    let power = |f: f64| fourier(t, y, 1.0 / f).norm_sqr();
    let mut best = (0.0, f_lo);
    for k in 0..=steps {
        let f = f_lo + df * k as f64;
        let p = power(f);
        if p > best.0 {
            best = (p, f);
        }
    }
    // Golden-section refinement inside the neighbouring grid cells.
    let (mut a, mut b) = ((best.1 - df).max(f_lo), (best.1 + df).min(f_hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if power(c) > power(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let f = 0.5 * (a + b);
    let period = 1.0 / if power(f) > best.0 { f } else { best.1 };
    let s = fourier(t, y, period);
    Some(Peak {
        period,
        phase: s.arg(),
        amplitude: 2.0 * s.norm() / t.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_period_within_twenty_percent() {
        for period in [80e-6, 150e-6, 317e-6, 500e-6] {
            let t: Vec<f64> = (0..25).map(|i| i as f64 * 25e-6).collect();
            let y: Vec<f64> = t.iter().map(|&t| 0.4 + 0.3 * (2.0 * PI * t / period + 0.5).cos()).collect();
            let p = periodogram_peak(&t, &y, 50e-6, 2400e-6).unwrap();
            assert!((p.period / period - 1.0).abs() < 0.2, "{period}: {}", p.period);
        }
    }

    #[test]
    fn phase_and_amplitude_of_whole_cycles() {
        let period = 100e-6;
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 10e-6).collect();
        let y: Vec<f64> = t.iter().map(|&t| 0.3 * (2.0 * PI * t / period + 0.7).cos()).collect();
        let p = periodogram_peak(&t, &y, 30e-6, 1000e-6).unwrap();
        assert!((p.period / period - 1.0).abs() < 0.01);
        assert!((p.phase - 0.7).abs() < 0.15, "{p:?}");
        assert!((p.amplitude - 0.3).abs() < 0.02);
    }

    #[test]
    fn flat_or_short_series_has_no_peak() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(periodogram_peak(&t, &[0.2; 5], 1.0, 10.0).is_none());
        assert!(periodogram_peak(&t[..3], &[0.1, 0.2, 0.3], 1.0, 10.0).is_none());
    }
}
