//! Weighted fits of the fringe models.
//!
//! Each series point is weighted by `n / (y (1 - y) + 1e-6)` with `n` its
//! sample count. Internally the solver works on `ln a` (or `ln b`), the
//! period in microseconds and the phase; periods are confined to
//! `[2 * grid spacing, 4 * grid span]` and phases wrapped to `[-pi/2, pi/2)`.
//! Five starts (periodogram period times 1, 1/2, 2, 3/4, 3/2, with a small
//! seeded jitter) are refined and the lowest cost wins.

pub mod init;
pub mod models;
pub mod solver;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DatasetError, FringeDataset, HeraldSign, SeriesPoint};
use crate::io::{fmt_f64, Table};
use crate::rng::{domain, stream};

pub use init::{periodogram_peak, Peak};
pub use models::{eval_first_order, eval_second_order, FirstOrderParams, SecondOrderParams};
pub use solver::{levenberg_marquardt, LmOptions, LmOutcome};

/// Variance floor in the binomial weights.
pub const WEIGHT_FLOOR: f64 = 1e-6;

const START_MULTIPLIERS: [f64; 5] = [1.0, 0.5, 2.0, 0.75, 1.5];

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("data show no fringe (flat or degenerate series)")]
    NoFringe,
    #[error("tau must be positive, got {0}")]
    InvalidTau(f64),
    #[error("initial guess has {got} values, expected {need}")]
    BadInit { need: usize, got: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    FirstOrder,
    SecondOrder,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::FirstOrder => "joint-first-order",
            FitKind::SecondOrder => "second-order",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Fixed (or starting, with `fit_tau`) coherence time (s).
    pub tau: f64,
    pub fit_tau: bool,
    /// Seeds the restart jitter.
    pub seed: u64,
    /// External-unit starting point: `[a, T, phi0]` or `[b, d, T', phi0']`.
    pub init: Option<Vec<f64>>,
    pub lm: LmOptions,
}

impl FitOptions {
    pub fn new(tau: f64, seed: u64) -> Self {
        Self {
            tau,
            fit_tau: false,
            seed,
            init: None,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitParam {
    pub name: &'static str,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub series: &'static str,
    pub dt: f64,
    pub observed: f64,
    pub model: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kind: FitKind,
    pub params: Vec<FitParam>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    pub tau: f64,
    pub residuals: Vec<Residual>,
    pub cost_trace: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.value)
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.sigma)
    }

    /// Fitted period (`T` or `T'`).
    pub fn period(&self) -> (f64, f64) {
        match self.kind {
            FitKind::FirstOrder => (self.value("T"), self.sigma("T")),
            FitKind::SecondOrder => (self.value("T_prime"), self.sigma("T_prime")),
        }
    }

    /// `key = value ± sigma` report.
    pub fn to_text(&self) -> String {
        let mut s = format!("model = {}\n", self.kind.name());
        for p in &self.params {
            s.push_str(&format!("{} = {} ± {}\n", p.name, fmt_f64(p.value), fmt_f64(p.sigma)));
        }
        if !self.params.iter().any(|p| p.name == "tau") {
            s.push_str(&format!("tau = {} (fixed)\n", fmt_f64(self.tau)));
        }
        s.push_str(&format!("rss = {}\n", fmt_f64(self.rss)));
        s.push_str(&format!("dof = {}\n", self.dof));
        s.push_str(&format!("converged = {}\n", self.converged));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s
    }

    /// Single-row CSV: `model,<name>,<name>_sigma,...,rss,dof,converged,iterations`.
    pub fn to_csv(&self) -> String {
        let mut head = vec!["model".to_string()];
        let mut row = vec![self.kind.name().to_string()];
        for p in &self.params {
            head.push(p.name.to_string());
            head.push(format!("{}_sigma", p.name));
            row.push(fmt_f64(p.value));
            row.push(fmt_f64(p.sigma));
        }
        head.extend(["rss", "dof", "converged", "iterations"].map(String::from));
        row.extend([fmt_f64(self.rss), self.dof.to_string(), self.converged.to_string(), self.iterations.to_string()]);
        let mut t = Table::new(head);
        t.push(row);
        t.to_csv()
    }

    pub fn residuals_csv(&self) -> String {
        let mut t = Table::new(["series", "dt_us", "observed", "model", "weight", "pull"]);
        for r in &self.residuals {
            t.push(vec![
                r.series.to_string(),
                fmt_f64(r.dt * 1e6),
                fmt_f64(r.observed),
                fmt_f64(r.model),
                fmt_f64(r.weight),
                fmt_f64((r.observed - r.model) * r.weight.sqrt()),
            ]);
        }
        t.to_csv()
    }
}

/// Binomial weight `n / (f (1 - f) + WEIGHT_FLOOR)`. The variance uses the
/// smoothed fraction `(k + 1/2) / (n + 1)` so that sparse points observed at
/// exactly 0 or 1 do not receive weights of order `n / WEIGHT_FLOOR`.
fn weight(p: &SeriesPoint) -> f64 {
    let f = (p.value * p.samples + 0.5) / (p.samples + 1.0);
    p.samples / (f * (1.0 - f) + WEIGHT_FLOOR)
}

/// Both models depend on the phase only through `sin^2` or `cos^2`, which
/// have period pi; phases are reported in `[-pi/2, pi/2)`, inside the
/// declared `[-pi, pi)` range.
fn wrap_phase(x: f64) -> f64 {
    let h = PI / 2.0;
    let y = (x + h).rem_euclid(PI) - h;
    if y >= h {
        -h
    } else {
        y
    }
}

/// Period bounds `[2 * spacing, 4 * span]` in seconds.
fn period_bounds(dts: &[f64]) -> (f64, f64) {
    let mut sorted = dts.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let span = sorted.last().unwrap() - sorted[0];
    let spacing = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    (2.0 * spacing, 4.0 * span)
}

fn check_series(points: &[&SeriesPoint], need: usize) -> Result<(), FitError> {
    if points.len() < need {
        return Err(FitError::TooFewPoints { need, got: points.len() });
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.value), h.max(p.value)));
    if !(hi - lo > 1e-12) {
        return Err(FitError::NoFringe);
    }
    let dts: Vec<f64> = points.iter().map(|p| p.dt).collect();
    let (lo, hi) = period_bounds(&dts);
    if !(lo > 0.0 && hi > lo) {
        return Err(FitError::NoFringe);
    }
    Ok(())
}

fn envelope(dt: f64, tau: f64) -> f64 {
    (-(dt * dt) / (tau * tau)).exp()
}

/// Deterministic restart jitter: the first start is exact, the others are
/// scaled by a factor in `[0.95, 1.05)`.
fn jitter(seed: u64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        let mut rng = stream(seed, domain::FIT_RESTARTS, k as u64);
        0.95 + 0.1 * rng.random::<f64>()
    }
}

struct Problem<'a> {
    residual: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    project: &'a (dyn Fn(&mut [f64]) + Sync),
    scale: Vec<f64>,
}

fn best_of(problem: &Problem<'_>, starts: Vec<Vec<f64>>, lm: &LmOptions) -> LmOutcome {
    let outcomes: Vec<LmOutcome> = starts
        .par_iter()
        .map(|x0| levenberg_marquardt(problem.residual, problem.project, x0, &problem.scale, lm))
        .collect();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.cost < outcomes[best].cost {
            best = i;
        }
    }
    outcomes.into_iter().nth(best).expect("at least one start")
}

fn sigma(cov: &Option<DMatrix<f64>>, k: usize) -> f64 {
    cov.as_ref().map_or(f64::INFINITY, |c| c[(k, k)].max(0.0).sqrt())
}

/// Joint fit of `f_{+|+}` (from `plus`) and `f_{+|-}` (from `minus`).
pub fn fit_first_order(plus: &[SeriesPoint], minus: &[SeriesPoint], opts: &FitOptions) -> Result<FitResult, FitError> {
    if !(opts.tau > 0.0) {
        return Err(FitError::InvalidTau(opts.tau));
    }
    let all: Vec<&SeriesPoint> = plus.iter().chain(minus).collect();
    check_series(&all, 6)?;
    let dts: Vec<f64> = all.iter().map(|p| p.dt).collect();
    let (t_lo, t_hi) = period_bounds(&dts);
    let (t_lo_us, t_hi_us) = (t_lo * 1e6, t_hi * 1e6);

    let rows: Vec<(bool, SeriesPoint, f64)> = plus
        .iter()
        .map(|p| (true, *p, weight(p).sqrt()))
        .chain(minus.iter().map(|p| (false, *p, weight(p).sqrt())))
        .collect();
    let fit_tau = opts.fit_tau;
    let tau_fixed = opts.tau;
    let unpack = move |u: &[f64]| FirstOrderParams {
        a: u[0].exp(),
        t: u[1] * 1e-6,
        phi0: u[2],
        tau: if fit_tau { u[3].exp() * 1e-6 } else { tau_fixed },
    };
    let residual = |u: &[f64]| -> Vec<f64> {
        let p = unpack(u);
        rows.iter()
            .map(|(is_plus, s, sw)| {
                let (fp, fm) = eval_first_order(&p, s.dt);
                sw * (s.value - if *is_plus { fp } else { fm })
            })
            .collect()
    };
    let project = |u: &mut [f64]| {
        u[0] = u[0].clamp(-20.0, 20.0);
        u[1] = u[1].clamp(t_lo_us, t_hi_us);
        u[2] = wrap_phase(u[2]);
        if u.len() > 3 {
            u[3] = u[3].clamp(0.0, 20.0);
        }
    };

    let starts: Vec<Vec<f64>> = match &opts.init {
        Some(v) if v.len() != 3 => return Err(FitError::BadInit { need: 3, got: v.len() }),
        Some(v) => vec![with_tau(vec![v[0].max(1e-9).ln(), v[1] * 1e6, v[2]], opts)],
        None => {
            // f_{+|+} - f_{+|-} = a e cos(2x) / (1 + a e); undo the envelope
            // with a rough contrast estimate before the periodogram.
            let diff = paired_difference(plus, minus);
            let near: Vec<&(f64, f64)> = diff.iter().filter(|(t, _)| envelope(*t, opts.tau) > 0.5).collect();
            let m = near
                .iter()
                .map(|(_, d)| d.abs())
                .fold(0.0, f64::max)
                .clamp(0.05, 0.98);
            let a0 = m / (1.0 - m);
            let (t, y): (Vec<f64>, Vec<f64>) = diff
                .iter()
                .filter(|(t, _)| envelope(*t, opts.tau) > 0.05)
                .map(|&(t, d)| {
                    let e = envelope(t, opts.tau);
                    (t, d * (1.0 + a0 * e) / (a0 * e))
                })
                .unzip();
            let peak = periodogram_peak(&t, &y, t_lo, t_hi).ok_or(FitError::NoFringe)?;
            START_MULTIPLIERS
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    let period = (peak.period * m * jitter(opts.seed, k)).clamp(t_lo, t_hi);
                    let phase = init::fourier(&t, &y, period).arg() / 2.0;
                    with_tau(vec![a0.ln(), period * 1e6, wrap_phase(phase)], opts)
                })
                .collect()
        }
    };
    let mut scale = vec![1.0, 1.0, 1.0];
    if fit_tau {
        scale.push(1.0);
    }
    let problem = Problem {
        residual: &residual,
        project: &project,
        scale,
    };
    let out = best_of(&problem, starts, &opts.lm);
    let p = unpack(&out.x);
    let cov = &out.covariance;
    let mut params = vec![
        FitParam {
            name: "a",
            value: p.a,
            sigma: p.a * sigma(cov, 0),
        },
        FitParam {
            name: "T",
            value: p.t,
            sigma: sigma(cov, 1) * 1e-6,
        },
        FitParam {
            name: "phi0",
            value: p.phi0,
            sigma: sigma(cov, 2),
        },
    ];
    if fit_tau {
        params.push(FitParam {
            name: "tau",
            value: p.tau,
            sigma: p.tau * sigma(cov, 3),
        });
    }
    let residuals = rows
        .iter()
        .map(|(is_plus, s, sw)| {
            let (fp, fm) = eval_first_order(&p, s.dt);
            Residual {
                series: if *is_plus { "f_plus_plus" } else { "f_plus_minus" },
                dt: s.dt,
                observed: s.value,
                model: if *is_plus { fp } else { fm },
                weight: sw * sw,
            }
        })
        .collect();
    Ok(FitResult {
        kind: FitKind::FirstOrder,
        dof: rows.len().saturating_sub(params.len()),
        params,
        rss: out.cost,
        converged: out.converged,
        iterations: out.iterations,
        tau: p.tau,
        residuals,
        cost_trace: out.cost_trace,
    })
}

fn with_tau(mut u: Vec<f64>, opts: &FitOptions) -> Vec<f64> {
    if opts.fit_tau {
        u.push((opts.tau * 1e6).ln());
    }
    u
}

/// `f_{+|+}(dt) - f_{+|-}(dt)` at delays present in both series, or the
/// centered `f_{+|+}` alone when the other series is missing.
fn paired_difference(plus: &[SeriesPoint], minus: &[SeriesPoint]) -> Vec<(f64, f64)> {
    let mut by_dt: BTreeMap<u64, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for p in plus {
        by_dt.entry(p.dt.to_bits()).or_default().0 = Some(p.value);
    }
    for p in minus {
        by_dt.entry(p.dt.to_bits()).or_default().1 = Some(p.value);
    }
    by_dt
        .into_iter()
        .filter_map(|(k, v)| {
            let t = f64::from_bits(k);
            match v {
                (Some(a), Some(b)) => Some((t, a - b)),
                (Some(a), None) => Some((t, 2.0 * a - 1.0)),
                (None, Some(b)) => Some((t, 1.0 - 2.0 * b)),
                (None, None) => None,
            }
        })
        .collect()
}

/// Weighted linear least squares for `(b, d)` at fixed period and phase.
fn linear_bd(series: &[SeriesPoint], t_prime: f64, phi0: f64, tau: f64) -> (f64, f64) {
    let mut a = DMatrix::zeros(2, 2);
    let mut rhs = DVector::zeros(2);
    for s in series {
        let e = envelope(s.dt, tau);
        let x = [(PI * s.dt / t_prime + phi0).sin().powi(2) * e * e, e];
        let w = weight(s);
        for i in 0..2 {
            rhs[i] += w * x[i] * s.value;
            for j in 0..2 {
                a[(i, j)] += w * x[i] * x[j];
            }
        }
    }
    match a.lu().solve(&rhs) {
        Some(v) => (v[0], v[1]),
        None => (0.0, 0.0),
    }
}

/// Fit of the coincidence model `c(dt)`.
pub fn fit_second_order(series: &[SeriesPoint], opts: &FitOptions) -> Result<FitResult, FitError> {
    if !(opts.tau > 0.0) {
        return Err(FitError::InvalidTau(opts.tau));
    }
    let refs: Vec<&SeriesPoint> = series.iter().collect();
    check_series(&refs, 5)?;
    let dts: Vec<f64> = series.iter().map(|p| p.dt).collect();
    let (t_lo, t_hi) = period_bounds(&dts);
    let (t_lo_us, t_hi_us) = (t_lo * 1e6, t_hi * 1e6);
    let scale_c = series.iter().map(|s| s.value.abs()).fold(0.0, f64::max).max(1e-12);

    let rows: Vec<(SeriesPoint, f64)> = series.iter().map(|p| (*p, weight(p).sqrt())).collect();
    let fit_tau = opts.fit_tau;
    let tau_fixed = opts.tau;
    let unpack = move |u: &[f64]| SecondOrderParams {
        b: u[0].exp(),
        d: u[1] * scale_c,
        t_prime: u[2] * 1e-6,
        phi0: u[3],
        tau: if fit_tau { u[4].exp() * 1e-6 } else { tau_fixed },
    };
    let residual = |u: &[f64]| -> Vec<f64> {
        let p = unpack(u);
        rows.iter().map(|(s, sw)| sw * (s.value - eval_second_order(&p, s.dt))).collect()
    };
    let project = |u: &mut [f64]| {
        u[0] = u[0].clamp(-60.0, 10.0);
        u[1] = u[1].max(0.0);
        u[2] = u[2].clamp(t_lo_us, t_hi_us);
        u[3] = wrap_phase(u[3]);
        if u.len() > 4 {
            u[4] = u[4].clamp(0.0, 20.0);
        }
    };
    let starts: Vec<Vec<f64>> = match &opts.init {
        Some(v) if v.len() != 4 => return Err(FitError::BadInit { need: 4, got: v.len() }),
        Some(v) => vec![with_tau(vec![v[0].max(1e-30).ln(), v[1] / scale_c, v[2] * 1e6, v[3]], opts)],
        None => {
            // c / e^2 = b sin^2(x) + d / e: keep the points where the
            // oscillating term still dominates.
            let (t, y): (Vec<f64>, Vec<f64>) = series
                .iter()
                .filter(|s| envelope(s.dt, opts.tau) > 0.2)
                .map(|s| (s.dt, s.value / envelope(s.dt, opts.tau).powi(2)))
                .unzip();
            let peak = periodogram_peak(&t, &y, t_lo, t_hi).ok_or(FitError::NoFringe)?;
            START_MULTIPLIERS
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    let period = (peak.period * m * jitter(opts.seed, k)).clamp(t_lo, t_hi);
                    // sin^2(x) = (1 - cos 2x) / 2: the fitted cosine phase is 2 phi0 + pi.
                    let phase = wrap_phase((init::fourier(&t, &y, period).arg() - PI) / 2.0);
                    let (b, d) = linear_bd(series, period, phase, opts.tau);
                    let b = if b > 0.0 { b } else { scale_c };
                    with_tau(vec![b.ln(), d.max(0.0) / scale_c, period * 1e6, phase], opts)
                })
                .collect()
        }
    };
    let mut scale = vec![1.0; 4];
    if fit_tau {
        scale.push(1.0);
    }
    let problem = Problem {
        residual: &residual,
        project: &project,
        scale,
    };
    let out = best_of(&problem, starts, &opts.lm);
    let p = unpack(&out.x);
    let cov = &out.covariance;
    let mut params = vec![
        FitParam {
            name: "b",
            value: p.b,
            sigma: p.b * sigma(cov, 0),
        },
        FitParam {
            name: "d",
            value: p.d,
            sigma: sigma(cov, 1) * scale_c,
        },
        FitParam {
            name: "T_prime",
            value: p.t_prime,
            sigma: sigma(cov, 2) * 1e-6,
        },
        FitParam {
            name: "phi0_prime",
            value: p.phi0,
            sigma: sigma(cov, 3),
        },
    ];
    if fit_tau {
        params.push(FitParam {
            name: "tau",
            value: p.tau,
            sigma: p.tau * sigma(cov, 4),
        });
    }
    let residuals = rows
        .iter()
        .map(|(s, sw)| Residual {
            series: "coincidence",
            dt: s.dt,
            observed: s.value,
            model: eval_second_order(&p, s.dt),
            weight: sw * sw,
        })
        .collect();
    Ok(FitResult {
        kind: FitKind::SecondOrder,
        dof: rows.len().saturating_sub(params.len()),
        params,
        rss: out.cost,
        converged: out.converged,
        iterations: out.iterations,
        tau: p.tau,
        residuals,
        cost_trace: out.cost_trace,
    })
}

/// Fits the model matching the dataset's order.
pub fn fit_dataset(ds: &FringeDataset, opts: &FitOptions) -> Result<FitResult, FitError> {
    match ds.order {
        1 => fit_first_order(
            &ds.fidelity_series(HeraldSign::Plus)?,
            &ds.fidelity_series(HeraldSign::Minus)?,
            opts,
        ),
        _ => fit_second_order(&ds.coincidence_series()?, opts),
    }
}
