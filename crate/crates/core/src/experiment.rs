//! End-to-end experiment drivers behind the command-line tool.

use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::dataset::{channel, FringeDataset};
use crate::detection::{acquire_fringe, DetectionError};
use crate::dynamics::{ghz_period, period_from_velocity, velocity_from_period, DynamicsError};
use crate::fitting::{fit_dataset, FitError, FitOptions, FitResult};
use crate::herald::{herald_probability_scaling, pattern_probability, write_state, ClickPattern, HeraldError};
use crate::io::{fmt_f64, Table};
use crate::optics::stokes_analyzer;
use crate::rng::{derive_seed, domain};

/// A fringe run aborts if more than this fraction of herald cycles at any
/// grid point time out.
pub const MAX_TIMEOUT_RATE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Herald(#[from] HeraldError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("herald timeouts at dt = {dt_us} us: {rate:.3} of cycles exceed herald_max_attempts")]
    TimeoutAbort { dt_us: f64, rate: f64 },
}

/// `N, chi, probability, mean_attempts` for `N = 0..=min(4, cutoff)`.
/// Row 0 is the no-click probability of the Stokes analyzer.
pub fn herald_stats(cfg: &ExperimentConfig) -> Result<Table, ExperimentError> {
    let n_max = cfg.cutoff.min(4);
    let mut t = Table::new(["N", "chi", "probability", "mean_attempts"]);
    let mut push = |n: usize, p: f64| {
        let mean = if p > 0.0 { 1.0 / p } else { f64::INFINITY };
        t.push(vec![n.to_string(), fmt_f64(cfg.chi), fmt_f64(p), fmt_f64(mean)]);
    };
    let net = stokes_analyzer();
    let state = write_state(&cfg.write_params())?;
    push(0, pattern_probability(&state, &net, &ClickPattern::threshold(&net, &[]))?);
    for row in herald_probability_scaling(cfg.chi, n_max, cfg.cutoff)? {
        push(row.n, row.probability);
    }
    Ok(t)
}

pub fn fit_options(cfg: &ExperimentConfig) -> FitOptions {
    FitOptions {
        fit_tau: cfg.fit_tau,
        ..FitOptions::new(cfg.tau_s, derive_seed(cfg.seed, domain::FIT_RESTARTS, 0))
    }
}

#[derive(Debug, Clone)]
pub struct FringeRun {
    pub dataset: FringeDataset,
    pub fit: FitResult,
}

fn check_timeouts(ds: &FringeDataset) -> Result<(), ExperimentError> {
    let names: &[&str] = if ds.order == 1 {
        &[channel::PLUS_TIMEOUTS, channel::MINUS_TIMEOUTS]
    } else {
        &[channel::TIMEOUTS]
    };
    for name in names {
        let k = ds.channel_index(name).expect("timeout channel");
        for p in &ds.points {
            if p.trials > 0 {
                let rate = p.counts[k] as f64 / p.trials as f64;
                if rate > MAX_TIMEOUT_RATE {
                    return Err(ExperimentError::TimeoutAbort { dt_us: p.dt * 1e6, rate });
                }
            }
        }
    }
    Ok(())
}

/// Acquires the configured fringe and fits the matching model.
pub fn run_fringe(cfg: &ExperimentConfig) -> Result<FringeRun, ExperimentError> {
    let dataset = acquire_fringe(cfg, cfg.order, &cfg.grid())?;
    check_timeouts(&dataset)?;
    let fit = fit_dataset(&dataset, &fit_options(cfg))?;
    Ok(FringeRun { dataset, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub power_mw: f64,
    /// Simulated `v_c`.
    pub v_true: f64,
    pub period: f64,
    pub period_sigma: f64,
    /// `v_c` recovered from the fitted period.
    pub v_hat: f64,
    pub v_hat_sigma: f64,
    /// `ok`, or the reason the point failed.
    pub status: String,
}

/// Order-1 fringe and fit per pump power. Power `i` uses seed
/// `derive_seed(seed, SWEEP, i)`; failed points are recorded, not fatal.
pub fn pump_sweep(cfg: &ExperimentConfig, powers: &[f64]) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (i, &power) in powers.iter().enumerate() {
        let point = ExperimentConfig {
            pump_power_mw: power,
            order: 1,
            seed: derive_seed(cfg.seed, domain::SWEEP, i as u64),
            ..cfg.clone()
        };
        let motion = point.motion();
        let mut row = SweepRow {
            power_mw: power,
            v_true: motion.velocity(),
            period: f64::NAN,
            period_sigma: f64::NAN,
            v_hat: f64::NAN,
            v_hat_sigma: f64::NAN,
            status: "ok".into(),
        };
        if !(power >= 0.0) {
            row.status = format!("negative power {power}");
            rows.push(row);
            continue;
        }
        match run_fringe(&point) {
            Ok(run) => {
                let (t, s) = run.fit.period();
                row.period = t;
                row.period_sigma = s;
                match velocity_from_period(t, &motion) {
                    Ok(v) => {
                        row.v_hat = v;
                        row.v_hat_sigma = v * s / t;
                    }
                    Err(e) => row.status = e.to_string(),
                }
                if !run.fit.converged && row.status == "ok" {
                    row.status = "not converged".into();
                }
            }
            Err(e) => row.status = e.to_string(),
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(["power_mw", "v_true_mps", "T_us", "T_sigma_us", "v_hat_mps", "v_hat_sigma_mps", "status"]);
    for r in rows {
        t.push(vec![
            fmt_f64(r.power_mw),
            fmt_f64(r.v_true),
            fmt_f64(r.period * 1e6),
            fmt_f64(r.period_sigma * 1e6),
            fmt_f64(r.v_hat),
            fmt_f64(r.v_hat_sigma),
            r.status.replace(',', ";"),
        ]);
    }
    t
}

/// Analytic GHZ fringe periods: in `dphi` (`pi / N`), relative to `N = 1`,
/// and in storage time at the configured velocity.
pub fn ghz_table(cfg: &ExperimentConfig, n_max: usize) -> Result<Table, ExperimentError> {
    let motion = cfg.motion();
    let t1 = period_from_velocity(motion.velocity(), &motion)?;
    let mut t = Table::new(["N", "period_dphi", "ratio", "period_us"]);
    for n in 1..=n_max {
        let ratio = ghz_period(n) / ghz_period(1);
        t.push(vec![
            n.to_string(),
            fmt_f64(ghz_period(n)),
            fmt_f64(ratio),
            fmt_f64(t1 / n as f64 * 1e6),
        ]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DtGrid;

    #[test]
    fn herald_stats_rows() {
        let cfg = ExperimentConfig::default();
        let t = herald_stats(&cfg).unwrap();
        assert_eq!(t.rows.len(), 5);
        let back = Table::parse_csv(&t.to_csv()).unwrap();
        let p = back.f64_column("probability").unwrap();
        assert!(p[1..].windows(2).all(|w| w[1] < w[0]));
        let zero = herald_stats(&ExperimentConfig { chi: 0.0, ..cfg }).unwrap();
        let p = zero.f64_column("probability").unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ghz_ratios_are_exact() {
        let cfg = ExperimentConfig::default();
        let t = ghz_table(&cfg, 5).unwrap();
        let r = t.f64_column("ratio").unwrap();
        for (n, r) in r.iter().enumerate() {
            assert_eq!(*r, 1.0 / (n + 1) as f64);
        }
        let m = cfg.motion();
        let t1 = period_from_velocity(m.velocity(), &m).unwrap();
        assert_eq!(t.f64_column("period_us").unwrap()[0], t1 * 1e6);
        let stopped = ExperimentConfig {
            v0_mps: 0.0,
            pump_power_mw: 0.0,
            ..cfg
        };
        assert!(matches!(ghz_table(&stopped, 2), Err(ExperimentError::Dynamics(DynamicsError::NoFringe))));
    }

    #[test]
    fn timeouts_abort_the_run() {
        let cfg = ExperimentConfig {
            herald_max_attempts: 1,
            trials_per_point: 200,
            dt_grid: DtGrid {
                start_s: 0.0,
                stop_s: 1e-4,
                count: 6,
            },
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_fringe(&cfg), Err(ExperimentError::TimeoutAbort { .. })));
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let cfg = ExperimentConfig {
            trials_per_point: 3000,
            ..ExperimentConfig::default()
        };
        let rows = pump_sweep(&cfg, &[6.0, -1.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert!((rows[0].v_hat / rows[0].v_true - 1.0).abs() < 0.2, "{:?}", rows[0]);
        assert!(rows[1].status.contains("negative"));
        let t = sweep_table(&rows);
        assert!(Table::parse_csv(&t.to_csv()).is_ok());
    }
}
