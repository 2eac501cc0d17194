//! Anti-Stokes readout: spin-wave retrieval with per-excitation efficiency,
//! the polarization analyzer, background clicks, closed-form click and
//! coincidence probabilities, and Monte-Carlo fringe acquisition.
//!
//! Retrieval maps `SWa -> AS_H` and `SWb -> AS_V`; the stabilized path phase
//! `phi_stab` rides on `AS_V`. A HWP at 22.5° and a PBS then send `|+>` to
//! `D_AS1` and `|->` to `D_AS2`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{DetectorMode, ExperimentConfig};
use crate::dataset::{DatasetError, FringeDataset, FringePoint, HeraldSign};
use crate::dynamics::{delta_phi, dephasing_envelope, evolve, DynamicsError, MotionParams};
use crate::fock::{FockError, FockVector, ModeLayout};
use crate::herald::{herald, write_state, ClickPattern, HeraldError, HeraldResult, Outcome};
use crate::io::fmt_f64;
use crate::modes;
use crate::optics::{readout_analyzer, stokes_analyzer, OpticsError};
use crate::rng::{domain, stream};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Herald(#[from] HeraldError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("readout input must hold only the spin-wave modes, found {0:?}")]
    NotSpinWaves(Vec<String>),
    #[error("dt grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("fringe order must be 1 or 2, got {0}")]
    BadOrder(u8),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Peak retrieval-and-detection efficiency per excitation.
    pub gamma0: f64,
    /// Background click probability per detector per trial.
    pub gamma_b: f64,
    pub number_resolving: bool,
}

/// `(p_AS1, p_AS2) = (g cos^2(dphi + phi0) + g_b, g sin^2(dphi + phi0) + g_b)`
/// with `g = gamma0 exp(-dt^2/tau^2)`; a `-` herald swaps the two.
pub fn first_order_probabilities(dt: f64, det: &DetectorModel, p: &MotionParams, sign: HeraldSign) -> (f64, f64) {
    let g = det.gamma0 * dephasing_envelope(dt, p);
    let x = delta_phi(dt, p) + p.phi0();
    let (c2, s2) = (x.cos().powi(2), x.sin().powi(2));
    let (a, b) = (g * c2 + det.gamma_b, g * s2 + det.gamma_b);
    match sign {
        HeraldSign::Plus => (a, b),
        HeraldSign::Minus => (b, a),
    }
}

/// Fringe phase of the coincidence term, `phi0' = pi/2 - phi_stab`.
pub fn second_order_phase(p: &MotionParams) -> f64 {
    std::f64::consts::FRAC_PI_2 - p.phi_stab
}

/// Leading-order `D_AS1 . D_AS2` coincidence probability for the NOON state
/// `(|2,0> - |0,2>)/sqrt2`:
/// `g^2 sin^2(2 dphi + phi0') + 2 g_b g + g_b^2`.
pub fn second_order_coincidence(dt: f64, det: &DetectorModel, p: &MotionParams) -> f64 {
    let g = det.gamma0 * dephasing_envelope(dt, p);
    let x = 2.0 * delta_phi(dt, p) + second_order_phase(p);
    g * g * x.sin().powi(2) + 2.0 * det.gamma_b * g + det.gamma_b * det.gamma_b
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Photon-number distribution at `(D_AS1, D_AS2)` before background.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    entries: Vec<((u8, u8), f64)>,
    total: f64,
}

impl CountDistribution {
    pub fn probability(&self, n1: u8, n2: u8) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| *k == (n1, n2))
            .map_or(0.0, |(_, p)| *p / self.total)
    }

    pub fn entries(&self) -> &[((u8, u8), f64)] {
        &self.entries
    }

    /// Exact click probabilities `(p1, p2, p12)` including background, for
    /// threshold detectors.
    pub fn click_probabilities(&self, det: &DetectorModel) -> (f64, f64, f64) {
        let b = det.gamma_b;
        let (mut p1, mut p2, mut p12) = (0.0, 0.0, 0.0);
        for &((n1, n2), w) in &self.entries {
            let w = w / self.total;
            let c1 = if n1 > 0 { 1.0 } else { b };
            let c2 = if n2 > 0 { 1.0 } else { b };
            p1 += w * c1;
            p2 += w * c2;
            p12 += w * c1 * c2;
        }
        (p1, p2, p12)
    }

    /// Samples detector readings: photon counts plus one count per
    /// background event; threshold detectors saturate at one.
    pub fn sample<R: Rng + ?Sized>(&self, det: &DetectorModel, rng: &mut R) -> (usize, usize) {
        let mut u = rng.random::<f64>() * self.total;
        let mut pick = self.entries.last().map_or((0, 0), |e| e.0);
        for &(k, w) in &self.entries {
            if u < w {
                pick = k;
                break;
            }
            u -= w;
        }
        let bg1 = rng.random::<f64>() < det.gamma_b;
        let bg2 = rng.random::<f64>() < det.gamma_b;
        let (n1, n2) = (pick.0 as usize + bg1 as usize, pick.1 as usize + bg2 as usize);
        if det.number_resolving {
            (n1, n2)
        } else {
            (n1.min(1), n2.min(1))
        }
    }
}

/// Exact readout distribution of a spin-wave mixture `sum_i w_i |phi_i>`
/// stored for `dt`.
pub fn readout_distribution(
    branches: &[(f64, FockVector)],
    dt: f64,
    det: &DetectorModel,
    p: &MotionParams,
) -> Result<CountDistribution, DetectionError> {
    let eta = (det.gamma0 * dephasing_envelope(dt, p)).clamp(0.0, 1.0);
    let analyzer = readout_analyzer();
    let stab = Complex64::from_polar(1.0, p.phi_stab);
    let mut dist: BTreeMap<(u8, u8), f64> = BTreeMap::new();
    for (w, state) in branches {
        let layout = state.layout();
        if layout.len() != 2 || !layout.contains(modes::SW_A) || !layout.contains(modes::SW_B) {
            return Err(DetectionError::NotSpinWaves(layout.modes().to_vec()));
        }
        let s = evolve(state, dt, p)?;
        let (ka, kb) = (layout.index_of(modes::SW_A)?, layout.index_of(modes::SW_B)?);
        let photons = ModeLayout::new([modes::AS_H, modes::AS_V], (2 * layout.cutoff()).max(1))?;
        // Lost excitations end up in the atoms; each lost pair (la, lb)
        // labels an orthogonal environment state and so its own branch.
        let mut lost: BTreeMap<(u8, u8), BTreeMap<Vec<usize>, Complex64>> = BTreeMap::new();
        for (occ, a) in s.iter() {
            let (na, nb) = (occ[ka] as u32, occ[kb] as u32);
            for la in 0..=na {
                for lb in 0..=nb {
                    let (ra, rb) = (na - la, nb - lb);
                    let amp = (binomial(na, la) * (1.0 - eta).powi(la as i32) * eta.powi(ra as i32)).sqrt()
                        * (binomial(nb, lb) * (1.0 - eta).powi(lb as i32) * eta.powi(rb as i32)).sqrt();
                    if amp == 0.0 {
                        continue;
                    }
                    *lost
                        .entry((la as u8, lb as u8))
                        .or_default()
                        .entry(vec![ra as usize, rb as usize])
                        .or_default() += a * amp * stab.powu(rb);
                }
            }
        }
        let norm = s.norm_sqr();
        for entries in lost.into_values() {
            let psi = FockVector::from_amplitudes(&photons, entries)?;
            let (out, _) = analyzer.apply(&psi)?;
            let k1 = out.layout().index_of(&analyzer.detectors()[0].mode)?;
            let k2 = out.layout().index_of(&analyzer.detectors()[1].mode)?;
            for (occ, a) in out.iter() {
                *dist.entry((occ[k1], occ[k2])).or_default() += w * a.norm_sqr() / norm;
            }
        }
    }
    let entries: Vec<((u8, u8), f64)> = dist.into_iter().filter(|(_, p)| *p > 0.0).collect();
    let total = entries.iter().map(|e| e.1).sum();
    Ok(CountDistribution { entries, total })
}

/// One Monte-Carlo readout of a pure spin-wave state.
pub fn simulate_readout<R: Rng + ?Sized>(
    state: &FockVector,
    dt: f64,
    det: &DetectorModel,
    p: &MotionParams,
    rng: &mut R,
) -> Result<ClickPattern, DetectionError> {
    let dist = readout_distribution(&[(1.0, state.clone())], dt, det, p)?;
    let (n1, n2) = dist.sample(det, rng);
    let outcome = |n: usize| {
        if det.number_resolving {
            Outcome::Count(n)
        } else if n > 0 {
            Outcome::Click
        } else {
            Outcome::NoClick
        }
    };
    Ok(ClickPattern::new()
        .with(modes::D_AS1, outcome(n1))
        .with(modes::D_AS2, outcome(n2)))
}

/// Heralds used for an order-`order` fringe: `+` and `-` for order 1,
/// the `D_S1 . D_S2` coincidence for order 2.
pub fn fringe_heralds(cfg: &ExperimentConfig, order: u8) -> Result<Vec<HeraldResult>, DetectionError> {
    let state = write_state(&cfg.write_params())?;
    let net = stokes_analyzer();
    let fire = |n: usize| match cfg.detector_mode {
        DetectorMode::Threshold if n > 0 => Outcome::Click,
        DetectorMode::Threshold => Outcome::NoClick,
        DetectorMode::NumberResolving => Outcome::Count(n),
    };
    let patterns = match order {
        1 => vec![(1, 0), (0, 1)],
        2 => vec![(1, 1)],
        o => return Err(DetectionError::BadOrder(o)),
    };
    patterns
        .into_iter()
        .map(|(a, b)| {
            let pat = ClickPattern::new().with(modes::D_S1, fire(a)).with(modes::D_S2, fire(b));
            Ok(herald(&state, &net, &pat)?)
        })
        .collect()
}

/// Monte-Carlo fringe: for each grid point, `trials_per_point` herald
/// cycles per herald sign, each followed by one readout.
///
/// Point `i` draws from `stream(seed, FRINGE, i)`, so the dataset does not
/// depend on how points are scheduled across threads.
pub fn acquire_fringe(cfg: &ExperimentConfig, order: u8, grid: &[f64]) -> Result<FringeDataset, DetectionError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DetectionError::BadGrid);
    }
    let heralds = fringe_heralds(cfg, order)?;
    let motion = cfg.motion();
    let det = cfg.detector();
    let points: Vec<FringePoint> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &dt)| -> Result<FringePoint, DetectionError> {
            let mut rng = stream(cfg.seed, domain::FRINGE, i as u64);
            let mut counts = Vec::new();
            for h in &heralds {
                let dist = readout_distribution(&h.branches, dt, &det, &motion)?;
                let (mut c1, mut c2, mut c12, mut timeouts) = (0u64, 0u64, 0u64, 0u64);
                for _ in 0..cfg.trials_per_point {
                    if crate::herald::sample_attempts(h.probability, cfg.herald_max_attempts, &mut rng).is_none() {
                        timeouts += 1;
                        continue;
                    }
                    let (n1, n2) = dist.sample(&det, &mut rng);
                    c1 += (n1 > 0) as u64;
                    c2 += (n2 > 0) as u64;
                    c12 += (n1 > 0 && n2 > 0) as u64;
                }
                if order == 1 {
                    counts.extend([c1, c2, timeouts]);
                } else {
                    counts.extend([c12, c1, c2, timeouts]);
                }
            }
            Ok(FringePoint {
                dt,
                trials: cfg.trials_per_point,
                counts,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut meta = cfg.key_values();
    meta.insert("seed".into(), cfg.seed.to_string());
    meta.insert("v_c_mps".into(), fmt_f64(motion.velocity()));
    for (h, name) in heralds.iter().zip(["plus", "minus"]) {
        let key = if order == 1 { format!("herald_probability_{name}") } else { "herald_probability".into() };
        meta.insert(key, fmt_f64(h.probability));
    }
    meta.remove("order");
    Ok(FringeDataset::new(order, points, meta)?)
}
