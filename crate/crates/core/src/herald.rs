//! Write-process state and herald projection.
//!
//! Each ensemble emits a two-mode squeezed pair `sum_n sqrt(chi)^n |n>_S |n>_SW`.
//! After the combining PBS the Stokes photons of ensemble a are V-polarized
//! and those of ensemble b H-polarized. Heralding runs the Stokes beam
//! through a detection network and conditions the spin waves on a click
//! pattern.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::fock::{FockError, FockVector, ModeLayout};
use crate::modes;
use crate::optics::{noon_network, DetectionNetwork, OpticsError};

/// Patterns whose probability falls below this are reported as impossible.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeraldError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error("excitation probability chi must lie in [0, 1), got {0}")]
    InvalidChi(f64),
    #[error("pattern names detector `{0}`, which the network does not have")]
    UnknownDetector(String),
    #[error("impossible outcome: pattern probability {0:e}")]
    ImpossibleOutcome(f64),
    #[error("N_max = {n_max} exceeds the cutoff {cutoff}")]
    OrderAboveCutoff { n_max: usize, cutoff: usize },
    #[error("max_attempts must be at least 1")]
    NoAttempts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WriteParams {
    /// Excitation probability per ensemble (`chi_a = chi_b = chi`).
    pub chi: f64,
    pub cutoff: usize,
}

/// Normalized write state on modes `[SWa, SWb, S_H, S_V]`.
pub fn write_state(p: &WriteParams) -> Result<FockVector, HeraldError> {
    if !(0.0..1.0).contains(&p.chi) {
        return Err(HeraldError::InvalidChi(p.chi));
    }
    let layout = ModeLayout::new([modes::SW_A, modes::SW_B, modes::S_H, modes::S_V], p.cutoff)?;
    let r = p.chi.sqrt();
    let mut entries = Vec::new();
    for na in 0..=p.cutoff {
        for nb in 0..=p.cutoff {
            let amp = r.powi((na + nb) as i32);
            if amp != 0.0 || na + nb == 0 {
                entries.push((vec![na, nb, nb, na], Complex64::new(amp, 0.0)));
            }
        }
    }
    Ok(FockVector::from_amplitudes(&layout, entries)?.normalize()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Threshold detector fired (one or more photons).
    Click,
    /// Threshold detector silent (vacuum).
    NoClick,
    /// Number-resolving detector registered exactly this many photons.
    Count(usize),
}

impl Outcome {
    fn accepts(self, n: u8) -> bool {
        match self {
            Outcome::Click => n >= 1,
            Outcome::NoClick => n == 0,
            Outcome::Count(k) => n as usize == k,
        }
    }
}

/// Detector label to outcome. Detectors of the network that are absent from
/// the pattern are left unobserved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClickPattern {
    outcomes: BTreeMap<String, Outcome>,
}

impl ClickPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, detector: &str, outcome: Outcome) -> Self {
        self.outcomes.insert(detector.to_string(), outcome);
        self
    }

    pub fn click(self, detector: &str) -> Self {
        self.with(detector, Outcome::Click)
    }

    pub fn no_click(self, detector: &str) -> Self {
        self.with(detector, Outcome::NoClick)
    }

    /// Threshold pattern over every detector of `net`: the listed detectors
    /// click, all others stay silent.
    pub fn threshold(net: &DetectionNetwork, clicking: &[&str]) -> Self {
        let mut p = Self::new();
        for d in net.detectors() {
            let o = if clicking.contains(&d.label.as_str()) {
                Outcome::Click
            } else {
                Outcome::NoClick
            };
            p = p.with(&d.label, o);
        }
        p
    }

    /// Every detector of `net` clicks.
    pub fn coincidence(net: &DetectionNetwork) -> Self {
        let labels: Vec<&str> = net.detectors().iter().map(|d| d.label.as_str()).collect();
        Self::threshold(net, &labels)
    }

    pub fn get(&self, detector: &str) -> Option<Outcome> {
        self.outcomes.get(detector).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Outcome)> {
        self.outcomes.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Conditional state after a herald.
///
/// Threshold detection and unobserved ports leave the spin waves in a
/// mixture; `branches` lists its pure components (normalized, weights
/// summing to one) keyed by the photon numbers the detectors could not
/// resolve. `state` is the dominant branch.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldResult {
    pub state: FockVector,
    pub branches: Vec<(f64, FockVector)>,
    pub probability: f64,
    pub attempts: u64,
    pub truncation_loss: f64,
}

impl HeraldResult {
    /// `sum_i w_i |<target|phi_i>|^2`.
    pub fn mixture_fidelity(&self, target: &FockVector) -> Result<f64, FockError> {
        let mut f = 0.0;
        for (w, s) in &self.branches {
            f += w * s.fidelity(target)?;
        }
        Ok(f)
    }
}

/// Runs `state` through `network` and conditions on `pattern`.
pub fn herald(
    state: &FockVector,
    network: &DetectionNetwork,
    pattern: &ClickPattern,
) -> Result<HeraldResult, HeraldError> {
    for (label, _) in pattern.iter() {
        if network.detector(label).is_none() {
            return Err(HeraldError::UnknownDetector(label.to_string()));
        }
    }
    let input = state.normalize()?;
    let (out, loss) = network.apply(&input)?;
    let layout = out.layout();
    let photonic = network.modes();
    let photonic_idx: Vec<usize> = photonic
        .iter()
        .map(|m| layout.index_of(m))
        .collect::<Result<_, _>>()?;
    let kept_idx: Vec<usize> = (0..layout.len()).filter(|k| !photonic_idx.contains(k)).collect();
    if kept_idx.is_empty() {
        return Err(FockError::LayoutMismatch("herald leaves no unmeasured modes".into()).into());
    }
    let kept = ModeLayout::new(kept_idx.iter().map(|&k| layout.modes()[k].clone()), layout.cutoff())?;
    let checks: Vec<(usize, Outcome)> = pattern
        .iter()
        .map(|(label, o)| {
            let mode = &network.detector(label).expect("validated above").mode;
            (layout.index_of(mode).expect("network output mode"), o)
        })
        .collect();

    let mut branches: BTreeMap<Vec<u8>, BTreeMap<Vec<usize>, Complex64>> = BTreeMap::new();
    for (occ, amp) in out.iter() {
        if !checks.iter().all(|&(k, o)| o.accepts(occ[k])) {
            continue;
        }
        let key: Vec<u8> = photonic_idx.iter().map(|&k| occ[k]).collect();
        let rest: Vec<usize> = kept_idx.iter().map(|&k| occ[k] as usize).collect();
        *branches.entry(key).or_default().entry(rest).or_default() += amp;
    }

    let mut total = 0.0;
    let mut pure = Vec::new();
    for entries in branches.into_values() {
        let s = FockVector::from_amplitudes(&kept, entries)?;
        let w = s.norm_sqr();
        if w > 0.0 {
            total += w;
            pure.push((w, s));
        }
    }
    if !(total > IMPOSSIBLE_PROBABILITY) {
        return Err(HeraldError::ImpossibleOutcome(total));
    }
    let mut best = 0;
    for (i, (w, _)) in pure.iter().enumerate() {
        if *w > pure[best].0 {
            best = i;
        }
    }
    let branches: Vec<(f64, FockVector)> = pure
        .into_iter()
        .map(|(w, s)| Ok((w / total, s.normalize()?)))
        .collect::<Result<_, FockError>>()?;
    Ok(HeraldResult {
        state: branches[best].1.clone(),
        branches,
        probability: total.min(1.0),
        attempts: 1,
        truncation_loss: loss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    /// Probability that all `n` detectors of `noon_network(n)` click.
    pub probability: f64,
    /// All-click probability of the same network for an ideal photonic
    /// `(|n,0> - |0,n>)/sqrt2` input.
    pub transmission: f64,
}

/// Exact `N`-fold coincidence probabilities of the order-`N` network on the
/// write state, `N = 1..=n_max`.
pub fn herald_probability_scaling(
    chi: f64,
    n_max: usize,
    cutoff: usize,
) -> Result<Vec<ScalingRow>, HeraldError> {
    if n_max > cutoff {
        return Err(HeraldError::OrderAboveCutoff { n_max, cutoff });
    }
    let state = write_state(&WriteParams { chi, cutoff })?;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let net = noon_network(n)?;
        let pattern = ClickPattern::coincidence(&net);
        let probability = pattern_probability(&state, &net, &pattern)?;
        let transmission = pattern_probability(&photonic_noon(n)?, &net, &pattern)?;
        rows.push(ScalingRow {
            n,
            probability,
            transmission,
        });
    }
    Ok(rows)
}

/// `(|n,0> - |0,n>)/sqrt2` on `(S_H, S_V)`.
pub fn photonic_noon(n: usize) -> Result<FockVector, FockError> {
    let layout = ModeLayout::new([modes::S_H, modes::S_V], n.max(1))?;
    FockVector::from_amplitudes(
        &layout,
        [
            (vec![n, 0], Complex64::new(1.0, 0.0)),
            (vec![0, n], Complex64::new(-1.0, 0.0)),
        ],
    )?
    .normalize()
}

/// Probability of `pattern` without forming the conditional state; zero
/// rather than an error for impossible patterns.
pub fn pattern_probability(
    state: &FockVector,
    network: &DetectionNetwork,
    pattern: &ClickPattern,
) -> Result<f64, HeraldError> {
    for (label, _) in pattern.iter() {
        if network.detector(label).is_none() {
            return Err(HeraldError::UnknownDetector(label.to_string()));
        }
    }
    let (out, _) = network.apply(&state.normalize()?)?;
    let layout = out.layout();
    let checks: Vec<(usize, Outcome)> = pattern
        .iter()
        .map(|(label, o)| {
            let mode = &network.detector(label).expect("validated above").mode;
            layout.index_of(mode).map(|k| (k, o))
        })
        .collect::<Result<_, _>>()?;
    Ok(out
        .iter()
        .filter(|(occ, _)| checks.iter().all(|&(k, o)| o.accepts(occ[k])))
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Number of attempts until the first success of a Bernoulli(`p`) trial,
/// or `None` if it would exceed `max_attempts`. Inverse-CDF sampling uses a
/// single uniform draw per call.
pub fn sample_attempts<R: Rng + ?Sized>(p: f64, max_attempts: u64, rng: &mut R) -> Option<u64> {
    let u: f64 = 1.0 - rng.random::<f64>();
    let k = if p >= 1.0 {
        1
    } else if p <= 0.0 {
        u64::MAX
    } else {
        let k = (u.ln() / (-p).ln_1p()).floor();
        if k >= (u64::MAX - 1) as f64 {
            u64::MAX
        } else {
            k as u64 + 1
        }
    };
    (k <= max_attempts).then_some(k)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Heralded(HeraldResult),
    TimedOut { attempts: u64 },
}

/// Repeats write attempts (each from a freshly reset write state) until
/// `pattern` fires or `max_attempts` is exhausted.
pub fn repeat_until_success<R: Rng + ?Sized>(
    p: &WriteParams,
    network: &DetectionNetwork,
    pattern: &ClickPattern,
    max_attempts: u64,
    rng: &mut R,
) -> Result<RunOutcome, HeraldError> {
    if max_attempts == 0 {
        return Err(HeraldError::NoAttempts);
    }
    let state = write_state(p)?;
    let result = herald(&state, network, pattern)?;
    Ok(match sample_attempts(result.probability, max_attempts, rng) {
        Some(attempts) => RunOutcome::Heralded(HeraldResult { attempts, ..result }),
        None => RunOutcome::TimedOut {
            attempts: max_attempts,
        },
    })
}
