//! Linear-optical elements acting on photonic modes.
//!
//! An element is described by a unitary `U` on creation operators,
//! `a†_j -> sum_k U[j][k] a†_k`, over an ordered list of mode labels. The
//! induced Fock-space map is built by expanding each basis ket's creation
//! monomial through `U` and re-collecting terms.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{FockError, FockVector, ModeLayout};
use crate::modes;

/// Maximum tolerated `max |U†U - I|` when building an element.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("element `{name}` is not unitary (max |U†U - I| = {deviation:e})")]
    NonUnitary { name: String, deviation: f64 },
    #[error("element `{name}`: {msg}")]
    BadElement { name: String, msg: String },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("NOON order must be at least 1, got {0}")]
    InvalidOrder(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    BeamSplitter { reflectivity: f64 },
    HalfWavePlate { angle: f64 },
    PhaseShifter { phase: f64 },
    /// H transmits, V reflects; a pure relabeling of output ports.
    PolarizingBeamSplitter,
    Custom,
}

impl ElementKind {
    fn describe(&self) -> String {
        match self {
            Self::BeamSplitter { reflectivity } => format!("beamsplitter reflectivity={reflectivity}"),
            Self::HalfWavePlate { angle } => format!("half-wave-plate angle_deg={}", angle.to_degrees()),
            Self::PhaseShifter { phase } => format!("phase-shifter phase_rad={phase}"),
            Self::PolarizingBeamSplitter => "polarizing-beamsplitter".to_string(),
            Self::Custom => "custom".to_string(),
        }
    }
}

/// Reflected-arm phase convention of a lossless beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamSplitterPhase {
    /// `[[t, i r], [i r, t]]`
    #[default]
    Symmetric,
    /// `[[t, r], [-r, t]]`
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalElement {
    name: String,
    kind: ElementKind,
    modes: Vec<String>,
    matrix: DMatrix<Complex64>,
}

impl OpticalElement {
    pub fn new(
        name: impl Into<String>,
        kind: ElementKind,
        modes: Vec<String>,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self, OpticsError> {
        let name = name.into();
        let bad = |msg: String| OpticsError::BadElement {
            name: name.clone(),
            msg,
        };
        if modes.is_empty() {
            return Err(bad("no modes".into()));
        }
        if matrix.nrows() != modes.len() || matrix.ncols() != modes.len() {
            return Err(bad(format!(
                "{}x{} matrix for {} modes",
                matrix.nrows(),
                matrix.ncols(),
                modes.len()
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(bad(format!("mode `{m}` listed twice")));
            }
        }
        let deviation = unitarity_deviation(&matrix);
        if !(deviation < UNITARITY_TOL) {
            return Err(OpticsError::NonUnitary { name, deviation });
        }
        Ok(Self {
            name,
            kind,
            modes,
            matrix,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ElementKind {
        &self.kind
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    fn is_identity(&self) -> bool {
        let n = self.matrix.nrows();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let want = if i == j { 1.0 } else { 0.0 };
                self.matrix[(i, j)] == Complex64::new(want, 0.0)
            })
        })
    }
}

pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Half-wave plate with fast axis at `angle`:
/// `H -> cos2θ H + sin2θ V`, `V -> sin2θ H - cos2θ V`.
pub fn hwp(angle: f64, h_mode: &str, v_mode: &str) -> Result<OpticalElement, OpticsError> {
    let (s, c) = (2.0 * angle).sin_cos();
    let m = DMatrix::from_row_slice(2, 2, &[cplx(c, 0.0), cplx(s, 0.0), cplx(s, 0.0), cplx(-c, 0.0)]);
    OpticalElement::new(
        format!("HWP({h_mode},{v_mode})"),
        ElementKind::HalfWavePlate { angle },
        vec![h_mode.into(), v_mode.into()],
        m,
    )
}

/// `PS_j` of an order-`n` NOON analyzer: multiplies the V mode by
/// `-exp(i 2 pi j / n)`. The paired H mode is untouched and therefore not
/// part of the element.
pub fn phase_shifter(j: usize, n: usize, v_mode: &str) -> Result<OpticalElement, OpticsError> {
    if n == 0 || j == 0 || j > n {
        return Err(OpticsError::BadElement {
            name: format!("PS{j}"),
            msg: format!("need 1 <= j <= N, got j={j}, N={n}"),
        });
    }
    let phase = 2.0 * PI * j as f64 / n as f64;
    let factor = -Complex64::from_polar(1.0, phase);
    OpticalElement::new(
        format!("PS{j}"),
        ElementKind::PhaseShifter { phase: phase + PI },
        vec![v_mode.into()],
        DMatrix::from_element(1, 1, factor),
    )
}

/// Multiplies one mode by `exp(i phase)`.
pub fn phase_plate(phase: f64, mode: &str) -> Result<OpticalElement, OpticsError> {
    OpticalElement::new(
        format!("PHASE({mode})"),
        ElementKind::PhaseShifter { phase },
        vec![mode.into()],
        DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phase)),
    )
}

fn bs_entries(reflectivity: f64, convention: BeamSplitterPhase) -> [Complex64; 4] {
    let r = reflectivity.sqrt();
    let t = (1.0 - reflectivity).sqrt();
    match convention {
        BeamSplitterPhase::Symmetric => [cplx(t, 0.0), cplx(0.0, r), cplx(0.0, r), cplx(t, 0.0)],
        BeamSplitterPhase::Real => [cplx(t, 0.0), cplx(r, 0.0), cplx(-r, 0.0), cplx(t, 0.0)],
    }
}

/// Lossless beamsplitter on two modes with intensity reflectivity `reflectivity`.
pub fn beamsplitter(
    reflectivity: f64,
    a: &str,
    b: &str,
    convention: BeamSplitterPhase,
) -> Result<OpticalElement, OpticsError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(OpticsError::BadElement {
            name: format!("BS({a},{b})"),
            msg: format!("reflectivity {reflectivity} outside [0, 1]"),
        });
    }
    let e = bs_entries(reflectivity, convention);
    OpticalElement::new(
        format!("BS({a},{b})"),
        ElementKind::BeamSplitter { reflectivity },
        vec![a.into(), b.into()],
        DMatrix::from_row_slice(2, 2, &e),
    )
}

/// Polarization-independent beamsplitter between two spatial arms, each
/// carrying an `(H, V)` mode pair. Mode order: `arm1_H, arm1_V, arm2_H, arm2_V`.
pub fn arm_beamsplitter(
    name: impl Into<String>,
    reflectivity: f64,
    arm1: (&str, &str),
    arm2: (&str, &str),
) -> Result<OpticalElement, OpticsError> {
    let [t, r1, r2, t2] = bs_entries(reflectivity, BeamSplitterPhase::Symmetric);
    let z = cplx(0.0, 0.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        t,  z,  r1, z,
        z,  t,  z,  r1,
        r2, z,  t2, z,
        z,  r2, z,  t2,
    ]);
    OpticalElement::new(
        name,
        ElementKind::BeamSplitter { reflectivity },
        vec![arm1.0.into(), arm1.1.into(), arm2.0.into(), arm2.1.into()],
        m,
    )
}

/// Ideal PBS: the H mode becomes the transmitted port, V the reflected port.
pub fn pbs(h_mode: &str, v_mode: &str) -> Result<OpticalElement, OpticsError> {
    OpticalElement::new(
        format!("PBS({h_mode},{v_mode})"),
        ElementKind::PolarizingBeamSplitter,
        vec![h_mode.into(), v_mode.into()],
        DMatrix::identity(2, 2),
    )
}

type Expansion = Vec<(Vec<u8>, Complex64)>;

fn factorial_sqrt(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product::<f64>().sqrt()
}

/// Expands `prod_j (a†_j)^{n_j} / sqrt(n_j!)` through `u`, returning the
/// normalized output kets with their amplitudes.
fn expand(u: &DMatrix<Complex64>, input: &[u8]) -> Expansion {
    let k = input.len();
    let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    poly.insert(vec![0; k], cplx(1.0, 0.0));
    for (j, &nj) in input.iter().enumerate() {
        for _ in 0..nj {
            let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            for (mono, c) in &poly {
                for out in 0..k {
                    let w = u[(j, out)];
                    if w.re == 0.0 && w.im == 0.0 {
                        continue;
                    }
                    let mut m = mono.clone();
                    m[out] += 1;
                    *next.entry(m).or_insert(cplx(0.0, 0.0)) += c * w;
                }
            }
            poly = next;
        }
    }
    let denom: f64 = input.iter().map(|&n| factorial_sqrt(n)).product();
    poly.into_iter()
        .map(|(m, c)| {
            let num: f64 = m.iter().map(|&n| factorial_sqrt(n)).product();
            (m, c * (num / denom))
        })
        .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
        .collect()
}

/// Applies the Fock-space unitary induced by `element`.
///
/// Returns the transformed state and the truncation loss: the weight of the
/// output that landed on occupations above the cutoff. For a normalized
/// input `norm_sqr(out) + loss = 1` up to rounding.
pub fn apply_element(
    state: &FockVector,
    element: &OpticalElement,
) -> Result<(FockVector, f64), OpticsError> {
    let layout = state.layout();
    let idx = element
        .modes
        .iter()
        .map(|m| layout.index_of(m))
        .collect::<Result<Vec<_>, _>>()?;
    if element.is_identity() {
        return Ok((state.clone(), 0.0));
    }
    let cutoff = layout.cutoff() as u8;
    let strides: Vec<u64> = idx.iter().map(|&k| layout.stride(k)).collect();
    let mut cache: BTreeMap<Vec<u8>, Expansion> = BTreeMap::new();
    let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
    let mut overflow: BTreeMap<(u64, Vec<u8>), Complex64> = BTreeMap::new();
    let mut occ = vec![0u8; layout.len()];
    let mut sub = vec![0u8; idx.len()];
    for (&index, &amp) in state.raw() {
        layout.decode_into(index, &mut occ);
        for (s, &k) in sub.iter_mut().zip(&idx) {
            *s = occ[k];
        }
        let base = index - sub.iter().zip(&strides).map(|(&n, &s)| n as u64 * s).sum::<u64>();
        let terms = cache
            .entry(sub.clone())
            .or_insert_with(|| expand(&element.matrix, &sub));
        for (m, c) in terms.iter() {
            let a = amp * c;
            if m.iter().any(|&n| n > cutoff) {
                *overflow
                    .entry((base, m.clone()))
                    .or_insert(cplx(0.0, 0.0)) += a;
            } else {
                let target = base + m.iter().zip(&strides).map(|(&n, &s)| n as u64 * s).sum::<u64>();
                *out.entry(target).or_insert(cplx(0.0, 0.0)) += a;
            }
        }
    }
    let loss = overflow.values().map(|a| a.norm_sqr()).sum();
    Ok((FockVector::from_raw(layout.clone(), out), loss))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detector {
    pub label: String,
    pub mode: String,
}

/// Ordered element list feeding labelled detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionNetwork {
    elements: Vec<OpticalElement>,
    detectors: Vec<Detector>,
    ancillas: Vec<String>,
}

impl DetectionNetwork {
    /// `ancillas` are network-internal modes that start in vacuum.
    pub fn new(
        elements: Vec<OpticalElement>,
        detectors: Vec<Detector>,
        ancillas: Vec<String>,
    ) -> Result<Self, OpticsError> {
        for (i, d) in detectors.iter().enumerate() {
            if detectors[..i].iter().any(|o| o.mode == d.mode) {
                return Err(OpticsError::InvalidNetwork(format!(
                    "mode `{}` feeds more than one detector",
                    d.mode
                )));
            }
            if detectors[..i].iter().any(|o| o.label == d.label) {
                return Err(OpticsError::InvalidNetwork(format!(
                    "detector label `{}` used twice",
                    d.label
                )));
            }
        }
        let net = Self {
            elements,
            detectors,
            ancillas,
        };
        let touched = net.modes();
        for d in &net.detectors {
            if !touched.contains(&d.mode) {
                return Err(OpticsError::InvalidNetwork(format!(
                    "detector `{}` watches `{}`, which no element outputs",
                    d.label, d.mode
                )));
            }
        }
        Ok(net)
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    pub fn ancillas(&self) -> &[String] {
        &self.ancillas
    }

    pub fn detector(&self, label: &str) -> Option<&Detector> {
        self.detectors.iter().find(|d| d.label == label)
    }

    /// Every mode touched by some element, in first-use order.
    pub fn modes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.elements {
            for m in &e.modes {
                if !out.contains(m) {
                    out.push(m.clone());
                }
            }
        }
        out
    }

    /// Appends vacuum ancillas missing from `state` and runs every element.
    /// Returns the output state and the accumulated truncation loss.
    pub fn apply(&self, state: &FockVector) -> Result<(FockVector, f64), OpticsError> {
        let layout = state.layout();
        let missing: Vec<&String> = self.ancillas.iter().filter(|m| !layout.contains(m)).collect();
        let mut s = if missing.is_empty() {
            state.clone()
        } else {
            let anc = ModeLayout::new(missing.iter().map(|m| m.to_string()), layout.cutoff())?;
            state.tensor(&FockVector::vacuum(&anc))?
        };
        for m in self.modes() {
            if !s.layout().contains(&m) {
                return Err(FockError::UnknownMode(m).into());
            }
        }
        let mut loss = 0.0;
        for e in &self.elements {
            let (next, l) = apply_element(&s, e)?;
            loss += l;
            s = next;
        }
        Ok((s, loss))
    }

    /// Plain-text description: one block per element, then the detector map.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, e) in self.elements.iter().enumerate() {
            let _ = writeln!(s, "[{}] {} ({})", i + 1, e.name, e.kind.describe());
            let _ = writeln!(s, "modes = {}", e.modes.join(" "));
            for r in 0..e.matrix.nrows() {
                let row: Vec<String> = (0..e.matrix.ncols())
                    .map(|c| {
                        let z = e.matrix[(r, c)];
                        format!("{:+.12}{:+.12}i", z.re, z.im)
                    })
                    .collect();
                let _ = writeln!(s, "  {}", row.join("  "));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "ancillas = {}", self.ancillas.join(" "));
        for d in &self.detectors {
            let _ = writeln!(s, "detector {} <- {}", d.label, d.mode);
        }
        s
    }
}

/// Output-arm modes of the order-`n` analyzer; arm 1 is the Stokes input.
pub fn arm_modes(arm: usize) -> (String, String) {
    if arm == 1 {
        (modes::S_H.to_string(), modes::S_V.to_string())
    } else {
        (format!("S{arm}_H"), format!("S{arm}_V"))
    }
}

/// The order-`n` NOON projection circuit.
///
/// The combined Stokes beam (`S_H`, `S_V`) is split into `n` equal arms by
/// `BS_{n-1}, ..., BS_1` (intensity reflectivity `1/(i+1)`, the reflected
/// port feeding arm `i+1`). Arm `j` then passes `PS_j` and a 45° PBS whose
/// `|+>` port feeds detector `Dj`. An all-detector coincidence projects the
/// input onto `|H>^n - |V>^n`.
pub fn noon_network(n: usize) -> Result<DetectionNetwork, OpticsError> {
    if n == 0 {
        return Err(OpticsError::InvalidOrder(n));
    }
    let mut elements = Vec::new();
    let mut ancillas = Vec::new();
    for arm in 2..=n {
        let (h, v) = arm_modes(arm);
        ancillas.push(h);
        ancillas.push(v);
    }
    let (h1, v1) = arm_modes(1);
    for i in (1..n).rev() {
        let (h, v) = arm_modes(i + 1);
        elements.push(arm_beamsplitter(
            format!("BS{i}"),
            1.0 / (i as f64 + 1.0),
            (&h1, &v1),
            (&h, &v),
        )?);
    }
    let mut detectors = Vec::new();
    for j in 1..=n {
        let (h, v) = arm_modes(j);
        elements.push(phase_shifter(j, n, &v)?);
        // 45° PBS: rotate |+>,|-> onto H,V then split.
        let mut rot = hwp(PI / 8.0, &h, &v)?;
        rot.name = format!("PBS±{j} rotation");
        elements.push(rot);
        let mut split = pbs(&h, &v)?;
        split.name = format!("PBS±{j}");
        elements.push(split);
        detectors.push(Detector {
            label: format!("D{j}"),
            mode: h,
        });
    }
    DetectionNetwork::new(elements, detectors, ancillas)
}

/// Polarization analyzer in the `|±>` basis: HWP at 22.5° then PBS. `plus`
/// watches the transmitted (`|+>`) port, `minus` the reflected (`|->`) port.
pub fn pm_analyzer(
    h_mode: &str,
    v_mode: &str,
    plus: &str,
    minus: &str,
) -> Result<DetectionNetwork, OpticsError> {
    DetectionNetwork::new(
        vec![hwp(PI / 8.0, h_mode, v_mode)?, pbs(h_mode, v_mode)?],
        vec![
            Detector {
                label: plus.into(),
                mode: h_mode.into(),
            },
            Detector {
                label: minus.into(),
                mode: v_mode.into(),
            },
        ],
        Vec::new(),
    )
}

/// Stokes-side analyzer feeding `D_S1` (`|+>`) and `D_S2` (`|->`).
pub fn stokes_analyzer() -> DetectionNetwork {
    pm_analyzer(modes::S_H, modes::S_V, modes::D_S1, modes::D_S2)
        .expect("fixed analyzer is valid")
}

/// Anti-Stokes readout analyzer feeding `D_AS1` (`|+>`) and `D_AS2` (`|->`).
pub fn readout_analyzer() -> DetectionNetwork {
    pm_analyzer(modes::AS_H, modes::AS_V, modes::D_AS1, modes::D_AS2)
        .expect("fixed analyzer is valid")
}
