//! Truncated multimode Fock space.
//!
//! A [`FockVector`] stores complex amplitudes over occupation tuples
//! `(n_1, ..., n_m)` with every `n_k <= cutoff`. Each tuple is addressed by
//! its lexicographic index in the full truncated basis (first mode most
//! significant), and only non-zero amplitudes are stored. Iteration,
//! serialization and every floating-point reduction follow that index order,
//! so results are bit-reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

/// Absolute tolerance for amplitude comparisons.
pub const AMPLITUDE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("mode layout must contain at least one mode")]
    EmptyLayout,
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),
    #[error("cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),
    #[error("truncated basis of {modes} modes at cutoff {cutoff} is too large to index")]
    BasisTooLarge { modes: usize, cutoff: usize },
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("layouts share mode label `{0}`")]
    OverlappingModes(String),
    #[error("layouts differ: {0}")]
    LayoutMismatch(String),
    #[error("occupation {occupation:?} has the wrong length or exceeds cutoff {cutoff}")]
    InvalidOccupation { occupation: Vec<usize>, cutoff: usize },
    #[error("cannot normalize the zero vector")]
    ZeroNorm,
    #[error("malformed state text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Ordered, uniquely labelled bosonic modes sharing one occupation cutoff.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    modes: Vec<String>,
    cutoff: usize,
    strides: Vec<u64>,
}

impl ModeLayout {
    pub fn new<I, S>(modes: I, cutoff: usize) -> Result<Self, FockError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let modes: Vec<String> = modes.into_iter().map(Into::into).collect();
        if modes.is_empty() {
            return Err(FockError::EmptyLayout);
        }
        if cutoff == 0 || cutoff > u8::MAX as usize {
            return Err(FockError::InvalidCutoff(cutoff));
        }
        let mut seen = BTreeSet::new();
        for m in &modes {
            if !seen.insert(m.as_str()) {
                return Err(FockError::DuplicateMode(m.clone()));
            }
        }
        let radix = cutoff as u64 + 1;
        let mut strides = vec![1u64; modes.len()];
        let mut acc: u64 = 1;
        for k in (0..modes.len()).rev() {
            strides[k] = acc;
            acc = acc.checked_mul(radix).ok_or(FockError::BasisTooLarge {
                modes: modes.len(),
                cutoff,
            })?;
        }
        Ok(Self {
            modes,
            cutoff,
            strides,
        })
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.modes.iter().any(|m| m == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize, FockError> {
        self.modes
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| FockError::UnknownMode(label.to_string()))
    }

    /// Number of occupation tuples in the truncated basis.
    pub fn basis_size(&self) -> u64 {
        self.strides[0] * (self.cutoff as u64 + 1)
    }

    /// Same modes with a different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self, FockError> {
        Self::new(self.modes.iter().cloned(), cutoff)
    }

    pub(crate) fn stride(&self, mode: usize) -> u64 {
        self.strides[mode]
    }

    /// Lexicographic basis index of an occupation tuple.
    pub fn encode(&self, occupation: &[u8]) -> u64 {
        occupation
            .iter()
            .zip(&self.strides)
            .map(|(&n, &s)| n as u64 * s)
            .sum()
    }

    pub fn decode_into(&self, mut index: u64, out: &mut [u8]) {
        let radix = self.cutoff as u64 + 1;
        for k in (0..self.modes.len()).rev() {
            out[k] = (index % radix) as u8;
            index /= radix;
        }
    }

    pub fn decode(&self, index: u64) -> Vec<u8> {
        let mut out = vec![0; self.modes.len()];
        self.decode_into(index, &mut out);
        out
    }

    fn check_occupation(&self, occupation: &[usize]) -> Result<Vec<u8>, FockError> {
        if occupation.len() != self.modes.len() || occupation.iter().any(|&n| n > self.cutoff) {
            return Err(FockError::InvalidOccupation {
                occupation: occupation.to_vec(),
                cutoff: self.cutoff,
            });
        }
        Ok(occupation.iter().map(|&n| n as u8).collect())
    }
}

/// Pure state (not necessarily normalized) over a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    layout: ModeLayout,
    amps: BTreeMap<u64, Complex64>,
}

impl FockVector {
    pub fn vacuum(layout: &ModeLayout) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(0, Complex64::new(1.0, 0.0));
        Self {
            layout: layout.clone(),
            amps,
        }
    }

    pub fn zero(layout: &ModeLayout) -> Self {
        Self {
            layout: layout.clone(),
            amps: BTreeMap::new(),
        }
    }

    /// Single basis ket with unit amplitude.
    pub fn basis(layout: &ModeLayout, occupation: &[usize]) -> Result<Self, FockError> {
        Self::from_amplitudes(layout, [(occupation.to_vec(), Complex64::new(1.0, 0.0))])
    }

    /// Builds a state from `(occupation, amplitude)` pairs; repeated tuples add.
    pub fn from_amplitudes<I>(layout: &ModeLayout, entries: I) -> Result<Self, FockError>
    where
        I: IntoIterator<Item = (Vec<usize>, Complex64)>,
    {
        let mut out = Self::zero(layout);
        for (occ, amp) in entries {
            let occ = layout.check_occupation(&occ)?;
            out.add_at(layout.encode(&occ), amp);
        }
        Ok(out)
    }

    pub(crate) fn from_raw(layout: ModeLayout, amps: BTreeMap<u64, Complex64>) -> Self {
        let mut s = Self { layout, amps };
        s.amps.retain(|_, a| a.re != 0.0 || a.im != 0.0);
        s
    }

    pub(crate) fn add_at(&mut self, index: u64, amp: Complex64) {
        *self.amps.entry(index).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    /// Number of stored (non-zero) amplitudes.
    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Complex64 {
        match self.layout.check_occupation(occupation) {
            Ok(occ) => self
                .amps
                .get(&self.layout.encode(&occ))
                .copied()
                .unwrap_or_default(),
            Err(_) => Complex64::default(),
        }
    }

    /// Stored amplitudes in lexicographic basis order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<u8>, Complex64)> + '_ {
        self.amps
            .iter()
            .map(|(&idx, &a)| (self.layout.decode(idx), a))
    }

    pub(crate) fn raw(&self) -> &BTreeMap<u64, Complex64> {
        &self.amps
    }

    /// Squared norm, `sum |amplitude|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Self, FockError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let amps = self.amps.iter().map(|(&k, &a)| (k, a * factor)).collect();
        Self::from_raw(self.layout.clone(), amps)
    }

    /// Superposition `self + other` on a shared layout.
    pub fn add(&self, other: &Self) -> Result<Self, FockError> {
        self.same_layout(other)?;
        let mut out = self.clone();
        for (&k, &a) in &other.amps {
            out.add_at(k, a);
        }
        Ok(Self::from_raw(out.layout, out.amps))
    }

    fn same_layout(&self, other: &Self) -> Result<(), FockError> {
        if self.layout != other.layout {
            return Err(FockError::LayoutMismatch(format!(
                "{:?}/{} vs {:?}/{}",
                self.layout.modes,
                self.layout.cutoff,
                other.layout.modes,
                other.layout.cutoff
            )));
        }
        Ok(())
    }

    /// Applies `a†` to `mode`. Returns the raised state and the truncation
    /// loss: the prior weight of every component already at the cutoff in
    /// that mode, which cannot be raised and is dropped.
    pub fn create(&self, mode: &str) -> Result<(Self, f64), FockError> {
        let k = self.layout.index_of(mode)?;
        let stride = self.layout.stride(k);
        let cutoff = self.layout.cutoff as u64;
        let radix = cutoff + 1;
        let mut out = BTreeMap::new();
        let mut loss = 0.0;
        for (&idx, &a) in &self.amps {
            let n = (idx / stride) % radix;
            if n == cutoff {
                loss += a.norm_sqr();
            } else {
                out.insert(idx + stride, a * ((n + 1) as f64).sqrt());
            }
        }
        Ok((Self::from_raw(self.layout.clone(), out), loss))
    }

    /// Applies the annihilation operator `a` to `mode`.
    pub fn annihilate(&self, mode: &str) -> Result<Self, FockError> {
        let k = self.layout.index_of(mode)?;
        let stride = self.layout.stride(k);
        let radix = self.layout.cutoff as u64 + 1;
        let mut out = BTreeMap::new();
        for (&idx, &a) in &self.amps {
            let n = (idx / stride) % radix;
            if n > 0 {
                out.insert(idx - stride, a * (n as f64).sqrt());
            }
        }
        Ok(Self::from_raw(self.layout.clone(), out))
    }

    /// Photon-number (occupation) operator applied to `mode`.
    pub fn number(&self, mode: &str) -> Result<Self, FockError> {
        let k = self.layout.index_of(mode)?;
        let stride = self.layout.stride(k);
        let radix = self.layout.cutoff as u64 + 1;
        let amps = self
            .amps
            .iter()
            .map(|(&idx, &a)| (idx, a * ((idx / stride) % radix) as f64))
            .collect();
        Ok(Self::from_raw(self.layout.clone(), amps))
    }

    /// Tensor product on the merged layout (`self` modes first). The merged
    /// cutoff is the larger of the two.
    pub fn tensor(&self, other: &Self) -> Result<Self, FockError> {
        for m in other.layout.modes() {
            if self.layout.contains(m) {
                return Err(FockError::OverlappingModes(m.clone()));
            }
        }
        let cutoff = self.layout.cutoff.max(other.layout.cutoff);
        let layout = ModeLayout::new(
            self.layout
                .modes
                .iter()
                .chain(other.layout.modes.iter())
                .cloned(),
            cutoff,
        )?;
        let split = self.layout.len();
        let mut occ = vec![0u8; layout.len()];
        let mut amps = BTreeMap::new();
        for (&i, &a) in &self.amps {
            self.layout.decode_into(i, &mut occ[..split]);
            for (&j, &b) in &other.amps {
                other.layout.decode_into(j, &mut occ[split..]);
                amps.insert(layout.encode(&occ), a * b);
            }
        }
        Ok(Self::from_raw(layout, amps))
    }

    /// Same state expressed on a permuted mode ordering.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<Self, FockError> {
        if order.len() != self.layout.len() {
            return Err(FockError::LayoutMismatch(format!(
                "reorder needs {} labels, got {}",
                self.layout.len(),
                order.len()
            )));
        }
        let perm = order
            .iter()
            .map(|l| self.layout.index_of(l.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let layout = ModeLayout::new(order.iter().map(|l| l.as_ref().to_string()), self.layout.cutoff)?;
        let mut src = vec![0u8; perm.len()];
        let mut dst = vec![0u8; perm.len()];
        let mut amps = BTreeMap::new();
        for (&idx, &a) in &self.amps {
            self.layout.decode_into(idx, &mut src);
            for (d, &p) in dst.iter_mut().zip(&perm) {
                *d = src[p];
            }
            amps.insert(layout.encode(&dst), a);
        }
        Ok(Self::from_raw(layout, amps))
    }

    /// Renames modes in place of position; `renames` maps old label to new.
    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<Self, FockError> {
        let mut labels: Vec<String> = self.layout.modes.clone();
        for (old, new) in renames {
            let k = self.layout.index_of(old)?;
            labels[k] = new.to_string();
        }
        let layout = ModeLayout::new(labels, self.layout.cutoff)?;
        Ok(Self {
            layout,
            amps: self.amps.clone(),
        })
    }

    /// Re-expresses the state on a larger cutoff (indices change, amplitudes do not).
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self, FockError> {
        if cutoff < self.layout.cutoff {
            if let Some((occ, _)) = self.iter().find(|(o, _)| o.iter().any(|&n| n as usize > cutoff)) {
                return Err(FockError::InvalidOccupation {
                    occupation: occ.iter().map(|&n| n as usize).collect(),
                    cutoff,
                });
            }
        }
        let layout = self.layout.with_cutoff(cutoff)?;
        let amps = self
            .amps
            .iter()
            .map(|(&idx, &a)| (layout.encode(&self.layout.decode(idx)), a))
            .collect();
        Ok(Self::from_raw(layout, amps))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, FockError> {
        self.same_layout(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &self.amps {
            if let Some(b) = other.amps.get(k) {
                acc += a.conj() * b;
            }
        }
        Ok(acc)
    }

    /// `|<s1|s2>|^2` with both inputs normalized internally.
    pub fn fidelity(&self, other: &Self) -> Result<f64, FockError> {
        let ov = self.inner(other)?;
        let n = self.norm_sqr() * other.norm_sqr();
        if n == 0.0 {
            return Err(FockError::ZeroNorm);
        }
        Ok((ov.norm_sqr() / n).clamp(0.0, 1.0))
    }

    /// Contracts the modes of `target` against `<target|`, leaving an
    /// unnormalized state over the remaining modes.
    pub fn project_onto(&self, target: &Self) -> Result<Self, FockError> {
        let sel = target
            .layout
            .modes()
            .iter()
            .map(|m| self.layout.index_of(m))
            .collect::<Result<Vec<_>, _>>()?;
        let rest: Vec<usize> = (0..self.layout.len()).filter(|k| !sel.contains(k)).collect();
        if rest.is_empty() {
            return Err(FockError::LayoutMismatch(
                "projection would consume every mode".into(),
            ));
        }
        let rest_layout = ModeLayout::new(
            rest.iter().map(|&k| self.layout.modes[k].clone()),
            self.layout.cutoff,
        )?;
        let mut occ = vec![0u8; self.layout.len()];
        let mut sub = vec![0u8; sel.len()];
        let mut rest_occ = vec![0u8; rest.len()];
        let mut amps = BTreeMap::new();
        for (&idx, &a) in &self.amps {
            self.layout.decode_into(idx, &mut occ);
            for (s, &k) in sub.iter_mut().zip(&sel) {
                *s = occ[k];
            }
            if sub.iter().any(|&n| n as usize > target.layout.cutoff) {
                continue;
            }
            let Some(t) = target.amps.get(&target.layout.encode(&sub)) else {
                continue;
            };
            for (r, &k) in rest_occ.iter_mut().zip(&rest) {
                *r = occ[k];
            }
            *amps
                .entry(rest_layout.encode(&rest_occ))
                .or_insert(Complex64::new(0.0, 0.0)) += t.conj() * a;
        }
        Ok(Self::from_raw(rest_layout, amps))
    }

    /// Multiplies the global phase so the largest-magnitude amplitude is
    /// real and positive (ties broken by basis order).
    pub fn fix_global_phase(&self) -> Self {
        let mut best: Option<Complex64> = None;
        for a in self.amps.values() {
            if best.is_none_or(|b| a.norm_sqr() > b.norm_sqr() * (1.0 + 1e-12)) {
                best = Some(*a);
            }
        }
        match best {
            Some(b) if b.norm() > 0.0 => self.scale(b.conj() / b.norm()),
            _ => self.clone(),
        }
    }

    /// Maximum componentwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, FockError> {
        self.same_layout(other)?;
        let keys: BTreeSet<u64> = self.amps.keys().chain(other.amps.keys()).copied().collect();
        Ok(keys
            .into_iter()
            .map(|k| {
                let a = self.amps.get(&k).copied().unwrap_or_default();
                let b = other.amps.get(&k).copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max))
    }

    /// Per-component probability distribution, keyed by occupation.
    pub fn probabilities(&self) -> Vec<(Vec<u8>, f64)> {
        self.iter().map(|(o, a)| (o, a.norm_sqr())).collect()
    }

    /// Text form: a header with labels and cutoff, then one
    /// `n1,...,nm<TAB>re<TAB>im` line per stored amplitude.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# modes={} cutoff={}\n",
            self.layout.modes.join(","),
            self.layout.cutoff
        );
        for (occ, a) in self.iter() {
            let occ: Vec<String> = occ.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{}",
                occ.join(","),
                crate::io::fmt_f64(a.re),
                crate::io::fmt_f64(a.im)
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, FockError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(FockError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header.trim().strip_prefix('#').unwrap_or(header).trim();
        let mut modes = None;
        let mut cutoff = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("modes=") {
                modes = Some(v.split(',').map(str::to_string).collect::<Vec<_>>());
            } else if let Some(v) = tok.strip_prefix("cutoff=") {
                cutoff = v.parse::<usize>().ok();
            }
        }
        let (Some(modes), Some(cutoff)) = (modes, cutoff) else {
            return Err(FockError::Parse {
                line: 1,
                msg: "header needs `modes=` and `cutoff=`".into(),
            });
        };
        let layout = ModeLayout::new(modes, cutoff)?;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let err = |msg: &str| FockError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut cols = line.split('\t');
            let occ = cols
                .next()
                .ok_or_else(|| err("missing occupation"))?
                .split(',')
                .map(|n| n.trim().parse::<usize>().map_err(|_| err("bad occupation")))
                .collect::<Result<Vec<_>, _>>()?;
            let re = cols
                .next()
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| err("bad real part"))?;
            let im = cols
                .next()
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| err("bad imaginary part"))?;
            entries.push((occ, Complex64::new(re, im)));
        }
        Self::from_amplitudes(&layout, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_mode(cutoff: usize) -> ModeLayout {
        ModeLayout::new(["SWa", "SWb"], cutoff).unwrap()
    }

    #[test]
    fn vacuum_has_unit_amplitude_at_origin() {
        let v = FockVector::vacuum(&two_mode(2));
        assert_eq!(v.amplitude(&[0, 0]), c(1.0));
        assert_eq!(v.amplitude(&[1, 0]), c(0.0));
        assert_eq!(v.support(), 1);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_tensor_vacuum_is_vacuum() {
        let a = FockVector::vacuum(&ModeLayout::new(["SWa"], 2).unwrap());
        let b = FockVector::vacuum(&ModeLayout::new(["SWb"], 2).unwrap());
        assert_eq!(a.tensor(&b).unwrap(), FockVector::vacuum(&two_mode(2)));
    }

    #[test]
    fn layout_rejects_duplicates_and_zero_cutoff() {
        assert_eq!(
            ModeLayout::new(["a", "a"], 1).unwrap_err(),
            FockError::DuplicateMode("a".into())
        );
        assert_eq!(ModeLayout::new(["a"], 0).unwrap_err(), FockError::InvalidCutoff(0));
        assert!(ModeLayout::new(Vec::<String>::new(), 1).is_err());
    }

    #[test]
    fn create_follows_bosonic_raising() {
        let l = two_mode(2);
        let (one, loss) = FockVector::vacuum(&l).create("SWa").unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(one.amplitude(&[1, 0]), c(1.0));
        let (two, _) = one.create("SWa").unwrap();
        assert!((two.amplitude(&[2, 0]) - c(2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn create_at_cutoff_reports_prior_weight() {
        let l = two_mode(2);
        let s = FockVector::basis(&l, &[2, 0]).unwrap().scale(c(0.6));
        let (raised, loss) = s.create("SWa").unwrap();
        assert_eq!(raised.support(), 0);
        assert!((loss - 0.36).abs() < 1e-15);
    }

    #[test]
    fn create_unknown_mode_errors() {
        let v = FockVector::vacuum(&two_mode(1));
        assert_eq!(v.create("S_H").unwrap_err(), FockError::UnknownMode("S_H".into()));
    }

    #[test]
    fn tensor_places_modes_in_order() {
        let a = FockVector::vacuum(&ModeLayout::new(["SWa"], 1).unwrap());
        let b = FockVector::basis(&ModeLayout::new(["SWb"], 1).unwrap(), &[1]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.layout().modes(), &["SWa".to_string(), "SWb".to_string()]);
        assert_eq!(ab.amplitude(&[0, 1]), c(1.0));
    }

    #[test]
    fn tensor_rejects_overlap() {
        let a = FockVector::vacuum(&two_mode(1));
        assert_eq!(
            a.tensor(&a).unwrap_err(),
            FockError::OverlappingModes("SWa".into())
        );
    }

    #[test]
    fn fidelity_examples() {
        let l = two_mode(1);
        let s10 = FockVector::basis(&l, &[1, 0]).unwrap();
        let s01 = FockVector::basis(&l, &[0, 1]).unwrap();
        let plus = s10.add(&s01).unwrap().normalize().unwrap();
        assert!((s10.fidelity(&s10).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s10.fidelity(&s01).unwrap(), 0.0);
        assert!((plus.fidelity(&s10).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_rejects_mismatched_layouts() {
        let a = FockVector::vacuum(&two_mode(1));
        let b = FockVector::vacuum(&two_mode(2));
        assert!(matches!(a.fidelity(&b), Err(FockError::LayoutMismatch(_))));
    }

    #[test]
    fn normalize_zero_vector_errors() {
        assert_eq!(
            FockVector::zero(&two_mode(1)).normalize().unwrap_err(),
            FockError::ZeroNorm
        );
    }

    #[test]
    fn reorder_permutes_occupations() {
        let l = ModeLayout::new(["x", "y", "z"], 2).unwrap();
        let s = FockVector::basis(&l, &[2, 0, 1]).unwrap();
        let r = s.reorder(&["z", "x", "y"]).unwrap();
        assert_eq!(r.amplitude(&[1, 2, 0]), c(1.0));
    }

    #[test]
    fn project_onto_contracts_selected_modes() {
        let l = ModeLayout::new(["SWa", "S_H"], 1).unwrap();
        let s = FockVector::from_amplitudes(&l, [(vec![0, 0], c(0.6)), (vec![1, 1], c(0.8))]).unwrap();
        let one = FockVector::basis(&ModeLayout::new(["S_H"], 1).unwrap(), &[1]).unwrap();
        let cond = s.project_onto(&one).unwrap();
        assert_eq!(cond.layout().modes(), &["SWa".to_string()]);
        assert!((cond.amplitude(&[1]) - c(0.8)).norm() < 1e-15);
        assert_eq!(cond.support(), 1);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let l = ModeLayout::new(["SWa", "SWb", "S_H"], 3).unwrap();
        let s = FockVector::from_amplitudes(
            &l,
            [
                (vec![0, 0, 0], Complex64::new(0.1, -0.2)),
                (vec![3, 1, 2], Complex64::new(1.0 / 3.0, std::f64::consts::PI)),
            ],
        )
        .unwrap();
        let text = s.to_text();
        assert!(text.starts_with("# modes=SWa,SWb,S_H cutoff=3\n"));
        assert_eq!(FockVector::from_text(&text).unwrap(), s);
    }

    #[test]
    fn from_text_reports_line_numbers() {
        let err = FockVector::from_text("# modes=a cutoff=1\n0\t1\t0\nx\t1\t0\n").unwrap_err();
        assert_eq!(
            err,
            FockError::Parse {
                line: 3,
                msg: "bad occupation".into()
            }
        );
    }

    #[test]
    fn global_phase_fix_makes_peak_real() {
        let l = two_mode(1);
        let s = FockVector::from_amplitudes(
            &l,
            [
                (vec![1, 0], Complex64::new(0.0, 0.8)),
                (vec![0, 1], Complex64::new(0.0, -0.6)),
            ],
        )
        .unwrap()
        .fix_global_phase();
        assert!((s.amplitude(&[1, 0]) - c(0.8)).norm() < 1e-15);
        assert!((s.amplitude(&[0, 1]) - c(-0.6)).norm() < 1e-15);
    }
}
