//! Exact bosonic Fock states over labeled optical modes, and the passive
//! elements used by the circuit: beam splitter, polarization Hadamard,
//! polarizing beam splitter and loss.
//!
//! Loss is a beam splitter onto a fresh environment mode, so every state stays
//! pure and detectors later trace the environment out.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::math::{binomial, factorial};

/// Largest number of modes a single state may register.
pub const MAX_MODES: usize = 32;

/// Default photon-number cap. Enough for one source pair plus one QND pair.
pub const DEFAULT_MAX_PHOTONS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

/// A spatial label plus a polarization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId {
    pub spatial: String,
    pub polarization: Polarization,
    /// Environment modes absorb lost photons and are never detected.
    pub environment: bool,
}

impl ModeId {
    pub fn signal(spatial: impl Into<String>, polarization: Polarization) -> Self {
        ModeId { spatial: spatial.into(), polarization, environment: false }
    }

    pub fn environment(spatial: impl Into<String>, polarization: Polarization) -> Self {
        ModeId { spatial: spatial.into(), polarization, environment: true }
    }

    fn same_slot(&self, other: &ModeId) -> bool {
        self.spatial == other.spatial && self.polarization == other.polarization
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.environment {
            write!(f, "env:{}/{}", self.spatial, self.polarization)
        } else {
            write!(f, "{}/{}", self.spatial, self.polarization)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhotonicsError {
    #[error("pair ratio must be non-negative, got {0}")]
    NegativeRatio(f64),
    #[error("unknown mode {0}")]
    UnknownMode(ModeId),
    #[error("unknown spatial label `{0}`")]
    UnknownSpatial(String),
    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(ModeId),
    #[error("transmittance {0} is outside [0, 1]")]
    TransmittanceOutOfRange(f64),
    #[error("mode {0} already exists")]
    LabelCollision(ModeId),
    #[error("a state may hold at most {MAX_MODES} modes")]
    TooManyModes,
    #[error("basis state holds {found} photons, cap is {cap}")]
    PhotonCapExceeded { found: u32, cap: u32 },
}

/// Occupation numbers indexed by the owning state's mode table.
///
/// Unregistered slots are always zero, so the zero-count entries of a basis
/// state are implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockBasisState {
    occ: [u8; MAX_MODES],
}

impl FockBasisState {
    pub const VACUUM: FockBasisState = FockBasisState { occ: [0; MAX_MODES] };

    pub fn count(&self, slot: usize) -> u32 {
        self.occ[slot] as u32
    }

    pub fn total(&self) -> u32 {
        self.occ.iter().map(|&n| n as u32).sum()
    }
}

/// Beam-splitter sign conventions. All detection probabilities are
/// independent of the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamSplitterConvention {
    /// `m1 -> (m1 + m2)/sqrt2`, `m2 -> (m1 - m2)/sqrt2`.
    #[default]
    Real,
    /// `m1 -> (m1 - m2)/sqrt2`, `m2 -> (m1 + m2)/sqrt2`.
    Conjugate,
    /// `m1 -> (m1 + i m2)/sqrt2`, `m2 -> (i m1 + m2)/sqrt2`.
    Symmetric,
}

impl BeamSplitterConvention {
    fn matrix(self) -> [[Complex64; 2]; 2] {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let p = Complex64::new(h, 0.0);
        let n = Complex64::new(-h, 0.0);
        let i = Complex64::new(0.0, h);
        match self {
            BeamSplitterConvention::Real => [[p, p], [p, n]],
            BeamSplitterConvention::Conjugate => [[p, n], [p, p]],
            BeamSplitterConvention::Symmetric => [[p, i], [i, p]],
        }
    }
}

/// Sparse superposition over occupation-number basis states.
#[derive(Debug, Clone)]
pub struct FockState {
    modes: Vec<ModeId>,
    amplitudes: BTreeMap<FockBasisState, Complex64>,
    max_photons: u32,
    prune_threshold: f64,
    loss_counter: u32,
}

impl Default for FockState {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl FockState {
    /// The vacuum with no registered modes.
    pub fn vacuum() -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(FockBasisState::VACUUM, Complex64::new(1.0, 0.0));
        FockState {
            modes: Vec::new(),
            amplitudes,
            max_photons: DEFAULT_MAX_PHOTONS,
            prune_threshold: 0.0,
            loss_counter: 0,
        }
    }

    /// Raises or lowers the photon cap. Fails if an existing basis state
    /// already exceeds it.
    pub fn with_max_photons(mut self, cap: u32) -> Result<Self, PhotonicsError> {
        self.max_photons = cap;
        self.check_cap()?;
        Ok(self)
    }

    /// Amplitudes with modulus at or below `threshold` are dropped after each
    /// element. The default of zero keeps everything except exact zeros.
    pub fn with_prune_threshold(mut self, threshold: f64) -> Self {
        self.prune_threshold = threshold.max(0.0);
        self
    }

    pub fn max_photons(&self) -> u32 {
        self.max_photons
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockBasisState, &Complex64)> {
        self.amplitudes.iter()
    }

    /// Squared norm.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Slot of `mode` in the mode table.
    pub fn slot(&self, mode: &ModeId) -> Option<usize> {
        self.modes.iter().position(|m| m.same_slot(mode))
    }

    /// Non-zero occupations of `basis`, by mode.
    pub fn occupations<'a>(&'a self, basis: &'a FockBasisState) -> impl Iterator<Item = (&'a ModeId, u32)> + 'a {
        self.modes
            .iter()
            .enumerate()
            .filter(move |(k, _)| basis.occ[*k] > 0)
            .map(move |(k, m)| (m, basis.occ[k] as u32))
    }

    /// Amplitude of the basis state with the given occupations (every other
    /// mode empty). Unknown modes with a non-zero count give zero.
    pub fn amplitude(&self, occupations: &[(&ModeId, u32)]) -> Complex64 {
        let mut key = FockBasisState::VACUUM;
        for (mode, n) in occupations {
            if *n == 0 {
                continue;
            }
            match self.slot(mode) {
                Some(k) => key.occ[k] = *n as u8,
                None => return Complex64::new(0.0, 0.0),
            }
        }
        self.amplitudes.get(&key).copied().unwrap_or_default()
    }

    /// Probability that exactly the given occupations are present and every
    /// other mode is empty.
    pub fn probability(&self, occupations: &[(&ModeId, u32)]) -> f64 {
        self.amplitude(occupations).norm_sqr()
    }

    /// Distribution of the photon number in one mode, marginalizing all others.
    pub fn photon_number_distribution(&self, mode: &ModeId) -> Result<Vec<f64>, PhotonicsError> {
        let k = self.slot(mode).ok_or_else(|| PhotonicsError::UnknownMode(mode.clone()))?;
        let mut dist = alloc::vec![0.0; self.max_photons as usize + 1];
        for (b, a) in &self.amplitudes {
            dist[b.occ[k] as usize] += a.norm_sqr();
        }
        Ok(dist)
    }

    fn register(&mut self, mode: ModeId) -> Result<usize, PhotonicsError> {
        if let Some(k) = self.slot(&mode) {
            if self.modes[k].environment != mode.environment {
                return Err(PhotonicsError::LabelCollision(mode));
            }
            return Ok(k);
        }
        if self.modes.len() == MAX_MODES {
            return Err(PhotonicsError::TooManyModes);
        }
        self.modes.push(mode);
        Ok(self.modes.len() - 1)
    }

    fn require(&self, mode: &ModeId) -> Result<usize, PhotonicsError> {
        self.slot(mode).ok_or_else(|| PhotonicsError::UnknownMode(mode.clone()))
    }

    fn has_spatial(&self, spatial: &str) -> bool {
        self.modes.iter().any(|m| m.spatial == spatial)
    }

    fn check_cap(&self) -> Result<(), PhotonicsError> {
        for b in self.amplitudes.keys() {
            let found = b.total();
            if found > self.max_photons {
                return Err(PhotonicsError::PhotonCapExceeded { found, cap: self.max_photons });
            }
        }
        Ok(())
    }

    fn with_amplitudes(&self, amplitudes: BTreeMap<FockBasisState, Complex64>) -> FockState {
        let mut out = FockState {
            modes: self.modes.clone(),
            amplitudes,
            max_photons: self.max_photons,
            prune_threshold: self.prune_threshold,
            loss_counter: self.loss_counter,
        };
        out.amplitudes.retain(|_, a| {
            if out.prune_threshold > 0.0 {
                a.norm_sqr() > out.prune_threshold * out.prune_threshold
            } else {
                a.re != 0.0 || a.im != 0.0
            }
        });
        out
    }

    /// Applies the creation-operator map
    /// `m_i -> u[0][0] m_i + u[0][1] m_j`, `m_j -> u[1][0] m_i + u[1][1] m_j`.
    fn two_mode(&self, i: usize, j: usize, u: [[Complex64; 2]; 2]) -> FockState {
        let mut out: BTreeMap<FockBasisState, Complex64> = BTreeMap::new();
        let mut coeff = [Complex64::new(0.0, 0.0); 2 * u8::MAX as usize + 1];
        for (basis, amp) in &self.amplitudes {
            let n1 = basis.occ[i] as u32;
            let n2 = basis.occ[j] as u32;
            if n1 == 0 && n2 == 0 {
                *out.entry(*basis).or_default() += *amp;
                continue;
            }
            let total = (n1 + n2) as usize;
            coeff[..=total].fill(Complex64::new(0.0, 0.0));
            for k1 in 0..=n1 {
                let a = u[0][0].powu(k1) * u[0][1].powu(n1 - k1) * binomial(n1 as i64, k1 as i64) as f64;
                for k2 in 0..=n2 {
                    let b = u[1][0].powu(k2) * u[1][1].powu(n2 - k2) * binomial(n2 as i64, k2 as i64) as f64;
                    coeff[(k1 + k2) as usize] += a * b;
                }
            }
            let norm_in = (factorial(n1 as i64) * factorial(n2 as i64)) as f64;
            for (o1, c) in coeff[..=total].iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let o2 = total - o1;
                let scale = libm::sqrt((factorial(o1 as i64) * factorial(o2 as i64)) as f64 / norm_in);
                let mut key = *basis;
                key.occ[i] = o1 as u8;
                key.occ[j] = o2 as u8;
                *out.entry(key).or_default() += *amp * *c * scale;
            }
        }
        self.with_amplitudes(out)
    }

    fn fresh_loss_mode(&mut self, mode: &ModeId) -> Result<usize, PhotonicsError> {
        loop {
            self.loss_counter += 1;
            let label = format!("{}~loss{}", mode.spatial, self.loss_counter);
            let candidate = ModeId::environment(label, mode.polarization);
            if self.slot(&candidate).is_none() {
                return self.register(candidate);
            }
        }
    }
}

/// Pair source `(r a_H c_H + a_V c_V)|0> / sqrt(1 + r^2)` on the spatial
/// labels `emitted` (a) and `kept` (c).
///
/// ```
/// use amdi_core::photonics::{source_state, ModeId, Polarization::*};
/// let s = source_state(2.0, "a", "c").unwrap();
/// let p = s.probability(&[(&ModeId::signal("a", H), 1), (&ModeId::signal("c", H), 1)]);
/// assert!((p - 0.8).abs() < 1e-15);
/// ```
pub fn source_state(r: f64, emitted: &str, kept: &str) -> Result<FockState, PhotonicsError> {
    if !(r >= 0.0) {
        return Err(PhotonicsError::NegativeRatio(r));
    }
    if emitted == kept {
        return Err(PhotonicsError::LabelCollision(ModeId::signal(kept, Polarization::H)));
    }
    let mut state = FockState::vacuum();
    state.amplitudes.clear();
    let norm = 1.0 / libm::sqrt(1.0 + r * r);
    for pol in Polarization::BOTH {
        let a = state.register(ModeId::signal(emitted, pol))?;
        let c = state.register(ModeId::signal(kept, pol))?;
        let amp = match pol {
            Polarization::H => r * norm,
            Polarization::V => norm,
        };
        let mut key = FockBasisState::VACUUM;
        key.occ[a] = 1;
        key.occ[c] = 1;
        if amp != 0.0 {
            state.amplitudes.insert(key, Complex64::new(amp, 0.0));
        }
    }
    Ok(state)
}

/// Single photon in `mode`.
pub fn single_photon(mode: ModeId) -> Result<FockState, PhotonicsError> {
    let mut state = FockState::vacuum();
    let k = state.register(mode)?;
    let mut key = FockBasisState::VACUUM;
    key.occ[k] = 1;
    state.amplitudes.clear();
    state.amplitudes.insert(key, Complex64::new(1.0, 0.0));
    Ok(state)
}

/// Builds a state from explicit basis amplitudes over the listed modes.
pub fn state_from_terms(modes: &[ModeId], terms: &[(&[u32], Complex64)]) -> Result<FockState, PhotonicsError> {
    let mut state = FockState::vacuum();
    state.amplitudes.clear();
    let mut slots = Vec::with_capacity(modes.len());
    for m in modes {
        if state.slot(m).is_some() {
            return Err(PhotonicsError::LabelCollision(m.clone()));
        }
        slots.push(state.register(m.clone())?);
    }
    for (counts, amp) in terms {
        let mut key = FockBasisState::VACUUM;
        for (slot, n) in slots.iter().zip(counts.iter()) {
            key.occ[*slot] = *n as u8;
        }
        *state.amplitudes.entry(key).or_default() += *amp;
    }
    state.max_photons = state.max_photons.max(state.amplitudes.keys().map(|b| b.total()).max().unwrap_or(0));
    Ok(state.with_amplitudes(state.amplitudes.clone()))
}

/// 50:50 beam splitter between two modes with the default convention.
pub fn apply_beam_splitter(state: &FockState, m1: &ModeId, m2: &ModeId) -> Result<FockState, PhotonicsError> {
    apply_beam_splitter_with(state, m1, m2, BeamSplitterConvention::Real)
}

pub fn apply_beam_splitter_with(
    state: &FockState,
    m1: &ModeId,
    m2: &ModeId,
    convention: BeamSplitterConvention,
) -> Result<FockState, PhotonicsError> {
    if m1.same_slot(m2) {
        return Err(PhotonicsError::SameMode(m1.clone()));
    }
    let i = state.require(m1)?;
    let j = state.require(m2)?;
    Ok(state.two_mode(i, j, convention.matrix()))
}

/// Polarization-insensitive 50:50 beam splitter between two spatial paths,
/// applied to the H pair and then the V pair.
pub fn apply_spatial_beam_splitter(
    state: &FockState,
    s1: &str,
    s2: &str,
    convention: BeamSplitterConvention,
) -> Result<FockState, PhotonicsError> {
    let mut out = state.clone();
    for pol in Polarization::BOTH {
        out = apply_beam_splitter_with(&out, &ModeId::signal(s1, pol), &ModeId::signal(s2, pol), convention)?;
    }
    Ok(out)
}

/// Polarization Hadamard: `H -> (H + V)/sqrt2`, `V -> (H - V)/sqrt2`.
pub fn apply_hadamard_pol(state: &FockState, spatial: &str) -> Result<FockState, PhotonicsError> {
    if !state.has_spatial(spatial) {
        return Err(PhotonicsError::UnknownSpatial(spatial.into()));
    }
    let mut s = state.clone();
    let h = s.register(ModeId::signal(spatial, Polarization::H))?;
    let v = s.register(ModeId::signal(spatial, Polarization::V))?;
    Ok(s.two_mode(h, v, BeamSplitterConvention::Real.matrix()))
}

/// Loss of transmittance `t` on `mode`: a beam splitter with amplitudes
/// `sqrt(t)` and `sqrt(1 - t)` onto a fresh environment mode.
pub fn apply_loss(state: &FockState, mode: &ModeId, transmittance: f64) -> Result<FockState, PhotonicsError> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(PhotonicsError::TransmittanceOutOfRange(transmittance));
    }
    let i = state.require(mode)?;
    if transmittance == 1.0 {
        return Ok(state.clone());
    }
    let mut s = state.clone();
    let env = s.fresh_loss_mode(mode)?;
    let t = libm::sqrt(transmittance);
    let l = libm::sqrt(1.0 - transmittance);
    let u = [[Complex64::new(t, 0.0), Complex64::new(l, 0.0)], [Complex64::new(l, 0.0), Complex64::new(-t, 0.0)]];
    Ok(s.two_mode(i, env, u))
}

/// Same loss on both polarizations of a spatial path.
pub fn apply_spatial_loss(state: &FockState, spatial: &str, transmittance: f64) -> Result<FockState, PhotonicsError> {
    let mut out = state.clone();
    for pol in Polarization::BOTH {
        out = apply_loss(&out, &ModeId::signal(spatial, pol), transmittance)?;
    }
    Ok(out)
}

/// Polarizing beam splitter: the H component of `spatial_in` moves to
/// `spatial_out_h`, the V component to `spatial_out_v`.
pub fn apply_pbs(
    state: &FockState,
    spatial_in: &str,
    spatial_out_h: &str,
    spatial_out_v: &str,
) -> Result<FockState, PhotonicsError> {
    if !state.has_spatial(spatial_in) {
        return Err(PhotonicsError::UnknownSpatial(spatial_in.into()));
    }
    let mut s = state.clone();
    for (pol, target) in [(Polarization::H, spatial_out_h), (Polarization::V, spatial_out_v)] {
        let out_mode = ModeId::signal(target, pol);
        if target != spatial_in && s.slot(&out_mode).is_some() {
            return Err(PhotonicsError::LabelCollision(out_mode));
        }
        let k = s.register(ModeId::signal(spatial_in, pol))?;
        s.modes[k] = out_mode;
    }
    Ok(s)
}

/// Product state. The two mode tables must be disjoint.
pub fn tensor(a: &FockState, b: &FockState) -> Result<FockState, PhotonicsError> {
    let mut out = a.clone();
    out.max_photons = a.max_photons.max(b.max_photons);
    out.loss_counter = a.loss_counter.max(b.loss_counter);
    let mut map = Vec::with_capacity(b.modes.len());
    for m in &b.modes {
        if out.slot(m).is_some() {
            return Err(PhotonicsError::LabelCollision(m.clone()));
        }
        map.push(out.register(m.clone())?);
    }
    let mut amplitudes = BTreeMap::new();
    for (ka, va) in &a.amplitudes {
        for (kb, vb) in &b.amplitudes {
            let mut key = *ka;
            for (src, dst) in map.iter().enumerate() {
                key.occ[*dst] = kb.occ[src];
            }
            amplitudes.insert(key, va * vb);
        }
    }
    let out = out.with_amplitudes(amplitudes);
    out.check_cap()?;
    Ok(out)
}

/// Adds `mode` to the table (empty) if it is not present yet.
pub fn declare_mode(state: &FockState, mode: ModeId) -> Result<FockState, PhotonicsError> {
    let mut s = state.clone();
    s.register(mode)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::Polarization::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::vec;

    fn m(s: &str, p: Polarization) -> ModeId {
        ModeId::signal(s, p)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn source_r1_has_equal_amplitudes() {
        let s = source_state(1.0, "a", "c").unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitude(&[(&m("a", H), 1), (&m("c", H), 1)]).re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(&[(&m("a", V), 1), (&m("c", V), 1)]).re, h, epsilon = 1e-15);
        assert_eq!(s.len(), 2);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn source_r0_is_pure_vertical_pair() {
        let s = source_state(0.0, "a", "c").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(&[(&m("a", V), 1), (&m("c", V), 1)]), c(1.0));
    }

    #[test]
    fn source_r2_normalization() {
        let s = source_state(2.0, "a", "c").unwrap();
        let sq5 = 5f64.sqrt();
        assert_abs_diff_eq!(s.amplitude(&[(&m("a", H), 1), (&m("c", H), 1)]).re, 2.0 / sq5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(&[(&m("a", V), 1), (&m("c", V), 1)]).re, 1.0 / sq5, epsilon = 1e-15);
    }

    #[test]
    fn source_rejects_negative_ratio() {
        assert_eq!(source_state(-0.1, "a", "c").unwrap_err(), PhotonicsError::NegativeRatio(-0.1));
    }

    #[test]
    fn beam_splitter_single_photon() {
        let (a, b) = (m("a", H), m("b", H));
        let s = state_from_terms(&[a.clone(), b.clone()], &[(&[1, 0], c(1.0))]).unwrap();
        let out = apply_beam_splitter(&s, &a, &b).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(out.amplitude(&[(&a, 1)]).re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[(&b, 1)]).re, h, epsilon = 1e-15);
    }

    #[test]
    fn hong_ou_mandel() {
        let (a, b) = (m("a", H), m("b", H));
        let s = state_from_terms(&[a.clone(), b.clone()], &[(&[1, 1], c(1.0))]).unwrap();
        let out = apply_beam_splitter(&s, &a, &b).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(out.len(), 2);
        assert_abs_diff_eq!(out.amplitude(&[(&a, 2)]).re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[(&b, 2)]).re, -h, epsilon = 1e-15);
        assert_eq!(out.amplitude(&[(&a, 1), (&b, 1)]), c(0.0));
    }

    #[test]
    fn beam_splitter_on_vacuum() {
        let (a, b) = (m("a", H), m("b", H));
        let s = declare_mode(&declare_mode(&FockState::vacuum(), a.clone()).unwrap(), b.clone()).unwrap();
        let out = apply_beam_splitter(&s, &a, &b).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.amplitude(&[]), c(1.0));
    }

    #[test]
    fn beam_splitter_errors() {
        let s = source_state(1.0, "a", "c").unwrap();
        assert!(matches!(apply_beam_splitter(&s, &m("a", H), &m("a", H)), Err(PhotonicsError::SameMode(_))));
        assert!(matches!(apply_beam_splitter(&s, &m("a", H), &m("z", H)), Err(PhotonicsError::UnknownMode(_))));
    }

    #[test]
    fn beam_splitter_twice_swaps_up_to_sign() {
        // With the Real convention BS^2 is the identity; with Conjugate it is
        // the mode swap with a sign on one arm.
        let (a, b) = (m("a", H), m("b", H));
        let s = state_from_terms(&[a.clone(), b.clone()], &[(&[2, 0], c(0.6)), (&[1, 1], c(0.8))]).unwrap();
        let real = apply_beam_splitter(&apply_beam_splitter(&s, &a, &b).unwrap(), &a, &b).unwrap();
        assert_abs_diff_eq!(real.amplitude(&[(&a, 2)]).re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(real.amplitude(&[(&a, 1), (&b, 1)]).re, 0.8, epsilon = 1e-15);
        let conj = BeamSplitterConvention::Conjugate;
        let once = apply_beam_splitter_with(&s, &a, &b, conj).unwrap();
        let twice = apply_beam_splitter_with(&once, &a, &b, conj).unwrap();
        // m1 -> -m2, m2 -> m1.
        assert_abs_diff_eq!(twice.amplitude(&[(&b, 2)]).re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(twice.amplitude(&[(&a, 1), (&b, 1)]).re, -0.8, epsilon = 1e-15);
    }

    #[test]
    fn hadamard_on_single_photon() {
        let s = single_photon(m("a", H)).unwrap();
        let s = declare_mode(&s, m("a", V)).unwrap();
        let out = apply_hadamard_pol(&s, "a").unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(out.amplitude(&[(&m("a", H), 1)]).re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[(&m("a", V), 1)]).re, h, epsilon = 1e-15);
        let back = apply_hadamard_pol(&out, "a").unwrap();
        assert_abs_diff_eq!(back.amplitude(&[(&m("a", H), 1)]).re, 1.0, epsilon = 1e-12);
        assert!(back.amplitude(&[(&m("a", V), 1)]).norm() < 1e-12);
        assert!(matches!(apply_hadamard_pol(&s, "zz"), Err(PhotonicsError::UnknownSpatial(_))));
    }

    fn bell(kind: &str) -> FockState {
        let modes = [m("a", H), m("a", V), m("b", H), m("b", V)];
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let (hv, vh, hh, vv): (&[u32], &[u32], &[u32], &[u32]) =
            (&[1, 0, 0, 1], &[0, 1, 1, 0], &[1, 0, 1, 0], &[0, 1, 0, 1]);
        let terms: vec::Vec<(&[u32], Complex64)> = match kind {
            "psi+" => vec![(hv, c(h)), (vh, c(h))],
            "psi-" => vec![(hv, c(h)), (vh, c(-h))],
            "phi+" => vec![(hh, c(h)), (vv, c(h))],
            _ => vec![(hh, c(h)), (vv, c(-h))],
        };
        state_from_terms(&modes, &terms).unwrap()
    }

    fn hh(s: &FockState) -> FockState {
        apply_hadamard_pol(&apply_hadamard_pol(s, "a").unwrap(), "b").unwrap()
    }

    fn assert_same(a: &FockState, b: &FockState, sign: f64) {
        let modes = [m("a", H), m("a", V), m("b", H), m("b", V)];
        for pattern in [[1, 0, 0, 1], [0, 1, 1, 0], [1, 0, 1, 0], [0, 1, 0, 1]] {
            let occ: vec::Vec<(&ModeId, u32)> = modes.iter().zip(pattern).collect();
            let (x, y) = (a.amplitude(&occ), b.amplitude(&occ));
            assert!((x - y * sign).norm() < 1e-12, "{pattern:?}: {x} vs {y}");
        }
        assert_abs_diff_eq!(a.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_pair_on_bell_basis() {
        assert_same(&hh(&bell("psi+")), &bell("phi-"), 1.0);
        assert_same(&hh(&bell("phi-")), &bell("psi+"), 1.0);
        assert_same(&hh(&bell("psi-")), &bell("psi-"), -1.0);
        assert_same(&hh(&bell("phi+")), &bell("phi+"), 1.0);
    }

    #[test]
    fn loss_limits() {
        let s = single_photon(m("a", H)).unwrap();
        let same = apply_loss(&s, &m("a", H), 1.0).unwrap();
        assert_eq!(same.len(), 1);
        assert_eq!(same.modes().len(), 1);
        let lossy = apply_loss(&s, &m("a", H), 0.3).unwrap();
        assert_abs_diff_eq!(lossy.probability(&[(&m("a", H), 1)]), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(lossy.norm_sqr(), 1.0, epsilon = 1e-15);
        assert!(lossy.modes().iter().any(|m| m.environment));
        assert!(matches!(apply_loss(&s, &m("a", H), 1.5), Err(PhotonicsError::TransmittanceOutOfRange(_))));
        assert!(matches!(apply_loss(&s, &m("a", H), -0.1), Err(PhotonicsError::TransmittanceOutOfRange(_))));
    }

    #[test]
    fn two_photon_survival_is_t_squared() {
        let a = m("a", H);
        let s = state_from_terms(core::slice::from_ref(&a), &[(&[2], c(1.0))]).unwrap();
        let t = 0.37;
        let out = apply_loss(&s, &a, t).unwrap();
        let dist = out.photon_number_distribution(&a).unwrap();
        assert_abs_diff_eq!(dist[2], t * t, epsilon = 1e-15);
        assert_abs_diff_eq!(dist[1], 2.0 * t * (1.0 - t), epsilon = 1e-15);
    }

    #[test]
    fn pbs_routes_polarizations() {
        let s = source_state(1.0, "a", "c").unwrap();
        let out = apply_pbs(&s, "a", "a_h", "a_v").unwrap();
        assert_abs_diff_eq!(out.probability(&[(&m("a_h", H), 1), (&m("c", H), 1)]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.probability(&[(&m("a_v", V), 1), (&m("c", V), 1)]), 0.5, epsilon = 1e-15);
        assert!(out.slot(&m("a", H)).is_none());
        let diag =
            apply_hadamard_pol(&declare_mode(&single_photon(m("x", H)).unwrap(), m("x", V)).unwrap(), "x").unwrap();
        let split = apply_pbs(&diag, "x", "xh", "xv").unwrap();
        assert_abs_diff_eq!(split.probability(&[(&m("xh", H), 1)]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(split.probability(&[(&m("xv", V), 1)]), 0.5, epsilon = 1e-15);
        assert!(matches!(apply_pbs(&s, "a", "c", "q"), Err(PhotonicsError::LabelCollision(_))));
        assert!(matches!(apply_pbs(&s, "nope", "x", "y"), Err(PhotonicsError::UnknownSpatial(_))));
    }

    #[test]
    fn photon_cap_is_asserted() {
        let a = source_state(1.0, "a", "c").unwrap();
        let b = source_state(1.0, "b", "d").unwrap();
        let e = source_state(1.0, "e", "f").unwrap();
        let ab = tensor(&a, &b).unwrap();
        assert_eq!(ab.len(), 4);
        assert!(matches!(tensor(&ab, &e), Err(PhotonicsError::PhotonCapExceeded { found: 6, cap: 4 })));
        let big = ab.with_max_photons(8).unwrap();
        assert_eq!(tensor(&big, &e).unwrap().len(), 8);
        assert!(matches!(tensor(&a, &a), Err(PhotonicsError::LabelCollision(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn circuit(r: f64, t: f64, conv: BeamSplitterConvention) -> FockState {
            let s = tensor(&source_state(r, "a", "c").unwrap(), &source_state(r, "b", "d").unwrap()).unwrap();
            let s = apply_spatial_loss(&s, "a", t).unwrap();
            let s = apply_spatial_beam_splitter(&s, "a", "b", conv).unwrap();
            apply_hadamard_pol(&s, "b").unwrap()
        }

        proptest! {
            #[test]
            fn elements_preserve_norm_and_photons(r in 0.0f64..4.0, t in 0.0f64..=1.0) {
                for conv in [BeamSplitterConvention::Real, BeamSplitterConvention::Conjugate, BeamSplitterConvention::Symmetric] {
                    let s = circuit(r, t, conv);
                    prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
                    for (b, _) in s.iter() {
                        prop_assert_eq!(b.total(), 4);
                    }
                }
            }

            #[test]
            fn hadamard_is_an_involution(r in 0.0f64..4.0) {
                let s = source_state(r, "a", "c").unwrap();
                let twice = apply_hadamard_pol(&apply_hadamard_pol(&s, "a").unwrap(), "a").unwrap();
                for (b, amp) in s.iter() {
                    let occ: vec::Vec<(&ModeId, u32)> = s.occupations(b).collect();
                    prop_assert!((twice.amplitude(&occ) - amp).norm() < 1e-12);
                }
                prop_assert!((twice.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }
}
