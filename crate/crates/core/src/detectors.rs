//! Detector response models.
//!
//! Photon-number-resolving detectors follow the conditional law
//! `P(k|l) = sum_{d=0..k} C(l, k-d) p^d eta^(k-d) (1-eta)^(l-k+d)`, where
//! `p` is the dark-count probability. Dark counts enter without a `(1-p)`
//! complement, so the law is only approximately normalized when `p > 0`;
//! both back-ends use this same kernel. Threshold detectors report
//! click/no-click only.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{binomial, powi};
use crate::photonics::{FockState, ModeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum DetectorKind {
    #[default]
    Pnr,
    Threshold,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Pnr => "pnr",
            DetectorKind::Threshold => "threshold",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pnr" => Ok(DetectorKind::Pnr),
            "threshold" => Ok(DetectorKind::Threshold),
            other => Err(alloc::format!("unknown detector kind `{other}` (expected pnr|threshold)")),
        }
    }
}

/// How a threshold detector's no-click probability treats dark counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoClickForm {
    /// `(1 - p)(1 - eta)^l`: no photon detected and no dark count.
    #[default]
    DarkComplement,
    /// `(1 - eta)^l`, matching the zero-count entry of the PNR law.
    Bare,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("{pattern} pattern cannot be scored with a {model} detector model")]
    KindMismatch { model: DetectorKind, pattern: &'static str },
    #[error("pattern label `{0}` is not in the detector layout")]
    UnknownLabel(String),
    #[error("count pattern entry `{label}` = {count} has no click/no-click reading")]
    NotBinary { label: String, count: u32 },
}

/// Detector kind, efficiency and dark-count probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    pub efficiency: f64,
    pub dark_prob: f64,
    pub no_click_form: NoClickForm,
}

impl DetectorModel {
    pub fn new(kind: DetectorKind, efficiency: f64, dark_prob: f64) -> Result<Self, DetectorError> {
        let model = DetectorModel { kind, efficiency, dark_prob, no_click_form: NoClickForm::default() };
        model.validate()?;
        Ok(model)
    }

    pub fn pnr(efficiency: f64, dark_prob: f64) -> Result<Self, DetectorError> {
        Self::new(DetectorKind::Pnr, efficiency, dark_prob)
    }

    pub fn threshold(efficiency: f64, dark_prob: f64) -> Result<Self, DetectorError> {
        Self::new(DetectorKind::Threshold, efficiency, dark_prob)
    }

    pub fn with_no_click_form(mut self, form: NoClickForm) -> Self {
        self.no_click_form = form;
        self
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(DetectorError::OutOfRange { name: "efficiency", value: self.efficiency });
        }
        if !(0.0..=1.0).contains(&self.dark_prob) {
            return Err(DetectorError::OutOfRange { name: "dark_prob", value: self.dark_prob });
        }
        Ok(())
    }

    /// Probability of the detector reading exactly one count (PNR) or a click
    /// (threshold) given `l` incident photons. Negative `l` is outside the
    /// support and gives zero.
    pub fn one_prob(&self, l: i64) -> f64 {
        if l < 0 {
            return 0.0;
        }
        match self.kind {
            DetectorKind::Pnr => single_count_prob(l as u32, self.efficiency, self.dark_prob),
            DetectorKind::Threshold => 1.0 - (1.0 - self.dark_prob) * powi(1.0 - self.efficiency, l as i32),
        }
    }

    /// Probability of a zero reading given `l` incident photons.
    pub fn zero_prob(&self, l: i64) -> f64 {
        if l < 0 {
            return 0.0;
        }
        self.zero_dark_factor() * powi(1.0 - self.efficiency, l as i32)
    }

    /// The photon-independent factor of [`DetectorModel::zero_prob`].
    pub fn zero_dark_factor(&self) -> f64 {
        match (self.kind, self.no_click_form) {
            (DetectorKind::Threshold, NoClickForm::DarkComplement) => 1.0 - self.dark_prob,
            _ => 1.0,
        }
    }
}

/// Conditional probability of `k` counts given `l` incident photons.
///
/// ```
/// use amdi_core::detectors::{pnr_conditional_prob, DetectorModel};
/// let m = DetectorModel::pnr(0.93, 0.0).unwrap();
/// assert!((pnr_conditional_prob(1, 2, &m).unwrap() - 0.1302).abs() < 1e-15);
/// ```
pub fn pnr_conditional_prob(k: u32, l: u32, model: &DetectorModel) -> Result<f64, DetectorError> {
    if model.kind != DetectorKind::Pnr {
        return Err(DetectorError::KindMismatch { model: model.kind, pattern: "photon-count" });
    }
    Ok(pnr_law(k, l, model.efficiency, model.dark_prob))
}

fn pnr_law(k: u32, l: u32, eta: f64, p: f64) -> f64 {
    let (k, l) = (k as i64, l as i64);
    let mut acc = 0.0;
    for d in 0..=k {
        let c = binomial(l, k - d);
        if c == 0 {
            continue;
        }
        acc += c as f64 * powi(p, d as i32) * powi(eta, (k - d) as i32) * powi(1.0 - eta, (l - k + d) as i32);
    }
    acc
}

/// `x eta (1-eta)^(x-1) + p (1-eta)^x`, the one-count probability for `x`
/// incident photons. The first term is zero at `x = 0`.
pub fn single_count_prob(x: u32, efficiency: f64, dark_prob: f64) -> f64 {
    let x = x as i32;
    let detected = if x == 0 { 0.0 } else { x as f64 * efficiency * powi(1.0 - efficiency, x - 1) };
    detected + dark_prob * powi(1.0 - efficiency, x)
}

/// Click probability of a threshold detector, `1 - (1-p)(1-eta)^l`.
pub fn threshold_click_prob(l: u32, model: &DetectorModel) -> Result<f64, DetectorError> {
    if model.kind != DetectorKind::Threshold {
        return Err(DetectorError::KindMismatch { model: model.kind, pattern: "click" });
    }
    Ok(model.one_prob(l as i64))
}

/// No-click probability of a threshold detector under the model's
/// [`NoClickForm`].
pub fn threshold_no_click_prob(l: u32, model: &DetectorModel) -> Result<f64, DetectorError> {
    if model.kind != DetectorKind::Threshold {
        return Err(DetectorError::KindMismatch { model: model.kind, pattern: "click" });
    }
    Ok(model.zero_prob(l as i64))
}

/// Required reading per detector label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClickPattern {
    /// Exact photon counts, for PNR detectors.
    Counts(BTreeMap<String, u32>),
    /// Click (`true`) or no-click, for threshold detectors.
    Clicks(BTreeMap<String, bool>),
}

impl ClickPattern {
    pub fn counts(entries: &[(&str, u32)]) -> Self {
        ClickPattern::Counts(entries.iter().map(|(l, k)| (String::from(*l), *k)).collect())
    }

    pub fn clicks(entries: &[(&str, bool)]) -> Self {
        ClickPattern::Clicks(entries.iter().map(|(l, k)| (String::from(*l), *k)).collect())
    }

    pub fn labels(&self) -> Vec<&str> {
        match self {
            ClickPattern::Counts(m) => m.keys().map(String::as_str).collect(),
            ClickPattern::Clicks(m) => m.keys().map(String::as_str).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ClickPattern::Counts(m) => m.len(),
            ClickPattern::Clicks(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reads a 0/1 count pattern as click/no-click.
    pub fn to_clicks(&self) -> Result<ClickPattern, DetectorError> {
        match self {
            ClickPattern::Clicks(_) => Ok(self.clone()),
            ClickPattern::Counts(m) => {
                let mut out = BTreeMap::new();
                for (label, &count) in m {
                    if count > 1 {
                        return Err(DetectorError::NotBinary { label: label.clone(), count });
                    }
                    out.insert(label.clone(), count == 1);
                }
                Ok(ClickPattern::Clicks(out))
            }
        }
    }

    /// Converts to the pattern type that `kind` scores.
    pub fn for_kind(&self, kind: DetectorKind) -> Result<ClickPattern, DetectorError> {
        match (kind, self) {
            (DetectorKind::Threshold, _) => self.to_clicks(),
            (DetectorKind::Pnr, ClickPattern::Counts(_)) => Ok(self.clone()),
            (DetectorKind::Pnr, ClickPattern::Clicks(_)) => {
                Err(DetectorError::KindMismatch { model: DetectorKind::Pnr, pattern: "click" })
            }
        }
    }

    /// Prefixes every label with `prefix`.
    pub fn scoped(&self, prefix: &str) -> ClickPattern {
        let relabel = |l: &String| alloc::format!("{prefix}{l}");
        match self {
            ClickPattern::Counts(m) => ClickPattern::Counts(m.iter().map(|(l, v)| (relabel(l), *v)).collect()),
            ClickPattern::Clicks(m) => ClickPattern::Clicks(m.iter().map(|(l, v)| (relabel(l), *v)).collect()),
        }
    }

    /// Union of two patterns of the same type; entries of `other` win.
    pub fn merged(&self, other: &ClickPattern) -> Result<ClickPattern, DetectorError> {
        match (self, other) {
            (ClickPattern::Counts(a), ClickPattern::Counts(b)) => {
                let mut m = a.clone();
                m.extend(b.iter().map(|(l, v)| (l.clone(), *v)));
                Ok(ClickPattern::Counts(m))
            }
            (ClickPattern::Clicks(a), ClickPattern::Clicks(b)) => {
                let mut m = a.clone();
                m.extend(b.iter().map(|(l, v)| (l.clone(), *v)));
                Ok(ClickPattern::Clicks(m))
            }
            _ => Err(DetectorError::KindMismatch { model: DetectorKind::Pnr, pattern: "mixed" }),
        }
    }

    /// Count required at `label`, reading clicks as 1.
    pub fn get(&self, label: &str) -> Option<u32> {
        match self {
            ClickPattern::Counts(m) => m.get(label).copied(),
            ClickPattern::Clicks(m) => m.get(label).map(|&c| c as u32),
        }
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        let mut item = |f: &mut fmt::Formatter<'_>, l: &str, v: &dyn fmt::Display| -> fmt::Result {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{l}:{v}")
        };
        match self {
            ClickPattern::Counts(m) => {
                for (l, v) in m {
                    item(f, l, v)?;
                }
            }
            ClickPattern::Clicks(m) => {
                for (l, v) in m {
                    item(f, l, if *v { &"click" } else { &"none" })?;
                }
            }
        }
        f.write_str("}")
    }
}

/// Probability of `pattern` on `state`: the sum over basis states of
/// `|amplitude|^2` times the per-detector response. Modes outside the
/// pattern (environment, unmeasured signal modes) are summed over; layout
/// modes that the state never registered hold zero photons.
pub fn pattern_probability(
    state: &FockState,
    layout: &BTreeMap<String, ModeId>,
    pattern: &ClickPattern,
    model: &DetectorModel,
) -> Result<f64, DetectorError> {
    model.validate()?;
    let cap = state.max_photons() as usize;
    let mut detectors: Vec<(Option<usize>, Vec<f64>)> = Vec::with_capacity(pattern.len());
    let mut push = |label: &str, table: Vec<f64>| -> Result<(), DetectorError> {
        let mode = layout.get(label).ok_or_else(|| DetectorError::UnknownLabel(label.into()))?;
        detectors.push((state.slot(mode), table));
        Ok(())
    };
    match (model.kind, pattern) {
        (DetectorKind::Pnr, ClickPattern::Counts(m)) => {
            for (label, &k) in m {
                push(label, (0..=cap).map(|l| pnr_law(k, l as u32, model.efficiency, model.dark_prob)).collect())?;
            }
        }
        (DetectorKind::Threshold, ClickPattern::Clicks(m)) => {
            for (label, &click) in m {
                let table = (0..=cap)
                    .map(|l| if click { model.one_prob(l as i64) } else { model.zero_prob(l as i64) })
                    .collect();
                push(label, table)?;
            }
        }
        (DetectorKind::Pnr, ClickPattern::Clicks(_)) => {
            return Err(DetectorError::KindMismatch { model: model.kind, pattern: "click" })
        }
        (DetectorKind::Threshold, ClickPattern::Counts(_)) => {
            return Err(DetectorError::KindMismatch { model: model.kind, pattern: "photon-count" })
        }
    }
    let mut total = crate::math::NeumaierSum::new();
    for (basis, amp) in state.iter() {
        let mut p = amp.norm_sqr();
        for (slot, table) in &detectors {
            let n = slot.map_or(0, |k| basis.count(k) as usize);
            p *= table[n];
            if p == 0.0 {
                break;
            }
        }
        total.add(p);
    }
    Ok(total.value())
}
