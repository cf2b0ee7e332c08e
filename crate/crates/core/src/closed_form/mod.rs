//! Closed-form evaluation of the five protocol probabilities.
//!
//! Each probability is a nested sum over photon-path indices (see
//! [`nested`]). Two variants exist per sum: [`SumVariant::Verbatim`] keeps
//! the source expressions character for character, and
//! [`SumVariant::Reconciled`] applies the corrections listed in
//! [`reconciled::CATALOG`], each of which is backed by oracle evidence.

pub mod expr;
pub mod nested;
pub mod reconciled;
pub mod verbatim;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::detectors::DetectorKind;
pub use nested::{Base, CompiledSum, EvalContext, Evaluation, NestedSum, Stage, SumBuilder, TermRecord};
pub use reconciled::Corrections;

/// Half-width of the tolerated band outside `[0, 1]`.
pub const RANGE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormParams {
    /// Pair amplitude ratio.
    pub r: f64,
    /// Per-arm channel transmittance.
    pub eta_ch: f64,
    /// Bare detector efficiency.
    pub eta: f64,
    /// Optical-switch transmittance.
    pub eta_sw: f64,
    pub p_dark: f64,
}

impl ClosedFormParams {
    pub fn new(r: f64, eta_ch: f64, eta: f64, eta_sw: f64, p_dark: f64) -> Result<Self, ClosedFormError> {
        let p = ClosedFormParams { r, eta_ch, eta, eta_sw, p_dark };
        p.validate()?;
        Ok(p)
    }

    /// `r = 1` and every efficiency one, no dark counts.
    pub fn ideal() -> Self {
        ClosedFormParams { r: 1.0, eta_ch: 1.0, eta: 1.0, eta_sw: 1.0, p_dark: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ClosedFormError> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(ClosedFormError::InvalidParameter { name: "r", value: self.r });
        }
        for (name, value) in
            [("eta_ch", self.eta_ch), ("eta", self.eta), ("eta_sw", self.eta_sw), ("p_dark", self.p_dark)]
        {
            if !(0.0..=1.0).contains(&value) {
                return Err(ClosedFormError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// Efficiency of detectors behind the switches.
    pub fn eta_prime(&self) -> f64 {
        self.eta * self.eta_sw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SumId {
    Qnd,
    CZ,
    NcZ,
    CX,
    NcX,
}

impl SumId {
    pub const ALL: [SumId; 5] = [SumId::Qnd, SumId::CZ, SumId::NcZ, SumId::CX, SumId::NcX];
    pub const BSM: [SumId; 4] = [SumId::CZ, SumId::NcZ, SumId::CX, SumId::NcX];

    pub fn name(self) -> &'static str {
        match self {
            SumId::Qnd => "p_qnd",
            SumId::CZ => "p_c_z",
            SumId::NcZ => "p_nc_z",
            SumId::CX => "p_c_x",
            SumId::NcX => "p_nc_x",
        }
    }

    pub fn is_bsm(self) -> bool {
        self != SumId::Qnd
    }
}

impl fmt::Display for SumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum SumVariant {
    Verbatim,
    #[default]
    Reconciled,
}

impl SumVariant {
    pub fn name(self) -> &'static str {
        match self {
            SumVariant::Verbatim => "verbatim",
            SumVariant::Reconciled => "reconciled",
        }
    }
}

impl fmt::Display for SumVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SumVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(SumVariant::Verbatim),
            "reconciled" => Ok(SumVariant::Reconciled),
            other => Err(format!("unknown variant `{other}` (expected verbatim|reconciled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Backend {
    #[default]
    ClosedForm,
    Oracle,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::ClosedForm => "closed",
            Backend::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed" => Ok(Backend::ClosedForm),
            "oracle" => Ok(Backend::Oracle),
            other => Err(format!("unknown backend `{other}` (expected closed|oracle)")),
        }
    }
}

/// The five probabilities from one back-end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBundle {
    pub p_qnd: f64,
    pub p_c_z: f64,
    pub p_nc_z: f64,
    pub p_c_x: f64,
    pub p_nc_x: f64,
    pub backend: Backend,
    /// Closed-form variant; `None` for the oracle.
    pub variant: Option<SumVariant>,
    pub detector: DetectorKind,
    /// Non-zero summands per sum in [`SumId::ALL`] order (closed form only).
    pub nonzero_terms: Option<[u64; 5]>,
}

impl ProbabilityBundle {
    pub fn get(&self, id: SumId) -> f64 {
        match id {
            SumId::Qnd => self.p_qnd,
            SumId::CZ => self.p_c_z,
            SumId::NcZ => self.p_nc_z,
            SumId::CX => self.p_c_x,
            SumId::NcX => self.p_nc_x,
        }
    }

    pub(crate) fn from_values(
        values: [f64; 5],
        backend: Backend,
        variant: Option<SumVariant>,
        detector: DetectorKind,
        nonzero_terms: Option<[u64; 5]>,
    ) -> Self {
        ProbabilityBundle {
            p_qnd: values[0],
            p_c_z: values[1],
            p_nc_z: values[2],
            p_c_x: values[3],
            p_nc_x: values[4],
            backend,
            variant,
            detector,
            nonzero_terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClosedFormError {
    #[error("parameter {name} = {value} is out of range")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{0} is not a Bell-measurement sum")]
    NotBsm(SumId),
    #[error("the verbatim sums combine zero-count factors and cannot model threshold detectors")]
    VerbatimThreshold,
    #[error(transparent)]
    Definition(#[from] nested::DefinitionError),
    #[error(transparent)]
    Compile(#[from] nested::CompileError),
    #[error("{id} ({variant}) evaluated to {value:e}, outside [0, 1]; largest terms:{}", Breakdown(.top_terms))]
    OutOfRange { id: SumId, variant: SumVariant, value: f64, top_terms: Vec<TermRecord> },
}

struct Breakdown<'a>(&'a [TermRecord]);

impl fmt::Display for Breakdown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.0 {
            write!(f, "\n  {t}")?;
        }
        Ok(())
    }
}

/// Checked evaluation of one sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SumEvaluation {
    pub id: SumId,
    pub variant: SumVariant,
    /// In `[0, 1]`: values inside the tolerance band are clamped, anything
    /// further out is an [`ClosedFormError::OutOfRange`] error.
    pub value: f64,
    pub raw_value: f64,
    pub nonzero_terms: u64,
    pub top_terms: Vec<TermRecord>,
}

/// The sum definition for `id` in `variant`.
pub fn definition(id: SumId, variant: SumVariant) -> Result<NestedSum, ClosedFormError> {
    Ok(match variant {
        SumVariant::Verbatim => verbatim::sum(id)?,
        SumVariant::Reconciled => reconciled::sum(id, Corrections::all())?,
    })
}

fn check(id: SumId, variant: SumVariant, e: Evaluation) -> Result<SumEvaluation, ClosedFormError> {
    if !(e.value >= -RANGE_EPSILON && e.value <= 1.0 + RANGE_EPSILON) {
        return Err(ClosedFormError::OutOfRange { id, variant, value: e.value, top_terms: e.top_terms });
    }
    Ok(SumEvaluation {
        id,
        variant,
        value: e.value.clamp(0.0, 1.0),
        raw_value: e.value,
        nonzero_terms: e.nonzero_terms,
        top_terms: e.top_terms,
    })
}

fn context(params: &ClosedFormParams, variant: SumVariant, kind: DetectorKind) -> Result<EvalContext, ClosedFormError> {
    params.validate()?;
    if variant == SumVariant::Verbatim && kind == DetectorKind::Threshold {
        return Err(ClosedFormError::VerbatimThreshold);
    }
    Ok(EvalContext::new(params, kind))
}

/// Direct nested-loop evaluation of one sum with range checking.
pub fn evaluate(
    id: SumId,
    params: &ClosedFormParams,
    variant: SumVariant,
    kind: DetectorKind,
) -> Result<SumEvaluation, ClosedFormError> {
    let ctx = context(params, variant, kind)?;
    check(id, variant, definition(id, variant)?.evaluate(&ctx))
}

/// QND herald probability with PNR detectors.
pub fn eval_qnd(params: &ClosedFormParams, variant: SumVariant) -> Result<f64, ClosedFormError> {
    Ok(evaluate(SumId::Qnd, params, variant, DetectorKind::Pnr)?.value)
}

/// One of the four Bell-measurement probabilities with PNR detectors.
pub fn eval_bsm(id: SumId, params: &ClosedFormParams, variant: SumVariant) -> Result<f64, ClosedFormError> {
    if !id.is_bsm() {
        return Err(ClosedFormError::NotBsm(id));
    }
    Ok(evaluate(id, params, variant, DetectorKind::Pnr)?.value)
}

/// All five sums by direct evaluation.
pub fn bundle(params: &ClosedFormParams, variant: SumVariant) -> Result<ProbabilityBundle, ClosedFormError> {
    bundle_with(params, variant, DetectorKind::Pnr)
}

pub fn bundle_with(
    params: &ClosedFormParams,
    variant: SumVariant,
    kind: DetectorKind,
) -> Result<ProbabilityBundle, ClosedFormError> {
    let mut values = [0.0; 5];
    let mut terms = [0u64; 5];
    for (k, id) in SumId::ALL.into_iter().enumerate() {
        let e = evaluate(id, params, variant, kind)?;
        values[k] = e.value;
        terms[k] = e.nonzero_terms;
    }
    Ok(ProbabilityBundle::from_values(values, Backend::ClosedForm, Some(variant), kind, Some(terms)))
}

/// The five sums of one variant compiled once, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ClosedFormEngine {
    variant: SumVariant,
    sums: Vec<CompiledSum>,
}

impl ClosedFormEngine {
    pub fn new(variant: SumVariant) -> Result<Self, ClosedFormError> {
        let sums = SumId::ALL
            .into_iter()
            .map(|id| Ok(definition(id, variant)?.compile()?))
            .collect::<Result<Vec<_>, ClosedFormError>>()?;
        Ok(ClosedFormEngine { variant, sums })
    }

    pub fn variant(&self) -> SumVariant {
        self.variant
    }

    pub fn compiled(&self, id: SumId) -> &CompiledSum {
        &self.sums[id as usize]
    }

    pub fn evaluate(
        &self,
        id: SumId,
        params: &ClosedFormParams,
        kind: DetectorKind,
    ) -> Result<SumEvaluation, ClosedFormError> {
        let ctx = context(params, self.variant, kind)?;
        check(id, self.variant, self.sums[id as usize].evaluate(&ctx))
    }

    pub fn bundle(&self, params: &ClosedFormParams, kind: DetectorKind) -> Result<ProbabilityBundle, ClosedFormError> {
        let mut values = [0.0; 5];
        let mut terms = [0u64; 5];
        for (k, id) in SumId::ALL.into_iter().enumerate() {
            let e = self.evaluate(id, params, kind)?;
            values[k] = e.value;
            terms[k] = e.nonzero_terms;
        }
        Ok(ProbabilityBundle::from_values(values, Backend::ClosedForm, Some(self.variant), kind, Some(terms)))
    }
}
