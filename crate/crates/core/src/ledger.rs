//! Discrepancy ledger: oracle evidence for every correction that separates
//! the reconciled sums from the transcription, and for the choice between
//! the two printed compositions of the sifted rate.
//!
//! For each correction the reconciled sum is re-evaluated with only that
//! correction withheld. The correction is justified when that changes the
//! agreement with the oracle, and the ledger records the first summand on
//! which the two expressions differ.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::closed_form::reconciled::{self, CorrectionInfo, Corrections, CATALOG};
use crate::closed_form::{
    verbatim, ClosedFormEngine, ClosedFormError, ClosedFormParams, EvalContext, NestedSum, SumId, SumVariant,
};
use crate::detectors::DetectorKind;
use crate::math::within_tolerance;
use crate::oracle::{oracle_bundle, rate_form_evidence, CircuitConfig, OracleError, RateFormEvidence};

/// Agreement band between a closed-form value and the oracle.
pub const REL_TOLERANCE: f64 = 1e-10;
pub const ABS_TOLERANCE: f64 = 1e-14;
/// Below this magnitude values are compared with [`ABS_TOLERANCE`].
pub const ABS_FLOOR: f64 = 1e-12;

/// Terms closer than this (relative) count as equal when locating the
/// first differing summand.
const TERM_TOLERANCE: f64 = 1e-12;

pub fn agrees(value: f64, oracle: f64) -> bool {
    within_tolerance(value, oracle, REL_TOLERANCE, ABS_TOLERANCE, ABS_FLOOR)
}

/// A point where every correction changes its sums measurably: unequal
/// pair amplitudes, strong loss, imperfect detectors, dark counts and a
/// lossy switch.
pub fn reference_point() -> ClosedFormParams {
    ClosedFormParams { r: 2.0, eta_ch: 0.1, eta: 0.8, eta_sw: 0.95, p_dark: 1e-3 }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<crate::closed_form::nested::DefinitionError> for LedgerError {
    fn from(e: crate::closed_form::nested::DefinitionError) -> Self {
        LedgerError::ClosedForm(e.into())
    }
}

/// One summand on which two expressions of the same sum differ. A missing
/// term lies outside that expression's index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyRecord {
    pub id: SumId,
    pub assignment: Vec<(String, i64)>,
    pub transcribed_term: Option<f64>,
    pub reconciled_term: Option<f64>,
    pub reason: &'static str,
}

fn term(v: Option<f64>) -> String {
    v.map_or_else(|| String::from("absent"), |x| format!("{x:e}"))
}

impl fmt::Display for DiscrepancyRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [", self.id)?;
        for (k, (n, v)) in self.assignment.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(
            f,
            "] transcribed={} reconciled={} reason: {}",
            term(self.transcribed_term),
            term(self.reconciled_term),
            self.reason
        )
    }
}

/// Index assignment plus the term in each of two expressions.
type Difference = (Vec<(String, i64)>, Option<f64>, Option<f64>);

/// The first summand (in `primary`'s loop order) whose value differs in
/// `other`, then the same search the other way round.
fn first_difference(primary: &NestedSum, other: &NestedSum, ctx: &EvalContext) -> Option<Difference> {
    let search = |a: &NestedSum, b: &NestedSum| {
        let names = a.index_names();
        let mut found = None;
        a.visit_terms(ctx, |env, va| {
            let lookup = |n: &str| names.iter().position(|x| *x == n).map(|k| env[k]);
            let vb = b.term_at(ctx, &lookup);
            let same = vb.is_some_and(|vb| {
                let scale = libm::fabs(va).max(libm::fabs(vb));
                libm::fabs(va - vb) <= TERM_TOLERANCE * scale
            });
            if same {
                return true;
            }
            let assignment = names.iter().zip(env).map(|(n, v)| (String::from(*n), *v)).collect();
            found = Some((assignment, va, vb));
            false
        });
        found
    };
    if let Some((asg, v_primary, v_other)) = search(primary, other) {
        return Some((asg, Some(v_primary), v_other));
    }
    search(other, primary).map(|(asg, v_other, v_primary)| (asg, v_primary, Some(v_other)))
}

/// Oracle evidence for one correction on one sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionEvidence {
    pub correction: &'static CorrectionInfo,
    pub id: SumId,
    pub oracle: f64,
    pub reconciled: f64,
    /// The reconciled sum with only this correction withheld.
    pub withheld: f64,
    pub first_discrepancy: Option<DiscrepancyRecord>,
}

impl CorrectionEvidence {
    /// Withholding the correction breaks agreement with the oracle.
    pub fn necessary(&self) -> bool {
        agrees(self.reconciled, self.oracle) && !agrees(self.withheld, self.oracle)
    }
}

/// Evidence for every catalogued correction on every sum it touches.
pub fn correction_evidence(params: &ClosedFormParams) -> Result<Vec<CorrectionEvidence>, LedgerError> {
    let oracle = oracle_bundle(&CircuitConfig::new(*params, DetectorKind::Pnr))?;
    let ctx = EvalContext::new(params, DetectorKind::Pnr);
    let mut out = Vec::new();
    for info in CATALOG {
        for &id in info.applies_to {
            let full = reconciled::sum(id, Corrections::all())?;
            let without = reconciled::sum(id, Corrections::all() - info.flag)?;
            let first_discrepancy = first_difference(&without, &full, &ctx).map(|(assignment, t, r)| {
                DiscrepancyRecord { id, assignment, transcribed_term: t, reconciled_term: r, reason: info.reason }
            });
            out.push(CorrectionEvidence {
                correction: info,
                id,
                oracle: oracle.get(id),
                reconciled: full.evaluate(&ctx).value,
                withheld: without.evaluate(&ctx).value,
                first_discrepancy,
            });
        }
    }
    Ok(out)
}

/// Transcribed sum against the oracle at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VerbatimComparison {
    pub id: SumId,
    pub oracle: f64,
    pub verbatim: f64,
    pub reconciled: f64,
}

pub fn verbatim_comparison(params: &ClosedFormParams) -> Result<Vec<VerbatimComparison>, LedgerError> {
    let oracle = oracle_bundle(&CircuitConfig::new(*params, DetectorKind::Pnr))?;
    let ctx = EvalContext::new(params, DetectorKind::Pnr);
    let mut out = Vec::new();
    for id in SumId::ALL {
        out.push(VerbatimComparison {
            id,
            oracle: oracle.get(id),
            verbatim: verbatim::sum(id)?.evaluate(&ctx).value,
            reconciled: reconciled::sum(id, Corrections::all())?.evaluate(&ctx).value,
        });
    }
    Ok(out)
}

/// The whole ledger at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub params: ClosedFormParams,
    pub verbatim: Vec<VerbatimComparison>,
    pub corrections: Vec<CorrectionEvidence>,
    /// Rate-form evidence at the ideal point and at `params`.
    pub rate_forms: Vec<(ClosedFormParams, RateFormEvidence)>,
}

impl Ledger {
    pub fn build(params: &ClosedFormParams) -> Result<Ledger, LedgerError> {
        let mut rate_forms = Vec::new();
        for p in [ClosedFormParams::ideal(), *params] {
            rate_forms.push((p, rate_form_evidence(&CircuitConfig::new(p, DetectorKind::Pnr))?));
        }
        Ok(Ledger {
            params: *params,
            verbatim: verbatim_comparison(params)?,
            corrections: correction_evidence(params)?,
            rate_forms,
        })
    }

    /// Every correction is needed on at least one of its sums.
    pub fn all_corrections_necessary(&self) -> bool {
        CATALOG.iter().all(|c| self.corrections.iter().any(|e| e.correction.flag == c.flag && e.necessary()))
    }

    /// True when every rate-form check favours the `/p_qnd` divisor.
    pub fn single_divisor_supported(&self) -> bool {
        self.rate_forms.iter().all(|(_, e)| e.supports_single_divisor())
    }
}

fn params_line(p: &ClosedFormParams) -> String {
    format!("r={} eta_ch={} eta={} eta_sw={} p_dark={:e}", p.r, p.eta_ch, p.eta, p.eta_sw, p.p_dark)
}

fn rel(v: f64, o: f64) -> f64 {
    if o == 0.0 {
        libm::fabs(v)
    } else {
        libm::fabs((v - o) / o)
    }
}

impl fmt::Display for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# discrepancy ledger at {}", params_line(&self.params))?;
        for v in &self.verbatim {
            writeln!(
                f,
                "sum {} oracle={:e} verbatim={:e} (rel {:.3e}) reconciled={:e} (rel {:.3e})",
                v.id,
                v.oracle,
                v.verbatim,
                rel(v.verbatim, v.oracle),
                v.reconciled,
                rel(v.reconciled, v.oracle)
            )?;
        }
        for e in &self.corrections {
            let c = e.correction;
            writeln!(
                f,
                "correction {} sum {} transcribed `{}` -> `{}`; withheld={:e} (rel {:.3e}) reconciled={:e} oracle={:e} {}",
                c.name,
                e.id,
                c.transcribed,
                c.corrected,
                e.withheld,
                rel(e.withheld, e.oracle),
                e.reconciled,
                e.oracle,
                if e.necessary() { "NECESSARY" } else { "no-effect-here" }
            )?;
            if let Some(d) = &e.first_discrepancy {
                writeln!(f, "  first differing term: {d}")?;
            }
        }
        for (p, e) in &self.rate_forms {
            writeln!(
                f,
                "rate-form at {}: p_s={:e} p_bm={:e} direct={:e} single_divisor={:e} (rel {:.3e}) squared_divisor={:e} (rel {:.3e}) -> {}",
                params_line(p),
                e.p_s_direct,
                e.p_bm_direct,
                e.sifted_direct,
                e.sifted_single_divisor,
                e.single_divisor_deviation(),
                e.sifted_squared_divisor,
                e.squared_divisor_deviation(),
                if e.supports_single_divisor() { "divisor p_qnd supported" } else { "divisor p_qnd^2 supported" }
            )?;
        }
        Ok(())
    }
}

/// The verification grid: three pair amplitudes, three channel
/// transmittances and three detector qualities, with a lossless switch.
pub fn verification_grid() -> Vec<ClosedFormParams> {
    let mut out = Vec::with_capacity(27);
    for r in [0.5, 1.0, 2.0] {
        for eta_ch in [1.0, 0.5, 0.1] {
            for (eta, p_dark) in [(1.0, 0.0), (0.93, 2e-10), (0.8, 1e-6)] {
                out.push(ClosedFormParams { r, eta_ch, eta, eta_sw: 1.0, p_dark });
            }
        }
    }
    out
}

/// Worst closed-form deviation from the oracle for one sum over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SumDeviation {
    pub id: SumId,
    /// Largest relative deviation among points above [`ABS_FLOOR`].
    pub max_relative: f64,
    /// Largest absolute deviation among points below it.
    pub max_absolute: f64,
    pub worst_point: Option<ClosedFormParams>,
    pub failures: usize,
}

impl SumDeviation {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub variant: SumVariant,
    pub detector: DetectorKind,
    pub points: usize,
    pub sums: Vec<SumDeviation>,
}

impl GridReport {
    pub fn passed(&self) -> bool {
        self.sums.iter().all(SumDeviation::passed)
    }
}

/// Closed form in `variant` against the oracle at every grid point.
pub fn grid_report(
    grid: &[ClosedFormParams],
    variant: SumVariant,
    detector: DetectorKind,
) -> Result<GridReport, LedgerError> {
    if variant == SumVariant::Verbatim && detector == DetectorKind::Threshold {
        return Err(ClosedFormError::VerbatimThreshold.into());
    }
    let engine = ClosedFormEngine::new(variant)?;
    let mut sums: Vec<SumDeviation> = SumId::ALL
        .iter()
        .map(|&id| SumDeviation { id, max_relative: 0.0, max_absolute: 0.0, worst_point: None, failures: 0 })
        .collect();
    for p in grid {
        let oracle = oracle_bundle(&CircuitConfig::new(*p, detector))?;
        for dev in sums.iter_mut() {
            // Raw values: a transcription that leaves [0, 1] is a deviation
            // to report, not an evaluation error.
            let value = engine.compiled(dev.id).evaluate(&EvalContext::new(p, detector)).value;
            let o = oracle.get(dev.id);
            let diff = libm::fabs(value - o);
            let scale = libm::fabs(o).max(libm::fabs(value));
            if scale < ABS_FLOOR {
                dev.max_absolute = dev.max_absolute.max(diff);
            } else if diff / scale > dev.max_relative {
                dev.max_relative = diff / scale;
                dev.worst_point = Some(*p);
            }
            if !agrees(value, o) {
                dev.failures += 1;
            }
        }
    }
    Ok(GridReport { variant, detector, points: grid.len(), sums })
}

impl fmt::Display for GridReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# closed form ({}) vs oracle, {} detectors, {} points, tolerance rel {:e} (abs {:e} below {:e})",
            self.variant, self.detector, self.points, REL_TOLERANCE, ABS_TOLERANCE, ABS_FLOOR
        )?;
        for s in &self.sums {
            write!(
                f,
                "sum {} max_rel={:.3e} max_abs={:.3e} failures={} {}",
                s.id,
                s.max_relative,
                s.max_absolute,
                s.failures,
                if s.passed() { "PASS" } else { "FAIL" }
            )?;
            if let Some(p) = &s.worst_point {
                write!(f, " worst at {}", params_line(p))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
