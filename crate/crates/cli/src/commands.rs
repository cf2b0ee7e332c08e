//! The three subcommands. Each returns the full output text plus an exit
//! status; writing it out is left to the caller.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use amdi_core::closed_form::{Backend, ClosedFormError};
use amdi_core::ledger::{grid_report, reference_point, verification_grid, Ledger, LedgerError};
use amdi_core::rates::{cutoff_distance, Evaluator, RateError, RatePoint};
use amdi_core::{DetectorKind, ProtocolParams, SumVariant};
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ToleranceFailure,
    NumericDiagnostic,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::ToleranceFailure => 2,
            Status::NumericDiagnostic => 3,
        }
    }
}

#[derive(Debug)]
pub struct Report {
    pub text: String,
    pub status: Status,
    /// Messages for standard error.
    pub diagnostics: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("computation failed: {0}")]
    Compute(String),
}

impl CommandError {
    pub fn code(&self) -> u8 {
        match self {
            CommandError::Config(_) | CommandError::Io { .. } => 1,
            CommandError::Compute(_) => 3,
        }
    }
}

impl From<RateError> for CommandError {
    fn from(e: RateError) -> Self {
        CommandError::Compute(e.to_string())
    }
}

impl From<LedgerError> for CommandError {
    fn from(e: LedgerError) -> Self {
        CommandError::Compute(e.to_string())
    }
}

fn check_combination(params: &ProtocolParams) -> Result<(), ConfigError> {
    if params.backend == Backend::ClosedForm
        && params.variant == SumVariant::Verbatim
        && params.detector == DetectorKind::Threshold
    {
        return Err(ConfigError::Range {
            key: "variant".into(),
            message: "the verbatim sums cannot model threshold detectors; use variant=reconciled or backend=oracle"
                .into(),
        });
    }
    Ok(())
}

/// Evaluates every distance in parallel; results keep the input order.
pub fn run_points(params: &ProtocolParams, distances: &[f64]) -> Result<Vec<Result<RatePoint, RateError>>, RateError> {
    let eval = Evaluator::new(params)?;
    Ok(distances.par_iter().map(|&d| eval.point(params, d)).collect())
}

fn timing(start: Instant) -> String {
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!(
        "generated_unix_s={unix} elapsed_s={:.3} threads={}",
        start.elapsed().as_secs_f64(),
        rayon::current_num_threads()
    )
}

/// Out-of-range probabilities become diagnostics; other point failures
/// only mark their rows.
fn diagnose(points: &[Result<RatePoint, RateError>], label: &str, distances: &[f64]) -> Vec<String> {
    points
        .iter()
        .zip(distances)
        .filter_map(|(p, d)| match p {
            Err(e @ RateError::ClosedForm(ClosedFormError::OutOfRange { .. })) => {
                Some(format!("{label} at {d} km: {e}"))
            }
            _ => None,
        })
        .collect()
}

fn summary(points: &[Result<RatePoint, RateError>]) -> (usize, String) {
    let failed = points.iter().filter(|p| p.is_err()).count();
    let cutoff = cutoff_distance(points).map_or_else(|| "none".to_string(), |d| d.to_string());
    (failed, cutoff)
}

fn finish(text: String, diagnostics: Vec<String>) -> Report {
    let status = if diagnostics.is_empty() { Status::Ok } else { Status::NumericDiagnostic };
    Report { text, status, diagnostics }
}

pub fn scan(cfg: &RunConfig, timestamp: bool) -> Result<Report, CommandError> {
    cfg.validate()?;
    check_combination(&cfg.params)?;
    let start = Instant::now();
    let distances = cfg.distances();
    let points = run_points(&cfg.params, &distances)?;
    let (failed, cutoff) = summary(&points);
    let notes = [format!("points={} failed={failed}", points.len()), format!("cutoff_km={cutoff}")];
    let stamp = timestamp.then(|| timing(start));
    let mut text = table::preamble("amdi-qkd scan", cfg, &notes, stamp.as_deref());
    text.push_str(&table::scan_table(&distances, |d| cfg.params.at_distance(d).eta_ch(), &points));
    Ok(finish(text, diagnose(&points, cfg.params.detector.name(), &distances)))
}

/// PNR and threshold scans side by side. The configured detector kind is
/// ignored.
pub fn compare(cfg: &RunConfig, timestamp: bool) -> Result<Report, CommandError> {
    cfg.validate()?;
    let pnr = ProtocolParams { detector: DetectorKind::Pnr, ..cfg.params };
    let threshold = ProtocolParams { detector: DetectorKind::Threshold, ..cfg.params };
    check_combination(&pnr)?;
    check_combination(&threshold)?;
    let start = Instant::now();
    let distances = cfg.distances();
    let a = run_points(&pnr, &distances)?;
    let b = run_points(&threshold, &distances)?;
    let (fa, ca) = summary(&a);
    let (fb, cb) = summary(&b);
    let notes = [
        "compare: detector kinds pnr and threshold; the detector key above is not used".to_string(),
        format!("points={} failed_pnr={fa} failed_threshold={fb}", distances.len()),
        format!("cutoff_km_pnr={ca} cutoff_km_threshold={cb}"),
    ];
    let stamp = timestamp.then(|| timing(start));
    let mut text = table::preamble("amdi-qkd compare", cfg, &notes, stamp.as_deref());
    text.push_str(&table::compare_table(&distances, |d| cfg.params.at_distance(d).eta_ch(), &a, &b));
    let mut diagnostics = diagnose(&a, "pnr", &distances);
    diagnostics.extend(diagnose(&b, "threshold", &distances));
    Ok(finish(text, diagnostics))
}

/// Closed form against the oracle over the verification grid, followed by
/// the discrepancy ledger. Fails with [`Status::ToleranceFailure`] when any
/// grid value misses the tolerance.
pub fn verify(cfg: &RunConfig, timestamp: bool) -> Result<Report, CommandError> {
    cfg.validate()?;
    // Verification always uses the closed form, whatever the backend key says.
    check_combination(&ProtocolParams { backend: Backend::ClosedForm, ..cfg.params })?;
    let start = Instant::now();
    let report = grid_report(&verification_grid(), cfg.params.variant, cfg.params.detector)?;
    let ledger = Ledger::build(&reference_point())?;
    let verdict = if ledger.single_divisor_supported() {
        "rate-form verdict: the oracle-composed sifted rate supports the divisor p_qnd, not p_qnd^2"
    } else {
        "rate-form verdict: the oracle-composed sifted rate does not support the divisor p_qnd"
    };
    let notes = [
        format!("verification={}", if report.passed() { "pass" } else { "fail" }),
        format!(
            "corrections={}",
            if ledger.all_corrections_necessary() { "all necessary" } else { "some without effect" }
        ),
        verdict.to_string(),
    ];
    let stamp = timestamp.then(|| timing(start));
    let mut text = table::preamble("amdi-qkd verify", cfg, &notes, stamp.as_deref());
    text.push_str(&report.to_string());
    text.push_str(&ledger.to_string());
    let status = if report.passed() { Status::Ok } else { Status::ToleranceFailure };
    let diagnostics = if report.passed() {
        Vec::new()
    } else {
        vec![format!("closed form ({}) misses the oracle tolerance", cfg.params.variant)]
    };
    Ok(Report { text, status, diagnostics })
}
