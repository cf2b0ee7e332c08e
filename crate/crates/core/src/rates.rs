//! Key-rate composition: error rates, sifted and secret key rates, and
//! distance scans over either back-end.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::closed_form::{Backend, ClosedFormEngine, ClosedFormError, ClosedFormParams, ProbabilityBundle, SumVariant};
use crate::detectors::DetectorKind;
use crate::oracle::{oracle_bundle, CircuitConfig, OracleError};

/// How a total Alice-Bob distance maps onto each arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceConvention {
    /// The relay sits halfway: each arm is `distance / 2`.
    #[default]
    Midpoint,
    /// Each arm spans the full distance.
    FullLength,
}

impl DistanceConvention {
    pub fn name(self) -> &'static str {
        match self {
            DistanceConvention::Midpoint => "midpoint",
            DistanceConvention::FullLength => "full-length",
        }
    }
}

impl fmt::Display for DistanceConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceConvention {
    type Err = alloc::string::String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(DistanceConvention::Midpoint),
            "full-length" => Ok(DistanceConvention::FullLength),
            other => Err(alloc::format!("unknown distance convention `{other}` (expected midpoint|full-length)")),
        }
    }
}

/// Which printed composition of the sifted rate to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateForm {
    /// `p_s * p_bm` with `p_s = 8 p_qnd` and `p_bm = 2 (p_c + p_nc) / p_qnd^2`,
    /// which reduces to `16 (p_c + p_nc) / p_qnd`.
    #[default]
    Composed,
    /// The substituted form with divisor `p_qnd^2`.
    SquaredDivisor,
}

impl RateForm {
    pub fn name(self) -> &'static str {
        match self {
            RateForm::Composed => "composed",
            RateForm::SquaredDivisor => "squared-divisor",
        }
    }
}

impl fmt::Display for RateForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateForm {
    type Err = alloc::string::String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "composed" => Ok(RateForm::Composed),
            "squared-divisor" => Ok(RateForm::SquaredDivisor),
            other => Err(alloc::format!("unknown rate form `{other}` (expected composed|squared-divisor)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub r: f64,
    pub distance_km: f64,
    pub l_att_km: f64,
    pub eta: f64,
    pub eta_sw: f64,
    pub p_dark: f64,
    /// Source efficiency, a prefactor on the herald rate.
    pub eta_source: f64,
    /// Repetition period in seconds.
    pub tau_s: f64,
    /// Carried for the record; no formula uses it.
    pub c_mps: f64,
    pub detector: DetectorKind,
    pub backend: Backend,
    pub variant: SumVariant,
    pub distance_convention: DistanceConvention,
    pub rate_form: RateForm,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            r: 1.0,
            distance_km: 0.0,
            l_att_km: 22.0,
            eta: 0.93,
            eta_sw: 1.0,
            p_dark: 2e-10,
            eta_source: 1.0,
            tau_s: 67e-9,
            c_mps: 2e8,
            detector: DetectorKind::Pnr,
            backend: Backend::ClosedForm,
            variant: SumVariant::Reconciled,
            distance_convention: DistanceConvention::Midpoint,
            rate_form: RateForm::Composed,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), RateError> {
        let bad = |name: &'static str, value: f64| Err(RateError::InvalidParameter { name, value });
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return bad("r", self.r);
        }
        if !(self.distance_km >= 0.0 && self.distance_km.is_finite()) {
            return bad("distance_km", self.distance_km);
        }
        for (name, value) in [("l_att_km", self.l_att_km), ("tau_s", self.tau_s), ("c_mps", self.c_mps)] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(name, value);
            }
        }
        for (name, value) in
            [("eta", self.eta), ("eta_sw", self.eta_sw), ("p_dark", self.p_dark), ("eta_source", self.eta_source)]
        {
            if !(0.0..=1.0).contains(&value) {
                return bad(name, value);
            }
        }
        Ok(())
    }

    pub fn at_distance(&self, distance_km: f64) -> Self {
        ProtocolParams { distance_km, ..*self }
    }

    pub fn eta_ch(&self) -> f64 {
        transmittance(self.distance_km, self.l_att_km, self.distance_convention)
    }

    pub fn closed_form_params(&self) -> ClosedFormParams {
        ClosedFormParams { r: self.r, eta_ch: self.eta_ch(), eta: self.eta, eta_sw: self.eta_sw, p_dark: self.p_dark }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub distance_km: f64,
    pub eta_ch: f64,
    pub bundle: ProbabilityBundle,
    pub e_x: f64,
    pub e_z: f64,
    pub p_s: f64,
    pub p_bm: f64,
    pub r_sifted: f64,
    pub r_secret_per_pulse: f64,
    pub r_secret_per_second: f64,
    pub qber: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("parameter {name} = {value} is out of range")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("binary entropy argument {0} is outside [0, 1]")]
    EntropyDomain(f64),
    #[error("no successful events in the {0} basis (p_c + p_nc = 0)")]
    NoSuccessfulEvents(&'static str),
    #[error("no heralding (p_qnd = 0)")]
    NoHeralding,
    #[error("scan needs at least one distance")]
    EmptyScan,
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// `-x log2 x - (1-x) log2 (1-x)`, zero at both ends.
pub fn binary_entropy(x: f64) -> Result<f64, RateError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(RateError::EntropyDomain(x));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * libm::log2(p) };
    Ok(term(x) + term(1.0 - x))
}

/// Per-arm transmittance with the relay at the midpoint.
pub fn channel_transmittance(distance_km: f64, l_att_km: f64) -> f64 {
    transmittance(distance_km, l_att_km, DistanceConvention::Midpoint)
}

pub fn transmittance(distance_km: f64, l_att_km: f64, convention: DistanceConvention) -> f64 {
    let arm = match convention {
        DistanceConvention::Midpoint => distance_km / 2.0,
        DistanceConvention::FullLength => distance_km,
    };
    libm::exp(-arm / l_att_km)
}

/// `(e_x, e_z)`, each `p_nc / (p_c + p_nc)` in its basis.
pub fn error_rates(bundle: &ProbabilityBundle) -> Result<(f64, f64), RateError> {
    let ratio = |c: f64, nc: f64, basis: &'static str| {
        let total = c + nc;
        if !(total > 0.0) {
            return Err(RateError::NoSuccessfulEvents(basis));
        }
        Ok((nc / total).clamp(0.0, 1.0))
    };
    Ok((ratio(bundle.p_c_x, bundle.p_nc_x, "X")?, ratio(bundle.p_c_z, bundle.p_nc_z, "Z")?))
}

/// Flushes subnormal or negative noise to an exact zero.
fn clean(x: f64) -> f64 {
    if x < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

pub fn compose_rates(params: &ProtocolParams, bundle: ProbabilityBundle) -> Result<RatePoint, RateError> {
    if !(bundle.p_qnd > 0.0) {
        return Err(RateError::NoHeralding);
    }
    let (e_x, e_z) = error_rates(&bundle)?;
    let success = bundle.p_c_z + bundle.p_nc_z;
    let p_s = 8.0 * bundle.p_qnd * params.eta_source;
    let p_bm = 2.0 * success / (bundle.p_qnd * bundle.p_qnd);
    let r_sifted = match params.rate_form {
        RateForm::Composed => p_s * p_bm,
        RateForm::SquaredDivisor => 16.0 * success * params.eta_source / (bundle.p_qnd * bundle.p_qnd),
    };
    let bracket = 1.0 - binary_entropy(e_x)? - binary_entropy(e_z)?;
    let r_secret_per_pulse = clean((r_sifted * bracket).max(0.0));
    Ok(RatePoint {
        distance_km: params.distance_km,
        eta_ch: params.eta_ch(),
        bundle,
        e_x,
        e_z,
        p_s,
        p_bm,
        r_sifted: clean(r_sifted),
        r_secret_per_pulse,
        r_secret_per_second: clean(r_secret_per_pulse / params.tau_s),
        qber: e_z,
    })
}

/// Produces bundles for one back-end, variant and detector kind. The
/// closed-form sums are compiled once, so reuse an evaluator across points.
#[derive(Debug, Clone)]
pub struct Evaluator {
    engine: Option<ClosedFormEngine>,
}

impl Evaluator {
    pub fn new(params: &ProtocolParams) -> Result<Self, RateError> {
        params.validate()?;
        let engine = match params.backend {
            Backend::ClosedForm => Some(ClosedFormEngine::new(params.variant)?),
            Backend::Oracle => None,
        };
        Ok(Evaluator { engine })
    }

    pub fn bundle(&self, params: &ProtocolParams) -> Result<ProbabilityBundle, RateError> {
        let cf = params.closed_form_params();
        match (params.backend, &self.engine) {
            (Backend::ClosedForm, Some(engine)) if engine.variant() == params.variant => {
                Ok(engine.bundle(&cf, params.detector)?)
            }
            (Backend::ClosedForm, _) => Ok(ClosedFormEngine::new(params.variant)?.bundle(&cf, params.detector)?),
            (Backend::Oracle, _) => Ok(oracle_bundle(&CircuitConfig::new(cf, params.detector))?),
        }
    }

    pub fn point(&self, params: &ProtocolParams, distance_km: f64) -> Result<RatePoint, RateError> {
        let p = params.at_distance(distance_km);
        p.validate()?;
        compose_rates(&p, self.bundle(&p)?)
    }
}

/// One result per distance, in order. A failing point does not stop the
/// scan.
pub fn scan(params: &ProtocolParams, distances: &[f64]) -> Result<Vec<Result<RatePoint, RateError>>, RateError> {
    if distances.is_empty() {
        return Err(RateError::EmptyScan);
    }
    if let Some(&d) = distances.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(RateError::InvalidParameter { name: "distance_km", value: d });
    }
    let eval = Evaluator::new(params)?;
    Ok(distances.iter().map(|&d| eval.point(params, d)).collect())
}

/// Distances `from, from + step, ...` up to and including `to` (with a
/// small tolerance for accumulated rounding).
pub fn distance_grid(from_km: f64, to_km: f64, step_km: f64) -> Vec<f64> {
    if !(step_km > 0.0) || !(to_km >= from_km) {
        return Vec::new();
    }
    let n = libm::floor((to_km - from_km) / step_km + 1e-9) as usize;
    (0..=n).map(|k| from_km + k as f64 * step_km).collect()
}

/// Largest distance with a positive secret key rate, if any.
pub fn cutoff_distance(points: &[Result<RatePoint, RateError>]) -> Option<f64> {
    points
        .iter()
        .filter_map(|p| p.as_ref().ok())
        .filter(|p| p.r_secret_per_pulse > 0.0)
        .map(|p| p.distance_km)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bundle(values: [f64; 5]) -> ProbabilityBundle {
        ProbabilityBundle::from_values(values, Backend::Oracle, None, DetectorKind::Pnr, None)
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_relative_eq!(binary_entropy(0.25).unwrap(), 0.811_278_124_459_132_9, max_relative = 1e-15);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn transmittance_examples() {
        assert_eq!(channel_transmittance(0.0, 22.0), 1.0);
        assert_relative_eq!(channel_transmittance(44.0, 22.0), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(transmittance(22.0, 22.0, DistanceConvention::FullLength), (-1.0f64).exp());
    }

    #[test]
    fn error_rate_examples() {
        assert_eq!(error_rates(&bundle([0.1, 0.2, 0.0, 0.3, 0.0])).unwrap(), (0.0, 0.0));
        assert_eq!(error_rates(&bundle([0.1, 0.2, 0.2, 0.3, 0.3])).unwrap(), (0.5, 0.5));
        assert_eq!(error_rates(&bundle([0.1, 0.0, 0.0, 0.3, 0.0])), Err(RateError::NoSuccessfulEvents("Z")));
    }

    #[test]
    fn composed_rate_without_errors() {
        let p = ProtocolParams { eta_source: 0.5, ..ProtocolParams::default() };
        let b = bundle([0.05, 0.002, 0.0, 0.002, 0.0]);
        let pt = compose_rates(&p, b).unwrap();
        assert_relative_eq!(pt.r_secret_per_pulse, 16.0 * 0.002 * 0.5 / 0.05, max_relative = 1e-14);
        assert_relative_eq!(pt.r_secret_per_second, pt.r_secret_per_pulse / 6.7e-8, max_relative = 1e-15);
        let sq = compose_rates(&ProtocolParams { rate_form: RateForm::SquaredDivisor, ..p }, b).unwrap();
        assert_relative_eq!(sq.r_sifted, pt.r_sifted / 0.05, max_relative = 1e-14);
    }

    #[test]
    fn secret_rate_is_clamped() {
        let pt = compose_rates(&ProtocolParams::default(), bundle([0.05, 0.002, 0.002, 0.002, 0.002])).unwrap();
        assert_eq!(pt.r_secret_per_pulse, 0.0);
        assert_eq!(pt.r_secret_per_second, 0.0);
        assert!(pt.r_sifted > 0.0);
    }

    #[test]
    fn no_heralding() {
        assert_eq!(compose_rates(&ProtocolParams::default(), bundle([0.0; 5])), Err(RateError::NoHeralding));
    }

    #[test]
    fn perfect_point() {
        let p = ProtocolParams { eta: 1.0, p_dark: 0.0, ..ProtocolParams::default() };
        let pts = scan(&p, &[0.0]).unwrap();
        let pt = pts[0].as_ref().unwrap();
        assert_eq!(pt.e_z, 0.0);
        assert!(pt.r_secret_per_pulse > 0.0);
        assert_relative_eq!(pt.r_secret_per_pulse, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn scan_validates_input() {
        assert_eq!(scan(&ProtocolParams::default(), &[]), Err(RateError::EmptyScan));
        assert!(scan(&ProtocolParams::default(), &[-1.0]).is_err());
    }

    #[test]
    fn grid_includes_endpoint() {
        assert_eq!(distance_grid(0.0, 2.0, 1.0), [0.0, 1.0, 2.0]);
        assert_eq!(distance_grid(0.0, 1.0, 0.1).len(), 11);
        assert!(distance_grid(1.0, 0.0, 1.0).is_empty());
    }

    #[test]
    fn eta_ch_decreases_along_a_scan() {
        let pts = scan(&ProtocolParams::default(), &[0.0, 10.0, 20.0]).unwrap();
        let e: Vec<f64> = pts.iter().map(|p| p.as_ref().unwrap().eta_ch).collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn entropy_is_symmetric_and_bounded(x in 0.0f64..=1.0) {
                let h = binary_entropy(x).unwrap();
                prop_assert!((0.0..=1.0 + 1e-15).contains(&h));
                prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
            }

            #[test]
            fn composed_points_are_clamped(
                p_qnd in 1e-12f64..1.0,
                p_c_z in 0.0f64..1e-2,
                p_nc_z in 0.0f64..1e-2,
                p_c_x in 0.0f64..1e-2,
                p_nc_x in 0.0f64..1e-2,
            ) {
                prop_assume!(p_c_z + p_nc_z > 0.0 && p_c_x + p_nc_x > 0.0);
                let params = ProtocolParams::default();
                let pt = compose_rates(&params, bundle([p_qnd, p_c_z, p_nc_z, p_c_x, p_nc_x])).unwrap();
                prop_assert!(pt.r_secret_per_pulse >= 0.0 && pt.r_secret_per_pulse <= pt.r_sifted);
                prop_assert!((0.0..=1.0).contains(&pt.qber) && (0.0..=1.0).contains(&pt.e_x));
                prop_assert!((pt.r_secret_per_second * params.tau_s - pt.r_secret_per_pulse).abs()
                    <= 1e-12 * pt.r_secret_per_pulse);
                prop_assert!(pt.r_secret_per_pulse == 0.0 || pt.r_secret_per_pulse >= f64::MIN_POSITIVE);
            }

            #[test]
            fn transmittance_decreases_with_distance(a in 0.0f64..2000.0, b in 0.0f64..2000.0, l in 1.0f64..50.0) {
                let (near, far) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(channel_transmittance(far, l) <= channel_transmittance(near, l));
                let full = transmittance(near, l, DistanceConvention::FullLength);
                prop_assert!((full - channel_transmittance(near, l).powi(2)).abs() <= 1e-12);
            }

            #[test]
            fn grid_is_ordered_and_bounded(from in 0.0f64..100.0, span in 0.0f64..500.0, step in 0.5f64..50.0) {
                let g = distance_grid(from, from + span, step);
                prop_assert_eq!(g[0], from);
                prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(*g.last().unwrap() <= from + span + 1e-6);
                prop_assert!(from + span - g.last().unwrap() < step);
            }
        }
    }
}
