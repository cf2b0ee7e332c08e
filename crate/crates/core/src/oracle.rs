//! Brute-force reference back-end: the optical circuit simulated in Fock
//! space and scored by exhaustive enumeration of basis states.
//!
//! Per party `P` (`A` or `B`):
//!
//! 1. the transmitted pair `(r |H>|H> + |V>|V>)/sqrt(1+r^2)` on `P.src` and
//!    `P.keep`, with channel loss `eta_ch` on `P.src`;
//! 2. the QND gadget's internal pair on `P.anc` and `P.out`;
//! 3. a 50:50 beam splitter between `P.anc` and `P.src` (per polarization),
//!    whose outputs feed the herald detectors `g_h, g_v` (`P.anc`) and
//!    `h_h, h_v` (`P.src`);
//! 4. the retained photon `P.keep` measured on `a_h, a_v`, after a
//!    polarization Hadamard when the party measures in X;
//! 5. switch loss `eta_sw` on `P.out`.
//!
//! The Bell measurement mixes `B.out` and `A.out` on a 50:50 beam splitter,
//! applies a polarization Hadamard to both outputs and detects `A.out` on
//! `bsm.g_h, bsm.g_v` and `B.out` on `bsm.h_h, bsm.h_v`. Because switch loss
//! is applied to the modes themselves, every detector uses efficiency `eta`;
//! the closed form's `eta' = eta * eta_sw` is the same thing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::closed_form::reconciled::{Basis, PartyMeasurement};
use crate::closed_form::{Backend, ClosedFormError, ClosedFormParams, ProbabilityBundle, SumId};
use crate::detectors::{pnr_conditional_prob, ClickPattern, DetectorError, DetectorKind, DetectorModel, NoClickForm};
use crate::math::NeumaierSum;
use crate::photonics::{
    apply_hadamard_pol, apply_spatial_beam_splitter, apply_spatial_loss, source_state, tensor, BeamSplitterConvention,
    FockState, ModeId, PhotonicsError, Polarization,
};

/// Photon cap for the two-party circuit: two pairs per party.
pub const JOINT_MAX_PHOTONS: u32 = 8;

pub const PARTIES: [&str; 2] = ["A", "B"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Params(#[from] ClosedFormError),
    #[error("{0} is not a Bell-measurement probability")]
    NotBsm(SumId),
    #[error("no detector pattern configured for {0}")]
    NoPattern(SumId),
}

/// Detector patterns and party measurement defining one BSM probability.
#[derive(Debug, Clone, PartialEq)]
pub struct BsmEvent {
    /// Alternatives whose probabilities add, labelled `g_h, g_v, h_h, h_v`.
    pub patterns: Vec<ClickPattern>,
    pub measurement: PartyMeasurement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitConfig {
    pub params: ClosedFormParams,
    pub detector: DetectorKind,
    pub no_click_form: NoClickForm,
    /// Per-party herald pattern over `g_h, g_v, h_h, h_v, a_h, a_v`.
    pub qnd_pattern: ClickPattern,
    pub bsm_events: BTreeMap<SumId, BsmEvent>,
    /// Detector label to mode.
    pub wiring: BTreeMap<String, ModeId>,
    pub convention: BeamSplitterConvention,
    pub max_photons: u32,
    /// Polarization Hadamards on both QND beam-splitter outputs. Off by
    /// default: with them the default herald pattern selects the wrong
    /// Bell state of the gadget.
    pub qnd_hadamards: bool,
}

/// `{g_h:1, g_v:1, h_h:0, h_v:0, a_h:1, a_v:0}`.
pub fn default_qnd_pattern() -> ClickPattern {
    ClickPattern::counts(&[("g_h", 1), ("g_v", 1), ("h_h", 0), ("h_v", 0), ("a_h", 1), ("a_v", 0)])
}

/// Both clicks on one BSM arm: `{g_h:1, g_v:1, h_h:0, h_v:0}`.
pub fn coincidence_pattern() -> ClickPattern {
    ClickPattern::counts(&[("g_h", 1), ("g_v", 1), ("h_h", 0), ("h_v", 0)])
}

/// H on one arm and V on the other: `{g_h:1, g_v:0, h_h:0, h_v:1}`.
pub fn non_coincidence_pattern() -> ClickPattern {
    ClickPattern::counts(&[("g_h", 1), ("g_v", 0), ("h_h", 0), ("h_v", 1)])
}

/// The transcribed non-coincidence pattern, two H clicks:
/// `{g_h:1, g_v:0, h_h:1, h_v:0}`.
pub fn printed_non_coincidence_pattern() -> ClickPattern {
    ClickPattern::counts(&[("g_h", 1), ("g_v", 0), ("h_h", 1), ("h_v", 0)])
}

/// The four herald patterns that announce a successful QND, without the
/// retained-photon entries.
pub fn herald_patterns() -> [ClickPattern; 4] {
    [
        ClickPattern::counts(&[("g_h", 1), ("g_v", 1), ("h_h", 0), ("h_v", 0)]),
        ClickPattern::counts(&[("g_h", 0), ("g_v", 0), ("h_h", 1), ("h_v", 1)]),
        ClickPattern::counts(&[("g_h", 1), ("g_v", 0), ("h_h", 0), ("h_v", 1)]),
        ClickPattern::counts(&[("g_h", 0), ("g_v", 1), ("h_h", 1), ("h_v", 0)]),
    ]
}

/// The four BSM patterns counted as a successful Bell measurement.
pub fn bsm_success_patterns() -> [ClickPattern; 4] {
    herald_patterns()
}

fn keep_pattern(outcome: Polarization) -> ClickPattern {
    match outcome {
        Polarization::H => ClickPattern::counts(&[("a_h", 1), ("a_v", 0)]),
        Polarization::V => ClickPattern::counts(&[("a_h", 0), ("a_v", 1)]),
    }
}

/// Default detector layout.
pub fn default_wiring() -> BTreeMap<String, ModeId> {
    let mut w = BTreeMap::new();
    for p in PARTIES {
        for (label, spatial) in [("g", "anc"), ("h", "src"), ("a", "keep")] {
            for pol in Polarization::BOTH {
                let suffix = if pol == Polarization::H { "h" } else { "v" };
                w.insert(format!("{p}.{label}_{suffix}"), ModeId::signal(format!("{p}.{spatial}"), pol));
            }
        }
    }
    for (label, spatial) in [("g", "A.out"), ("h", "B.out")] {
        for pol in Polarization::BOTH {
            let suffix = if pol == Polarization::H { "h" } else { "v" };
            w.insert(format!("bsm.{label}_{suffix}"), ModeId::signal(spatial, pol));
        }
    }
    w
}

impl CircuitConfig {
    pub fn new(params: ClosedFormParams, detector: DetectorKind) -> Self {
        let mut bsm_events = BTreeMap::new();
        for id in SumId::BSM {
            let pattern = match id {
                SumId::CZ | SumId::CX => coincidence_pattern(),
                _ => non_coincidence_pattern(),
            };
            let measurement = PartyMeasurement::for_sum(id).expect("BSM sums carry a measurement");
            bsm_events.insert(id, BsmEvent { patterns: alloc::vec![pattern], measurement });
        }
        CircuitConfig {
            params,
            detector,
            no_click_form: NoClickForm::default(),
            qnd_pattern: default_qnd_pattern(),
            bsm_events,
            wiring: default_wiring(),
            convention: BeamSplitterConvention::default(),
            max_photons: JOINT_MAX_PHOTONS,
            qnd_hadamards: false,
        }
    }

    pub fn with_convention(mut self, convention: BeamSplitterConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_no_click_form(mut self, form: NoClickForm) -> Self {
        self.no_click_form = form;
        self
    }

    /// Replaces the non-coincidence patterns with the transcribed two-H form.
    pub fn with_printed_non_coincidence(mut self) -> Self {
        for id in [SumId::NcZ, SumId::NcX] {
            if let Some(e) = self.bsm_events.get_mut(&id) {
                e.patterns = alloc::vec![printed_non_coincidence_pattern()];
            }
        }
        self
    }

    /// Every detector uses `eta`; switch loss sits in the circuit.
    pub fn detector_model(&self) -> Result<DetectorModel, OracleError> {
        Ok(DetectorModel::new(self.detector, self.params.eta, self.params.p_dark)?
            .with_no_click_form(self.no_click_form))
    }

    /// One party's circuit. `eta_sw` is passed separately so the QND-only
    /// probability can skip the switch.
    pub fn party_state(&self, party: &str, basis: Basis, eta_sw: f64) -> Result<FockState, OracleError> {
        let p = &self.params;
        let (src, keep, anc, out) =
            (format!("{party}.src"), format!("{party}.keep"), format!("{party}.anc"), format!("{party}.out"));
        let cap = self.max_photons;
        let mut st = source_state(p.r, &src, &keep)?.with_max_photons(cap)?;
        st = apply_spatial_loss(&st, &src, p.eta_ch)?;
        st = tensor(&st, &source_state(p.r, &anc, &out)?.with_max_photons(cap)?)?;
        st = apply_spatial_beam_splitter(&st, &anc, &src, self.convention)?;
        if self.qnd_hadamards {
            st = apply_hadamard_pol(&st, &anc)?;
            st = apply_hadamard_pol(&st, &src)?;
        }
        if basis == Basis::X {
            st = apply_hadamard_pol(&st, &keep)?;
        }
        Ok(apply_spatial_loss(&st, &out, eta_sw)?)
    }

    /// Both parties followed by the Bell measurement optics.
    pub fn joint_state(&self, basis: Basis) -> Result<FockState, OracleError> {
        let a = self.party_state("A", basis, self.params.eta_sw)?;
        let b = self.party_state("B", basis, self.params.eta_sw)?;
        let mut st = tensor(&a, &b)?;
        st = apply_spatial_beam_splitter(&st, "B.out", "A.out", self.convention)?;
        st = apply_hadamard_pol(&st, "A.out")?;
        Ok(apply_hadamard_pol(&st, "B.out")?)
    }

    fn party_event(&self, party: &str, keep: Option<Polarization>) -> Result<ClickPattern, OracleError> {
        let mut pat = self.qnd_pattern.clone();
        if let Some(k) = keep {
            pat = pat.merged(&keep_pattern(k))?;
        }
        Ok(pat.scoped(&format!("{party}.")))
    }

    /// The full detector pattern (both heralds, both party outcomes, BSM)
    /// for each configured alternative of `id`.
    pub fn bsm_patterns(&self, id: SumId) -> Result<(Basis, Vec<ClickPattern>), OracleError> {
        if !id.is_bsm() {
            return Err(OracleError::NotBsm(id));
        }
        let event = self.bsm_events.get(&id).ok_or(OracleError::NoPattern(id))?;
        if event.patterns.is_empty() {
            return Err(OracleError::NoPattern(id));
        }
        let m = event.measurement;
        let heralds = self.party_event("A", Some(m.alice))?.merged(&self.party_event("B", Some(m.bob))?)?;
        let mut out = Vec::with_capacity(event.patterns.len());
        for p in &event.patterns {
            out.push(heralds.merged(&p.scoped("bsm."))?);
        }
        Ok((m.basis, out))
    }
}

/// Per-detector response tables for one pattern: `(slot, P(reading | n))`.
type Tables = Vec<(Option<usize>, Vec<f64>)>;

fn tables(
    state: &FockState,
    wiring: &BTreeMap<String, ModeId>,
    pattern: &ClickPattern,
    model: &DetectorModel,
) -> Result<Tables, OracleError> {
    let pattern = pattern.for_kind(model.kind)?;
    let cap = state.max_photons();
    let mut out = Vec::with_capacity(pattern.len());
    for label in pattern.labels() {
        let mode = wiring.get(label).ok_or_else(|| DetectorError::UnknownLabel(label.into()))?;
        let want = pattern.get(label).expect("label comes from the pattern");
        let mut table = Vec::with_capacity(cap as usize + 1);
        for n in 0..=cap {
            let v = match model.kind {
                DetectorKind::Pnr => pnr_conditional_prob(want, n, model)?,
                DetectorKind::Threshold if want == 1 => model.one_prob(n as i64),
                DetectorKind::Threshold => model.zero_prob(n as i64),
            };
            table.push(v);
        }
        out.push((state.slot(mode), table));
    }
    Ok(out)
}

/// Probability of an event built as a product of independent choices:
/// each group lists alternative patterns over its own detectors, and the
/// event occurs when every group matches one of its alternatives.
pub fn event_probability(
    state: &FockState,
    wiring: &BTreeMap<String, ModeId>,
    groups: &[Vec<ClickPattern>],
    model: &DetectorModel,
) -> Result<f64, OracleError> {
    model.validate()?;
    let mut compiled: Vec<Vec<Tables>> = Vec::with_capacity(groups.len());
    for g in groups {
        compiled.push(g.iter().map(|p| tables(state, wiring, p, model)).collect::<Result<_, _>>()?);
    }
    let mut total = NeumaierSum::new();
    for (basis, amp) in state.iter() {
        let mut p = amp.norm_sqr();
        for alternatives in &compiled {
            let mut any = 0.0;
            for t in alternatives {
                let mut q = 1.0;
                for (slot, table) in t {
                    q *= table[slot.map_or(0, |k| basis.count(k) as usize)];
                    if q == 0.0 {
                        break;
                    }
                }
                any += q;
            }
            p *= any;
            if p == 0.0 {
                break;
            }
        }
        total.add(p);
    }
    Ok(total.value())
}

/// Probability of the single-party herald pattern (with the retained photon
/// read in Z).
pub fn oracle_qnd(cfg: &CircuitConfig) -> Result<f64, OracleError> {
    cfg.params.validate()?;
    let st = cfg.party_state("A", Basis::Z, 1.0)?;
    let pat = cfg.party_event("A", None)?;
    event_probability(&st, &cfg.wiring, &[alloc::vec![pat]], &cfg.detector_model()?)
}

/// Joint probability of both heralds, both party outcomes and the BSM
/// pattern of `id`.
pub fn oracle_bsm(cfg: &CircuitConfig, id: SumId) -> Result<f64, OracleError> {
    cfg.params.validate()?;
    let (basis, patterns) = cfg.bsm_patterns(id)?;
    let st = cfg.joint_state(basis)?;
    event_probability(&st, &cfg.wiring, &[patterns], &cfg.detector_model()?)
}

/// All five probabilities, building each joint state once.
pub fn oracle_bundle(cfg: &CircuitConfig) -> Result<ProbabilityBundle, OracleError> {
    cfg.params.validate()?;
    let model = cfg.detector_model()?;
    let mut values = [0.0; 5];
    values[0] = oracle_qnd(cfg)?;
    let mut states: BTreeMap<u8, FockState> = BTreeMap::new();
    for (k, id) in SumId::ALL.into_iter().enumerate().skip(1) {
        let (basis, patterns) = cfg.bsm_patterns(id)?;
        let key = basis as u8;
        let state = match states.entry(key) {
            alloc::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            alloc::collections::btree_map::Entry::Vacant(e) => e.insert(cfg.joint_state(basis)?),
        };
        values[k] = event_probability(state, &cfg.wiring, &[patterns], &model)?;
    }
    Ok(ProbabilityBundle::from_values(values, Backend::Oracle, None, cfg.detector, None))
}

/// Directly simulated success probabilities used to decide between the two
/// printed forms of the sifted rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFormEvidence {
    pub p_qnd: f64,
    pub p_c_z: f64,
    pub p_nc_z: f64,
    /// Probability that one party's QND heralds, any of the eight outcomes.
    pub p_s_direct: f64,
    /// Probability of a successful BSM given both heralds.
    pub p_bm_direct: f64,
    /// `p_s_direct * p_bm_direct`.
    pub sifted_direct: f64,
    /// `16 (p_c + p_nc) / p_qnd`.
    pub sifted_single_divisor: f64,
    /// `16 (p_c + p_nc) / p_qnd^2`.
    pub sifted_squared_divisor: f64,
}

impl RateFormEvidence {
    fn deviation(candidate: f64, reference: f64) -> f64 {
        if reference == 0.0 {
            candidate.abs()
        } else {
            ((candidate - reference) / reference).abs()
        }
    }

    /// Relative deviation of the single-divisor form from the simulation.
    pub fn single_divisor_deviation(&self) -> f64 {
        Self::deviation(self.sifted_single_divisor, self.sifted_direct)
    }

    pub fn squared_divisor_deviation(&self) -> f64 {
        Self::deviation(self.sifted_squared_divisor, self.sifted_direct)
    }

    /// True when the `/p_qnd` form is the closer one.
    pub fn supports_single_divisor(&self) -> bool {
        self.single_divisor_deviation() < self.squared_divisor_deviation()
    }
}

/// Simulates heralding and Bell-measurement success directly (all herald
/// patterns, both party outcomes, all four BSM success patterns) and
/// compares with the two printed compositions of the sifted rate.
pub fn rate_form_evidence(cfg: &CircuitConfig) -> Result<RateFormEvidence, OracleError> {
    cfg.params.validate()?;
    let model = cfg.detector_model()?;
    let party_group = |party: &str| -> Result<Vec<ClickPattern>, OracleError> {
        let mut g = Vec::new();
        for h in herald_patterns() {
            for keep in Polarization::BOTH {
                g.push(h.merged(&keep_pattern(keep))?.scoped(&format!("{party}.")));
            }
        }
        Ok(g)
    };
    let mut herald = [0.0; 2];
    for (k, party) in PARTIES.into_iter().enumerate() {
        let st = cfg.party_state(party, Basis::Z, 1.0)?;
        herald[k] = event_probability(&st, &cfg.wiring, &[party_group(party)?], &model)?;
    }
    let joint = cfg.joint_state(Basis::Z)?;
    let bsm: Vec<ClickPattern> = bsm_success_patterns().iter().map(|p| p.scoped("bsm.")).collect();
    let all = event_probability(&joint, &cfg.wiring, &[party_group("A")?, party_group("B")?, bsm], &model)?;
    let bundle = oracle_bundle(cfg)?;
    let p_s_direct = herald[0];
    let p_bm_direct = all / (herald[0] * herald[1]);
    let success = bundle.p_c_z + bundle.p_nc_z;
    Ok(RateFormEvidence {
        p_qnd: bundle.p_qnd,
        p_c_z: bundle.p_c_z,
        p_nc_z: bundle.p_nc_z,
        p_s_direct,
        p_bm_direct,
        sifted_direct: p_s_direct * p_bm_direct,
        sifted_single_divisor: 16.0 * success / bundle.p_qnd,
        sifted_squared_divisor: 16.0 * success / (bundle.p_qnd * bundle.p_qnd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Frozen regression value of the ideal herald probability.
    const V_QND: f64 = 1.0 / 16.0;

    fn ideal() -> CircuitConfig {
        CircuitConfig::new(ClosedFormParams::ideal(), DetectorKind::Pnr)
    }

    fn lossy(kind: DetectorKind) -> CircuitConfig {
        CircuitConfig::new(ClosedFormParams::new(1.0, 0.5, 0.8, 0.9, 1e-3).unwrap(), kind)
    }

    #[test]
    fn ideal_herald_probability_is_frozen() {
        let v = oracle_qnd(&ideal()).unwrap();
        assert_relative_eq!(v, V_QND, max_relative = 1e-14);
        // Eight equally likely herald outcomes make up the gadget's success.
        let e = rate_form_evidence(&ideal()).unwrap();
        assert_relative_eq!(e.p_s_direct, 8.0 * V_QND, max_relative = 1e-14);
    }

    #[test]
    fn ideal_bundle() {
        let b = oracle_bundle(&ideal()).unwrap();
        assert_relative_eq!(b.p_c_z, 1.0 / 1024.0, max_relative = 1e-13);
        assert_relative_eq!(b.p_c_x, 1.0 / 1024.0, max_relative = 1e-13);
        assert!(b.p_nc_z.abs() < 1e-16);
        assert!(b.p_nc_x.abs() < 1e-16);
        // e_Z = p_nc / (p_c + p_nc) vanishes.
        assert!(b.p_nc_z / (b.p_c_z + b.p_nc_z) <= 1e-12);
        assert_eq!(b.backend, Backend::Oracle);
    }

    #[test]
    fn dark_channel_gives_zero() {
        let p = ClosedFormParams::new(1.0, 0.0, 0.9, 0.9, 0.0).unwrap();
        let b = oracle_bundle(&CircuitConfig::new(p, DetectorKind::Pnr)).unwrap();
        for id in SumId::ALL {
            assert_eq!(b.get(id), 0.0, "{id}");
        }
    }

    #[test]
    fn bundle_matches_individual_calls() {
        let cfg = lossy(DetectorKind::Pnr);
        let b = oracle_bundle(&cfg).unwrap();
        assert_eq!(b.p_qnd, oracle_qnd(&cfg).unwrap());
        for id in SumId::BSM {
            assert_eq!(b.get(id), oracle_bsm(&cfg, id).unwrap(), "{id}");
        }
    }

    #[test]
    fn convention_independence() {
        for kind in [DetectorKind::Pnr, DetectorKind::Threshold] {
            let base = oracle_bundle(&lossy(kind)).unwrap();
            for conv in [BeamSplitterConvention::Conjugate, BeamSplitterConvention::Symmetric] {
                let other = oracle_bundle(&lossy(kind).with_convention(conv)).unwrap();
                for id in SumId::ALL {
                    assert!((base.get(id) - other.get(id)).abs() <= 1e-12, "{kind} {conv:?} {id}");
                }
            }
        }
    }

    #[test]
    fn party_swap_symmetry() {
        // Reading the arms the other way round exchanges the parties' roles
        // in the Bell measurement.
        let cfg = lossy(DetectorKind::Pnr);
        let mut swapped = cfg.clone();
        for (label, spatial) in [("g", "B.out"), ("h", "A.out")] {
            for (suffix, pol) in [("h", Polarization::H), ("v", Polarization::V)] {
                swapped.wiring.insert(format!("bsm.{label}_{suffix}"), ModeId::signal(spatial, pol));
            }
        }
        let a = oracle_bundle(&cfg).unwrap();
        let b = oracle_bundle(&swapped).unwrap();
        for id in SumId::ALL {
            assert_relative_eq!(a.get(id), b.get(id), max_relative = 1e-12);
        }
    }

    #[test]
    fn photon_counts_are_exhaustive() {
        // Summing every PNR reading on all six detectors of one party
        // recovers the norm when there are no dark counts.
        let p = ClosedFormParams::new(2.0, 0.3, 0.8, 1.0, 0.0).unwrap();
        let cfg = CircuitConfig::new(p, DetectorKind::Pnr);
        let st = cfg.party_state("A", Basis::Z, 1.0).unwrap();
        let labels = ["g_h", "g_v", "h_h", "h_v", "a_h", "a_v"];
        let groups: Vec<Vec<ClickPattern>> =
            labels.iter().map(|l| (0..=4).map(|k| ClickPattern::counts(&[(l, k)]).scoped("A.")).collect()).collect();
        let total = event_probability(&st, &cfg.wiring, &groups, &cfg.detector_model().unwrap()).unwrap();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn efficiency_scaling_of_the_herald() {
        // Three detectors click in the herald pattern, so at perfect channel
        // the probability scales as eta^3 to leading order.
        let full = oracle_qnd(&ideal()).unwrap();
        let p = ClosedFormParams::new(1.0, 1.0, 0.93, 1.0, 2e-10).unwrap();
        let v = oracle_qnd(&CircuitConfig::new(p, DetectorKind::Pnr)).unwrap();
        assert!(v < full);
        assert_relative_eq!(v / full, 0.93f64.powi(3), max_relative = 0.1);
    }

    #[test]
    fn rate_form_evidence_supports_single_divisor() {
        let e = rate_form_evidence(&ideal()).unwrap();
        assert_relative_eq!(e.sifted_direct, e.sifted_single_divisor, max_relative = 1e-12);
        assert!(e.supports_single_divisor());
        assert_relative_eq!(e.sifted_squared_divisor, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn printed_non_coincidence_pattern_differs() {
        let cfg = lossy(DetectorKind::Pnr);
        let prose = oracle_bsm(&cfg, SumId::NcZ).unwrap();
        let printed = oracle_bsm(&cfg.clone().with_printed_non_coincidence(), SumId::NcZ).unwrap();
        assert!(prose > 0.0 && printed > 0.0);
        assert!((prose - printed).abs() > 1e-6 * prose);
    }

    #[test]
    fn qnd_is_rejected_as_bsm() {
        assert!(matches!(oracle_bsm(&ideal(), SumId::Qnd), Err(OracleError::NotBsm(_))));
    }
}
