//! Reconciled closed form against the Fock-space oracle.

use amdi_core::closed_form::{self, ClosedFormEngine, ClosedFormParams, SumId, SumVariant};
use amdi_core::detectors::DetectorKind;
use amdi_core::math::within_tolerance;
use amdi_core::oracle::{oracle_bundle, CircuitConfig};

const REL: f64 = 1e-10;
const ABS: f64 = 1e-14;
const ABS_FLOOR: f64 = 1e-12;

fn grid() -> Vec<ClosedFormParams> {
    let mut out = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        for eta_ch in [1.0, 0.5, 0.1] {
            for (eta, p_dark) in [(1.0, 0.0), (0.93, 2e-10), (0.8, 1e-6)] {
                out.push(ClosedFormParams::new(r, eta_ch, eta, 1.0, p_dark).unwrap());
            }
        }
    }
    out
}

fn check(points: &[ClosedFormParams], kind: DetectorKind) {
    let engine = ClosedFormEngine::new(SumVariant::Reconciled).unwrap();
    let mut worst = 0.0f64;
    for p in points {
        let oracle = oracle_bundle(&CircuitConfig::new(*p, kind)).unwrap();
        let compiled = engine.bundle(p, kind).unwrap();
        let direct = closed_form::bundle_with(p, SumVariant::Reconciled, kind).unwrap();
        for id in SumId::ALL {
            let o = oracle.get(id);
            for (path, v) in [("compiled", compiled.get(id)), ("direct", direct.get(id))] {
                assert!(
                    within_tolerance(v, o, REL, ABS, ABS_FLOOR),
                    "{kind} {path} {id} at {p:?}: closed form {v:e}, oracle {o:e}"
                );
                if o.abs() >= ABS_FLOOR {
                    worst = worst.max(((v - o) / o).abs());
                }
            }
        }
    }
    println!("{kind}: {} points, worst relative deviation {worst:e}", points.len());
}

#[test]
fn pnr_grid_matches_oracle() {
    check(&grid(), DetectorKind::Pnr);
}

#[test]
fn threshold_grid_matches_oracle() {
    check(&grid(), DetectorKind::Threshold);
}

#[test]
fn lossy_switch_matches_oracle() {
    let points = [
        ClosedFormParams::new(1.0, 0.5, 0.93, 0.9, 2e-10).unwrap(),
        ClosedFormParams::new(0.5, 0.3, 0.8, 0.7, 1e-6).unwrap(),
        ClosedFormParams::new(2.0, 0.1, 0.8, 0.95, 1e-3).unwrap(),
    ];
    check(&points, DetectorKind::Pnr);
    check(&points, DetectorKind::Threshold);
}

/// Figure-caption detectors and attenuation at three distances.
#[test]
fn caption_distances_match_oracle() {
    let base = amdi_core::ProtocolParams::default();
    let points: Vec<_> = [0.0, 50.0, 100.0].iter().map(|&d| base.at_distance(d).closed_form_params()).collect();
    check(&points, DetectorKind::Pnr);
    check(&points, DetectorKind::Threshold);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_points_match_oracle(
            r in 0.2f64..3.0,
            eta_ch in 0.01f64..=1.0,
            eta in 0.5f64..=1.0,
            eta_sw in 0.5f64..=1.0,
            p_dark in 0.0f64..1e-2,
            threshold in any::<bool>(),
        ) {
            let p = ClosedFormParams::new(r, eta_ch, eta, eta_sw, p_dark).unwrap();
            let kind = if threshold { DetectorKind::Threshold } else { DetectorKind::Pnr };
            let oracle = oracle_bundle(&CircuitConfig::new(p, kind)).unwrap();
            let closed = closed_form::bundle_with(&p, SumVariant::Reconciled, kind).unwrap();
            for id in SumId::ALL {
                let (v, o) = (closed.get(id), oracle.get(id));
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(within_tolerance(v, o, REL, ABS, ABS_FLOOR), "{} {}: {:e} vs {:e}", kind, id, v, o);
            }
        }
    }
}
