//! Key-rate engine for adaptive measurement-device-independent QKD with
//! photon-number-resolving detectors.
//!
//! The five protocol probabilities (one QND herald and four Bell-measurement
//! coincidences) come from two independent back-ends: the nested closed-form
//! sums in [`closed_form`] and an exact Fock-space simulation of the optical
//! circuit in [`oracle`]. [`rates`] composes either into key rates.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod closed_form;
pub mod detectors;
pub mod ledger;
pub mod math;
pub mod oracle;
pub mod photonics;
pub mod rates;

pub use closed_form::{ClosedFormParams, ProbabilityBundle, SumId, SumVariant};
pub use detectors::{ClickPattern, DetectorKind, DetectorModel};
pub use photonics::{FockState, ModeId, Polarization};
pub use rates::{ProtocolParams, RatePoint};
