//! The five sums with every transcription fault that the oracle exposed
//! corrected.
//!
//! Each correction is a [`Corrections`] flag, so any of them can be withheld
//! to measure its effect; [`CATALOG`] records what was transcribed, what
//! replaced it and why. With `Corrections::empty()` the builders reproduce
//! [`super::verbatim`] term for term under PNR detectors.
//!
//! Structural choices that do not change any PNR value are not flags: every
//! "no photon reaches this detector" factor is written per detector rather
//! than folded into one `(1-eta)` power, which is what lets the same sums
//! serve threshold detectors.
//!
//! The BSM sums are written as templates over ket indices (`i`, `u`, ...)
//! and bra indices (`{i'}`, `{u'}`, ...). When the two parties measure in Z
//! the bra indices coincide with the ket ones; an X-basis party measurement
//! makes them independent, tied only by photon-number conservation.

use alloc::format;
use alloc::string::String;
use core::fmt;

use super::nested::{Base, DefinitionError, NestedSum, Stage, SumBuilder};
use super::SumId;
use crate::photonics::Polarization;

bitflags::bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct Corrections: u16 {
        /// Herald photon count `x+s+u` read as `x+u-s` in the QND sum.
        const QND_PHOTON_COUNT = 1 << 0;
        /// Factorials from normalizing multi-photon Fock states.
        const BOSONIC_NORMALIZATION = 1 << 1;
        /// `r^(w*i)` read as `r^(2i)` in the coincidence sums.
        const R_EXPONENT = 1 << 2;
        /// BSM amplitude base `1/sqrt(12)` read as `1/sqrt(2)`.
        const INV_SQRT2 = 1 << 3;
        /// Binomial `(1-u, d-l-L-q)` read as `(1-U, d-l-L-q)`.
        const BOB_V_BINOMIAL = 1 << 4;
        /// Upper bound `min(d-l-L', 1-u)` of `q'` read with `l'`.
        const Q_PRIME_BOUND = 1 << 5;
        /// Lower bound of `J'` offset by the outcome count it splits.
        const J_PRIME_BOUND = 1 << 6;
        /// Bra-side BSM outcome indices tied to their ket values.
        const TIE_BRA_OUTCOMES = 1 << 7;
        /// Missing `-O'` in the non-coincidence sign.
        const O_PRIME_SIGN = 1 << 8;
        /// Non-coincidence detector pattern taken from the H/V-split reading.
        const PROSE_NC_PATTERN = 1 << 9;
        /// Party-side diagonal-basis measurement in the X sums.
        const X_PARTY_MEASUREMENT = 1 << 10;
    }
}

/// Metadata for one correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectionInfo {
    pub flag: Corrections,
    pub name: &'static str,
    pub applies_to: &'static [SumId],
    pub transcribed: &'static str,
    pub corrected: &'static str,
    pub reason: &'static str,
}

const ALL_BSM: &[SumId] = &[SumId::CZ, SumId::NcZ, SumId::CX, SumId::NcX];
const COINCIDENCE: &[SumId] = &[SumId::CZ, SumId::CX];
const NON_COINCIDENCE: &[SumId] = &[SumId::NcZ, SumId::NcX];

pub const CATALOG: &[CorrectionInfo] = &[
    CorrectionInfo {
        flag: Corrections::QND_PHOTON_COUNT,
        name: "qnd_photon_count",
        applies_to: &[SumId::Qnd],
        transcribed: "f(x+s+u)",
        corrected: "f(x+u-s)",
        reason: "the g_h detector receives x+u photons of which s leave through h_h; \
                 the BSM sums already use x+u-s for the same detector",
    },
    CorrectionInfo {
        flag: Corrections::BOSONIC_NORMALIZATION,
        name: "bosonic_normalization",
        applies_to: &[SumId::Qnd, SumId::CZ, SumId::NcZ, SumId::CX, SumId::NcX],
        transcribed: "no factorials",
        corrected: "(x+u-s)! s! (1+y-t-u)! t! per party, a! (d-a)! A! (2-d-A)! at the BSM",
        reason: "a Fock state with n photons in one mode carries sqrt(n!) relative to the \
                 creation-operator monomial; squared amplitudes need n! per detector",
    },
    CorrectionInfo {
        flag: Corrections::R_EXPONENT,
        name: "r_exponent",
        applies_to: COINCIDENCE,
        transcribed: "r^(w*i+2u+2I+2U)",
        corrected: "r^(2i+2u+2I+2U)",
        reason: "each H photon of the source contributes one factor r per amplitude; \
                 the non-coincidence sums already carry 2i",
    },
    CorrectionInfo {
        flag: Corrections::INV_SQRT2,
        name: "inv_sqrt2",
        applies_to: ALL_BSM,
        transcribed: "(1/sqrt(12))^(12+2x+2y+2X+2Y)",
        corrected: "(1/sqrt(2))^(12+2x+2y+2X+2Y)",
        reason: "every beam splitter and Hadamard contributes 1/sqrt(2); with 1/sqrt(12) \
                 the ideal coincidence probability is off by a factor 6^-(6+x+y+X+Y)",
    },
    CorrectionInfo {
        flag: Corrections::BOB_V_BINOMIAL,
        name: "bob_v_binomial",
        applies_to: COINCIDENCE,
        transcribed: "C(1-u, d-l-L-q)",
        corrected: "C(1-U, d-l-L-q)",
        reason: "d-l-L-q counts photons taken from Bob's V output, whose occupation is 1-U; \
                 the non-coincidence sums already use 1-U",
    },
    CorrectionInfo {
        flag: Corrections::Q_PRIME_BOUND,
        name: "q_prime_bound",
        applies_to: COINCIDENCE,
        transcribed: "q' <= min(d-l-L', 1-u)",
        corrected: "q' <= min(d-l'-L', 1-u)",
        reason: "the bra-side bound mixes the ket index l into an otherwise primed expression",
    },
    CorrectionInfo {
        flag: Corrections::J_PRIME_BOUND,
        name: "j_prime_bound",
        applies_to: ALL_BSM,
        transcribed: "J' >= max(0, 2-u-d+l'+L'-U)",
        corrected: "J' >= max(0, A-(2-u-d+l'+L'-U))",
        reason: "C(2-u-d+l'+L'-U, A-J') needs A-J' <= 2-u-d+l'+L'-U; the ket-side bound of J \
                 already has this form",
    },
    CorrectionInfo {
        flag: Corrections::TIE_BRA_OUTCOMES,
        name: "tie_bra_outcomes",
        applies_to: NON_COINCIDENCE,
        transcribed: "d', a', A' summed independently",
        corrected: "d'=d, a'=a, A'=A",
        reason: "detector outcomes are diagonal in the Fock basis, so bra and ket photon counts \
                 at each detector must agree; the coincidence sums already share d, a and A",
    },
    CorrectionInfo {
        flag: Corrections::O_PRIME_SIGN,
        name: "o_prime_sign",
        applies_to: NON_COINCIDENCE,
        transcribed: "(-1)^(-w-o-w'-o'-W-O-W'-d'+l'+...)",
        corrected: "(-1)^(-w-o-w'-o'-W-O-W'-O'-d'+l'+...)",
        reason: "every other beam-splitter split index carries its sign; O' was dropped",
    },
    CorrectionInfo {
        flag: Corrections::PROSE_NC_PATTERN,
        name: "prose_nc_pattern",
        applies_to: NON_COINCIDENCE,
        transcribed: "f'(a) f'(A') (1-eta')^(2-a-A')",
        corrected: "f'(a) z'(d-a) z'(A) f'(2-d-A)",
        reason: "the non-coincidence event is one H click on one BSM arm and one V click on \
                 the other; the transcribed factors count two H detectors",
    },
    CorrectionInfo {
        flag: Corrections::X_PARTY_MEASUREMENT,
        name: "x_party_measurement",
        applies_to: &[SumId::CX, SumId::NcX],
        transcribed: "identical to the Z-basis sum",
        corrected: "Hadamard on each retained photon, bra indices freed, outcomes (+,-) and (+,+)",
        reason: "an X-basis measurement interferes the H and V amplitudes of the retained \
                 photon, so the Z-basis expression cannot describe it",
    },
];

impl Corrections {
    pub fn info(self) -> Option<&'static CorrectionInfo> {
        CATALOG.iter().find(|c| c.flag == self)
    }

    /// The flags that change the given sum.
    pub fn relevant_to(id: SumId) -> Corrections {
        CATALOG.iter().filter(|c| c.applies_to.contains(&id)).fold(Corrections::empty(), |acc, c| acc | c.flag)
    }
}

impl fmt::Display for Corrections {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in CATALOG.iter().filter(|c| self.contains(c.flag)) {
            if !first {
                f.write_str("+")?;
            }
            f.write_str(c.name)?;
            first = false;
        }
        if first {
            f.write_str("none")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

/// Basis and outcome each party reports for a BSM sum.
///
/// In the X basis `H` stands for `+` and `V` for `-`: the measurement is a
/// polarization Hadamard followed by the same H/V detector pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartyMeasurement {
    pub basis: Basis,
    pub alice: Polarization,
    pub bob: Polarization,
}

impl PartyMeasurement {
    /// The representative outcome each BSM sum is written for.
    pub fn for_sum(id: SumId) -> Option<PartyMeasurement> {
        use Polarization::{H, V};
        let (basis, alice, bob) = match id {
            SumId::Qnd => return None,
            SumId::CZ | SumId::NcZ => (Basis::Z, H, H),
            SumId::CX => (Basis::X, H, V),
            SumId::NcX => (Basis::X, H, H),
        };
        Some(PartyMeasurement { basis, alice, bob })
    }
}

pub fn sum(id: SumId, corr: Corrections) -> Result<NestedSum, DefinitionError> {
    match PartyMeasurement::for_sum(id) {
        None => qnd(corr),
        Some(m) => bsm(id, corr, m),
    }
}

/// A BSM sum with an explicit party measurement.
///
/// Without [`Corrections::X_PARTY_MEASUREMENT`] an X-basis request falls
/// back to the Z-basis expression for outcome (H, H), as transcribed.
pub fn bsm(id: SumId, corr: Corrections, m: PartyMeasurement) -> Result<NestedSum, DefinitionError> {
    let x_mode = m.basis == Basis::X && corr.contains(Corrections::X_PARTY_MEASUREMENT);
    let m = if m.basis == Basis::X && !x_mode {
        PartyMeasurement { basis: Basis::Z, alice: Polarization::H, bob: Polarization::H }
    } else {
        m
    };
    let t = Template { corr, x_mode };
    let mut b = SumBuilder::new(format!("{id}/reconciled[{corr}]"));
    match id {
        SumId::Qnd => return qnd(corr),
        SumId::CZ | SumId::CX => t.coincidence(&mut b),
        SumId::NcZ | SumId::NcX => t.non_coincidence(&mut b),
    }
    t.parties(&mut b, m);
    b.build()
}

fn qnd(corr: Corrections) -> Result<NestedSum, DefinitionError> {
    let mut b = SumBuilder::new(format!("p_qnd/reconciled[{corr}]"));
    b.index("i", "0", "1")
        .index("u", "0", "1")
        .index("x", "0", "i")
        .index("y", "0", "1-i")
        .index("s", "0", "x+u")
        .index("w", "max(0,s-u)", "min(s,x)")
        .index("w'", "max(0,s-u)", "min(s,x)")
        .index("t", "0", "1-u+y")
        .index("o", "max(0,t-(1-u))", "min(t,y)")
        .index("o'", "max(0,t-(1-u))", "min(t,y)");
    binoms(&mut b, "1,i 1,i 1,u 1,u i,x 1-i,y i,x 1-i,y y,o u,s-w 1-u,t-o x,w' y,o' u,s-w' x,w 1-u,t-o'");
    let herald = if corr.contains(Corrections::QND_PHOTON_COUNT) { "x+u-s" } else { "x+s+u" };
    b.pow(Base::InvOnePlusR2, "2")
        .pow(Base::R, "2*i+2*u")
        .pow(Base::SqrtEtaCh, "2*x+2*y")
        .pow(Base::SqrtOneMinusEtaCh, "2-2*x-2*y")
        .pow(Base::InvSqrt2, "2+2*x+2*y")
        .pow(Base::MinusOne, "-w-o-w'-o'")
        .click(Stage::Qnd, herald)
        .no_click(Stage::Qnd, "s")
        .click(Stage::Qnd, "1+y-t-u")
        .no_click(Stage::Qnd, "t")
        .click(Stage::Qnd, "i")
        .no_click(Stage::Qnd, "1-i");
    if corr.contains(Corrections::BOSONIC_NORMALIZATION) {
        b.factorial(herald).factorial("s").factorial("1+y-t-u").factorial("t");
    }
    b.build()
}

fn binoms(b: &mut SumBuilder, list: &str) {
    for pair in list.split_whitespace() {
        let (n, k) = pair.split_once(',').expect("binomial entries are `n,k`");
        b.binom(n, k);
    }
}

struct Template {
    corr: Corrections,
    x_mode: bool,
}

impl Template {
    fn has(&self, c: Corrections) -> bool {
        self.corr.contains(c)
    }

    /// Resolves `{v'}` placeholders: the bra index in X mode, the ket index
    /// otherwise.
    fn fill(&self, s: &str) -> String {
        if self.x_mode {
            s.replace(['{', '}'], "")
        } else {
            s.replace("'}", "").replace('{', "")
        }
    }

    fn index(&self, b: &mut SumBuilder, name: &str, lo: &str, hi: &str) {
        b.index(name, self.fill(lo), self.fill(hi));
    }

    fn binoms(&self, b: &mut SumBuilder, list: &str) {
        binoms(b, &self.fill(list));
    }

    /// Bra copies of one party's source indices and the keep-mode Hadamard
    /// split, declared right after that party's `y`.
    fn bra_indices(&self, b: &mut SumBuilder, upper: bool) {
        if !self.x_mode {
            return;
        }
        let [i, u, x, y, m, k] = party_names(upper);
        let p = |v: &str| format!("{v}'");
        b.index(p(i), "0", "1")
            .index(p(x), "0", p(i))
            .index(p(y), "0", format!("1-{}", p(i)))
            .index(p(u), format!("{x}+{u}-{}", p(x)), format!("{x}+{u}-{}", p(x)))
            .index(m, "0", "1")
            .index(k, format!("max(0,{m}-(1-{i}))"), format!("min({m},{i})"))
            .index(p(k), format!("max(0,{m}-(1-{}))", p(i)), format!("min({m},{})", p(i)));
    }

    fn coincidence(&self, b: &mut SumBuilder) {
        let q_hi = if self.has(Corrections::Q_PRIME_BOUND) { "min(d-l'-L',1-{u'})" } else { "min(d-l-L',1-{u'})" };
        let j_lo = if self.has(Corrections::J_PRIME_BOUND) {
            "max(0,A-(2-{u'}-d+l'+L'-{U'}))"
        } else {
            "max(0,2-{u'}-d+l'+L'-{U'})"
        };
        self.index(b, "i", "0", "1");
        self.index(b, "u", "0", "1");
        self.index(b, "x", "0", "i");
        self.index(b, "y", "0", "1-i");
        self.bra_indices(b, false);
        self.index(b, "s", "0", "x+u");
        self.index(b, "w", "max(0,s-u)", "min(s,x)");
        self.index(b, "w'", "max(0,s-{u'})", "min(s,{x'})");
        self.index(b, "t", "0", "1-u+y");
        self.index(b, "I", "0", "1");
        self.index(b, "U", "0", "1");
        self.index(b, "X", "0", "I");
        self.index(b, "Y", "0", "1-I");
        self.bra_indices(b, true);
        self.index(b, "S", "0", "X+U");
        self.index(b, "W", "max(0,S-U)", "min(S,X)");
        self.index(b, "W'", "max(0,S-{U'})", "min(S,{X'})");
        self.index(b, "o", "max(0,t-1+u)", "min(t,y)");
        self.index(b, "T", "0", "1-U+Y");
        self.index(b, "O", "max(0,T-(1-U))", "min(T,Y)");
        self.index(b, "d", "0", "2");
        self.index(b, "O'", "max(0,T-(1-{U'}))", "min(T,{Y'})");
        self.index(b, "a", "0", "d");
        self.index(b, "l'", "max(0,d-2+{u'})", "min(d,{u'})");
        self.index(b, "o'", "max(0,t-1+{u'})", "min(t,{y'})");
        self.index(b, "L'", "max(0,d-l'-2+{u'}+{U'})", "min(d-l',{U'})");
        self.index(b, "A", "0", "2-d");
        self.index(b, "l", "max(0,d-2+u)", "min(d,u)");
        self.index(b, "L", "max(0,d-l-2+u+U)", "min(d-l,U)");
        self.index(b, "j", "max(0,a-d+l+L)", "min(a,l+L)");
        self.index(b, "q", "max(0,d-l-L-1+U)", "min(d-l-L,1-u)");
        self.index(b, "j'", "max(0,a-d+l'+L')", "min(a,l'+L')");
        self.index(b, "J'", j_lo, "min(A,{u'}-l'+{U'}-L')");
        self.index(b, "q'", "max(0,d-l'-L'-1+{U'})", q_hi);
        self.index(b, "J", "max(0,A-2+u+d-l-L+U)", "min(A,u-l+U-L)");

        let bob_v = if self.has(Corrections::BOB_V_BINOMIAL) { "1-U" } else { "1-u" };
        self.binoms(
            b,
            &format!(
                "1,i 1,{{i'}} 1,u 1,{{u'}} i,x 1-i,y {{i'}},{{x'}} 1-{{i'}},{{y'}} \
                 x,w y,o u,s-w 1-u,t-o {{x'}},w' {{y'}},o' 1,U {{u'}},s-w' 1-{{u'}},t-o' \
                 1-u,q u,l 1,I 1,{{I'}} 1-I,Y I,X 1-{{I'}},{{Y'}} \
                 X,W Y,O U,S-W 1-U,T-O {{X'}},W' {{Y'}},O' {{U'}},S-W' 1-{{U'}},T-O' \
                 1-u,q U,L {bob_v},d-l-L-q {{U'}},L' {{u'}},l' 1-{{U'}},d-l'-L'-q' \
                 l+L,j d-l-L,a-j u,l u-l+U-L,J 2-u-d+l+L-U,A-J \
                 {{u'}}-l'+{{U'}}-L',J' 2-{{u'}}-d+l'-{{U'}}+L',A-J' d-l'-L',a-j' \
                 1,{{U'}} {{I'}},{{X'}} l'+L',j' 1-{{u'}},q'"
            ),
        );
        let r_exp =
            if self.has(Corrections::R_EXPONENT) { "i+{i'}+u+{u'}+I+{I'}+U+{U'}" } else { "w*i+u+{u'}+I+{I'}+U+{U'}" };
        b.pow(Base::R, self.fill(r_exp));
        b.pow(Base::MinusOne, "-w-o-w'-o'-W-O-W'-O'+l'+q'+j+l+q+J+j'+J'");
        b.click(Stage::Bsm, "a").click(Stage::Bsm, "d-a").no_click(Stage::Bsm, "A").no_click(Stage::Bsm, "2-d-A");
    }

    fn non_coincidence(&self, b: &mut SumBuilder) {
        let tie = self.has(Corrections::TIE_BRA_OUTCOMES);
        let j_lo = if self.has(Corrections::J_PRIME_BOUND) {
            "max(0,A'-(2-{u'}-(d'-l'-L')-{U'}))"
        } else {
            "max(0,2-{u'}-(d'-l'-L')-{U'})"
        };
        self.index(b, "i", "0", "1");
        self.index(b, "u", "0", "1");
        self.index(b, "x", "0", "i");
        self.index(b, "y", "0", "1-i");
        self.bra_indices(b, false);
        self.index(b, "s", "0", "x+u");
        self.index(b, "w", "max(0,s-u)", "min(s,x)");
        self.index(b, "w'", "max(0,s-{u'})", "min(s,{x'})");
        self.index(b, "t", "0", "1-u+y");
        self.index(b, "o", "max(0,t-(1-u))", "min(t,y)");
        self.index(b, "o'", "max(0,t-(1-{u'}))", "min(t,{y'})");
        self.index(b, "I", "0", "1");
        self.index(b, "U", "0", "1");
        self.index(b, "X", "0", "I");
        self.index(b, "Y", "0", "1-I");
        self.bra_indices(b, true);
        self.index(b, "S", "0", "X+U");
        self.index(b, "W", "max(0,S-U)", "min(S,X)");
        self.index(b, "W'", "max(0,S-{U'})", "min(S,{X'})");
        self.index(b, "T", "0", "1-U+Y");
        self.index(b, "d", "0", "2");
        if tie {
            self.index(b, "d'", "d", "d");
        } else {
            self.index(b, "d'", "0", "2");
        }
        self.index(b, "O", "max(0,T-(1-U))", "min(T,Y)");
        self.index(b, "O'", "max(0,T-(1-{U'}))", "min(T,{Y'})");
        self.index(b, "l", "max(0,d-2+u)", "min(d,u)");
        self.index(b, "a", "0", "d");
        if tie {
            self.index(b, "a'", "a", "a");
        } else {
            self.index(b, "a'", "0", "d'");
        }
        self.index(b, "A", "0", "2-d");
        if tie {
            self.index(b, "A'", "A", "A");
        } else {
            self.index(b, "A'", "0", "2-d'");
        }
        self.index(b, "l'", "max(0,d'-2+{u'})", "min(d',{u'})");
        self.index(b, "L'", "max(0,d'-l'-2+{u'}+{U'})", "min(d'-l',{U'})");
        self.index(b, "L", "max(0,d-l-2+u+U)", "min(d-l,U)");
        self.index(b, "q'", "max(0,d'-l'-L'-1+{U'})", "min(d'-l'-L',1-{u'})");
        self.index(b, "q", "max(0,d-l-L-1+U)", "min(d-l-L,1-u)");
        self.index(b, "j", "max(0,a-d+l+L)", "min(a,l+L)");
        self.index(b, "j'", "max(0,a'-d+l'+L')", "min(a',l'+L')");
        self.index(b, "J", "max(0,A-(2-u-(d-l-L)-U))", "min(A,u-l+U-L)");
        self.index(b, "J'", j_lo, "min(A',{u'}-l'+{U'}-L')");

        self.binoms(
            b,
            "1,i 1,{i'} 1,u 1,{u'} i,x 1-i,y {i'},{x'} 1-{i'},{y'} \
             x,w y,o u,s-w 1-u,t-o {x'},w' {y'},o' {u'},s-w' 1-{u'},t-o' \
             1,I 1,{I'} 1,U 1,{U'} I,X 1-I,Y {I'},{X'} 1-{I'},{Y'} \
             X,W Y,O U,S-W 1-U,T-O {X'},W' {U'},S-W' 1-{U'},T-O' \
             u,l 1-u,q 1-U,d-l-L-q U,L {Y'},O' {U'},L' {u'},l' 1-{U'},d'-l'-L'-q' 1-{u'},q' \
             l+L,j u-l+U-L,J 2-{u'}-d'+l'-{U'}+L',A'-J' d-l-L,a-j d'-l'-L',a'-j' \
             2-u-d+l+L-U,A-J l'+L',j' {u'}-l'+{U'}-L',J'",
        );
        b.pow(Base::R, self.fill("i+{i'}+u+{u'}+I+{I'}+U+{U'}"));
        let o_sign = if self.has(Corrections::O_PRIME_SIGN) { "-O'" } else { "" };
        b.pow(Base::MinusOne, format!("-w-o-w'-o'-W-O-W'-d'+l'{o_sign}"))
            .pow(Base::MinusOne, "q'-a+j-d+l+q-A+J-a'+j'-A'+J'");
        if self.has(Corrections::PROSE_NC_PATTERN) {
            b.click(Stage::Bsm, "a").no_click(Stage::Bsm, "d-a").no_click(Stage::Bsm, "A").click(Stage::Bsm, "2-d-A");
        } else {
            b.click(Stage::Bsm, "a").click(Stage::Bsm, "A'").pow(Base::OneMinusEtaPrime, "2-a-A'");
        }
    }

    /// Factors shared by every BSM sum: source amplitudes, channel loss,
    /// beam-splitter phases, QND detectors and the party measurement.
    fn parties(&self, b: &mut SumBuilder, m: PartyMeasurement) {
        let sum_xy = "x+y+{x'}+{y'}+X+Y+{X'}+{Y'}";
        let amp = if self.has(Corrections::INV_SQRT2) { Base::InvSqrt2 } else { Base::InvSqrt12 };
        b.pow(Base::InvOnePlusR2, "4")
            .pow(Base::SqrtEtaCh, self.fill(sum_xy))
            .pow(Base::SqrtOneMinusEtaCh, self.fill(&format!("4-({sum_xy})")))
            .pow(amp, self.fill(&format!("12+{sum_xy}")));
        for upper in [false, true] {
            let [i, u, x, y, mm, k] = party_names(upper);
            let (s, t) = if upper { ("S", "T") } else { ("s", "t") };
            b.click(Stage::Qnd, format!("{x}+{u}-{s}"))
                .no_click(Stage::Qnd, s)
                .click(Stage::Qnd, format!("1+{y}-{t}-{u}"))
                .no_click(Stage::Qnd, t);
            if self.has(Corrections::BOSONIC_NORMALIZATION) {
                b.factorial(format!("{x}+{u}-{s}")).factorial(s).factorial(format!("1+{y}-{t}-{u}")).factorial(t);
            }
            let outcome = if upper { m.bob } else { m.alice };
            // Photons reaching the H and V detectors of the retained mode.
            let h = if self.x_mode { mm } else { i };
            let v = format!("1-{h}");
            match outcome {
                Polarization::H => b.click(Stage::Qnd, h).no_click(Stage::Qnd, &v),
                Polarization::V => b.no_click(Stage::Qnd, h).click(Stage::Qnd, &v),
            };
            if self.x_mode {
                let p = |v: &str| format!("{v}'");
                let (ip, xp, yp, up, kp) = (p(i), p(x), p(y), p(u), p(k));
                b.binom(i, k)
                    .binom(format!("1-{i}"), format!("{mm}-{k}"))
                    .binom(&ip, &kp)
                    .binom(format!("1-{ip}"), format!("{mm}-{kp}"))
                    .pow(Base::MinusOne, format!("(1-{i})-({mm}-{k})+(1-{ip})-({mm}-{kp})"))
                    .delta(format!("({i}-{x})-({ip}-{xp})"))
                    .delta(format!("(1-{i}-{y})-(1-{ip}-{yp})"))
                    .delta(format!("({y}-{u})-({yp}-{up})"));
            }
        }
        if self.x_mode {
            b.pow(Base::InvSqrt2, "4").pow(Base::MinusOne, "u+U+u'+U'");
        }
        if self.has(Corrections::BOSONIC_NORMALIZATION) {
            b.factorial("a").factorial("d-a").factorial("A").factorial("2-d-A");
        }
    }
}

/// Source index names of one party: `[i, u, x, y, m, k]` where `m` and `k`
/// split the retained photon on the keep-mode Hadamard.
fn party_names(upper: bool) -> [&'static str; 6] {
    if upper {
        ["I", "U", "X", "Y", "M", "K"]
    } else {
        ["i", "u", "x", "y", "m", "k"]
    }
}
