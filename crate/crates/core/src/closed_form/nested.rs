//! Nested finite sums over integer indices.
//!
//! A [`NestedSum`] is an ordered list of indices, each ranging over
//! `[lower, upper]` where the bounds may reference earlier indices, and a
//! product of factors. Each factor is attached to the deepest index it
//! reads, so a zero binomial or delta prunes the whole subtree below it.
//!
//! Two evaluation paths share the same traversal:
//! * [`NestedSum::evaluate`] walks the loops directly at one parameter point;
//! * [`NestedSum::compile`] walks them once and groups every term into a
//!   monomial in the parameter-dependent bases with an exact integer
//!   coefficient, giving a [`CompiledSum`] that is cheap to evaluate at many
//!   points.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::expr::{Expr, Node};
use super::ClosedFormParams;
use crate::detectors::{DetectorKind, DetectorModel};
use crate::math::{binomial, factorial, powi, NeumaierSum};

/// Most indices a sum may declare.
pub const MAX_INDICES: usize = 64;

/// Largest detector photon count a compiled monomial can track.
pub const MAX_CLICK_COUNT: usize = 8;

/// How many of the largest terms an evaluation keeps for diagnostics.
pub const TOP_TERMS: usize = 8;

/// Parameter-dependent bases that appear as integer powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    /// Pair amplitude ratio `r`.
    R,
    /// `1/(1 + r^2)`.
    InvOnePlusR2,
    SqrtEtaCh,
    SqrtOneMinusEtaCh,
    InvSqrt2,
    InvSqrt12,
    /// `1 - eta` for detectors before the switches.
    OneMinusEta,
    /// `1 - eta'` with `eta' = eta * eta_sw`.
    OneMinusEtaPrime,
    MinusOne,
}

impl Base {
    pub const ALL: [Base; 9] = [
        Base::R,
        Base::InvOnePlusR2,
        Base::SqrtEtaCh,
        Base::SqrtOneMinusEtaCh,
        Base::InvSqrt2,
        Base::InvSqrt12,
        Base::OneMinusEta,
        Base::OneMinusEtaPrime,
        Base::MinusOne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Base::R => "r",
            Base::InvOnePlusR2 => "1/(1+r^2)",
            Base::SqrtEtaCh => "sqrt(eta_ch)",
            Base::SqrtOneMinusEtaCh => "sqrt(1-eta_ch)",
            Base::InvSqrt2 => "1/sqrt2",
            Base::InvSqrt12 => "1/sqrt12",
            Base::OneMinusEta => "(1-eta)",
            Base::OneMinusEtaPrime => "(1-eta')",
            Base::MinusOne => "(-1)",
        }
    }
}

/// Which detector bank a click factor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    /// QND and party detectors, efficiency `eta`.
    Qnd = 0,
    /// Bell-measurement detectors behind the switches, efficiency `eta'`.
    Bsm = 1,
}

impl Stage {
    fn loss_base(self) -> Base {
        match self {
            Stage::Qnd => Base::OneMinusEta,
            Stage::Bsm => Base::OneMinusEtaPrime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    Binom(Expr, Expr),
    /// One when the expression is zero, else zero.
    Delta(Expr),
    Pow(Base, Expr),
    Factorial(Expr),
    /// One-count (or click) probability of a detector holding `n` photons.
    Click(Stage, Expr),
    /// Zero-count (or no-click) probability of a detector holding `n` photons.
    NoClick(Stage, Expr),
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Binom(n, k) => write!(f, "C({n}, {k})"),
            Factor::Delta(e) => write!(f, "delta({e})"),
            Factor::Pow(b, e) => write!(f, "{}^({e})", b.symbol()),
            Factor::Factorial(e) => write!(f, "({e})!"),
            Factor::Click(Stage::Qnd, e) => write!(f, "f({e})"),
            Factor::Click(Stage::Bsm, e) => write!(f, "f'({e})"),
            Factor::NoClick(Stage::Qnd, e) => write!(f, "z({e})"),
            Factor::NoClick(Stage::Bsm, e) => write!(f, "z'({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexDef {
    pub name: String,
    pub lower: Expr,
    pub upper: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DefinitionError {
    #[error("sum `{sum}`: {source}")]
    Parse { sum: String, source: super::expr::ExprError },
    #[error("sum `{sum}`: index `{index}` declared twice")]
    DuplicateIndex { sum: String, index: String },
    #[error("sum `{sum}`: bound of `{index}` reads `{var}`, which is not declared before it")]
    ForwardReference { sum: String, index: String, var: String },
    #[error("sum `{sum}`: factor {factor} reads undeclared `{var}`")]
    UndeclaredVariable { sum: String, factor: String, var: String },
    #[error("sum `{sum}` declares {count} indices, limit is {MAX_INDICES}")]
    TooManyIndices { sum: String, count: usize },
    #[error("sum `{sum}` has no indices")]
    Empty { sum: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("sum `{sum}`: detector count {count} exceeds the compiled limit {MAX_CLICK_COUNT}")]
    ClickCountTooLarge { sum: String, count: i64 },
    #[error("sum `{sum}`: exponent of {base} leaves the i16 range")]
    ExponentOverflow { sum: String, base: &'static str },
}

enum Pending {
    Index(String, String, String),
    Binom(String, String),
    Delta(String),
    Pow(Base, String),
    Factorial(String),
    Click(Stage, String),
    NoClick(Stage, String),
}

/// Collects index declarations and factors from string expressions.
pub struct SumBuilder {
    label: String,
    items: Vec<Pending>,
}

impl SumBuilder {
    pub fn new(label: impl Into<String>) -> Self {
        SumBuilder { label: label.into(), items: Vec::new() }
    }

    pub fn index(&mut self, name: impl AsRef<str>, lower: impl AsRef<str>, upper: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::Index(
            name.as_ref().to_string(),
            lower.as_ref().to_string(),
            upper.as_ref().to_string(),
        ));
        self
    }

    pub fn binom(&mut self, n: impl AsRef<str>, k: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::Binom(n.as_ref().to_string(), k.as_ref().to_string()));
        self
    }

    pub fn delta(&mut self, e: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::Delta(e.as_ref().to_string()));
        self
    }

    pub fn pow(&mut self, base: Base, e: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::Pow(base, e.as_ref().to_string()));
        self
    }

    pub fn factorial(&mut self, e: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::Factorial(e.as_ref().to_string()));
        self
    }

    pub fn click(&mut self, stage: Stage, e: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::Click(stage, e.as_ref().to_string()));
        self
    }

    pub fn no_click(&mut self, stage: Stage, e: impl AsRef<str>) -> &mut Self {
        self.items.push(Pending::NoClick(stage, e.as_ref().to_string()));
        self
    }

    pub fn build(&self) -> Result<NestedSum, DefinitionError> {
        let parse = |s: &str| Expr::parse(s).map_err(|e| DefinitionError::Parse { sum: self.label.clone(), source: e });
        let mut indices = Vec::new();
        let mut factors = Vec::new();
        for item in &self.items {
            match item {
                Pending::Index(n, lo, hi) => {
                    indices.push(IndexDef { name: n.clone(), lower: parse(lo)?, upper: parse(hi)? })
                }
                Pending::Binom(n, k) => factors.push(Factor::Binom(parse(n)?, parse(k)?)),
                Pending::Delta(e) => factors.push(Factor::Delta(parse(e)?)),
                Pending::Pow(b, e) => factors.push(Factor::Pow(*b, parse(e)?)),
                Pending::Factorial(e) => factors.push(Factor::Factorial(parse(e)?)),
                Pending::Click(s, e) => factors.push(Factor::Click(*s, parse(e)?)),
                Pending::NoClick(s, e) => factors.push(Factor::NoClick(*s, parse(e)?)),
            }
        }
        NestedSum::new(self.label.clone(), indices, factors)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Resolved {
    Binom(Node, Node),
    Delta(Node),
    Pow(Base, Node),
    Factorial(Node),
    Click(Stage, Node),
    NoClick(Stage, Node),
}

impl Resolved {
    fn deepest(&self) -> Option<usize> {
        match self {
            Resolved::Binom(a, b) => a.deepest().max(b.deepest()),
            Resolved::Delta(e)
            | Resolved::Pow(_, e)
            | Resolved::Factorial(e)
            | Resolved::Click(_, e)
            | Resolved::NoClick(_, e) => e.deepest(),
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    lower: Node,
    upper: Node,
    factors: Vec<Resolved>,
}

/// A validated nested sum ready for evaluation.
#[derive(Debug, Clone)]
pub struct NestedSum {
    label: String,
    indices: Vec<IndexDef>,
    factors: Vec<Factor>,
    levels: Vec<Level>,
}

/// Parameter values and detector responses for one evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    bases: [f64; 9],
    detectors: [DetectorModel; 2],
}

impl EvalContext {
    /// Detectors of `kind` with efficiency `eta` before the switches and
    /// `eta * eta_sw` behind them.
    pub fn new(params: &ClosedFormParams, kind: DetectorKind) -> Self {
        let qnd =
            DetectorModel { kind, efficiency: params.eta, dark_prob: params.p_dark, no_click_form: Default::default() };
        let bsm = DetectorModel { efficiency: params.eta_prime(), ..qnd };
        Self::with_models(params, qnd, bsm)
    }

    /// Explicit detector models. The `(1-eta)` bases follow the models'
    /// efficiencies so that combined powers and per-detector factors agree.
    pub fn with_models(params: &ClosedFormParams, qnd: DetectorModel, bsm: DetectorModel) -> Self {
        let r = params.r;
        let bases = [
            r,
            1.0 / (1.0 + r * r),
            libm::sqrt(params.eta_ch),
            libm::sqrt(1.0 - params.eta_ch),
            core::f64::consts::FRAC_1_SQRT_2,
            1.0 / libm::sqrt(12.0),
            1.0 - qnd.efficiency,
            1.0 - bsm.efficiency,
            -1.0,
        ];
        EvalContext { bases, detectors: [qnd, bsm] }
    }

    pub fn base(&self, b: Base) -> f64 {
        self.bases[b as usize]
    }

    pub fn detector(&self, s: Stage) -> &DetectorModel {
        &self.detectors[s as usize]
    }

    #[inline]
    fn value(&self, f: &Resolved, env: &[i64]) -> f64 {
        match f {
            Resolved::Binom(n, k) => binomial(n.eval(env), k.eval(env)) as f64,
            Resolved::Delta(e) => (e.eval(env) == 0) as u8 as f64,
            Resolved::Pow(Base::MinusOne, e) => {
                if e.eval(env) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Resolved::Pow(b, e) => powi(self.bases[*b as usize], e.eval(env) as i32),
            Resolved::Factorial(e) => factorial(e.eval(env)) as f64,
            Resolved::Click(s, e) => self.detectors[*s as usize].one_prob(e.eval(env)),
            Resolved::NoClick(s, e) => self.detectors[*s as usize].zero_prob(e.eval(env)),
        }
    }
}

/// One summand with its index assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRecord {
    pub assignment: Vec<(String, i64)>,
    pub value: f64,
}

impl fmt::Display for TermRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (n, v)) in self.assignment.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(f, " -> {:e}", self.value)
    }
}

/// Result of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Summands that survived pruning with a non-zero value.
    pub nonzero_terms: u64,
    /// The largest summands by magnitude, largest first.
    pub top_terms: Vec<TermRecord>,
}

struct TopTerms {
    entries: Vec<(f64, Vec<i64>)>,
    floor: f64,
}

impl TopTerms {
    fn new() -> Self {
        TopTerms { entries: Vec::with_capacity(TOP_TERMS + 1), floor: 0.0 }
    }

    #[inline]
    fn offer(&mut self, value: f64, env: &[i64]) {
        let mag = libm::fabs(value);
        if self.entries.len() == TOP_TERMS && !(mag > self.floor) {
            return;
        }
        self.entries.push((value, env.to_vec()));
        self.entries.sort_by(|a, b| libm::fabs(b.0).total_cmp(&libm::fabs(a.0)));
        self.entries.truncate(TOP_TERMS);
        self.floor = self.entries.last().map_or(0.0, |e| libm::fabs(e.0));
    }

    fn records(self, names: &[IndexDef]) -> Vec<TermRecord> {
        self.entries
            .into_iter()
            .map(|(value, env)| TermRecord {
                assignment: names.iter().zip(env).map(|(d, v)| (d.name.clone(), v)).collect(),
                value,
            })
            .collect()
    }
}

impl NestedSum {
    pub fn new(label: String, indices: Vec<IndexDef>, factors: Vec<Factor>) -> Result<Self, DefinitionError> {
        if indices.is_empty() {
            return Err(DefinitionError::Empty { sum: label });
        }
        if indices.len() > MAX_INDICES {
            return Err(DefinitionError::TooManyIndices { sum: label, count: indices.len() });
        }
        let mut levels: Vec<Level> = Vec::with_capacity(indices.len());
        for (k, def) in indices.iter().enumerate() {
            if indices[..k].iter().any(|d| d.name == def.name) {
                return Err(DefinitionError::DuplicateIndex { sum: label, index: def.name.clone() });
            }
            let earlier = |v: &str| indices[..k].iter().position(|d| d.name == v);
            let resolve = |e: &Expr| {
                e.resolve(&earlier).map_err(|var| DefinitionError::ForwardReference {
                    sum: label.clone(),
                    index: def.name.clone(),
                    var,
                })
            };
            levels.push(Level { lower: resolve(&def.lower)?, upper: resolve(&def.upper)?, factors: Vec::new() });
        }
        let any = |v: &str| indices.iter().position(|d| d.name == v);
        for f in &factors {
            let resolve = |e: &Expr| {
                e.resolve(&any).map_err(|var| DefinitionError::UndeclaredVariable {
                    sum: label.clone(),
                    factor: f.to_string(),
                    var,
                })
            };
            let r = match f {
                Factor::Binom(n, k) => Resolved::Binom(resolve(n)?, resolve(k)?),
                Factor::Delta(e) => Resolved::Delta(resolve(e)?),
                Factor::Pow(b, e) => Resolved::Pow(*b, resolve(e)?),
                Factor::Factorial(e) => Resolved::Factorial(resolve(e)?),
                Factor::Click(s, e) => Resolved::Click(*s, resolve(e)?),
                Factor::NoClick(s, e) => Resolved::NoClick(*s, resolve(e)?),
            };
            let at = r.deepest().unwrap_or(0);
            levels[at].factors.push(r);
        }
        // Cheap structural factors first so that zeros prune early.
        for level in &mut levels {
            level.factors.sort_by_key(|f| match f {
                Resolved::Binom(..) | Resolved::Delta(..) => 0,
                Resolved::Factorial(..) | Resolved::Pow(Base::MinusOne, _) => 1,
                _ => 2,
            });
        }
        Ok(NestedSum { label, indices, factors, levels })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn indices(&self) -> &[IndexDef] {
        &self.indices
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn index_names(&self) -> Vec<&str> {
        self.indices.iter().map(|d| d.name.as_str()).collect()
    }

    /// Calls `visit` with the assignment and value of every summand whose
    /// value is non-zero (NaN counts as non-zero). Stops early when `visit`
    /// returns `false`.
    pub fn visit_terms<F: FnMut(&[i64], f64) -> bool>(&self, ctx: &EvalContext, mut visit: F) {
        let n = self.levels.len();
        let mut env = [0i64; MAX_INDICES];
        let mut hi = [0i64; MAX_INDICES];
        let mut prod = [0f64; MAX_INDICES + 1];
        prod[0] = 1.0;
        env[0] = self.levels[0].lower.eval(&env);
        hi[0] = self.levels[0].upper.eval(&env);
        let mut k = 0usize;
        loop {
            if env[k] > hi[k] {
                if k == 0 {
                    return;
                }
                k -= 1;
                env[k] += 1;
                continue;
            }
            let mut p = prod[k];
            for f in &self.levels[k].factors {
                p *= ctx.value(f, &env);
                if p == 0.0 {
                    break;
                }
            }
            if p != 0.0 {
                if k + 1 == n {
                    if !visit(&env[..n], p) {
                        return;
                    }
                } else {
                    prod[k + 1] = p;
                    k += 1;
                    env[k] = self.levels[k].lower.eval(&env);
                    hi[k] = self.levels[k].upper.eval(&env);
                    continue;
                }
            }
            env[k] += 1;
        }
    }

    /// Direct nested-loop evaluation with compensated accumulation.
    pub fn evaluate(&self, ctx: &EvalContext) -> Evaluation {
        let mut sum = NeumaierSum::new();
        let mut count = 0u64;
        let mut top = TopTerms::new();
        self.visit_terms(ctx, |env, p| {
            sum.add(p);
            count += 1;
            top.offer(p, env);
            true
        });
        Evaluation { value: sum.value(), nonzero_terms: count, top_terms: top.records(&self.indices) }
    }

    /// Value of a single summand. `None` when an index is missing from
    /// `lookup` or lies outside its range.
    pub fn term_at(&self, ctx: &EvalContext, lookup: &dyn Fn(&str) -> Option<i64>) -> Option<f64> {
        let mut env = [0i64; MAX_INDICES];
        for (k, (def, level)) in self.indices.iter().zip(&self.levels).enumerate() {
            let v = lookup(&def.name)?;
            if v < level.lower.eval(&env) || v > level.upper.eval(&env) {
                return None;
            }
            env[k] = v;
        }
        let mut p = 1.0;
        for level in &self.levels {
            for f in &level.factors {
                p *= ctx.value(f, &env);
            }
        }
        Some(p)
    }

    /// Walks the loops once and groups the summands by monomial.
    pub fn compile(&self) -> Result<CompiledSum, CompileError> {
        let n = self.levels.len();
        let mut env = [0i64; MAX_INDICES];
        let mut hi = [0i64; MAX_INDICES];
        let mut coef = [0f64; MAX_INDICES + 1];
        let mut mono = [Monomial::ONE; MAX_INDICES + 1];
        coef[0] = 1.0;
        let mut grouped: BTreeMap<Monomial, (f64, Vec<i64>)> = BTreeMap::new();
        env[0] = self.levels[0].lower.eval(&env);
        hi[0] = self.levels[0].upper.eval(&env);
        let mut k = 0usize;
        let mut leaves = 0u64;
        loop {
            if env[k] > hi[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
                env[k] += 1;
                continue;
            }
            let mut c = coef[k];
            let mut m = mono[k];
            for f in &self.levels[k].factors {
                self.apply_symbolic(f, &env, &mut c, &mut m)?;
                if c == 0.0 {
                    break;
                }
            }
            if c != 0.0 {
                if k + 1 == n {
                    leaves += 1;
                    let entry = grouped.entry(m).or_insert_with(|| (0.0, env[..n].to_vec()));
                    entry.0 += c;
                } else {
                    coef[k + 1] = c;
                    mono[k + 1] = m;
                    k += 1;
                    env[k] = self.levels[k].lower.eval(&env);
                    hi[k] = self.levels[k].upper.eval(&env);
                    continue;
                }
            }
            env[k] += 1;
        }
        let terms = grouped
            .into_iter()
            .filter(|(_, (c, _))| *c != 0.0)
            .map(|(monomial, (coefficient, representative))| CompiledTerm { coefficient, monomial, representative })
            .collect();
        Ok(CompiledSum {
            label: self.label.clone(),
            names: self.indices.iter().map(|d| d.name.clone()).collect(),
            terms,
            structural_terms: leaves,
        })
    }

    fn apply_symbolic(&self, f: &Resolved, env: &[i64], c: &mut f64, m: &mut Monomial) -> Result<(), CompileError> {
        let bump = |m: &mut Monomial, b: Base, e: i64| -> Result<(), CompileError> {
            let slot = &mut m.exponents[b as usize];
            let next = *slot as i64 + e;
            *slot = i16::try_from(next)
                .map_err(|_| CompileError::ExponentOverflow { sum: self.label.clone(), base: b.symbol() })?;
            Ok(())
        };
        match f {
            Resolved::Binom(n, k) => *c *= binomial(n.eval(env), k.eval(env)) as f64,
            Resolved::Delta(e) => {
                if e.eval(env) != 0 {
                    *c = 0.0
                }
            }
            Resolved::Factorial(e) => *c *= factorial(e.eval(env)) as f64,
            Resolved::Pow(Base::MinusOne, e) => {
                if e.eval(env) & 1 == 1 {
                    *c = -*c
                }
            }
            Resolved::Pow(b, e) => bump(m, *b, e.eval(env))?,
            Resolved::Click(s, e) => {
                let n = e.eval(env);
                if n < 0 {
                    *c = 0.0;
                } else if n as usize >= MAX_CLICK_COUNT {
                    return Err(CompileError::ClickCountTooLarge { sum: self.label.clone(), count: n });
                } else {
                    m.clicks[*s as usize][n as usize] += 1;
                }
            }
            Resolved::NoClick(s, e) => {
                let n = e.eval(env);
                if n < 0 {
                    *c = 0.0;
                } else {
                    m.zero_detectors[*s as usize] += 1;
                    bump(m, s.loss_base(), n)?;
                }
            }
        }
        Ok(())
    }
}

/// Product of base powers and detector responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    /// Exponent per [`Base`] (the sign base is folded into coefficients).
    pub exponents: [i16; 9],
    /// `clicks[stage][n]`: how many detectors of the stage read one count
    /// while holding `n` photons.
    pub clicks: [[u8; MAX_CLICK_COUNT]; 2],
    /// Detectors per stage that read zero; each contributes the model's
    /// dark-count factor (its photon dependence sits in `exponents`).
    pub zero_detectors: [u8; 2],
}

impl Monomial {
    pub const ONE: Monomial = Monomial { exponents: [0; 9], clicks: [[0; MAX_CLICK_COUNT]; 2], zero_detectors: [0; 2] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledTerm {
    /// Exact integer coefficient (sum of signed binomial/factorial products).
    pub coefficient: f64,
    pub monomial: Monomial,
    /// First assignment that produced this monomial.
    pub representative: Vec<i64>,
}

/// A nested sum flattened into a polynomial in the parameter bases.
#[derive(Debug, Clone)]
pub struct CompiledSum {
    label: String,
    names: Vec<String>,
    terms: Vec<CompiledTerm>,
    structural_terms: u64,
}

impl CompiledSum {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[CompiledTerm] {
        &self.terms
    }

    /// Summands with non-zero structural coefficient before grouping.
    pub fn structural_terms(&self) -> u64 {
        self.structural_terms
    }

    pub fn evaluate(&self, ctx: &EvalContext) -> Evaluation {
        let mut clicks = [[0.0; MAX_CLICK_COUNT]; 2];
        for s in [Stage::Qnd, Stage::Bsm] {
            for (n, slot) in clicks[s as usize].iter_mut().enumerate() {
                *slot = ctx.detector(s).one_prob(n as i64);
            }
        }
        let dark = [ctx.detector(Stage::Qnd).zero_dark_factor(), ctx.detector(Stage::Bsm).zero_dark_factor()];
        let mut sum = NeumaierSum::new();
        let mut count = 0u64;
        let mut top = TopTerms::new();
        for t in &self.terms {
            let m = &t.monomial;
            let mut v = t.coefficient;
            for (b, &e) in m.exponents.iter().enumerate() {
                if e != 0 {
                    v *= powi(ctx.bases[b], e as i32);
                }
            }
            for s in 0..2 {
                for (n, &times) in m.clicks[s].iter().enumerate() {
                    if times != 0 {
                        v *= powi(clicks[s][n], times as i32);
                    }
                }
                if m.zero_detectors[s] != 0 {
                    v *= powi(dark[s], m.zero_detectors[s] as i32);
                }
            }
            if v != 0.0 {
                sum.add(v);
                count += 1;
                top.offer(v, &t.representative);
            }
        }
        let defs: Vec<IndexDef> =
            self.names.iter().map(|n| IndexDef { name: n.clone(), lower: Expr::Int(0), upper: Expr::Int(0) }).collect();
        Evaluation { value: sum.value(), nonzero_terms: count, top_terms: top.records(&defs) }
    }
}
