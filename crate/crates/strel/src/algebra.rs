//! Truth algebras and distance domains.
//!
//! Verdicts live in a De Morgan algebra: a bounded distributive lattice
//! (join `⊕`, meet `⊗`) with an involutive negation `⊖` satisfying the
//! De Morgan laws. Two instances are provided: classical Booleans and the
//! min-max algebra over the extended reals. Spatial operators measure
//! paths in a separate distance domain: a totally ordered monoid with an
//! absorbing top, instantiated for hop counting (extended naturals) and
//! for accumulated edge weight (extended non-negative reals).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Errors from algebra and distance-domain operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("mixed distance domains: {0} and {1}")]
    DomainMismatch(DistanceDomain, DistanceDomain),
    #[error("value {0} does not belong to the {1} domain")]
    NotInDomain(DistValue, DistanceDomain),
    #[error("invalid distance interval: lower bound {lo} exceeds upper bound {hi}")]
    InvalidInterval { lo: DistValue, hi: DistValue },
    #[error("mixed algebra carriers: {0} and {1}")]
    CarrierMismatch(AlgebraValue, AlgebraValue),
}

/// A De Morgan algebra over a fixed carrier.
///
/// Laws, all covered by randomized tests: `⊕`/`⊗` are commutative,
/// associative, idempotent monoids with identities `⊥`/`⊤`; each
/// distributes over the other; `⊥` annihilates under `⊗` and `⊤` under
/// `⊕` (the algebra is simple); `⊖` is an involution exchanging `⊕` with
/// `⊗` and `⊥` with `⊤`.
pub trait DeMorgan: Copy + Send + Sync + 'static {
    /// Carrier type. Values are never NaN.
    type Value: Copy + PartialEq + fmt::Debug + Send + Sync + 'static;

    const NAME: &'static str;

    fn bot() -> Self::Value;
    fn top() -> Self::Value;
    /// Join `⊕` (disjunction).
    fn oplus(a: Self::Value, b: Self::Value) -> Self::Value;
    /// Meet `⊗` (conjunction).
    fn otimes(a: Self::Value, b: Self::Value) -> Self::Value;
    /// Negation `⊖`.
    fn ominus(a: Self::Value) -> Self::Value;

    /// Embedding of plain truth, used to label kind tests.
    fn of_bool(b: bool) -> Self::Value;
    /// Label for a comparison with the given signed margin (`lhs - rhs`
    /// oriented so that positive means satisfied).
    fn of_margin(margin: f64, strict: bool) -> Self::Value;

    /// Natural lattice order: `a ≤ b` iff `a ⊕ b = b`.
    fn le(a: Self::Value, b: Self::Value) -> bool {
        Self::oplus(a, b) == b
    }

    fn is_bot(v: Self::Value) -> bool {
        v == Self::bot()
    }

    fn is_top(v: Self::Value) -> bool {
        v == Self::top()
    }

    /// Erase the carrier into a runtime-tagged value.
    fn to_dyn(v: Self::Value) -> AlgebraValue;
    /// Recover a carrier value; `None` if the tag belongs to the other
    /// carrier.
    fn from_dyn(v: AlgebraValue) -> Option<Self::Value>;

    /// Canonical text for a value, round-tripping through
    /// [`parse_value`](Self::parse_value); used by serialized monitor
    /// state.
    fn fmt_value(v: Self::Value) -> String;
    fn parse_value(text: &str) -> Option<Self::Value>;
}

/// Classical two-valued algebra: `∨`, `∧`, `¬` over `{⊥, ⊤}`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct Boolean;

impl DeMorgan for Boolean {
    type Value = bool;

    const NAME: &'static str = "bool";

    fn bot() -> bool {
        false
    }

    fn top() -> bool {
        true
    }

    fn oplus(a: bool, b: bool) -> bool {
        a || b
    }

    fn otimes(a: bool, b: bool) -> bool {
        a && b
    }

    fn ominus(a: bool) -> bool {
        !a
    }

    fn of_bool(b: bool) -> bool {
        b
    }

    fn of_margin(margin: f64, strict: bool) -> bool {
        if strict {
            margin > 0.0
        } else {
            margin >= 0.0
        }
    }

    fn to_dyn(v: bool) -> AlgebraValue {
        AlgebraValue::Bool(v)
    }

    fn from_dyn(v: AlgebraValue) -> Option<bool> {
        match v {
            AlgebraValue::Bool(b) => Some(b),
            AlgebraValue::Real(_) => None,
        }
    }

    fn fmt_value(v: bool) -> String {
        if v { "⊤".into() } else { "⊥".into() }
    }

    fn parse_value(text: &str) -> Option<bool> {
        match text {
            "⊤" => Some(true),
            "⊥" => Some(false),
            _ => None,
        }
    }
}

/// Min-max algebra over `ℝ ∪ {±∞}`: join is `max`, meet is `min`,
/// negation is arithmetic negation.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct MinMax;

impl DeMorgan for MinMax {
    type Value = f64;

    const NAME: &'static str = "minmax";

    fn bot() -> f64 {
        f64::NEG_INFINITY
    }

    fn top() -> f64 {
        f64::INFINITY
    }

    fn oplus(a: f64, b: f64) -> f64 {
        a.max(b)
    }

    fn otimes(a: f64, b: f64) -> f64 {
        a.min(b)
    }

    fn ominus(a: f64) -> f64 {
        -a
    }

    fn of_bool(b: bool) -> f64 {
        if b {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    fn of_margin(margin: f64, _strict: bool) -> f64 {
        margin
    }

    fn to_dyn(v: f64) -> AlgebraValue {
        AlgebraValue::Real(v)
    }

    fn from_dyn(v: AlgebraValue) -> Option<f64> {
        match v {
            AlgebraValue::Real(r) => Some(r),
            AlgebraValue::Bool(_) => None,
        }
    }

    fn fmt_value(v: f64) -> String {
        v.to_string()
    }

    fn parse_value(text: &str) -> Option<f64> {
        text.parse::<f64>().ok().filter(|v| !v.is_nan())
    }
}

/// A verdict from either algebra, for boundaries that select the algebra
/// at runtime (CLI output, FFI, serialized monitor state).
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum AlgebraValue {
    Bool(bool),
    Real(f64),
}

impl AlgebraValue {
    /// `true` when the verdict counts as success: `⊤` in the Boolean
    /// algebra, strictly positive robustness in min-max.
    pub fn is_success(&self) -> bool {
        match *self {
            AlgebraValue::Bool(b) => b,
            AlgebraValue::Real(r) => r > 0.0,
        }
    }
}

impl fmt::Display for AlgebraValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AlgebraValue::Bool(true) => write!(f, "⊤"),
            AlgebraValue::Bool(false) => write!(f, "⊥"),
            AlgebraValue::Real(r) => write!(f, "{r}"),
        }
    }
}

/// Stable hash/equality key for a non-NaN float; folds `-0.0` into `0.0`.
pub(crate) fn f64_key(x: f64) -> u64 {
    debug_assert!(!x.is_nan());
    if x == 0.0 {
        0.0f64.to_bits()
    } else {
        x.to_bits()
    }
}

/// Extended natural number: hop counts with infinity.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub fn saturating_add(self, other: ExtNat) -> ExtNat {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a.saturating_add(b)),
            _ => ExtNat::Inf,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => write!(f, "inf"),
        }
    }
}

/// A value in one of the two distance domains.
#[derive(Copy, Clone, Debug)]
pub enum DistValue {
    /// Counting domain: extended naturals.
    Count(ExtNat),
    /// Tropical domain: non-negative reals, `f64::INFINITY` as top.
    Trop(f64),
}

impl DistValue {
    pub fn domain(&self) -> DistanceDomain {
        match self {
            DistValue::Count(_) => DistanceDomain::Counting,
            DistValue::Trop(_) => DistanceDomain::Tropical,
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, DistValue::Count(ExtNat::Inf)) || matches!(self, DistValue::Trop(t) if t.is_infinite())
    }
}

impl PartialEq for DistValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DistValue::Count(a), DistValue::Count(b)) => a == b,
            (DistValue::Trop(a), DistValue::Trop(b)) => f64_key(*a) == f64_key(*b),
            _ => false,
        }
    }
}

impl Eq for DistValue {}

impl std::hash::Hash for DistValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            DistValue::Count(n) => {
                0u8.hash(state);
                n.hash(state);
            }
            DistValue::Trop(t) => {
                1u8.hash(state);
                f64_key(*t).hash(state);
            }
        }
    }
}

impl fmt::Display for DistValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistValue::Count(n) => write!(f, "{n}"),
            DistValue::Trop(t) if t.is_infinite() => write!(f, "inf"),
            DistValue::Trop(t) => write!(f, "{t}"),
        }
    }
}

/// Descriptor of a distance domain: a totally ordered commutative monoid
/// `(D, +, 0)` with an absorbing, maximal `∞`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum DistanceDomain {
    Counting,
    Tropical,
}

impl DistanceDomain {
    /// Monoid identity `⊥_D` (the zero distance).
    pub fn zero(&self) -> DistValue {
        match self {
            DistanceDomain::Counting => DistValue::Count(ExtNat::Fin(0)),
            DistanceDomain::Tropical => DistValue::Trop(0.0),
        }
    }

    /// Absorbing top `⊤_D` (unreachable).
    pub fn inf(&self) -> DistValue {
        match self {
            DistanceDomain::Counting => DistValue::Count(ExtNat::Inf),
            DistanceDomain::Tropical => DistValue::Trop(f64::INFINITY),
        }
    }

    pub fn contains(&self, v: DistValue) -> bool {
        v.domain() == *self
    }

    fn check(&self, v: DistValue) -> Result<(), AlgebraError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(AlgebraError::NotInDomain(v, *self))
        }
    }

    /// Monoid addition `+_D`, saturating at `⊤_D`.
    pub fn add(&self, a: DistValue, b: DistValue) -> Result<DistValue, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (a, b) {
            (DistValue::Count(x), DistValue::Count(y)) => DistValue::Count(x.saturating_add(y)),
            (DistValue::Trop(x), DistValue::Trop(y)) => DistValue::Trop(x + y),
            _ => unreachable!("domain checked above"),
        })
    }

    /// Total order `≤_D`.
    pub fn le(&self, a: DistValue, b: DistValue) -> Result<bool, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (a, b) {
            (DistValue::Count(x), DistValue::Count(y)) => x <= y,
            (DistValue::Trop(x), DistValue::Trop(y)) => x <= y,
            _ => unreachable!("domain checked above"),
        })
    }
}

impl fmt::Display for DistanceDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceDomain::Counting => write!(f, "counting"),
            DistanceDomain::Tropical => write!(f, "tropical"),
        }
    }
}

/// A closed distance interval `[lo, hi]` within one domain. `hi` may be
/// `⊤_D` for an unbounded upper end.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct DistInterval {
    lo: DistValue,
    hi: DistValue,
}

impl DistInterval {
    pub fn new(lo: DistValue, hi: DistValue) -> Result<Self, AlgebraError> {
        let domain = lo.domain();
        if !domain.le(lo, hi)? {
            return Err(AlgebraError::InvalidInterval { lo, hi });
        }
        Ok(DistInterval { lo, hi })
    }

    pub fn lo(&self) -> DistValue {
        self.lo
    }

    pub fn hi(&self) -> DistValue {
        self.hi
    }

    pub fn domain(&self) -> DistanceDomain {
        self.lo.domain()
    }

    /// Membership `lo ≤_D d ≤_D hi`.
    pub fn contains(&self, d: DistValue) -> Result<bool, AlgebraError> {
        let domain = self.domain();
        Ok(domain.le(self.lo, d)? && domain.le(d, self.hi)?)
    }
}

impl fmt::Display for DistInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// A named map from edge weights to distances in a fixed domain.
#[derive(Copy, Clone, Debug)]
pub struct DistanceFunction {
    name: &'static str,
    domain: DistanceDomain,
    kind: DistFnKind,
    nonnegative: bool,
}

#[derive(Copy, Clone, Debug)]
enum DistFnKind {
    /// Every edge costs one hop (counting domain).
    Hops,
    /// Edge weight taken as-is (tropical domain).
    Weight,
    /// User-supplied map; must declare non-negativity.
    Custom(fn(f64) -> DistValue),
}

impl DistanceFunction {
    pub fn hops() -> Self {
        DistanceFunction {
            name: "hops",
            domain: DistanceDomain::Counting,
            kind: DistFnKind::Hops,
            nonnegative: true,
        }
    }

    pub fn weight() -> Self {
        DistanceFunction {
            name: "weight",
            domain: DistanceDomain::Tropical,
            kind: DistFnKind::Weight,
            nonnegative: true,
        }
    }

    /// Registerable extension point. `nonnegative` asserts that `f` never
    /// maps a model weight below `⊥_D`; bounded path enumeration requires
    /// it.
    pub fn custom(
        name: &'static str,
        domain: DistanceDomain,
        f: fn(f64) -> DistValue,
        nonnegative: bool,
    ) -> Self {
        DistanceFunction {
            name,
            domain,
            kind: DistFnKind::Custom(f),
            nonnegative,
        }
    }

    pub fn name(&self) -> &str {
        self.name
    }

    pub fn domain(&self) -> DistanceDomain {
        self.domain
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Distance of a single edge of weight `w`.
    pub fn apply(&self, w: f64) -> DistValue {
        let d = match self.kind {
            DistFnKind::Hops => DistValue::Count(ExtNat::Fin(1)),
            DistFnKind::Weight => DistValue::Trop(w),
            DistFnKind::Custom(f) => f(w),
        };
        debug_assert!(self.domain.contains(d), "distance function left its domain");
        d
    }
}

/// Distance functions available to formulas, keyed by name.
#[derive(Clone, Debug)]
pub struct DistanceRegistry {
    fns: BTreeMap<&'static str, DistanceFunction>,
}

impl DistanceRegistry {
    /// Registry with only the built-ins `hops` and `weight`.
    pub fn builtin() -> Self {
        let mut fns = BTreeMap::new();
        fns.insert("hops", DistanceFunction::hops());
        fns.insert("weight", DistanceFunction::weight());
        DistanceRegistry { fns }
    }

    pub fn get(&self, name: &str) -> Option<&DistanceFunction> {
        self.fns.get(name)
    }

    /// Add or replace a function; returns the previous entry if any.
    pub fn register(&mut self, f: DistanceFunction) -> Option<DistanceFunction> {
        self.fns.insert(f.name, f)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.fns.keys().copied()
    }
}

impl Default for DistanceRegistry {
    fn default() -> Self {
        DistanceRegistry::builtin()
    }
}
