//! Formula syntax and the rewrites that prepare a specification for the
//! automaton: desugaring of derived operators, elimination of time
//! intervals, and the subformula closure.
//!
//! Formulas are immutable reference-counted trees with structural
//! equality, so rewrites share unchanged subterms and size metrics count
//! a repeated subformula once.

pub mod parse;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{f64_key, DistInterval};

pub use parse::{parse, parse_with, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error("invalid time interval [{lo},{hi}]: lower bound exceeds upper bound")]
    InvalidTimeInterval { lo: u64, hi: u64 },
}

/// Comparison operator of a numeric atomic predicate.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Ge,
    Gt,
    Le,
    Lt,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
        }
    }

    /// Strict comparisons are violated at a zero margin.
    pub fn is_strict(&self) -> bool {
        matches!(self, CmpOp::Gt | CmpOp::Lt)
    }

    /// Signed satisfaction margin: positive iff the comparison holds with
    /// room to spare, zero exactly at the threshold.
    pub fn margin(&self, attr_value: f64, threshold: f64) -> f64 {
        match self {
            CmpOp::Ge | CmpOp::Gt => attr_value - threshold,
            CmpOp::Le | CmpOp::Lt => threshold - attr_value,
        }
    }
}

/// Atomic predicate: a node-kind test or a numeric attribute comparison.
#[derive(Clone, Debug)]
pub enum PredicateExpr {
    Kind(String),
    Cmp { attr: String, op: CmpOp, threshold: f64 },
}

impl PartialEq for PredicateExpr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PredicateExpr::Kind(a), PredicateExpr::Kind(b)) => a == b,
            (
                PredicateExpr::Cmp { attr: a, op: oa, threshold: ta },
                PredicateExpr::Cmp { attr: b, op: ob, threshold: tb },
            ) => a == b && oa == ob && f64_key(*ta) == f64_key(*tb),
            _ => false,
        }
    }
}

impl Eq for PredicateExpr {}

impl Hash for PredicateExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            PredicateExpr::Kind(k) => {
                0u8.hash(state);
                k.hash(state);
            }
            PredicateExpr::Cmp { attr, op, threshold } => {
                1u8.hash(state);
                attr.hash(state);
                op.hash(state);
                f64_key(*threshold).hash(state);
            }
        }
    }
}

impl fmt::Display for PredicateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateExpr::Kind(k) => write!(f, "{k}"),
            PredicateExpr::Cmp { attr, op, threshold } => {
                write!(f, "{attr} {} {threshold}", op.symbol())
            }
        }
    }
}

/// Discrete time window `[lo, hi]` in trace steps; `hi = None` means an
/// unbounded upper end.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    lo: u64,
    hi: Option<u64>,
}

impl TimeInterval {
    pub fn bounded(lo: u64, hi: u64) -> Result<Self, LogicError> {
        if lo > hi {
            return Err(LogicError::InvalidTimeInterval { lo, hi });
        }
        Ok(TimeInterval { lo, hi: Some(hi) })
    }

    pub fn unbounded(lo: u64) -> Self {
        TimeInterval { lo, hi: None }
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> Option<u64> {
        self.hi
    }

    /// Expansion budget of the interval: the number of Next-nesting steps
    /// its elimination introduces (the finite upper bound, or the lower
    /// bound when unbounded).
    pub fn width(&self) -> u64 {
        self.hi.unwrap_or(self.lo)
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(hi) => write!(f, "[{},{}]", self.lo, hi),
            None => write!(f, "[{},inf]", self.lo),
        }
    }
}

/// One syntax node. `Until`, `Eventually` and `Globally` carry an
/// optional time interval (`None` is the untimed form); `Eventually`,
/// `Globally`, `Somewhere` and `Everywhere` are sugar removed by
/// [`desugar`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Atom(PredicateExpr),
    Not(Formula),
    And(Formula, Formula),
    Or(Formula, Formula),
    Next(Formula),
    Until { interval: Option<TimeInterval>, lhs: Formula, rhs: Formula },
    Eventually { interval: Option<TimeInterval>, arg: Formula },
    Globally { interval: Option<TimeInterval>, arg: Formula },
    Reach { func: String, interval: DistInterval, lhs: Formula, rhs: Formula },
    Escape { func: String, interval: DistInterval, arg: Formula },
    Somewhere { func: String, interval: DistInterval, arg: Formula },
    Everywhere { func: String, interval: DistInterval, arg: Formula },
}

/// A formula: shared, immutable, structurally comparable.
#[derive(Clone, Eq)]
pub struct Formula(Arc<Node>);

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Formula {
    pub fn tt() -> Formula {
        Formula(Arc::new(Node::True))
    }

    pub fn ff() -> Formula {
        Formula(Arc::new(Node::False))
    }

    pub fn atom(pred: PredicateExpr) -> Formula {
        Formula(Arc::new(Node::Atom(pred)))
    }

    /// Kind-test atom, e.g. `drone`.
    pub fn kind(name: &str) -> Formula {
        Formula::atom(PredicateExpr::Kind(name.to_string()))
    }

    /// Comparison atom, e.g. `battery >= 4`.
    pub fn cmp(attr: &str, op: CmpOp, threshold: f64) -> Formula {
        Formula::atom(PredicateExpr::Cmp { attr: attr.to_string(), op, threshold })
    }

    pub fn not(arg: Formula) -> Formula {
        Formula(Arc::new(Node::Not(arg)))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Formula {
        Formula(Arc::new(Node::And(lhs, rhs)))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Formula {
        Formula(Arc::new(Node::Or(lhs, rhs)))
    }

    pub fn next(arg: Formula) -> Formula {
        Formula(Arc::new(Node::Next(arg)))
    }

    pub fn until(lhs: Formula, interval: Option<TimeInterval>, rhs: Formula) -> Formula {
        Formula(Arc::new(Node::Until { interval, lhs, rhs }))
    }

    pub fn eventually(interval: Option<TimeInterval>, arg: Formula) -> Formula {
        Formula(Arc::new(Node::Eventually { interval, arg }))
    }

    pub fn globally(interval: Option<TimeInterval>, arg: Formula) -> Formula {
        Formula(Arc::new(Node::Globally { interval, arg }))
    }

    pub fn reach(lhs: Formula, func: &str, interval: DistInterval, rhs: Formula) -> Formula {
        Formula(Arc::new(Node::Reach { func: func.to_string(), interval, lhs, rhs }))
    }

    pub fn escape(func: &str, interval: DistInterval, arg: Formula) -> Formula {
        Formula(Arc::new(Node::Escape { func: func.to_string(), interval, arg }))
    }

    pub fn somewhere(func: &str, interval: DistInterval, arg: Formula) -> Formula {
        Formula(Arc::new(Node::Somewhere { func: func.to_string(), interval, arg }))
    }

    pub fn everywhere(func: &str, interval: DistInterval, arg: Formula) -> Formula {
        Formula(Arc::new(Node::Everywhere { func: func.to_string(), interval, arg }))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Negation with double-negation collapse and constant flips, so
    /// closures and negation pairing stay canonical.
    pub fn neg(&self) -> Formula {
        match self.node() {
            Node::Not(inner) => inner.clone(),
            Node::True => Formula::ff(),
            Node::False => Formula::tt(),
            _ => Formula::not(self.clone()),
        }
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self.node() {
            Node::True | Node::False | Node::Atom(_) => vec![],
            Node::Not(x)
            | Node::Next(x)
            | Node::Eventually { arg: x, .. }
            | Node::Globally { arg: x, .. }
            | Node::Escape { arg: x, .. }
            | Node::Somewhere { arg: x, .. }
            | Node::Everywhere { arg: x, .. } => vec![x],
            Node::And(a, b) | Node::Or(a, b) => vec![a, b],
            Node::Until { lhs, rhs, .. } | Node::Reach { lhs, rhs, .. } => vec![lhs, rhs],
        }
    }

    /// Names of every distance function the formula mentions.
    pub fn distance_fn_names(&self) -> HashSet<&str> {
        let mut names = HashSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Reach { func, .. }
                | Node::Escape { func, .. }
                | Node::Somewhere { func, .. }
                | Node::Everywhere { func, .. } => {
                    names.insert(func.as_str());
                }
                _ => {}
            }
            stack.extend(f.children());
        }
        names
    }

    fn prec(&self) -> u8 {
        match self.node() {
            Node::Until { .. } => 0,
            Node::Or(..) => 1,
            Node::And(..) => 2,
            Node::Reach { .. } => 3,
            Node::Not(_)
            | Node::Next(_)
            | Node::Eventually { .. }
            | Node::Globally { .. }
            | Node::Escape { .. }
            | Node::Somewhere { .. }
            | Node::Everywhere { .. } => 4,
            Node::True | Node::False | Node::Atom(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let p = self.prec();
        if p < ctx {
            write!(f, "(")?;
        }
        match self.node() {
            Node::True => write!(f, "true")?,
            Node::False => write!(f, "false")?,
            Node::Atom(pred) => write!(f, "{pred}")?,
            Node::Not(x) => {
                write!(f, "not ")?;
                x.fmt_prec(f, 4)?;
            }
            Node::Next(x) => {
                write!(f, "X ")?;
                x.fmt_prec(f, 4)?;
            }
            Node::Eventually { interval, arg } => {
                write!(f, "F")?;
                if let Some(i) = interval {
                    write!(f, "{i}")?;
                }
                write!(f, " ")?;
                arg.fmt_prec(f, 4)?;
            }
            Node::Globally { interval, arg } => {
                write!(f, "G")?;
                if let Some(i) = interval {
                    write!(f, "{i}")?;
                }
                write!(f, " ")?;
                arg.fmt_prec(f, 4)?;
            }
            Node::Somewhere { func, interval, arg } => {
                write!(f, "somewhere[{func}]{interval} ")?;
                arg.fmt_prec(f, 4)?;
            }
            Node::Everywhere { func, interval, arg } => {
                write!(f, "everywhere[{func}]{interval} ")?;
                arg.fmt_prec(f, 4)?;
            }
            Node::Escape { func, interval, arg } => {
                write!(f, "escape[{func}]{interval} ")?;
                arg.fmt_prec(f, 4)?;
            }
            Node::And(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " and ")?;
                b.fmt_prec(f, 3)?;
            }
            Node::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " or ")?;
                b.fmt_prec(f, 2)?;
            }
            Node::Reach { func, interval, lhs, rhs } => {
                lhs.fmt_prec(f, 3)?;
                write!(f, " reach[{func}]{interval} ")?;
                rhs.fmt_prec(f, 4)?;
            }
            Node::Until { interval, lhs, rhs } => {
                lhs.fmt_prec(f, 1)?;
                write!(f, " U")?;
                if let Some(i) = interval {
                    write!(f, "{i}")?;
                }
                write!(f, " ")?;
                rhs.fmt_prec(f, 0)?;
            }
        }
        if p < ctx {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Rewrites derived operators into the core connectives, keeping time
/// intervals in place: `somewhere` becomes `true reach`, `everywhere` its
/// dual, `F` becomes `true U` and `G` its dual.
pub fn desugar(f: &Formula) -> Formula {
    match f.node() {
        Node::True | Node::False | Node::Atom(_) => f.clone(),
        Node::Not(x) => desugar(x).neg(),
        Node::And(a, b) => Formula::and(desugar(a), desugar(b)),
        Node::Or(a, b) => Formula::or(desugar(a), desugar(b)),
        Node::Next(x) => Formula::next(desugar(x)),
        Node::Until { interval, lhs, rhs } => {
            Formula::until(desugar(lhs), *interval, desugar(rhs))
        }
        Node::Eventually { interval, arg } => {
            Formula::until(Formula::tt(), *interval, desugar(arg))
        }
        Node::Globally { interval, arg } => {
            Formula::until(Formula::tt(), *interval, desugar(arg).neg()).neg()
        }
        Node::Reach { func, interval, lhs, rhs } => {
            Formula::reach(desugar(lhs), func, *interval, desugar(rhs))
        }
        Node::Escape { func, interval, arg } => Formula::escape(func, *interval, desugar(arg)),
        Node::Somewhere { func, interval, arg } => {
            Formula::reach(Formula::tt(), func, *interval, desugar(arg))
        }
        Node::Everywhere { func, interval, arg } => {
            Formula::reach(Formula::tt(), func, *interval, desugar(arg).neg()).neg()
        }
    }
}

/// A formula in the interval-free fragment: only untimed Until remains
/// among the temporal operators, and no derived sugar occurs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpltlFormula(Formula);

impl SpltlFormula {
    pub fn formula(&self) -> &Formula {
        &self.0
    }
}

impl fmt::Display for SpltlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for SpltlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_interval_free(f: &Formula) -> bool {
    let timed_or_sugar = match f.node() {
        Node::Until { interval, .. } => interval.is_some(),
        Node::Eventually { .. }
        | Node::Globally { .. }
        | Node::Somewhere { .. }
        | Node::Everywhere { .. } => true,
        _ => false,
    };
    !timed_or_sugar && f.children().into_iter().all(is_interval_free)
}

// Simplifying constructors used only by elimination. They fold constants
// so that expansions over `true`/`false` operands (e.g. the G-part of an
// unbounded Until over `true`) collapse instead of littering the result.

fn sand(a: Formula, b: Formula) -> Formula {
    match (a.node(), b.node()) {
        (Node::True, _) => b,
        (_, Node::True) => a,
        (Node::False, _) | (_, Node::False) => Formula::ff(),
        _ => Formula::and(a, b),
    }
}

fn sor(a: Formula, b: Formula) -> Formula {
    match (a.node(), b.node()) {
        (Node::False, _) => b,
        (_, Node::False) => a,
        (Node::True, _) | (_, Node::True) => Formula::tt(),
        _ => Formula::or(a, b),
    }
}

fn snext(x: Formula) -> Formula {
    // X false is false on every step of a finite trace, including the
    // last one, where the strong Next also yields bottom.
    match x.node() {
        Node::False => x,
        _ => Formula::next(x),
    }
}

fn suntil(lhs: Formula, rhs: Formula) -> Formula {
    match (lhs.node(), rhs.node()) {
        (_, Node::True) => Formula::tt(),
        (_, Node::False) => Formula::ff(),
        (Node::False, _) => rhs,
        _ => Formula::until(lhs, None, rhs),
    }
}

/// `F[0,width] arg` as a nested chain `arg ∨ X(arg ∨ X(...))`.
fn orchain(width: u64, arg: Formula) -> Formula {
    let mut acc = arg.clone();
    for _ in 0..width {
        acc = sor(arg.clone(), snext(acc));
    }
    acc
}

/// `G[0,width] arg`, expressed as the negation of an F-chain so that a
/// window truncated by the end of the trace evaluates over the steps
/// that exist instead of being killed by a strong Next.
fn gchain(width: u64, arg: Formula) -> Formula {
    orchain(width, arg.neg()).neg()
}

fn xchain(n: u64, mut f: Formula) -> Formula {
    for _ in 0..n {
        f = snext(f);
    }
    f
}

/// `F[lo,hi] arg` (`hi` possibly unbounded).
fn expand_f(i: TimeInterval, arg: Formula) -> Formula {
    match i.hi() {
        Some(hi) => xchain(i.lo(), orchain(hi - i.lo(), arg)),
        None => expand_uinf(i.lo(), Formula::tt(), arg),
    }
}

/// `lhs U[lo,inf] rhs`: the lower bound postpones the untimed Until by a
/// Next chain and demands `lhs` throughout the skipped prefix. A
/// truncated trace makes the Next chain bottom out, matching the direct
/// semantics where the disjunction over witness times is empty.
fn expand_uinf(lo: u64, lhs: Formula, rhs: Formula) -> Formula {
    if lo == 0 {
        suntil(lhs, rhs)
    } else {
        sand(gchain(lo - 1, lhs.clone()), xchain(lo, suntil(lhs, rhs)))
    }
}

fn expand_until(i: TimeInterval, lhs: Formula, rhs: Formula) -> Formula {
    match i.hi() {
        None => expand_uinf(i.lo(), lhs, rhs),
        Some(_) => sand(expand_f(i, rhs.clone()), expand_uinf(i.lo(), lhs, rhs)),
    }
}

/// Expands every time interval into Next chains and untimed Untils,
/// desugaring any remaining derived operators along the way. The result
/// is equivalent to the input at every (location, time) of every trace,
/// in both algebras, and its size stays linear in the sum of interval
/// widths.
pub fn eliminate_intervals(f: &Formula) -> SpltlFormula {
    SpltlFormula(elim(f))
}

fn elim(f: &Formula) -> Formula {
    match f.node() {
        Node::True | Node::False | Node::Atom(_) => f.clone(),
        Node::Not(x) => elim(x).neg(),
        Node::And(a, b) => sand(elim(a), elim(b)),
        Node::Or(a, b) => sor(elim(a), elim(b)),
        Node::Next(x) => snext(elim(x)),
        Node::Until { interval: None, lhs, rhs } => suntil(elim(lhs), elim(rhs)),
        Node::Until { interval: Some(i), lhs, rhs } => expand_until(*i, elim(lhs), elim(rhs)),
        Node::Eventually { interval, arg } => {
            let a = elim(arg);
            match interval {
                None => suntil(Formula::tt(), a),
                Some(i) => expand_f(*i, a),
            }
        }
        Node::Globally { interval, arg } => {
            let a = elim(arg).neg();
            match interval {
                None => suntil(Formula::tt(), a).neg(),
                Some(i) => expand_f(*i, a).neg(),
            }
        }
        Node::Reach { func, interval, lhs, rhs } => {
            Formula::reach(elim(lhs), func, *interval, elim(rhs))
        }
        Node::Escape { func, interval, arg } => Formula::escape(func, *interval, elim(arg)),
        Node::Somewhere { func, interval, arg } => {
            Formula::reach(Formula::tt(), func, *interval, elim(arg))
        }
        Node::Everywhere { func, interval, arg } => {
            Formula::reach(Formula::tt(), func, *interval, elim(arg).neg()).neg()
        }
    }
}

/// Number of distinct subformulas, counting structurally equal subtrees
/// once.
pub fn subformula_count(f: &Formula) -> usize {
    let mut seen = HashSet::new();
    collect_subformulas(f, &mut seen);
    seen.len()
}

fn collect_subformulas<'a>(f: &'a Formula, seen: &mut HashSet<&'a Formula>) {
    if seen.insert(f) {
        for c in f.children() {
            collect_subformulas(c, seen);
        }
    }
}

/// Formula size as the closure metric: distinct subformulas plus the
/// negation of each (double negation collapsed). For an interval-free
/// formula this equals the closure length.
pub fn formula_size(f: &Formula) -> usize {
    let mut seen = HashSet::new();
    collect_subformulas(f, &mut seen);
    let mut set: HashSet<Formula> = seen.iter().map(|&s| s.clone()).collect();
    let positives: Vec<Formula> = set.iter().cloned().collect();
    for s in positives {
        set.insert(s.neg());
    }
    set.len()
}

/// Sum of interval expansion widths over the distinct timed subformulas.
pub fn interval_width_sum(f: &Formula) -> u64 {
    let mut seen = HashSet::new();
    collect_subformulas(f, &mut seen);
    seen.iter()
        .map(|s| match s.node() {
            Node::Until { interval: Some(i), .. }
            | Node::Eventually { interval: Some(i), .. }
            | Node::Globally { interval: Some(i), .. } => i.width(),
            _ => 0,
        })
        .sum()
}

/// The closure of an interval-free formula: every subformula and the
/// negation of each, deduplicated modulo double negation, in a
/// deterministic order (subformulas in post-order, then the missing
/// negations in the same order). Item indices are the automaton's
/// formula coordinates; `neg` is the involution pairing each item with
/// its negation.
#[derive(Clone)]
pub struct Closure {
    items: Vec<Formula>,
    index: HashMap<Formula, usize>,
    neg_of: Vec<usize>,
    empty_bit: Vec<bool>,
    root: usize,
}

pub fn closure(f: &SpltlFormula) -> Closure {
    let mut items = Vec::new();
    let mut index = HashMap::new();
    push_post_order(f.formula(), &mut items, &mut index);
    let positives = items.clone();
    for s in &positives {
        let n = s.neg();
        if !index.contains_key(&n) {
            index.insert(n.clone(), items.len());
            items.push(n);
        }
    }
    let neg_of = items.iter().map(|s| index[&s.neg()]).collect();
    let empty_bit = items.iter().map(empty_accepts).collect();
    let root = index[f.formula()];
    Closure { items, index, neg_of, empty_bit, root }
}

fn push_post_order(f: &Formula, items: &mut Vec<Formula>, index: &mut HashMap<Formula, usize>) {
    if index.contains_key(f) {
        return;
    }
    for c in f.children() {
        push_post_order(c, items, index);
    }
    if !index.contains_key(f) {
        index.insert(f.clone(), items.len());
        items.push(f.clone());
    }
}

/// Whether the formula is accepted by the empty trace: the value the
/// automaton assigns to a run that ends before the state consumes any
/// snapshot. Obligations (atoms, Next, Until, spatial operators) reject;
/// negation flips; the lattice connectives combine.
fn empty_accepts(f: &Formula) -> bool {
    match f.node() {
        Node::True => true,
        Node::False | Node::Atom(_) | Node::Next(_) | Node::Until { .. } => false,
        Node::Reach { .. } | Node::Escape { .. } => false,
        Node::Not(x) => !empty_accepts(x),
        Node::And(a, b) => empty_accepts(a) && empty_accepts(b),
        Node::Or(a, b) => empty_accepts(a) || empty_accepts(b),
        Node::Eventually { .. }
        | Node::Globally { .. }
        | Node::Somewhere { .. }
        | Node::Everywhere { .. } => {
            unreachable!("closure items are interval-free")
        }
    }
}

impl Closure {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Formula] {
        &self.items
    }

    pub fn get(&self, i: usize) -> &Formula {
        &self.items[i]
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    /// Index of the negation of item `i`.
    pub fn neg(&self, i: usize) -> usize {
        self.neg_of[i]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Empty-trace acceptance bit of item `i`.
    pub fn empty_accepts(&self, i: usize) -> bool {
        self.empty_bit[i]
    }

    /// Whether item `i` has the accepting shape `¬(ψ1 U ψ2)`.
    pub fn is_until_negation(&self, i: usize) -> bool {
        match self.items[i].node() {
            Node::Not(x) => matches!(x.node(), Node::Until { .. }),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{DistValue, DistanceDomain, ExtNat};

    fn hops_interval(lo: u64, hi: Option<u64>) -> DistInterval {
        let lo = DistValue::Count(ExtNat::Fin(lo));
        let hi = hi.map(|h| DistValue::Count(ExtNat::Fin(h))).unwrap_or(DistanceDomain::Counting.inf());
        DistInterval::new(lo, hi).unwrap()
    }

    fn a() -> Formula {
        Formula::kind("a")
    }

    fn p() -> Formula {
        Formula::kind("p")
    }

    fn q() -> Formula {
        Formula::kind("q")
    }

    #[test]
    fn display_round_trips_structure() {
        let i02 = hops_interval(0, Some(2));
        let samples = vec![
            p(),
            Formula::cmp("battery", CmpOp::Ge, 4.0),
            Formula::cmp("battery", CmpOp::Lt, -1.5),
            Formula::not(p()),
            Formula::not(Formula::not(p())),
            Formula::and(p(), Formula::or(q(), a())),
            Formula::or(Formula::and(p(), q()), a()),
            Formula::and(p(), Formula::and(q(), a())),
            Formula::until(p(), None, q()),
            Formula::until(p(), Some(TimeInterval::bounded(1, 3).unwrap()), q()),
            Formula::until(p(), Some(TimeInterval::unbounded(2)), q()),
            Formula::until(Formula::until(p(), None, q()), None, a()),
            Formula::until(p(), None, Formula::until(q(), None, a())),
            Formula::next(Formula::not(p())),
            Formula::eventually(Some(TimeInterval::bounded(0, 3).unwrap()), p()),
            Formula::globally(None, Formula::or(p(), q())),
            Formula::reach(p(), "hops", i02, q()),
            Formula::and(Formula::reach(p(), "hops", i02, q()), a()),
            Formula::escape("hops", hops_interval(2, Some(2)), q()),
            Formula::somewhere("hops", hops_interval(1, Some(2)), p()),
            Formula::everywhere("hops", hops_interval(0, None), Formula::not(p())),
            Formula::globally(
                None,
                Formula::or(
                    Formula::somewhere("hops", hops_interval(1, Some(2)), Formula::kind("drone")),
                    Formula::eventually(
                        Some(TimeInterval::bounded(0, 100).unwrap()),
                        Formula::somewhere(
                            "hops",
                            hops_interval(1, Some(2)),
                            Formula::or(Formula::kind("drone"), Formula::kind("groundstation")),
                        ),
                    ),
                ),
            ),
        ];
        for f in samples {
            let text = f.to_string();
            let parsed = parse(&text).unwrap_or_else(|e| panic!("reparse `{text}`: {e}"));
            assert_eq!(parsed, f, "round trip of `{text}`");
        }
    }

    #[test]
    fn desugar_somewhere_and_everywhere() {
        let i = hops_interval(0, Some(2));
        let f = Formula::somewhere("hops", i, p());
        assert_eq!(desugar(&f), Formula::reach(Formula::tt(), "hops", i, p()));

        let i01 = hops_interval(0, Some(1));
        let g = Formula::everywhere("hops", i01, p());
        assert_eq!(
            desugar(&g),
            Formula::not(Formula::reach(Formula::tt(), "hops", i01, Formula::not(p()))),
        );
    }

    #[test]
    fn desugar_globally() {
        let f = Formula::globally(None, p());
        assert_eq!(
            desugar(&f),
            Formula::not(Formula::until(Formula::tt(), None, Formula::not(p()))),
        );
        // Intervals ride along unchanged.
        let i = TimeInterval::bounded(0, 100).unwrap();
        let g = Formula::eventually(Some(i), p());
        assert_eq!(desugar(&g), Formula::until(Formula::tt(), Some(i), p()));
    }

    #[test]
    fn eliminate_bounded_eventually_is_a_next_chain() {
        let f = Formula::eventually(Some(TimeInterval::bounded(0, 3).unwrap()), a());
        let expect = Formula::or(
            a(),
            Formula::next(Formula::or(a(), Formula::next(Formula::or(a(), Formula::next(a()))))),
        );
        assert_eq!(eliminate_intervals(&f).formula(), &expect);

        let point = Formula::eventually(Some(TimeInterval::bounded(0, 0).unwrap()), a());
        assert_eq!(eliminate_intervals(&point).formula(), &a());
    }

    #[test]
    fn eliminate_bounded_globally_truncation_safe() {
        // Not the naive `a and X(a and X a)`: a strong Next would turn a
        // window truncated by the end of the trace into bottom, while the
        // direct semantics conjoins over the steps that exist.
        let f = Formula::globally(Some(TimeInterval::bounded(0, 2).unwrap()), a());
        let na = Formula::not(a());
        let expect = Formula::not(Formula::or(
            na.clone(),
            Formula::next(Formula::or(na.clone(), Formula::next(na))),
        ));
        assert_eq!(eliminate_intervals(&f).formula(), &expect);
    }

    #[test]
    fn eliminate_lower_bounded_until() {
        // p U[1,inf] q becomes p and X(p U q).
        let f = Formula::until(p(), Some(TimeInterval::unbounded(1)), q());
        let expect = Formula::and(p(), Formula::next(Formula::until(p(), None, q())));
        assert_eq!(eliminate_intervals(&f).formula(), &expect);

        // p U[2,inf] q keeps p through the skipped prefix.
        let f2 = Formula::until(p(), Some(TimeInterval::unbounded(2)), q());
        let np = Formula::not(p());
        let expect2 = Formula::and(
            Formula::not(Formula::or(np.clone(), Formula::next(np))),
            Formula::next(Formula::next(Formula::until(p(), None, q()))),
        );
        assert_eq!(eliminate_intervals(&f2).formula(), &expect2);
    }

    #[test]
    fn eliminate_bounded_until_combines_f_and_lower_bound() {
        let f = Formula::until(p(), Some(TimeInterval::bounded(0, 1).unwrap()), q());
        let expect = Formula::and(
            Formula::or(q(), Formula::next(q())),
            Formula::until(p(), None, q()),
        );
        assert_eq!(eliminate_intervals(&f).formula(), &expect);
    }

    #[test]
    fn eliminate_unbounded_f_collapses_true_guard() {
        // F[2,inf] p = X X (true U p): the G-part over `true` vanishes.
        let f = Formula::eventually(Some(TimeInterval::unbounded(2)), p());
        let expect = Formula::next(Formula::next(Formula::until(Formula::tt(), None, p())));
        assert_eq!(eliminate_intervals(&f).formula(), &expect);
    }

    #[test]
    fn eliminate_output_is_interval_free() {
        let i = TimeInterval::bounded(1, 3).unwrap();
        let f = Formula::globally(
            Some(i),
            Formula::or(
                Formula::somewhere("hops", hops_interval(1, Some(2)), p()),
                Formula::until(p(), Some(TimeInterval::unbounded(2)), q()),
            ),
        );
        let out = eliminate_intervals(&f);
        assert!(is_interval_free(out.formula()));
        assert!(!is_interval_free(&f));
    }

    #[test]
    fn closure_of_until() {
        let f = eliminate_intervals(&Formula::until(p(), None, q()));
        let c = closure(&f);
        assert_eq!(c.len(), 6);
        let items: HashSet<String> = c.items().iter().map(|s| s.to_string()).collect();
        let expect: HashSet<String> =
            ["p", "q", "not p", "not q", "p U q", "not (p U q)"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        assert_eq!(items, expect);
        // Negation pairing is a total involution.
        for i in 0..c.len() {
            assert_eq!(c.neg(c.neg(i)), i);
            assert_eq!(c.get(c.neg(i)), &c.get(i).neg());
        }
        assert_eq!(c.get(c.root()).to_string(), "p U q");
    }

    #[test]
    fn closure_collapses_double_negation() {
        let f = eliminate_intervals(&Formula::not(p()));
        let c = closure(&f);
        assert_eq!(c.len(), 2);
        let f2 = eliminate_intervals(&Formula::next(p()));
        let c2 = closure(&f2);
        assert_eq!(c2.len(), 4);
        let items: HashSet<String> = c2.items().iter().map(|s| s.to_string()).collect();
        let expect: HashSet<String> =
            ["p", "not p", "X p", "not X p"].iter().map(|s| s.to_string()).collect();
        assert_eq!(items, expect);
    }

    #[test]
    fn until_negation_and_empty_acceptance() {
        let gp = eliminate_intervals(&Formula::globally(None, p()));
        let c = closure(&gp);
        let root = c.root();
        assert!(c.is_until_negation(root));
        assert!(c.empty_accepts(root));

        let puq = eliminate_intervals(&Formula::until(p(), None, q()));
        let c2 = closure(&puq);
        assert!(!c2.is_until_negation(c2.root()));
        assert!(!c2.empty_accepts(c2.root()));
    }

    #[test]
    fn size_metrics() {
        let puq = Formula::until(p(), None, q());
        assert_eq!(subformula_count(&puq), 3);
        assert_eq!(formula_size(&puq), 6);
        // The closure metric of an interval-free formula equals its
        // closure length.
        let c = closure(&eliminate_intervals(&puq));
        assert_eq!(c.len(), formula_size(&puq));

        // Shared subtrees count once.
        let shared = Formula::and(puq.clone(), puq.clone());
        assert_eq!(subformula_count(&shared), 4);

        let f = Formula::eventually(Some(TimeInterval::bounded(0, 100).unwrap()), p());
        assert_eq!(interval_width_sum(&f), 100);
        let g = Formula::until(p(), Some(TimeInterval::unbounded(3)), q());
        assert_eq!(interval_width_sum(&g), 3);
    }

    #[test]
    fn elimination_size_stays_linear() {
        // |phi'| <= 4 * |phi| * (1 + total interval width), on a few
        // shapes that stress nesting and lower bounds.
        let cases = vec![
            Formula::eventually(Some(TimeInterval::bounded(0, 100).unwrap()), p()),
            Formula::eventually(Some(TimeInterval::bounded(100, 100).unwrap()), p()),
            Formula::globally(
                Some(TimeInterval::bounded(0, 4).unwrap()),
                Formula::globally(
                    Some(TimeInterval::bounded(0, 4).unwrap()),
                    Formula::globally(Some(TimeInterval::bounded(0, 4).unwrap()), p()),
                ),
            ),
            Formula::until(p(), Some(TimeInterval::bounded(2, 7).unwrap()), q()),
            Formula::until(
                Formula::eventually(Some(TimeInterval::bounded(0, 3).unwrap()), p()),
                Some(TimeInterval::unbounded(4)),
                q(),
            ),
        ];
        for f in cases {
            let out = eliminate_intervals(&f);
            let lhs = formula_size(out.formula());
            let bound = 4 * formula_size(&f) * (1 + interval_width_sum(&f) as usize);
            assert!(lhs <= bound, "{f}: |phi'|={lhs} bound={bound}");
        }
    }
}
