//! Canonical multilinear polynomials over automaton-state variables,
//! with coefficients in a De Morgan algebra.
//!
//! A polynomial is a join of monomials; a monomial is a coefficient meet
//! a duplicate-free set of variables. Both lattice operations are
//! idempotent, so exponents never exceed one and the canonical form is
//! small: monomials with equal variable sets merge under `⊕`, bottom
//! coefficients vanish, and absorbed monomials (a superset of another's
//! variables with a coefficient no larger) are dropped. The monitor's
//! entire run state is one such polynomial.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use thiserror::Error;

use crate::algebra::DeMorgan;

/// Identifier of an automaton state inside a polynomial.
///
/// `weak` is the cut-off flavor: when the trace ends while the variable
/// is still pending, a weak variable counts as accepted and a strong one
/// as rejected. Negation flips the flavor along with the state, which is
/// what makes dualization correct at the trace boundary.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub state: u32,
    pub weak: bool,
}

impl Var {
    pub fn strong(state: u32) -> Var {
        Var { state, weak: false }
    }

    pub fn weak(state: u32) -> Var {
        Var { state, weak: true }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}{}", self.state, if self.weak { "w" } else { "" })
    }
}

/// A polynomial in canonical form. The empty polynomial is `⊥`; the
/// variable-free monomial holds the constant part.
#[derive(Clone, PartialEq)]
pub struct Poly<A: DeMorgan> {
    terms: BTreeMap<Vec<Var>, A::Value>,
    _alg: PhantomData<A>,
}

impl<A: DeMorgan> Poly<A> {
    pub fn bot() -> Poly<A> {
        Poly { terms: BTreeMap::new(), _alg: PhantomData }
    }

    pub fn top() -> Poly<A> {
        Poly::constant(A::top())
    }

    pub fn constant(c: A::Value) -> Poly<A> {
        let mut terms = BTreeMap::new();
        if !A::is_bot(c) {
            terms.insert(Vec::new(), c);
        }
        Poly { terms, _alg: PhantomData }
    }

    pub fn var(v: Var) -> Poly<A> {
        let mut terms = BTreeMap::new();
        terms.insert(vec![v], A::top());
        Poly { terms, _alg: PhantomData }
    }

    /// Join of two polynomials.
    pub fn add(&self, other: &Poly<A>) -> Poly<A> {
        let mut terms = self.terms.clone();
        for (vars, &c) in &other.terms {
            merge(&mut terms, vars.clone(), c, A::oplus);
        }
        canonicalize::<A>(terms)
    }

    /// Meet of two polynomials: coefficients meet under `⊗`, variable
    /// sets union.
    pub fn mul(&self, other: &Poly<A>) -> Poly<A> {
        let mut terms: BTreeMap<Vec<Var>, A::Value> = BTreeMap::new();
        for (va, &ca) in &self.terms {
            for (vb, &cb) in &other.terms {
                let c = A::otimes(ca, cb);
                if A::is_bot(c) {
                    continue;
                }
                let mut vars: Vec<Var> = va.iter().chain(vb.iter()).copied().collect();
                vars.sort();
                vars.dedup();
                merge(&mut terms, vars, c, A::oplus);
            }
        }
        canonicalize::<A>(terms)
    }

    /// De Morgan dual: negates every coefficient, swaps join with meet,
    /// and replaces each variable through `negmap`. Satisfies
    /// `dual(p).evaluate(v) = ⊖ p.evaluate(⊖ ∘ v ∘ negmap⁻¹)` and, with
    /// an involutive `negmap`, `dual(dual(p)) ≡ p`.
    pub fn dual(&self, negmap: impl Fn(Var) -> Var) -> Poly<A> {
        // ⊖(⊕_i c_i ⊗ Π vars_i) = ⊗_i (⊖c_i ⊕ Σ negated vars_i).
        let mut out = Poly::top();
        for (vars, &c) in &self.terms {
            let mut factor = Poly::constant(A::ominus(c));
            for &v in vars {
                factor = factor.add(&Poly::var(negmap(v)));
            }
            out = out.mul(&factor);
        }
        out
    }

    /// Simultaneous substitution of every variable, then
    /// canonicalization. The resolver may fail (e.g. an unknown state).
    pub fn substitute<E>(
        &self,
        resolve: &mut dyn FnMut(Var) -> Result<Poly<A>, E>,
    ) -> Result<Poly<A>, E> {
        let mut out = Poly::bot();
        for (vars, &c) in &self.terms {
            let mut term = Poly::constant(c);
            for &v in vars {
                if term.is_bot() {
                    break;
                }
                term = term.mul(&resolve(v)?);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Scalar value under a total valuation of the support.
    pub fn evaluate(&self, valuation: impl Fn(Var) -> A::Value) -> A::Value {
        let mut acc = A::bot();
        for (vars, &c) in &self.terms {
            let mut term = c;
            for &v in vars {
                term = A::otimes(term, valuation(v));
            }
            acc = A::oplus(acc, term);
        }
        acc
    }

    pub fn support(&self) -> BTreeSet<Var> {
        self.terms.keys().flatten().copied().collect()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Monomials in canonical (variable-set lexicographic) order.
    pub fn monomials(&self) -> impl Iterator<Item = (&[Var], A::Value)> + '_ {
        self.terms.iter().map(|(vars, &c)| (vars.as_slice(), c))
    }

    pub fn is_bot(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_top(&self) -> bool {
        self.constant_value().map(A::is_top).unwrap_or(false)
    }

    /// `Some(value)` when the polynomial has no variables left.
    pub fn constant_value(&self) -> Option<A::Value> {
        match self.terms.len() {
            0 => Some(A::bot()),
            1 => {
                let (vars, &c) = self.terms.iter().next().expect("len checked");
                vars.is_empty().then_some(c)
            }
            _ => None,
        }
    }
}

fn merge<V: Copy>(
    terms: &mut BTreeMap<Vec<Var>, V>,
    vars: Vec<Var>,
    c: V,
    join: impl Fn(V, V) -> V,
) {
    terms
        .entry(vars)
        .and_modify(|prev| *prev = join(*prev, c))
        .or_insert(c);
}

fn canonicalize<A: DeMorgan>(terms: BTreeMap<Vec<Var>, A::Value>) -> Poly<A> {
    // Bottom coefficients first, then mutual absorption: drop a monomial
    // when another carries a subset of its variables and at least its
    // coefficient. Equal variable sets were already merged, so the
    // subset test below is only met by strictly smaller sets and the
    // scan cannot drop both of a pair.
    let live: Vec<(&Vec<Var>, A::Value)> = terms
        .iter()
        .map(|(v, &c)| (v, c))
        .filter(|(_, c)| !A::is_bot(*c))
        .collect();
    let mut out = BTreeMap::new();
    'outer: for &(vars, c) in &live {
        for &(other_vars, other_c) in &live {
            if other_vars.len() < vars.len()
                && A::le(c, other_c)
                && is_subset(other_vars, vars)
            {
                continue 'outer;
            }
        }
        out.insert(vars.clone(), c);
    }
    let poly = Poly { terms: out, _alg: PhantomData };
    debug_assert!(
        poly.support().len() >= 60
            || poly.term_count() <= 1usize << poly.support().len(),
        "term count {} exceeds 2^{}",
        poly.term_count(),
        poly.support().len(),
    );
    poly
}

/// Subset test on sorted duplicate-free slices.
fn is_subset(small: &[Var], big: &[Var]) -> bool {
    let mut it = big.iter();
    'next: for v in small {
        for b in it.by_ref() {
            if b == v {
                continue 'next;
            }
            if b > v {
                return false;
            }
        }
        return false;
    }
    true
}

impl<A: DeMorgan> fmt::Display for Poly<A> {
    /// Canonical sum-of-products text, e.g. `⊤*q0*q3w` or
    /// `1.5*q2 + 0*q4`. The empty polynomial prints as the bottom
    /// constant. Round-trips through [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "{}", A::fmt_value(A::bot()));
        }
        for (i, (vars, &c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", A::fmt_value(c))?;
            for v in vars {
                write!(f, "*{v}")?;
            }
        }
        Ok(())
    }
}

impl<A: DeMorgan> fmt::Debug for Poly<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed polynomial text at `{0}`")]
pub struct PolyParseError(String);

impl<A: DeMorgan> FromStr for Poly<A> {
    type Err = PolyParseError;

    fn from_str(text: &str) -> Result<Poly<A>, PolyParseError> {
        let mut terms = BTreeMap::new();
        for mono in text.split(" + ") {
            let mut parts = mono.split('*');
            let coeff_text = parts.next().expect("split yields at least one part");
            let c = A::parse_value(coeff_text)
                .ok_or_else(|| PolyParseError(coeff_text.to_string()))?;
            let mut vars = Vec::new();
            for p in parts {
                vars.push(parse_var(p)?);
            }
            vars.sort();
            vars.dedup();
            if !A::is_bot(c) {
                merge(&mut terms, vars, c, A::oplus);
            }
        }
        Ok(canonicalize::<A>(terms))
    }
}

fn parse_var(text: &str) -> Result<Var, PolyParseError> {
    let body = text
        .strip_prefix('q')
        .ok_or_else(|| PolyParseError(text.to_string()))?;
    let (digits, weak) = match body.strip_suffix('w') {
        Some(d) => (d, true),
        None => (body, false),
    };
    let state = digits
        .parse::<u32>()
        .map_err(|_| PolyParseError(text.to_string()))?;
    Ok(Var { state, weak })
}
