//! The alternating weighted automaton compiled from an interval-free
//! formula over a fixed location universe.
//!
//! States are (closure formula, location) pairs. The alphabet is the
//! unbounded set of spatial snapshots, so the transition function is an
//! evaluator, not a table: [`DeltaEvaluator`] turns a state and one
//! snapshot into a polynomial over successor states, resolving spatial
//! operators by bounded path enumeration over that snapshot.
//!
//! Variables carry a cut-off flavor (see [`Var`]): transition rules emit
//! strong variables, dualization flips them to weak, and the terminal
//! valuation accepts exactly the weak ones. This reproduces the
//! acceptance of negated Until (and, by the same mechanism, any
//! obligation under an odd number of negations) on finite traces.

use std::fmt::Write as _;
use std::marker::PhantomData;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, DeMorgan, DistanceRegistry};
use crate::logic::{closure, Closure, Node, SpltlFormula};
use crate::polynomial::{Poly, Var};
use crate::spatial::{LocationId, SpatialError, SpatialModel, Universe};
use crate::trace::{label, LabelError};

pub type StateId = u32;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("unknown distance function `{0}`")]
    UnknownDistanceFunction(String),
    #[error("location index {0} out of range")]
    UnknownLocation(LocationId),
    #[error("snapshot universe does not match the automaton universe")]
    UniverseMismatch,
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Compiled automaton: immutable after construction and shareable
/// between any number of monitors.
pub struct Automaton<A: DeMorgan> {
    closure: Closure,
    universe: Arc<Universe>,
    registry: DistanceRegistry,
    /// Formula-level successor over-approximation: `succ[i]` lists the
    /// closure items whose states can occur in a Δ-image of item `i`.
    succ: Vec<Vec<usize>>,
    /// Closure items reachable from the root through `succ`.
    live: Vec<bool>,
    _alg: PhantomData<A>,
}

impl<A: DeMorgan> Automaton<A> {
    /// Compiles `f` over `universe`. Fails if the formula names a
    /// distance function missing from `registry`.
    pub fn build(
        f: &SpltlFormula,
        universe: Arc<Universe>,
        registry: DistanceRegistry,
    ) -> Result<Automaton<A>, AutomatonError> {
        for name in f.formula().distance_fn_names() {
            if registry.get(name).is_none() {
                return Err(AutomatonError::UnknownDistanceFunction(name.to_string()));
            }
        }
        let closure = closure(f);
        let succ = successor_relation(&closure);
        let live = vec![true; closure.len()];
        Ok(Automaton { closure, universe, registry, succ, live, _alg: PhantomData })
    }

    /// Copy with states unreachable from the root (over the formula-level
    /// successor relation) dropped. The language is unchanged: dropped
    /// states never occur in any run from any initial state.
    pub fn prune_unreachable(&self) -> Automaton<A> {
        let mut live = vec![false; self.closure.len()];
        let mut work = vec![self.closure.root()];
        live[self.closure.root()] = true;
        while let Some(i) = work.pop() {
            for &s in &self.succ[i] {
                if !live[s] {
                    live[s] = true;
                    work.push(s);
                }
            }
        }
        Automaton {
            closure: self.closure.clone(),
            universe: self.universe.clone(),
            registry: self.registry.clone(),
            succ: self.succ.clone(),
            live,
            _alg: PhantomData,
        }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn registry(&self) -> &DistanceRegistry {
        &self.registry
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    /// Number of (live) states.
    pub fn state_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count() * self.universe.len()
    }

    /// The a-priori bound `2 · |L| · |φ'|` the state count is checked
    /// against, with `|φ'|` the closure-size metric of the compiled
    /// formula.
    pub fn state_bound(&self) -> usize {
        2 * self.universe.len() * self.closure.len()
    }

    pub fn state_id(&self, item: usize, l: LocationId) -> StateId {
        (item * self.universe.len() + l as usize) as StateId
    }

    pub fn state_item(&self, q: StateId) -> usize {
        q as usize / self.universe.len()
    }

    pub fn state_loc(&self, q: StateId) -> LocationId {
        (q as usize % self.universe.len()) as LocationId
    }

    pub fn state_name(&self, q: StateId) -> String {
        format!(
            "q_{{{}}}^{{{}}}",
            self.closure.get(self.state_item(q)),
            self.universe.name(self.state_loc(q)),
        )
    }

    /// Live states in (closure item, location) order.
    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.closure.len())
            .filter(|&i| self.live[i])
            .flat_map(move |i| {
                self.universe.locations().map(move |l| self.state_id(i, l))
            })
    }

    /// Accepting states: those whose formula has the shape `¬(ψ1 U ψ2)`.
    pub fn f_states(&self) -> Vec<StateId> {
        self.states()
            .filter(|&q| self.closure.is_until_negation(self.state_item(q)))
            .collect()
    }

    /// Terminal weighting: the value a still-pending variable takes when
    /// the trace ends. Weak obligations accept, strong ones reject.
    pub fn terminal(var: Var) -> A::Value {
        if var.weak {
            A::top()
        } else {
            A::bot()
        }
    }

    /// Initial polynomial for an ego location: the root state variable
    /// with coefficient `⊤`. Its flavor is the root formula's value on
    /// the empty trace, so a monitor that has consumed nothing reports
    /// the empty-prefix semantics.
    pub fn initial(&self, ego: LocationId) -> Result<Poly<A>, AutomatonError> {
        if ego as usize >= self.universe.len() {
            return Err(AutomatonError::UnknownLocation(ego));
        }
        let root = self.closure.root();
        Ok(Poly::var(Var {
            state: self.state_id(root, ego),
            weak: self.closure.empty_accepts(root),
        }))
    }

    fn negvar(&self, v: Var) -> Var {
        let item = self.state_item(v.state);
        let l = self.state_loc(v.state);
        Var { state: self.state_id(self.closure.neg(item), l), weak: !v.weak }
    }

    /// Verifies that a snapshot ranges over this automaton's universe.
    pub fn check_universe(&self, model: &SpatialModel) -> Result<(), AutomatonError> {
        let same = Arc::ptr_eq(&self.universe, model.universe())
            || self.universe.names() == model.universe().names();
        if same {
            Ok(())
        } else {
            Err(AutomatonError::UniverseMismatch)
        }
    }

    /// Formula-level successor graph in dot format, over live items.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph delta {\n  rankdir=LR;\n");
        for i in 0..self.closure.len() {
            if !self.live[i] {
                continue;
            }
            let shape = if self.closure.is_until_negation(i) { "doublecircle" } else { "circle" };
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", shape={}];",
                i,
                self.closure.get(i).to_string().replace('"', "\\\""),
                shape,
            );
        }
        for i in 0..self.closure.len() {
            if !self.live[i] {
                continue;
            }
            for &s in &self.succ[i] {
                let _ = writeln!(out, "  n{i} -> n{s};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Which closure items can contribute variables to each item's Δ-image.
/// Children always precede parents in closure order (negations collapse
/// double negation), so one forward pass suffices.
fn successor_relation(closure: &Closure) -> Vec<Vec<usize>> {
    let mut succ: Vec<Vec<usize>> = Vec::with_capacity(closure.len());
    for i in 0..closure.len() {
        let mut s: Vec<usize> = match closure.get(i).node() {
            Node::True | Node::False | Node::Atom(_) => Vec::new(),
            Node::Not(x) => {
                let xi = closure.index_of(x).expect("closure is subformula-closed");
                succ[xi].iter().map(|&t| closure.neg(t)).collect()
            }
            Node::And(a, b) | Node::Or(a, b) => {
                let ai = closure.index_of(a).expect("closure is subformula-closed");
                let bi = closure.index_of(b).expect("closure is subformula-closed");
                succ[ai].iter().chain(succ[bi].iter()).copied().collect()
            }
            Node::Next(x) => {
                vec![closure.index_of(x).expect("closure is subformula-closed")]
            }
            Node::Until { lhs, rhs, .. } => {
                let li = closure.index_of(lhs).expect("closure is subformula-closed");
                let ri = closure.index_of(rhs).expect("closure is subformula-closed");
                let mut v = vec![i];
                v.extend(succ[li].iter().chain(succ[ri].iter()).copied());
                v
            }
            Node::Reach { lhs, rhs, .. } => {
                let li = closure.index_of(lhs).expect("closure is subformula-closed");
                let ri = closure.index_of(rhs).expect("closure is subformula-closed");
                succ[li].iter().chain(succ[ri].iter()).copied().collect()
            }
            Node::Escape { arg, .. } => {
                let xi = closure.index_of(arg).expect("closure is subformula-closed");
                succ[xi].clone()
            }
            Node::Eventually { .. }
            | Node::Globally { .. }
            | Node::Somewhere { .. }
            | Node::Everywhere { .. } => unreachable!("closure items are interval-free"),
        };
        s.sort_unstable();
        s.dedup();
        succ.push(s);
    }
    succ
}

/// Transition evaluator for one snapshot: computes Δ(q, S) as a
/// polynomial over successor states, memoized per state so every state
/// substituted in the same step shares the work.
pub struct DeltaEvaluator<'a, A: DeMorgan> {
    aut: &'a Automaton<A>,
    model: &'a SpatialModel,
    step: u64,
    memo: Vec<Option<Poly<A>>>,
}

impl<'a, A: DeMorgan> DeltaEvaluator<'a, A> {
    pub fn new(
        aut: &'a Automaton<A>,
        model: &'a SpatialModel,
        step: u64,
    ) -> Result<Self, AutomatonError> {
        aut.check_universe(model)?;
        let memo = vec![None; aut.closure.len() * aut.universe.len()];
        Ok(DeltaEvaluator { aut, model, step, memo })
    }

    pub fn delta(&mut self, q: StateId) -> Result<Poly<A>, AutomatonError> {
        if let Some(p) = &self.memo[q as usize] {
            return Ok(p.clone());
        }
        let p = self.compute(self.aut.state_item(q), self.aut.state_loc(q))?;
        self.memo[q as usize] = Some(p.clone());
        Ok(p)
    }

    fn delta_of(&mut self, item: usize, l: LocationId) -> Result<Poly<A>, AutomatonError> {
        self.delta(self.aut.state_id(item, l))
    }

    fn item_of(&self, f: &crate::logic::Formula) -> usize {
        self.aut.closure.index_of(f).expect("closure is subformula-closed")
    }

    fn compute(&mut self, item: usize, l: LocationId) -> Result<Poly<A>, AutomatonError> {
        let f = self.aut.closure.get(item).clone();
        match f.node() {
            Node::True => Ok(Poly::top()),
            Node::False => Ok(Poly::bot()),
            Node::Atom(pred) => {
                Ok(Poly::constant(label::<A>(self.model, self.step, l, pred)?))
            }
            Node::Not(x) => {
                let inner = self.delta_of(self.item_of(x), l)?;
                Ok(inner.dual(|v| self.aut.negvar(v)))
            }
            Node::And(a, b) => {
                let pa = self.delta_of(self.item_of(a), l)?;
                let pb = self.delta_of(self.item_of(b), l)?;
                Ok(pa.mul(&pb))
            }
            Node::Or(a, b) => {
                let pa = self.delta_of(self.item_of(a), l)?;
                let pb = self.delta_of(self.item_of(b), l)?;
                Ok(pa.add(&pb))
            }
            Node::Next(x) => {
                Ok(Poly::var(Var::strong(self.aut.state_id(self.item_of(x), l))))
            }
            Node::Until { lhs, rhs, .. } => {
                let self_var = Poly::var(Var::strong(self.aut.state_id(item, l)));
                let pr = self.delta_of(self.item_of(rhs), l)?;
                let pl = self.delta_of(self.item_of(lhs), l)?;
                Ok(pr.add(&pl.mul(&self_var)))
            }
            Node::Reach { func, interval, lhs, rhs } => {
                let fdist = self.lookup(func)?;
                let (li, ri) = (self.item_of(lhs), self.item_of(rhs));
                let model = self.model;
                let mut acc = Poly::bot();
                // prods[k] is the product of Δ(lhs) over the first k path
                // locations; entries above the current depth are stale
                // leftovers from sibling branches and get truncated.
                let mut prods: Vec<Poly<A>> = vec![Poly::top()];
                let mut stash: Option<AutomatonError> = None;
                model.walk_bounded_paths(l, &fdist, interval.hi(), &mut |locs, dists| {
                    let k = locs.len();
                    let end = locs[k - 1];
                    let below = prods[k - 1].clone();
                    let step = (|| -> Result<Poly<A>, AutomatonError> {
                        if interval.contains(dists[k - 1])? {
                            let pr = self.delta_of(ri, end)?;
                            acc = acc.add(&pr.mul(&below));
                        }
                        Ok(below.mul(&self.delta_of(li, end)?))
                    })();
                    match step {
                        Ok(extended) => {
                            let prune = extended.is_bot();
                            prods.truncate(k);
                            prods.push(extended);
                            Ok(!prune)
                        }
                        Err(e) => {
                            if stash.is_none() {
                                stash = Some(e);
                            }
                            Ok(false)
                        }
                    }
                })?;
                match stash {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            }
            Node::Escape { func, interval, arg } => {
                let fdist = self.lookup(func)?;
                let xi = self.item_of(arg);
                let model = self.model;
                let shortest = model.shortest_distances(l, &fdist)?;
                let mut acc = Poly::bot();
                let mut prods: Vec<Poly<A>> = vec![Poly::top()];
                let mut stash: Option<AutomatonError> = None;
                model.walk_bounded_paths(
                    l,
                    &fdist,
                    fdist.domain().inf(),
                    &mut |locs, _dists| {
                        let k = locs.len();
                        let end = locs[k - 1];
                        let below = prods[k - 1].clone();
                        let step = (|| -> Result<Poly<A>, AutomatonError> {
                            let including = below.mul(&self.delta_of(xi, end)?);
                            if interval.contains(shortest[end as usize])? {
                                acc = acc.add(&including);
                            }
                            Ok(including)
                        })();
                        match step {
                            Ok(including) => {
                                let prune = including.is_bot();
                                prods.truncate(k);
                                prods.push(including);
                                Ok(!prune)
                            }
                            Err(e) => {
                                if stash.is_none() {
                                    stash = Some(e);
                                }
                                Ok(false)
                            }
                        }
                    },
                )?;
                match stash {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            }
            Node::Eventually { .. }
            | Node::Globally { .. }
            | Node::Somewhere { .. }
            | Node::Everywhere { .. } => unreachable!("closure items are interval-free"),
        }
    }

    fn lookup(&self, func: &str) -> Result<crate::algebra::DistanceFunction, AutomatonError> {
        self.aut
            .registry
            .get(func)
            .copied()
            .ok_or_else(|| AutomatonError::UnknownDistanceFunction(func.to_string()))
    }
}
