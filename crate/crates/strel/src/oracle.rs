//! Direct recursive evaluation of the specification semantics over a
//! loaded trace.
//!
//! Each semantic equation is implemented literally: timed operators
//! iterate over their (trace-intersected) window, spatial operators sum
//! over enumerated simple paths. Nothing is rewritten or compiled, which
//! makes this the slow, trustworthy reference the automaton pipeline is
//! checked against, and a usable offline monitor when speed is
//! irrelevant.

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::{
    AlgebraError, DeMorgan, DistInterval, DistanceFunction, DistanceRegistry,
};
use crate::logic::{Formula, Node, TimeInterval};
use crate::spatial::{LocationId, SpatialError};
use crate::trace::{label, LabelError, Trace};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("time index {t} out of range for a trace of length {len}")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("location index {0} out of range")]
    LocationOutOfRange(LocationId),
    #[error("unknown distance function `{0}`")]
    UnknownDistanceFunction(String),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Value of `f` at location `l` and time `t`, computed by direct
/// recursion with no memoization. Timed and derived operators are
/// evaluated from their own equations, not rewritten.
pub fn eval_semantics<A: DeMorgan>(
    trace: &Trace,
    f: &Formula,
    l: LocationId,
    t: usize,
    registry: &DistanceRegistry,
) -> Result<A::Value, OracleError> {
    Core::<A> { trace, registry, memo: None }.eval(f, l, t)
}

/// Reusable evaluator memoizing on (subformula, location, time). Results
/// are identical to [`eval_semantics`]; only repeated work is saved.
pub struct Evaluator<'a, A: DeMorgan> {
    core: Core<'a, A>,
}

impl<'a, A: DeMorgan> Evaluator<'a, A> {
    pub fn new(trace: &'a Trace, registry: &'a DistanceRegistry) -> Self {
        Evaluator { core: Core { trace, registry, memo: Some(HashMap::new()) } }
    }

    pub fn eval(&mut self, f: &Formula, l: LocationId, t: usize) -> Result<A::Value, OracleError> {
        self.core.eval(f, l, t)
    }
}

struct Core<'a, A: DeMorgan> {
    trace: &'a Trace,
    registry: &'a DistanceRegistry,
    memo: Option<HashMap<(Formula, LocationId, usize), A::Value>>,
}

/// Half-open index range of `t + interval` clipped to the trace.
fn window(t: usize, len: usize, interval: Option<TimeInterval>) -> (usize, usize) {
    let (lo, hi) = match interval {
        None => (0, None),
        Some(i) => (i.lo(), i.hi()),
    };
    let first = (t as u64).saturating_add(lo).min(len as u64) as usize;
    let last = match hi {
        None => len,
        Some(h) => (t as u64).saturating_add(h).saturating_add(1).min(len as u64) as usize,
    };
    (first, last)
}

impl<'a, A: DeMorgan> Core<'a, A> {
    fn eval(&mut self, f: &Formula, l: LocationId, t: usize) -> Result<A::Value, OracleError> {
        let len = self.trace.len();
        if t >= len {
            return Err(OracleError::TimeOutOfRange { t, len });
        }
        if l as usize >= self.trace.universe().len() {
            return Err(OracleError::LocationOutOfRange(l));
        }
        if let Some(memo) = &self.memo {
            if let Some(v) = memo.get(&(f.clone(), l, t)) {
                return Ok(*v);
            }
        }
        let v = self.compute(f, l, t)?;
        if let Some(memo) = &mut self.memo {
            memo.insert((f.clone(), l, t), v);
        }
        Ok(v)
    }

    fn compute(&mut self, f: &Formula, l: LocationId, t: usize) -> Result<A::Value, OracleError> {
        let len = self.trace.len();
        match f.node() {
            Node::True => Ok(A::top()),
            Node::False => Ok(A::bot()),
            Node::Atom(pred) => Ok(label::<A>(self.trace.model(t), t as u64, l, pred)?),
            Node::Not(x) => Ok(A::ominus(self.eval(x, l, t)?)),
            Node::And(a, b) => Ok(A::otimes(self.eval(a, l, t)?, self.eval(b, l, t)?)),
            Node::Or(a, b) => Ok(A::oplus(self.eval(a, l, t)?, self.eval(b, l, t)?)),
            Node::Next(x) => {
                if t + 1 < len {
                    self.eval(x, l, t + 1)
                } else {
                    Ok(A::bot())
                }
            }
            Node::Until { interval, lhs, rhs } => {
                let (first, last) = window(t, len, *interval);
                let mut acc = A::bot();
                let mut prefix = A::top();
                for tp in t..last {
                    if tp >= first {
                        acc = A::oplus(acc, A::otimes(self.eval(rhs, l, tp)?, prefix));
                    }
                    prefix = A::otimes(prefix, self.eval(lhs, l, tp)?);
                }
                Ok(acc)
            }
            Node::Eventually { interval, arg } => {
                let (first, last) = window(t, len, *interval);
                let mut acc = A::bot();
                for tp in first..last {
                    acc = A::oplus(acc, self.eval(arg, l, tp)?);
                }
                Ok(acc)
            }
            Node::Globally { interval, arg } => {
                let (first, last) = window(t, len, *interval);
                let mut acc = A::top();
                for tp in first..last {
                    acc = A::otimes(acc, self.eval(arg, l, tp)?);
                }
                Ok(acc)
            }
            Node::Reach { func, interval, lhs, rhs } => {
                self.eval_reach(func, *interval, Some(lhs), rhs, l, t)
            }
            Node::Somewhere { func, interval, arg } => {
                self.eval_reach(func, *interval, None, arg, l, t)
            }
            Node::Everywhere { func, interval, arg } => {
                // Dual of Somewhere: conjunction over the same positions.
                let fdist = self.lookup(func)?;
                let model = self.trace.model(t).clone();
                let paths = model.enumerate_bounded_paths(l, &fdist, interval.hi())?;
                let mut acc = A::top();
                for path in &paths {
                    let d = *path.prefix_distances().last().expect("paths are non-empty");
                    if interval.contains(d)? {
                        acc = A::otimes(acc, self.eval(arg, path.end(), t)?);
                    }
                }
                Ok(acc)
            }
            Node::Escape { func, interval, arg } => {
                let fdist = self.lookup(func)?;
                let model = self.trace.model(t).clone();
                let shortest = model.shortest_distances(l, &fdist)?;
                let paths =
                    model.enumerate_bounded_paths(l, &fdist, fdist.domain().inf())?;
                let mut acc = A::bot();
                for path in &paths {
                    if interval.contains(shortest[path.end() as usize])? {
                        let mut term = A::top();
                        for &j in path.locations() {
                            term = A::otimes(term, self.eval(arg, j, t)?);
                        }
                        acc = A::oplus(acc, term);
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Reach, and Somewhere as Reach with a trivially true left operand.
    /// Every enumerated path stands for the (route, position) pair at its
    /// own endpoint; prefixes are enumerated as paths of their own, so
    /// all positions are covered.
    fn eval_reach(
        &mut self,
        func: &str,
        interval: DistInterval,
        lhs: Option<&Formula>,
        rhs: &Formula,
        l: LocationId,
        t: usize,
    ) -> Result<A::Value, OracleError> {
        let fdist = self.lookup(func)?;
        let model = self.trace.model(t).clone();
        let paths = model.enumerate_bounded_paths(l, &fdist, interval.hi())?;
        let mut acc = A::bot();
        for path in &paths {
            let d = *path.prefix_distances().last().expect("paths are non-empty");
            if !interval.contains(d)? {
                continue;
            }
            let mut term = self.eval(rhs, path.end(), t)?;
            if let Some(lhs) = lhs {
                for &j in &path.locations()[..path.len() - 1] {
                    term = A::otimes(term, self.eval(lhs, j, t)?);
                }
            }
            acc = A::oplus(acc, term);
        }
        Ok(acc)
    }

    fn lookup(&self, func: &str) -> Result<DistanceFunction, OracleError> {
        self.registry
            .get(func)
            .copied()
            .ok_or_else(|| OracleError::UnknownDistanceFunction(func.to_string()))
    }
}
