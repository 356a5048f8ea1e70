//! Automaton execution. A monitor holds the single polynomial θ over
//! automaton states; each snapshot substitutes every state variable with
//! its Δ-image and recanonicalizes. Verdicts come from evaluating θ under
//! the terminal weighting, which is well defined at any step, so the same
//! monitor serves online (per-step values) and offline (final value) use.

use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraValue, Boolean, DeMorgan, DistanceRegistry, MinMax};
use crate::automaton::{Automaton, AutomatonError, DeltaEvaluator};
use crate::logic::SpltlFormula;
use crate::polynomial::{Poly, PolyParseError, Var};
use crate::spatial::{LocationId, SpatialModel, Universe};
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("cannot monitor an empty trace")]
    EmptyTrace,
    #[error(transparent)]
    Snapshot(#[from] PolyParseError),
    #[error("snapshot references state {0}, which this automaton does not have")]
    ForeignState(u32),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// One running instance: an ego location's view of the specification.
/// Many monitors may share one automaton and consume the same snapshot
/// stream independently.
pub struct Monitor<A: DeMorgan> {
    aut: Arc<Automaton<A>>,
    ego: LocationId,
    theta: Poly<A>,
    steps: u64,
}

impl<A: DeMorgan> Monitor<A> {
    pub fn start(aut: Arc<Automaton<A>>, ego: LocationId) -> Result<Monitor<A>, AutomatonError> {
        let theta = aut.initial(ego)?;
        Ok(Monitor { aut, ego, theta, steps: 0 })
    }

    pub fn automaton(&self) -> &Arc<Automaton<A>> {
        &self.aut
    }

    pub fn ego(&self) -> LocationId {
        self.ego
    }

    /// Snapshots consumed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn theta(&self) -> &Poly<A> {
        &self.theta
    }

    /// A monitor is conclusive exactly when θ has no variables left; the
    /// verdict can then never change, in either algebra, because constant
    /// polynomials are fixed points of the substitution update.
    pub fn is_conclusive(&self) -> bool {
        self.theta.constant_value().is_some()
    }

    /// Consumes one snapshot: θ ← θ[q ↦ Δ(q, S)], simultaneously over the
    /// whole support. Stepping a conclusive monitor skips the transition
    /// work and only advances the step counter.
    pub fn step(&mut self, model: &SpatialModel) -> Result<(), AutomatonError> {
        self.aut.check_universe(model)?;
        if !self.is_conclusive() {
            let mut ev = DeltaEvaluator::new(&self.aut, model, self.steps)?;
            self.theta = self.theta.substitute(&mut |v: Var| ev.delta(v.state))?;
        }
        self.steps += 1;
        Ok(())
    }

    /// Value of the prefix consumed so far: θ evaluated under the
    /// terminal weighting. Before any step this is the empty-prefix
    /// value; after the last step it is the trace verdict.
    pub fn current_value(&self) -> A::Value {
        self.theta.evaluate(Automaton::<A>::terminal)
    }

    /// Serializes the run state as θ's canonical text.
    pub fn snapshot(&self) -> String {
        self.theta.to_string()
    }

    /// Replaces θ with a previously snapshotted polynomial. The step
    /// counter is untouched; it counts snapshots fed to this instance.
    pub fn restore(&mut self, text: &str) -> Result<(), MonitorError> {
        let theta: Poly<A> = text.parse()?;
        let states = self.aut.closure().len() * self.aut.universe().len();
        if let Some(v) = theta.support().iter().find(|v| v.state as usize >= states) {
            return Err(MonitorError::ForeignState(v.state));
        }
        self.theta = theta;
        Ok(())
    }
}

/// Feeds the whole trace through a fresh monitor and returns the final
/// value. Equals the direct semantics of the specification at (ego, 0).
pub fn run_offline<A: DeMorgan>(
    aut: &Arc<Automaton<A>>,
    trace: &Trace,
    ego: LocationId,
) -> Result<A::Value, MonitorError> {
    if trace.is_empty() {
        return Err(MonitorError::EmptyTrace);
    }
    let mut m = Monitor::start(aut.clone(), ego)?;
    for model in trace.models() {
        m.step(model)?;
    }
    Ok(m.current_value())
}

/// Algebra selection at runtime boundaries (CLI flags, FFI).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Semantics {
    /// Qualitative verdicts in the Boolean algebra.
    Bool,
    /// Robustness values in the min-max algebra.
    Robust,
}

/// An automaton over either algebra, chosen at runtime.
pub enum AnyAutomaton {
    Bool(Arc<Automaton<Boolean>>),
    Robust(Arc<Automaton<MinMax>>),
}

impl AnyAutomaton {
    pub fn build(
        semantics: Semantics,
        f: &SpltlFormula,
        universe: Arc<Universe>,
        registry: DistanceRegistry,
    ) -> Result<AnyAutomaton, AutomatonError> {
        Ok(match semantics {
            Semantics::Bool => {
                AnyAutomaton::Bool(Arc::new(Automaton::build(f, universe, registry)?))
            }
            Semantics::Robust => {
                AnyAutomaton::Robust(Arc::new(Automaton::build(f, universe, registry)?))
            }
        })
    }

    pub fn semantics(&self) -> Semantics {
        match self {
            AnyAutomaton::Bool(_) => Semantics::Bool,
            AnyAutomaton::Robust(_) => Semantics::Robust,
        }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        match self {
            AnyAutomaton::Bool(a) => a.universe(),
            AnyAutomaton::Robust(a) => a.universe(),
        }
    }

    pub fn state_count(&self) -> usize {
        match self {
            AnyAutomaton::Bool(a) => a.state_count(),
            AnyAutomaton::Robust(a) => a.state_count(),
        }
    }

    pub fn state_bound(&self) -> usize {
        match self {
            AnyAutomaton::Bool(a) => a.state_bound(),
            AnyAutomaton::Robust(a) => a.state_bound(),
        }
    }

    pub fn monitor(&self, ego: LocationId) -> Result<AnyMonitor, AutomatonError> {
        Ok(match self {
            AnyAutomaton::Bool(a) => AnyMonitor::Bool(Monitor::start(a.clone(), ego)?),
            AnyAutomaton::Robust(a) => AnyMonitor::Robust(Monitor::start(a.clone(), ego)?),
        })
    }
}

/// A monitor over either algebra; verdicts are runtime-tagged.
pub enum AnyMonitor {
    Bool(Monitor<Boolean>),
    Robust(Monitor<MinMax>),
}

impl AnyMonitor {
    pub fn ego(&self) -> LocationId {
        match self {
            AnyMonitor::Bool(m) => m.ego(),
            AnyMonitor::Robust(m) => m.ego(),
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            AnyMonitor::Bool(m) => m.steps(),
            AnyMonitor::Robust(m) => m.steps(),
        }
    }

    pub fn is_conclusive(&self) -> bool {
        match self {
            AnyMonitor::Bool(m) => m.is_conclusive(),
            AnyMonitor::Robust(m) => m.is_conclusive(),
        }
    }

    pub fn step(&mut self, model: &SpatialModel) -> Result<(), AutomatonError> {
        match self {
            AnyMonitor::Bool(m) => m.step(model),
            AnyMonitor::Robust(m) => m.step(model),
        }
    }

    pub fn current_value(&self) -> AlgebraValue {
        match self {
            AnyMonitor::Bool(m) => Boolean::to_dyn(m.current_value()),
            AnyMonitor::Robust(m) => MinMax::to_dyn(m.current_value()),
        }
    }

    pub fn snapshot(&self) -> String {
        match self {
            AnyMonitor::Bool(m) => m.snapshot(),
            AnyMonitor::Robust(m) => m.snapshot(),
        }
    }

    pub fn restore(&mut self, text: &str) -> Result<(), MonitorError> {
        match self {
            AnyMonitor::Bool(m) => m.restore(text),
            AnyMonitor::Robust(m) => m.restore(text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Boolean, MinMax};
    use crate::logic::{eliminate_intervals, parse, Formula, Node};
    use crate::oracle::eval_semantics;
    use crate::trace::test_support::{build_trace, edge, node};
    use crate::trace::StepRecord;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeSet;

    fn automaton<A: DeMorgan>(text: &str, names: &[&str]) -> Arc<Automaton<A>> {
        let f = eliminate_intervals(&parse(text).unwrap());
        let universe = Universe::new(names.iter().map(|s| s.to_string()).collect()).unwrap();
        Arc::new(Automaton::build(&f, universe, DistanceRegistry::builtin()).unwrap())
    }

    fn g1_steps(kinds_per_step: &[[&str; 3]], battery: Option<[f64; 3]>) -> Trace {
        let steps = kinds_per_step
            .iter()
            .enumerate()
            .map(|(t, kinds)| {
                let attrs = |i: usize| -> Vec<(&str, f64)> {
                    battery.map(|b| vec![("battery", b[i])]).unwrap_or_default()
                };
                StepRecord {
                    t: t as u64,
                    nodes: vec![
                        node("a", kinds[0], &attrs(0)),
                        node("b", kinds[1], &attrs(1)),
                        node("c", kinds[2], &attrs(2)),
                    ],
                    edges: vec![edge("a", 1.0, "b"), edge("b", 1.0, "c")],
                }
            })
            .collect();
        build_trace(&["a", "b", "c"], true, steps)
    }

    #[test]
    fn start_values_before_any_step() {
        let g: Arc<Automaton<Boolean>> = automaton("G p", &["a", "b", "c"]);
        let m = Monitor::start(g, 0).unwrap();
        assert_eq!(m.steps(), 0);
        assert!(!m.is_conclusive());
        assert_eq!(m.theta().support().len(), 1);
        assert!(m.current_value());

        let u: Arc<Automaton<Boolean>> = automaton("p U q", &["a"]);
        assert!(!Monitor::start(u, 0).unwrap().current_value());
    }

    #[test]
    fn step_materializes_next_obligation() {
        let aut: Arc<Automaton<Boolean>> = automaton("X p", &["a", "b", "c"]);
        let trace = g1_steps(&[["q", "q", "q"], ["p", "q", "q"]], None);
        let mut m = Monitor::start(aut.clone(), 0).unwrap();
        m.step(trace.model(0)).unwrap();

        let p_item = aut.closure().index_of(&Formula::kind("p")).unwrap();
        assert_eq!(*m.theta(), Poly::var(Var::strong(aut.state_id(p_item, 0))));
        assert!(!m.current_value(), "pending Next rejects at cut-off");

        m.step(trace.model(1)).unwrap();
        assert!(m.is_conclusive());
        assert!(m.current_value());
    }

    #[test]
    fn atom_concludes_on_first_step_and_stays_fixed() {
        let aut: Arc<Automaton<Boolean>> = automaton("p", &["a", "b", "c"]);
        let trace = g1_steps(&[["p", "q", "q"], ["q", "q", "q"], ["q", "q", "q"]], None);
        let mut m = Monitor::start(aut, 0).unwrap();
        m.step(trace.model(0)).unwrap();
        assert!(m.is_conclusive());
        assert!(m.current_value());
        // The verdict is frozen; stepping only advances the counter.
        m.step(trace.model(1)).unwrap();
        m.step(trace.model(2)).unwrap();
        assert!(m.current_value());
        assert_eq!(m.steps(), 3);
    }

    #[test]
    fn globally_stays_supported_on_its_own_state() {
        let aut: Arc<Automaton<Boolean>> = automaton("G q", &["a", "b", "c"]);
        let trace = g1_steps(&[["q", "p", "p"], ["q", "p", "p"]], None);
        let root_state = aut.state_id(aut.closure().root(), 0);
        let mut m = Monitor::start(aut.clone(), 0).unwrap();
        for t in 0..2 {
            m.step(trace.model(t)).unwrap();
            let support = m.theta().support();
            assert_eq!(support.len(), 1);
            assert_eq!(support.iter().next().unwrap().state, root_state);
        }
        assert!(m.current_value());
    }

    #[test]
    fn run_offline_frozen_examples() {
        let trace = g1_steps(&[["q", "q", "p"]], None);
        let aut: Arc<Automaton<Boolean>> = automaton("somewhere[hops][0,2] p", &["a", "b", "c"]);
        assert!(run_offline(&aut, &trace, 0).unwrap());

        let battery = g1_steps(&[["q", "q", "q"]], Some([5.0, 3.0, 7.0]));
        let aut: Arc<Automaton<MinMax>> =
            automaton("somewhere[hops][0,1] battery >= 4", &["a", "b", "c"]);
        assert_eq!(run_offline(&aut, &battery, 0).unwrap(), 1.0);
    }

    #[test]
    fn run_offline_rejects_empty_traces() {
        let aut: Arc<Automaton<Boolean>> = automaton("p", &["a", "b", "c"]);
        let empty = build_trace(&["a", "b", "c"], true, vec![]);
        assert!(matches!(run_offline(&aut, &empty, 0), Err(MonitorError::EmptyTrace)));
    }

    #[test]
    fn mismatched_snapshot_universe_is_rejected() {
        let aut: Arc<Automaton<Boolean>> = automaton("p", &["a", "b"]);
        let trace = g1_steps(&[["p", "p", "p"]], None);
        let mut m = Monitor::start(aut, 0).unwrap();
        assert!(matches!(
            m.step(trace.model(0)),
            Err(AutomatonError::UniverseMismatch),
        ));
    }

    fn gen_formula(rng: &mut StdRng, depth: u32) -> Formula {
        use crate::algebra::{DistInterval, DistValue, ExtNat};
        if depth == 0 || rng.gen_bool(0.3) {
            return match rng.gen_range(0..3) {
                0 => Formula::kind("red"),
                1 => Formula::kind("blue"),
                _ => Formula::cmp("battery", crate::logic::CmpOp::Gt, 0.0),
            };
        }
        match rng.gen_range(0..7) {
            0 => Formula::not(gen_formula(rng, depth - 1)),
            1 => Formula::and(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
            2 => Formula::or(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
            3 => Formula::next(gen_formula(rng, depth - 1)),
            4 | 5 => {
                Formula::until(gen_formula(rng, depth - 1), None, gen_formula(rng, depth - 1))
            }
            _ => {
                let lo = rng.gen_range(0..2u64);
                let hi = lo + rng.gen_range(0..2u64);
                let i = DistInterval::new(
                    DistValue::Count(ExtNat::Fin(lo)),
                    DistValue::Count(ExtNat::Fin(hi)),
                )
                .unwrap();
                Formula::reach(gen_formula(rng, depth - 1), "hops", i, gen_formula(rng, depth - 1))
            }
        }
    }

    fn gen_trace(rng: &mut StdRng, len: usize) -> Trace {
        let names = ["a", "b", "c"];
        let steps = (0..len)
            .map(|t| {
                let nodes = names
                    .iter()
                    .map(|id| {
                        node(
                            id,
                            if rng.gen_bool(0.5) { "red" } else { "blue" },
                            &[("battery", rng.gen_range(-2..=2) as f64 / 2.0)],
                        )
                    })
                    .collect();
                let mut edges = Vec::new();
                for i in 0..names.len() {
                    for j in 0..names.len() {
                        if i != j && rng.gen_bool(0.4) {
                            edges.push(edge(names[i], 1.0, names[j]));
                        }
                    }
                }
                StepRecord { t: t as u64, nodes, edges }
            })
            .collect();
        build_trace(&names, false, steps)
    }

    #[test]
    fn online_final_value_equals_offline_and_oracle() {
        let mut rng = StdRng::seed_from_u64(101);
        for _ in 0..150 {
            let f = gen_formula(&mut rng, 3);
            let spec = eliminate_intervals(&f);
            let len = rng.gen_range(1..=4);
            let trace = gen_trace(&mut rng, len);
            let ego = rng.gen_range(0..3);

            let aut: Arc<Automaton<Boolean>> = Arc::new(
                Automaton::build(&spec, trace.universe().clone(), DistanceRegistry::builtin())
                    .unwrap(),
            );
            let mut m = Monitor::start(aut.clone(), ego).unwrap();
            let mut online = m.current_value();
            for model in trace.models() {
                m.step(model).unwrap();
                online = m.current_value();
            }
            let offline = run_offline(&aut, &trace, ego).unwrap();
            assert_eq!(online, offline, "{f} at {ego}");

            let oracle =
                eval_semantics::<Boolean>(&trace, &f, ego, 0, &DistanceRegistry::builtin())
                    .unwrap();
            assert_eq!(offline, oracle, "{f} at {ego}");

            let raut: Arc<Automaton<MinMax>> = Arc::new(
                Automaton::build(&spec, trace.universe().clone(), DistanceRegistry::builtin())
                    .unwrap(),
            );
            let r = run_offline(&raut, &trace, ego).unwrap();
            let roracle =
                eval_semantics::<MinMax>(&trace, &f, ego, 0, &DistanceRegistry::builtin())
                    .unwrap();
            assert_eq!(r, roracle, "{f} at {ego}");
        }
    }

    #[test]
    fn support_stays_on_temporal_states() {
        let mut rng = StdRng::seed_from_u64(103);
        for _ in 0..60 {
            let spec = eliminate_intervals(&gen_formula(&mut rng, 3));
            let trace = gen_trace(&mut rng, 3);
            let aut: Arc<Automaton<Boolean>> = Arc::new(
                Automaton::build(&spec, trace.universe().clone(), DistanceRegistry::builtin())
                    .unwrap(),
            );
            // Items Δ can mention: Until forms, Next children, and their
            // negations; everything else resolves within one step.
            let closure = aut.closure();
            let mut allowed = BTreeSet::new();
            for i in 0..closure.len() {
                match closure.get(i).node() {
                    Node::Until { .. } => {
                        allowed.insert(i);
                        allowed.insert(closure.neg(i));
                    }
                    Node::Next(x) => {
                        let xi = closure.index_of(x).unwrap();
                        allowed.insert(xi);
                        allowed.insert(closure.neg(xi));
                    }
                    _ => {}
                }
            }
            let mut m = Monitor::start(aut.clone(), 0).unwrap();
            for model in trace.models() {
                m.step(model).unwrap();
                for v in m.theta().support() {
                    assert!(
                        allowed.contains(&aut.state_item(v.state)),
                        "{spec}: {} leaked into θ",
                        aut.state_name(v.state),
                    );
                }
            }
        }
    }

    #[test]
    fn snapshot_restore_resumes_the_run() {
        let trace = g1_steps(
            &[["p", "q", "q"], ["p", "q", "q"], ["q", "q", "p"]],
            Some([1.0, 2.0, 3.0]),
        );
        for text in ["p U q", "G p", "X (p U q)", "not (p U (q reach[hops][0,1] p))"] {
            let aut: Arc<Automaton<Boolean>> = automaton(text, &["a", "b", "c"]);
            let mut m = Monitor::start(aut.clone(), 0).unwrap();
            m.step(trace.model(0)).unwrap();
            m.step(trace.model(1)).unwrap();
            let saved = m.snapshot();

            let mut resumed = Monitor::start(aut.clone(), 0).unwrap();
            resumed.restore(&saved).unwrap();
            assert_eq!(resumed.theta(), m.theta());

            m.step(trace.model(2)).unwrap();
            resumed.step(trace.model(2)).unwrap();
            assert_eq!(m.current_value(), resumed.current_value(), "{text}");
            assert_eq!(m.snapshot(), resumed.snapshot(), "{text}");
        }
    }

    #[test]
    fn restore_rejects_garbage_and_foreign_states() {
        let aut: Arc<Automaton<Boolean>> = automaton("p U q", &["a", "b", "c"]);
        let mut m = Monitor::start(aut, 0).unwrap();
        assert!(matches!(m.restore("not a polynomial"), Err(MonitorError::Snapshot(_))));
        assert!(matches!(m.restore("⊤*q999"), Err(MonitorError::ForeignState(999))));
    }

    #[test]
    fn any_monitor_selects_the_algebra_at_runtime() {
        let f = eliminate_intervals(&parse("battery >= 4").unwrap());
        let trace = g1_steps(&[["q", "q", "q"]], Some([5.0, 3.0, 7.0]));
        let registry = DistanceRegistry::builtin();

        let b = AnyAutomaton::build(
            Semantics::Bool,
            &f,
            trace.universe().clone(),
            registry.clone(),
        )
        .unwrap();
        assert_eq!(b.semantics(), Semantics::Bool);
        let mut mb = b.monitor(0).unwrap();
        mb.step(trace.model(0)).unwrap();
        assert_eq!(mb.current_value(), AlgebraValue::Bool(true));
        assert!(mb.is_conclusive());

        let r = AnyAutomaton::build(
            Semantics::Robust,
            &f,
            trace.universe().clone(),
            registry,
        )
        .unwrap();
        let mut mr = r.monitor(1).unwrap();
        mr.step(trace.model(0)).unwrap();
        assert_eq!(mr.current_value(), AlgebraValue::Real(-1.0));
        assert!(!mr.current_value().is_success());
        assert_eq!(b.state_count(), r.state_count());
        assert_eq!(b.state_bound(), r.state_bound());
    }
}
