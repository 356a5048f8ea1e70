//! Randomized end-to-end cross-validation: the full pipeline (desugar,
//! interval elimination, automaton, offline run) against the direct
//! semantics, in both algebras, over generated formulas and traces.
//!
//! The generator is deterministic in the seed (ChaCha8), so a reported
//! counterexample can be reproduced by rerunning with the same
//! configuration.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{
    Boolean, DistInterval, DistValue, DistanceRegistry, ExtNat, MinMax,
};
use crate::automaton::{Automaton, AutomatonError};
use crate::logic::{eliminate_intervals, CmpOp, Formula, TimeInterval};
use crate::monitor::{run_offline, MonitorError};
use crate::oracle::{eval_semantics, OracleError};
use crate::spatial::LocationId;
use crate::trace::{EdgeRecord, NodeRecord, StepRecord, Trace, TraceHeader};

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub instances: u64,
    pub seed: u64,
    pub max_locations: usize,
    pub max_depth: u32,
    pub max_len: usize,
}

impl CheckConfig {
    pub fn new(instances: u64, seed: u64) -> CheckConfig {
        CheckConfig { instances, seed, max_locations: 4, max_depth: 3, max_len: 5 }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Both pipelines' answers for one (formula, trace, ego) instance.
#[derive(Copy, Clone, Debug)]
pub struct InstanceOutcome {
    pub bool_automaton: bool,
    pub bool_oracle: bool,
    pub robust_automaton: f64,
    pub robust_oracle: f64,
}

impl InstanceOutcome {
    /// Exact agreement in both algebras. Robustness values are compared
    /// as extended reals without tolerance: every operation selects an
    /// input, so equal computations produce bitwise-equal results.
    pub fn agrees(&self) -> bool {
        self.bool_automaton == self.bool_oracle && self.robust_automaton == self.robust_oracle
    }

    /// Nonzero robustness must agree in sign with the Boolean verdict.
    pub fn sign_coherent(&self) -> bool {
        self.robust_oracle == 0.0 || (self.robust_oracle > 0.0) == self.bool_oracle
    }
}

#[derive(Debug)]
pub struct Counterexample {
    /// Zero-based instance index within the run.
    pub index: u64,
    /// The formula, printable and re-parseable.
    pub formula: String,
    /// The trace in the JSONL exchange format.
    pub trace: String,
    pub ego: String,
    pub outcome: InstanceOutcome,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "counterexample at instance {}:", self.index)?;
        writeln!(f, "  formula: {}", self.formula)?;
        writeln!(f, "  ego: {}", self.ego)?;
        writeln!(
            f,
            "  boolean: automaton={} oracle={}",
            self.outcome.bool_automaton, self.outcome.bool_oracle,
        )?;
        writeln!(
            f,
            "  robustness: automaton={} oracle={}",
            self.outcome.robust_automaton, self.outcome.robust_oracle,
        )?;
        write!(f, "  trace:\n{}", self.trace)
    }
}

#[derive(Debug)]
pub struct CheckReport {
    pub total: u64,
    pub passed: u64,
    /// Instances whose min-max robustness was nonzero, and how many of
    /// those disagreed in sign with the Boolean verdict.
    pub nonzero_robust: u64,
    pub sign_violations: u64,
    pub counterexample: Option<Counterexample>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.passed == self.total && self.counterexample.is_none()
    }
}

/// Runs one instance through both pipelines in both algebras.
pub fn check_instance(
    f: &Formula,
    trace: &Trace,
    ego: LocationId,
    registry: &DistanceRegistry,
) -> Result<InstanceOutcome, CheckError> {
    let spec = eliminate_intervals(f);

    let ba: Arc<Automaton<Boolean>> =
        Arc::new(Automaton::build(&spec, trace.universe().clone(), registry.clone())?);
    let bool_automaton = run_offline(&ba, trace, ego)?;
    let bool_oracle = eval_semantics::<Boolean>(trace, f, ego, 0, registry)?;

    let ra: Arc<Automaton<MinMax>> =
        Arc::new(Automaton::build(&spec, trace.universe().clone(), registry.clone())?);
    let robust_automaton = run_offline(&ra, trace, ego)?;
    let robust_oracle = eval_semantics::<MinMax>(trace, f, ego, 0, registry)?;

    Ok(InstanceOutcome { bool_automaton, bool_oracle, robust_automaton, robust_oracle })
}

/// Generates and checks `cfg.instances` random instances. Stops the
/// counterexample search at the first disagreement but keeps counting,
/// so the report always reflects the whole run.
pub fn run_check(cfg: &CheckConfig) -> Result<CheckReport, CheckError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let registry = DistanceRegistry::builtin();
    let mut report = CheckReport {
        total: cfg.instances,
        passed: 0,
        nonzero_robust: 0,
        sign_violations: 0,
        counterexample: None,
    };
    for index in 0..cfg.instances {
        let (f, trace, ego) = gen_instance(&mut rng, cfg);
        let outcome = check_instance(&f, &trace, ego, &registry)?;
        if outcome.robust_oracle != 0.0 {
            report.nonzero_robust += 1;
            if !outcome.sign_coherent() {
                report.sign_violations += 1;
            }
        }
        if outcome.agrees() {
            report.passed += 1;
        } else if report.counterexample.is_none() {
            report.counterexample = Some(Counterexample {
                index,
                formula: f.to_string(),
                trace: trace.to_jsonl_string(),
                ego: trace.universe().name(ego).to_string(),
                outcome,
            });
        }
    }
    Ok(report)
}

/// One random (formula, trace, ego) triple under the config's limits.
pub fn gen_instance(rng: &mut impl Rng, cfg: &CheckConfig) -> (Formula, Trace, LocationId) {
    let f = gen_formula(rng, cfg.max_depth);
    let trace = gen_trace(rng, cfg.max_locations, cfg.max_len);
    let ego = rng.gen_range(0..trace.universe().len()) as LocationId;
    (f, trace, ego)
}

const KINDS: [&str; 2] = ["red", "blue"];
const THRESHOLDS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const WEIGHTS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

fn gen_atom(rng: &mut impl Rng) -> Formula {
    match rng.gen_range(0..4) {
        0 => Formula::kind(KINDS[0]),
        1 => Formula::kind(KINDS[1]),
        _ => {
            let op = match rng.gen_range(0..4) {
                0 => CmpOp::Ge,
                1 => CmpOp::Gt,
                2 => CmpOp::Le,
                _ => CmpOp::Lt,
            };
            Formula::cmp("battery", op, THRESHOLDS[rng.gen_range(0..THRESHOLDS.len())])
        }
    }
}

/// Optional time interval with widths ≤ 3; `None` is the untimed form.
fn gen_time_interval(rng: &mut impl Rng) -> Option<TimeInterval> {
    match rng.gen_range(0..10) {
        0..=2 => None,
        3 | 4 => Some(TimeInterval::unbounded(rng.gen_range(0..=2))),
        _ => {
            let lo = rng.gen_range(0..=2u64);
            let hi = lo + rng.gen_range(0..=3u64);
            Some(TimeInterval::bounded(lo, hi).expect("lo <= hi"))
        }
    }
}

/// Distance bounds in either domain; upper end occasionally infinite.
fn gen_distance(rng: &mut impl Rng) -> (&'static str, DistInterval) {
    if rng.gen_bool(0.6) {
        let lo = rng.gen_range(0..=1u64);
        let hi = if rng.gen_bool(0.2) {
            DistValue::Count(ExtNat::Inf)
        } else {
            DistValue::Count(ExtNat::Fin(lo + rng.gen_range(0..=2u64)))
        };
        ("hops", DistInterval::new(DistValue::Count(ExtNat::Fin(lo)), hi).expect("lo <= hi"))
    } else {
        let lo = rng.gen_range(0..=2u32) as f64 * 0.5;
        let hi = if rng.gen_bool(0.2) {
            DistValue::Trop(f64::INFINITY)
        } else {
            DistValue::Trop(lo + rng.gen_range(0..=4u32) as f64 * 0.75)
        };
        ("weight", DistInterval::new(DistValue::Trop(lo), hi).expect("lo <= hi"))
    }
}

/// Random formula over the full surface syntax: atoms, Boolean and
/// temporal operators (timed and untimed), Reach, Escape, and the
/// derived spatial modalities.
pub fn gen_formula(rng: &mut impl Rng, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return gen_atom(rng);
    }
    match rng.gen_range(0..11) {
        0 => Formula::not(gen_formula(rng, depth - 1)),
        1 => Formula::and(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        2 => Formula::or(gen_formula(rng, depth - 1), gen_formula(rng, depth - 1)),
        3 => Formula::next(gen_formula(rng, depth - 1)),
        4 => Formula::until(
            gen_formula(rng, depth - 1),
            gen_time_interval(rng),
            gen_formula(rng, depth - 1),
        ),
        5 => Formula::eventually(gen_time_interval(rng), gen_formula(rng, depth - 1)),
        6 => Formula::globally(gen_time_interval(rng), gen_formula(rng, depth - 1)),
        7 | 8 => {
            let (func, interval) = gen_distance(rng);
            Formula::reach(
                gen_formula(rng, depth - 1),
                func,
                interval,
                gen_formula(rng, depth - 1),
            )
        }
        9 => {
            let (func, interval) = gen_distance(rng);
            Formula::escape(func, interval, gen_formula(rng, depth - 1))
        }
        _ => {
            let (func, interval) = gen_distance(rng);
            if rng.gen_bool(0.5) {
                Formula::somewhere(func, interval, gen_formula(rng, depth - 1))
            } else {
                Formula::everywhere(func, interval, gen_formula(rng, depth - 1))
            }
        }
    }
}

/// Random trace: 1..=max_locations locations, 1..=max_len steps, random
/// kinds, half-step battery levels in [-2, 2], random weighted edges,
/// directed or undirected.
pub fn gen_trace(rng: &mut impl Rng, max_locations: usize, max_len: usize) -> Trace {
    const NAMES: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let n = rng.gen_range(1..=max_locations.min(NAMES.len()));
    let len = rng.gen_range(1..=max_len);
    let undirected = rng.gen_bool(0.5);

    let header = TraceHeader {
        universe: NAMES[..n].iter().map(|s| s.to_string()).collect(),
        period_ms: 10,
        undirected,
        attributes: Some(vec!["battery".to_string()]),
    };
    let mut text = serde_json::to_string(&header).expect("header serializes");
    text.push('\n');
    for t in 0..len {
        let nodes = (0..n)
            .map(|i| NodeRecord {
                id: NAMES[i].to_string(),
                kind: KINDS[rng.gen_range(0..KINDS.len())].to_string(),
                attrs: [("battery".to_string(), rng.gen_range(-4..=4i32) as f64 / 2.0)]
                    .into_iter()
                    .collect(),
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || (undirected && j < i) {
                    continue;
                }
                if rng.gen_bool(0.4) {
                    edges.push(EdgeRecord {
                        src: NAMES[i].to_string(),
                        w: WEIGHTS[rng.gen_range(0..WEIGHTS.len())],
                        dst: NAMES[j].to_string(),
                    });
                }
            }
        }
        let record = StepRecord { t: t as u64, nodes, edges };
        text.push_str(&serde_json::to_string(&record).expect("record serializes"));
        text.push('\n');
    }
    Trace::parse_str(&text).expect("generated trace is well formed")
}
