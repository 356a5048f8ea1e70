use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use strel::algebra::{Boolean, DistanceRegistry};
use strel::automaton::Automaton;
use strel::check::{check_instance, run_check, CheckConfig, Counterexample};
use strel::logic::{eliminate_intervals, parse, Formula};
use strel::monitor::{AnyAutomaton, AnyMonitor, Semantics};
use strel::scenario::{generate, ScenarioConfig};
use strel::spatial::{LocationId, SpatialModel, Universe};
use strel::trace::{Trace, TraceReader};

type Error = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "strel", version, about = "Monitors spatio-temporal reach/escape specifications over graph traces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a specification over a trace and print verdicts
    Monitor(MonitorArgs),
    /// Cross-validate the automaton against the direct semantics
    Check(CheckArgs),
    /// Generate a synthetic swarm scenario trace
    Gen(GenArgs),
    /// Show the state space of a compiled specification
    Info(InfoArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum SemanticsArg {
    /// Qualitative true/false verdicts
    Bool,
    /// Min-max robustness values
    Robust,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Semantics {
        match s {
            SemanticsArg::Bool => Semantics::Bool,
            SemanticsArg::Robust => Semantics::Robust,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    /// Load the whole trace, then run
    Offline,
    /// Consume the trace step by step as it arrives
    Online,
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Text,
    Jsonl,
}

#[derive(Args)]
struct MonitorArgs {
    /// Specification: a file path or an inline formula
    #[arg(long)]
    spec: String,
    /// Trace file in JSONL form, or `-` for stdin
    #[arg(long)]
    trace: String,
    /// Ego location name, or `all` for every location
    #[arg(long, default_value = "all")]
    ego: String,
    #[arg(long, value_enum, default_value_t = SemanticsArg::Bool)]
    semantics: SemanticsArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Offline)]
    mode: ModeArg,
    /// Print the running value after every step
    #[arg(long)]
    per_step: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Args)]
struct CheckArgs {
    /// Number of random formula/trace instances to draw
    #[arg(long, conflicts_with_all = ["spec", "trace", "ego"])]
    random: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    max_locations: usize,
    #[arg(long, default_value_t = 3)]
    max_depth: u32,
    #[arg(long, default_value_t = 5)]
    max_len: usize,
    /// Explicit instance: specification (file path or inline)
    #[arg(long)]
    spec: Option<String>,
    /// Explicit instance: trace file, or `-` for stdin
    #[arg(long)]
    trace: Option<String>,
    /// Explicit instance: ego location name
    #[arg(long)]
    ego: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// Scenario configuration, a JSON file
    #[arg(long)]
    config: String,
    /// Where to write the generated trace
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct InfoArgs {
    /// Specification: a file path or an inline formula
    #[arg(long)]
    spec: String,
    /// Location count, or a trace file to borrow the universe from
    #[arg(long)]
    locations: String,
    /// Also report the size after dropping unreachable states
    #[arg(long)]
    prune: bool,
    /// List the states, accepting ones marked [F]
    #[arg(long)]
    states: bool,
    /// Dump the formula-level successor graph as Graphviz dot
    #[arg(long)]
    dot: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    };
    match out.flush() {
        Ok(()) => code,
        Err(_) => ExitCode::from(2),
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Monitor(a) => cmd_monitor(a, out),
        Cmd::Check(a) => cmd_check(a, out),
        Cmd::Gen(a) => cmd_gen(a, out),
        Cmd::Info(a) => cmd_info(a, out),
    }
}

/// Reads a specification from a file when the argument names one,
/// otherwise parses it as an inline formula.
fn load_spec(arg: &str) -> Result<Formula, Error> {
    let path = Path::new(arg);
    let text = if path.is_file() { fs::read_to_string(path)? } else { arg.to_string() };
    parse(text.trim()).map_err(|e| format!("specification: {e}").into())
}

fn load_trace(arg: &str) -> Result<Trace, Error> {
    let trace = if arg == "-" {
        Trace::read_from(BufReader::new(io::stdin()))
    } else {
        Trace::load(arg)
    };
    trace.map_err(|e| format!("trace: {e}").into())
}

fn resolve_egos(arg: &str, universe: &Universe) -> Result<Vec<LocationId>, Error> {
    if arg == "all" {
        return Ok(universe.locations().collect());
    }
    match universe.index_of(arg) {
        Some(l) => Ok(vec![l]),
        None => Err(format!("unknown ego location `{arg}`").into()),
    }
}

/// A set of monitors advancing in lockstep over one trace, plus the
/// output conventions of the `monitor` subcommand.
struct Session<'a> {
    monitors: Vec<AnyMonitor>,
    names: Vec<String>,
    boolean: bool,
    per_step: bool,
    jsonl: bool,
    out: &'a mut dyn Write,
}

impl<'a> Session<'a> {
    fn new(
        aut: &AnyAutomaton,
        ego: &str,
        per_step: bool,
        format: FormatArg,
        out: &'a mut dyn Write,
    ) -> Result<Session<'a>, Error> {
        let egos = resolve_egos(ego, aut.universe())?;
        let names = egos.iter().map(|&l| aut.universe().name(l).to_string()).collect();
        let monitors = egos
            .iter()
            .map(|&l| aut.monitor(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Session {
            monitors,
            names,
            boolean: matches!(aut.semantics(), Semantics::Bool),
            per_step,
            jsonl: matches!(format, FormatArg::Jsonl),
            out,
        })
    }

    /// Feeds one snapshot to every monitor. Returns false once further
    /// input cannot change any verdict.
    fn feed(&mut self, t: u64, model: &SpatialModel) -> Result<bool, Error> {
        for m in &mut self.monitors {
            m.step(model)?;
        }
        if self.per_step {
            for (m, name) in self.monitors.iter().zip(&self.names) {
                let v = m.current_value();
                if self.jsonl {
                    let line = json!({
                        "type": "step",
                        "step": t,
                        "ego": name,
                        "value": v.to_string(),
                    });
                    writeln!(self.out, "{line}")?;
                } else {
                    writeln!(self.out, "STEP {t} EGO {name} VALUE {v}")?;
                }
            }
        }
        Ok(!(self.boolean && self.monitors.iter().all(|m| m.is_conclusive())))
    }

    /// Prints the final verdicts. Returns the exit code: success only
    /// when every ego's verdict is positive.
    fn finish(&mut self) -> Result<ExitCode, Error> {
        let mut all = true;
        for (m, name) in self.monitors.iter().zip(&self.names) {
            let v = m.current_value();
            all &= v.is_success();
            if self.jsonl {
                let line = json!({
                    "type": "verdict",
                    "ego": name,
                    "value": v.to_string(),
                });
                writeln!(self.out, "{line}")?;
            } else {
                writeln!(self.out, "EGO {name} VERDICT {v}")?;
            }
        }
        Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
    }
}

fn cmd_monitor(a: MonitorArgs, out: &mut dyn Write) -> Result<ExitCode, Error> {
    let formula = load_spec(&a.spec)?;
    let compiled = eliminate_intervals(&formula);
    let registry = DistanceRegistry::builtin();

    match a.mode {
        ModeArg::Offline => {
            let trace = load_trace(&a.trace)?;
            if trace.len() == 0 {
                return Err("trace has no steps".into());
            }
            let aut =
                AnyAutomaton::build(a.semantics.into(), &compiled, trace.universe().clone(), registry)?;
            let mut session = Session::new(&aut, &a.ego, a.per_step, a.format, out)?;
            for (t, model) in trace.models().iter().enumerate() {
                if !session.feed(t as u64, model)? {
                    break;
                }
            }
            session.finish()
        }
        ModeArg::Online => {
            let reader: Box<dyn BufRead> = if a.trace == "-" {
                Box::new(BufReader::new(io::stdin()))
            } else {
                Box::new(BufReader::new(fs::File::open(&a.trace)?))
            };
            let mut stream = TraceReader::new(reader)?;
            let aut =
                AnyAutomaton::build(a.semantics.into(), &compiled, stream.universe().clone(), registry)?;
            let mut session = Session::new(&aut, &a.ego, a.per_step, a.format, out)?;
            let mut t = 0u64;
            while let Some((_, model)) = stream.next_step()? {
                let more = session.feed(t, &model)?;
                t += 1;
                if !more {
                    break;
                }
            }
            if t == 0 {
                return Err("trace has no steps".into());
            }
            session.finish()
        }
    }
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> Result<ExitCode, Error> {
    if let Some(instances) = a.random {
        let cfg = CheckConfig {
            instances,
            seed: a.seed,
            max_locations: a.max_locations,
            max_depth: a.max_depth,
            max_len: a.max_len,
        };
        let report = run_check(&cfg)?;
        if let Some(cx) = &report.counterexample {
            writeln!(out, "{cx}")?;
            writeln!(out, "FAIL {}/{}", report.passed, report.total)?;
            return Ok(ExitCode::FAILURE);
        }
        if report.sign_violations > 0 {
            writeln!(out, "sign violations: {}", report.sign_violations)?;
            writeln!(out, "FAIL {}/{}", report.passed, report.total)?;
            return Ok(ExitCode::FAILURE);
        }
        writeln!(out, "OK {}/{}", report.passed, report.total)?;
        return Ok(ExitCode::SUCCESS);
    }

    let (Some(spec), Some(trace), Some(ego)) = (&a.spec, &a.trace, &a.ego) else {
        return Err("check needs either --random N or all of --spec, --trace and --ego".into());
    };
    let formula = load_spec(spec)?;
    let trace = load_trace(trace)?;
    let Some(ego_id) = trace.universe().index_of(ego) else {
        return Err(format!("unknown ego location `{ego}`").into());
    };
    let outcome = check_instance(&formula, &trace, ego_id, &DistanceRegistry::builtin())?;
    if outcome.agrees() {
        writeln!(out, "OK 1/1")?;
        Ok(ExitCode::SUCCESS)
    } else {
        let cx = Counterexample {
            index: 0,
            formula: formula.to_string(),
            trace: trace.to_jsonl_string(),
            ego: ego.clone(),
            outcome,
        };
        writeln!(out, "{cx}")?;
        writeln!(out, "FAIL 0/1")?;
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(&a.config).map_err(|e| format!("{}: {e}", a.config))?;
    let cfg: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| format!("scenario config: {e}"))?;
    let scenario = generate(&cfg)?;
    fs::write(&a.out, scenario.jsonl.as_bytes())?;
    writeln!(out, "nodes={} steps={} edges={}", scenario.locations, scenario.steps, scenario.edges_total)?;
    Ok(ExitCode::SUCCESS)
}

/// Universe for `info`: either `n` fresh locations named l0..l{n-1}, or
/// the universe of an existing trace file.
fn resolve_universe(arg: &str) -> Result<Arc<Universe>, Error> {
    if let Ok(n) = arg.parse::<usize>() {
        if n == 0 {
            return Err("--locations must be at least 1".into());
        }
        let names = (0..n).map(|i| format!("l{i}")).collect();
        return Universe::new(names).map_err(|e| format!("universe: {e}").into());
    }
    Ok(load_trace(arg)?.universe().clone())
}

fn cmd_info(a: InfoArgs, out: &mut dyn Write) -> Result<ExitCode, Error> {
    let formula = load_spec(&a.spec)?;
    let compiled = eliminate_intervals(&formula);
    let universe = resolve_universe(&a.locations)?;
    let aut: Automaton<Boolean> =
        Automaton::build(&compiled, universe, DistanceRegistry::builtin())?;

    writeln!(out, "spec: {formula}")?;
    writeln!(out, "locations: {}", aut.universe().len())?;
    writeln!(out, "|phi'|={}", aut.closure().len())?;
    writeln!(out, "|Q|={} bound={}", aut.state_count(), aut.state_bound())?;
    writeln!(out, "F={}", aut.f_states().len())?;

    let aut = if a.prune {
        let pruned = aut.prune_unreachable();
        writeln!(out, "pruned |Q|={}", pruned.state_count())?;
        pruned
    } else {
        aut
    };
    if a.states {
        let accepting: std::collections::HashSet<_> = aut.f_states().into_iter().collect();
        for q in aut.states() {
            let mark = if accepting.contains(&q) { "  [F]" } else { "" };
            writeln!(out, "  {}{mark}", aut.state_name(q))?;
        }
    }
    if a.dot {
        write!(out, "{}", aut.to_dot())?;
    }
    Ok(ExitCode::SUCCESS)
}
