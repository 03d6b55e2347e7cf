//! The `minbrain` command line.
//!
//! Exit status is 0 on success, 1 when the operation fails on valid input
//! (the reason is written as JSON where the result would have gone) and 2
//! for unreadable or malformed input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use minbrain_core::coupled::{
    backward_reachable_set, is_feasible_policy, is_robustly_feasible, minimal_dits_for_policy, rollout,
    DisturbanceSource, Failure as TaskFailure, PolicyEncoding, TraceQuantifier, Verdict,
};
use minbrain_core::dbi::build_update_graph;
use minbrain_core::history::{apply_imap, derive_its, restrict, strong_restrict, tree_msr, unroll, NO_ACTION};
use minbrain_core::prob::Scalar;
use minbrain_core::psr::{discover_core_tests, psr_update, LinearPSR};
use minbrain_core::refine::minimal_sufficient_refinement;
use minbrain_core::scenarios::{red_green_filter_task, red_green_policy_machine};
use minbrain_core::ts::{is_sufficient, quotient_labeled, quotient_srts};
use minbrain_core::{Labeling, StateRelabeledTS};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dot::to_dot;
use crate::format::{
    moore_from_json, parse_pairs, rational_string, CoupledJson, ExternalJson, FormatError, PartitionJson,
    ProbModelJson, PsrJson, SystemJson, TaskJson,
};

/// Default cap on unrolled history-tree nodes and enumerated trajectories.
pub const DEFAULT_SIZE_LIMIT: usize = 1_000_000;
pub const SIZE_LIMIT_VAR: &str = "MINBRAIN_SIZE_LIMIT";

#[derive(Parser, Debug)]
#[command(name = "minbrain", version, about = "Sufficient labelings and minimal information transition systems")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Where to write the result; standard output if absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Render {
    #[command(flatten)]
    pub out: Output,
    /// Also write the resulting system as Graphviz DOT.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Traces {
    All,
    Some,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Example {
    RedGreenFilter,
    RedGreenPlan,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Check that a labeled system's state labeling is sufficient.
    CheckSufficient {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Minimal sufficient refinement of the state labeling, as a partition.
    /// `--dot` renders the quotient by it.
    Minimize {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Render,
    },
    /// Quotient by the state labeling, or by a partition file.
    Quotient {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        partition: Option<PathBuf>,
        #[command(flatten)]
        out: Render,
    },
    /// Minimal derived ITS of a task machine, from its history tree
    /// unrolled to `--depth`. `--raw` skips the refinement and derives the
    /// ITS of the task labeling itself.
    Derive {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        raw: bool,
        #[command(flatten)]
        out: Render,
    },
    /// Restrict an ITS over `(u,y)` letters to the actions of its state
    /// labels. `--strong` also projects edge labels to observations.
    Restrict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        strong: bool,
        #[command(flatten)]
        out: Render,
    },
    /// One rollout of a coupled system, one JSON object per stage.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Initial external state; the first possible one if absent.
        #[arg(long)]
        start: Option<String>,
        /// Seed for disturbance sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// States from which some action sequence completes the task. The input
    /// is an external system or a coupled system.
    ReachSet {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        task: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Whether the coupled policy completes the task within the horizon.
    Feasible {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// For disturbed systems: require success on all traces or some.
        #[arg(long, value_enum, default_value = "all")]
        traces: Traces,
        #[command(flatten)]
        out: Output,
    },
    /// Update graph of a Moore machine, with bit-vector node names.
    DbiGraph {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Render,
    },
    /// Discover a linear PSR of a probabilistic model and run it along a
    /// history `u:y.u:y...`, one JSON object per step.
    PsrRun {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_test_len: usize,
        #[arg(long, default_value = "")]
        history: String,
        #[arg(long)]
        exact: bool,
        #[arg(long, conflicts_with = "exact")]
        float: bool,
        /// Also write the discovered PSR.
        #[arg(long)]
        psr: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Write one of the bundled examples.
    Example {
        #[arg(value_enum)]
        name: Example,
        /// Number of regions of the red-green annulus.
        #[arg(long, default_value_t = 6)]
        regions: usize,
        #[command(flatten)]
        out: Render,
    },
}

impl Verb {
    fn output(&self) -> Option<&Path> {
        let o = match self {
            Verb::CheckSufficient { out, .. }
            | Verb::Simulate { out, .. }
            | Verb::ReachSet { out, .. }
            | Verb::Feasible { out, .. }
            | Verb::PsrRun { out, .. } => out,
            Verb::Minimize { out, .. }
            | Verb::Quotient { out, .. }
            | Verb::Derive { out, .. }
            | Verb::Restrict { out, .. }
            | Verb::DbiGraph { out, .. }
            | Verb::Example { out, .. } => &out.out,
        };
        o.output.as_deref()
    }
}

#[derive(Debug)]
pub enum Failure {
    /// Exit 2.
    Input(String),
    /// Exit 1, with a JSON payload.
    Domain(Value),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn domain(kind: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Domain(json!({ "error": kind, "message": e.to_string() }))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Input(format!("stdout: {e}")))
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn emit<T: Serialize>(out: &Output, v: &T) -> Result<(), Failure> {
    emit_text(out.output.as_deref(), &pretty(v))
}

fn emit_system(out: &Render, srts: &StateRelabeledTS, name: &str) -> Result<(), Failure> {
    emit(&out.out, &SystemJson::from_srts(srts))?;
    if let Some(d) = &out.dot {
        write_file(d, &to_dot(srts, name))?;
    }
    Ok(())
}

/// `MINBRAIN_SIZE_LIMIT`, or the default.
pub fn size_limit() -> Result<usize, Failure> {
    match std::env::var(SIZE_LIMIT_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{SIZE_LIMIT_VAR} must be a nonnegative integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_SIZE_LIMIT),
    }
}

/// Parses `args` (program name first), runs the verb and returns the exit
/// status.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Domain(payload)) => {
            if let Some(msg) = payload.get("message").and_then(Value::as_str) {
                eprintln!("error: {msg}");
            }
            match emit_text(cli.verb.output(), &pretty(&payload)) {
                Ok(()) => 1,
                Err(_) => 2,
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.verb {
        Verb::CheckSufficient { input, out } => {
            let srts = read_json::<SystemJson>(input)?.to_srts()?;
            match is_sufficient(&srts) {
                Ok(()) => emit(out, &json!({ "sufficient": true })),
                Err(w) => {
                    let [s, t, label, s_next, t_next] = w.names(&srts.system);
                    Err(Failure::Domain(json!({
                        "sufficient": false,
                        "witness": { "s": s, "t": t, "label": label, "s_next": s_next, "t_next": t_next },
                    })))
                }
            }
        }
        Verb::Minimize { input, out } => {
            let srts = read_json::<SystemJson>(input)?.to_srts()?;
            let r = minimal_sufficient_refinement(&srts).map_err(|e| domain("nondeterministic", e))?;
            emit(&out.out, &PartitionJson::from_partition(&srts.system, &r.partition))?;
            if let Some(d) = &out.dot {
                let classes = StateRelabeledTS::new(srts.system.clone(), r.labeling).map_err(|e| domain("invalid", e))?;
                let q = quotient_labeled(&classes, &srts.labeling).map_err(|e| domain("invalid", e))?;
                write_file(d, &to_dot(&q, "minimized"))?;
            }
            Ok(())
        }
        Verb::Quotient { input, partition, out } => {
            let srts = read_json::<SystemJson>(input)?.to_srts()?;
            let q = match partition {
                Some(p) => {
                    let p = read_json::<PartitionJson>(p)?.to_partition(&srts.system)?;
                    quotient_srts(&srts.relabel_by(&p))
                }
                None => quotient_srts(&srts),
            };
            emit_system(out, &q, "quotient")
        }
        Verb::Derive { input, depth, raw, out } => {
            let task = read_json::<TaskJson>(input)?.to_task()?;
            if *depth == 0 {
                return Err(Failure::Input("--depth must be at least 1".into()));
            }
            let mut actions: Vec<&str> = task
                .alphabet_u()
                .iter()
                .map(String::as_str)
                .filter(|u| *u != NO_ACTION)
                .collect();
            if actions.is_empty() {
                actions.push(NO_ACTION);
            }
            let tree = unroll(&actions, task.alphabet_y(), &[NO_ACTION], *depth, size_limit()?)
                .map_err(|e| domain("size-limit", e))?;
            let srts = apply_imap(&tree, &task).map_err(|e| domain("task", e))?;
            let result = if *raw {
                let its = derive_its(&tree, &task).map_err(|e| domain("task", e))?;
                let labeling = Labeling::identity(&its);
                StateRelabeledTS::new(its, labeling).map_err(|e| domain("invalid", e))?
            } else {
                let r = tree_msr(&srts, *depth).map_err(|e| domain("refinement", e))?;
                let outer =
                    Labeling::from_values(r.core.iter().map(|&s| srts.labeling.get(s).to_string()).collect());
                quotient_labeled(&r.labeled, &outer).map_err(|e| domain("invalid", e))?
            };
            emit_system(out, &result, "derived")
        }
        Verb::Restrict { input, strong, out } => {
            let srts = read_json::<SystemJson>(input)?.to_srts()?;
            let ts = if *strong {
                strong_restrict(&srts.system, &srts.labeling)
            } else {
                restrict(&srts.system, &srts.labeling)
            }
            .map_err(|e| domain("restrict", e))?;
            let r = StateRelabeledTS::new(ts, srts.labeling.clone()).map_err(|e| domain("invalid", e))?;
            emit_system(out, &r, "restricted")
        }
        Verb::Simulate { input, horizon, start, seed, out } => {
            let cs = read_json::<CoupledJson>(input)?.to_coupled()?;
            let ext = &cs.external;
            let x = match start {
                Some(n) => ext
                    .state_index(n)
                    .ok_or_else(|| Failure::Input(format!("unknown state `{n}`")))?,
                None => ext.initial()[0],
            };
            let source = if ext.is_disturbed() {
                DisturbanceSource::Seeded(*seed)
            } else {
                DisturbanceSource::None
            };
            let r = rollout(&cs, x, *horizon, &source).map_err(|e| domain("rollout", e))?;
            let xs = ext.states();
            let mut lines = String::new();
            for k in 0..r.y.len() {
                let mut step = json!({
                    "k": k,
                    "x": xs[r.x[k]],
                    "y": ext.observations()[r.y[k]],
                    "iota": cs.internal.state_name(r.iota[k]),
                    "u": ext.actions()[r.u[k]],
                    "next": xs[r.x[k + 1]],
                });
                if let (Some(d), Some(&(t, p))) = (ext.disturbance(), r.disturbances.get(k)) {
                    step["theta"] = json!(d.thetas[t]);
                    step["psi"] = json!(d.psis[p]);
                }
                lines.push_str(&step.to_string());
                lines.push('\n');
            }
            emit_text(out.output.as_deref(), &lines)
        }
        Verb::ReachSet { input, task, out } => {
            let ext = read_external(input)?;
            let task = read_json::<TaskJson>(task)?.to_task()?;
            let set = backward_reachable_set(&ext, &task).map_err(|e| domain("reach-set", e))?;
            let names: Vec<&str> = set.iter().map(|&x| ext.states()[x].as_str()).collect();
            emit(out, &json!({ "states": names }))
        }
        Verb::Feasible { input, task, horizon, traces, out } => {
            let cs = read_json::<CoupledJson>(input)?.to_coupled()?;
            let task = read_json::<TaskJson>(task)?.to_task()?;
            let verdict = if cs.external.is_disturbed() {
                let q = match traces {
                    Traces::All => TraceQuantifier::AllTraces,
                    Traces::Some => TraceQuantifier::SomeTrace,
                };
                is_robustly_feasible(&cs, &task, *horizon, q, size_limit()?)
            } else {
                is_feasible_policy(&cs, &task, *horizon)
            }
            .map_err(|e| domain("feasibility", e))?;
            match verdict {
                Verdict::Feasible => emit(out, &json!({ "feasible": true })),
                Verdict::Infeasible { x, failure } => {
                    let mut v = json!({ "feasible": false, "state": cs.external.states()[x] });
                    match failure {
                        TaskFailure::DefiniteFailure { stage } => {
                            v["failure"] = json!("definite-failure");
                            v["stage"] = json!(stage);
                        }
                        TaskFailure::HorizonExhausted => v["failure"] = json!("horizon-exhausted"),
                    }
                    Err(Failure::Domain(v))
                }
            }
        }
        Verb::DbiGraph { input, out } => {
            let m = moore_from_json(&read_json(input)?)?;
            let g = build_update_graph(&m).map_err(|e| domain("update-graph", e))?;
            emit_system(out, &g.to_srts(), "update_graph")
        }
        Verb::PsrRun {
            input,
            max_test_len,
            history,
            float,
            psr,
            out,
            ..
        } => {
            let pm = read_json::<ProbModelJson>(input)?.to_model()?;
            let pairs = parse_pairs(history, &pm.actions, &pm.observations)?;
            let model = discover_core_tests(&pm, *max_test_len).map_err(|e| domain("psr", e))?;
            if let Some(p) = psr {
                write_file(p, &pretty(&PsrJson::from_psr(&model)))?;
            }
            let lines = if *float {
                psr_trace(&model.to_f64(), &pairs, |v| json!(v))?
            } else {
                psr_trace(&model, &pairs, |v| json!(rational_string(v)))?
            };
            emit_text(out.output.as_deref(), &lines)
        }
        Verb::Example { name, regions, out } => match name {
            Example::RedGreenFilter => {
                let srts = red_green_filter_task().reachable_srts();
                let r = minimal_sufficient_refinement(&srts).map_err(|e| domain("refinement", e))?;
                let classes = StateRelabeledTS::new(srts.system.clone(), r.labeling).map_err(|e| domain("invalid", e))?;
                let q = quotient_labeled(&classes, &srts.labeling).map_err(|e| domain("invalid", e))?;
                emit_system(out, &q, "red_green_filter")
            }
            Example::RedGreenPlan => {
                let policy = red_green_policy_machine(*regions);
                let m = minimal_dits_for_policy(PolicyEncoding::Regular(&policy)).map_err(|e| domain("policy", e))?;
                emit_system(out, &m.executor, "red_green_plan")
            }
        },
    }
}

/// An external system file, or the external part of a coupled system file.
fn read_external(path: &Path) -> Result<minbrain_core::ExternalSystem, Failure> {
    let v: Value = read_json(path)?;
    let ext = v.get("external").cloned().unwrap_or(v);
    let j: ExternalJson =
        serde_json::from_value(ext).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(j.to_external()?)
}

fn psr_trace<T: Scalar>(
    psr: &LinearPSR<T>,
    pairs: &[(usize, usize)],
    num: impl Fn(&T) -> Value,
) -> Result<String, Failure> {
    let vec = |p: &[T]| Value::Array(p.iter().map(&num).collect());
    let tests: Vec<String> = psr
        .core_tests
        .iter()
        .map(|t| {
            t.pairs
                .iter()
                .map(|&(u, y)| format!("{}:{}", psr.actions[u], psr.observations[y]))
                .collect::<Vec<_>>()
                .join(".")
        })
        .collect();
    let mut p = psr.m0.clone();
    let mut out = json!({ "k": 0, "core_tests": tests, "prediction": vec(&p) }).to_string();
    out.push('\n');
    for (k, &(u, y)) in pairs.iter().enumerate() {
        let prob = psr.predict(&p, u, y);
        p = psr_update(psr, &p, u, y).map_err(|e| domain("psr", e))?;
        let line = json!({
            "k": k + 1,
            "u": psr.actions[u],
            "y": psr.observations[y],
            "probability": num(&prob),
            "prediction": vec(&p),
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    Ok(out)
}
