//! Couplings of an external system with an internal DITS and a policy.
//!
//! One stage reads `y = h(x, ψ)`, updates `ι' = φ(ι, y)`, emits
//! `u = π(ι')` and moves `x' = f(x, u, θ)`. The internal system starts in
//! its initial state, which has no action of its own: nothing is emitted
//! before the first observation.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CoupledError;
use crate::external::{DisturbanceModel, ExternalSystem};
use crate::history::{project_observations, restrict, tree_msr, HistoryTree, IMap, NO_ACTION};
use crate::refine::minimal_sufficient_refinement;
use crate::task::{TaskMachine, SUCCESS};
use crate::ts::{is_deterministic, quotient_labeled, Labeling, StateRelabeledTS, TransitionSystem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledSystem {
    pub external: ExternalSystem,
    /// A DITS over the observation set with an initial state.
    pub internal: TransitionSystem,
    /// Action name per internal state.
    pub policy: Labeling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoupledState {
    pub iota: usize,
    pub x: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutput {
    pub next: CoupledState,
    pub u: usize,
    pub y: usize,
}

/// A trajectory of `k` stages: `y`, `u`, `iota` have `k` entries, `x` has
/// `k + 1` (the last is the state after the final action).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Rollout {
    pub iota0: usize,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub u: Vec<usize>,
    pub iota: Vec<usize>,
    /// `(θ, ψ)` per stage for disturbed systems.
    pub disturbances: Vec<(usize, usize)>,
}

/// Where the disturbances of a rollout come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DisturbanceSource {
    None,
    /// One `(θ, ψ)` per stage, by index.
    Fixed(Vec<(usize, usize)>),
    /// Sampled with ChaCha8 seeded from the value: exactly from the
    /// probabilities in probabilistic mode, uniformly over the admissible
    /// sets in nondeterministic mode.
    Seeded(u64),
}

impl CoupledSystem {
    pub fn new(external: ExternalSystem, internal: TransitionSystem, policy: Labeling) -> Result<Self, CoupledError> {
        if internal.initial().is_none() {
            return Err(CoupledError::Invalid("internal system has no initial state".into()));
        }
        if !is_deterministic(&internal) {
            internal.successor_table()?;
        }
        if policy.len() != internal.num_states() {
            return Err(crate::error::TsError::LabelingSize {
                expected: internal.num_states(),
                found: policy.len(),
            }
            .into());
        }
        Ok(CoupledSystem {
            external,
            internal,
            policy,
        })
    }

    pub fn initial_internal(&self) -> usize {
        self.internal.initial().unwrap()
    }

    pub fn start(&self, x: usize) -> CoupledState {
        CoupledState {
            iota: self.initial_internal(),
            x,
        }
    }

    /// Observation and internal update: `(y, ι', u)`.
    fn sense(&self, st: CoupledState, psi: Option<usize>) -> Result<(usize, usize, usize), CoupledError> {
        let ext = &self.external;
        let y = match (ext.disturbance(), psi) {
            (None, _) => ext.h(st.x).unwrap(),
            (Some(d), Some(p)) => {
                if p >= d.psis.len() || !d.admissible_psis(st.x).contains(&p) {
                    return Err(self.inadmissible(st.x, None, Some(p)));
                }
                d.h[st.x][p]
            }
            (Some(_), None) => return Err(CoupledError::MissingDisturbance),
        };
        let y_name = &ext.observations()[y];
        let next = self
            .internal
            .label_index(y_name)
            .and_then(|l| self.internal.successor(st.iota, l))
            .ok_or_else(|| CoupledError::UndefinedInternalTransition {
                state: self.internal.state_name(st.iota).to_string(),
                observation: y_name.clone(),
            })?;
        let action = self.policy.get(next);
        let u = ext
            .action_index(action)
            .ok_or_else(|| CoupledError::UndefinedAction {
                state: self.internal.state_name(next).to_string(),
                action: action.to_string(),
            })?;
        Ok((y, next, u))
    }

    fn act(&self, x: usize, u: usize, theta: Option<usize>) -> Result<usize, CoupledError> {
        let ext = &self.external;
        match (ext.disturbance(), theta) {
            (None, _) => Ok(ext.f(x, u).unwrap()),
            (Some(d), Some(t)) => {
                if t >= d.thetas.len() || !d.admissible_thetas(x, u).contains(&t) {
                    return Err(self.inadmissible(x, Some(t), None));
                }
                Ok(d.f[x][u][t])
            }
            (Some(_), None) => Err(CoupledError::MissingDisturbance),
        }
    }

    fn inadmissible(&self, x: usize, theta: Option<usize>, psi: Option<usize>) -> CoupledError {
        let d = self.external.disturbance();
        let name = |v: &[String], i: Option<usize>| {
            i.and_then(|i| v.get(i).cloned()).unwrap_or_else(|| "-".to_string())
        };
        CoupledError::InadmissibleDisturbance {
            state: self.external.states()[x].clone(),
            theta: name(d.map(|d| d.thetas.as_slice()).unwrap_or(&[]), theta),
            psi: name(d.map(|d| d.psis.as_slice()).unwrap_or(&[]), psi),
        }
    }
}

/// One stage of the coupled system.
pub fn step(
    cs: &CoupledSystem,
    state: CoupledState,
    disturbance: Option<(usize, usize)>,
) -> Result<StepOutput, CoupledError> {
    let (y, iota, u) = cs.sense(state, disturbance.map(|d| d.1))?;
    let x = cs.act(state.x, u, disturbance.map(|d| d.0))?;
    Ok(StepOutput {
        next: CoupledState { iota, x },
        u,
        y,
    })
}

/// Draws an index with probability `weights[i]`, exactly: a uniform integer
/// below the common denominator is compared with cumulative numerators.
fn sample_exact(rng: &mut ChaCha8Rng, weights: &[BigRational]) -> Result<usize, CoupledError> {
    let mut denom = BigInt::from(1);
    for w in weights {
        denom = denom.lcm(w.denom());
    }
    let d = denom
        .to_u64()
        .ok_or_else(|| CoupledError::Invalid("probability denominators too large to sample".into()))?;
    // Rejection sampling keeps the draw unbiased.
    let zone = u64::MAX - (u64::MAX % d);
    let r = loop {
        let v = rng.next_u64();
        if v < zone {
            break v % d;
        }
    };
    let mut acc = BigUint::zero();
    let r = BigUint::from(r);
    for (i, w) in weights.iter().enumerate() {
        let scaled = (w * BigRational::from_integer(denom.clone())).to_integer();
        acc += scaled.to_biguint().unwrap_or_default();
        if r < acc {
            return Ok(i);
        }
    }
    Err(CoupledError::NotNormalized("sampling row".into()))
}

fn sample_uniform(rng: &mut ChaCha8Rng, options: &[usize]) -> usize {
    let n = options.len() as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return options[(v % n) as usize];
        }
    }
}

/// The trajectory from `(ι_0, x)` over `horizon` stages.
pub fn rollout(
    cs: &CoupledSystem,
    x: usize,
    horizon: usize,
    source: &DisturbanceSource,
) -> Result<Rollout, CoupledError> {
    if horizon == 0 {
        return Err(CoupledError::ZeroHorizon);
    }
    let mut rng = match source {
        DisturbanceSource::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut st = cs.start(x);
    let mut out = Rollout {
        iota0: st.iota,
        x: alloc::vec![x],
        ..Rollout::default()
    };
    let dist = cs.external.disturbance();
    for k in 0..horizon {
        let psi = match (dist, source) {
            (None, _) => None,
            (Some(_), DisturbanceSource::Fixed(trace)) => {
                Some(trace.get(k).ok_or(CoupledError::MissingDisturbance)?.1)
            }
            (Some(d), DisturbanceSource::Seeded(_)) => Some(match &d.model {
                DisturbanceModel::Probabilistic { psi, .. } => sample_exact(rng.as_mut().unwrap(), &psi[st.x])?,
                DisturbanceModel::Nondeterministic { psi, .. } => sample_uniform(rng.as_mut().unwrap(), &psi[st.x]),
            }),
            (Some(_), DisturbanceSource::None) => return Err(CoupledError::MissingDisturbance),
        };
        let (y, iota, u) = cs.sense(st, psi)?;
        let theta = match (dist, source) {
            (None, _) => None,
            (Some(_), DisturbanceSource::Fixed(trace)) => Some(trace[k].0),
            (Some(d), _) => Some(match &d.model {
                DisturbanceModel::Probabilistic { theta, .. } => {
                    sample_exact(rng.as_mut().unwrap(), &theta[st.x][u])?
                }
                DisturbanceModel::Nondeterministic { theta, .. } => {
                    sample_uniform(rng.as_mut().unwrap(), &theta[st.x][u])
                }
            }),
        };
        let x_next = cs.act(st.x, u, theta)?;
        out.y.push(y);
        out.u.push(u);
        out.iota.push(iota);
        if let (Some(t), Some(p)) = (theta, psi) {
            out.disturbances.push((t, p));
        }
        out.x.push(x_next);
        st = CoupledState { iota, x: x_next };
    }
    Ok(out)
}

/// Every trajectory over `horizon` stages under all admissible (or
/// positive-probability) disturbances, in lexicographic order of the
/// disturbance trace.
pub fn rollout_all(
    cs: &CoupledSystem,
    x: usize,
    horizon: usize,
    limit: usize,
) -> Result<Vec<Rollout>, CoupledError> {
    if horizon == 0 {
        return Err(CoupledError::ZeroHorizon);
    }
    let Some(d) = cs.external.disturbance() else {
        return Ok(alloc::vec![rollout(cs, x, horizon, &DisturbanceSource::None)?]);
    };
    let mut done = Vec::new();
    let start = Rollout {
        iota0: cs.initial_internal(),
        x: alloc::vec![x],
        ..Rollout::default()
    };
    let mut stack = alloc::vec![(start, cs.start(x))];
    while let Some((r, st)) = stack.pop() {
        if r.y.len() == horizon {
            done.push(r);
            if done.len() > limit {
                return Err(CoupledError::SizeLimit { limit });
            }
            continue;
        }
        let mut children = Vec::new();
        for p in d.admissible_psis(st.x) {
            let (y, iota, u) = cs.sense(st, Some(p))?;
            for t in d.admissible_thetas(st.x, u) {
                let x_next = d.f[st.x][u][t];
                let mut c = r.clone();
                c.y.push(y);
                c.u.push(u);
                c.iota.push(iota);
                c.disturbances.push((t, p));
                c.x.push(x_next);
                children.push((c, CoupledState { iota, x: x_next }));
            }
        }
        if stack.len() + children.len() + done.len() > limit.saturating_mul(2).max(limit) {
            return Err(CoupledError::SizeLimit { limit });
        }
        // Reverse so that the smallest trace is popped first.
        stack.extend(children.into_iter().rev());
    }
    Ok(done)
}

/// States of `task` from which some letter sequence reaches a success
/// output.
fn can_succeed(task: &TaskMachine) -> Vec<bool> {
    let n = task.states().len();
    let mut preds = alloc::vec![Vec::new(); n];
    for (s, _, _, t) in task.transitions() {
        preds[t].push(s);
    }
    let mut ok = alloc::vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| task.output(s) == SUCCESS).collect();
    for &s in &queue {
        ok[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &p in &preds[s] {
            if !ok[p] {
                ok[p] = true;
                queue.push_back(p);
            }
        }
    }
    ok
}

fn machine_step(task: &TaskMachine, m: usize, ext: &ExternalSystem, u: Option<usize>, y: usize) -> Result<usize, CoupledError> {
    let u_name = u.map_or(NO_ACTION, |u| ext.actions()[u].as_str());
    let y_name = ext.observations()[y].as_str();
    task.step(m, u_name, y_name).ok_or_else(|| {
        CoupledError::Hist(crate::error::HistError::IncompleteMachine {
            state: task.states()[m].clone(),
            letter: crate::history::letter(u_name, y_name),
        })
    })
}

/// `R_X(I_task)`: initial states from which some action sequence yields a
/// history labeled [`SUCCESS`]. Forward search on `X × task states`.
pub fn backward_reachable_set(ext: &ExternalSystem, task: &TaskMachine) -> Result<Vec<usize>, CoupledError> {
    if ext.is_disturbed() {
        return Err(CoupledError::DisturbedCoupling);
    }
    let nm = task.states().len();
    let mut out = Vec::new();
    for x1 in 0..ext.num_states() {
        let m1 = machine_step(task, task.initial(), ext, None, ext.h(x1).unwrap())?;
        let mut seen = alloc::vec![false; ext.num_states() * nm];
        let mut queue = VecDeque::from([(x1, m1)]);
        seen[x1 * nm + m1] = true;
        let mut found = false;
        while let Some((x, m)) = queue.pop_front() {
            if task.output(m) == SUCCESS {
                found = true;
                break;
            }
            for u in 0..ext.actions().len() {
                let x2 = ext.f(x, u).unwrap();
                let m2 = machine_step(task, m, ext, Some(u), ext.h(x2).unwrap())?;
                if !seen[x2 * nm + m2] {
                    seen[x2 * nm + m2] = true;
                    queue.push_back((x2, m2));
                }
            }
        }
        if found {
            out.push(x1);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    /// The task machine entered a state from which success is impossible.
    DefiniteFailure { stage: usize },
    /// No success within the horizon, but it was still possible.
    HorizonExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    /// The least failing initial state.
    Infeasible { x: usize, failure: Failure },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        *self == Verdict::Feasible
    }
}

/// Runs the task machine along a trajectory: the stage (1-based) of the
/// first success, or why there is none.
fn judge(cs: &CoupledSystem, task: &TaskMachine, ok: &[bool], r: &Rollout) -> Result<Result<usize, Failure>, CoupledError> {
    let mut m = task.initial();
    for k in 0..r.y.len() {
        let u = if k == 0 { None } else { Some(r.u[k - 1]) };
        m = machine_step(task, m, &cs.external, u, r.y[k])?;
        if task.output(m) == SUCCESS {
            return Ok(Ok(k + 1));
        }
        if !ok[m] {
            return Ok(Err(Failure::DefiniteFailure { stage: k + 1 }));
        }
    }
    Ok(Err(Failure::HorizonExhausted))
}

/// Feasibility of the policy: from every state of the backward reachable
/// set, the rollout reaches a success label within `horizon` stages.
pub fn is_feasible_policy(cs: &CoupledSystem, task: &TaskMachine, horizon: usize) -> Result<Verdict, CoupledError> {
    if cs.external.is_disturbed() {
        return Err(CoupledError::DisturbedCoupling);
    }
    if horizon == 0 {
        return Err(CoupledError::ZeroHorizon);
    }
    let ok = can_succeed(task);
    for x in backward_reachable_set(&cs.external, task)? {
        let r = rollout(cs, x, horizon, &DisturbanceSource::None)?;
        if let Err(failure) = judge(cs, task, &ok, &r)? {
            return Ok(Verdict::Infeasible { x, failure });
        }
    }
    Ok(Verdict::Feasible)
}

/// How disturbance traces are quantified in [`is_robustly_feasible`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceQuantifier {
    AllTraces,
    SomeTrace,
}

/// Extension for disturbed couplings: from every possible initial state of
/// the external system, all (or some) disturbance traces reach success
/// within `horizon` stages. Not part of the feasibility definition above.
pub fn is_robustly_feasible(
    cs: &CoupledSystem,
    task: &TaskMachine,
    horizon: usize,
    quantifier: TraceQuantifier,
    limit: usize,
) -> Result<Verdict, CoupledError> {
    let ok = can_succeed(task);
    for &x in cs.external.initial() {
        let all = rollout_all(cs, x, horizon, limit)?;
        let mut first_failure = None;
        let mut any_success = false;
        for r in &all {
            match judge(cs, task, &ok, r)? {
                Ok(_) => any_success = true,
                Err(f) => {
                    first_failure.get_or_insert(f);
                }
            }
        }
        let failed = match quantifier {
            TraceQuantifier::AllTraces => first_failure,
            TraceQuantifier::SomeTrace if any_success => None,
            TraceQuantifier::SomeTrace => first_failure,
        };
        if let Some(failure) = failed {
            return Ok(Verdict::Infeasible { x, failure });
        }
    }
    Ok(Verdict::Feasible)
}

/// The minimal DITS of a policy.
#[derive(Clone, Debug)]
pub struct MinimalDits {
    /// Quotient over letters `(u, y)`, labeled by the policy `π'`.
    pub planner: StateRelabeledTS,
    /// The strong restriction of `planner`: edges over `Y`, labeled by `π'`.
    pub executor: StateRelabeledTS,
}

impl MinimalDits {
    /// The executor coupled with `ext`.
    pub fn couple(&self, ext: ExternalSystem) -> Result<CoupledSystem, CoupledError> {
        CoupledSystem::new(ext, self.executor.system.clone(), self.executor.labeling.clone())
    }
}

/// A policy over histories, in one of two encodings.
pub enum PolicyEncoding<'a> {
    /// An unrolled history tree and an I-map to actions.
    Tree { tree: &'a HistoryTree, policy: &'a dyn IMap },
    /// A finite DITS over letters with an initial state, labeled by the
    /// action it prescribes.
    Regular(&'a StateRelabeledTS),
}

/// Restricts by `π`, prunes states unreachable from the initial state,
/// refines `π` minimally, and quotients. On trees the refinement uses the
/// truncated-tree semantics of [`tree_msr`].
pub fn minimal_dits_for_policy(enc: PolicyEncoding<'_>) -> Result<MinimalDits, CoupledError> {
    let (base, depth) = match enc {
        PolicyEncoding::Tree { tree, policy } => {
            (crate::history::apply_imap(tree, policy)?, Some(tree.depth()))
        }
        PolicyEncoding::Regular(srts) => (srts.clone(), None),
    };
    let root = base
        .system
        .initial()
        .ok_or_else(|| CoupledError::Invalid("policy encoding has no initial state".into()))?;
    let restricted = restrict(&base.system, &base.labeling)?;
    let keep = restricted.reachable_from([root]);
    let pruned = restricted.induced(&keep);
    let pi = Labeling::from_values(keep.iter().map(|&s| base.labeling.get(s).to_string()).collect());
    let pruned = StateRelabeledTS::new(pruned, pi)?;
    let (labeled, pi_sub) = match depth {
        Some(d) => {
            let r = tree_msr(&pruned, d)?;
            let pi_sub = Labeling::from_values(r.core.iter().map(|&s| pruned.labeling.get(s).to_string()).collect());
            (r.labeled, pi_sub)
        }
        None => {
            let r = minimal_sufficient_refinement(&pruned)?;
            (StateRelabeledTS::new(pruned.system.clone(), r.labeling)?, pruned.labeling.clone())
        }
    };
    let planner = quotient_labeled(&labeled, &pi_sub)?;
    let executor_ts = project_observations(&planner.system)?;
    let exec_pi = Labeling::from_fn(&executor_ts, |s, _| planner.labeling.get(s).to_string());
    Ok(MinimalDits {
        planner,
        executor: StateRelabeledTS::new(executor_ts, exec_pi)?,
    })
}

/// Initial states, as a set, for which two couplings emit the same action
/// and observation histories over `horizon` stages.
pub fn agreeing_starts(a: &CoupledSystem, b: &CoupledSystem, horizon: usize) -> Result<BTreeSet<usize>, CoupledError> {
    let mut out = BTreeSet::new();
    for x in 0..a.external.num_states() {
        let ra = rollout(a, x, horizon, &DisturbanceSource::None)?;
        let rb = rollout(b, x, horizon, &DisturbanceSource::None)?;
        if ra.u == rb.u && ra.y == rb.y && ra.x == rb.x {
            out.insert(x);
        }
    }
    Ok(out)
}
