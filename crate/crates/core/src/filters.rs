//! Derived ITSs given by filters: the nondeterministic set filter, the
//! discrete Bayes filter and the moving-average filter.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{FilterError, HistError};
use crate::external::ExternalSystem;
use crate::history::{letter, strong_restrict, NO_ACTION};
use crate::prob::{ProbModel, Scalar};
use crate::ts::{Labeling, StateRelabeledTS, TransitionSystem, TsBuilder};

/// A set of external states.
pub type NdetIState = BTreeSet<usize>;

/// `X_1 = X_0 ∩ H(y)`.
pub fn ndet_observe(ext: &ExternalSystem, x0: &NdetIState, y: usize) -> Result<NdetIState, FilterError> {
    if x0.is_empty() {
        return Err(FilterError::EmptyInitialSet);
    }
    let out: NdetIState = x0
        .iter()
        .copied()
        .filter(|&x| ext.possible_observations(x).contains(&y))
        .collect();
    if out.is_empty() {
        return Err(FilterError::InconsistentObservation);
    }
    Ok(out)
}

/// `X_{k+1} = X̂(X_k, u) ∩ H(y)`.
pub fn ndet_step(ext: &ExternalSystem, xk: &NdetIState, u: usize, y: usize) -> Result<NdetIState, FilterError> {
    let image: NdetIState = xk.iter().flat_map(|&x| ext.image(x, u)).collect();
    ndet_observe(ext, &image, y).map_err(|e| match e {
        FilterError::EmptyInitialSet => FilterError::InconsistentObservation,
        e => e,
    })
}

/// `{a,b,...}` by state names.
pub fn set_name(ext: &ExternalSystem, set: &NdetIState) -> String {
    let names: Vec<&str> = set.iter().map(|&x| ext.states()[x].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

/// Name of the stage-0 state of filter systems.
pub const FILTER_ROOT: &str = "η0";

/// The set filter as a DITS over letters `(u, y)`: its states are the
/// filter states reachable from `x0` through consistent histories, plus a
/// root for the empty history. Each state is labeled by its own name.
pub fn ndet_its(ext: &ExternalSystem, x0: &NdetIState) -> Result<StateRelabeledTS, FilterError> {
    if x0.is_empty() {
        return Err(FilterError::EmptyInitialSet);
    }
    let mut b = TsBuilder::new();
    b.initial(FILTER_ROOT);
    let mut seen: BTreeSet<NdetIState> = BTreeSet::new();
    let mut queue = VecDeque::new();
    for (yi, y) in ext.observations().iter().enumerate() {
        b.label(letter(NO_ACTION, y));
        if let Ok(s) = ndet_observe(ext, x0, yi) {
            b.edge(FILTER_ROOT, &letter(NO_ACTION, y), &set_name(ext, &s));
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    while let Some(s) = queue.pop_front() {
        let from = set_name(ext, &s);
        for (ui, u) in ext.actions().iter().enumerate() {
            for (yi, y) in ext.observations().iter().enumerate() {
                let l = letter(u, y);
                b.label(l.clone());
                if let Ok(t) = ndet_step(ext, &s, ui, yi) {
                    b.edge(&from, &l, &set_name(ext, &t));
                    if seen.insert(t.clone()) {
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    let ts = b.build();
    let labeling = Labeling::identity(&ts);
    Ok(StateRelabeledTS { system: ts, labeling })
}

/// Parses a state name of [`ndet_its`] back into a set.
pub fn parse_set(ext: &ExternalSystem, name: &str) -> Option<NdetIState> {
    let inner = name.strip_prefix('{')?.strip_suffix('}')?;
    if inner.is_empty() {
        return Some(BTreeSet::new());
    }
    inner.split(',').map(|n| ext.state_index(n)).collect()
}

/// The executor of a set-filter policy: the strong restriction of
/// [`ndet_its`] by `policy`, pruned to states reachable from the root. The
/// returned labeling is the policy (root gets [`NO_ACTION`]).
pub fn ndet_policy_dits(
    ext: &ExternalSystem,
    x0: &NdetIState,
    policy: impl Fn(&NdetIState) -> usize,
) -> Result<(TransitionSystem, Labeling), HistError> {
    let its = ndet_its(ext, x0).map_err(|e| HistError::PartialMap(e.to_string()))?;
    let ts = &its.system;
    let pi = Labeling::from_fn(ts, |_, n| match parse_set(ext, n) {
        Some(set) => ext.actions()[policy(&set)].clone(),
        None => NO_ACTION.to_string(),
    });
    let exec = strong_restrict(ts, &pi)?;
    let keep = exec.reachable_from(exec.initial());
    let pruned = exec.induced(&keep);
    let pi = Labeling::from_values(keep.iter().map(|&s| pi.get(s).to_string()).collect());
    Ok((pruned, pi))
}

/// Posterior after observing `y` from `prior`: `p(x) ∝ P(y|x)·prior(x)`.
pub fn bayes_observe<T: Scalar>(pm: &ProbModel<T>, prior: &[T], y: usize) -> Result<Vec<T>, FilterError> {
    let joint: Vec<T> = prior
        .iter()
        .enumerate()
        .map(|(x, p)| pm.obs[x][y].clone() * p.clone())
        .collect();
    let total = joint.iter().cloned().fold(T::zero(), |a, b| a + b);
    if total.is_zero() {
        return Err(FilterError::ZeroEvidence);
    }
    Ok(joint.into_iter().map(|p| p / total.clone()).collect())
}

/// `p'(x') ∝ P(y|x')·Σ_x P(x'|x,u)·p(x)`.
pub fn bayes_step<T: Scalar>(pm: &ProbModel<T>, p: &[T], u: usize, y: usize) -> Result<Vec<T>, FilterError> {
    let n = pm.num_states();
    let mut pred = alloc::vec![T::zero(); n];
    for (x, px) in p.iter().enumerate() {
        if px.is_zero() {
            continue;
        }
        for (to, q) in pm.trans[x][u].iter().enumerate() {
            pred[to] = pred[to].clone() + q.clone() * px.clone();
        }
    }
    bayes_observe(pm, &pred, y)
}

/// Posterior after a whole history: observe-only for the first pair, then
/// one [`bayes_step`] per pair. `pairs[0].0` is ignored.
pub fn bayes_filter<T: Scalar>(pm: &ProbModel<T>, pairs: &[(usize, usize)]) -> Result<Vec<T>, FilterError> {
    let mut p = pm.init.clone();
    for (k, &(u, y)) in pairs.iter().enumerate() {
        p = if k == 0 {
            bayes_observe(pm, &p, y)?
        } else {
            bayes_step(pm, &p, u, y)?
        };
    }
    Ok(p)
}

/// The moving-average filter over the last `n` observations.
#[derive(Clone, Debug, PartialEq)]
pub struct MovingAverage {
    window: VecDeque<f64>,
    n: usize,
}

impl MovingAverage {
    pub fn new(n: usize) -> Result<Self, FilterError> {
        if n == 0 {
            return Err(FilterError::ZeroWindow);
        }
        Ok(MovingAverage {
            window: VecDeque::with_capacity(n),
            n,
        })
    }

    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    /// Mean of the stored values; before `n` samples it averages what is
    /// there. `None` before the first sample.
    pub fn mean(&self) -> Option<f64> {
        if self.window.is_empty() {
            return None;
        }
        Some(self.window.iter().sum::<f64>() / self.window.len() as f64)
    }

    pub fn push(&mut self, y: f64) -> f64 {
        if self.window.len() == self.n {
            self.window.pop_front();
        }
        self.window.push_back(y);
        self.mean().unwrap()
    }
}

pub fn movavg_step(s: &MovingAverage, y: f64) -> (MovingAverage, f64) {
    let mut next = s.clone();
    let m = next.push(y);
    (next, m)
}

/// Posteriors grouped by value: the classes of the Bayes I-map over a set of
/// histories. Histories are given as `(u, y)` index pairs.
pub fn posterior_classes<T: Scalar + Ord>(
    pm: &ProbModel<T>,
    histories: &[Vec<(usize, usize)>],
) -> BTreeMap<Vec<T>, Vec<usize>> {
    let mut out: BTreeMap<Vec<T>, Vec<usize>> = BTreeMap::new();
    for (i, h) in histories.iter().enumerate() {
        if let Ok(p) = bayes_filter(pm, h) {
            out.entry(p).or_default().push(i);
        }
    }
    out
}
