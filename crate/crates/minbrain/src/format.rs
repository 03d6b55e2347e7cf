//! JSON forms of systems, partitions, task machines, external and coupled
//! systems, probabilistic models and PSRs.
//!
//! Every `from_*` export followed by the matching import gives back the
//! original value. Table keys that pair names are written `(a,b)` or
//! `(a,b,c)`.

use std::collections::BTreeMap;

use minbrain_core::coupled::CoupledSystem;
use minbrain_core::dbi::MooreMachine;
use minbrain_core::external::{DisturbanceModel, DisturbedTables, ExternalSystem, ModelTables};
use minbrain_core::history::NO_ACTION;
use minbrain_core::prob::ProbModel;
use minbrain_core::psr::{LinearPSR, Test};
use minbrain_core::{Labeling, Partition, StateRelabeledTS, TaskMachine, TransitionSystem};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl std::fmt::Display) -> FormatError {
    FormatError::Invalid(msg.to_string())
}

/// `(a,b,...)` from parts.
pub fn key(parts: &[&str]) -> String {
    format!("({})", parts.join(","))
}

/// Splits `(a,b,...)` into exactly `n` comma-free parts.
pub fn parse_key(k: &str, n: usize) -> Result<Vec<&str>, FormatError> {
    let inner = k
        .strip_prefix('(')
        .and_then(|k| k.strip_suffix(')'))
        .ok_or_else(|| invalid(format!("key `{k}` is not of the form (a,b,...)")))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != n {
        return Err(invalid(format!("key `{k}` should have {n} parts")));
    }
    Ok(parts)
}

/// A rational from `p/q`, an integer, or a decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Result<BigRational, FormatError> {
    let t = s.trim();
    let bad = || invalid(format!("`{s}` is not a rational number"));
    if let Some((int, frac)) = t.split_once('.') {
        let (neg, int) = match int.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int),
        };
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || (int.is_empty() && frac.is_empty()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(digits, denom);
        return Ok(if neg { -q } else { q });
    }
    t.parse::<BigRational>().map_err(|_| bad())
}

pub fn rational_string(q: &BigRational) -> String {
    q.to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    pub states: Vec<String>,
    pub labels: Vec<String>,
    pub transitions: Vec<[String; 3]>,
    #[serde(default)]
    pub state_labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

impl SystemJson {
    pub fn from_system(ts: &TransitionSystem) -> Self {
        SystemJson {
            states: ts.states().to_vec(),
            labels: ts.labels().to_vec(),
            transitions: ts
                .named_edges()
                .map(|(f, l, t)| [f.to_string(), l.to_string(), t.to_string()])
                .collect(),
            state_labels: BTreeMap::new(),
            initial: ts.initial().map(|s| ts.state_name(s).to_string()),
        }
    }

    pub fn from_srts(srts: &StateRelabeledTS) -> Self {
        let mut out = SystemJson::from_system(&srts.system);
        out.state_labels = srts
            .system
            .states()
            .iter()
            .enumerate()
            .map(|(s, n)| (n.clone(), srts.label_of(s).to_string()))
            .collect();
        out
    }

    /// The transition system; `state_labels` is ignored.
    pub fn to_system(&self) -> Result<TransitionSystem, FormatError> {
        let ts = TransitionSystem::new(self.states.iter().cloned(), self.labels.iter().cloned(), self.transitions.iter().map(|[a, b, c]| (a, b, c)))
            .map_err(invalid)?;
        match &self.initial {
            Some(i) => ts.with_initial(i).map_err(invalid),
            None => Ok(ts),
        }
    }

    /// The system with its labeling; every state must be labeled.
    pub fn to_srts(&self) -> Result<StateRelabeledTS, FormatError> {
        let ts = self.to_system()?;
        let labeling = Labeling::from_map(&ts, &self.state_labels).map_err(invalid)?;
        StateRelabeledTS::new(ts, labeling).map_err(invalid)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionJson {
    pub blocks: Vec<Vec<String>>,
}

impl PartitionJson {
    pub fn from_partition(ts: &TransitionSystem, p: &Partition) -> Self {
        PartitionJson {
            blocks: p
                .blocks()
                .into_iter()
                .map(|b| b.into_iter().map(|s| ts.state_name(s).to_string()).collect())
                .collect(),
        }
    }

    pub fn to_partition(&self, ts: &TransitionSystem) -> Result<Partition, FormatError> {
        let ids = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|n| ts.state_index(n).ok_or_else(|| invalid(format!("unknown state `{n}` in partition"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Partition::from_blocks(ts.num_states(), &ids).map_err(invalid)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskJson {
    pub alphabet_u: Vec<String>,
    pub alphabet_y: Vec<String>,
    pub states: Vec<String>,
    /// `(s,u,y)` to the next state.
    pub delta: BTreeMap<String, String>,
    pub output: BTreeMap<String, String>,
    pub initial: String,
}

/// Splits a `delta` key. Task state names may contain commas; actions and
/// observations may not.
fn parse_delta_key(k: &str) -> Result<(&str, &str, &str), FormatError> {
    let bad = || invalid(format!("delta key `{k}` is not of the form (s,u,y)"));
    let inner = k.strip_prefix('(').and_then(|k| k.strip_suffix(')')).ok_or_else(bad)?;
    let (rest, y) = inner.rsplit_once(',').ok_or_else(bad)?;
    let (s, u) = match rest.strip_suffix(&format!(",{NO_ACTION}")) {
        Some(s) => (s, NO_ACTION),
        None => rest.rsplit_once(',').ok_or_else(bad)?,
    };
    Ok((s, u, y))
}

impl TaskJson {
    pub fn from_task(m: &TaskMachine) -> Self {
        let states = m.states().to_vec();
        TaskJson {
            alphabet_u: m.alphabet_u().to_vec(),
            alphabet_y: m.alphabet_y().to_vec(),
            delta: m
                .transitions()
                .map(|(s, u, y, t)| (key(&[&states[s], u, y]), states[t].clone()))
                .collect(),
            output: (0..states.len()).map(|s| (states[s].clone(), m.output(s).to_string())).collect(),
            initial: states[m.initial()].clone(),
            states,
        }
    }

    pub fn to_task(&self) -> Result<TaskMachine, FormatError> {
        let delta = self
            .delta
            .iter()
            .map(|(k, t)| {
                let (s, u, y) = parse_delta_key(k)?;
                Ok((s.to_string(), u.to_string(), y.to_string(), t.clone()))
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        TaskMachine::new(&self.alphabet_u, &self.alphabet_y, &self.states, delta, &self.output, &self.initial)
            .map_err(invalid)
    }
}

/// Admissible disturbances as a set, or their probabilities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChoiceJson {
    Set(Vec<String>),
    Dist(BTreeMap<String, String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceJson {
    pub thetas: Vec<String>,
    pub psis: Vec<String>,
    /// `(x,u)` to `Θ(x,u)` or `P(θ|x,u)`.
    pub theta: BTreeMap<String, ChoiceJson>,
    /// `x` to `Ψ(x)` or `P(ψ|x)`.
    pub psi: BTreeMap<String, ChoiceJson>,
}

/// `f` maps `(x,u)` (or `(x,u,θ)` when disturbed) to a state, `h` maps `x`
/// (or `(x,ψ)`) to an observation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalJson {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub f: BTreeMap<String, String>,
    pub h: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceJson>,
}

impl ExternalJson {
    pub fn from_external(ext: &ExternalSystem) -> Self {
        let xs = ext.states();
        let us = ext.actions();
        let ys = ext.observations();
        let initial = (ext.initial().len() != xs.len())
            .then(|| ext.initial().iter().map(|&x| xs[x].clone()).collect());
        let Some(d) = ext.disturbance() else {
            let mut f = BTreeMap::new();
            for x in 0..xs.len() {
                for u in 0..us.len() {
                    f.insert(key(&[&xs[x], &us[u]]), xs[ext.f(x, u).unwrap()].clone());
                }
            }
            let h = (0..xs.len()).map(|x| (xs[x].clone(), ys[ext.h(x).unwrap()].clone())).collect();
            return ExternalJson {
                states: xs.to_vec(),
                actions: us.to_vec(),
                f,
                h,
                initial,
                disturbance: None,
            };
        };
        let mut f = BTreeMap::new();
        let mut h = BTreeMap::new();
        let mut theta = BTreeMap::new();
        let mut psi = BTreeMap::new();
        let set = |names: &[String], ids: &[usize]| ChoiceJson::Set(ids.iter().map(|&i| names[i].clone()).collect());
        let dist = |names: &[String], ps: &[BigRational]| {
            ChoiceJson::Dist(
                ps.iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(i, p)| (names[i].clone(), rational_string(p)))
                    .collect(),
            )
        };
        for x in 0..xs.len() {
            for u in 0..us.len() {
                for (t, name) in d.thetas.iter().enumerate() {
                    f.insert(key(&[&xs[x], &us[u], name]), xs[d.f[x][u][t]].clone());
                }
                let c = match &d.model {
                    DisturbanceModel::Nondeterministic { theta, .. } => set(&d.thetas, &theta[x][u]),
                    DisturbanceModel::Probabilistic { theta, .. } => dist(&d.thetas, &theta[x][u]),
                };
                theta.insert(key(&[&xs[x], &us[u]]), c);
            }
            for (p, name) in d.psis.iter().enumerate() {
                h.insert(key(&[&xs[x], name]), ys[d.h[x][p]].clone());
            }
            let c = match &d.model {
                DisturbanceModel::Nondeterministic { psi, .. } => set(&d.psis, &psi[x]),
                DisturbanceModel::Probabilistic { psi, .. } => dist(&d.psis, &psi[x]),
            };
            psi.insert(xs[x].clone(), c);
        }
        ExternalJson {
            states: xs.to_vec(),
            actions: us.to_vec(),
            f,
            h,
            initial,
            disturbance: Some(DisturbanceJson {
                thetas: d.thetas.clone(),
                psis: d.psis.clone(),
                theta,
                psi,
            }),
        }
    }

    pub fn to_external(&self) -> Result<ExternalSystem, FormatError> {
        let ext = match &self.disturbance {
            None => {
                let mut f = BTreeMap::new();
                for (k, v) in &self.f {
                    let p = parse_key(k, 2)?;
                    f.insert((p[0].to_string(), p[1].to_string()), v.clone());
                }
                ExternalSystem::new(self.states.iter().cloned(), self.actions.iter().cloned(), &f, &self.h)
                    .map_err(invalid)?
            }
            Some(d) => {
                let mut tables = DisturbedTables {
                    thetas: d.thetas.clone(),
                    psis: d.psis.clone(),
                    ..Default::default()
                };
                for (k, v) in &self.f {
                    let p = parse_key(k, 3)?;
                    tables
                        .f
                        .insert((p[0].to_string(), p[1].to_string(), p[2].to_string()), v.clone());
                }
                for (k, v) in &self.h {
                    let p = parse_key(k, 2)?;
                    tables.h.insert((p[0].to_string(), p[1].to_string()), v.clone());
                }
                let model = model_tables(d)?;
                ExternalSystem::disturbed(self.states.iter().cloned(), self.actions.iter().cloned(), &tables, &model)
                    .map_err(invalid)?
            }
        };
        match &self.initial {
            Some(init) => ext.with_initial(init).map_err(invalid),
            None => Ok(ext),
        }
    }
}

fn model_tables(d: &DisturbanceJson) -> Result<ModelTables, FormatError> {
    let all_sets = d
        .theta
        .values()
        .chain(d.psi.values())
        .all(|c| matches!(c, ChoiceJson::Set(_)));
    let all_dists = d
        .theta
        .values()
        .chain(d.psi.values())
        .all(|c| matches!(c, ChoiceJson::Dist(_)));
    let theta_key = |k: &str| -> Result<(String, String), FormatError> {
        let p = parse_key(k, 2)?;
        Ok((p[0].to_string(), p[1].to_string()))
    };
    if all_sets {
        let set = |c: &ChoiceJson| match c {
            ChoiceJson::Set(v) => v.clone(),
            ChoiceJson::Dist(_) => unreachable!(),
        };
        Ok(ModelTables::Nondeterministic {
            theta: d
                .theta
                .iter()
                .map(|(k, c)| Ok((theta_key(k)?, set(c))))
                .collect::<Result<_, FormatError>>()?,
            psi: d.psi.iter().map(|(k, c)| (k.clone(), set(c))).collect(),
        })
    } else if all_dists {
        let dist = |c: &ChoiceJson| -> Result<BTreeMap<String, BigRational>, FormatError> {
            match c {
                ChoiceJson::Dist(m) => m.iter().map(|(k, p)| Ok((k.clone(), parse_rational(p)?))).collect(),
                ChoiceJson::Set(_) => unreachable!(),
            }
        };
        Ok(ModelTables::Probabilistic {
            theta: d
                .theta
                .iter()
                .map(|(k, c)| Ok((theta_key(k)?, dist(c)?)))
                .collect::<Result<_, FormatError>>()?,
            psi: d
                .psi
                .iter()
                .map(|(k, c)| Ok((k.clone(), dist(c)?)))
                .collect::<Result<_, FormatError>>()?,
        })
    } else {
        Err(invalid("disturbance model mixes admissible sets and probabilities"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledJson {
    pub external: ExternalJson,
    /// A DITS over observations with an initial state.
    pub internal: SystemJson,
    /// Action per internal state.
    pub policy: BTreeMap<String, String>,
}

impl CoupledJson {
    pub fn from_coupled(cs: &CoupledSystem) -> Self {
        let ts = &cs.internal;
        CoupledJson {
            external: ExternalJson::from_external(&cs.external),
            internal: SystemJson::from_system(ts),
            policy: ts
                .states()
                .iter()
                .enumerate()
                .map(|(s, n)| (n.clone(), cs.policy.get(s).to_string()))
                .collect(),
        }
    }

    pub fn to_coupled(&self) -> Result<CoupledSystem, FormatError> {
        let internal = self.internal.to_system()?;
        let policy = Labeling::from_map(&internal, &self.policy).map_err(invalid)?;
        CoupledSystem::new(self.external.to_external()?, internal, policy).map_err(invalid)
    }
}

/// A disturbance-free external system as a system over actions, labeled by
/// observations, with its initial state.
pub fn moore_from_json(j: &SystemJson) -> Result<MooreMachine, FormatError> {
    let srts = j.to_srts()?;
    let ts = &srts.system;
    let x0 = ts.initial().ok_or_else(|| invalid("a Moore machine needs an initial state"))?;
    let mut f = BTreeMap::new();
    for x in 0..ts.num_states() {
        for u in 0..ts.num_labels() {
            let to = ts
                .successor(x, u)
                .ok_or_else(|| invalid(format!("no `{}` transition from `{}`", ts.label_name(u), ts.state_name(x))))?;
            f.insert((ts.state_name(x).to_string(), ts.label_name(u).to_string()), ts.state_name(to).to_string());
        }
    }
    let h: BTreeMap<String, String> = j.state_labels.clone();
    let ext = ExternalSystem::new(ts.states().iter().cloned(), ts.labels().iter().cloned(), &f, &h).map_err(invalid)?;
    MooreMachine::new(ext, x0).map_err(invalid)
}

pub fn moore_to_json(m: &MooreMachine) -> SystemJson {
    SystemJson::from_srts(&m.to_srts())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbModelJson {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `(x,u)` to `P(·|x,u)`.
    pub trans: BTreeMap<String, BTreeMap<String, String>>,
    /// `x` to `P(·|x)`.
    pub obs: BTreeMap<String, BTreeMap<String, String>>,
    pub init: BTreeMap<String, String>,
}

fn sparse(names: &[String], row: &[BigRational]) -> BTreeMap<String, String> {
    row.iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(i, p)| (names[i].clone(), rational_string(p)))
        .collect()
}

fn dense(names: &[String], row: Option<&BTreeMap<String, String>>, what: &str) -> Result<Vec<BigRational>, FormatError> {
    let mut v = vec![BigRational::zero(); names.len()];
    for (n, p) in row.ok_or_else(|| invalid(format!("missing row for {what}")))? {
        let i = names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| invalid(format!("unknown name `{n}` in row for {what}")))?;
        let q = parse_rational(p)?;
        if q.is_negative() {
            return Err(invalid(format!("negative probability in row for {what}")));
        }
        v[i] = q;
    }
    Ok(v)
}

impl ProbModelJson {
    pub fn from_model(pm: &ProbModel<BigRational>) -> Self {
        let mut trans = BTreeMap::new();
        for (x, xn) in pm.states.iter().enumerate() {
            for (u, un) in pm.actions.iter().enumerate() {
                trans.insert(key(&[xn, un]), sparse(&pm.states, &pm.trans[x][u]));
            }
        }
        ProbModelJson {
            states: pm.states.clone(),
            actions: pm.actions.clone(),
            observations: pm.observations.clone(),
            trans,
            obs: pm
                .states
                .iter()
                .enumerate()
                .map(|(x, n)| (n.clone(), sparse(&pm.observations, &pm.obs[x])))
                .collect(),
            init: sparse(&pm.states, &pm.init),
        }
    }

    pub fn to_model(&self) -> Result<ProbModel<BigRational>, FormatError> {
        let mut trans = Vec::new();
        for x in &self.states {
            let mut row = Vec::new();
            for u in &self.actions {
                let k = key(&[x, u]);
                row.push(dense(&self.states, self.trans.get(&k), &k)?);
            }
            trans.push(row);
        }
        let obs = self
            .states
            .iter()
            .map(|x| dense(&self.observations, self.obs.get(x), x))
            .collect::<Result<Vec<_>, _>>()?;
        let init = dense(&self.states, Some(&self.init), "the initial distribution")?;
        ProbModel::new(
            self.states.clone(),
            self.actions.clone(),
            self.observations.clone(),
            trans,
            obs,
            init,
        )
        .map_err(invalid)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsrWeightsJson {
    /// `u:y` to `r_{(u,y)}`.
    pub one_step: BTreeMap<String, Vec<String>>,
    /// `u:y` to the weights of `(u,y)` followed by each core test.
    pub extended: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsrJson {
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// Tests as `u:y.u:y`.
    pub core_tests: Vec<String>,
    pub m0: Vec<String>,
    pub weights: PsrWeightsJson,
}

fn pair_name(actions: &[String], observations: &[String], (u, y): (usize, usize)) -> String {
    format!("{}:{}", actions[u], observations[y])
}

/// Parses `u:y.u:y` (empty for no pairs) against the given names.
pub fn parse_pairs(s: &str, actions: &[String], observations: &[String]) -> Result<Vec<(usize, usize)>, FormatError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|p| {
            let (u, y) = p.split_once(':').ok_or_else(|| invalid(format!("`{p}` is not of the form u:y")))?;
            let u = actions.iter().position(|a| a == u).ok_or_else(|| invalid(format!("unknown action `{u}`")))?;
            let y = observations
                .iter()
                .position(|o| o == y)
                .ok_or_else(|| invalid(format!("unknown observation `{y}`")))?;
            Ok((u, y))
        })
        .collect()
}

impl PsrJson {
    pub fn from_psr(psr: &LinearPSR<BigRational>) -> Self {
        let (us, ys) = (&psr.actions, &psr.observations);
        let strings = |v: &[BigRational]| v.iter().map(rational_string).collect::<Vec<_>>();
        let mut one_step = BTreeMap::new();
        let mut extended = BTreeMap::new();
        for u in 0..us.len() {
            for y in 0..ys.len() {
                let k = pair_name(us, ys, (u, y));
                one_step.insert(k.clone(), strings(&psr.r_uy[u][y]));
                extended.insert(k, psr.r_uyt[u][y].iter().map(|r| strings(r)).collect());
            }
        }
        PsrJson {
            actions: us.clone(),
            observations: ys.clone(),
            core_tests: psr
                .core_tests
                .iter()
                .map(|t| t.pairs.iter().map(|&p| pair_name(us, ys, p)).collect::<Vec<_>>().join("."))
                .collect(),
            m0: strings(&psr.m0),
            weights: PsrWeightsJson { one_step, extended },
        }
    }

    pub fn to_psr(&self) -> Result<LinearPSR<BigRational>, FormatError> {
        let (us, ys) = (&self.actions, &self.observations);
        let k = self.core_tests.len();
        let vector = |v: &[String]| -> Result<Vec<BigRational>, FormatError> {
            if v.len() != k {
                return Err(invalid(format!("weight vector has {} entries, expected {k}", v.len())));
            }
            v.iter().map(|s| parse_rational(s)).collect()
        };
        let core_tests = self
            .core_tests
            .iter()
            .map(|t| Ok(Test { pairs: parse_pairs(t, us, ys)? }))
            .collect::<Result<Vec<_>, FormatError>>()?;
        let mut r_uy = Vec::new();
        let mut r_uyt = Vec::new();
        for u in 0..us.len() {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for y in 0..ys.len() {
                let name = pair_name(us, ys, (u, y));
                let missing = || invalid(format!("missing weights for `{name}`"));
                a.push(vector(self.weights.one_step.get(&name).ok_or_else(missing)?)?);
                let ext = self.weights.extended.get(&name).ok_or_else(missing)?;
                if ext.len() != k {
                    return Err(invalid(format!("`{name}` needs {k} extension weight vectors")));
                }
                b.push(ext.iter().map(|r| vector(r)).collect::<Result<Vec<_>, _>>()?);
            }
            r_uy.push(a);
            r_uyt.push(b);
        }
        Ok(LinearPSR {
            actions: us.clone(),
            observations: ys.clone(),
            core_tests,
            m0: vector(&self.m0)?,
            r_uy,
            r_uyt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(parse_rational("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn delta_keys() {
        assert_eq!(parse_delta_key("(s,(),y)").unwrap(), ("s", "()", "y"));
        assert_eq!(parse_delta_key("({a,b},u,y)").unwrap(), ("{a,b}", "u", "y"));
        assert!(parse_delta_key("(s,y)").is_err());
    }
}
