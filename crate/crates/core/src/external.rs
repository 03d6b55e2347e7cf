//! External systems `(X, U, f, h, Y)`, optionally with disturbances.
//!
//! State, action and observation names are kept sorted, so indices are
//! ranks. A disturbed system carries `f: X×U×Θ → X`, `h: X×Ψ → Y` and a
//! nondeterministic or probabilistic model of which disturbances occur.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::CoupledError;
use crate::ts::{Labeling, StateRelabeledTS, TransitionSystem, TsBuilder};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DisturbanceModel {
    /// `theta[x][u]` lists the admissible `θ`, `psi[x]` the admissible `ψ`.
    Nondeterministic {
        theta: Vec<Vec<Vec<usize>>>,
        psi: Vec<Vec<usize>>,
    },
    /// `theta[x][u][θ] = P(θ | x, u)` and `psi[x][ψ] = P(ψ | x)`.
    Probabilistic {
        theta: Vec<Vec<Vec<BigRational>>>,
        psi: Vec<Vec<BigRational>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disturbance {
    pub thetas: Vec<String>,
    pub psis: Vec<String>,
    /// `f[x][u][θ]`.
    pub f: Vec<Vec<Vec<usize>>>,
    /// `h[x][ψ]`.
    pub h: Vec<Vec<usize>>,
    pub model: DisturbanceModel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Dynamics {
    Plain { f: Vec<Vec<usize>>, h: Vec<usize> },
    Disturbed(Disturbance),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalSystem {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    dynamics: Dynamics,
    /// Possible initial states, sorted. Defaults to all of `X`.
    initial: Vec<usize>,
}

/// Table form of a disturbed system, keyed by names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DisturbedTables {
    pub thetas: Vec<String>,
    pub psis: Vec<String>,
    /// `(x, u, θ) -> x'`.
    pub f: BTreeMap<(String, String, String), String>,
    /// `(x, ψ) -> y`.
    pub h: BTreeMap<(String, String), String>,
}

/// Model of a disturbed system, keyed by names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelTables {
    Nondeterministic {
        theta: BTreeMap<(String, String), Vec<String>>,
        psi: BTreeMap<String, Vec<String>>,
    },
    Probabilistic {
        theta: BTreeMap<(String, String), BTreeMap<String, BigRational>>,
        psi: BTreeMap<String, BTreeMap<String, BigRational>>,
    },
}

fn sorted(xs: impl IntoIterator<Item = String>, what: &str) -> Result<Vec<String>, CoupledError> {
    let mut v: Vec<String> = xs.into_iter().collect();
    v.sort();
    let before = v.len();
    v.dedup();
    if v.len() != before {
        return Err(CoupledError::Invalid(alloc::format!("duplicate {what} name")));
    }
    if v.is_empty() {
        return Err(CoupledError::Invalid(alloc::format!("empty {what} set")));
    }
    Ok(v)
}

fn index(names: &[String], n: &str, what: &str) -> Result<usize, CoupledError> {
    names
        .binary_search_by(|s| s.as_str().cmp(n))
        .map_err(|_| CoupledError::Invalid(alloc::format!("unknown {what} `{n}`")))
}

fn missing(what: &str, key: impl core::fmt::Debug) -> CoupledError {
    CoupledError::Invalid(alloc::format!("{what} undefined at {key:?}"))
}

impl ExternalSystem {
    /// A disturbance-free system from total tables.
    pub fn new(
        states: impl IntoIterator<Item = String>,
        actions: impl IntoIterator<Item = String>,
        f: &BTreeMap<(String, String), String>,
        h: &BTreeMap<String, String>,
    ) -> Result<Self, CoupledError> {
        let states = sorted(states, "state")?;
        let actions = sorted(actions, "action")?;
        let observations = sorted(h.values().cloned().collect::<BTreeSet<_>>(), "observation")?;
        let mut ft = Vec::with_capacity(states.len());
        let mut ht = Vec::with_capacity(states.len());
        for x in &states {
            let mut row = Vec::with_capacity(actions.len());
            for u in &actions {
                let to = f
                    .get(&(x.clone(), u.clone()))
                    .ok_or_else(|| missing("f", (x, u)))?;
                row.push(index(&states, to, "state")?);
            }
            ft.push(row);
            let y = h.get(x).ok_or_else(|| missing("h", x))?;
            ht.push(index(&observations, y, "observation")?);
        }
        for (x, u) in f.keys() {
            index(&states, x, "state")?;
            index(&actions, u, "action")?;
        }
        for x in h.keys() {
            index(&states, x, "state")?;
        }
        let initial = (0..states.len()).collect();
        Ok(ExternalSystem {
            states,
            actions,
            observations,
            dynamics: Dynamics::Plain { f: ft, h: ht },
            initial,
        })
    }

    /// A disturbance-free system from closures over names.
    pub fn from_fn(
        states: impl IntoIterator<Item = String>,
        actions: impl IntoIterator<Item = String>,
        f: impl Fn(&str, &str) -> String,
        h: impl Fn(&str) -> String,
    ) -> Result<Self, CoupledError> {
        let states: Vec<String> = states.into_iter().collect();
        let actions: Vec<String> = actions.into_iter().collect();
        let mut ft = BTreeMap::new();
        let mut ht = BTreeMap::new();
        for x in &states {
            for u in &actions {
                ft.insert((x.clone(), u.clone()), f(x, u));
            }
            ht.insert(x.clone(), h(x));
        }
        ExternalSystem::new(states, actions, &ft, &ht)
    }

    /// A disturbed system. Every `(x, u, θ)` and `(x, ψ)` must be defined.
    pub fn disturbed(
        states: impl IntoIterator<Item = String>,
        actions: impl IntoIterator<Item = String>,
        tables: &DisturbedTables,
        model: &ModelTables,
    ) -> Result<Self, CoupledError> {
        let states = sorted(states, "state")?;
        let actions = sorted(actions, "action")?;
        let thetas = sorted(tables.thetas.iter().cloned(), "theta")?;
        let psis = sorted(tables.psis.iter().cloned(), "psi")?;
        let observations = sorted(
            tables.h.values().cloned().collect::<BTreeSet<_>>(),
            "observation",
        )?;
        let mut f = Vec::new();
        let mut h = Vec::new();
        for x in &states {
            let mut fx = Vec::new();
            for u in &actions {
                let mut fxu = Vec::new();
                for t in &thetas {
                    let key = (x.clone(), u.clone(), t.clone());
                    let to = tables.f.get(&key).ok_or_else(|| missing("f", &key))?;
                    fxu.push(index(&states, to, "state")?);
                }
                fx.push(fxu);
            }
            f.push(fx);
            let mut hx = Vec::new();
            for p in &psis {
                let key = (x.clone(), p.clone());
                let y = tables.h.get(&key).ok_or_else(|| missing("h", &key))?;
                hx.push(index(&observations, y, "observation")?);
            }
            h.push(hx);
        }
        let model = match model {
            ModelTables::Nondeterministic { theta, psi } => {
                let mut th = Vec::new();
                let mut ps = Vec::new();
                for x in &states {
                    let mut row = Vec::new();
                    for u in &actions {
                        let key = (x.clone(), u.clone());
                        let set = theta.get(&key).ok_or_else(|| missing("Θ(x,u)", &key))?;
                        let mut ids = set
                            .iter()
                            .map(|t| index(&thetas, t, "theta"))
                            .collect::<Result<Vec<_>, _>>()?;
                        ids.sort_unstable();
                        ids.dedup();
                        if ids.is_empty() {
                            return Err(missing("nonempty Θ(x,u)", &key));
                        }
                        row.push(ids);
                    }
                    th.push(row);
                    let set = psi.get(x).ok_or_else(|| missing("Ψ(x)", x))?;
                    let mut ids = set
                        .iter()
                        .map(|p| index(&psis, p, "psi"))
                        .collect::<Result<Vec<_>, _>>()?;
                    ids.sort_unstable();
                    ids.dedup();
                    if ids.is_empty() {
                        return Err(missing("nonempty Ψ(x)", x));
                    }
                    ps.push(ids);
                }
                DisturbanceModel::Nondeterministic { theta: th, psi: ps }
            }
            ModelTables::Probabilistic { theta, psi } => {
                let row = |dist: &BTreeMap<String, BigRational>,
                           names: &[String],
                           what: &str,
                           key: String|
                 -> Result<Vec<BigRational>, CoupledError> {
                    let mut v = alloc::vec![BigRational::zero(); names.len()];
                    for (n, p) in dist {
                        if *p < BigRational::zero() {
                            return Err(CoupledError::Invalid(alloc::format!(
                                "negative probability in {what} row {key}"
                            )));
                        }
                        v[index(names, n, what)?] = p.clone();
                    }
                    let total: BigRational = v.iter().cloned().sum();
                    if !total.is_one() {
                        return Err(CoupledError::NotNormalized(key));
                    }
                    Ok(v)
                };
                let mut th = Vec::new();
                let mut ps = Vec::new();
                for x in &states {
                    let mut r = Vec::new();
                    for u in &actions {
                        let key = (x.clone(), u.clone());
                        let d = theta.get(&key).ok_or_else(|| missing("P(θ|x,u)", &key))?;
                        r.push(row(d, &thetas, "theta", alloc::format!("({x},{u})"))?);
                    }
                    th.push(r);
                    let d = psi.get(x).ok_or_else(|| missing("P(ψ|x)", x))?;
                    ps.push(row(d, &psis, "psi", x.clone())?);
                }
                DisturbanceModel::Probabilistic { theta: th, psi: ps }
            }
        };
        let initial = (0..states.len()).collect();
        Ok(ExternalSystem {
            states,
            actions,
            observations,
            dynamics: Dynamics::Disturbed(Disturbance {
                thetas,
                psis,
                f,
                h,
                model,
            }),
            initial,
        })
    }

    /// Restricts the possible initial states.
    pub fn with_initial<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self, CoupledError> {
        let mut ids = names
            .iter()
            .map(|n| index(&self.states, n.as_ref(), "state"))
            .collect::<Result<Vec<_>, _>>()?;
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(CoupledError::Invalid("empty initial set".to_string()));
        }
        self.initial = ids;
        Ok(self)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, n: &str) -> Option<usize> {
        index(&self.states, n, "state").ok()
    }

    pub fn action_index(&self, n: &str) -> Option<usize> {
        index(&self.actions, n, "action").ok()
    }

    pub fn observation_index(&self, n: &str) -> Option<usize> {
        index(&self.observations, n, "observation").ok()
    }

    pub fn disturbance(&self) -> Option<&Disturbance> {
        match &self.dynamics {
            Dynamics::Plain { .. } => None,
            Dynamics::Disturbed(d) => Some(d),
        }
    }

    pub fn is_disturbed(&self) -> bool {
        self.disturbance().is_some()
    }

    /// `f(x, u)` of a disturbance-free system.
    pub fn f(&self, x: usize, u: usize) -> Option<usize> {
        match &self.dynamics {
            Dynamics::Plain { f, .. } => Some(f[x][u]),
            Dynamics::Disturbed(_) => None,
        }
    }

    /// `h(x)` of a disturbance-free system.
    pub fn h(&self, x: usize) -> Option<usize> {
        match &self.dynamics {
            Dynamics::Plain { h, .. } => Some(h[x]),
            Dynamics::Disturbed(_) => None,
        }
    }

    /// All states `f(x, u, θ)` for admissible (or positive-probability) `θ`.
    pub fn image(&self, x: usize, u: usize) -> Vec<usize> {
        let mut v = match &self.dynamics {
            Dynamics::Plain { f, .. } => alloc::vec![f[x][u]],
            Dynamics::Disturbed(d) => d
                .admissible_thetas(x, u)
                .into_iter()
                .map(|t| d.f[x][u][t])
                .collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    /// All observations `h(x, ψ)` that can occur at `x`.
    pub fn possible_observations(&self, x: usize) -> Vec<usize> {
        let mut v = match &self.dynamics {
            Dynamics::Plain { h, .. } => alloc::vec![h[x]],
            Dynamics::Disturbed(d) => d
                .admissible_psis(x)
                .into_iter()
                .map(|p| d.h[x][p])
                .collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    /// States whose observation can be `y`: the preimage `H(y)`.
    pub fn preimage(&self, y: usize) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&x| self.possible_observations(x).contains(&y))
            .collect()
    }

    /// `(X, U, f)` as a transition system labeled by the (possible)
    /// observations. Multiple observations are joined with `|`.
    pub fn to_srts(&self) -> StateRelabeledTS {
        let mut b = TsBuilder::new();
        for x in &self.states {
            b.state(x.clone());
        }
        for u in &self.actions {
            b.label(u.clone());
        }
        for x in 0..self.states.len() {
            for u in 0..self.actions.len() {
                for t in self.image(x, u) {
                    b.edge(&self.states[x], &self.actions[u], &self.states[t]);
                }
            }
        }
        let ts: TransitionSystem = b.build();
        let labeling = Labeling::from_fn(&ts, |x, _| {
            let ys: Vec<&str> = self
                .possible_observations(x)
                .into_iter()
                .map(|y| self.observations[y].as_str())
                .collect();
            ys.join("|")
        });
        StateRelabeledTS { system: ts, labeling }
    }
}

impl Disturbance {
    pub fn admissible_thetas(&self, x: usize, u: usize) -> Vec<usize> {
        match &self.model {
            DisturbanceModel::Nondeterministic { theta, .. } => theta[x][u].clone(),
            DisturbanceModel::Probabilistic { theta, .. } => (0..self.thetas.len())
                .filter(|&t| !theta[x][u][t].is_zero())
                .collect(),
        }
    }

    pub fn admissible_psis(&self, x: usize) -> Vec<usize> {
        match &self.model {
            DisturbanceModel::Nondeterministic { psi, .. } => psi[x].clone(),
            DisturbanceModel::Probabilistic { psi, .. } => (0..self.psis.len())
                .filter(|&p| !psi[x][p].is_zero())
                .collect(),
        }
    }

    pub fn is_probabilistic(&self) -> bool {
        matches!(self.model, DisturbanceModel::Probabilistic { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(x: &str) -> String {
        x.to_string()
    }

    #[test]
    fn plain_system_tables() {
        let e = ExternalSystem::from_fn(
            vec![s("b"), s("a")],
            vec![s("go")],
            |x, _| if x == "a" { s("b") } else { s("a") },
            |x| s(x),
        )
        .unwrap();
        assert_eq!(e.states(), &["a", "b"]);
        assert_eq!(e.f(0, 0), Some(1));
        assert_eq!(e.h(1), Some(1));
        assert_eq!(e.preimage(0), vec![0]);
        assert_eq!(e.initial(), &[0, 1]);
    }

    #[test]
    fn missing_entries_are_rejected() {
        let f = BTreeMap::new();
        let mut h = BTreeMap::new();
        h.insert(s("a"), s("0"));
        assert!(ExternalSystem::new(vec![s("a")], vec![s("u")], &f, &h).is_err());
    }

    #[test]
    fn probabilistic_rows_must_sum_to_one() {
        let tables = DisturbedTables {
            thetas: vec![s("t0"), s("t1")],
            psis: vec![s("p")],
            f: [
                ((s("a"), s("u"), s("t0")), s("a")),
                ((s("a"), s("u"), s("t1")), s("a")),
            ]
            .into_iter()
            .collect(),
            h: [((s("a"), s("p")), s("0"))].into_iter().collect(),
        };
        let half = BigRational::new(1.into(), 2.into());
        let third = BigRational::new(1.into(), 3.into());
        let model = |p: BigRational| ModelTables::Probabilistic {
            theta: [(
                (s("a"), s("u")),
                [(s("t0"), half.clone()), (s("t1"), p)].into_iter().collect(),
            )]
            .into_iter()
            .collect(),
            psi: [(s("a"), [(s("p"), BigRational::one())].into_iter().collect())]
                .into_iter()
                .collect(),
        };
        assert!(ExternalSystem::disturbed(vec![s("a")], vec![s("u")], &tables, &model(half.clone())).is_ok());
        assert!(matches!(
            ExternalSystem::disturbed(vec![s("a")], vec![s("u")], &tables, &model(third)),
            Err(CoupledError::NotNormalized(_))
        ));
    }
}
