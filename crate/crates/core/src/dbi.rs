//! Diversity-based inference: test classes of a Moore machine, success
//! vectors and the update graph.
//!
//! A test `(u_1 … u_m, y)` succeeds from `x` when applying the actions from
//! `x` ends in a state observing `y`. Tests with equal success functions
//! form a class; prefixing by an action maps classes to classes.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::DbiError;
use crate::external::ExternalSystem;
use crate::partition::Partition;
use crate::ts::{Labeling, StateRelabeledTS, TsBuilder};

/// A disturbance-free external system with an initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MooreMachine {
    pub ext: ExternalSystem,
    pub x0: usize,
}

impl MooreMachine {
    pub fn new(ext: ExternalSystem, x0: usize) -> Result<Self, DbiError> {
        if ext.is_disturbed() {
            return Err(DbiError::Disturbed);
        }
        if x0 >= ext.num_states() {
            return Err(DbiError::UnknownInitial(x0));
        }
        Ok(MooreMachine { ext, x0 })
    }

    fn f(&self, x: usize, u: usize) -> usize {
        self.ext.f(x, u).unwrap()
    }

    fn h(&self, x: usize) -> usize {
        self.ext.h(x).unwrap()
    }

    /// The machine as a system over actions labeled by observations.
    pub fn to_srts(&self) -> StateRelabeledTS {
        let mut srts = self.ext.to_srts();
        srts.system = srts.system.with_initial_index(Some(self.x0));
        srts
    }
}

/// The success function of a test class, with the first test found for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessFunction {
    pub bits: Vec<bool>,
    /// Action indices of the representative test.
    pub actions: Vec<usize>,
    /// Observation index of the representative test.
    pub observation: usize,
}

impl SuccessFunction {
    /// `u1.u2:y`, or `:y` for a test without actions.
    pub fn test_name(&self, ext: &ExternalSystem) -> String {
        let us: Vec<&str> = self.actions.iter().map(|&u| ext.actions()[u].as_str()).collect();
        alloc::format!("{}:{}", us.join("."), ext.observations()[self.observation])
    }
}

/// Test classes in canonical order: the length-0 tests by observation, then
/// breadth first by class and action.
pub fn enumerate_test_classes(m: &MooreMachine) -> Vec<SuccessFunction> {
    let n = m.ext.num_states();
    let mut seen: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut out: Vec<SuccessFunction> = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..m.ext.observations().len() {
        let bits: Vec<bool> = (0..n).map(|x| m.h(x) == y).collect();
        if !seen.contains_key(&bits) {
            seen.insert(bits.clone(), out.len());
            queue.push_back(out.len());
            out.push(SuccessFunction {
                bits,
                actions: Vec::new(),
                observation: y,
            });
        }
    }
    while let Some(k) = queue.pop_front() {
        for u in 0..m.ext.actions().len() {
            let bits: Vec<bool> = (0..n).map(|x| out[k].bits[m.f(x, u)]).collect();
            if !seen.contains_key(&bits) {
                seen.insert(bits.clone(), out.len());
                queue.push_back(out.len());
                let mut actions = alloc::vec![u];
                actions.extend_from_slice(&out[k].actions);
                out.push(SuccessFunction {
                    bits,
                    actions,
                    observation: out[k].observation,
                });
            }
        }
    }
    out
}

/// `ξ(x) = (S_1(x), …, S_K(x))`.
pub fn success_vector(classes: &[SuccessFunction], x: usize) -> Vec<bool> {
    classes.iter().map(|c| c.bits[x]).collect()
}

/// The partition of states by success vector.
pub fn xi_partition(m: &MooreMachine, classes: &[SuccessFunction]) -> Partition {
    let keys: Vec<Vec<bool>> = (0..m.ext.num_states()).map(|x| success_vector(classes, x)).collect();
    Partition::from_keys(&keys)
}

/// `α_u(k) = n` iff `x ↦ S_k(f(x,u))` is the success function of class `n`.
pub fn alpha(m: &MooreMachine, classes: &[SuccessFunction], u: usize) -> Result<Vec<usize>, DbiError> {
    let index: BTreeMap<&[bool], usize> = classes.iter().enumerate().map(|(i, c)| (c.bits.as_slice(), i)).collect();
    (0..classes.len())
        .map(|k| {
            let bits: Vec<bool> = (0..m.ext.num_states()).map(|x| classes[k].bits[m.f(x, u)]).collect();
            index.get(bits.as_slice()).copied().ok_or_else(|| DbiError::ClosureViolation {
                class: k,
                action: m.ext.actions()[u].clone(),
            })
        })
        .collect()
}

/// Bits as a string of `0` and `1`.
pub fn vector_name(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// The update graph `(S, U, τ, σ, Y, s_0)`. Nodes are sorted by
/// [`vector_name`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateGraph {
    pub classes: Vec<SuccessFunction>,
    pub nodes: Vec<Vec<bool>>,
    /// `tau[s][u]`.
    pub tau: Vec<Vec<usize>>,
    /// Observation index per node.
    pub sigma: Vec<usize>,
    pub s0: usize,
    pub alphas: Vec<Vec<usize>>,
    actions: Vec<String>,
    observations: Vec<String>,
}

impl UpdateGraph {
    pub fn node_of(&self, bits: &[bool]) -> Option<usize> {
        self.nodes.binary_search_by(|n| vector_name(n).cmp(&vector_name(bits))).ok()
    }

    /// The graph as a system over actions, labeled by `σ`, with node names
    /// from [`vector_name`].
    pub fn to_srts(&self) -> StateRelabeledTS {
        let mut b = TsBuilder::new();
        for (s, row) in self.tau.iter().enumerate() {
            for (u, &t) in row.iter().enumerate() {
                b.edge(&vector_name(&self.nodes[s]), &self.actions[u], &vector_name(&self.nodes[t]));
            }
        }
        for n in &self.nodes {
            b.state(vector_name(n));
        }
        b.initial(&vector_name(&self.nodes[self.s0]));
        let ts = b.build();
        let labeling = Labeling::from_fn(&ts, |s, _| self.observations[self.sigma[s]].clone());
        StateRelabeledTS { system: ts, labeling }
    }
}

pub fn build_update_graph(m: &MooreMachine) -> Result<UpdateGraph, DbiError> {
    let classes = enumerate_test_classes(m);
    let n = m.ext.num_states();
    let xi: Vec<Vec<bool>> = (0..n).map(|x| success_vector(&classes, x)).collect();
    let mut nodes = xi.clone();
    nodes.sort_by_key(|v| vector_name(v));
    nodes.dedup();
    let find = |v: &[bool]| nodes.binary_search_by(|n| vector_name(n).cmp(&vector_name(v))).ok();
    let mut sigma: Vec<Option<(usize, usize)>> = alloc::vec![None; nodes.len()];
    for x in 0..n {
        let s = find(&xi[x]).unwrap();
        match sigma[s] {
            Some((y, other)) if y != m.h(x) => {
                return Err(DbiError::SigmaIllDefined(
                    m.ext.states()[other].clone(),
                    m.ext.states()[x].clone(),
                ))
            }
            Some(_) => {}
            None => sigma[s] = Some((m.h(x), x)),
        }
    }
    let alphas = (0..m.ext.actions().len())
        .map(|u| alpha(m, &classes, u))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tau = Vec::with_capacity(nodes.len());
    for node in &nodes {
        let mut row = Vec::with_capacity(alphas.len());
        for (u, a) in alphas.iter().enumerate() {
            let next: Vec<bool> = a.iter().map(|&k| node[k]).collect();
            let t = find(&next).ok_or_else(|| DbiError::ClosureViolation {
                class: 0,
                action: m.ext.actions()[u].to_string(),
            })?;
            row.push(t);
        }
        tau.push(row);
    }
    let s0 = find(&xi[m.x0]).unwrap();
    Ok(UpdateGraph {
        classes,
        sigma: sigma.into_iter().map(|s| s.unwrap().0).collect(),
        nodes,
        tau,
        s0,
        alphas,
        actions: m.ext.actions().to_vec(),
        observations: m.ext.observations().to_vec(),
    })
}

/// Checks that `ξ` is a rooted isomorphism from the machine onto `g`:
/// injective, `τ_u ∘ ξ = ξ ∘ f_u`, `σ ∘ ξ = h` and `ξ(x_0) = s_0`.
pub fn check_isomorphism(m: &MooreMachine, g: &UpdateGraph) -> Result<bool, DbiError> {
    let n = m.ext.num_states();
    let xi: Vec<Vec<bool>> = (0..n).map(|x| success_vector(&g.classes, x)).collect();
    let mut owner: BTreeMap<&[bool], usize> = BTreeMap::new();
    for x in 0..n {
        if let Some(&other) = owner.get(xi[x].as_slice()) {
            return Err(DbiError::NotReduced(
                m.ext.states()[other].clone(),
                m.ext.states()[x].clone(),
            ));
        }
        owner.insert(&xi[x], x);
    }
    if owner.len() != g.nodes.len() {
        return Ok(false);
    }
    let node = |x: usize| g.node_of(&xi[x]);
    for x in 0..n {
        let Some(s) = node(x) else { return Ok(false) };
        if g.sigma[s] != m.h(x) {
            return Ok(false);
        }
        for u in 0..m.ext.actions().len() {
            if Some(g.tau[s][u]) != node(m.f(x, u)) {
                return Ok(false);
            }
        }
    }
    Ok(node(m.x0) == Some(g.s0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn swap() -> MooreMachine {
        let ext = ExternalSystem::from_fn(
            ["a".to_string(), "b".to_string()],
            ["u".to_string()],
            |x, _| (if x == "a" { "b" } else { "a" }).to_string(),
            |x| (if x == "a" { "0" } else { "1" }).to_string(),
        )
        .unwrap();
        MooreMachine::new(ext, 0).unwrap()
    }

    #[test]
    fn swap_machine() {
        let m = swap();
        let classes = enumerate_test_classes(&m);
        assert_eq!(classes.len(), 2);
        assert_eq!(success_vector(&classes, 0), vec![true, false]);
        assert_eq!(success_vector(&classes, 1), vec![false, true]);
        assert_eq!(alpha(&m, &classes, 0).unwrap(), vec![1, 0]);
        let g = build_update_graph(&m).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert!(check_isomorphism(&m, &g).unwrap());
        assert!(crate::iso::isomorphic(&g.to_srts(), &m.to_srts()).is_some());
    }

    #[test]
    fn duplicates_collapse() {
        let ext = ExternalSystem::from_fn(
            ["a", "a2", "b", "b2"].map(String::from),
            ["u".to_string()],
            |x, _| (if x.starts_with('a') { "b" } else { "a2" }).to_string(),
            |x| (if x.starts_with('a') { "0" } else { "1" }).to_string(),
        )
        .unwrap();
        let m = MooreMachine::new(ext, 0).unwrap();
        let g = build_update_graph(&m).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert!(matches!(check_isomorphism(&m, &g), Err(DbiError::NotReduced(..))));
    }
}
