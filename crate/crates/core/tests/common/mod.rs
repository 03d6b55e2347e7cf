//! Oracles and generators shared by the integration tests. Everything here
//! is computed from definitions, without the library's algorithms.
#![allow(dead_code)]

use std::collections::BTreeMap;

use minbrain_core::external::ExternalSystem;
use minbrain_core::prob::ProbModel;
use minbrain_core::{Labeling, StateRelabeledTS, TransitionSystem};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn state_name(i: usize) -> String {
    format!("s{i}")
}

/// A deterministic system on `n` states and `k` labels where each edge is
/// present with probability `density`, plus a labeling with at most
/// `values` distinct values.
pub fn random_system(rng: &mut StdRng, n: usize, k: usize, density: f64, values: usize) -> StateRelabeledTS {
    let states: Vec<String> = (0..n).map(state_name).collect();
    let labels: Vec<String> = (0..k).map(|l| ((b'a' + l as u8) as char).to_string()).collect();
    let mut edges = Vec::new();
    for s in &states {
        for l in &labels {
            if rng.random_bool(density) {
                edges.push((s.clone(), l.clone(), states[rng.random_range(0..n)].clone()));
            }
        }
    }
    let ts = TransitionSystem::new(states, labels, edges).unwrap();
    let labeling = Labeling::from_values((0..n).map(|_| format!("v{}", rng.random_range(0..values))).collect());
    StateRelabeledTS::new(ts, labeling).unwrap()
}

pub fn random_full_system(rng: &mut StdRng) -> StateRelabeledTS {
    let n = rng.random_range(1..=8);
    let k = rng.random_range(1..=3);
    let v = rng.random_range(1..=3);
    random_system(rng, n, k, 1.0, v)
}

/// Restricted growth string: block ids by first occurrence.
pub fn canonical(blocks: &[usize]) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    blocks
        .iter()
        .map(|b| {
            let next = ids.len();
            *ids.entry(*b).or_insert(next)
        })
        .collect()
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max + 1 {
            prefix.push(b);
            go(prefix, max.max(b), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    go(&mut prefix, 0, n, &mut out);
    out
}

/// Sufficiency from the definition: equal blocks and a shared edge label
/// force equal successor blocks.
pub fn sufficient(ts: &TransitionSystem, blocks: &[usize]) -> bool {
    for e in ts.edges() {
        for f in ts.edges() {
            if e.label == f.label && blocks[e.from] == blocks[f.from] && blocks[e.to] != blocks[f.to] {
                return false;
            }
        }
    }
    true
}

/// Every block of `fine` lies inside a block of `coarse`.
pub fn refines(fine: &[usize], coarse: &[usize]) -> bool {
    let mut map = BTreeMap::new();
    fine.iter()
        .zip(coarse)
        .all(|(f, c)| *map.entry(*f).or_insert(*c) == *c)
}

/// The coarsest sufficient refinement of the labeling, by enumerating the
/// partition lattice. `None` if the sufficient refinements have no greatest
/// element.
pub fn lattice_msr(srts: &StateRelabeledTS) -> Option<Vec<usize>> {
    let n = srts.system.num_states();
    let label_blocks: Vec<usize> = {
        let mut ids = BTreeMap::new();
        (0..n)
            .map(|s| {
                let next = ids.len();
                *ids.entry(srts.label_of(s).to_string()).or_insert(next)
            })
            .collect()
    };
    let candidates: Vec<Vec<usize>> = set_partitions(n)
        .into_iter()
        .filter(|p| refines(p, &label_blocks) && sufficient(&srts.system, p))
        .collect();
    candidates
        .iter()
        .find(|top| candidates.iter().all(|p| refines(p, top)))
        .cloned()
}

/// Successor of `s` under label `l`, scanning the edge list.
pub fn succ(ts: &TransitionSystem, s: usize, l: usize) -> Option<usize> {
    ts.edges().iter().find(|e| e.from == s && e.label == l).map(|e| e.to)
}

/// Deterministic when no state has two different successors on a label.
pub fn deterministic(ts: &TransitionSystem) -> bool {
    ts.edges()
        .iter()
        .all(|e| ts.edges().iter().all(|f| !(e.from == f.from && e.label == f.label && e.to != f.to)))
}

/// Random disturbance-free Moore machine.
pub fn random_moore(rng: &mut StdRng, max_states: usize) -> ExternalSystem {
    let n = rng.random_range(1..=max_states);
    let nu = rng.random_range(1..=3);
    let ny = rng.random_range(1..=3);
    let states: Vec<String> = (0..n).map(state_name).collect();
    let actions: Vec<String> = (0..nu).map(|u| format!("u{u}")).collect();
    let mut f = BTreeMap::new();
    let mut h = BTreeMap::new();
    for s in &states {
        for a in &actions {
            f.insert((s.clone(), a.clone()), states[rng.random_range(0..n)].clone());
        }
        h.insert(s.clone(), format!("y{}", rng.random_range(0..ny)));
    }
    ExternalSystem::new(states, actions, &f, &h).unwrap()
}

/// A random distribution of length `n` with at most `support` nonzero
/// entries and denominators dividing `12`.
pub fn random_distribution(rng: &mut StdRng, n: usize, support: usize) -> Vec<BigRational> {
    let mut weights = vec![0i64; n];
    let k = support.min(n).max(1);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    for &i in &idx[..k] {
        weights[i] = rng.random_range(1..=4);
    }
    let total: i64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| BigRational::new(w.into(), total.into()))
        .collect()
}

pub fn random_prob_model(
    rng: &mut StdRng,
    max_states: usize,
    max_actions: usize,
    max_observations: usize,
    support: usize,
) -> ProbModel<BigRational> {
    let nx = rng.random_range(1..=max_states);
    let nu = rng.random_range(1..=max_actions);
    let ny = rng.random_range(1..=max_observations);
    let states = (0..nx).map(state_name).collect();
    let actions = (0..nu).map(|u| format!("u{u}")).collect();
    let observations = (0..ny).map(|y| format!("y{y}")).collect();
    let trans = (0..nx)
        .map(|_| (0..nu).map(|_| random_distribution(rng, nx, support)).collect())
        .collect();
    let obs = (0..nx).map(|_| random_distribution(rng, ny, support)).collect();
    let init = random_distribution(rng, nx, nx);
    ProbModel::new(states, actions, observations, trans, obs, init).unwrap()
}

/// Posteriors over the last state for every Bayes-filter history of
/// `1..=depth` observations, from explicit state trajectories: each
/// trajectory is carried with its joint weight and only summed at the end.
/// The first pair's action is a placeholder (index 0).
pub fn trajectory_posteriors(pm: &ProbModel<BigRational>, depth: usize) -> Vec<(Vec<(usize, usize)>, Vec<BigRational>)> {
    let (nx, nu, ny) = (pm.num_states(), pm.num_actions(), pm.num_observations());
    let mut out = Vec::new();
    // (history, trajectories as (last state, weight))
    let mut level: Vec<(Vec<(usize, usize)>, Vec<(usize, BigRational)>)> = Vec::new();
    for y in 0..ny {
        let trajs: Vec<(usize, BigRational)> = (0..nx)
            .map(|x| (x, &pm.init[x] * &pm.obs[x][y]))
            .filter(|(_, w)| !w.is_zero())
            .collect();
        if !trajs.is_empty() {
            level.push((vec![(0, y)], trajs));
        }
    }
    for k in 1..=depth {
        for (h, trajs) in &level {
            let total = trajs.iter().fold(BigRational::zero(), |a, (_, w)| a + w);
            let mut post = vec![BigRational::zero(); nx];
            for (x, w) in trajs {
                post[*x] += w / &total;
            }
            out.push((h.clone(), post));
        }
        if k == depth {
            break;
        }
        let mut next = Vec::new();
        for (h, trajs) in &level {
            for u in 0..nu {
                for y in 0..ny {
                    let mut t2 = Vec::new();
                    for (x, w) in trajs {
                        for x2 in 0..nx {
                            let p = &pm.trans[*x][u][x2] * &pm.obs[x2][y];
                            if !p.is_zero() {
                                t2.push((x2, w * p));
                            }
                        }
                    }
                    if !t2.is_empty() {
                        let mut h2 = h.clone();
                        h2.push((u, y));
                        next.push((h2, t2));
                    }
                }
            }
        }
        level = next;
    }
    out
}

/// Unnormalized forward step: `α'(x') = P(y|x')·Σ_x P(x'|x,u)·α(x)`.
pub fn forward(pm: &ProbModel<BigRational>, alpha: &[BigRational], u: usize, y: usize) -> Vec<BigRational> {
    (0..pm.num_states())
        .map(|to| {
            let inflow = alpha
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |a, (x, w)| a + w * &pm.trans[x][u][to]);
            inflow * &pm.obs[to][y]
        })
        .collect()
}

/// `v(x)`: probability that the test `(u_1,y_1)…(u_m,y_m)` succeeds from
/// `x`, by summing over the state paths it can take.
pub fn success_probabilities(pm: &ProbModel<BigRational>, test: &[(usize, usize)]) -> Vec<BigRational> {
    fn paths(pm: &ProbModel<BigRational>, x: usize, test: &[(usize, usize)]) -> BigRational {
        match test.split_first() {
            None => BigRational::one(),
            Some((&(u, y), rest)) => (0..pm.num_states()).fold(BigRational::zero(), |a, to| {
                let p = &pm.trans[x][u][to] * &pm.obs[to][y];
                if p.is_zero() {
                    a
                } else {
                    a + p * paths(pm, to, rest)
                }
            }),
        }
    }
    (0..pm.num_states()).map(|x| paths(pm, x, test)).collect()
}
