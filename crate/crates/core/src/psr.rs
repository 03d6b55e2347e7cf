//! Linear predictive state representations of finite probabilistic models.
//!
//! Histories and tests are sequences of `(u, y)` index pairs: apply `u`,
//! then observe `y` at the new state. The empty history stands for the
//! initial distribution.

use alloc::string::String;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::PsrError;
use crate::linalg::{solve, Basis};
use crate::prob::{ProbModel, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Test {
    pub pairs: Vec<(usize, usize)>,
}

impl Test {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `u:y.u:y` by names.
    pub fn name<T>(&self, pm: &ProbModel<T>) -> String {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|&(u, y)| alloc::format!("{}:{}", pm.actions[u], pm.observations[y]))
            .collect();
        parts.join(".")
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Unnormalized `b'(x') = P(y|x')·Σ_x P(x'|x,u)·b(x)`.
fn propagate<T: Scalar>(pm: &ProbModel<T>, b: &[T], u: usize, y: usize) -> Vec<T> {
    let n = pm.num_states();
    let mut out = alloc::vec![T::zero(); n];
    for (x, bx) in b.iter().enumerate() {
        if bx.is_zero() {
            continue;
        }
        for (to, p) in pm.trans[x][u].iter().enumerate() {
            out[to] = out[to].clone() + p.clone() * bx.clone();
        }
    }
    for (to, v) in out.iter_mut().enumerate() {
        *v = v.clone() * pm.obs[to][y].clone();
    }
    out
}

/// The distribution over the current state after `history`.
pub fn condition<T: Scalar>(pm: &ProbModel<T>, history: &[(usize, usize)]) -> Result<Vec<T>, PsrError> {
    let mut b = pm.init.clone();
    for &(u, y) in history {
        let next = propagate(pm, &b, u, y);
        let total = next.iter().cloned().fold(T::zero(), |a, c| a + c);
        if total.is_zero() {
            return Err(PsrError::ZeroProbabilityHistory);
        }
        b = next.into_iter().map(|v| v / total.clone()).collect();
    }
    Ok(b)
}

/// `v_t(x)`: the probability that `t` succeeds from state `x`.
pub fn test_vector<T: Scalar>(pm: &ProbModel<T>, t: &Test) -> Vec<T> {
    let n = pm.num_states();
    let mut v = alloc::vec![T::one(); n];
    for &(u, y) in t.pairs.iter().rev() {
        v = prepend(pm, &v, u, y);
    }
    v
}

/// `v_{(u,y)⌢t}` from `v_t`.
fn prepend<T: Scalar>(pm: &ProbModel<T>, v: &[T], u: usize, y: usize) -> Vec<T> {
    (0..pm.num_states())
        .map(|x| {
            pm.trans[x][u]
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (to, p)| {
                    acc + p.clone() * pm.obs[to][y].clone() * v[to].clone()
                })
        })
        .collect()
}

/// `P(ỹ^t | ũ^t, η)` by forward propagation.
pub fn exact_test_probability<T: Scalar>(
    pm: &ProbModel<T>,
    history: &[(usize, usize)],
    t: &Test,
) -> Result<T, PsrError> {
    let mut b = condition(pm, history)?;
    for &(u, y) in &t.pairs {
        b = propagate(pm, &b, u, y);
    }
    Ok(b.into_iter().fold(T::zero(), |a, c| a + c))
}

/// `Q(η)`: the success probabilities of `core` after `history`.
pub fn prediction_vector<T: Scalar>(
    pm: &ProbModel<T>,
    history: &[(usize, usize)],
    core: &[Test],
) -> Result<Vec<T>, PsrError> {
    let b = condition(pm, history)?;
    Ok(core.iter().map(|t| dot(&b, &test_vector(pm, t))).collect())
}

/// A linear PSR: `P(t|η) = r_t · Q(η)` for the one-step tests and their
/// extensions by core tests.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPSR<T> {
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub core_tests: Vec<Test>,
    pub m0: Vec<T>,
    /// `r_uy[u][y]`.
    pub r_uy: Vec<Vec<Vec<T>>>,
    /// `r_uyt[u][y][i]` for the extension `(u,y)⌢t_i`.
    pub r_uyt: Vec<Vec<Vec<Vec<T>>>>,
}

impl<T: Scalar> LinearPSR<T> {
    /// `f_{(u,y)}(p) = r_{(u,y)} · p`.
    pub fn predict(&self, p: &[T], u: usize, y: usize) -> T {
        dot(&self.r_uy[u][y], p)
    }

    pub fn map<S>(&self, f: impl Fn(&T) -> S) -> LinearPSR<S> {
        let vmap = |v: &Vec<T>| v.iter().map(&f).collect::<Vec<S>>();
        LinearPSR {
            actions: self.actions.clone(),
            observations: self.observations.clone(),
            core_tests: self.core_tests.clone(),
            m0: vmap(&self.m0),
            r_uy: self.r_uy.iter().map(|r| r.iter().map(vmap).collect()).collect(),
            r_uyt: self
                .r_uyt
                .iter()
                .map(|r| r.iter().map(|s| s.iter().map(vmap).collect()).collect())
                .collect(),
        }
    }
}

impl LinearPSR<BigRational> {
    pub fn to_f64(&self) -> LinearPSR<f64> {
        self.map(f64::from_rational)
    }
}

/// `p'_i = (r_{(u,y)⌢t_i} · p) / (r_{(u,y)} · p)`.
pub fn psr_update<T: Scalar>(psr: &LinearPSR<T>, p: &[T], u: usize, y: usize) -> Result<Vec<T>, PsrError> {
    let denom = psr.predict(p, u, y);
    if denom.is_close(&T::zero()) || denom < T::zero() {
        return Err(PsrError::ImpossibleObservation);
    }
    Ok(psr.r_uyt[u][y].iter().map(|r| dot(r, p) / denom.clone()).collect())
}

/// Iterates [`psr_update`] from `m0`.
pub fn psr_run<T: Scalar>(psr: &LinearPSR<T>, history: &[(usize, usize)]) -> Result<Vec<T>, PsrError> {
    let mut p = psr.m0.clone();
    for &(u, y) in history {
        p = psr_update(psr, &p, u, y)?;
    }
    Ok(p)
}

fn all_pairs<T: Scalar>(pm: &ProbModel<T>) -> Vec<(usize, usize)> {
    let ny = pm.num_observations();
    (0..pm.num_actions()).flat_map(|u| (0..ny).map(move |y| (u, y))).collect()
}

/// Finds core tests among tests of length `≤ max_len` and solves for the
/// weights.
///
/// The outcome matrix has a row per positive-probability history of length
/// `≤ max_len` and a column per test. Its entry is `b_η · v_t`, so rows
/// whose beliefs are linearly dependent are dependent too; elimination runs
/// on a belief-spanning subset of histories, which has the same rank and the
/// same solutions. Columns are taken greedily in order of length, then
/// lexicographically.
pub fn discover_core_tests(pm: &ProbModel<BigRational>, max_len: usize) -> Result<LinearPSR<BigRational>, PsrError> {
    if max_len == 0 {
        return Err(PsrError::ZeroTestLength);
    }
    let pairs = all_pairs(pm);
    // Belief-spanning histories.
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut span = Basis::new();
    let mut frontier = alloc::vec![pm.init.clone()];
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for b in &frontier {
            if span.insert(b) {
                rows.push(b.clone());
            }
            for &(u, y) in &pairs {
                let nb = propagate(pm, b, u, y);
                if nb.iter().any(|v| !v.is_zero()) {
                    next.push(nb);
                }
            }
        }
        if span.rank() == pm.num_states() {
            break;
        }
        frontier = next;
    }
    let column = |v: &[BigRational]| -> Vec<BigRational> { rows.iter().map(|b| dot(b, v)).collect() };

    let mut core = Vec::new();
    let mut core_cols = Vec::new();
    let mut cols = Basis::new();
    let mut level: Vec<(Test, Vec<BigRational>)> = alloc::vec![(Test { pairs: Vec::new() }, alloc::vec![BigRational::from_integer(1.into()); pm.num_states()])];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for &(u, y) in &pairs {
            for (t, v) in &level {
                let mut tp = alloc::vec![(u, y)];
                tp.extend_from_slice(&t.pairs);
                next.push((Test { pairs: tp }, prepend(pm, v, u, y)));
            }
        }
        next.sort_by(|a, b| a.0.cmp(&b.0));
        for (t, v) in &next {
            let c = column(v);
            if cols.insert(&c) {
                core.push(t.clone());
                core_cols.push(c);
            }
        }
        level = next;
    }
    let core_vectors: Vec<Vec<BigRational>> = core.iter().map(|t| test_vector(pm, t)).collect();
    let weights = |v: &[BigRational]| {
        solve(&core_cols, &column(v)).ok_or(PsrError::RankDeficientExtensions {
            max_len,
            needed: max_len + 1,
        })
    };
    let (nu, ny) = (pm.num_actions(), pm.num_observations());
    let mut r_uy = alloc::vec![alloc::vec![Vec::new(); ny]; nu];
    let mut r_uyt = alloc::vec![alloc::vec![Vec::new(); ny]; nu];
    let ones = alloc::vec![BigRational::from_integer(1.into()); pm.num_states()];
    for &(u, y) in &pairs {
        r_uy[u][y] = weights(&prepend(pm, &ones, u, y))?;
        r_uyt[u][y] = core_vectors
            .iter()
            .map(|v| weights(&prepend(pm, v, u, y)))
            .collect::<Result<Vec<_>, _>>()?;
    }
    let m0 = core_vectors.iter().map(|v| dot(&pm.init, v)).collect();
    Ok(LinearPSR {
        actions: pm.actions.clone(),
        observations: pm.observations.clone(),
        core_tests: core,
        m0,
        r_uy,
        r_uyt,
    })
}

/// All histories of length `≤ depth` with positive probability, shortest
/// first.
pub fn consistent_histories<T: Scalar>(pm: &ProbModel<T>, depth: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs = all_pairs(pm);
    let mut out = alloc::vec![Vec::new()];
    let mut level: Vec<(Vec<(usize, usize)>, Vec<T>)> = alloc::vec![(Vec::new(), pm.init.clone())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (h, b) in &level {
            for &(u, y) in &pairs {
                let nb = propagate(pm, b, u, y);
                if nb.iter().any(|v| !v.is_zero()) {
                    let mut h2 = h.clone();
                    h2.push((u, y));
                    out.push(h2.clone());
                    next.push((h2, nb));
                }
            }
        }
        level = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn noisy() -> ProbModel<BigRational> {
        let s = |x: &str| x.to_string();
        ProbModel::new(
            vec![s("a"), s("b")],
            vec![s("u")],
            vec![s("0"), s("1")],
            vec![vec![vec![r(3, 4), r(1, 4)]], vec![vec![r(1, 3), r(2, 3)]]],
            vec![vec![r(4, 5), r(1, 5)], vec![r(1, 5), r(4, 5)]],
            vec![r(1, 2), r(1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn one_step_closed_form() {
        let pm = noisy();
        let t = Test { pairs: vec![(0, 0)] };
        // Σ_x b0(x) Σ_x' P(x'|x,u) P(y|x')
        let want = r(1, 2) * (r(3, 4) * r(4, 5) + r(1, 4) * r(1, 5)) + r(1, 2) * (r(1, 3) * r(4, 5) + r(2, 3) * r(1, 5));
        assert_eq!(exact_test_probability(&pm, &[], &t).unwrap(), want);
    }

    #[test]
    fn discovered_psr_replays_oracle() {
        let pm = noisy();
        let psr = discover_core_tests(&pm, 3).unwrap();
        for h in consistent_histories(&pm, 5) {
            assert_eq!(psr_run(&psr, &h).unwrap(), prediction_vector(&pm, &h, &psr.core_tests).unwrap());
        }
    }

    #[test]
    fn iid_observations_need_one_test() {
        let s = |x: &str| x.to_string();
        let pm = ProbModel::new(
            vec![s("a"), s("b")],
            vec![s("u")],
            vec![s("0"), s("1")],
            vec![vec![vec![r(1, 2), r(1, 2)]], vec![vec![r(1, 2), r(1, 2)]]],
            vec![vec![r(1, 3), r(2, 3)], vec![r(1, 3), r(2, 3)]],
            vec![r(1, 2), r(1, 2)],
        )
        .unwrap();
        assert_eq!(discover_core_tests(&pm, 3).unwrap().core_tests.len(), 1);
    }
}
