//! Finite probabilistic models `P(x'|x,u)`, `P(y|x)` and an initial
//! distribution, over exact rationals or floats.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

use crate::error::{CoupledError, PsrError};
use crate::external::{DisturbanceModel, ExternalSystem};

/// Probability scalars. Rationals compare exactly, floats within `1e-12`.
pub trait Scalar: Clone + Debug + PartialOrd + Num {
    fn from_rational(r: &BigRational) -> Self;
    fn is_close(&self, other: &Self) -> bool;
}

impl Scalar for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn is_close(&self, other: &Self) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn is_close(&self, other: &Self) -> bool {
        let d = self - other;
        -1e-12 <= d && d <= 1e-12
    }
}

/// `trans[x][u][x'] = P(x'|x,u)`, `obs[x][y] = P(y|x)`, `init[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbModel<T> {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub trans: Vec<Vec<Vec<T>>>,
    pub obs: Vec<Vec<T>>,
    pub init: Vec<T>,
}

fn is_distribution<T: Scalar>(row: &[T]) -> bool {
    let mut total = T::zero();
    for p in row {
        if *p < T::zero() {
            return false;
        }
        total = total + p.clone();
    }
    total.is_close(&T::one())
}

impl<T: Scalar> ProbModel<T> {
    /// Validates shapes and that every row is a distribution.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
        trans: Vec<Vec<Vec<T>>>,
        obs: Vec<Vec<T>>,
        init: Vec<T>,
    ) -> Result<Self, PsrError> {
        let (nx, nu, ny) = (states.len(), actions.len(), observations.len());
        let bad = |m: &str| Err(PsrError::InvalidModel(m.into()));
        if nx == 0 || nu == 0 || ny == 0 {
            return bad("empty state, action or observation set");
        }
        if trans.len() != nx
            || trans.iter().any(|r| r.len() != nu || r.iter().any(|d| d.len() != nx))
            || obs.len() != nx
            || obs.iter().any(|d| d.len() != ny)
            || init.len() != nx
        {
            return bad("table shape does not match the sets");
        }
        if !trans.iter().flatten().all(|d| is_distribution(d)) {
            return bad("a transition row is not a distribution");
        }
        if !obs.iter().all(|d| is_distribution(d)) {
            return bad("an observation row is not a distribution");
        }
        if !is_distribution(&init) {
            return bad("initial distribution does not sum to 1");
        }
        Ok(ProbModel {
            states,
            actions,
            observations,
            trans,
            obs,
            init,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn action_index(&self, u: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == u)
    }

    pub fn observation_index(&self, y: &str) -> Option<usize> {
        self.observations.iter().position(|a| a == y)
    }

    /// Converts every entry, e.g. rationals to floats.
    pub fn map<S>(&self, f: impl Fn(&T) -> S) -> ProbModel<S> {
        ProbModel {
            states: self.states.clone(),
            actions: self.actions.clone(),
            observations: self.observations.clone(),
            trans: self
                .trans
                .iter()
                .map(|r| r.iter().map(|d| d.iter().map(&f).collect()).collect())
                .collect(),
            obs: self.obs.iter().map(|d| d.iter().map(&f).collect()).collect(),
            init: self.init.iter().map(&f).collect(),
        }
    }
}

impl ProbModel<BigRational> {
    pub fn to_f64(&self) -> ProbModel<f64> {
        self.map(f64::from_rational)
    }
}

impl ExternalSystem {
    /// Marginalizes the disturbances into kernels:
    /// `P(x'|x,u) = Σ_θ P(θ|x,u)·[f(x,u,θ) = x']` and likewise for `y`.
    /// Disturbance-free systems give 0/1 kernels.
    pub fn to_prob_model(&self, init: Vec<BigRational>) -> Result<ProbModel<BigRational>, CoupledError> {
        let (nx, nu, ny) = (self.num_states(), self.actions().len(), self.observations().len());
        let zero = BigRational::zero;
        let mut trans = alloc::vec![alloc::vec![alloc::vec![zero(); nx]; nu]; nx];
        let mut obs = alloc::vec![alloc::vec![zero(); ny]; nx];
        match self.disturbance() {
            None => {
                for x in 0..nx {
                    for u in 0..nu {
                        trans[x][u][self.f(x, u).unwrap()] = BigRational::from_integer(1.into());
                    }
                    obs[x][self.h(x).unwrap()] = BigRational::from_integer(1.into());
                }
            }
            Some(d) => {
                let DisturbanceModel::Probabilistic { theta, psi } = &d.model else {
                    return Err(CoupledError::Invalid(
                        "kernels need a probabilistic disturbance model".into(),
                    ));
                };
                for x in 0..nx {
                    for u in 0..nu {
                        for (t, p) in theta[x][u].iter().enumerate() {
                            let to = d.f[x][u][t];
                            trans[x][u][to] = &trans[x][u][to] + p;
                        }
                    }
                    for (k, p) in psi[x].iter().enumerate() {
                        let y = d.h[x][k];
                        obs[x][y] = &obs[x][y] + p;
                    }
                }
            }
        }
        ProbModel::new(
            self.states().to_vec(),
            self.actions().to_vec(),
            self.observations().to_vec(),
            trans,
            obs,
            init,
        )
        .map_err(|e| CoupledError::Invalid(alloc::format!("{e}")))
    }
}
