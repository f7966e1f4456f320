//! LEARN with experts: a pool of LEARN instances over a grid of
//! (step size, radius) pairs, mixed by exponential weights whose decay is
//! gated by the smallest `η` across the pool.
//!
//! Weights are kept in the log domain; over thousands of rounds the linear
//! weights underflow long before their ratios stop mattering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{learn_step_from, LearnerState, Radius};
use crate::loss::{LearnParams, RoundLoss, SideInfo};

/// The product grid of step sizes and radii.
///
/// Step sizes are `2^i/√T` for `i = 1..=⌊log₂ A_max⌋`, radii `ε 2^j / T` for
/// `j = 1..=T`. Radii that overflow `f64` become unbounded; they are distinct
/// grid points and are kept as separate experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertGrid {
    pub a_max: f64,
    pub epsilon: f64,
    pub horizon: usize,
    pub step_sizes: Vec<f64>,
    pub radii: Vec<Radius>,
}

impl ExpertGrid {
    pub fn build(a_max: f64, epsilon: f64, horizon: usize) -> Result<Self> {
        if !(a_max >= 2.0) {
            return Err(Error::invalid(format!("A_max must be >= 2, got {a_max}")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        if horizon == 0 {
            return Err(Error::invalid("T must be >= 1"));
        }
        let sqrt_t = (horizon as f64).sqrt();
        let t = horizon as f64;

        let mut step_sizes = Vec::new();
        let mut scale = 2.0;
        while scale <= a_max {
            step_sizes.push(scale / sqrt_t);
            scale *= 2.0;
        }

        // min(ε2^j/T, ε2^T/T) over j = 1..=T only caps at j = T itself
        let radii = (1..=horizon)
            .map(|j| {
                let r = epsilon * (j as f64).exp2() / t;
                Radius::from(Some(r))
            })
            .collect::<Vec<_>>();

        Ok(ExpertGrid {
            a_max,
            epsilon,
            horizon,
            step_sizes,
            radii,
        })
    }

    pub fn len(&self) -> usize {
        self.step_sizes.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper bound `T log₂ A_max` on the number of experts.
    pub fn size_bound(&self) -> f64 {
        self.horizon as f64 * self.a_max.log2()
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, Radius)> + '_ {
        self.step_sizes
            .iter()
            .flat_map(move |&a| self.radii.iter().map(move |&r| (a, r)))
    }
}

/// `√(8 ln N / (T ν²))`
pub fn beta_default(n_experts: usize, horizon: usize, nu: f64) -> Result<f64> {
    if n_experts < 2 {
        return Err(Error::invalid(format!(
            "default beta needs at least 2 experts, got {n_experts}"
        )));
    }
    if horizon == 0 || !(nu > 0.0) {
        return Err(Error::invalid("T must be >= 1 and nu > 0"));
    }
    Ok((8.0 * (n_experts as f64).ln() / (horizon as f64 * nu * nu)).sqrt())
}

#[derive(Debug, Clone)]
pub struct ExpertPool {
    pub grid: ExpertGrid,
    pub states: Vec<LearnerState>,
    pub log_weights: Vec<f64>,
    pub beta: f64,
    pub params: LearnParams,
}

impl ExpertPool {
    /// All experts start at the origin with unit weight.
    pub fn new(grid: ExpertGrid, dim: usize, params: LearnParams, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
        }
        let states = grid
            .entries()
            .map(|(alpha, radius)| LearnerState::zeros(dim, radius, alpha))
            .collect::<Result<Vec<_>>>()?;
        if states.is_empty() {
            return Err(Error::invalid("expert grid is empty"));
        }
        let log_weights = vec![0.0; states.len()];
        Ok(ExpertPool {
            grid,
            states,
            log_weights,
            beta,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Normalized weights `ρ/Z`, computed through log-sum-exp.
    pub fn normalized_weights(&self) -> Vec<f64> {
        normalized(&self.log_weights)
    }

    /// The weighted average of the experts' actions.
    pub fn aggregate_action(&self) -> Vec<f64> {
        let w = self.normalized_weights();
        let dim = self.states[0].theta.len();
        let mut out = vec![0.0; dim];
        for (wi, st) in w.iter().zip(&self.states) {
            if *wi == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(&st.theta) {
                *o += wi * t;
            }
        }
        out
    }

    /// One round: query every expert's loss, advance every expert with its own
    /// LEARN update, then decay each log-weight by `β η̃ f(θ^τ)` with `η̃` the
    /// minimum gate across the pool. Returns `η̃`.
    pub fn pool_step(&mut self, s: &SideInfo, loss: &RoundLoss) -> Result<f64> {
        let mut f_values = Vec::with_capacity(self.states.len());
        for st in &mut self.states {
            let (f, grad) = loss.value_and_grad(s, &st.theta)?;
            learn_step_from(st, f, &grad, &self.params)?;
            f_values.push(f);
        }
        let eta_tilde = f_values
            .iter()
            .map(|&f| self.params.eta_unchecked(f))
            .fold(f64::INFINITY, f64::min);
        for (lw, f) in self.log_weights.iter_mut().zip(&f_values) {
            *lw -= self.beta * eta_tilde * f;
        }
        Ok(eta_tilde)
    }

    pub fn step(&mut self, s: &SideInfo, loss: &RoundLoss) -> Result<()> {
        self.pool_step(s, loss).map(|_| ())
    }
}

pub(crate) fn normalized(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}
