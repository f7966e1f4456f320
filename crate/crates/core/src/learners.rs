//! Projected first-order learners sharing one step interface.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::ExpertPool;
use crate::linalg::{axpy, norm};
use crate::loss::{LearnParams, RoundLoss, SideInfo};

/// Radius of the Euclidean ball the iterates live in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Radius {
    Ball(f64),
    Unbounded,
}

impl Radius {
    /// Infinite radii (e.g. from overflowing grid values) are unbounded.
    pub fn new(r: f64) -> Result<Self> {
        if r.is_infinite() && r > 0.0 {
            return Ok(Radius::Unbounded);
        }
        if !(r > 0.0) {
            return Err(Error::invalid(format!("radius must be > 0, got {r}")));
        }
        Ok(Radius::Ball(r))
    }

    pub fn as_option(self) -> Option<f64> {
        match self {
            Radius::Ball(r) => Some(r),
            Radius::Unbounded => None,
        }
    }
}

impl From<Option<f64>> for Radius {
    fn from(r: Option<f64>) -> Self {
        match r {
            Some(r) if r.is_finite() => Radius::Ball(r),
            _ => Radius::Unbounded,
        }
    }
}

impl From<Radius> for Option<f64> {
    fn from(r: Radius) -> Self {
        r.as_option()
    }
}

/// Euclidean projection onto `{‖θ‖ ≤ radius}`.
pub fn project_ball(theta: &[f64], radius: Radius) -> Result<Vec<f64>> {
    let mut out = theta.to_vec();
    project_in_place(&mut out, radius)?;
    Ok(out)
}

pub(crate) fn project_in_place(theta: &mut [f64], radius: Radius) -> Result<()> {
    if let Radius::Ball(r) = radius {
        if !(r > 0.0) {
            return Err(Error::invalid(format!("radius must be > 0, got {r}")));
        }
        let n = norm(theta);
        if n > r {
            let c = r / n;
            theta.iter_mut().for_each(|v| *v *= c);
        }
    }
    Ok(())
}

/// Current action, domain radius and fixed step size of one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub theta: Vec<f64>,
    pub radius: Radius,
    pub step_size: f64,
}

impl LearnerState {
    pub fn new(theta: Vec<f64>, radius: Radius, step_size: f64) -> Result<Self> {
        if !(step_size > 0.0) || !step_size.is_finite() {
            return Err(Error::invalid(format!(
                "step size must be > 0, got {step_size}"
            )));
        }
        if let Radius::Ball(r) = radius {
            if !(r > 0.0) {
                return Err(Error::invalid(format!("radius must be > 0, got {r}")));
            }
            if norm(&theta) > r * (1.0 + 1e-12) {
                return Err(Error::invalid("initial action lies outside the domain"));
            }
        }
        Ok(LearnerState {
            theta,
            radius,
            step_size,
        })
    }

    /// State at the origin.
    pub fn zeros(dim: usize, radius: Radius, step_size: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], radius, step_size)
    }

    fn descend(&mut self, direction: &[f64], scale: f64) -> Result<()> {
        axpy(-self.step_size * scale, direction, &mut self.theta);
        project_in_place(&mut self.theta, self.radius)
    }
}

/// `θ ← Π(θ − α ∇f(θ))`
pub fn ogd_step(state: &mut LearnerState, s: &SideInfo, loss: &RoundLoss) -> Result<()> {
    let grad = loss.grad(s, &state.theta)?;
    state.descend(&grad, 1.0)
}

/// `θ ← Π(θ − α η(f(θ)) ∇f(θ))`
pub fn learn_step(
    state: &mut LearnerState,
    s: &SideInfo,
    loss: &RoundLoss,
    params: &LearnParams,
) -> Result<()> {
    let (f, grad) = loss.value_and_grad(s, &state.theta)?;
    learn_step_from(state, f, &grad, params)
}

/// LEARN update from an already evaluated `(f, ∇f)` at the current action.
pub(crate) fn learn_step_from(
    state: &mut LearnerState,
    f: f64,
    grad: &[f64],
    params: &LearnParams,
) -> Result<()> {
    let eta = params.eta(f)?;
    state.descend(grad, eta)
}

/// The `k` largest gradient norms seen on filtered rounds.
#[derive(Debug, Clone, Default)]
pub struct TopKFilter {
    k: usize,
    buffer: BinaryHeap<Reverse<OrderedFloat<f64>>>,
}

impl TopKFilter {
    pub fn new(k: usize) -> Self {
        TopKFilter {
            k,
            buffer: BinaryHeap::with_capacity(k),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn with_buffer(k: usize, norms: &[f64]) -> Self {
        let mut f = Self::new(k);
        for &n in norms.iter().take(k) {
            f.buffer.push(Reverse(OrderedFloat(n)));
        }
        f
    }

    pub fn buffer_min(&self) -> Option<f64> {
        self.buffer.peek().map(|r| r.0 .0)
    }

    pub fn buffer_sorted(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.buffer.iter().map(|r| r.0 .0).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Decide whether a round with gradient norm `n` is passed on to OGD,
    /// updating the buffer on filtered rounds. Returns `true` when filtered.
    pub fn admit(&mut self, n: f64) -> bool {
        if self.k == 0 {
            return false;
        }
        if self.buffer.len() < self.k {
            self.buffer.push(Reverse(OrderedFloat(n)));
            return true;
        }
        let min = self.buffer.peek().expect("full buffer").0 .0;
        if n < 2.0 * min {
            return false;
        }
        if n > min {
            self.buffer.pop();
            self.buffer.push(Reverse(OrderedFloat(n)));
        }
        true
    }
}

/// Budget handed to the uncertain variant: `⌊0.75 k⌋`.
pub fn uncertain_budget(k: usize) -> usize {
    3 * k / 4
}

/// One Top-k round: OGD update unless the filter flags the gradient norm.
/// Returns whether the round was filtered.
pub fn topk_filter_step(
    state: &mut LearnerState,
    filter: &mut TopKFilter,
    s: &SideInfo,
    loss: &RoundLoss,
) -> Result<bool> {
    let grad = loss.grad(s, &state.theta)?;
    if filter.admit(norm(&grad)) {
        return Ok(true);
    }
    state.descend(&grad, 1.0)?;
    Ok(false)
}

/// Constant step size `√((4D² + 6D V_T) / (ψ² T))` of the bounded-domain analysis.
pub fn theoretical_stepsize(
    radius: f64,
    path_length: f64,
    psi: f64,
    horizon: usize,
) -> Result<f64> {
    if !(radius > 0.0) || !(psi > 0.0) || horizon == 0 {
        return Err(Error::invalid(format!(
            "D, psi and T must be positive (D={radius}, psi={psi}, T={horizon})"
        )));
    }
    if !(path_length >= 0.0) {
        return Err(Error::invalid(format!(
            "V_T must be >= 0, got {path_length}"
        )));
    }
    Ok(
        ((4.0 * radius * radius + 6.0 * radius * path_length) / (psi * psi * horizon as f64))
            .sqrt(),
    )
}

/// Any of the learners the harness can drive.
#[derive(Debug, Clone)]
pub enum Learner {
    Ogd(LearnerState),
    Learn {
        state: LearnerState,
        params: LearnParams,
    },
    TopK {
        state: LearnerState,
        filter: TopKFilter,
    },
    Experts(Box<ExpertPool>),
}

impl Learner {
    /// The action played this round.
    pub fn action(&self) -> Vec<f64> {
        match self {
            Learner::Ogd(state) | Learner::Learn { state, .. } | Learner::TopK { state, .. } => {
                state.theta.clone()
            }
            Learner::Experts(pool) => pool.aggregate_action(),
        }
    }

    pub fn step(&mut self, s: &SideInfo, loss: &RoundLoss) -> Result<()> {
        match self {
            Learner::Ogd(state) => ogd_step(state, s, loss),
            Learner::Learn { state, params } => learn_step(state, s, loss, params),
            Learner::TopK { state, filter } => topk_filter_step(state, filter, s, loss).map(|_| ()),
            Learner::Experts(pool) => pool.step(s, loss),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn project_ball_examples() {
        assert_eq!(
            project_ball(&[3.0, 4.0], Radius::Ball(5.0)).unwrap(),
            vec![3.0, 4.0]
        );
        let p = project_ball(&[3.0, 4.0], Radius::Ball(1.0)).unwrap();
        assert_relative_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);
        assert_eq!(
            project_ball(&[3.0, 4.0], Radius::Unbounded).unwrap(),
            vec![3.0, 4.0]
        );
        assert!(project_ball(&[1.0], Radius::Ball(0.0)).is_err());
        assert!(Radius::new(-1.0).is_err());
        assert_eq!(Radius::new(f64::INFINITY).unwrap(), Radius::Unbounded);
    }

    fn ridge0_case() -> (SideInfo, RoundLoss) {
        (
            SideInfo::new(vec![1.0, 0.0], 0.0),
            RoundLoss::ridge(0.0).unwrap(),
        )
    }

    #[test]
    fn ogd_step_examples() {
        let (s, loss) = ridge0_case();
        let mut st = LearnerState::new(vec![1.0, 0.0], Radius::Unbounded, 0.5).unwrap();
        ogd_step(&mut st, &s, &loss).unwrap();
        assert_eq!(st.theta, vec![0.0, 0.0]);

        let mut st = LearnerState::new(vec![0.5, 0.0], Radius::Ball(0.5), 0.25).unwrap();
        ogd_step(&mut st, &s, &loss).unwrap();
        assert_eq!(st.theta, vec![0.25, 0.0]);

        let ridge2 = RoundLoss::ridge(2.0).unwrap();
        let mut st = LearnerState::new(vec![1.0, 0.0], Radius::Unbounded, 0.5).unwrap();
        ogd_step(&mut st, &SideInfo::new(vec![1.0, 0.0], 2.0), &ridge2).unwrap();
        assert_eq!(st.theta, vec![1.0, 0.0]);
    }

    #[test]
    fn learn_step_examples() {
        let (s, loss) = ridge0_case();
        let p = LearnParams::new(1.0, 1.0).unwrap();
        let mut st = LearnerState::new(vec![1.0, 0.0], Radius::Unbounded, 0.5).unwrap();
        learn_step(&mut st, &s, &loss, &p).unwrap();
        let eta = (-1f64).exp() / (1.0 + (-1f64).exp());
        assert_relative_eq!(st.theta[0], 1.0 - eta, max_relative = 1e-14);
        assert_relative_eq!(st.theta[0], 0.731059, epsilon = 1e-6);

        // huge loss: the gate closes
        let mut st = LearnerState::new(vec![1e3, 0.0], Radius::Unbounded, 0.5).unwrap();
        learn_step(&mut st, &s, &loss, &p).unwrap();
        assert_eq!(st.theta, vec![1e3, 0.0]);
    }

    #[test]
    fn topk_rule_examples() {
        let mut f = TopKFilter::new(0);
        assert!(!f.admit(1e9));

        let mut f = TopKFilter::with_buffer(1, &[5.0]);
        assert!(!f.admit(3.0));
        assert_eq!(f.buffer_sorted(), vec![5.0]);

        let mut f = TopKFilter::with_buffer(1, &[5.0]);
        assert!(f.admit(12.0));
        assert_eq!(f.buffer_sorted(), vec![12.0]);

        // tie at twice the minimum is filtered
        let mut f = TopKFilter::with_buffer(1, &[5.0]);
        assert!(f.admit(10.0));
        assert_eq!(f.buffer_sorted(), vec![10.0]);

        // warm-up: underfull buffer filters and records
        let mut f = TopKFilter::new(2);
        assert!(f.admit(0.1));
        assert!(f.admit(0.3));
        assert_eq!(f.buffer_sorted(), vec![0.1, 0.3]);
        assert!(!f.admit(0.15));
    }

    #[test]
    fn topk_step_skips_update_when_filtered() {
        let (s, loss) = ridge0_case();
        let mut st = LearnerState::new(vec![1.0, 0.0], Radius::Unbounded, 0.5).unwrap();
        let mut f = TopKFilter::new(1);
        assert!(topk_filter_step(&mut st, &mut f, &s, &loss).unwrap());
        assert_eq!(st.theta, vec![1.0, 0.0]);
        assert_eq!(f.buffer_sorted(), vec![2.0]);
        // next round: 2 < 2·2, so the gradient passes and OGD moves
        assert!(!topk_filter_step(&mut st, &mut f, &s, &loss).unwrap());
        assert_eq!(st.theta, vec![0.0, 0.0]);
        assert_eq!(f.buffer_sorted(), vec![2.0]);
    }

    #[test]
    fn uncertain_budget_floors() {
        assert_eq!(uncertain_budget(0), 0);
        assert_eq!(uncertain_budget(1), 0);
        assert_eq!(uncertain_budget(100), 75);
        assert_eq!(uncertain_budget(464), 348);
        assert_eq!(uncertain_budget(2500), 1875);
    }

    #[test]
    fn theoretical_stepsize_examples() {
        assert_relative_eq!(theoretical_stepsize(1.0, 0.0, 2.0, 4).unwrap(), 0.5);
        assert_relative_eq!(theoretical_stepsize(1.0, 1.0, 1.0, 10).unwrap(), 1.0);
        let (d, psi, t) = (3.0, 7.0, 50);
        assert_relative_eq!(
            theoretical_stepsize(d, 0.0, psi, t).unwrap(),
            2.0 * d / (psi * (t as f64).sqrt()),
            max_relative = 1e-14
        );
        assert!(theoretical_stepsize(0.0, 0.0, 1.0, 1).is_err());
        assert!(theoretical_stepsize(1.0, 0.0, 1.0, 0).is_err());
        assert!(theoretical_stepsize(1.0, 0.0, -1.0, 1).is_err());
    }

    fn arb_round() -> impl Strategy<Value = (SideInfo, RoundLoss, Vec<f64>)> {
        (1usize..5, any::<bool>(), -3.0f64..0.0).prop_flat_map(|(d, ridge, ll)| {
            (
                prop::collection::vec(-4.0f64..4.0, d),
                -3.0f64..3.0,
                prop::collection::vec(-10.0f64..10.0, d),
            )
                .prop_map(move |(x, y, theta)| {
                    let lambda = 10f64.powf(ll);
                    if ridge {
                        (
                            SideInfo::new(x, y),
                            RoundLoss::ridge(lambda).unwrap(),
                            theta,
                        )
                    } else {
                        let y = if y >= 0.0 { 1.0 } else { -1.0 };
                        (SideInfo::new(x, y), RoundLoss::svm(lambda).unwrap(), theta)
                    }
                })
        })
    }

    proptest! {
        #[test]
        fn iterates_stay_in_the_ball((s, loss, theta) in arb_round(), r in 0.1f64..20.0, alpha in 0.001f64..5.0) {
            let start = project_ball(&theta, Radius::Ball(r)).unwrap();
            let p = LearnParams::new(1.0, 1.0).unwrap();
            let mut a = LearnerState::new(start.clone(), Radius::Ball(r), alpha).unwrap();
            let mut b = a.clone();
            let mut c = a.clone();
            let mut filt = TopKFilter::with_buffer(1, &[1e-3]);
            ogd_step(&mut a, &s, &loss).unwrap();
            learn_step(&mut b, &s, &loss, &p).unwrap();
            topk_filter_step(&mut c, &mut filt, &s, &loss).unwrap();
            for st in [&a, &b, &c] {
                prop_assert!(norm(&st.theta) <= r * (1.0 + 1e-12));
            }
        }

        #[test]
        fn learn_update_is_bounded_by_alpha_psi(
            (s, loss, theta) in arb_round(),
            far in 0.0f64..6.0,
            alpha in 0.001f64..5.0,
            a in 0.1f64..1e4,
            b in 0.1f64..20.0,
        ) {
            let theta: Vec<f64> = theta.iter().map(|v| v * 10f64.powf(far)).collect();
            let omega = loss.minimizer(&s).unwrap();
            let (g, l) = match loss.family {
                crate::loss::LossFamily::Ridge => (0.0, loss.lambda + 2.0 * crate::linalg::norm_sq(&s.x)),
                crate::loss::LossFamily::Svm => (norm(&s.x) + loss.lambda * norm(&omega), loss.lambda),
            };
            let p = LearnParams::new(a, b).unwrap();
            let psi = crate::loss::ProblemConstants::derive(&p, g, l, loss.lambda, 0.0).unwrap().psi;
            let mut st = LearnerState::new(theta.clone(), Radius::Unbounded, alpha).unwrap();
            learn_step(&mut st, &s, &loss, &p).unwrap();
            let moved = crate::linalg::dist(&st.theta, &theta);
            prop_assert!(moved <= alpha * psi * (1.0 + 1e-9) + 1e-9 * norm(&theta).max(1.0));
        }

        #[test]
        fn learn_approaches_ogd_as_b_vanishes((s, loss, theta) in arb_round(), alpha in 0.001f64..1.0) {
            let f = loss.eval(&s, &theta).unwrap();
            let a = (f + 1.0).max(1.0);
            let p = LearnParams::new(a, 1e-12).unwrap();
            let mut x = LearnerState::new(theta.clone(), Radius::Unbounded, alpha).unwrap();
            let mut y = x.clone();
            ogd_step(&mut x, &s, &loss).unwrap();
            learn_step(&mut y, &s, &loss, &p).unwrap();
            let scale = norm(&x.theta).max(1.0);
            for (u, v) in x.theta.iter().zip(&y.theta) {
                prop_assert!((u - v).abs() <= 1e-6 * scale);
            }
        }
    }
}
