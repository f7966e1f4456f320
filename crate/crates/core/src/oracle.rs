//! Numerical checks of the inequalities behind the regret bounds.
//!
//! Each check samples its inequality many times and reduces the outcome to a
//! [`CheckReport`]. A sample passes when `lhs ≤ rhs` up to a tolerance of
//! `1e-9`, taken relative to `max(1, |lhs|, |rhs|)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{check_regret_bound, run_constants, run_outcome, Preset, StepSizeSpec};
use crate::learners::{project_ball, Radius};
use crate::linalg::{axpy, dot, norm, norm_sq, sub};
use crate::loss::{LearnParams, LossFamily, ProblemConstants, RoundLoss, SideInfo};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Most negative scaled margin `(rhs − lhs) / max(1, |lhs|, |rhs|)`.
    pub worst_slack: f64,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            samples: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
        }
    }

    /// Records one instance of `lhs ≤ rhs`.
    pub fn record(&mut self, lhs: f64, rhs: f64) {
        let scale = 1f64.max(lhs.abs()).max(rhs.abs());
        let slack = if lhs.is_nan() || rhs.is_nan() {
            f64::NEG_INFINITY
        } else if lhs == rhs {
            0.0
        } else {
            (rhs - lhs) / scale
        };
        self.samples += 1;
        if slack < -TOLERANCE {
            self.violations += 1;
        }
        self.worst_slack = self.worst_slack.min(slack);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn merge(mut self, other: CheckReport) -> Self {
        self.samples += other.samples;
        self.violations += other.violations;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} samples={:<8} violations={:<7} worst_slack={:.3e}",
            self.name, self.samples, self.violations, self.worst_slack
        )
    }
}

/// A random round together with a point at a log-uniform distance from its minimizer.
struct Probe {
    s: SideInfo,
    omega: Vec<f64>,
    theta: Vec<f64>,
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

fn unit_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim, 1.0);
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..=hi_exp))
}

fn random_round<R: Rng + ?Sized>(loss: &RoundLoss, rng: &mut R, x_exp: (f64, f64)) -> SideInfo {
    let dim = rng.random_range(1..=5);
    let scale = log_uniform(rng, x_exp.0, x_exp.1);
    let x = gaussian_vec(rng, dim, scale);
    let y = match loss.family {
        LossFamily::Ridge => {
            3.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        }
        LossFamily::Svm => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    };
    SideInfo::new(x, y)
}

/// Distance from the minimizer is log-uniform on `[10^r.0, 10^r.1]`; every
/// tenth probe sits exactly on the minimizer.
fn probe<R: Rng + ?Sized>(
    loss: &RoundLoss,
    rng: &mut R,
    x_exp: (f64, f64),
    r_exp: (f64, f64),
) -> Probe {
    let s = random_round(loss, rng, x_exp);
    let omega = loss.minimizer(&s).expect("x ≠ 0 almost surely");
    let mut theta = omega.clone();
    if rng.random_range(0..10) != 0 {
        let u = unit_vec(rng, s.dim());
        axpy(log_uniform(rng, r_exp.0, r_exp.1), &u, &mut theta);
    }
    Probe { s, omega, theta }
}

const FAR_FIELD: (f64, f64) = (-3.0, 6.0);
const X_SCALES: (f64, f64) = (-1.0, 1.0);

/// `g(θ) − g(ω*) ≤ ⟨∇g(θ), θ − ω*⟩ / η` with `ω*` the minimizer of `f`.
pub fn check_invexity<R: Rng + ?Sized>(
    params: &LearnParams,
    loss: &RoundLoss,
    samples: usize,
    rng: &mut R,
) -> CheckReport {
    check_invexity_with(params, loss, samples, rng, |s, th| {
        params.grad_g(loss, s, th).expect("valid probe")
    })
}

/// As [`check_invexity`], with the gradient of `g` supplied by the caller.
pub fn check_invexity_with<R, G>(
    params: &LearnParams,
    loss: &RoundLoss,
    samples: usize,
    rng: &mut R,
    grad_g: G,
) -> CheckReport
where
    R: Rng + ?Sized,
    G: Fn(&SideInfo, &[f64]) -> Vec<f64>,
{
    let mut rep = CheckReport::new("invexity");
    for _ in 0..samples {
        let p = probe(loss, rng, X_SCALES, FAR_FIELD);
        let f = loss.eval(&p.s, &p.theta).expect("valid probe");
        let lhs =
            params.transform(f) - params.transform(loss.eval(&p.s, &p.omega).expect("valid probe"));
        let eta = params.eta(f).expect("f >= 0");
        let diff = sub(&p.theta, &p.omega);
        let rhs = if eta > 0.0 {
            dot(&grad_g(&p.s, &p.theta), &diff) / eta
        } else {
            // gate saturated: ∇g/η is ∇f
            dot(&loss.grad(&p.s, &p.theta).expect("valid probe"), &diff)
        };
        rep.record(lhs, rhs);
    }
    rep
}

/// `exp(−c xˢ) xʳ ≤ 1/xˢ ≤ 1/c^{s/r}` on every grid point `x ≥ c^{1/r}`.
pub fn check_exp_trumps_poly(c: f64, r: f64, s: f64, grid: &[f64]) -> Result<CheckReport> {
    if !(c > 0.0 && r > 0.0 && s > 0.0) {
        return Err(Error::invalid(format!(
            "c, r, s must be > 0, got {c}, {r}, {s}"
        )));
    }
    let threshold = c.powf(1.0 / r);
    let mut rep = CheckReport::new("exp_trumps_poly");
    for &x in grid {
        if !(x >= threshold) {
            return Err(Error::invalid(format!(
                "grid point {x} below c^(1/r) = {threshold}"
            )));
        }
        let lx = x.ln();
        let lhs = (-c * x.powf(s) + r * lx).exp();
        let mid = (-s * lx).exp();
        let rhs = (-(s / r) * c.ln()).exp();
        rep.record(lhs, mid);
        rep.record(mid, rhs);
    }
    Ok(rep)
}

/// `points` log-spaced values from `c^{1/r}` up to `c^{1/r}·10^decades`.
pub fn threshold_grid(c: f64, r: f64, decades: f64, points: usize) -> Vec<f64> {
    let t = c.powf(1.0 / r);
    let n = points.max(2);
    (0..n)
        .map(|i| {
            if i == 0 {
                t
            } else {
                t * 10f64.powf(decades * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Growth constants `(G, L)` that make `‖∇f(θ)‖ ≤ G + L‖θ − ω*‖` hold for one round.
fn round_constants(
    params: &LearnParams,
    loss: &RoundLoss,
    s: &SideInfo,
    omega: &[f64],
) -> ProblemConstants {
    let (g, l) = match loss.family {
        LossFamily::Ridge => (0.0, loss.lambda + 2.0 * norm_sq(&s.x)),
        LossFamily::Svm => (norm(&s.x) + loss.lambda * norm(omega), loss.lambda),
    };
    ProblemConstants::derive(params, g, l, loss.lambda, 0.0).expect("lambda > 0")
}

/// `η(f(θ)) ‖∇f(θ)‖ ≤ ψ`, with `G, L` derived per sampled round.
pub fn check_eta_grad_bound<R: Rng + ?Sized>(
    params: &LearnParams,
    loss: &RoundLoss,
    samples: usize,
    rng: &mut R,
) -> CheckReport {
    let mut rep = CheckReport::new("eta_grad_bound");
    for _ in 0..samples {
        let p = probe(loss, rng, X_SCALES, FAR_FIELD);
        let consts = round_constants(params, loss, &p.s, &p.omega);
        let (f, grad) = loss.value_and_grad(&p.s, &p.theta).expect("valid probe");
        let eta = params.eta(f).expect("f >= 0");
        rep.record(eta * norm(&grad), consts.psi);
    }
    rep
}

/// `η(f) f ≤ ν` for `f = 0` and `f` log-spaced over `[1e-12, 1e12]`.
pub fn check_eta_f_bound(params: &LearnParams, samples: usize) -> CheckReport {
    let mut rep = CheckReport::new("eta_f_bound");
    let nu = params.nu();
    rep.record(0.0, nu);
    let n = samples.max(2);
    for i in 0..n {
        let f = 10f64.powf(-12.0 + 24.0 * i as f64 / (n - 1) as f64);
        let eta = params.eta(f).expect("f >= 0");
        rep.record(eta * f, nu);
    }
    rep
}

/// `η‖θ − ω*‖ ≤ φ` and `η‖θ − ω*‖² ≤ κ`; each sample contributes both.
pub fn check_eta_dist_bounds<R: Rng + ?Sized>(
    params: &LearnParams,
    loss: &RoundLoss,
    samples: usize,
    rng: &mut R,
) -> CheckReport {
    let mut rep = CheckReport::new("eta_dist_bounds");
    let consts = ProblemConstants::derive(params, 0.0, 0.0, loss.lambda, 0.0).expect("lambda > 0");
    for _ in 0..samples {
        let p = probe(loss, rng, X_SCALES, FAR_FIELD);
        let f = loss.eval(&p.s, &p.theta).expect("valid probe");
        let eta = params.eta(f).expect("f >= 0");
        let r = norm(&sub(&p.theta, &p.omega));
        rep.record(eta * r, consts.phi);
        rep.record(eta * r * r, consts.kappa);
    }
    rep
}

/// Central differences of `g` against `∇g`, within `1e-5·max(1, ‖∇g‖)`.
/// Hinge points with a margin within `1e-3` of the kink are skipped.
pub fn check_grad_fd<R: Rng + ?Sized>(
    params: &LearnParams,
    loss: &RoundLoss,
    samples: usize,
    rng: &mut R,
) -> CheckReport {
    let mut rep = CheckReport::new("grad_fd");
    let mut taken = 0;
    while taken < samples {
        // ‖x‖ ≤ ~15 and ‖θ‖ ≲ 50 keep the probe step well inside 1e-3 of the kink
        let p = probe(loss, rng, (-1.0, 0.5), (-3.0, 1.0));
        if loss.family == LossFamily::Svm && (1.0 - p.s.y * dot(&p.s.x, &p.theta)).abs() < 1e-3 {
            continue;
        }
        taken += 1;
        let an = params.grad_g(loss, &p.s, &p.theta).expect("valid probe");
        let h = 1e-6 * (1.0 + norm(&p.theta));
        let mut err2 = 0.0;
        let mut probe_pt = p.theta.clone();
        for i in 0..p.theta.len() {
            probe_pt[i] = p.theta[i] + h;
            let up = params.eval_g(loss, &p.s, &probe_pt).expect("valid probe");
            probe_pt[i] = p.theta[i] - h;
            let down = params.eval_g(loss, &p.s, &probe_pt).expect("valid probe");
            probe_pt[i] = p.theta[i];
            let fd = (up - down) / (2.0 * h);
            err2 += (fd - an[i]).powi(2);
        }
        // scaled so that the shared 1e-9 threshold means a 1e-5 relative error
        let allowed = 1e-5 * 1f64.max(norm(&an));
        rep.record(err2.sqrt() / allowed * TOLERANCE, TOLERANCE);
    }
    rep
}

/// Law of cosines with unit constants, and the first-order update property of
/// a projected LEARN step (`γ₃ = 1`, `γ₄ = 1/η`).
pub fn check_euclidean_assumptions<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> CheckReport {
    let mut rep = CheckReport::new("euclidean_assumptions");
    for _ in 0..samples {
        let dim = rng.random_range(1..=6);
        let scale = log_uniform(rng, -2.0, 3.0);
        let v1 = gaussian_vec(rng, dim, scale);
        let v2 = gaussian_vec(rng, dim, scale);
        let v3 = gaussian_vec(rng, dim, scale);
        let (a, b) = (norm(&sub(&v2, &v3)), norm(&sub(&v3, &v1)));
        rep.record(norm_sq(&sub(&v2, &v1)), a * a + b * b + 2.0 * a * b);
    }
    let params = LearnParams { a: 10.0, b: 1.0 };
    for i in 0..samples {
        let loss = if i % 2 == 0 {
            RoundLoss::ridge(1e-2).expect("lambda >= 0")
        } else {
            RoundLoss::svm(1e-2).expect("lambda >= 0")
        };
        let radius = log_uniform(rng, -1.0, 2.0);
        let p = probe(&loss, rng, (-1.0, 0.5), (-2.0, 2.0));
        let theta = project_ball(&p.theta, Radius::Ball(radius)).expect("radius > 0");
        let target = loss
            .minimizer_in_ball(&p.s, Some(radius))
            .expect("valid probe");
        let alpha = log_uniform(rng, -3.0, 0.0);
        let grad = params.grad_g(&loss, &p.s, &theta).expect("valid probe");
        let mut next = theta.clone();
        axpy(-alpha, &grad, &mut next);
        let projected = project_ball(&next, Radius::Ball(radius)).expect("radius > 0");
        // (α/γ₄)⟨−∇g, ζ⟩ with ζ = (θ* − θ)/η collapses to α⟨−∇g, θ* − θ⟩
        let diff = sub(&theta, &target);
        let rhs = norm_sq(&diff) + alpha * alpha * norm_sq(&grad) - 2.0 * alpha * dot(&grad, &diff);
        rep.record(norm_sq(&sub(&projected, &target)), rhs);
    }
    rep
}

/// The parameter settings the suite sweeps: both experiment presets plus a
/// moderate configuration where the gate is far from saturation.
pub fn suite_settings() -> Vec<(&'static str, LearnParams, RoundLoss)> {
    let ridge = Preset::Ridge.config();
    let svm = Preset::Svm.config();
    vec![
        ("ridge", ridge.params, ridge.loss),
        ("svm", svm.params, svm.loss),
        (
            "ridge-moderate",
            LearnParams { a: 1.0, b: 1.0 },
            RoundLoss::ridge(0.5).expect("lambda >= 0"),
        ),
        (
            "svm-moderate",
            LearnParams { a: 1.0, b: 1.0 },
            RoundLoss::svm(0.5).expect("lambda >= 0"),
        ),
    ]
}

/// The `(c, r, s)` triples at which the regret analysis applies the
/// exponential-versus-polynomial inequality.
fn exp_poly_instances() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for (_, p, loss) in suite_settings() {
        let c = loss.lambda / (2.0 * p.a);
        out.push((c, 1.0, 2.0));
        out.push((c, 2.0, 2.0));
        out.push((1.0 / p.a, 1.0, 1.0));
    }
    out
}

/// Runs every check. `samples` is per check and setting.
pub fn run_all(samples: usize, seed: u64) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inv = CheckReport::new("invexity");
    let mut grad = CheckReport::new("eta_grad_bound");
    let mut ef = CheckReport::new("eta_f_bound");
    let mut dist = CheckReport::new("eta_dist_bounds");
    let mut fd = CheckReport::new("grad_fd");
    for (_, params, loss) in suite_settings() {
        for (acc, r) in [
            (&mut inv, check_invexity(&params, &loss, samples, &mut rng)),
            (
                &mut grad,
                check_eta_grad_bound(&params, &loss, samples, &mut rng),
            ),
            (&mut ef, check_eta_f_bound(&params, samples)),
            (
                &mut dist,
                check_eta_dist_bounds(&params, &loss, samples, &mut rng),
            ),
            (&mut fd, check_grad_fd(&params, &loss, samples, &mut rng)),
        ] {
            *acc = std::mem::replace(acc, CheckReport::new("")).merge(r);
        }
    }

    // exponential vs polynomial: the analysis' own instances, then a random sweep
    let mut epp = CheckReport::new("exp_trumps_poly");
    let instances = exp_poly_instances();
    let per_instance = (samples / 2 / instances.len()).max(2);
    for (c, r, s) in instances {
        let grid = threshold_grid(c, r, 8.0, per_instance);
        epp = epp.merge(check_exp_trumps_poly(c, r, s, &grid).expect("grid above threshold"));
    }
    let random_triples = (samples / 2 / 16).max(1);
    for _ in 0..random_triples {
        let c = log_uniform(&mut rng, -6.0, 3.0);
        let r = rng.random_range(0.1..5.0);
        let s = rng.random_range(0.1..5.0);
        let grid = threshold_grid(c, r, 4.0, 8);
        epp = epp.merge(check_exp_trumps_poly(c, r, s, &grid).expect("grid above threshold"));
    }

    let euc = check_euclidean_assumptions(samples, &mut rng);
    vec![inv, epp, grad, ef, dist, fd, euc]
}

/// Bounded-domain ridge run used by the end-to-end bound check.
pub fn bound_check_config(horizon: usize, k: usize, seeds: Vec<u64>) -> crate::harness::RunConfig {
    let mut c = Preset::Ridge.config();
    c.horizon = horizon;
    c.k = k;
    c.seeds = seeds;
    c.radius = Radius::Ball(5.0);
    c.step_size = StepSizeSpec::Theoretical;
    c
}

/// Final clean regret against the bound, one sample per seed.
pub fn check_bound_for(horizon: usize, k: usize, seeds: &[u64]) -> Result<CheckReport> {
    let config = bound_check_config(horizon, k, seeds.to_vec());
    let mut rep = CheckReport::new(format!("regret_bound/k{k}"));
    for &seed in seeds {
        let o = run_outcome(&config, seed)?;
        let gb = o.gradient_bound.expect("theoretical runs resolve G and L");
        let consts = run_constants(&config, gb, &o.curve)?;
        let b = check_regret_bound(&o.curve, &consts, &config)?;
        rep.record(b.final_regret, b.bound);
    }
    Ok(rep)
}
