//! Episodes, clean dynamic regret, and multi-seed aggregation.
//!
//! An episode plays one learner against one seeded stream. Every round records
//! the action, the loss it incurred on the emitted data, and two comparators:
//! the minimizer of the clean round (`θ*`) and of the emitted round (`ω*`).
//! Regret only sums over clean rounds.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{beta_default, ExpertGrid, ExpertPool};
use crate::learners::{
    theoretical_stepsize, uncertain_budget, Learner, LearnerState, Radius, TopKFilter,
};
use crate::linalg::{dist, norm, norm_sq};
use crate::loss::{LearnParams, LossFamily, ProblemConstants, RoundLoss};
use crate::stream::{CorruptionOp, GeneratorSpec, Stream, StreamRound};

/// Which learner a run drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerSpec {
    Ogd,
    Learn,
    /// Filter with the true corruption budget `k`.
    TopK,
    /// Filter with the underestimated budget `⌊0.75 k⌋`.
    UncertainTopK,
    /// Exponentially weighted pool of LEARN experts on an unbounded domain.
    Experts {
        /// `A_max = max(c √T, 2)` unless `a_max` is given.
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        a_max: Option<f64>,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        /// Defaults to `√(8 ln N / (T ν²))`.
        #[serde(default)]
        beta: Option<f64>,
    },
}

fn default_c() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    1.0
}

impl LearnerSpec {
    pub fn experts() -> Self {
        LearnerSpec::Experts {
            c: default_c(),
            a_max: None,
            epsilon: default_epsilon(),
            beta: None,
        }
    }

    /// Short name used in file names and reports.
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Ogd => "ogd",
            LearnerSpec::Learn => "learn",
            LearnerSpec::TopK => "topk",
            LearnerSpec::UncertainTopK => "uncertain-topk",
            LearnerSpec::Experts { .. } => "experts",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "ogd" => LearnerSpec::Ogd,
            "learn" => LearnerSpec::Learn,
            "topk" | "top-k" => LearnerSpec::TopK,
            "uncertain-topk" | "uncertain-top-k" => LearnerSpec::UncertainTopK,
            "experts" => LearnerSpec::experts(),
            other => return Err(Error::config(format!(
                "unknown learner {other:?} (expected ogd, learn, topk, uncertain-topk or experts)"
            ))),
        })
    }

    /// The four learners of the corruption sweeps.
    pub fn sweep_set() -> [LearnerSpec; 4] {
        [
            LearnerSpec::Learn,
            LearnerSpec::Ogd,
            LearnerSpec::TopK,
            LearnerSpec::UncertainTopK,
        ]
    }

    fn a_max(&self, horizon: usize) -> Option<f64> {
        match *self {
            LearnerSpec::Experts { c, a_max, .. } => {
                Some(a_max.unwrap_or_else(|| (c * (horizon as f64).sqrt()).max(2.0)))
            }
            _ => None,
        }
    }
}

/// How the (constant) step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSizeSpec {
    Fixed(f64),
    /// `1/√T`
    InvSqrtT,
    /// `√((4D² + 6D V_T) / (ψ² T))` with `V_T` from a comparator pre-pass.
    Theoretical,
}

/// `‖∇f(θ)‖ ≤ G + L‖θ − ω*‖` for every round of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    pub g: f64,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon: usize,
    pub learner: LearnerSpec,
    pub loss: RoundLoss,
    pub params: LearnParams,
    pub generator: GeneratorSpec,
    /// Number of corrupted rounds.
    pub k: usize,
    pub corruption: CorruptionOp,
    pub step_size: StepSizeSpec,
    pub seeds: Vec<u64>,
    #[serde(default = "unbounded")]
    pub radius: Radius,
    /// Only used by the theoretical step size and the bound check; measured
    /// from the stream when absent.
    #[serde(default)]
    pub gradient_bound: Option<GradientBound>,
}

fn unbounded() -> Radius {
    Radius::Unbounded
}

/// The two experimental settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Ridge,
    Svm,
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "ridge" => Ok(Preset::Ridge),
            "svm" => Ok(Preset::Svm),
            other => Err(Error::config(format!(
                "unknown preset {other:?} (expected ridge or svm)"
            ))),
        }
    }

    pub fn config(self) -> RunConfig {
        let (horizon, loss, params, generator) = match self {
            Preset::Ridge => (
                100_000,
                RoundLoss {
                    family: LossFamily::Ridge,
                    lambda: 1e-4,
                },
                LearnParams { a: 10.0, b: 10.0 },
                GeneratorSpec::ridge_preset(),
            ),
            Preset::Svm => (
                10_000,
                RoundLoss {
                    family: LossFamily::Svm,
                    lambda: 1e-4,
                },
                LearnParams { a: 1e4, b: 10.0 },
                GeneratorSpec::svm_preset(),
            ),
        };
        RunConfig {
            horizon,
            learner: LearnerSpec::Learn,
            loss,
            params,
            corruption: CorruptionOp::default_for(loss.family),
            generator,
            k: 0,
            step_size: StepSizeSpec::InvSqrtT,
            seeds: (1..=30).collect(),
            radius: Radius::Unbounded,
            gradient_bound: None,
        }
    }
}

/// `{0, ⌊√T⌋, ⌊T^{2/3}⌋, ⌊T/4⌋}`
pub fn k_grid(horizon: usize) -> [usize; 4] {
    [
        0,
        horizon.isqrt(),
        floor_two_thirds_power(horizon),
        horizon / 4,
    ]
}

/// Exact `⌊T^{2/3}⌋`, i.e. the largest `n` with `n³ ≤ T²`.
fn floor_two_thirds_power(horizon: usize) -> usize {
    let sq = (horizon as u128) * (horizon as u128);
    let mut n = (horizon as f64).powf(2.0 / 3.0).floor() as u128;
    while n * n * n > sq {
        n -= 1;
    }
    while (n + 1) * (n + 1) * (n + 1) <= sq {
        n += 1;
    }
    n as usize
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("T must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must be nonempty"));
        }
        if self.k > self.horizon {
            return Err(Error::config(format!(
                "k = {} exceeds T = {}",
                self.k, self.horizon
            )));
        }
        if self.loss.family != self.generator.family() {
            return Err(Error::config(format!(
                "loss family {:?} does not match the {:?} generator",
                self.loss.family,
                self.generator.family()
            )));
        }
        RoundLoss::new(self.loss.family, self.loss.lambda)?;
        LearnParams::new(self.params.a, self.params.b)?;
        self.corruption.check_family(self.loss.family)?;
        match self.step_size {
            StepSizeSpec::Fixed(a) if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::config(format!("step size must be > 0, got {a}")));
            }
            StepSizeSpec::Theoretical => {
                if self.radius == Radius::Unbounded {
                    return Err(Error::config(
                        "the theoretical step size needs a finite radius",
                    ));
                }
                if !(self.loss.lambda > 0.0) {
                    return Err(Error::config("the theoretical step size needs lambda > 0"));
                }
            }
            _ => {}
        }
        if let LearnerSpec::Experts { epsilon, beta, .. } = self.learner {
            ExpertGrid::build(self.learner.a_max(self.horizon).unwrap_or(2.0), epsilon, 1)?;
            if let Some(b) = beta {
                if !(b > 0.0) {
                    return Err(Error::config(format!("beta must be > 0, got {b}")));
                }
            }
        }
        Ok(())
    }

    /// Multiplies `T` by `factor` (at least one round).
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::config(format!("scale must be > 0, got {factor}")));
        }
        self.horizon = ((self.horizon as f64 * factor).round() as usize).max(1);
        self.k = self.k.min(self.horizon);
        Ok(self)
    }

    /// Filter budget handed to the Top-k variants.
    pub fn filter_budget(&self) -> usize {
        match self.learner {
            LearnerSpec::TopK => self.k,
            LearnerSpec::UncertainTopK => uncertain_budget(self.k),
            _ => 0,
        }
    }

    /// Radius used for the comparators. The expert pool targets the unbounded domain.
    pub fn comparator_radius(&self) -> Radius {
        match self.learner {
            LearnerSpec::Experts { .. } => Radius::Unbounded,
            _ => self.radius,
        }
    }

    fn stream(&self, seed: u64) -> Result<Stream> {
        Stream::new(&self.generator, self.horizon, self.k, self.corruption, seed)
    }
}

/// Everything recorded about one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub is_outlier: bool,
    pub theta: Vec<f64>,
    /// `f_t(s_t, θ_t)`
    pub f_emitted: f64,
    /// `θ_t*`, from the clean side information
    pub comparator_clean: Vec<f64>,
    /// `ω_t*`, from the emitted side information
    pub comparator_emitted: Vec<f64>,
    /// `f_t(s_t, θ_t*)`
    pub f_at_comparator: f64,
}

/// Cumulative clean dynamic regret and the stream quantities of the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub series: Vec<f64>,
    /// `V_T`
    pub path_length: f64,
    /// `δ_S`
    pub delta_s: f64,
    /// `max_t ‖θ_t*‖`
    pub max_comparator_norm: f64,
    /// `B`: the largest loss suffered on a clean round
    pub max_clean_loss: f64,
}

impl RegretCurve {
    pub fn final_regret(&self) -> f64 {
        self.series.last().copied().unwrap_or(0.0)
    }
}

/// Streaming fold of records into a [`RegretCurve`].
#[derive(Debug, Default)]
struct CurveBuilder {
    series: Vec<f64>,
    total: f64,
    path_length: f64,
    prev: Option<Vec<f64>>,
    delta_s: f64,
    max_comparator_norm: f64,
    max_clean_loss: f64,
}

impl CurveBuilder {
    fn with_capacity(n: usize) -> Self {
        CurveBuilder {
            series: Vec::with_capacity(n),
            ..Default::default()
        }
    }

    fn push(&mut self, r: &RoundRecord) {
        if r.is_outlier {
            self.delta_s = self
                .delta_s
                .max(dist(&r.comparator_emitted, &r.comparator_clean));
        } else {
            self.total += r.f_emitted - r.f_at_comparator;
            self.max_clean_loss = self.max_clean_loss.max(r.f_emitted);
        }
        self.series.push(self.total);
        if let Some(prev) = &self.prev {
            self.path_length += dist(prev, &r.comparator_clean);
        }
        self.max_comparator_norm = self.max_comparator_norm.max(norm(&r.comparator_clean));
        self.prev = Some(r.comparator_clean.clone());
    }

    fn finish(self) -> RegretCurve {
        RegretCurve {
            series: self.series,
            path_length: self.path_length,
            delta_s: self.delta_s,
            max_comparator_norm: self.max_comparator_norm,
            max_clean_loss: self.max_clean_loss,
        }
    }
}

pub fn clean_dynamic_regret(records: &[RoundRecord]) -> Result<RegretCurve> {
    if records.is_empty() {
        return Err(Error::invalid("no records"));
    }
    let mut b = CurveBuilder::with_capacity(records.len());
    records.iter().for_each(|r| b.push(r));
    Ok(b.finish())
}

/// `Σ ‖θ_t* − θ_{t+1}*‖`
pub fn path_length(records: &[RoundRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| dist(&w[0].comparator_clean, &w[1].comparator_clean))
        .sum()
}

/// Largest comparator shift caused by corruption; 0 without corrupted rounds.
pub fn delta_s(records: &[RoundRecord]) -> f64 {
    records
        .iter()
        .filter(|r| r.is_outlier)
        .map(|r| dist(&r.comparator_emitted, &r.comparator_clean))
        .fold(0.0, f64::max)
}

/// Pointwise mean and standard error (sample std / √R) of equal-length series.
pub fn aggregate_runs(curves: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("no curves to aggregate"))?;
    let n = first.len();
    if let Some(bad) = curves.iter().find(|c| c.len() != n) {
        return Err(Error::invalid(format!(
            "curve lengths differ: {n} vs {}",
            bad.len()
        )));
    }
    let r = curves.len() as f64;
    let mut mean = vec![0.0; n];
    let mut stderr = vec![0.0; n];
    for t in 0..n {
        let m = curves.iter().map(|c| c[t]).sum::<f64>() / r;
        mean[t] = m;
        if curves.len() > 1 {
            let var = curves.iter().map(|c| (c[t] - m).powi(2)).sum::<f64>() / (r - 1.0);
            stderr[t] = (var / r).sqrt();
        }
    }
    Ok((mean, stderr))
}

/// Stream statistics needed before a theoretical-step-size run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prepass {
    pub path_length: f64,
    pub gradient_bound: GradientBound,
}

/// Walks the stream once without a learner: path length of the clean
/// comparators and the gradient growth constants of the emitted losses.
pub fn comparator_prepass(config: &RunConfig, seed: u64) -> Result<Prepass> {
    config.validate()?;
    let radius = config.comparator_radius().as_option();
    let lambda = config.loss.lambda;
    let mut prev: Option<Vec<f64>> = None;
    let mut v = 0.0;
    let mut max_xx: f64 = 0.0;
    let mut max_g: f64 = 0.0;
    for round in config.stream(seed)? {
        let t = round.t;
        let c = config
            .loss
            .minimizer_in_ball(&round.clean, radius)
            .map_err(|e| e.at_round(t))?;
        if let Some(p) = &prev {
            v += dist(p, &c);
        }
        prev = Some(c);
        let xx = norm_sq(&round.emitted.x);
        max_xx = max_xx.max(xx);
        if config.loss.family == LossFamily::Svm {
            let w = config
                .loss
                .minimizer(&round.emitted)
                .map_err(|e| e.at_round(t))?;
            max_g = max_g.max(xx.sqrt() + lambda * norm(&w));
        }
    }
    // ridge: ∇f vanishes at ω* and is (λ + 2‖x‖²)-Lipschitz
    // hinge: ‖∇f(θ)‖ ≤ ‖x‖ + λ‖θ‖ ≤ ‖x‖ + λ‖ω*‖ + λ‖θ − ω*‖
    let gradient_bound = match config.loss.family {
        LossFamily::Ridge => GradientBound {
            g: 0.0,
            l: lambda + 2.0 * max_xx,
        },
        LossFamily::Svm => GradientBound {
            g: max_g,
            l: lambda,
        },
    };
    Ok(Prepass {
        path_length: v,
        gradient_bound,
    })
}

/// Result of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub curve: RegretCurve,
    pub final_action: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub step_size: f64,
    pub gradient_bound: Option<GradientBound>,
}

fn build_learner(config: &RunConfig, step_size: f64) -> Result<Learner> {
    let dim = config.generator.dim();
    Ok(match &config.learner {
        LearnerSpec::Ogd => Learner::Ogd(LearnerState::zeros(dim, config.radius, step_size)?),
        LearnerSpec::Learn => Learner::Learn {
            state: LearnerState::zeros(dim, config.radius, step_size)?,
            params: config.params,
        },
        LearnerSpec::TopK | LearnerSpec::UncertainTopK => Learner::TopK {
            state: LearnerState::zeros(dim, config.radius, step_size)?,
            filter: TopKFilter::new(config.filter_budget()),
        },
        spec @ LearnerSpec::Experts { epsilon, beta, .. } => {
            let a_max = spec.a_max(config.horizon).expect("experts spec");
            let grid = ExpertGrid::build(a_max, *epsilon, config.horizon)?;
            let beta = match beta {
                Some(b) => *b,
                None => beta_default(grid.len(), config.horizon, config.params.nu())?,
            };
            Learner::Experts(Box::new(ExpertPool::new(grid, dim, config.params, beta)?))
        }
    })
}

fn resolve_step_size(config: &RunConfig, seed: u64) -> Result<(f64, Option<GradientBound>)> {
    Ok(match config.step_size {
        StepSizeSpec::Fixed(a) => (a, None),
        StepSizeSpec::InvSqrtT => (1.0 / (config.horizon as f64).sqrt(), None),
        StepSizeSpec::Theoretical => {
            let pre = comparator_prepass(config, seed)?;
            let gb = config.gradient_bound.unwrap_or(pre.gradient_bound);
            let consts =
                ProblemConstants::derive(&config.params, gb.g, gb.l, config.loss.lambda, 0.0)?;
            let d = config.radius.as_option().expect("validated finite radius");
            (
                theoretical_stepsize(d, pre.path_length, consts.psi, config.horizon)?,
                Some(gb),
            )
        }
    })
}

/// Plays one episode, handing each record to `sink` as it is produced.
/// Returns the final action, the ground truth and the step size used.
pub fn run_episode_with<F: FnMut(RoundRecord)>(
    config: &RunConfig,
    seed: u64,
    mut sink: F,
) -> Result<(Vec<f64>, Vec<f64>, f64, Option<GradientBound>)> {
    config.validate()?;
    let (step_size, gb) = resolve_step_size(config, seed)?;
    let mut learner = build_learner(config, step_size)?;
    let stream = config.stream(seed)?;
    let theta_star = stream.generator().theta_star.clone();
    let radius = config.comparator_radius().as_option();
    for round in stream {
        let t = round.t;
        let rec = play_round(config, &mut learner, round, radius).map_err(|e| e.at_round(t))?;
        sink(rec);
    }
    Ok((learner.action(), theta_star, step_size, gb))
}

fn play_round(
    config: &RunConfig,
    learner: &mut Learner,
    round: StreamRound,
    radius: Option<f64>,
) -> Result<RoundRecord> {
    let loss = &config.loss;
    let theta = learner.action();
    let f_emitted = loss.eval(&round.emitted, &theta)?;
    let comparator_clean = loss.minimizer_in_ball(&round.clean, radius)?;
    let comparator_emitted = if round.is_outlier {
        loss.minimizer_in_ball(&round.emitted, radius)?
    } else {
        comparator_clean.clone()
    };
    let f_at_comparator = loss.eval(&round.emitted, &comparator_clean)?;
    learner.step(&round.emitted, loss)?;
    Ok(RoundRecord {
        t: round.t,
        is_outlier: round.is_outlier,
        theta,
        f_emitted,
        comparator_clean,
        comparator_emitted,
        f_at_comparator,
    })
}

/// Full per-round trace of one seed.
pub fn run_episode(config: &RunConfig, seed: u64) -> Result<Vec<RoundRecord>> {
    let mut out = Vec::with_capacity(config.horizon);
    run_episode_with(config, seed, |r| out.push(r))?;
    Ok(out)
}

/// One seed reduced to its regret curve without keeping the trace.
pub fn run_outcome(config: &RunConfig, seed: u64) -> Result<EpisodeOutcome> {
    let mut b = CurveBuilder::with_capacity(config.horizon);
    let (final_action, theta_star, step_size, gradient_bound) =
        run_episode_with(config, seed, |r| b.push(&r))?;
    Ok(EpisodeOutcome {
        seed,
        curve: b.finish(),
        final_action,
        theta_star,
        step_size,
        gradient_bound,
    })
}

/// All seeds of one (learner, k) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub learner: LearnerSpec,
    pub k: usize,
    pub outcomes: Vec<EpisodeOutcome>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl CellResult {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }

    /// Mean angle (degrees) between the final action and the ground truth.
    pub fn mean_angle_deg(&self) -> f64 {
        let s: f64 = self
            .outcomes
            .iter()
            .map(|o| crate::linalg::angle_deg(&o.final_action, &o.theta_star))
            .sum();
        s / self.outcomes.len() as f64
    }

    pub fn summary(&self, csv: impl Into<String>) -> CellSummary {
        CellSummary {
            learner: self.learner.clone(),
            k: self.k,
            csv: csv.into(),
            final_mean: self.final_mean(),
            final_stderr: self.final_stderr(),
            seeds: self
                .outcomes
                .iter()
                .map(|o| SeedSummary {
                    seed: o.seed,
                    final_regret: o.curve.final_regret(),
                    path_length: o.curve.path_length,
                    delta_s: o.curve.delta_s,
                    max_comparator_norm: o.curve.max_comparator_norm,
                    max_clean_loss: o.curve.max_clean_loss,
                    step_size: o.step_size,
                    final_action: o.final_action.clone(),
                })
                .collect(),
        }
    }
}

/// Runs every seed of `config` in parallel and aggregates.
pub fn run_cell(config: &RunConfig) -> Result<CellResult> {
    config.validate()?;
    let outcomes = config
        .seeds
        .par_iter()
        .map(|&seed| run_outcome(config, seed))
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<&[f64]> = outcomes.iter().map(|o| o.curve.series.as_slice()).collect();
    let (mean, stderr) = aggregate_runs(&series)?;
    Ok(CellResult {
        learner: config.learner.clone(),
        k: config.k,
        outcomes,
        mean,
        stderr,
    })
}

/// Measured regret against the bounded-domain regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub final_regret: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `ξ(ψ√((4D² + 6D V_T) T) + k(Gφ + Lκ) + k(G + Lφ) δ_S)`
pub fn regret_bound(
    constants: &ProblemConstants,
    radius: f64,
    path_length: f64,
    delta_s: f64,
    k: usize,
    horizon: usize,
) -> f64 {
    let c = constants;
    let k = k as f64;
    let d = radius;
    c.xi * (c.psi * ((4.0 * d * d + 6.0 * d * path_length) * horizon as f64).sqrt()
        + k * (c.g * c.phi + c.l * c.kappa)
        + k * (c.g + c.l * c.phi) * delta_s)
}

/// Constants of the bound for a finished run, with `B` measured from the curve.
pub fn run_constants(
    config: &RunConfig,
    gradient_bound: GradientBound,
    curve: &RegretCurve,
) -> Result<ProblemConstants> {
    ProblemConstants::derive(
        &config.params,
        gradient_bound.g,
        gradient_bound.l,
        config.loss.lambda,
        curve.max_clean_loss,
    )
}

pub fn check_regret_bound(
    curve: &RegretCurve,
    constants: &ProblemConstants,
    config: &RunConfig,
) -> Result<BoundReport> {
    if config.step_size != StepSizeSpec::Theoretical {
        return Err(Error::config(
            "the regret bound only applies to runs with the theoretical step size",
        ));
    }
    let Radius::Ball(d) = config.radius else {
        return Err(Error::config("the regret bound needs a finite radius"));
    };
    if curve.series.len() != config.horizon {
        return Err(Error::config(format!(
            "curve has {} rounds, config says T = {}",
            curve.series.len(),
            config.horizon
        )));
    }
    let bound = regret_bound(
        constants,
        d,
        curve.path_length,
        curve.delta_s,
        config.k,
        config.horizon,
    );
    let final_regret = curve.final_regret();
    Ok(BoundReport {
        final_regret,
        bound,
        holds: final_regret <= bound,
    })
}

/// Writes `t,mean_regret,stderr_regret` rows with LF endings.
pub fn write_regret_csv<W: Write>(mut w: W, mean: &[f64], stderr: &[f64]) -> io::Result<()> {
    writeln!(w, "t,mean_regret,stderr_regret")?;
    for (i, (m, s)) in mean.iter().zip(stderr).enumerate() {
        writeln!(w, "{},{:.10e},{:.10e}", i + 1, m, s)?;
    }
    w.flush()
}

pub fn csv_name(learner: &LearnerSpec, k: usize) -> String {
    format!("regret_{}_k{}.csv", learner.name(), k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_regret: f64,
    pub path_length: f64,
    pub delta_s: f64,
    pub max_comparator_norm: f64,
    pub max_clean_loss: f64,
    pub step_size: f64,
    pub final_action: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub learner: LearnerSpec,
    pub k: usize,
    pub csv: String,
    pub final_mean: f64,
    pub final_stderr: f64,
    pub seeds: Vec<SeedSummary>,
}

/// Record of a run or sweep: the effective base config and one entry per cell.
/// Feeding `config` and the `(learner, k)` of each cell back in reproduces the
/// same outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
    pub cells: Vec<CellSummary>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::invalid(format!("manifest serialization: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config(format!("manifest: {e}")))
    }
}
