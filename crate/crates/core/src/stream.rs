//! Clean data generation and the oblivious corruption adversary.
//!
//! One master seed drives everything. Each concern (ground truth, features,
//! noise, mislabel coins, the outlier set, corrupted responses) reads from its
//! own ChaCha substream, so changing `k` never perturbs the clean rounds.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::loss::{LossFamily, SideInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Substream {
    ThetaStar = 1,
    Features = 2,
    Noise = 3,
    Mislabel = 4,
    Outliers = 5,
    Corruption = 6,
    Plot = 7,
}

fn substream(master: u64, which: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(which as u64);
    rng
}

/// Distributional parameters of the clean data, without the drawn ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    /// `y = ⟨θ*, x⟩ + e`, θ* uniform on `[-1, 1]^dim` then normalized.
    Ridge {
        dim: usize,
        feature_std: f64,
        noise_std: f64,
    },
    /// `y = sign(⟨θ*, x⟩)`, θ* uniform on `[lo, hi]^dim`; labels inside the
    /// margin band flip with `mislabel_prob`.
    Svm {
        dim: usize,
        theta_lo: f64,
        theta_hi: f64,
        feature_std: f64,
        mislabel_prob: f64,
        margin_band: f64,
    },
}

impl GeneratorSpec {
    pub fn ridge_preset() -> Self {
        GeneratorSpec::Ridge {
            dim: 100,
            feature_std: 1.0,
            noise_std: 1e-3,
        }
    }

    pub fn svm_preset() -> Self {
        GeneratorSpec::Svm {
            dim: 2,
            theta_lo: 1.0,
            theta_hi: 11.0,
            feature_std: 10.0,
            mislabel_prob: 0.05,
            margin_band: 0.1,
        }
    }

    pub fn family(&self) -> LossFamily {
        match self {
            GeneratorSpec::Ridge { .. } => LossFamily::Ridge,
            GeneratorSpec::Svm { .. } => LossFamily::Svm,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::Ridge { dim, .. } | GeneratorSpec::Svm { dim, .. } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GeneratorSpec::Ridge {
                dim,
                feature_std,
                noise_std,
            } => {
                if dim == 0 || !(feature_std > 0.0) || !(noise_std >= 0.0) {
                    return Err(Error::config(
                        "ridge generator needs dim >= 1, feature_std > 0, noise_std >= 0",
                    ));
                }
            }
            GeneratorSpec::Svm {
                dim,
                theta_lo,
                theta_hi,
                feature_std,
                mislabel_prob,
                margin_band,
            } => {
                if dim == 0
                    || !(theta_lo <= theta_hi)
                    || !(feature_std > 0.0)
                    || !(0.0..=1.0).contains(&mislabel_prob)
                    || !(margin_band >= 0.0)
                {
                    return Err(Error::config("invalid svm generator parameters"));
                }
            }
        }
        Ok(())
    }

    /// Draws the ground truth from the master seed's dedicated substream.
    pub fn instantiate(&self, master_seed: u64) -> Result<CleanGenerator> {
        self.validate()?;
        let mut rng = substream(master_seed, Substream::ThetaStar);
        let theta_star = match *self {
            GeneratorSpec::Ridge { dim, .. } => {
                let u = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
                let mut t: Vec<f64> = (0..dim).map(|_| u.sample(&mut rng)).collect();
                let n = norm(&t);
                t.iter_mut().for_each(|v| *v /= n);
                t
            }
            GeneratorSpec::Svm {
                dim,
                theta_lo,
                theta_hi,
                ..
            } => {
                let u = Uniform::new_inclusive(theta_lo, theta_hi).expect("valid range");
                (0..dim).map(|_| u.sample(&mut rng)).collect()
            }
        };
        CleanGenerator::new(self.clone(), theta_star)
    }
}

/// A generator with its ground truth fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanGenerator {
    pub spec: GeneratorSpec,
    pub theta_star: Vec<f64>,
}

/// Per-round randomness for clean data.
pub struct CleanRngs {
    features: ChaCha8Rng,
    noise: ChaCha8Rng,
    mislabel: ChaCha8Rng,
}

impl CleanRngs {
    pub fn new(master_seed: u64) -> Self {
        CleanRngs {
            features: substream(master_seed, Substream::Features),
            noise: substream(master_seed, Substream::Noise),
            mislabel: substream(master_seed, Substream::Mislabel),
        }
    }
}

/// `sign` with `sign(0) = +1`.
fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl CleanGenerator {
    pub fn new(spec: GeneratorSpec, theta_star: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if theta_star.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: theta_star.len(),
            });
        }
        Ok(CleanGenerator { spec, theta_star })
    }

    pub fn family(&self) -> LossFamily {
        self.spec.family()
    }

    pub fn gen_clean_round(&self, rngs: &mut CleanRngs) -> SideInfo {
        let dim = self.theta_star.len();
        match self.spec {
            GeneratorSpec::Ridge {
                feature_std,
                noise_std,
                ..
            } => {
                let x = normal_vec(&mut rngs.features, dim, feature_std);
                let e: f64 = rngs.noise.sample(rand_distr::StandardNormal);
                let y = dot(&self.theta_star, &x) + noise_std * e;
                SideInfo::new(x, y)
            }
            GeneratorSpec::Svm {
                feature_std,
                mislabel_prob,
                margin_band,
                ..
            } => {
                let x = normal_vec(&mut rngs.features, dim, feature_std);
                let score = dot(&self.theta_star, &x);
                let coin: f64 = rngs.mislabel.random();
                let mut y = sign(score);
                if score.abs() <= margin_band && coin < mislabel_prob {
                    y = -y;
                }
                SideInfo::new(x, y)
            }
        }
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize, std: f64) -> Vec<f64> {
    let n = Normal::new(0.0, std).expect("std > 0");
    (0..dim).map(|_| n.sample(rng)).collect()
}

/// What the adversary does to a scheduled round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionOp {
    /// Replace the response by a `Uniform[0, 1]` draw (regression).
    UniformResponse,
    /// Negate the label (classification).
    LabelFlip,
}

impl CorruptionOp {
    pub fn default_for(family: LossFamily) -> Self {
        match family {
            LossFamily::Ridge => CorruptionOp::UniformResponse,
            LossFamily::Svm => CorruptionOp::LabelFlip,
        }
    }

    pub fn check_family(self, family: LossFamily) -> Result<()> {
        match (self, family) {
            (CorruptionOp::UniformResponse, LossFamily::Ridge)
            | (CorruptionOp::LabelFlip, LossFamily::Svm) => Ok(()),
            _ => Err(Error::config(format!(
                "corruption {self:?} does not apply to the {family:?} generator"
            ))),
        }
    }

    /// Features are never touched; only the response/label is replaced.
    pub fn corrupt<R: Rng + ?Sized>(
        self,
        family: LossFamily,
        clean: &SideInfo,
        rng: &mut R,
    ) -> Result<SideInfo> {
        self.check_family(family)?;
        let y = match self {
            CorruptionOp::UniformResponse => rng.random::<f64>(),
            CorruptionOp::LabelFlip => -clean.y,
        };
        Ok(SideInfo::new(clean.x.clone(), y))
    }
}

/// `k` distinct round indices in `1..=T`, uniformly without replacement.
pub fn sample_outlier_rounds<R: Rng + ?Sized>(
    horizon: usize,
    k: usize,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    if k > horizon {
        return Err(Error::invalid(format!("k = {k} exceeds T = {horizon}")));
    }
    Ok(rand::seq::index::sample(rng, horizon, k)
        .into_iter()
        .map(|i| i + 1)
        .collect())
}

/// A stable random subset of `n` round indices for plotting; all rounds when `n ≥ T`.
pub fn plot_subsample(horizon: usize, n: usize, master_seed: u64) -> BTreeSet<usize> {
    let mut rng = substream(master_seed, Substream::Plot);
    sample_outlier_rounds(horizon, n.min(horizon), &mut rng).expect("n clamped to T")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionPlan {
    pub k: usize,
    pub outlier_rounds: BTreeSet<usize>,
    pub op: CorruptionOp,
}

impl CorruptionPlan {
    pub fn sample(horizon: usize, k: usize, op: CorruptionOp, master_seed: u64) -> Result<Self> {
        let mut rng = substream(master_seed, Substream::Outliers);
        Ok(CorruptionPlan {
            k,
            outlier_rounds: sample_outlier_rounds(horizon, k, &mut rng)?,
            op,
        })
    }

    pub fn is_outlier(&self, t: usize) -> bool {
        self.outlier_rounds.contains(&t)
    }
}

/// One round as seen by the harness: both versions of the side information.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRound {
    pub t: usize,
    pub is_outlier: bool,
    pub clean: SideInfo,
    pub emitted: SideInfo,
}

/// One line of the stream dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub t: usize,
    pub is_outlier: bool,
    pub x: Vec<f64>,
    pub y_clean: f64,
    pub y_emitted: f64,
}

impl From<&StreamRound> for StreamRecord {
    fn from(r: &StreamRound) -> Self {
        StreamRecord {
            t: r.t,
            is_outlier: r.is_outlier,
            x: r.clean.x.clone(),
            y_clean: r.clean.y,
            y_emitted: r.emitted.y,
        }
    }
}

/// Lazily generated, seed-deterministic sequence of `T` rounds.
pub struct Stream {
    generator: CleanGenerator,
    plan: CorruptionPlan,
    clean_rngs: CleanRngs,
    corruption_rng: ChaCha8Rng,
    horizon: usize,
    t: usize,
}

impl Stream {
    pub fn new(
        spec: &GeneratorSpec,
        horizon: usize,
        k: usize,
        op: CorruptionOp,
        master_seed: u64,
    ) -> Result<Self> {
        op.check_family(spec.family())?;
        let generator = spec.instantiate(master_seed)?;
        let plan = CorruptionPlan::sample(horizon, k, op, master_seed)?;
        Ok(Stream {
            generator,
            plan,
            clean_rngs: CleanRngs::new(master_seed),
            corruption_rng: substream(master_seed, Substream::Corruption),
            horizon,
            t: 0,
        })
    }

    pub fn generator(&self) -> &CleanGenerator {
        &self.generator
    }

    pub fn plan(&self) -> &CorruptionPlan {
        &self.plan
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

impl Iterator for Stream {
    type Item = StreamRound;

    fn next(&mut self) -> Option<StreamRound> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let clean = self.generator.gen_clean_round(&mut self.clean_rngs);
        let is_outlier = self.plan.is_outlier(self.t);
        let emitted = if is_outlier {
            self.plan
                .op
                .corrupt(self.generator.family(), &clean, &mut self.corruption_rng)
                .expect("operator checked against the generator at construction")
        } else {
            clean.clone()
        };
        Some(StreamRound {
            t: self.t,
            is_outlier,
            clean,
            emitted,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.horizon - self.t;
        (left, Some(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noiseless_ridge_response_is_linear() {
        let spec = GeneratorSpec::Ridge {
            dim: 3,
            feature_std: 1.0,
            noise_std: 0.0,
        };
        let gen = CleanGenerator::new(spec, vec![1.0, 0.0, 0.0]).unwrap();
        let mut rngs = CleanRngs::new(7);
        for _ in 0..50 {
            let s = gen.gen_clean_round(&mut rngs);
            assert_eq!(s.y, s.x[0]);
        }
    }

    #[test]
    fn svm_labels_outside_the_band_never_flip() {
        let spec = GeneratorSpec::Svm {
            dim: 2,
            theta_lo: 1.0,
            theta_hi: 11.0,
            feature_std: 10.0,
            mislabel_prob: 1.0,
            margin_band: 0.1,
        };
        let gen = CleanGenerator::new(spec, vec![3.0, 2.0]).unwrap();
        let mut rngs = CleanRngs::new(11);
        for _ in 0..2000 {
            let s = gen.gen_clean_round(&mut rngs);
            let score = dot(&gen.theta_star, &s.x);
            if score.abs() > 0.1 {
                assert_eq!(s.y, sign(score));
            } else {
                assert_eq!(s.y, -sign(score));
            }
        }
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
    }

    #[test]
    fn ridge_features_have_standard_normal_moments() {
        let gen = GeneratorSpec::ridge_preset().instantiate(3).unwrap();
        assert_relative_eq!(norm(&gen.theta_star), 1.0, max_relative = 1e-14);
        assert!(gen.theta_star.iter().all(|v| v.abs() <= 1.0));
        let mut rngs = CleanRngs::new(3);
        let vals: Vec<f64> = (0..1000)
            .flat_map(|_| gen.gen_clean_round(&mut rngs).x)
            .collect();
        assert_eq!(vals.len(), 100_000);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "var {var}");
    }

    #[test]
    fn svm_preset_ground_truth_range() {
        let gen = GeneratorSpec::svm_preset().instantiate(5).unwrap();
        assert_eq!(gen.theta_star.len(), 2);
        assert!(gen.theta_star.iter().all(|v| (1.0..=11.0).contains(v)));
    }

    #[test]
    fn label_flip_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = SideInfo::new(vec![1.0, 2.0], 1.0);
        let once = CorruptionOp::LabelFlip
            .corrupt(LossFamily::Svm, &s, &mut rng)
            .unwrap();
        assert_eq!(once.y, -1.0);
        assert_eq!(once.x, s.x);
        let twice = CorruptionOp::LabelFlip
            .corrupt(LossFamily::Svm, &once, &mut rng)
            .unwrap();
        assert_eq!(twice, s);
    }

    #[test]
    fn uniform_response_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = SideInfo::new(vec![0.5], 3.0);
        let ys: Vec<f64> = (0..100_000)
            .map(|_| {
                CorruptionOp::UniformResponse
                    .corrupt(LossFamily::Ridge, &s, &mut rng)
                    .unwrap()
                    .y
            })
            .collect();
        assert!(ys.iter().all(|y| (0.0..=1.0).contains(y)));
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        assert!((mean - 0.5).abs() <= 0.01);
    }

    #[test]
    fn operator_must_match_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = SideInfo::new(vec![1.0], 1.0);
        let err = CorruptionOp::LabelFlip
            .corrupt(LossFamily::Ridge, &s, &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(Stream::new(
            &GeneratorSpec::svm_preset(),
            10,
            1,
            CorruptionOp::UniformResponse,
            1
        )
        .is_err());
    }

    #[test]
    fn outlier_sampling_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_outlier_rounds(10, 0, &mut rng).unwrap().is_empty());
        assert_eq!(
            sample_outlier_rounds(10, 10, &mut rng).unwrap(),
            (1..=10).collect::<BTreeSet<_>>()
        );
        assert!(sample_outlier_rounds(3, 4, &mut rng).is_err());
    }

    #[test]
    fn outlier_sampling_is_uniform() {
        let (t, k, reps) = (20usize, 5usize, 10_000usize);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0usize; t + 1];
        for _ in 0..reps {
            let s = sample_outlier_rounds(t, k, &mut rng).unwrap();
            assert_eq!(s.len(), k);
            for i in s {
                counts[i] += 1;
            }
        }
        let p = k as f64 / t as f64;
        let band = 3.0 * (p * (1.0 - p) / reps as f64).sqrt();
        for c in &counts[1..] {
            let freq = *c as f64 / reps as f64;
            assert!((freq - p).abs() <= band, "freq {freq} outside {p} ± {band}");
        }
    }

    #[test]
    fn plot_subsample_is_stable() {
        let a = plot_subsample(10_000, 500, 3);
        assert_eq!(a.len(), 500);
        assert_eq!(a, plot_subsample(10_000, 500, 3));
        assert_ne!(a, plot_subsample(10_000, 500, 4));
        assert_eq!(plot_subsample(5, 500, 3).len(), 5);
    }

    #[test]
    fn clean_rounds_do_not_depend_on_k() {
        let spec = GeneratorSpec::ridge_preset();
        let a: Vec<_> = Stream::new(&spec, 200, 0, CorruptionOp::UniformResponse, 42)
            .unwrap()
            .collect();
        let b: Vec<_> = Stream::new(&spec, 200, 50, CorruptionOp::UniformResponse, 42)
            .unwrap()
            .collect();
        let mut outliers = 0;
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.clean, rb.clean);
            assert!(!ra.is_outlier);
            if rb.is_outlier {
                outliers += 1;
                assert_eq!(rb.emitted.x, rb.clean.x);
            } else {
                assert_eq!(rb.emitted, rb.clean);
            }
        }
        assert_eq!(outliers, 50);
    }

    #[test]
    fn stream_is_seed_deterministic() {
        let spec = GeneratorSpec::svm_preset();
        let a: Vec<_> = Stream::new(&spec, 100, 10, CorruptionOp::LabelFlip, 5)
            .unwrap()
            .collect();
        let b: Vec<_> = Stream::new(&spec, 100, 10, CorruptionOp::LabelFlip, 5)
            .unwrap()
            .collect();
        let c: Vec<_> = Stream::new(&spec, 100, 10, CorruptionOp::LabelFlip, 6)
            .unwrap()
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
