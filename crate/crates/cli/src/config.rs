//! Config files and command-line overrides.
//!
//! A config file is flat TOML with two optional sections:
//!
//! ```toml
//! preset = "svm"          # ridge | svm, the base every other key overrides
//! horizon = 2000
//! k = 44
//! learner = "experts"     # ogd | learn | topk | uncertain-topk | experts
//! seeds = [1, 2, 3]
//! alpha = 0.02            # fixed step size; default 1/sqrt(T)
//! step_size = "theoretical"
//! a = 10.0
//! b = 10.0
//! lambda = 1e-4
//! radius = 5.0            # omit for an unbounded domain
//! scale = 0.1
//!
//! [experts]
//! c = 1.0
//! a_max = 45.0
//! epsilon = 1.0
//! beta = 0.05
//!
//! [gradient_bound]
//! g = 0.0
//! l = 300.0
//! ```
//!
//! A `manifest.json` written by `run` or `sweep` is accepted in place of a TOML
//! file and replays the recorded configuration.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use robust_oco::harness::{GradientBound, LearnerSpec, Manifest, Preset, RunConfig, StepSizeSpec};
use robust_oco::learners::Radius;
use serde::Deserialize;

use crate::CliError;

pub const SEED_ENV: &str = "ROBUST_OCO_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub horizon: Option<usize>,
    pub k: Option<usize>,
    pub learner: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub alpha: Option<f64>,
    pub step_size: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub radius: Option<f64>,
    pub scale: Option<f64>,
    pub experts: Option<ExpertsSection>,
    pub gradient_bound: Option<GradientBound>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertsSection {
    pub c: Option<f64>,
    pub a_max: Option<f64>,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
}

/// Flags shared by every experiment subcommand; each one overrides the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Config file (TOML, or a manifest.json from an earlier run)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base preset: ridge or svm
    #[arg(long)]
    pub preset: Option<String>,
    /// Number of rounds
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<usize>,
    /// Number of corrupted rounds
    #[arg(long)]
    pub k: Option<usize>,
    /// Seeds: a list `1,2,5` or an inclusive range `1..30`
    #[arg(long)]
    pub seeds: Option<String>,
    /// ogd, learn, topk, uncertain-topk or experts
    #[arg(long)]
    pub learner: Option<String>,
    /// Fixed step size (default 1/sqrt(T))
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Multiplies T; the k grid of a sweep follows the scaled T
    #[arg(long)]
    pub scale: Option<f64>,
}

/// Effective configuration plus the cells a manifest asked to replay.
pub struct Resolved {
    pub config: RunConfig,
    pub cells: Vec<(LearnerSpec, usize)>,
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse seeds {s:?}; use `1,2,3` or `1..30`"));
    let seeds: Vec<u64> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// `ROBUST_OCO_SEED=s` shifts the seed list to `s, s+1, …` keeping its length.
pub fn apply_seed_env(seeds: &mut [u64]) -> Result<(), CliError> {
    if let Ok(v) = std::env::var(SEED_ENV) {
        let base: u64 = v.trim().parse().map_err(|_| {
            CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))
        })?;
        for (i, s) in seeds.iter_mut().enumerate() {
            *s = base + i as u64;
        }
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn resolve(o: &Overrides) -> Result<Resolved, CliError> {
    let mut file = FileConfig::default();
    let mut from_manifest: Option<Manifest> = None;
    if let Some(path) = &o.config {
        let text = read_file(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            from_manifest = Some(Manifest::from_json(&text).map_err(usage)?);
        } else {
            file = toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        }
    }

    let (mut config, cells, replay) = match from_manifest {
        Some(m) => {
            let cells = m.cells.iter().map(|c| (c.learner.clone(), c.k)).collect();
            (m.config, cells, true)
        }
        None => {
            let preset = o
                .preset
                .as_deref()
                .or(file.preset.as_deref())
                .unwrap_or("ridge");
            (
                Preset::from_name(preset).map_err(usage)?.config(),
                Vec::new(),
                false,
            )
        }
    };
    if replay && o.preset.is_some() {
        return Err(CliError::Usage(
            "--preset cannot be combined with a manifest config".into(),
        ));
    }

    apply_file(&mut config, &file)?;

    if let Some(t) = o.horizon {
        config.horizon = t;
    }
    if let Some(scale) = o.scale.or(file.scale) {
        config = config.scaled(scale).map_err(usage)?;
    }
    if let Some(k) = o.k {
        config.k = k;
    }
    if let Some(s) = &o.seeds {
        config.seeds = parse_seeds(s)?;
    }
    if let Some(l) = &o.learner {
        config.learner = LearnerSpec::from_name(l).map_err(usage)?;
    }
    if let Some(a) = o.alpha {
        config.step_size = StepSizeSpec::Fixed(a);
    }
    if let Some(a) = o.a {
        config.params.a = a;
    }
    if let Some(b) = o.b {
        config.params.b = b;
    }
    if let Some(l) = o.lambda {
        config.loss.lambda = l;
    }
    apply_seed_env(&mut config.seeds)?;
    Ok(Resolved { config, cells })
}

fn apply_file(config: &mut RunConfig, f: &FileConfig) -> Result<(), CliError> {
    if let Some(t) = f.horizon {
        config.horizon = t;
    }
    if let Some(k) = f.k {
        config.k = k;
    }
    if let Some(l) = &f.learner {
        config.learner = LearnerSpec::from_name(l).map_err(usage)?;
    }
    if let Some(s) = &f.seeds {
        config.seeds = s.clone();
    }
    match f.step_size.as_deref() {
        None => {}
        Some("theoretical") => config.step_size = StepSizeSpec::Theoretical,
        Some("inv-sqrt-t") => config.step_size = StepSizeSpec::InvSqrtT,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown step_size {other:?} (expected theoretical or inv-sqrt-t; use alpha for a fixed step)"
            )))
        }
    }
    if let Some(a) = f.alpha {
        config.step_size = StepSizeSpec::Fixed(a);
    }
    if let Some(a) = f.a {
        config.params.a = a;
    }
    if let Some(b) = f.b {
        config.params.b = b;
    }
    if let Some(l) = f.lambda {
        config.loss.lambda = l;
    }
    if let Some(r) = f.radius {
        config.radius = Radius::new(r).map_err(usage)?;
    }
    if let Some(gb) = f.gradient_bound {
        config.gradient_bound = Some(gb);
    }
    if let Some(e) = &f.experts {
        let name = f.learner.as_deref().unwrap_or(config.learner.name());
        if name != "experts" {
            return Err(CliError::Usage(
                "[experts] section given but the learner is not experts".into(),
            ));
        }
        let LearnerSpec::Experts {
            c,
            a_max,
            epsilon,
            beta,
        } = &mut config.learner
        else {
            unreachable!("learner checked above")
        };
        if let Some(v) = e.c {
            *c = v;
        }
        if e.a_max.is_some() {
            *a_max = e.a_max;
        }
        if let Some(v) = e.epsilon {
            *epsilon = v;
        }
        if e.beta.is_some() {
            *beta = e.beta;
        }
    }
    Ok(())
}
