//! Browser bindings for the interactive demo in `www/`.
//!
//! Every export returns a flat `Float64Array`; the layouts are documented on
//! each function. The `*_impl` functions hold the logic so they can be tested
//! natively.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use robust_oco::harness::{run_outcome, LearnerSpec, Preset, RunConfig};
use robust_oco::loss::ReferenceLoss;
use robust_oco::stream::{plot_subsample, Stream};
use robust_oco::{LearnParams, Result};
use wasm_bindgen::prelude::*;

fn to_js(e: robust_oco::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Loss of a residual `r` under the square loss, its LEARN transform, Tukey
/// and Welsch. Rows of `[r, square, learn, tukey, welsch]` for `n` residuals
/// evenly spaced in `[-r_max, r_max]`.
#[wasm_bindgen]
pub fn loss_profiles(
    a: f64,
    b: f64,
    c: f64,
    r_max: f64,
    n: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    loss_profiles_impl(a, b, c, r_max, n).map_err(to_js)
}

pub fn loss_profiles_impl(a: f64, b: f64, c: f64, r_max: f64, n: usize) -> Result<Vec<f64>> {
    let params = LearnParams::new(a, b)?;
    if !(r_max > 0.0) || n < 2 {
        return Err(robust_oco::Error::InvalidInput(
            "need r_max > 0 and n >= 2".into(),
        ));
    }
    let mut out = Vec::with_capacity(5 * n);
    for i in 0..n {
        let r = -r_max + 2.0 * r_max * i as f64 / (n - 1) as f64;
        let f = r * r;
        out.extend([
            r,
            f,
            params.transform(f),
            ReferenceLoss::Tukey.eval(r, c)?,
            ReferenceLoss::Welsch.eval(r, c)?,
        ]);
    }
    Ok(out)
}

/// Names of the learners in the order `regret_curves` returns them.
#[wasm_bindgen]
pub fn learner_names() -> Vec<String> {
    LearnerSpec::sweep_set()
        .iter()
        .map(|l| l.name().to_string())
        .collect()
}

fn demo_config(preset: &str, horizon: usize, k: usize, a: f64, b: f64) -> Result<RunConfig> {
    let mut c = Preset::from_name(preset)?.config();
    c.horizon = horizon;
    c.k = k;
    c.params = LearnParams::new(a, b)?;
    c.validate()?;
    Ok(c)
}

/// Clean dynamic regret of every learner on one seeded stream, sampled at
/// `points` rounds. Layout: `points` round indices, then `points` values per
/// learner in `learner_names()` order.
#[wasm_bindgen]
pub fn regret_curves(
    preset: &str,
    horizon: usize,
    k: usize,
    a: f64,
    b: f64,
    seed: u64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    regret_curves_impl(preset, horizon, k, a, b, seed, points).map_err(to_js)
}

pub fn regret_curves_impl(
    preset: &str,
    horizon: usize,
    k: usize,
    a: f64,
    b: f64,
    seed: u64,
    points: usize,
) -> Result<Vec<f64>> {
    let base = demo_config(preset, horizon, k, a, b)?;
    let points = points.clamp(2, horizon.max(2));
    let idx: Vec<usize> = (0..points)
        .map(|i| ((i * (horizon - 1)) as f64 / (points - 1) as f64).round() as usize)
        .collect();
    let mut out: Vec<f64> = idx.iter().map(|&i| (i + 1) as f64).collect();
    for learner in LearnerSpec::sweep_set() {
        let c = RunConfig {
            learner,
            ..base.clone()
        };
        let o = run_outcome(&c, seed)?;
        out.extend(idx.iter().map(|&i| o.curve.series[i]));
    }
    Ok(out)
}

/// SVM stream and learned boundaries. Layout: `theta_star` (2), the final
/// action of each learner in `learner_names()` order (2 each), the point
/// count `m`, then `m` rows of `[x1, x2, y_emitted, is_outlier]`.
#[wasm_bindgen]
pub fn svm_boundaries(
    horizon: usize,
    k: usize,
    a: f64,
    b: f64,
    seed: u64,
    max_points: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    svm_boundaries_impl(horizon, k, a, b, seed, max_points).map_err(to_js)
}

pub fn svm_boundaries_impl(
    horizon: usize,
    k: usize,
    a: f64,
    b: f64,
    seed: u64,
    max_points: usize,
) -> Result<Vec<f64>> {
    let base = demo_config("svm", horizon, k, a, b)?;
    let stream = Stream::new(&base.generator, horizon, k, base.corruption, seed)?;
    let mut out = stream.generator().theta_star.clone();
    for learner in LearnerSpec::sweep_set() {
        let c = RunConfig {
            learner,
            ..base.clone()
        };
        out.extend(run_outcome(&c, seed)?.final_action);
    }
    let keep = plot_subsample(horizon, max_points.min(horizon), seed);
    out.push(keep.len() as f64);
    for r in stream.filter(|r| keep.contains(&r.t)) {
        out.extend([
            r.emitted.x[0],
            r.emitted.x[1],
            r.emitted.y,
            if r.is_outlier { 1.0 } else { 0.0 },
        ]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_layout_and_shape() {
        let v = loss_profiles_impl(2.0, 1.0, 3.0, 10.0, 41).unwrap();
        assert_eq!(v.len(), 5 * 41);
        let row = |i: usize| &v[5 * i..5 * i + 5];
        assert_eq!(row(0)[0], -10.0);
        assert_eq!(row(40)[0], 10.0);
        assert_eq!(row(20)[0], 0.0);
        // with a = 2, b = 1 the transform lives in [-2 ln 2, 0)
        for i in 0..41 {
            let r = row(i);
            assert!(r[2] <= r[1]);
            assert!(r[2] < 0.0 && r[2] >= -2.0 * 2f64.ln() - 1e-12);
        }
        assert!(loss_profiles_impl(0.0, 1.0, 1.0, 1.0, 5).is_err());
        assert!(loss_profiles_impl(1.0, 1.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn curves_layout() {
        let n = learner_names().len();
        let v = regret_curves_impl("ridge", 300, 17, 10.0, 10.0, 1, 50).unwrap();
        assert_eq!(v.len(), 50 * (n + 1));
        assert_eq!(v[0], 1.0);
        assert_eq!(v[49], 300.0);
        // regret over the clean rounds is nondecreasing in t
        for l in 0..n {
            let s = &v[50 * (l + 1)..50 * (l + 2)];
            assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
        assert_eq!(
            v,
            regret_curves_impl("ridge", 300, 17, 10.0, 10.0, 1, 50).unwrap()
        );
        assert!(regret_curves_impl("ridge", 10, 11, 10.0, 10.0, 1, 5).is_err());
        assert!(regret_curves_impl("lasso", 10, 1, 10.0, 10.0, 1, 5).is_err());
    }

    #[test]
    fn boundaries_layout() {
        let n = learner_names().len();
        let v = svm_boundaries_impl(400, 20, 1e4, 10.0, 2, 100).unwrap();
        let head = 2 + 2 * n;
        assert_eq!(v[head], 100.0);
        assert_eq!(v.len(), head + 1 + 4 * 100);
        let rows = &v[head + 1..];
        let outliers = rows.chunks(4).filter(|r| r[3] == 1.0).count();
        assert!(outliers <= 20);
        assert!(rows.chunks(4).all(|r| r[2] == 1.0 || r[2] == -1.0));
    }
}
