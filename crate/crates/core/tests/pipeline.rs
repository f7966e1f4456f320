//! End-to-end through the public API: regret, path length and δ_S recomputed
//! from a regenerated stream must match what the harness reports.

use approx::assert_relative_eq;
use robust_oco::harness::{run_episode, run_outcome, LearnerSpec, Preset, RunConfig};
use robust_oco::linalg::dist;
use robust_oco::stream::Stream;
use robust_oco::Radius;

fn small(preset: Preset, learner: LearnerSpec, k: usize) -> RunConfig {
    let mut c = preset.config();
    c.horizon = 400;
    c.k = k;
    c.learner = learner;
    c.seeds = vec![11];
    c
}

fn recompute(config: &RunConfig, seed: u64) -> (Vec<f64>, f64, f64) {
    let radius = config.comparator_radius().as_option();
    let loss = &config.loss;
    let records = run_episode(config, seed).unwrap();
    let stream = Stream::new(
        &config.generator,
        config.horizon,
        config.k,
        config.corruption,
        seed,
    )
    .unwrap();
    let mut series = Vec::new();
    let mut acc = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    let (mut v, mut delta) = (0.0, 0.0f64);
    for (round, rec) in stream.zip(&records) {
        assert_eq!(round.t, rec.t);
        let star = loss.minimizer_in_ball(&round.clean, radius).unwrap();
        if let Some(p) = &prev {
            v += dist(p, &star);
        }
        if round.is_outlier {
            let bad = loss.minimizer_in_ball(&round.emitted, radius).unwrap();
            delta = delta.max(dist(&bad, &star));
        } else {
            acc += loss.eval(&round.clean, &rec.theta).unwrap()
                - loss.eval(&round.clean, &star).unwrap();
        }
        series.push(acc);
        prev = Some(star);
    }
    (series, v, delta)
}

#[test]
fn harness_matches_recomputation() {
    let cases = [
        small(Preset::Ridge, LearnerSpec::Learn, 20),
        small(Preset::Ridge, LearnerSpec::TopK, 20),
        small(Preset::Svm, LearnerSpec::Ogd, 50),
        small(Preset::Svm, LearnerSpec::UncertainTopK, 0),
        small(
            Preset::Svm,
            LearnerSpec::Experts {
                c: 1.0,
                a_max: None,
                epsilon: 1.0,
                beta: None,
            },
            20,
        ),
    ];
    for config in cases {
        let o = run_outcome(&config, 11).unwrap();
        let (series, v, delta) = recompute(&config, 11);
        assert_eq!(o.curve.series.len(), series.len());
        for (a, b) in o.curve.series.iter().zip(&series) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9, max_relative = 1e-9);
        }
        assert_relative_eq!(o.curve.path_length, v, max_relative = 1e-12);
        assert_relative_eq!(o.curve.delta_s, delta, max_relative = 1e-12);
        if config.k == 0 {
            assert_eq!(o.curve.delta_s, 0.0);
        }
    }
}

#[test]
fn bounded_runs_stay_in_the_ball() {
    let mut config = small(Preset::Ridge, LearnerSpec::Learn, 30);
    config.radius = Radius::Ball(0.5);
    for rec in run_episode(&config, 3).unwrap() {
        assert!(robust_oco::linalg::norm(&rec.theta) <= 0.5 + 1e-12);
        assert!(robust_oco::linalg::norm(&rec.comparator_clean) <= 0.5 + 1e-12);
    }
}

#[test]
fn corrupted_rounds_do_not_move_clean_regret() {
    let config = small(Preset::Svm, LearnerSpec::Learn, 60);
    let records = run_episode(&config, 5).unwrap();
    let o = run_outcome(&config, 5).unwrap();
    for (i, r) in records.iter().enumerate().skip(1) {
        if r.is_outlier {
            assert_eq!(o.curve.series[i], o.curve.series[i - 1]);
        }
    }
    assert_eq!(records.iter().filter(|r| r.is_outlier).count(), 60);
}
