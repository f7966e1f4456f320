//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.
//!
//! Thresholds are pinned here:
//! - oracle tolerance 1e-9, relative above magnitude 1, at least 1e5 samples
//! - "flattens": mean slope over the last 20% of rounds is at most half the
//!   mean slope over the first 20%
//! - "strictly increasing over the final 20%": mean curve at T exceeds the mean
//!   curve at 0.8T
//! - experts vs LEARN: max/min of the two final mean regrets is at most 3

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use robust_oco::experts::ExpertGrid;
use robust_oco::harness::{
    k_grid, run_cell, write_regret_csv, CellResult, LearnerSpec, Preset, RunConfig,
};
use robust_oco::linalg::angle_deg;
use robust_oco::oracle::{check_bound_for, run_all};
use robust_oco::stream::Stream;
use robust_oco::{ExpertPool, Learner};

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!(
            "[{}] criterion {id}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
}

fn flattens(mean: &[f64]) -> (bool, f64, f64) {
    let n = mean.len();
    let w = (n / 5).max(1);
    let early = mean[w - 1] / w as f64;
    let late = (mean[n - 1] - mean[n - 1 - w]) / w as f64;
    (late <= 0.5 * early, early, late)
}

fn rising_tail(mean: &[f64]) -> (bool, f64) {
    let n = mean.len();
    let start = mean[n - 1 - n / 5];
    let rise = mean[n - 1] - start;
    (rise > 0.0, rise)
}

type Cells = HashMap<(&'static str, usize), CellResult>;

fn run_grid(preset: Preset, horizon: usize, seeds: u64, ks: &[usize]) -> Cells {
    let mut base = preset.config();
    base.horizon = horizon;
    base.seeds = (1..=seeds).collect();
    let mut out = HashMap::new();
    for &k in ks {
        for learner in LearnerSpec::sweep_set() {
            let cfg = RunConfig {
                k,
                learner: learner.clone(),
                ..base.clone()
            };
            let cell = run_cell(&cfg).expect("cell runs");
            out.insert((learner.name(), k), cell);
        }
    }
    out
}

fn final_of(cells: &Cells, learner: &'static str, k: usize) -> f64 {
    cells[&(learner, k)].final_mean()
}

fn curve_criteria(out: &mut Outcome, id: &str, cells: &Cells, k_mid: usize) {
    let names = ["learn", "ogd", "topk", "uncertain-topk"];

    let mut flat_ok = true;
    let mut flat_desc = Vec::new();
    for n in names {
        let (ok, early, late) = flattens(&cells[&(n, 0)].mean);
        flat_ok &= ok;
        flat_desc.push(format!("{n} {late:.3e}/{early:.3e}"));
    }
    let (learn0, ogd0) = (final_of(cells, "learn", 0), final_of(cells, "ogd", 0));
    out.line(
        &format!("{id}a"),
        flat_ok && learn0 > ogd0,
        format!(
            "k=0 flatten (late/early slope: {}) = {flat_ok}; LEARN {learn0:.4e} > OGD {ogd0:.4e} = {}",
            flat_desc.join(", "),
            learn0 > ogd0
        ),
    );

    let (learn_k, ogd_k) = (
        final_of(cells, "learn", k_mid),
        final_of(cells, "ogd", k_mid),
    );
    let learn_ok = learn_k <= 2.0 * learn0;
    let ogd_ok = ogd_k >= 10.0 * ogd0;
    out.line(
        &format!("{id}b"),
        learn_ok && ogd_ok,
        format!(
            "k={k_mid}: LEARN {learn_k:.4e} <= 2x{learn0:.4e} = {learn_ok}; OGD {ogd_k:.4e} >= 10x{ogd0:.4e} = {ogd_ok} (ratio {:.2})",
            ogd_k / ogd0
        ),
    );

    let (t, u) = (
        final_of(cells, "topk", k_mid),
        final_of(cells, "uncertain-topk", k_mid),
    );
    let order = learn_k < t && t < u && u <= ogd_k;
    out.line(
        &format!("{id}c"),
        order,
        format!("k={k_mid} ordering LEARN {learn_k:.4e} < Top-k {t:.4e} < Uncertain {u:.4e} <= OGD {ogd_k:.4e}"),
    );
}

fn tail_criterion(cells: &Cells, k_quarter: usize) -> (bool, String) {
    let mut ok = true;
    let mut desc = Vec::new();
    for n in ["learn", "ogd", "topk", "uncertain-topk"] {
        let (rising, rise) = rising_tail(&cells[&(n, k_quarter)].mean);
        ok &= rising;
        desc.push(format!("{n} +{rise:.3e}"));
    }
    (ok, desc.join(", "))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn main() -> ExitCode {
    let mut out = Outcome { failed: 0 };

    // 1. oracle suite
    let (reports, took) = timed(|| run_all(100_000, 20240607));
    for r in &reports {
        println!("       {r}");
    }
    let bad: Vec<_> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    let enough = reports.iter().all(|r| r.samples >= 100_000);
    out.line(
        "1",
        bad.is_empty() && enough && took <= Duration::from_secs(60),
        format!(
            "oracle suite: {} checks, failing [{}], >=1e5 samples each = {enough}, {:.1}s (limit 60s)",
            reports.len(),
            bad.join(", "),
            took.as_secs_f64()
        ),
    );

    // 2. bound check
    let mut all = true;
    let mut desc = Vec::new();
    let seeds: Vec<u64> = (1..=10).collect();
    for k in [0, 14, 34] {
        let r = check_bound_for(200, k, &seeds).expect("bound check runs");
        all &= r.passed();
        desc.push(format!(
            "k={k} violations={}/{} slack={:.3e}",
            r.violations, r.samples, r.worst_slack
        ));
    }
    out.line(
        "2",
        all,
        format!("T=200, D=5 regret <= bound: {}", desc.join("; ")),
    );

    // 3. ridge at T = 1e4
    let t = 10_000;
    let ks = k_grid(t);
    let (ridge, took) = timed(|| run_grid(Preset::Ridge, t, 10, &[0, ks[2], ks[3]]));
    curve_criteria(&mut out, "3", &ridge, ks[2]);
    out.line(
        "3t",
        took <= Duration::from_secs(300),
        format!("ridge runtime {:.1}s (limit 300s)", took.as_secs_f64()),
    );

    // 4. SVM at T = 1e4
    let (svm, took) = timed(|| run_grid(Preset::Svm, t, 10, &[0, ks[2], ks[3]]));
    curve_criteria(&mut out, "4", &svm, ks[2]);
    let a0 = svm[&("learn", 0)].mean_angle_deg();
    let ak = svm[&("learn", ks[2])].mean_angle_deg();
    out.line(
        "4d",
        ak <= a0 + 5.0,
        format!(
            "LEARN boundary angle k={} {ak:.3}° <= k=0 {a0:.3}° + 5°",
            ks[2]
        ),
    );
    out.line(
        "4t",
        took <= Duration::from_secs(300),
        format!("svm runtime {:.1}s (limit 300s)", took.as_secs_f64()),
    );

    // 5. k = T/4
    let (r_ok, r_desc) = tail_criterion(&ridge, ks[3]);
    let (s_ok, s_desc) = tail_criterion(&svm, ks[3]);
    out.line(
        "5",
        r_ok && s_ok,
        format!(
            "k={} rising over final 20%: ridge [{r_desc}]; svm [{s_desc}]",
            ks[3]
        ),
    );

    // 6. expert framework
    let ((ratio_ok, detail), took) = timed(criterion_six);
    out.line(
        "6",
        ratio_ok && took <= Duration::from_secs(180),
        format!("{detail}, {:.1}s (limit 180s)", took.as_secs_f64()),
    );

    // 7. determinism
    let mut cfg = Preset::Svm.config();
    cfg.horizon = 2000;
    cfg.k = 158;
    cfg.seeds = vec![3, 4, 5];
    let csv = |c: &RunConfig| {
        let cell = run_cell(c).expect("cell runs");
        let mut buf = Vec::new();
        write_regret_csv(&mut buf, &cell.mean, &cell.stderr).expect("write");
        buf
    };
    let mut same = true;
    for learner in LearnerSpec::sweep_set() {
        cfg.learner = learner;
        same &= csv(&cfg) == csv(&cfg);
    }
    out.line(
        "7",
        same,
        format!("identical config and seeds give byte-identical CSVs = {same}"),
    );

    // SVM decision-boundary angles for reference
    for n in ["learn", "ogd", "topk", "uncertain-topk"] {
        let c = &svm[&(n, ks[2])];
        let o = &c.outcomes[0];
        println!(
            "       {n:<15} k={} mean angle {:.3}°, seed {} angle {:.3}°",
            ks[2],
            c.mean_angle_deg(),
            o.seed,
            angle_deg(&o.final_action, &o.theta_star)
        );
    }

    println!("{} criteria failed", out.failed);
    if out.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn criterion_six() -> (bool, String) {
    let t: usize = 2000;
    let a_max = (t as f64).sqrt().ceil();
    let k = t.isqrt();
    let mut base = Preset::Svm.config();
    base.horizon = t;
    base.k = k;
    base.seeds = (1..=10).collect();
    let experts = RunConfig {
        learner: LearnerSpec::Experts {
            c: 1.0,
            a_max: Some(a_max),
            epsilon: 1.0,
            beta: None,
        },
        ..base.clone()
    };
    let learn = RunConfig {
        learner: LearnerSpec::Learn,
        ..base.clone()
    };
    let e = run_cell(&experts).expect("experts run").final_mean();
    let l = run_cell(&learn).expect("learn run").final_mean();
    let ratio = e.max(l) / e.min(l);

    let grid = ExpertGrid::build(a_max, 1.0, t).expect("grid");
    let size_ok = (grid.len() as f64) <= grid.size_bound();

    // drive one pool directly to inspect its weights
    let nu = base.params.nu();
    let beta = robust_oco::experts::beta_default(grid.len(), t, nu).expect("beta");
    let n = grid.len();
    let mut learner = Learner::Experts(Box::new(
        ExpertPool::new(grid, base.generator.dim(), base.params, beta).expect("pool"),
    ));
    for round in Stream::new(&base.generator, t, k, base.corruption, 1).expect("stream") {
        learner.step(&round.emitted, &base.loss).expect("step");
    }
    let finite = match &learner {
        Learner::Experts(p) => p.log_weights.iter().all(|w| w.is_finite()),
        _ => unreachable!(),
    };
    (
        ratio <= 3.0 && size_ok && finite,
        format!(
            "T={t}, A_max={a_max}, k={k}: experts {e:.4e} vs LEARN {l:.4e} ratio {ratio:.3} <= 3; N={n} <= T·log2(A_max)={:.1} = {size_ok}; log-weights finite = {finite}",
            t as f64 * a_max.log2()
        ),
    )
}
