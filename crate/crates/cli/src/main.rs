//! `robust-oco`: run, sweep, verify and inspect robust online learning experiments.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robust_oco::harness::{
    csv_name, k_grid, run_cell, run_outcome, write_regret_csv, CellResult, LearnerSpec, Manifest,
    RunConfig,
};
use robust_oco::oracle::{check_bound_for, run_all, CheckReport};
use robust_oco::stream::{plot_subsample, Stream, StreamRecord};
use serde::Serialize;

use config::{apply_seed_env, resolve, Overrides};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files. Exit 2.
    Usage(String),
    /// Failure while running. Exit 1.
    Runtime(String),
}

impl From<robust_oco::Error> for CliError {
    fn from(e: robust_oco::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "robust-oco",
    version,
    about = "Outlier-robust online convex optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one (learner, k) cell over all seeds
    Run(RunArgs),
    /// Run the learner x k grid of a preset
    Sweep(RunArgs),
    /// Run the numerical checks and a small regret-bound check
    Verify(VerifyArgs),
    /// Write the generated stream as JSON lines, plus each learner's final action
    DumpStream(DumpArgs),
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Samples per check and parameter setting
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Seed of the check sampler
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Seeds of the regret-bound runs
    #[arg(long, default_value = "1..10")]
    seeds: String,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Keep only this many randomly chosen rounds (stable under the seed)
    #[arg(long)]
    subsample: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::DumpStream(a) => cmd_dump_stream(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn validated(config: &RunConfig) -> Result<(), CliError> {
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn write_cell(out: &Path, cell: &CellResult) -> Result<String, CliError> {
    let name = csv_name(&cell.learner, cell.k);
    let path = out.join(&name);
    let f = File::create(&path).map_err(io_err(&path))?;
    write_regret_csv(BufWriter::new(f), &cell.mean, &cell.stderr).map_err(io_err(&path))?;
    Ok(name)
}

fn write_manifest(out: &Path, m: &Manifest) -> Result<(), CliError> {
    let path = out.join("manifest.json");
    let mut text = m.to_json()?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))
}

fn run_cells(
    command: &str,
    base: &RunConfig,
    cells: &[(LearnerSpec, usize)],
    out: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut summaries = Vec::new();
    for (learner, k) in cells {
        let config = RunConfig {
            learner: learner.clone(),
            k: *k,
            ..base.clone()
        };
        validated(&config)?;
        let cell = run_cell(&config)?;
        let name = write_cell(out, &cell)?;
        println!(
            "{:<15} k={:<6} final regret {:.6e} ± {:.3e}  -> {}",
            learner.name(),
            k,
            cell.final_mean(),
            cell.final_stderr(),
            name
        );
        summaries.push(cell.summary(name));
    }
    write_manifest(
        out,
        &Manifest {
            command: command.into(),
            config: base.clone(),
            cells: summaries,
        },
    )
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let r = resolve(&a.overrides)?;
    let mut config = r.config;
    // a replayed manifest fixes the cell unless flags pick another one
    if let Some((learner, k)) = r.cells.first() {
        if a.overrides.learner.is_none() {
            config.learner = learner.clone();
        }
        if a.overrides.k.is_none() {
            config.k = *k;
        }
    }
    validated(&config)?;
    let cell = [(config.learner.clone(), config.k)];
    run_cells("run", &config, &cell, &a.out)
}

fn cmd_sweep(a: &RunArgs) -> Result<(), CliError> {
    let r = resolve(&a.overrides)?;
    let config = r.config;
    let cells: Vec<(LearnerSpec, usize)> = if !r.cells.is_empty() {
        r.cells
    } else {
        k_grid(config.horizon)
            .into_iter()
            .flat_map(|k| LearnerSpec::sweep_set().into_iter().map(move |l| (l, k)))
            .collect()
    };
    validated(&RunConfig {
        k: 0,
        ..config.clone()
    })?;
    run_cells("sweep", &config, &cells, &a.out)
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be >= 1".into()));
    }
    let mut seeds = config::parse_seeds(&a.seeds)?;
    apply_seed_env(&mut seeds)?;
    let mut reports: Vec<CheckReport> = run_all(a.samples, a.seed);
    for k in [0, 14, 34] {
        reports.push(check_bound_for(200, k, &seeds)?);
    }
    for r in &reports {
        println!("{r}");
    }
    let failing: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    if failing.is_empty() {
        println!("all {} checks passed", reports.len());
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "violations in: {}",
            failing.join(", ")
        )))
    }
}

#[derive(Serialize)]
struct FinalActions {
    seed: u64,
    k: usize,
    theta_star: Vec<f64>,
    learners: Vec<FinalAction>,
}

#[derive(Serialize)]
struct FinalAction {
    learner: String,
    theta: Vec<f64>,
}

fn cmd_dump_stream(a: &DumpArgs) -> Result<(), CliError> {
    let config = resolve(&a.overrides)?.config;
    validated(&config)?;
    let seed = config.seeds[0];
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;

    let keep = a.subsample.map(|n| plot_subsample(config.horizon, n, seed));
    let path = a.out.join("stream.jsonl");
    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    let stream = Stream::new(
        &config.generator,
        config.horizon,
        config.k,
        config.corruption,
        seed,
    )?;
    let theta_star = stream.generator().theta_star.clone();
    let mut written = 0usize;
    for round in stream {
        if keep.as_ref().is_some_and(|s| !s.contains(&round.t)) {
            continue;
        }
        let line = serde_json::to_string(&StreamRecord::from(&round))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err(&path))?;
        written += 1;
    }
    w.flush().map_err(io_err(&path))?;

    let mut learners = Vec::new();
    for learner in LearnerSpec::sweep_set() {
        let c = RunConfig {
            learner: learner.clone(),
            seeds: vec![seed],
            ..config.clone()
        };
        let o = run_outcome(&c, seed)?;
        learners.push(FinalAction {
            learner: learner.name().into(),
            theta: o.final_action,
        });
    }
    let finals = FinalActions {
        seed,
        k: config.k,
        theta_star,
        learners,
    };
    let fpath = a.out.join("final_actions.json");
    let text =
        serde_json::to_string_pretty(&finals).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&fpath, text + "\n").map_err(io_err(&fpath))?;
    println!("{written} records -> {}", path.display());
    Ok(())
}
