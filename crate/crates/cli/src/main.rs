//! `feasmass` command-line driver.

mod config;
mod output;
mod verify;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use feasmass::bounds::baseline_table;
use feasmass::experiments::{
    ce_depth_sweep, exact_angle_average, feasible_histogram, grid_search_ce, grid_search_generic, l4_sweep,
    markov_from_masses, parameter_transfer, twirl_existence_experiment, AngleRange, ExperimentResult, GridSpec,
    Method, SurfacePoint,
};
use feasmass::instance::load_qoptlib_instance;
use feasmass::{AngleSchedule, Precision, ProblemInstance, Result};
use serde_json::json;

use config::RunConfig;
use output::{fmt17, Output};
use verify::{Check, Status};

/// Largest synthetic distance for `--n`.
const SYNTHETIC_MAX_ENTRY: u64 = 5;

#[derive(Parser)]
#[command(name = "feasmass", version, about = "Feasible-mass laboratory for generic and constraint-enhanced QAOA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the uniform baseline and closed-form bound table.
    Baseline(InstanceArgs),
    /// Run one experiment and write JSON-lines and CSV results.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run an invariant battery.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file: city count, then the distance matrix rows.
    #[arg(long, conflicts_with = "n")]
    instance: Option<PathBuf>,
    /// Seeded synthetic instance with this many cities.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: InstanceArgs,
    /// Grid point counts, `GxB`.
    #[arg(long)]
    grid: Option<GridSpec>,
    /// Gamma range `LO:HI`.
    #[arg(long, allow_hyphen_values = true)]
    range_gamma: Option<AngleRange>,
    /// Beta range `LO:HI`.
    #[arg(long, allow_hyphen_values = true)]
    range_beta: Option<AngleRange>,
    #[arg(long, default_value_t = 500_000)]
    shots: u64,
    /// Layer count (maximum depth for `depth`).
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    normalized_mixer: bool,
    /// Statevector precision; defaults to f32 from n = 5.
    #[arg(long)]
    precision: Option<Precision>,
    /// Beta values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Markov levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    /// Lattice grid size for angle averages.
    #[arg(long)]
    lattice: Option<usize>,
    /// `generic` or `ce`.
    #[arg(long, default_value = "generic")]
    method: Method,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Avg,
    Markov,
    L4,
    Grid,
    Transfer,
    Histogram,
    Depth,
    Twirl,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Avg => "avg",
            Experiment::Markov => "markov",
            Experiment::L4 => "l4",
            Experiment::Grid => "grid",
            Experiment::Transfer => "transfer",
            Experiment::Histogram => "histogram",
            Experiment::Depth => "depth",
            Experiment::Twirl => "twirl",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Harmonic,
    Twirl,
    Bounds,
    All,
}

enum Failure {
    Usage(String),
    Contract,
}

impl From<feasmass::Error> for Failure {
    fn from(e: feasmass::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(args: &InstanceArgs) -> Result<ProblemInstance> {
    match (&args.instance, args.n) {
        (Some(path), _) => load_qoptlib_instance(path),
        (None, Some(n)) => ProblemInstance::synthetic(n, SYNTHETIC_MAX_ENTRY, args.seed),
        (None, None) => Err(feasmass::Error::InvalidArgument("pass --instance PATH or --n K".into())),
    }
}

fn configure_threads() -> std::result::Result<(), Failure> {
    let Ok(raw) = std::env::var("FEASMASS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("FEASMASS_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_baseline(args: &InstanceArgs) -> std::result::Result<(), Failure> {
    let inst = load(args)?;
    let n = inst.n as u64;
    let perms: u64 = (1..=n).product();
    println!("instance {}", inst.name);
    println!("n {n}");
    println!("N {}", n * n);
    println!("|Pi| {perms}");
    for row in baseline_table(n) {
        let params: Vec<String> = row.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let flag = match row.satisfied {
            Some(false) => "  (fails)",
            _ => "",
        };
        println!(
            "{} [{}] ln={}{flag}",
            row.name,
            params.join(" "),
            fmt17(row.log_value.unwrap_or(f64::NAN))
        );
    }
    Ok(())
}

fn cmd_verify(suite: Suite) -> std::result::Result<(), Failure> {
    let mut checks: Vec<Check> = Vec::new();
    if matches!(suite, Suite::Harmonic | Suite::All) {
        checks.extend(verify::harmonic()?);
    }
    if matches!(suite, Suite::Twirl | Suite::All) {
        checks.extend(verify::twirl()?);
    }
    if matches!(suite, Suite::Bounds | Suite::All) {
        checks.extend(verify::bounds()?);
    }
    for c in &checks {
        println!("{c}");
    }
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    println!(
        "summary: {} pass, {} warn, {} fail",
        count(Status::Pass),
        count(Status::Warn),
        count(Status::Fail)
    );
    if count(Status::Fail) > 0 {
        Err(Failure::Contract)
    } else {
        Ok(())
    }
}

fn record_line(hash: &str, cfg: &RunConfig, record: &ExperimentResult) -> serde_json::Value {
    json!({ "config_hash": hash, "config": cfg.to_json(), "result": record })
}

fn report(record: &ExperimentResult) {
    let metrics: Vec<String> = record.metrics.iter().map(|(k, v)| format!("{k}={}", fmt17(*v))).collect();
    println!("{} {} {}", record.experiment, record.instance, metrics.join(" "));
    for c in &record.contracts {
        println!("  {} {}: {}", if c.satisfied { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn cmd_run(experiment: Experiment, args: &RunArgs) -> std::result::Result<(), Failure> {
    let inst = load(&args.source)?;
    let n = inst.n;
    let default_grid = if matches!(experiment, Experiment::Depth) { "6x6" } else { "10x10" };
    let mut grid = args.grid.unwrap_or_else(|| default_grid.parse().expect("default grid parses"));
    grid = grid.with_ranges(
        args.range_gamma.unwrap_or(grid.gamma_range),
        args.range_beta.unwrap_or(grid.beta_range),
    )?;
    let precision = args
        .precision
        .unwrap_or(if n >= 5 { Precision::F32 } else { Precision::F64 });
    let betas = if !args.beta.is_empty() {
        args.beta.clone()
    } else if matches!(experiment, Experiment::L4) {
        vec![0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0]
    } else {
        vec![0.7]
    };
    let thresholds = if args.t.is_empty() { vec![2.0, 4.0, 9.0] } else { args.t.clone() };
    let cfg = RunConfig {
        command: experiment.name().to_string(),
        instance: args.source.instance.clone(),
        synthetic_n: args.source.instance.is_none().then_some(n),
        grid,
        shots: args.shots,
        seed: args.source.seed,
        depth: args.depth,
        normalized_mixer: args.normalized_mixer,
        precision,
        betas: betas.clone(),
        gamma: args.gamma,
        thresholds: thresholds.clone(),
        lattice: args.lattice,
        method: serde_json::to_value(args.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
    };
    let hash = cfg.hash();
    let out = Output::new(&args.out, experiment.name(), &hash, cfg.seed)?;
    let name = inst.name.clone();
    let started = Instant::now();
    let mut records: Vec<ExperimentResult> = Vec::new();
    let mut files: Vec<PathBuf> = Vec::new();

    match experiment {
        Experiment::Avg | Experiment::Markov => {
            for (i, &beta) in betas.iter().enumerate() {
                let avg = exact_angle_average(&inst, beta, args.lattice)?;
                let points: Vec<SurfacePoint> = avg
                    .per_gamma
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| SurfacePoint {
                        gamma: 2.0 * PI * k as f64 / avg.l as f64,
                        beta,
                        p_feas: p,
                    })
                    .collect();
                files.push(out.write_surface(&format!("lattice-{i}"), &points)?);
                if matches!(experiment, Experiment::Avg) {
                    let mut r = ExperimentResult::new("avg", &name)
                        .param("beta", beta)
                        .param("l", avg.l)
                        .metric("mean", avg.mean)
                        .metric("baseline", avg.baseline)
                        .contract(
                            "mean = n!/2^(n^2) within 1e-10",
                            (avg.mean - avg.baseline).abs() <= 1e-10,
                            format!("|{} - {}|", fmt17(avg.mean), fmt17(avg.baseline)),
                        );
                    if let Some(pred) = avg.level_set_prediction {
                        r = r.metric("level_set_prediction", pred);
                    }
                    records.push(r);
                } else {
                    for &t in &thresholds {
                        let m = markov_from_masses(&avg.per_gamma, avg.baseline, t);
                        records.push(
                            ExperimentResult::new("markov", &name)
                                .param("beta", beta)
                                .param("t", t)
                                .param("l", avg.l)
                                .metric("fraction", m.fraction)
                                .metric("bound", m.bound)
                                .contract("fraction <= 1/t", m.satisfied, format!("{} vs {}", m.fraction, m.bound)),
                        );
                    }
                }
            }
        }
        Experiment::L4 => {
            for p in l4_sweep(&inst, &betas, args.lattice)? {
                records.push(
                    ExperimentResult::new("l4", &name)
                        .param("beta", p.beta)
                        .param("l", p.l)
                        .metric("mean_fourth_moment", p.mean)
                        .metric("envelope", p.envelope)
                        .contract(
                            "mean <= (1/2 + sin^2(2b)/4)^N + 1e-9",
                            p.satisfied,
                            format!("{} vs {}", fmt17(p.mean), fmt17(p.envelope)),
                        ),
                );
            }
        }
        Experiment::Grid => {
            let s = grid_search_generic(&inst, &grid, precision)?;
            files.push(out.write_surface("surface", &s.surface)?);
            records.push(
                ExperimentResult::new("grid", &name)
                    .param("precision", precision.to_string())
                    .metric("gamma_star", s.best.gamma)
                    .metric("beta_star", s.best.beta)
                    .metric("p_max", s.best.p_feas)
                    .metric("p_min", s.worst.p_feas),
            );
        }
        Experiment::Transfer => {
            let t = parameter_transfer(&inst, &grid, precision)?;
            files.push(out.write_surface("surface", &t.search.surface)?);
            records.push(t.to_record(&name));
        }
        Experiment::Histogram => {
            let mut runs: Vec<(String, AngleSchedule)> = Vec::new();
            if let (Some(g), [b]) = (args.gamma, betas.as_slice()) {
                if !args.beta.is_empty() {
                    runs.push(("angles".into(), AngleSchedule::single(g, *b)));
                }
            }
            if runs.is_empty() {
                let search = match args.method {
                    Method::Generic => grid_search_generic(&inst, &grid, precision)?,
                    Method::Ce => grid_search_ce(&inst, &grid, args.normalized_mixer)?,
                };
                files.push(out.write_surface("surface", &search.surface)?);
                runs.push(("argmax".into(), AngleSchedule::single(search.best.gamma, search.best.beta)));
                runs.push(("argmin".into(), AngleSchedule::single(search.worst.gamma, search.worst.beta)));
            }
            for (label, schedule) in runs {
                let h = feasible_histogram(
                    &inst,
                    args.method,
                    &schedule,
                    args.shots,
                    cfg.seed,
                    precision,
                    args.normalized_mixer,
                )?;
                files.push(out.write_histogram(&label, &h.counts, n * n)?);
                records.push(
                    h.to_record(&name)
                        .param("at", label)
                        .param("normalized_mixer", args.normalized_mixer)
                        .metric("gamma", schedule.gammas()[0])
                        .metric("beta", schedule.betas()[0]),
                );
            }
        }
        Experiment::Depth => {
            let points = ce_depth_sweep(&inst, &grid, args.depth, args.normalized_mixer)?;
            for (i, p) in points.iter().enumerate() {
                let mut r = ExperimentResult::new("depth", &name)
                    .param("depth", p.depth)
                    .param("gammas", p.gammas.clone())
                    .param("betas", p.betas.clone())
                    .param("normalized_mixer", args.normalized_mixer)
                    .metric("best_mass", p.best_mass);
                if i > 0 {
                    let prev = points[i - 1].best_mass;
                    r = r.contract(
                        "non-decreasing in depth",
                        p.best_mass >= prev,
                        format!("{} vs {}", fmt17(p.best_mass), fmt17(prev)),
                    );
                }
                records.push(r);
            }
        }
        Experiment::Twirl => {
            let schedule = AngleSchedule::single(args.gamma.unwrap_or(0.7), betas[0]);
            let e = twirl_existence_experiment(&inst, &schedule, args.normalized_mixer, cfg.seed)?;
            records.push(e.to_record(&name).param("normalized_mixer", args.normalized_mixer));
        }
    }

    let lines: Vec<serde_json::Value> = records.iter().map(|r| record_line(&hash, &cfg, r)).collect();
    files.insert(0, out.write_jsonl(&lines)?);
    println!("config_hash {hash}");
    for r in &records {
        report(r);
    }
    for f in &files {
        println!("wrote {}", f.display());
    }
    eprintln!("elapsed {:.3}s", started.elapsed().as_secs_f64());
    if records.iter().all(ExperimentResult::all_satisfied) {
        Ok(())
    } else {
        Err(Failure::Contract)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Baseline(args) => cmd_baseline(args),
        Command::Run { experiment, args } => cmd_run(*experiment, args),
        Command::Verify { suite } => cmd_verify(*suite),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Contract) => {
            eprintln!("contract violation");
            ExitCode::from(2)
        }
    }
}
