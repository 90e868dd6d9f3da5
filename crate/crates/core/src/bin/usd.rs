use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use usd::optimality::{build_certificate, check_optimality, OptimalityReport};
use usd::oracle::{oracle_optimize, OracleConfig};
use usd::pipeline::{
    class_boundaries, dispatch, reduction_summary, sweep, uniform_grid, write_csv, BoundTriangle, MeasurementFile,
    ProblemFile, SolveReport,
};
use usd::{model, Error};

#[derive(Parser, Debug)]
#[command(name = "usd", version, about = "Optimal unambiguous discrimination of two mixed states")]
struct Cli {
    /// Override a tolerance, e.g. `--tol equality=1e-8`; may be repeated.
    #[arg(long = "tol", value_name = "KEY=VALUE", global = true)]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal measurement for one prior.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        prior: Prior,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Optimal success along a uniform grid of priors, written as CSV.
    Sweep {
        problem: PathBuf,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimality test and certificate for a given measurement.
    Verify {
        problem: PathBuf,
        measurement: PathBuf,
        #[command(flatten)]
        prior: Prior,
    },
    /// Summary of the reductions applied before solving.
    Reduce {
        problem: PathBuf,
        #[command(flatten)]
        prior: Prior,
    },
    /// Independent interior-point optimum.
    Oracle {
        problem: PathBuf,
        #[command(flatten)]
        prior: Prior,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
}

#[derive(Args, Debug)]
struct Prior {
    /// Prior of the first state; defaults to `p1` in the problem file.
    #[arg(long)]
    p1: Option<f64>,
}

enum Failure {
    Invalid(String),
    NotOptimal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoSolutionFound(_) | Error::NonConvergence(_) => Failure::NotOptimal(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path, tol: &[String]) -> Result<ProblemFile, Failure> {
    let mut p =
        ProblemFile::from_json(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    for item in tol {
        let (key, value) =
            item.split_once('=').ok_or_else(|| Failure::Invalid(format!("--tol expects KEY=VALUE, got `{item}`")))?;
        let value: f64 =
            value.parse().map_err(|_| Failure::Invalid(format!("--tol {key}: `{value}` is not a number")))?;
        p.tol.set(key, value)?;
    }
    Ok(p)
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", usd::pipeline::to_compact_json(value));
}

fn solve(problem: &ProblemFile, p1: Option<f64>, json: bool, csv: bool) -> Result<(), Failure> {
    let s = problem.pair(p1)?;
    let p1 = p1.or(problem.p1).expect("pair() checked the prior");
    let out = dispatch(&s)?;
    let (rho1, rho2) = problem.states()?;
    let bounds = BoundTriangle::new(&rho1, &rho2, &problem.tol)?;
    let report = SolveReport::new(&out, p1, &bounds);
    if json {
        print_json(&report);
    } else if csv {
        let row = usd::pipeline::SweepRow {
            p1,
            success_probability: out.success,
            class_tag: out.class_tag,
            branch: out.branch,
            lower_bound: report.lower_bound,
            upper_bound: report.upper_bound,
            optimal: report.optimal,
        };
        write_csv(&[row], std::io::stdout().lock())?;
    } else {
        println!("success      {}", usd::pipeline::format_sig17(out.success));
        println!("class        {}", out.class_tag);
        println!("branch       {}", out.branch);
        println!("optimal      {}", report.optimal);
        println!("bounds       [{}, {}]", report.lower_bound, report.upper_bound);
        if let Some(r) = report.certificate_residual {
            println!("certificate  residual {r:.3e}");
        }
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
    }
    if report.optimal {
        Ok(())
    } else {
        Err(Failure::NotOptimal(format!("no certified optimum; best known success {}", out.success)))
    }
}

fn run_sweep(problem: &ProblemFile, min: f64, max: f64, steps: usize, out: &Path) -> Result<(), Failure> {
    let grid = uniform_grid(min, max, steps)?;
    let rows = sweep(problem, &grid)?;
    let file = fs::File::create(out).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    let mut w = BufWriter::new(file);
    write_csv(&rows, &mut w)?;
    w.flush()?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    for b in class_boundaries(&rows) {
        println!("class {} -> {} between p1 = {} and {}", b.from, b.to, b.after, b.before);
    }
    let uncertified = rows.iter().filter(|r| !r.optimal).count();
    if uncertified > 0 {
        return Err(Failure::NotOptimal(format!("{uncertified} grid points without a certified optimum")));
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    usd: bool,
    success: f64,
    optimal: bool,
    conditions: OptimalityReport,
    certificate_residual: Option<f64>,
    certificate_error: Option<String>,
}

fn verify(problem: &ProblemFile, measurement: &Path, p1: Option<f64>) -> Result<(), Failure> {
    let s = problem.pair(p1)?;
    let file = MeasurementFile::from_json(&read(measurement)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", measurement.display())))?;
    let m = file.measurement(&problem.tol)?;
    if !m.is_usd(&s) {
        return Err(Failure::Invalid("the measurement is not a USD measurement for this pair".into()));
    }
    let conditions = check_optimality(&m, &s)?;
    let (certificate_residual, certificate_error) = match build_certificate(&m, &s) {
        Ok(z) => (Some(z.residuals.max()), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let optimal = conditions.is_optimal;
    let violations = conditions.violations();
    print_json(&VerifyReport {
        usd: true,
        success: model::success_probability(&m, &s),
        optimal,
        conditions,
        certificate_residual,
        certificate_error,
    });
    if optimal {
        Ok(())
    } else {
        Err(Failure::NotOptimal(format!("not optimal: {}", violations.join("; "))))
    }
}

#[derive(Serialize)]
struct OracleReport {
    success: f64,
    gap_bound: f64,
    feasibility_residual: f64,
    newton_steps: usize,
    max_restart_distance: f64,
    measurement: MeasurementFile,
}

fn oracle(problem: &ProblemFile, p1: Option<f64>, seed: u64, restarts: usize) -> Result<(), Failure> {
    let s = problem.pair(p1)?;
    let cfg = OracleConfig { seed, restarts, ..OracleConfig::default() };
    let r = oracle_optimize(&s, &cfg)?;
    print_json(&OracleReport {
        success: r.success,
        gap_bound: r.gap_bound,
        feasibility_residual: r.feasibility_residual,
        newton_steps: r.newton_steps,
        max_restart_distance: r.per_restart_distances.iter().cloned().fold(0.0, f64::max),
        measurement: MeasurementFile::from_measurement(&r.measurement),
    });
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { problem, prior, json, csv } => solve(&load_problem(&problem, &cli.tol)?, prior.p1, json, csv),
        Command::Sweep { problem, min, max, steps, out } => {
            run_sweep(&load_problem(&problem, &cli.tol)?, min, max, steps, &out)
        }
        Command::Verify { problem, measurement, prior } => {
            verify(&load_problem(&problem, &cli.tol)?, &measurement, prior.p1)
        }
        Command::Reduce { problem, prior } => {
            let s = load_problem(&problem, &cli.tol)?.pair(prior.p1)?;
            print_json(&reduction_summary(&s)?);
            Ok(())
        }
        Command::Oracle { problem, prior, seed, restarts } => {
            oracle(&load_problem(&problem, &cli.tol)?, prior.p1, seed, restarts)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotOptimal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
