//! `subvisc` command-line front-end. One JSON config per run; reports are
//! JSON with a `schema_version` field.
//!
//! Exit codes: 0 success, 1 property failure, 2 config or precondition
//! error, 3 non-convergence, 4 hypothesis failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use subvisc::analysis::{derive_bundle, verify_theorem, write_bins_csv};
use subvisc::config::{Instance, RunConfig, SCHEMA_VERSION};
use subvisc::doubling::growth_condition_margin;
use subvisc::lemmas;
use subvisc::solver::{solve, two_box_sensitivity};
use subvisc::structure::cc_distance_estimate;
use subvisc::Error;

#[derive(Parser)]
#[command(name = "subvisc", version, about = "Degenerate elliptic operators on Carnot-type structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Matrix-lemma and test-function suites.
    LemmaCheck(Flags),
    /// Solve the configured problem and write the solution CSV.
    Solve(Flags),
    /// Solve, then check the hypotheses and the Hölder estimate.
    Verify(Flags),
    /// Carnot–Carathéodory distance estimate between two points.
    CcDistance(Flags),
    /// Growth condition on expanding spheres.
    GrowthCheck(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output_dir`, else `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Property(String),
    Config(String),
    NonConvergence(String),
    Hypothesis(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property(_) => 1,
            Failure::Config(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Hypothesis(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Property(m) | Failure::Config(m) | Failure::NonConvergence(m) | Failure::Hypothesis(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Precondition(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) => {
                Failure::Config(e.to_string())
            }
            other => Failure::Property(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

const DEFAULT_TRIALS: usize = 1000;
const DEFAULT_SEED: u64 = 7;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::LemmaCheck(f) => lemma_check(f),
        Command::Solve(f) => cmd_solve(f),
        Command::Verify(f) => cmd_verify(f),
        Command::CcDistance(f) => cmd_cc(f),
        Command::GrowthCheck(f) => cmd_growth(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("subvisc: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load(flags: &Flags) -> Result<Option<RunConfig>, Failure> {
    let Some(path) = &flags.config else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(Some(RunConfig::from_json_str(&text)?))
}

fn require(flags: &Flags) -> Result<RunConfig, Failure> {
    load(flags)?.ok_or_else(|| Failure::Config("this command needs --config".into()))
}

fn out_dir(flags: &Flags, cfg: Option<&RunConfig>) -> Result<PathBuf, Failure> {
    let dir = flags
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Prints the report and writes it to `dir/name`.
fn emit(dir: &Path, name: &str, report: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(report).map_err(|e| Failure::Property(format!("report encoding: {e}")))?;
    println!("{text}");
    let path = dir.join(name);
    fs::write(&path, text + "\n").map_err(|e| Failure::Property(format!("cannot write {}: {e}", path.display())))
}

fn lemma_check(flags: &Flags) -> Outcome {
    let cfg = load(flags)?;
    let trials = flags.trials.unwrap_or(DEFAULT_TRIALS);
    let seed = flags.seed.unwrap_or(DEFAULT_SEED);
    if trials == 0 {
        return Err(Failure::Config("--trials must be positive".into()));
    }
    let extra = match &cfg {
        Some(c) => Some(c.structure()?),
        None => None,
    };
    let extras: Vec<&subvisc::CarnotStructure> = extra.iter().map(|s| s.as_ref()).collect();
    let report = lemmas::run_all(&extras, trials, seed)?;
    let dir = out_dir(flags, cfg.as_ref())?;
    let failing = report.failing_suites();
    emit(&dir, "lemma_report.json", &json!({ "schema_version": SCHEMA_VERSION, "report": report }))?;
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Property(format!("unexpected verdicts in {}", failing.join(", "))))
    }
}

fn write_solution(dir: &Path, u: &subvisc::solver::GridFunction) -> Outcome {
    let path = dir.join("solution.csv");
    let file = fs::File::create(&path).map_err(|e| Failure::Property(format!("cannot write {}: {e}", path.display())))?;
    u.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

fn cmd_solve(flags: &Flags) -> Outcome {
    let cfg = require(flags)?;
    let Instance { spec, coeffs, grid, solve: scfg, exact } = cfg.instance()?;
    let (u, report) = solve(&spec, &coeffs, &grid, &scfg)?;
    let dir = out_dir(flags, Some(&cfg))?;
    write_solution(&dir, &u)?;
    let max_error = exact.as_ref().map(|p| u.max_error(|x| p.eval(x)));
    let two_box = match cfg.two_box_factor {
        Some(f) if report.converged => Some(two_box_sensitivity(&spec, &coeffs, &grid, &scfg, f)?),
        _ => None,
    };
    emit(
        &dir,
        "solve_report.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "operator": spec.summary(),
            "report": report,
            "max_error": max_error,
            "two_box": two_box,
        }),
    )?;
    if report.converged {
        Ok(())
    } else {
        Err(Failure::NonConvergence(format!(
            "no convergence after {} iterations (residual {:e})",
            report.iterations, report.residual
        )))
    }
}

fn cmd_verify(flags: &Flags) -> Outcome {
    let cfg = require(flags)?;
    let Instance { spec, coeffs, grid, solve: scfg, .. } = cfg.instance()?;
    let mut opts = cfg.analysis();
    if let Some(s) = flags.seed {
        opts.seed = s;
    }
    let (u, report) = solve(&spec, &coeffs, &grid, &scfg)?;
    if !report.converged {
        return Err(Failure::NonConvergence(format!("solve did not converge (residual {:e})", report.residual)));
    }
    let lip = match spec.structure.lipschitz_sigma() {
        Some(l) => l,
        None => spec.structure.lipschitz_sigma_estimate(grid.bbox(), opts.lipschitz_samples, opts.seed)?.value,
    };
    let bundle = derive_bundle(&spec, &coeffs, &u, lip, opts.eta)?;
    let hr = verify_theorem(&spec, &coeffs, &u, &report, &bundle, &opts)?;
    let dir = out_dir(flags, Some(&cfg))?;
    write_solution(&dir, &u)?;
    let bins = dir.join("holder_bins.csv");
    let file = fs::File::create(&bins).map_err(|e| Failure::Property(format!("cannot write {}: {e}", bins.display())))?;
    write_bins_csv(&hr.bins, std::io::BufWriter::new(file))?;
    emit(
        &dir,
        "holder_report.json",
        &json!({ "schema_version": SCHEMA_VERSION, "solve": report, "report": hr }),
    )?;
    let failing = hr.failing_hypotheses();
    if !failing.is_empty() {
        let named: Vec<String> = failing.iter().map(|k| format!("{k}=fail")).collect();
        return Err(Failure::Hypothesis(format!("hypothesis failure: {}", named.join(", "))));
    }
    if hr.max_violation > 0.0 {
        return Err(Failure::Property(format!("Hölder inequality violated by {:e}", hr.max_violation)));
    }
    Ok(())
}

fn cmd_cc(flags: &Flags) -> Outcome {
    let cfg = require(flags)?;
    let cc = cfg.cc_distance.as_ref().ok_or_else(|| Failure::Config("missing 'cc_distance' section".into()))?;
    let s = cfg.structure()?;
    let est = cc_distance_estimate(&s, &cc.a, &cc.b, cc.resolution, &cc.options)?;
    let dir = out_dir(flags, Some(&cfg))?;
    emit(
        &dir,
        "cc_report.json",
        &json!({ "schema_version": SCHEMA_VERSION, "structure": s.name(), "a": cc.a, "b": cc.b, "estimate": est }),
    )
}

const DEFAULT_GROWTH_RADII: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

fn cmd_growth(flags: &Flags) -> Outcome {
    let cfg = require(flags)?;
    let g = cfg.growth.as_ref().ok_or_else(|| Failure::Config("missing 'growth' section".into()))?;
    let s = cfg.structure()?;
    let radii = g.radii.clone().unwrap_or_else(|| DEFAULT_GROWTH_RADII.to_vec());
    let seed = flags.seed.or(g.seed).unwrap_or(DEFAULT_SEED);
    let report = growth_condition_margin(&s, g.c0, g.big_lambda, &radii, seed)?;
    let dir = out_dir(flags, Some(&cfg))?;
    emit(
        &dir,
        "growth_report.json",
        &json!({ "schema_version": SCHEMA_VERSION, "structure": s.name(), "seed": seed, "report": report }),
    )?;
    if report.satisfied {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!("growth_condition=fail (tail margin {:e})", report.tail)))
    }
}
