//! Command-line front end. Exit codes: 0 success, 1 invalid input, 2 solver
//! failure or violated certificate.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use serde::Serialize;

use super::experiment::{run_unmixing_experiment_with, ExperimentOptions};
use super::io::{
    read_matrix, read_trace_objectives, read_vector, write_certificates, write_matrix_file,
    write_trace_file, write_vector_file,
};
use super::scene::{generate_scene, SceneConfig};
use crate::constraints::{BlockSimplexConstraint, Constraint, SimplexConstraint};
use crate::diagnostics::{
    certify_bound, certify_objectives, min_slack, BoundCertificate, ReferenceSolution,
    REFERENCE_MAX_ITERS, REFERENCE_REL_TOL,
};
use crate::error::{Error, Result};
use crate::problem::{validate_problem, PoissonModel, PoissonProblem};
use crate::solvers::{constrained_emml_run, emml_run, SolveResult, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "emml", version, about = "EMML and constrained EMML for Poisson inverse problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Unconstrained EMML on CSV inputs.
    Solve(SolveArgs),
    /// EMML followed by a Bregman projection onto a simplex or a product of simplices.
    SolveConstrained(ConstrainedArgs),
    /// EMML versus constrained EMML on a synthetic unmixing scene.
    Unmix(UnmixArgs),
    /// Re-evaluates the sublinear bound on a saved trace.
    VerifyBounds(VerifyArgs),
    /// Writes a synthetic scene to CSV files.
    GenScene(GenSceneArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Nonnegative m×n matrix, comma-separated, no header.
    #[arg(long)]
    matrix: PathBuf,
    /// Nonnegative observation vector of length m.
    #[arg(long)]
    obs: PathBuf,
    /// Strictly positive starting point (default: all ones, or the constraint's center).
    #[arg(long)]
    x0: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Threshold on ‖x⁺ − x‖² / ‖x‖².
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Iterations of the reference run behind the bound columns; 0 skips them.
    #[arg(long, default_value_t = 10_000)]
    reference_iters: usize,
    /// Per-iteration trace CSV.
    #[arg(long)]
    out: PathBuf,
    /// Final iterate, one value per line.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConstraintArgs {
    /// `simplex` or `simplex:<target sum>`.
    #[arg(long, conflicts_with = "blocks")]
    constraint: Option<String>,
    /// Product of unit simplices over consecutive blocks of this size.
    #[arg(long)]
    blocks: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct ConstrainedArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    constraint: ConstraintArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct SceneArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Approximate mean total expected photon count per pixel.
    #[arg(long, default_value_t = 40.0)]
    sigma: f64,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    bands: usize,
    #[arg(long, default_value_t = 3)]
    endmembers: usize,
    #[arg(long, default_value_t = 4.0)]
    smoothness: f64,
}

impl SceneArgs {
    fn config(&self) -> SceneConfig {
        SceneConfig {
            height: self.height,
            width: self.width,
            n_endmembers: self.endmembers,
            n_bands: self.bands,
            sigma: self.sigma,
            smoothness: self.smoothness,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct UnmixArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Iterations of the reference runs behind the certificates; 0 skips them.
    #[arg(long, default_value_t = 10_000)]
    reference_iters: usize,
    /// JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-solver traces and abundance maps here.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    constraint: ConstraintArgs,
    /// Trace CSV with an `objective` column.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = REFERENCE_MAX_ITERS)]
    reference_iters: usize,
    /// Most negative slack still accepted.
    #[arg(long, default_value_t = 1e-9)]
    slack_tol: f64,
    /// Certificate table (N, lhs, rhs, slack).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenSceneArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::SolveConstrained(a) => solve_constrained(a),
        Command::Unmix(a) => unmix(a),
        Command::VerifyBounds(a) => verify_bounds(a),
        Command::GenScene(a) => gen_scene(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn load_problem(a: &ProblemArgs) -> Result<PoissonProblem> {
    let m = read_matrix(&a.matrix)?;
    let y = read_vector(&a.obs)?;
    validate_problem(m, y)
}

fn start_point(a: &ProblemArgs, n: usize, c: Option<&dyn Constraint>) -> Result<Array1<f64>> {
    match (&a.x0, c) {
        (Some(path), _) => read_vector(path),
        (None, Some(c)) => c.interior_point(n),
        (None, None) => Ok(Array1::ones(n)),
    }
}

fn build_constraint(a: &ConstraintArgs, n: usize) -> Result<Box<dyn Constraint>> {
    if let Some(size) = a.blocks {
        if size == 0 || n % size != 0 {
            return Err(Error::InvalidConfig(format!(
                "block size {size} does not divide the {n} unknowns"
            )));
        }
        return Ok(Box::new(BlockSimplexConstraint::uniform(n / size, size, 1.0)?));
    }
    let spec = a.constraint.as_deref().unwrap_or("simplex");
    let target = match spec.split_once(':') {
        None if spec == "simplex" => 1.0,
        Some(("simplex", t)) => t
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidConfig(format!("bad simplex target {t:?}")))?,
        _ => {
            return Err(Error::InvalidConfig(format!(
                "unknown constraint {spec:?}; expected simplex or simplex:<target>"
            )))
        }
    };
    Ok(Box::new(SimplexConstraint::new(target)?))
}

fn solver_config(max_iters: usize, tol: f64) -> SolverConfig {
    SolverConfig {
        max_iters,
        rel_change_tol: tol,
        ..SolverConfig::default()
    }
}

fn finish_run(
    p: &PoissonProblem,
    x0: &Array1<f64>,
    run: &RunArgs,
    result: &SolveResult,
    reference: Option<ReferenceSolution>,
) -> Result<i32> {
    let certs = match &reference {
        Some(r) => Some(certify_bound(&result.trace, r, x0.view(), p.column_sums())?),
        None => None,
    };
    write_trace_file(&run.out, &result.trace, certs.as_deref())?;
    if let Some(path) = &run.solution {
        write_vector_file(path, result.x.view())?;
    }
    let last = result.trace.records.last().and_then(|r| r.objective);
    println!(
        "{} iterations ({:?}), final objective {}",
        result.trace.iterations,
        result.trace.termination,
        last.map_or("n/a".to_string(), |f| f.to_string())
    );
    if let Some(certs) = certs {
        println!("bound min slack {:e}", min_slack(&certs));
    }
    Ok(0)
}

fn solve(a: SolveArgs) -> Result<i32> {
    let p = load_problem(&a.problem)?;
    let x0 = start_point(&a.problem, p.n_unknowns(), None)?;
    let cfg = solver_config(a.run.max_iters, a.run.tol);
    let result = emml_run(&p, x0.view(), &cfg)?;
    let reference = (a.run.reference_iters > 0)
        .then(|| ReferenceSolution::unconstrained(&p, x0.view(), a.run.reference_iters, REFERENCE_REL_TOL))
        .transpose()?;
    finish_run(&p, &x0, &a.run, &result, reference)
}

fn solve_constrained(a: ConstrainedArgs) -> Result<i32> {
    let p = load_problem(&a.problem)?;
    let c = build_constraint(&a.constraint, p.n_unknowns())?;
    let x0 = start_point(&a.problem, p.n_unknowns(), Some(c.as_ref()))?;
    let cfg = solver_config(a.run.max_iters, a.run.tol);
    let result = constrained_emml_run(&p, c.as_ref(), x0.view(), &cfg)?;
    let reference = (a.run.reference_iters > 0)
        .then(|| {
            ReferenceSolution::constrained(&p, c.as_ref(), x0.view(), a.run.reference_iters, REFERENCE_REL_TOL)
        })
        .transpose()?;
    finish_run(&p, &x0, &a.run, &result, reference)
}

fn unmix(a: UnmixArgs) -> Result<i32> {
    let scene = generate_scene(&a.scene.config())?;
    let cfg = solver_config(a.max_iters, a.tol);
    let opts = ExperimentOptions {
        reference_iters: (a.reference_iters > 0).then_some(a.reference_iters),
        ..ExperimentOptions::default()
    };
    let report = run_unmixing_experiment_with(&scene, &cfg, &opts)?;
    fs::write(&a.out, report.to_json()?)?;
    if let Some(dir) = &a.trace_dir {
        fs::create_dir_all(dir)?;
        for s in &report.solvers {
            let certs = (!s.certificates.is_empty()).then_some(s.certificates.as_slice());
            write_trace_file(&dir.join(format!("{}_trace.csv", s.name)), &s.trace, certs)?;
            write_matrix_file(&dir.join(format!("{}_abundances.csv", s.name)), s.abundances.view())?;
        }
    }
    for s in &report.solvers {
        println!(
            "{}: {} iterations ({:?}), mean PSNR {:.3} dB",
            s.name, s.iterations, s.termination, s.mean_psnr
        );
    }
    Ok(0)
}

fn verify_bounds(a: VerifyArgs) -> Result<i32> {
    let p = load_problem(&a.problem)?;
    let objectives = read_trace_objectives(fs::File::open(&a.trace)?)?;
    let constrained = a.constraint.constraint.is_some() || a.constraint.blocks.is_some();
    let c = if constrained {
        Some(build_constraint(&a.constraint, p.n_unknowns())?)
    } else {
        None
    };
    let x0 = start_point(&a.problem, p.n_unknowns(), c.as_deref())?;
    let reference = match &c {
        Some(c) => ReferenceSolution::constrained(&p, c.as_ref(), x0.view(), a.reference_iters, REFERENCE_REL_TOL)?,
        None => ReferenceSolution::unconstrained(&p, x0.view(), a.reference_iters, REFERENCE_REL_TOL)?,
    };
    let certs = certify_objectives(&objectives, &reference, x0.view(), p.column_sums())?;
    if let Some(path) = &a.out {
        write_certificates(fs::File::create(path)?, &certs)?;
    }
    report_certificates(&certs, a.slack_tol)
}

fn report_certificates(certs: &[BoundCertificate], slack_tol: f64) -> Result<i32> {
    let worst = min_slack(certs);
    let violations: Vec<usize> = certs
        .iter()
        .filter(|c| c.slack < -slack_tol)
        .map(|c| c.iteration)
        .collect();
    println!("{} iterations checked, min slack {:e}", certs.len(), worst);
    if violations.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "bound violated at {} iterations (first at N = {})",
            violations.len(),
            violations[0]
        );
        Ok(2)
    }
}

#[derive(Serialize)]
struct SceneFile<'a> {
    config: &'a SceneConfig,
    files: [&'static str; 4],
}

fn gen_scene(a: GenSceneArgs) -> Result<i32> {
    let scene = generate_scene(&a.scene.config())?;
    let dir: &Path = &a.out_dir;
    fs::create_dir_all(dir)?;
    write_matrix_file(&dir.join("spectra.csv"), scene.spectra.view())?;
    write_matrix_file(&dir.join("abundances.csv"), scene.abundances.view())?;
    write_matrix_file(&dir.join("counts.csv"), scene.counts.view())?;
    write_matrix_file(&dir.join("expected.csv"), scene.expected.view())?;
    let meta = SceneFile {
        config: &scene.config,
        files: ["spectra.csv", "abundances.csv", "counts.csv", "expected.csv"],
    };
    fs::write(dir.join("scene.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!("wrote {} pixels × {} bands to {}", scene.config.n_pixels(), scene.config.n_bands, dir.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_constraint_specs() {
        let c = |s: Option<&str>, b: Option<usize>| {
            build_constraint(
                &ConstraintArgs {
                    constraint: s.map(str::to_string),
                    blocks: b,
                },
                6,
            )
        };
        assert_eq!(c(None, None).unwrap().describe(), "simplex(sum = 1)");
        assert_eq!(c(Some("simplex:2.5"), None).unwrap().describe(), "simplex(sum = 2.5)");
        assert_eq!(c(None, Some(3)).unwrap().describe(), "block-simplex(2 blocks)");
        assert!(c(None, Some(4)).is_err());
        assert!(c(Some("ball"), None).is_err());
        assert!(c(Some("simplex:-1"), None).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(cli_main(["emml", "frobnicate"]), 1);
        assert_eq!(cli_main(["emml", "solve", "--matrix", "a.csv"]), 1);
        assert_eq!(cli_main(["emml", "--help"]), 0);
    }
}
