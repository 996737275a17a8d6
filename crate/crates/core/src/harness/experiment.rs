//! EMML versus constrained EMML on a synthetic unmixing scene.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Serialize, Serializer};

use super::batch::PixelBatch;
use super::scene::{SceneConfig, UnmixingScene};
use crate::constraints::{BlockSimplexConstraint, Constraint};
use crate::diagnostics::{
    certify_bound, min_slack, psnr, reference_config, BoundCertificate, ReferenceSolution,
    REFERENCE_REL_TOL,
};
use crate::error::{Error, Result};
use crate::problem::PoissonModel;
use crate::solvers::{constrained_emml_run, emml_run, SolveResult, SolveTrace, SolverConfig, Termination};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGMA_SEMANTICS: &str =
    "sigma is the approximate mean total expected photon count per pixel; larger sigma means higher SNR";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    /// Iteration budget of the reference runs used for the bound certificates;
    /// `None` skips the certificates.
    pub reference_iters: Option<usize>,
    /// Positivity floor used by the constrained runs when the solver
    /// configuration has none. Pixels with all-zero counts send every EMML
    /// coordinate to 0, where the projection is undefined.
    pub constrained_floor: f64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            reference_iters: Some(10_000),
            constrained_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub sigma_semantics: &'static str,
    pub scene: SceneConfig,
    pub solver: SolverConfigEcho,
    pub solvers: Vec<SolverReport>,
}

impl ExperimentReport {
    pub fn solver(&self, name: &str) -> Option<&SolverReport> {
        self.solvers.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverConfigEcho {
    pub step_size: f64,
    pub max_iters: usize,
    pub rel_change_tol: f64,
    pub positivity_floor: f64,
}

impl From<&SolverConfig> for SolverConfigEcho {
    fn from(c: &SolverConfig) -> Self {
        Self {
            step_size: c.step_size,
            max_iters: c.max_iters,
            rel_change_tol: c.rel_change_tol,
            positivity_floor: c.positivity_floor,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub name: &'static str,
    pub iterations: usize,
    pub termination: Termination,
    pub final_objective: f64,
    #[serde(serialize_with = "finite_or_null_vec")]
    pub psnr: Vec<f64>,
    #[serde(serialize_with = "finite_or_null")]
    pub mean_psnr: f64,
    pub max_feasibility_gap: Option<f64>,
    pub positivity_floor: f64,
    pub certificate: Option<CertificateSummary>,
    pub trace: SolveTrace,
    #[serde(skip)]
    pub certificates: Vec<BoundCertificate>,
    /// Estimated abundances, one row per pixel.
    #[serde(skip)]
    pub abundances: Array2<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub reference: ReferenceSolution,
    pub min_slack: f64,
    /// `lhs / rhs` at the last iteration; small values mean the run beat the bound.
    pub final_ratio: f64,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn finite_or_null_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let opts: Vec<Option<f64>> = v.iter().map(|&x| x.is_finite().then_some(x)).collect();
    opts.serialize(s)
}

/// Runs both solvers with the default certificate budget.
pub fn run_unmixing_experiment(scene: &UnmixingScene, solver_cfg: &SolverConfig) -> Result<ExperimentReport> {
    run_unmixing_experiment_with(scene, solver_cfg, &ExperimentOptions::default())
}

/// Solves every pixel with EMML and with simplex-constrained EMML from the
/// uniform start `1/q`, batched as one block-diagonal problem whose stopping
/// rule uses the relative change of the whole abundance image.
pub fn run_unmixing_experiment_with(
    scene: &UnmixingScene,
    solver_cfg: &SolverConfig,
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    let solver_cfg = &SolverConfig {
        record_objective: true,
        ..*solver_cfg
    };
    solver_cfg.validate()?;
    let batch = scene.batch()?;
    let q = batch.n_endmembers();
    let x0 = Array1::from_elem(batch.n_unknowns(), 1.0 / q as f64);
    let constraint = BlockSimplexConstraint::uniform(batch.n_pixels(), q, 1.0)?;

    let constrained_cfg = SolverConfig {
        positivity_floor: solver_cfg.positivity_floor.max(opts.constrained_floor),
        ..*solver_cfg
    };
    constrained_cfg.validate()?;

    let emml = emml_run(&batch, x0.view(), solver_cfg).map_err(|e| attach_pixel(e, q))?;
    let constrained = constrained_emml_run(&batch, &constraint, x0.view(), &constrained_cfg)
        .map_err(|e| attach_pixel(e, q))?;

    let (emml_cert, constrained_cert) = match opts.reference_iters {
        Some(iters) => {
            let r_emml = ReferenceSolution::unconstrained(&batch, x0.view(), iters, REFERENCE_REL_TOL)?;
            let r_con = ReferenceSolution::constrained_with(
                &batch,
                &constraint,
                x0.view(),
                &SolverConfig {
                    positivity_floor: constrained_cfg.positivity_floor,
                    ..reference_config(iters, REFERENCE_REL_TOL)
                },
            )
            .map_err(|e| attach_pixel(e, q))?;
            (Some(r_emml), Some(r_con))
        }
        None => (None, None),
    };

    let solvers = vec![
        summarize("emml", scene, &batch, &emml, x0.view(), emml_cert, None, solver_cfg.positivity_floor)?,
        summarize(
            "constrained_emml",
            scene,
            &batch,
            &constrained,
            x0.view(),
            constrained_cert,
            Some(&constraint),
            constrained_cfg.positivity_floor,
        )?,
    ];

    Ok(ExperimentReport {
        schema: SCHEMA_VERSION,
        sigma_semantics: SIGMA_SEMANTICS,
        scene: scene.config,
        solver: solver_cfg.into(),
        solvers,
    })
}

fn summarize(
    name: &'static str,
    scene: &UnmixingScene,
    batch: &PixelBatch,
    result: &SolveResult,
    x0: ArrayView1<'_, f64>,
    reference: Option<ReferenceSolution>,
    constraint: Option<&BlockSimplexConstraint>,
    positivity_floor: f64,
) -> Result<SolverReport> {
    let abundances = batch.as_pixels(result.x.view());
    let psnr_per: Vec<f64> = (0..batch.n_endmembers())
        .map(|e| psnr(abundances.column(e), scene.abundances.column(e), 1.0))
        .collect::<Result<_>>()?;
    let mean_psnr = psnr_per.iter().sum::<f64>() / psnr_per.len() as f64;
    let max_feasibility_gap = constraint.map(|c| c.feasibility_gap(result.x.view()));

    let (certificate, certificates) = match reference {
        Some(reference) => {
            let certs = certify_bound(&result.trace, &reference, x0, batch.column_sums())?;
            let last = certs.last().copied();
            let summary = CertificateSummary {
                min_slack: min_slack(&certs),
                final_ratio: last.map_or(f64::NAN, |c| c.lhs / c.rhs),
                reference,
            };
            (Some(summary), certs)
        }
        None => (None, Vec::new()),
    };

    let final_objective = result
        .trace
        .records
        .last()
        .and_then(|r| r.objective)
        .or(result.trace.initial_objective)
        .ok_or(Error::MissingObjectiveTrace)?;

    Ok(SolverReport {
        name,
        iterations: result.trace.iterations,
        termination: result.trace.termination,
        final_objective,
        psnr: psnr_per,
        mean_psnr,
        max_feasibility_gap,
        positivity_floor,
        certificate,
        trace: result.trace.clone(),
        certificates,
        abundances,
    })
}

/// Maps a coordinate-level solver error onto the pixel that owns it.
fn attach_pixel(e: Error, q: usize) -> Error {
    match e {
        Error::ZeroCoordinateUnprojectable { index } => Error::Pixel {
            pixel: index / q,
            source: Box::new(Error::ZeroCoordinateUnprojectable { index: index % q }),
        },
        Error::NonPositiveInput { index } => Error::Pixel {
            pixel: index / q,
            source: Box::new(Error::NonPositiveInput { index: index % q }),
        },
        other => other,
    }
}
