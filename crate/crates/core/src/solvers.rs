//! EMML, mirror descent in the log-variable, and constrained EMML.

use ndarray::{Array1, ArrayView1, Zip};
use serde::Serialize;

use crate::constraints::Constraint;
use crate::diagnostics::{objective_value, rel_change};
use crate::error::{Error, Result};
use crate::mirror::{LogPartitionMap, MirrorMap};
use crate::problem::{check_len, check_positive, PoissonModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Mirror-descent step `τ ∈ (0, 1]`; `1` is plain EMML.
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once `‖x⁺ − x‖² / ‖x‖²` drops below this.
    pub rel_change_tol: f64,
    pub record_objective: bool,
    /// Lower clamp applied to every EMML output (before any projection). Any
    /// positive value departs from the multiplicative update; `0` disables it.
    pub positivity_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            max_iters: 1000,
            rel_change_tol: 1e-5,
            record_objective: true,
            positivity_floor: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step size must lie in (0, 1], got {}",
                self.step_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_change_tol >= 0.0) {
            return Err(Error::InvalidConfig("rel_change_tol must be nonnegative".into()));
        }
        if !(self.positivity_floor >= 0.0 && self.positivity_floor.is_finite()) {
            return Err(Error::InvalidConfig("positivity_floor must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Tolerance,
    MaxIters,
}

/// Diagnostics for the iterate produced at step `iteration` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: Option<f64>,
    pub rel_change: f64,
    pub feasibility_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace {
    /// Objective at the starting point.
    pub initial_objective: Option<f64>,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub iterations: usize,
}

impl SolveTrace {
    /// Objective after each step, if it was recorded.
    pub fn objectives(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.objective).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Array1<f64>,
    pub trace: SolveTrace,
}

/// `x ⊙ ((1 − τ) + τ Aᵀ(y ⊘ Ax) ⊘ w)` for a nonnegative `x`. Entries with
/// `y_i = 0` contribute exactly zero to the back-projected ratio.
pub(crate) fn emml_update<M: PoissonModel + ?Sized>(
    p: &M,
    x: ArrayView1<'_, f64>,
    tau: f64,
) -> Result<Array1<f64>> {
    let back = backprojected_ratio(p, x);
    let w = p.column_sums();
    let next = if tau == 1.0 {
        Zip::from(&x)
            .and(&back)
            .and(&w)
            .map_collect(|&xj, &bj, &wj| xj * bj / wj)
    } else {
        Zip::from(&x)
            .and(&back)
            .and(&w)
            .map_collect(|&xj, &bj, &wj| xj * ((1.0 - tau) + tau * bj / wj))
    };
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteResult)
    }
}

/// `Aᵀ(y ⊘ Ax)` with `0/anything = 0`.
fn backprojected_ratio<M: PoissonModel + ?Sized>(p: &M, x: ArrayView1<'_, f64>) -> Array1<f64> {
    let ax = p.apply(x);
    let ratio = Zip::from(&p.observation())
        .and(&ax)
        .map_collect(|&y, &a| if y == 0.0 { 0.0 } else { y / a });
    p.apply_adjoint(ratio.view())
}

/// One EMML step `x ⊙ Aᵀ(y ⊘ Ax) ⊘ Aᵀ1` from a strictly positive point.
pub fn emml_step<M: PoissonModel + ?Sized>(p: &M, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_len(x, p.n_unknowns(), "iterate length")?;
    check_positive(x)?;
    emml_update(p, x, 1.0)
}

/// Iterates EMML from `x0` until the relative change falls below tolerance.
pub fn emml_run<M: PoissonModel + ?Sized>(
    p: &M,
    x0: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    emml_run_observed(p, x0, cfg, |_, _| {})
}

/// [`emml_run`] calling `observer(k, x_k)` after every step.
pub fn emml_run_observed<M, F>(
    p: &M,
    x0: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
    observer: F,
) -> Result<SolveResult>
where
    M: PoissonModel + ?Sized,
    F: FnMut(usize, ArrayView1<'_, f64>),
{
    let step = |_: usize, x: ArrayView1<'_, f64>, tau: f64| -> Result<Array1<f64>> {
        let mut next = emml_update(p, x, tau)?;
        apply_floor(&mut next, cfg.positivity_floor);
        Ok(next)
    };
    run(p, x0, cfg, observer, step, None)
}

/// Projected mirror descent: an EMML step followed by a Bregman projection
/// onto `c` in the geometry `−Σ (w_j x̃_j) log x_j`.
pub fn constrained_emml_run<M, C>(
    p: &M,
    c: &C,
    x0: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
) -> Result<SolveResult>
where
    M: PoissonModel + ?Sized,
    C: Constraint + ?Sized,
{
    constrained_emml_run_observed(p, c, x0, cfg, |_, _| {})
}

pub fn constrained_emml_run_observed<M, C, F>(
    p: &M,
    c: &C,
    x0: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
    observer: F,
) -> Result<SolveResult>
where
    M: PoissonModel + ?Sized,
    C: Constraint + ?Sized,
    F: FnMut(usize, ArrayView1<'_, f64>),
{
    let step = |k: usize, x: ArrayView1<'_, f64>, tau: f64| -> Result<Array1<f64>> {
        let mut x_tilde = emml_update(p, x, tau)?;
        apply_floor(&mut x_tilde, cfg.positivity_floor);
        if let Some(index) = x_tilde.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroCoordinateUnprojectable { index });
        }
        c.project(p.column_sums(), x_tilde.view())
            .map_err(|e| match e {
                e @ Error::RootFindFailure { .. } => Error::ProjectionFailure {
                    iteration: k,
                    source: Box::new(e),
                },
                other => other,
            })
    };
    run(p, x0, cfg, observer, step, Some(&|x| c.feasibility_gap(x)))
}

type GapFn<'a> = &'a dyn Fn(ArrayView1<'_, f64>) -> f64;

fn run<M, F, S>(
    p: &M,
    x0: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
    mut observer: F,
    mut step: S,
    gap: Option<GapFn<'_>>,
) -> Result<SolveResult>
where
    M: PoissonModel + ?Sized,
    F: FnMut(usize, ArrayView1<'_, f64>),
    S: FnMut(usize, ArrayView1<'_, f64>, f64) -> Result<Array1<f64>>,
{
    cfg.validate()?;
    check_len(x0, p.n_unknowns(), "initial point length")?;
    check_positive(x0)?;

    let mut x = x0.to_owned();
    let initial_objective = cfg.record_objective.then(|| objective_value(p, x.view()));
    let mut records = Vec::with_capacity(cfg.max_iters.min(4096));
    let mut termination = Termination::MaxIters;

    for k in 1..=cfg.max_iters {
        let next = step(k, x.view(), cfg.step_size)?;
        let change = rel_change(x.view(), next.view())?;
        records.push(IterationRecord {
            iteration: k,
            objective: cfg.record_objective.then(|| objective_value(p, next.view())),
            rel_change: change,
            feasibility_gap: gap.map(|g| g(next.view())),
        });
        observer(k, next.view());
        x = next;
        if change < cfg.rel_change_tol {
            termination = Termination::Tolerance;
            break;
        }
    }

    let iterations = records.len();
    Ok(SolveResult {
        x,
        trace: SolveTrace {
            initial_objective,
            records,
            termination,
            iterations,
        },
    })
}

fn apply_floor(x: &mut Array1<f64>, floor: f64) {
    if floor > 0.0 {
        x.mapv_inplace(|v| v.max(floor));
    }
}

/// Gradient of `θ ↦ KL(y, A e^θ)`, namely `e^θ ⊙ (w − Aᵀ(y ⊘ A e^θ))`.
pub fn objective_grad_theta<M: PoissonModel + ?Sized>(
    p: &M,
    theta: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    check_len(theta, p.n_unknowns(), "theta length")?;
    if let Some(index) = theta.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFiniteEntry {
            what: "theta",
            index,
        });
    }
    let x = theta.mapv(f64::exp);
    if x.iter().any(|&v| !v.is_finite() || v == 0.0) {
        return Err(Error::NonFiniteResult);
    }
    let back = backprojected_ratio(p, x.view());
    let grad = Zip::from(&x)
        .and(&p.column_sums())
        .and(&back)
        .map_collect(|&xj, &wj, &bj| xj * (wj - bj));
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(Error::NonFiniteResult)
    }
}

/// Mirror-descent step in `θ` under the log-partition map:
/// `∇A⁻¹(∇A(θ) − τ∇L(θ))`.
pub fn md_step_theta<M: PoissonModel + ?Sized>(
    p: &M,
    theta: ArrayView1<'_, f64>,
    tau: f64,
) -> Result<Array1<f64>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidConfig(format!("step size must be positive, got {tau}")));
    }
    let map = LogPartitionMap::new(p.column_sums().to_owned())?;
    let grad = objective_grad_theta(p, theta)?;
    let dual = map.gradient(theta)? - grad * tau;
    map.gradient_inverse(dual.view())
}

/// Residual of the M-step stationarity condition
/// `r_j = Σ_i A_ij − (1/x⁺_j) Σ_i y_i A_ij x_j / (Ax)_i`.
pub fn mstep_stationarity_residual<M: PoissonModel + ?Sized>(
    p: &M,
    x_prev: ArrayView1<'_, f64>,
    x_next: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    for x in [x_prev, x_next] {
        check_len(x, p.n_unknowns(), "iterate length")?;
        check_positive(x)?;
    }
    let back = backprojected_ratio(p, x_prev);
    Ok(Zip::from(&p.column_sums())
        .and(&back)
        .and(&x_prev)
        .and(&x_next)
        .map_collect(|&wj, &bj, &xp, &xn| wj - xp * bj / xn))
}
