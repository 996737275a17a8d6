//! Objective evaluation, convergence certificates, and image-quality metrics.
//!
//! Certificates compare the observed suboptimality `F(x^N) − F(x*)` against
//! the sublinear bound `D_A(log x*, log x⁰) / N`, with `D_A` the
//! log-partition divergence written in primal variables. The same bound holds
//! for EMML and for constrained EMML (with `x*` the constrained minimizer).

use ndarray::{Array1, ArrayView1, Zip};
use serde::Serialize;

use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::mirror::{bregman_divergence, kl_unchecked, logpartition_primal_unchecked, LogPartitionMap};
use crate::problem::{check_len, check_positive, PoissonModel};
use crate::solvers::{
    constrained_emml_run, emml_run, objective_grad_theta, SolveTrace, SolverConfig, Termination,
};

/// `KL(y, Ax)` without positivity checks; used for solver traces.
pub(crate) fn objective_value<M: PoissonModel + ?Sized>(p: &M, x: ArrayView1<'_, f64>) -> f64 {
    let ax = p.apply(x);
    kl_unchecked(p.observation(), ax.view())
}

/// Poisson negative log-likelihood `F(x) = KL(y, Ax)` at a strictly positive `x`.
pub fn objective<M: PoissonModel + ?Sized>(p: &M, x: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(x, p.n_unknowns(), "iterate length")?;
    check_positive(x)?;
    Ok(objective_value(p, x))
}

/// `‖x⁺ − x‖² / ‖x‖²`.
pub fn rel_change(x: ArrayView1<'_, f64>, x_next: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(x_next, x.len(), "iterate length")?;
    let denom = x.dot(&x);
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let num = Zip::from(&x)
        .and(&x_next)
        .fold(0.0, |acc, &a, &b| acc + (b - a) * (b - a));
    Ok(num / denom)
}

/// `10 log10(peak² / MSE)`; `+∞` when the estimate is exact.
pub fn psnr(estimate: ArrayView1<'_, f64>, truth: ArrayView1<'_, f64>, peak: f64) -> Result<f64> {
    check_len(estimate, truth.len(), "PSNR operands")?;
    if truth.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "PSNR operands",
            expected: 1,
            found: 0,
        });
    }
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidConfig(format!("PSNR peak must be positive, got {peak}")));
    }
    let mse = Zip::from(&estimate)
        .and(&truth)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
        / truth.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Approximate minimizer used as `x*` by the certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSolution {
    #[serde(skip)]
    pub x: Array1<f64>,
    pub objective: f64,
    pub provenance: String,
}

/// Defaults for reference runs: up to 10⁵ steps, or until the relative change
/// drops below 10⁻¹⁴.
pub const REFERENCE_MAX_ITERS: usize = 100_000;
pub const REFERENCE_REL_TOL: f64 = 1e-14;

impl ReferenceSolution {
    /// Long EMML run from `x0`.
    pub fn unconstrained<M: PoissonModel + ?Sized>(
        p: &M,
        x0: ArrayView1<'_, f64>,
        max_iters: usize,
        rel_tol: f64,
    ) -> Result<Self> {
        let cfg = reference_config(max_iters, rel_tol);
        let r = emml_run(p, x0, &cfg)?;
        Ok(Self::from_run(p, r.x, &r.trace, "EMML", &cfg))
    }

    /// Long constrained-EMML run from `x0`.
    pub fn constrained<M, C>(
        p: &M,
        c: &C,
        x0: ArrayView1<'_, f64>,
        max_iters: usize,
        rel_tol: f64,
    ) -> Result<Self>
    where
        M: PoissonModel + ?Sized,
        C: Constraint + ?Sized,
    {
        Self::constrained_with(p, c, x0, &reference_config(max_iters, rel_tol))
    }

    /// Constrained reference run with an explicit configuration.
    pub fn constrained_with<M, C>(p: &M, c: &C, x0: ArrayView1<'_, f64>, cfg: &SolverConfig) -> Result<Self>
    where
        M: PoissonModel + ?Sized,
        C: Constraint + ?Sized,
    {
        let cfg = SolverConfig {
            record_objective: false,
            ..*cfg
        };
        let r = constrained_emml_run(p, c, x0, &cfg)?;
        let label = format!("constrained EMML, {}", c.describe());
        Ok(Self::from_run(p, r.x, &r.trace, &label, &cfg))
    }

    fn from_run<M: PoissonModel + ?Sized>(
        p: &M,
        x: Array1<f64>,
        trace: &SolveTrace,
        label: &str,
        cfg: &SolverConfig,
    ) -> Self {
        let objective = objective_value(p, x.view());
        let stop = match trace.termination {
            Termination::Tolerance => format!("relative change < {:e}", cfg.rel_change_tol),
            Termination::MaxIters => "iteration cap".to_string(),
        };
        Self {
            x,
            objective,
            provenance: format!("{label}: {} iterations ({stop})", trace.iterations),
        }
    }
}

/// Reference-run settings: plain EMML steps, no objective recording.
pub fn reference_config(max_iters: usize, rel_tol: f64) -> SolverConfig {
    SolverConfig {
        max_iters,
        rel_change_tol: rel_tol,
        record_objective: false,
        ..SolverConfig::default()
    }
}

/// One evaluation of the sublinear bound at iteration `iteration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub iteration: usize,
    /// `F(x^N) − F(x*)`.
    pub lhs: f64,
    /// `D_A(log x*, log x⁰) / N`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
}

/// `D_A(log x*, log x⁰)`; `+∞` when the reference has exact zeros.
pub fn initial_divergence(
    w: ArrayView1<'_, f64>,
    x_star: ArrayView1<'_, f64>,
    x0: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_len(x_star, w.len(), "reference length")?;
    check_len(x0, w.len(), "initial point length")?;
    check_positive(x0)?;
    if let Some(index) = x_star.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::DomainViolation {
            index,
            value: x_star[index],
        });
    }
    let d = logpartition_primal_unchecked(w, x_star, x0);
    Ok(if d.is_nan() { f64::INFINITY } else { d })
}

/// Evaluates both sides of the bound for every recorded iteration.
pub fn certify_bound(
    trace: &SolveTrace,
    reference: &ReferenceSolution,
    x0: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
) -> Result<Vec<BoundCertificate>> {
    let objectives = trace.objectives().ok_or(Error::MissingObjectiveTrace)?;
    certify_objectives(&objectives, reference, x0, w)
}

/// Same as [`certify_bound`] for a bare objective sequence (entry `k` is `F(x^{k+1})`).
pub fn certify_objectives(
    objectives: &[f64],
    reference: &ReferenceSolution,
    x0: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
) -> Result<Vec<BoundCertificate>> {
    let d0 = initial_divergence(w, reference.x.view(), x0)?;
    Ok(objectives
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let n = (k + 1) as f64;
            let lhs = f - reference.objective;
            let rhs = d0 / n;
            BoundCertificate {
                iteration: k + 1,
                lhs,
                rhs,
                slack: rhs - lhs,
            }
        })
        .collect())
}

/// Smallest slack over a set of certificates (`+∞` when empty).
pub fn min_slack(certs: &[BoundCertificate]) -> f64 {
    certs.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
}

/// Telescoped form of the per-step inequality at the final iterate `x^N`:
/// returns `(min_{r ≤ N} F(x^r) − F(x*), (D_A(x*, x⁰) − D_A(x*, x^N)) / N)`.
pub fn summed_bound(
    trace: &SolveTrace,
    reference: &ReferenceSolution,
    x0: ArrayView1<'_, f64>,
    x_final: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
) -> Result<(f64, f64)> {
    let objectives = trace.objectives().ok_or(Error::MissingObjectiveTrace)?;
    if objectives.is_empty() {
        return Err(Error::MissingObjectiveTrace);
    }
    let best = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let d0 = initial_divergence(w, reference.x.view(), x0)?;
    let d_n = initial_divergence(w, reference.x.view(), x_final)?;
    let n = objectives.len() as f64;
    Ok((best - reference.objective, (d0 - d_n) / n))
}

/// Three-point (descent) residual of one step `x → x⁺`:
/// `[D_A(log s, log x) − D_A(log s, log x⁺)] − τ [F(x⁺) − F(s)]`.
/// Nonnegative for every `s` in the domain when the step is a valid
/// mirror-descent step with `τ ≤ 1`.
pub fn three_point_residual<M: PoissonModel + ?Sized>(
    p: &M,
    s: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    x_next: ArrayView1<'_, f64>,
    tau: f64,
    w: ArrayView1<'_, f64>,
) -> Result<f64> {
    for z in [s, x, x_next] {
        check_len(z, p.n_unknowns(), "iterate length")?;
        check_positive(z)?;
    }
    check_len(w, p.n_unknowns(), "weights length")?;
    let d_before = logpartition_primal_unchecked(w, s, x);
    let d_after = logpartition_primal_unchecked(w, s, x_next);
    let gap = objective_value(p, x_next) - objective_value(p, s);
    Ok((d_before - d_after) - tau * gap)
}

/// `D_A(θ, θ') − D_L(θ, θ')` with `L(θ) = KL(y, A e^θ)`. Relative smoothness
/// with constant one means this is nonnegative.
pub fn relative_smoothness_gap<M: PoissonModel + ?Sized>(
    p: &M,
    theta: ArrayView1<'_, f64>,
    theta_prime: ArrayView1<'_, f64>,
) -> Result<f64> {
    let map = LogPartitionMap::new(p.column_sums().to_owned())?;
    let d_a = bregman_divergence(&map, theta, theta_prime)?;
    let l = |t: ArrayView1<'_, f64>| objective_value(p, t.mapv(f64::exp).view());
    let grad = objective_grad_theta(p, theta_prime)?;
    let inner = Zip::from(&grad)
        .and(&theta)
        .and(&theta_prime)
        .fold(0.0, |acc, &g, &a, &b| acc + g * (a - b));
    let d_l = l(theta) - l(theta_prime) - inner;
    if !d_l.is_finite() {
        return Err(Error::NonFiniteResult);
    }
    Ok(d_a - d_l)
}

/// `‖∇L(log x)‖∞`, the stationarity measure for an unconstrained limit point.
pub fn theta_gradient_norm<M: PoissonModel + ?Sized>(p: &M, x: ArrayView1<'_, f64>) -> Result<f64> {
    check_positive(x)?;
    let g = objective_grad_theta(p, x.mapv(f64::ln).view())?;
    Ok(g.iter().fold(0.0_f64, |a, &b| a.max(b.abs())))
}
