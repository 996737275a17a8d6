//! Bregman projections onto (block) simplices under the weighted Burg geometry.
//!
//! With `w̃ = w ⊙ x̃` and `u(x) = −Σ w̃_j log x_j`, the minimizer of
//! `D_u(x, x̃)` subject to `Σ x_j = s` satisfies
//!
//! ```text
//! x_j = w_j x̃_j / (w_j + λ)
//! ```
//!
//! for the unique multiplier `λ > −min_j w_j` with `Σ_j x_j = s`. Finding the
//! projection is therefore a scalar root-find on the strictly decreasing
//! function `g(λ) = Σ_j w_j x̃_j / (w_j + λ)`.
//!
//! Internally the root-find works on the shift `δ = λ + min_j w_j ∈ (0, ∞)`
//! so that denominators `(w_j − min w) + δ` are formed without cancellation
//! when the multiplier approaches `−min w`.

use std::ops::Range;

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{Error, Result};

/// Stopping parameters of the multiplier root-find.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFindConfig {
    /// Bound on `|g(λ) − s| / s`.
    pub residual_tol: f64,
    pub max_iters: usize,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_iters: 200,
        }
    }
}

impl RootFindConfig {
    fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidConfig(format!(
                "root-find needs residual_tol > 0 and max_iters ≥ 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// A convex set onto which the constrained solver projects after each EMML step.
///
/// `project` receives the raw column sums `w` and the EMML output `x̃`; the
/// per-iteration Burg weights `w ⊙ x̃` are formed internally.
pub trait Constraint {
    fn project(&self, w: ArrayView1<'_, f64>, x_tilde: ArrayView1<'_, f64>) -> Result<Array1<f64>>;

    /// Distance-like measure of infeasibility; zero on the set.
    fn feasibility_gap(&self, x: ArrayView1<'_, f64>) -> f64;

    /// A strictly positive feasible point of dimension `n`.
    fn interior_point(&self, n: usize) -> Result<Array1<f64>>;

    fn describe(&self) -> String;
}

/// `{x > 0 : Σ x_j = s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConstraint {
    target_sum: f64,
    root: RootFindConfig,
}

impl Default for SimplexConstraint {
    fn default() -> Self {
        Self {
            target_sum: 1.0,
            root: RootFindConfig::default(),
        }
    }
}

impl SimplexConstraint {
    pub fn new(target_sum: f64) -> Result<Self> {
        check_target(target_sum)?;
        Ok(Self {
            target_sum,
            ..Self::default()
        })
    }

    pub fn with_root_config(mut self, root: RootFindConfig) -> Result<Self> {
        root.validate()?;
        self.root = root;
        Ok(self)
    }

    pub fn target_sum(&self) -> f64 {
        self.target_sum
    }
}

impl Constraint for SimplexConstraint {
    fn project(&self, w: ArrayView1<'_, f64>, x_tilde: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        project_simplex_with(w, x_tilde, self.target_sum, &self.root)
    }

    fn feasibility_gap(&self, x: ArrayView1<'_, f64>) -> f64 {
        simplex_gap(x, self.target_sum)
    }

    fn interior_point(&self, n: usize) -> Result<Array1<f64>> {
        if n == 0 {
            return Err(Error::InvalidConfig("simplex of dimension 0".into()));
        }
        Ok(Array1::from_elem(n, self.target_sum / n as f64))
    }

    fn describe(&self) -> String {
        format!("simplex(sum = {})", self.target_sum)
    }
}

/// Product of simplices over disjoint contiguous index blocks, one per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSimplexConstraint {
    blocks: Vec<Range<usize>>,
    targets: Vec<f64>,
    root: RootFindConfig,
}

impl BlockSimplexConstraint {
    /// `blocks` must tile `0..n` in order without gaps or overlaps.
    pub fn new(blocks: Vec<Range<usize>>, targets: Vec<f64>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidConfig("block partition is empty".into()));
        }
        if blocks.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                what: "block targets",
                expected: blocks.len(),
                found: targets.len(),
            });
        }
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.end <= b.start {
                return Err(Error::InvalidConfig(format!(
                    "blocks must be non-empty, contiguous and in order; got {b:?} after index {next}"
                )));
            }
            next = b.end;
        }
        for &t in &targets {
            check_target(t)?;
        }
        Ok(Self {
            blocks,
            targets,
            root: RootFindConfig::default(),
        })
    }

    /// `n_blocks` consecutive blocks of `block_size` coordinates, all with the same target.
    pub fn uniform(n_blocks: usize, block_size: usize, target: f64) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidConfig("block size must be positive".into()));
        }
        let blocks = (0..n_blocks)
            .map(|b| b * block_size..(b + 1) * block_size)
            .collect();
        Self::new(blocks, vec![target; n_blocks])
    }

    pub fn with_root_config(mut self, root: RootFindConfig) -> Result<Self> {
        root.validate()?;
        self.root = root;
        Ok(self)
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Total number of coordinates covered by the partition.
    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "block partition size",
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

impl Constraint for BlockSimplexConstraint {
    fn project(&self, w: ArrayView1<'_, f64>, x_tilde: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        project_block_simplex(self, w, x_tilde)
    }

    fn feasibility_gap(&self, x: ArrayView1<'_, f64>) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&self.targets)
            .map(|(b, &t)| simplex_gap(x.slice(ndarray::s![b.clone()]), t))
            .fold(0.0, f64::max)
    }

    fn interior_point(&self, n: usize) -> Result<Array1<f64>> {
        self.check_dim(n)?;
        let mut x = Array1::zeros(n);
        for (b, &t) in self.blocks.iter().zip(&self.targets) {
            let v = t / b.len() as f64;
            x.slice_mut(ndarray::s![b.clone()]).fill(v);
        }
        Ok(x)
    }

    fn describe(&self) -> String {
        format!("block-simplex({} blocks)", self.blocks.len())
    }
}

/// `|Σ x − s|` plus the total negative mass.
fn simplex_gap(x: ArrayView1<'_, f64>, s: f64) -> f64 {
    let negative: f64 = x.iter().map(|&v| (-v).max(0.0)).sum();
    (x.sum() - s).abs() + negative
}

fn check_target(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "simplex target sum must be positive and finite, got {s}"
        )));
    }
    Ok(())
}

fn check_inputs(w: ArrayView1<'_, f64>, x_tilde: ArrayView1<'_, f64>, s: f64) -> Result<()> {
    if w.len() != x_tilde.len() {
        return Err(Error::DimensionMismatch {
            what: "projection weights vs point",
            expected: x_tilde.len(),
            found: w.len(),
        });
    }
    if w.is_empty() {
        return Err(Error::InvalidConfig("projection of an empty vector".into()));
    }
    check_target(s)?;
    for z in [w, x_tilde] {
        if let Some(index) = z.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveInput { index });
        }
    }
    Ok(())
}

/// Outcome of the multiplier search, kept in the shifted parametrization.
enum Multiplier {
    /// `x̃` already satisfies the constraint to tolerance.
    Feasible,
    /// All weights are equal: the projection is a proportional rescaling.
    Uniform { lambda: f64 },
    /// General case, `δ = λ + min w`.
    Shift { delta: f64, w_min: f64 },
}

impl Multiplier {
    fn lambda(&self) -> f64 {
        match *self {
            Multiplier::Feasible => 0.0,
            Multiplier::Uniform { lambda } => lambda,
            Multiplier::Shift { delta, w_min } => delta - w_min,
        }
    }
}

fn find_multiplier(
    w: ArrayView1<'_, f64>,
    x_tilde: ArrayView1<'_, f64>,
    s: f64,
    cfg: &RootFindConfig,
) -> Result<Multiplier> {
    cfg.validate()?;
    let total = x_tilde.sum();
    if ((total - s) / s).abs() <= cfg.residual_tol {
        return Ok(Multiplier::Feasible);
    }
    let w_min = w.fold(f64::INFINITY, |a, &b| a.min(b));
    let w_max = w.fold(0.0_f64, |a, &b| a.max(b));
    if w_min == w_max {
        return Ok(Multiplier::Uniform {
            lambda: w_min * (total - s) / s,
        });
    }

    // g(δ) = Σ a_j / (c_j + δ) with a = w ⊙ x̃ and c = w − min w ≥ 0.
    let a: Array1<f64> = &w * &x_tilde;
    let c: Array1<f64> = w.mapv(|v| v - w_min);
    let g = |delta: f64| -> (f64, f64) {
        Zip::from(&a).and(&c).fold((0.0, 0.0), |(val, der), &aj, &cj| {
            let d = cj + delta;
            (val + aj / d, der - aj / (d * d))
        })
    };

    // g(δ) ≤ Σa/δ and g(δ) ≥ a_k/δ for the coordinate with c_k = 0, so the
    // root lies in [a_k/s, Σa/s].
    let a_min_w = Zip::from(&a)
        .and(&c)
        .fold(0.0_f64, |acc, &aj, &cj| if cj == 0.0 { acc.max(aj) } else { acc });
    let mut lo = a_min_w / s;
    let mut hi = a.sum() / s;
    // Guard against rounding at the analytic endpoints.
    while g(lo).0 < s {
        lo *= 0.5;
        if !(lo > 0.0) {
            return Err(Error::RootFindFailure {
                iterations: 0,
                residual: f64::NAN,
            });
        }
    }
    while g(hi).0 > s {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::RootFindFailure {
                iterations: 0,
                residual: f64::NAN,
            });
        }
    }

    let mut delta = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
    let mut residual = f64::INFINITY;
    for iter in 0..cfg.max_iters {
        let (val, der) = g(delta);
        residual = ((val - s) / s).abs();
        if residual <= cfg.residual_tol {
            return Ok(Multiplier::Shift { delta, w_min });
        }
        if val > s {
            lo = delta;
        } else {
            hi = delta;
        }
        // Newton on 1/g(δ) − 1/s, which is close to linear in δ.
        let newton = delta - (1.0 / val - 1.0 / s) * val * val / (-der);
        delta = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi && iter > 0 {
            let (val, _) = g(delta);
            residual = ((val - s) / s).abs();
            if residual <= cfg.residual_tol {
                return Ok(Multiplier::Shift { delta, w_min });
            }
            break;
        }
    }
    Err(Error::RootFindFailure {
        iterations: cfg.max_iters,
        residual,
    })
}

/// Multiplier `λ > −min w` with `Σ_j w_j x̃_j / (w_j + λ) = s` to relative tolerance.
pub fn solve_lambda(
    w: ArrayView1<'_, f64>,
    x_tilde: ArrayView1<'_, f64>,
    s: f64,
    cfg: &RootFindConfig,
) -> Result<f64> {
    check_inputs(w, x_tilde, s)?;
    Ok(find_multiplier(w, x_tilde, s, cfg)?.lambda())
}

/// Bregman projection of `x̃` onto `{x > 0 : Σ x = s}` for the potential
/// `−Σ (w_j x̃_j) log x_j`, using the default root-find settings.
pub fn bregman_project_simplex(
    w: ArrayView1<'_, f64>,
    x_tilde: ArrayView1<'_, f64>,
    s: f64,
) -> Result<Array1<f64>> {
    project_simplex_with(w, x_tilde, s, &RootFindConfig::default())
}

pub fn project_simplex_with(
    w: ArrayView1<'_, f64>,
    x_tilde: ArrayView1<'_, f64>,
    s: f64,
    cfg: &RootFindConfig,
) -> Result<Array1<f64>> {
    check_inputs(w, x_tilde, s)?;
    Ok(match find_multiplier(w, x_tilde, s, cfg)? {
        Multiplier::Feasible => x_tilde.to_owned(),
        Multiplier::Uniform { .. } => {
            let scale = s / x_tilde.sum();
            x_tilde.mapv(|v| v * scale)
        }
        Multiplier::Shift { delta, w_min } => Zip::from(&w)
            .and(&x_tilde)
            .map_collect(|&wj, &xj| wj * xj / ((wj - w_min) + delta)),
    })
}

/// Applies the simplex projection independently on every block.
pub fn project_block_simplex(
    c: &BlockSimplexConstraint,
    w: ArrayView1<'_, f64>,
    x_tilde: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    c.check_dim(x_tilde.len())?;
    c.check_dim(w.len())?;
    let mut out = Array1::zeros(x_tilde.len());
    for (b, &t) in c.blocks.iter().zip(&c.targets) {
        let range = ndarray::s![b.clone()];
        let projected = project_simplex_with(w.slice(range), x_tilde.slice(range), t, &c.root)
            .map_err(|e| match e {
                Error::NonPositiveInput { index } => Error::NonPositiveInput {
                    index: b.start + index,
                },
                other => other,
            })?;
        out.slice_mut(range).assign(&projected);
    }
    Ok(out)
}

/// Scaled stationarity residual of the projection,
/// `max_j |−w̃_j/x_j + w̃_j/x̃_j + λ| / max(max_j w_j, |λ|)` with `w̃ = w ⊙ x̃`.
pub fn kkt_residual(
    w: ArrayView1<'_, f64>,
    x_tilde: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    lambda: f64,
) -> f64 {
    let scale = w.fold(lambda.abs(), |a, &b| a.max(b));
    Zip::from(&w)
        .and(&x_tilde)
        .and(&x)
        .fold(0.0_f64, |acc, &wj, &xt, &xj| {
            let wt = wj * xt;
            acc.max((-wt / xj + wt / xt + lambda).abs())
        })
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cfg() -> RootFindConfig {
        RootFindConfig::default()
    }

    #[test]
    fn lambda_examples() {
        let l = solve_lambda(array![1.0, 3.0].view(), array![0.25, 0.75].view(), 1.0, &cfg()).unwrap();
        assert_eq!(l, 0.0);
        let l = solve_lambda(array![1.0, 1.0].view(), array![2.0, 2.0].view(), 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(l, 3.0, epsilon = 1e-12);
        let l = solve_lambda(array![1.0, 2.0].view(), array![1.0, 1.0].view(), 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(l, 2f64.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn lambda_below_zero_when_mass_is_missing() {
        let w = array![1.0, 2.0, 5.0];
        let xt = array![0.1, 0.2, 0.05];
        let l = solve_lambda(w.view(), xt.view(), 1.0, &cfg()).unwrap();
        assert!(l < 0.0 && l > -1.0);
        let g: f64 = (0..3).map(|j| w[j] * xt[j] / (w[j] + l)).sum();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn projection_examples() {
        let x = bregman_project_simplex(array![1.0, 7.0].view(), array![0.25, 0.75].view(), 1.0).unwrap();
        assert_eq!(x, array![0.25, 0.75]);

        let x = bregman_project_simplex(array![1.0, 1.0].view(), array![2.0, 2.0].view(), 1.0).unwrap();
        assert_eq!(x, array![0.5, 0.5]);

        let x = bregman_project_simplex(array![1.0, 2.0].view(), array![1.0, 1.0].view(), 1.0).unwrap();
        let r2 = 2f64.sqrt();
        assert_abs_diff_eq!(x[0], 1.0 / (1.0 + r2), epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 2.0 / (2.0 + r2), epsilon = 1e-12);
        assert_abs_diff_eq!(x[0], 0.4142136, epsilon = 1e-7);
        assert_abs_diff_eq!(x[1], 0.5857864, epsilon = 1e-7);
    }

    #[test]
    fn projection_errors() {
        assert!(matches!(
            bregman_project_simplex(array![1.0, 1.0].view(), array![1.0, 0.0].view(), 1.0),
            Err(Error::NonPositiveInput { index: 1 })
        ));
        assert!(bregman_project_simplex(array![1.0].view(), array![1.0, 2.0].view(), 1.0).is_err());
        assert!(bregman_project_simplex(array![1.0].view(), array![1.0].view(), 0.0).is_err());
    }

    #[test]
    fn root_find_failure_is_reported() {
        let tight = RootFindConfig {
            residual_tol: 1e-12,
            max_iters: 1,
        };
        let r = project_simplex_with(
            array![1.0, 2.0, 3.0].view(),
            array![5.0, 0.01, 3.0].view(),
            1.0,
            &tight,
        );
        assert!(matches!(r, Err(Error::RootFindFailure { .. })));
    }

    #[test]
    fn block_examples() {
        let c = BlockSimplexConstraint::uniform(2, 2, 1.0).unwrap();
        let x = project_block_simplex(&c, Array1::ones(4).view(), array![2.0, 2.0, 1.0, 3.0].view())
            .unwrap();
        assert_eq!(x, array![0.5, 0.5, 0.25, 0.75]);

        let feasible = array![0.3, 0.7, 0.9, 0.1];
        let x = project_block_simplex(&c, array![1.0, 2.0, 3.0, 4.0].view(), feasible.view()).unwrap();
        assert_eq!(x, feasible);
        assert!(c.feasibility_gap(x.view()) < 1e-15);

        let single = BlockSimplexConstraint::uniform(1, 3, 1.0).unwrap();
        let w = array![1.0, 2.0, 4.0];
        let xt = array![0.3, 2.0, 0.6];
        assert_eq!(
            project_block_simplex(&single, w.view(), xt.view()).unwrap(),
            bregman_project_simplex(w.view(), xt.view(), 1.0).unwrap()
        );
    }

    #[test]
    fn block_partition_validation() {
        assert!(BlockSimplexConstraint::new(vec![0..2, 3..4], vec![1.0, 1.0]).is_err());
        assert!(BlockSimplexConstraint::new(vec![0..2, 2..2], vec![1.0, 1.0]).is_err());
        assert!(BlockSimplexConstraint::new(vec![0..2], vec![1.0, 1.0]).is_err());
        assert!(BlockSimplexConstraint::new(vec![0..2], vec![-1.0]).is_err());
        let c = BlockSimplexConstraint::new(vec![0..1, 1..4], vec![2.0, 1.0]).unwrap();
        let p = c.interior_point(4).unwrap();
        assert_eq!(p, array![2.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert!(c.interior_point(3).is_err());
    }

    #[test]
    fn kkt_holds_at_projection() {
        let w = array![0.5, 3.0, 1.2, 9.0];
        let xt = array![0.2, 1.1, 0.05, 0.4];
        let lambda = solve_lambda(w.view(), xt.view(), 1.0, &cfg()).unwrap();
        let x = bregman_project_simplex(w.view(), xt.view(), 1.0).unwrap();
        assert!(kkt_residual(w.view(), xt.view(), x.view(), lambda) < 1e-12);
    }

    #[test]
    fn multiplier_near_the_pole_keeps_precision() {
        // the smallest-weight coordinate carries almost all the mass
        let w = array![1.0, 1.0 + 1e-9, 50.0];
        let xt = array![1e-9, 1e-12, 1e-12];
        let x = bregman_project_simplex(w.view(), xt.view(), 1.0).unwrap();
        assert_abs_diff_eq!(x.sum(), 1.0, epsilon = 1e-12);
        assert!(x.iter().all(|&v| v > 0.0));
    }
}
