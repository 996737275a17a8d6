//! Divergences and mirror maps.
//!
//! Two Legendre potentials are needed by the solvers:
//!
//! | Map | potential | gradient | inverse gradient |
//! |-----|-----------|----------|------------------|
//! | [`LogPartitionMap`] | `Σ w_j e^{θ_j}` | `w_j e^{θ_j}` | `log(g_j / w_j)`, `g > 0` |
//! | [`WeightedBurgMap`] | `−Σ w̃_j log x_j` | `−w̃_j / x_j` | `−w̃_j / g_j`, `g < 0` |
//!
//! Mirror descent on `θ = log x` under the log-partition map, with unit step,
//! is exactly the EMML multiplicative update. The weighted Burg map is the
//! primal geometry in which the constrained projection is computed.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{Error, Result};

/// A strictly convex potential with an invertible gradient.
pub trait MirrorMap {
    fn dim(&self) -> usize;
    fn potential(&self, point: ArrayView1<'_, f64>) -> Result<f64>;
    fn gradient(&self, point: ArrayView1<'_, f64>) -> Result<Array1<f64>>;
    fn gradient_inverse(&self, dual: ArrayView1<'_, f64>) -> Result<Array1<f64>>;
    /// True when `point` lies in the interior of the potential's domain.
    fn domain_check(&self, point: ArrayView1<'_, f64>) -> bool;

    /// `D(x, y) = u(x) − u(y) − ⟨∇u(y), x − y⟩`.
    fn divergence(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        let grad = self.gradient(y)?;
        let ux = self.potential(x)?;
        let uy = self.potential(y)?;
        let inner = Zip::from(&grad)
            .and(&x)
            .and(&y)
            .fold(0.0, |acc, &g, &a, &b| acc + g * (a - b));
        finite(ux - uy - inner)
    }
}

/// `θ ↦ Σ_j w_j e^{θ_j}`, with `w` the column sums of the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPartitionMap {
    weights: Array1<f64>,
}

impl LogPartitionMap {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        check_weights(weights.view())?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }
}

impl MirrorMap for LogPartitionMap {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn potential(&self, theta: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_domain(theta)?;
        let v = Zip::from(&self.weights)
            .and(&theta)
            .fold(0.0, |acc, &w, &t| acc + w * t.exp());
        finite(v)
    }

    fn gradient(&self, theta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_domain(theta)?;
        let g = Zip::from(&self.weights)
            .and(&theta)
            .map_collect(|&w, &t| w * t.exp());
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::NonFiniteResult)
        }
    }

    fn gradient_inverse(&self, dual: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        dim_check(dual, self.dim())?;
        if let Some(index) = dual.iter().position(|&g| !(g > 0.0)) {
            return Err(Error::NonPositiveDualPoint {
                index,
                value: dual[index],
            });
        }
        Ok(Zip::from(&self.weights)
            .and(&dual)
            .map_collect(|&w, &g| (g / w).ln()))
    }

    fn domain_check(&self, theta: ArrayView1<'_, f64>) -> bool {
        theta.len() == self.dim() && theta.iter().all(|t| t.is_finite())
    }

    /// `Σ_j w_j e^{θ'_j} (e^{Δ_j} − 1 − Δ_j)` with `Δ = θ − θ'`.
    fn divergence(&self, theta: ArrayView1<'_, f64>, theta_prime: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_domain(theta_prime)?;
        self.check_domain(theta)?;
        let d = Zip::from(&self.weights)
            .and(&theta)
            .and(&theta_prime)
            .fold(0.0, |acc, &w, &t, &tp| acc + w * tp.exp() * exp_excess(t - tp));
        finite(d)
    }
}

impl LogPartitionMap {
    fn check_domain(&self, theta: ArrayView1<'_, f64>) -> Result<()> {
        dim_check(theta, self.dim())?;
        match theta.iter().position(|t| !t.is_finite()) {
            Some(index) => Err(Error::DomainViolation {
                index,
                value: theta[index],
            }),
            None => Ok(()),
        }
    }
}

/// `x ↦ −Σ_j w̃_j log x_j` on the open positive orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBurgMap {
    weights: Array1<f64>,
}

impl WeightedBurgMap {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        check_weights(weights.view())?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    fn check_domain(&self, x: ArrayView1<'_, f64>) -> Result<()> {
        dim_check(x, self.dim())?;
        match x.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            Some(index) => Err(Error::DomainViolation {
                index,
                value: x[index],
            }),
            None => Ok(()),
        }
    }
}

impl MirrorMap for WeightedBurgMap {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn potential(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_domain(x)?;
        Ok(-Zip::from(&self.weights)
            .and(&x)
            .fold(0.0, |acc, &w, &v| acc + w * v.ln()))
    }

    fn gradient(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_domain(x)?;
        Ok(Zip::from(&self.weights)
            .and(&x)
            .map_collect(|&w, &v| -w / v))
    }

    fn gradient_inverse(&self, dual: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        dim_check(dual, self.dim())?;
        if let Some(index) = dual.iter().position(|&g| !(g < 0.0 && g.is_finite())) {
            return Err(Error::DomainViolation {
                index,
                value: dual[index],
            });
        }
        Ok(Zip::from(&self.weights)
            .and(&dual)
            .map_collect(|&w, &g| -w / g))
    }

    fn domain_check(&self, x: ArrayView1<'_, f64>) -> bool {
        self.check_domain(x).is_ok()
    }

    /// `Σ_j w̃_j (r_j − 1 − log r_j)` with `r = x / y`.
    fn divergence(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_domain(y)?;
        self.check_domain(x)?;
        let d = Zip::from(&self.weights)
            .and(&x)
            .and(&y)
            .fold(0.0, |acc, &w, &a, &b| acc + w * ratio_excess(a, b));
        finite(d)
    }
}

/// Generalized Kullback-Leibler divergence `Σ u log(u/v) + v − u`, with `0 log 0 = 0`.
pub fn kl_divergence(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> Result<f64> {
    dim_check(v, u.len())?;
    if let Some(index) = u.iter().position(|&a| !(a >= 0.0)) {
        return Err(Error::NegativeFirstArgument { index });
    }
    if let Some(index) = v.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::NonPositiveSecondArgument { index });
    }
    Ok(kl_unchecked(u, v))
}

/// KL without argument checks. A zero `u_i` contributes exactly `v_i`.
pub(crate) fn kl_unchecked(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
    Zip::from(&u).and(&v).fold(0.0, |acc, &a, &b| {
        let entropy = if a == 0.0 { 0.0 } else { a * (a / b).ln() };
        acc + entropy + b - a
    })
}

/// `D(x, y) = u(x) − u(y) − ⟨∇u(y), x − y⟩`.
pub fn bregman_divergence<M: MirrorMap + ?Sized>(
    map: &M,
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<f64> {
    map.divergence(x, y)
}

/// Log-partition divergence `D_A(log x, log x0)` evaluated directly in the
/// primal variables: `Σ_j w_j (x_j − x0_j − x0_j log(x_j / x0_j))`.
pub fn logpartition_divergence_primal(
    w: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    x0: ArrayView1<'_, f64>,
) -> Result<f64> {
    dim_check(x, w.len())?;
    dim_check(x0, w.len())?;
    for z in [x, x0] {
        if let Some(index) = z.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::DomainViolation {
                index,
                value: z[index],
            });
        }
    }
    Ok(logpartition_primal_unchecked(w, x, x0))
}

pub(crate) fn logpartition_primal_unchecked(
    w: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    x0: ArrayView1<'_, f64>,
) -> f64 {
    Zip::from(&w)
        .and(&x)
        .and(&x0)
        .fold(0.0, |acc, &wj, &a, &b| acc + wj * b * ratio_excess(a, b))
}

/// `e^t − 1 − t`, accurate near `t = 0`.
fn exp_excess(t: f64) -> f64 {
    if t.abs() < 0.1 {
        let mut term = t * t / 2.0;
        let mut sum = term;
        for k in 3..=16 {
            term *= t / k as f64;
            sum += term;
        }
        sum
    } else {
        t.exp_m1() - t
    }
}

/// `r − 1 − log r` for `r = a / b`, accurate near `r = 1`; `+∞` at `a = 0`.
fn ratio_excess(a: f64, b: f64) -> f64 {
    let d = (a - b) / b;
    if d.abs() < 0.1 {
        let terms: Vec<f64> = (2..=40)
            .scan(d, |power, k| {
                *power *= d;
                Some(if k % 2 == 0 { *power / k as f64 } else { -*power / k as f64 })
            })
            .collect();
        terms.iter().rev().sum()
    } else {
        let r = a / b;
        r - 1.0 - r.ln()
    }
}

fn check_weights(w: ArrayView1<'_, f64>) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidConfig("mirror map weights are empty".into()));
    }
    match w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::DomainViolation {
            index,
            value: w[index],
        }),
        None => Ok(()),
    }
}

fn dim_check(x: ArrayView1<'_, f64>, expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "mirror map argument",
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteResult)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(array![1.0, 2.0].view(), array![1.0, 2.0].view()).unwrap(), 0.0);
        assert_eq!(kl_divergence(array![0.0].view(), array![2.0].view()).unwrap(), 2.0);
        assert_abs_diff_eq!(
            kl_divergence(array![2.0].view(), array![1.0].view()).unwrap(),
            2.0 * LN_2 - 1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(2.0 * LN_2 - 1.0, 0.3862944, epsilon = 1e-7);
    }

    #[test]
    fn kl_errors() {
        assert!(matches!(
            kl_divergence(array![1.0, 1.0].view(), array![1.0, 0.0].view()),
            Err(Error::NonPositiveSecondArgument { index: 1 })
        ));
        assert!(matches!(
            kl_divergence(array![-1.0].view(), array![1.0].view()),
            Err(Error::NegativeFirstArgument { index: 0 })
        ));
    }

    #[test]
    fn bregman_examples() {
        let a1 = LogPartitionMap::new(array![1.0]).unwrap();
        assert_eq!(bregman_divergence(&a1, array![0.0].view(), array![0.0].view()).unwrap(), 0.0);

        let a2 = LogPartitionMap::new(array![2.0]).unwrap();
        let d = bregman_divergence(&a2, array![1.0].view(), array![0.0].view()).unwrap();
        assert_abs_diff_eq!(d, 2.0 * (E - 2.0), epsilon = 1e-14);
        assert_abs_diff_eq!(d, 1.4365637, epsilon = 1e-7);

        let burg = WeightedBurgMap::new(array![1.0]).unwrap();
        let d = bregman_divergence(&burg, array![1.0].view(), array![2.0].view()).unwrap();
        assert_abs_diff_eq!(d, LN_2 - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.1931472, epsilon = 1e-7);
    }

    #[test]
    fn bregman_domain_errors() {
        let burg = WeightedBurgMap::new(array![1.0, 1.0]).unwrap();
        assert!(matches!(
            bregman_divergence(&burg, array![1.0, 1.0].view(), array![1.0, -1.0].view()),
            Err(Error::DomainViolation { index: 1, .. })
        ));
        assert!(matches!(
            bregman_divergence(&burg, array![0.0, 1.0].view(), array![1.0, 1.0].view()),
            Err(Error::DomainViolation { index: 0, .. })
        ));
    }

    #[test]
    fn primal_divergence_examples() {
        let w = array![3.0, 2.0];
        let x = array![1.0, 1.0];
        assert_eq!(logpartition_divergence_primal(w.view(), x.view(), x.view()).unwrap(), 0.0);
        let d = logpartition_divergence_primal(array![1.0].view(), array![E].view(), array![1.0].view())
            .unwrap();
        assert_abs_diff_eq!(d, E - 2.0, epsilon = 1e-15);
        assert!(logpartition_divergence_primal(w.view(), array![0.0, 1.0].view(), x.view()).is_err());
    }

    #[test]
    fn excess_functions_near_zero() {
        for t in [1e-8, -3e-5, 0.05, -0.099] {
            let series = t * t / 2.0 * (1.0 + t / 3.0 + t * t / 12.0 + t * t * t / 60.0);
            assert!((exp_excess(t) - series).abs() <= t.powi(6) + 1e-15 * series);
            let a = 1.0 + t;
            let d = a - 1.0;
            let series = d * d / 2.0 * (1.0 - 2.0 * d / 3.0 + d * d / 2.0 - 2.0 * d * d * d / 5.0);
            assert!((ratio_excess(a, 1.0) - series).abs() <= d.powi(6) + 1e-15 * series);
        }
        assert_abs_diff_eq!(exp_excess(1.0), E - 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ratio_excess(2.0, 1.0), 1.0 - LN_2, epsilon = 1e-15);
        assert_eq!(ratio_excess(0.0, 1.0), f64::INFINITY);
        let tiny = ratio_excess(8.4e-323, 0.5);
        assert!(tiny.is_finite() && (tiny - (-1.0 - (8.4e-323_f64 / 0.5).ln())).abs() < 1e-12);
    }

    #[test]
    fn log_partition_inverse_rejects_nonpositive_dual() {
        let a = LogPartitionMap::new(array![1.0, 2.0]).unwrap();
        assert!(matches!(
            a.gradient_inverse(array![1.0, 0.0].view()),
            Err(Error::NonPositiveDualPoint { index: 1, .. })
        ));
        let burg = WeightedBurgMap::new(array![1.0]).unwrap();
        assert!(burg.gradient_inverse(array![0.5].view()).is_err());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(LogPartitionMap::new(array![1.0, 0.0]).is_err());
        assert!(WeightedBurgMap::new(array![]).is_err());
    }
}
