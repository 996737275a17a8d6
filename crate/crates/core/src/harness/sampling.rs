//! Poisson variates: sequential-search inversion for small means and
//! Hörmann's transformed rejection with squeeze (PTRS) for large ones.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Means below this use inversion; at or above it, transformed rejection.
pub const INVERSION_CUTOFF: f64 = 10.0;

/// One draw from `Poisson(mean)`. `mean` must be finite and nonnegative.
pub fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean == 0.0 {
        0
    } else if mean < INVERSION_CUTOFF {
        inversion(mean, rng)
    } else {
        transformed_rejection(mean, rng)
    }
}

fn inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        // the tail mass has dropped below rounding
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

fn transformed_rejection<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let log_mean = mean.ln();
    let b = 0.931 + 2.53 * mean.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Independent Poisson draws with the given means, in index order.
pub fn poisson_sample<R: Rng + ?Sized>(mean: ArrayView1<'_, f64>, rng: &mut R) -> Result<Array1<u64>> {
    for (index, &m) in mean.iter().enumerate() {
        if !m.is_finite() {
            return Err(Error::NonFiniteMean { index });
        }
        if m < 0.0 {
            return Err(Error::NegativeMean { index });
        }
    }
    Ok(mean.iter().map(|&m| poisson_draw(m, rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(mean: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..n).map(|_| poisson_draw(mean, &mut rng) as f64).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1) as f64;
        (m, v)
    }

    /// Sample mean and variance within three standard errors of the Poisson moments.
    fn check_moments(mean: f64) {
        let n = 100_000;
        let (m, v) = moments(mean, n, 7);
        let se_mean = (mean / n as f64).sqrt();
        // Var(s²) ≈ (μ4 − σ⁴)/n with μ4 = λ(1 + 3λ) for a Poisson law
        let se_var = ((mean * (1.0 + 3.0 * mean) - mean * mean) / n as f64).sqrt();
        assert!((m - mean).abs() < 3.0 * se_mean, "mean {m} vs {mean}");
        assert!((v - mean).abs() < 3.0 * se_var, "variance {v} vs {mean}");
    }

    #[test]
    fn inversion_moments() {
        check_moments(7.0);
        check_moments(0.3);
    }

    #[test]
    fn rejection_moments() {
        check_moments(10.0);
        check_moments(40.0);
        check_moments(1234.5);
    }

    #[test]
    fn zero_mean_draws_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = poisson_sample(Array1::zeros(100).view(), &mut rng).unwrap();
        assert!(d.iter().all(|&k| k == 0));
    }

    #[test]
    fn deterministic_given_state() {
        let means = array![0.5, 3.0, 12.0, 80.0];
        let a = poisson_sample(means.view(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = poisson_sample(means.view(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            poisson_sample(array![1.0, -0.5].view(), &mut rng),
            Err(Error::NegativeMean { index: 1 })
        ));
        assert!(matches!(
            poisson_sample(array![f64::INFINITY].view(), &mut rng),
            Err(Error::NonFiniteMean { index: 0 })
        ));
    }
}
