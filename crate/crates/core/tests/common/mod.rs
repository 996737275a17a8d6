#![allow(dead_code)]

use emml::harness::poisson_sample;
use emml::{validate_problem, PoissonProblem};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense positive m×n operator with entries in [0.05, 1).
pub fn random_operator(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((m, n), || rng.random_range(0.05..1.0))
}

/// Poisson counts from a random positive ground truth scaled to about `level` per row.
pub fn poisson_instance(seed: u64, m: usize, n: usize, level: f64) -> PoissonProblem {
    let mut r = rng(seed);
    let a = random_operator(&mut r, m, n);
    let x: Array1<f64> = (0..n).map(|_| r.random_range(0.1..1.0)).collect();
    let mean = a.dot(&x);
    let scale = level / mean.mean().unwrap();
    let counts = poisson_sample(mean.mapv(|v| v * scale).view(), &mut r).unwrap();
    validate_problem(a, counts.mapv(|k| k as f64)).unwrap()
}

/// Strictly positive, non-integer observations.
pub fn positive_instance(seed: u64, m: usize, n: usize) -> PoissonProblem {
    let mut r = rng(seed);
    let a = random_operator(&mut r, m, n);
    let y: Array1<f64> = (0..m).map(|_| r.random_range(0.5..20.0)).collect();
    validate_problem(a, y).unwrap()
}

pub fn max_abs(a: &Array1<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `‖a − b‖∞ / ‖b‖∞`.
pub fn rel_sup(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(b)
}
