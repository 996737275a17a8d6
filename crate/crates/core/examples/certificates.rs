//! Checks the O(1/N) bound `F(x^N) - F(x*) <= D_A(log x*, log x0) / N`
//! along an EMML run against a long reference run.

use emml::{certify_bound, emml_run, validate_problem, PoissonModel, ReferenceSolution, SolverConfig};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> emml::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = Array2::from_shape_simple_fn((30, 6), || rng.random_range(0.1..1.0));
    let truth = Array1::from_shape_simple_fn(6, || rng.random_range(50.0..150.0));
    let y = a.dot(&truth).mapv(f64::round);
    let p = validate_problem(a, y)?;

    let x0 = Array1::ones(6);
    let cfg = SolverConfig {
        max_iters: 500,
        rel_change_tol: 0.0,
        ..SolverConfig::default()
    };
    let run = emml_run(&p, x0.view(), &cfg)?;
    let reference = ReferenceSolution::unconstrained(&p, x0.view(), 100_000, 1e-14)?;
    println!("reference: {} (F = {:.6})", reference.provenance, reference.objective);

    let certs = certify_bound(&run.trace, &reference, x0.view(), p.column_sums())?;
    for c in certs.iter().filter(|c| [1, 10, 100, 500].contains(&c.iteration)) {
        println!("N = {:>3}  lhs {:.3e}  rhs {:.3e}  slack {:.3e}", c.iteration, c.lhs, c.rhs, c.slack);
    }
    let worst = certs.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
    println!("min slack {worst:.3e}");
    Ok(())
}
