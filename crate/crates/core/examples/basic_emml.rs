//! Plain EMML on a small Poisson problem, printing the objective every few steps.

use emml::{emml_run, forward, validate_problem, SolverConfig};
use ndarray::array;

fn main() -> emml::Result<()> {
    let a = array![
        [0.9, 0.2, 0.1],
        [0.3, 0.8, 0.2],
        [0.1, 0.4, 0.7],
        [0.5, 0.1, 0.6],
    ];
    let truth = array![4.0, 1.5, 2.5];
    let y = a.dot(&truth);
    let p = validate_problem(a, y)?;

    let cfg = SolverConfig {
        max_iters: 5000,
        rel_change_tol: 1e-20,
        ..SolverConfig::default()
    };
    let x0 = ndarray::Array1::ones(3);
    let run = emml_run(&p, x0.view(), &cfg)?;

    let objectives = run.trace.objectives().unwrap_or_default();
    for (k, f) in objectives.iter().enumerate().filter(|(k, _)| (k + 1).is_power_of_two() || k + 1 == objectives.len()) {
        println!("iter {:>5}  KL = {f:.3e}", k + 1);
    }
    println!("stopped after {} steps ({:?})", run.trace.iterations, run.trace.termination);
    println!("x     = {:.6}", run.x);
    println!("truth = {truth:.6}");
    println!("Ax    = {:.6}", forward(&p, run.x.view())?);
    Ok(())
}
