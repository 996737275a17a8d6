//! Constrained EMML on the scaled simplex `Σ x = s`, next to unconstrained EMML.

use emml::{constrained_emml_run, emml_run, validate_problem, Constraint, SimplexConstraint, SolverConfig};
use ndarray::{array, Array1};

fn main() -> emml::Result<()> {
    let a = array![
        [0.8, 0.1, 0.3, 0.2],
        [0.2, 0.9, 0.1, 0.3],
        [0.1, 0.2, 0.7, 0.4],
        [0.4, 0.3, 0.2, 0.9],
        [0.3, 0.5, 0.4, 0.1],
    ];
    let y = array![5.0, 3.0, 7.0, 2.0, 4.0];
    let p = validate_problem(a, y)?;
    let c = SimplexConstraint::new(10.0)?;
    let cfg = SolverConfig::default();
    let x0 = Array1::from_elem(4, 2.5);

    let free = emml_run(&p, x0.view(), &cfg)?;
    let con = constrained_emml_run(&p, &c, x0.view(), &cfg)?;
    for (name, run) in [("emml", &free), ("constrained", &con)] {
        println!(
            "{name:<12} iters {:>4}  KL {:.5}  sum {:.9}  gap {:.1e}",
            run.trace.iterations,
            run.trace.objectives().and_then(|o| o.last().copied()).unwrap_or(f64::NAN),
            run.x.sum(),
            c.feasibility_gap(run.x.view()),
        );
    }
    println!("constrained x = {:.6}", con.x);
    Ok(())
}
