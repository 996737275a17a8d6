//! The EMML step written as mirror descent on θ = log x under the
//! log-partition map, with the relaxed step size τ < 1 for comparison.

use emml::{emml_step, md_step_theta, validate_problem};
use ndarray::{array, Array1};

fn main() -> emml::Result<()> {
    let a = array![[1.0, 0.5, 0.2], [0.3, 1.0, 0.4], [0.2, 0.3, 1.0], [0.6, 0.6, 0.1]];
    let p = validate_problem(a, array![3.0, 1.0, 4.0, 2.0])?;

    let mut x = Array1::from_elem(3, 0.7);
    let mut theta = x.mapv(f64::ln);
    for k in 1..=10 {
        x = emml_step(&p, x.view())?;
        theta = md_step_theta(&p, theta.view(), 1.0)?;
        let gap = (&x - &theta.mapv(f64::exp)).fold(0.0_f64, |m, &d| m.max(d.abs()));
        println!("step {k:>2}: max |x_emml - exp(theta)| = {gap:.2e}");
    }

    let mut slow = Array1::from_elem(3, 0.7).mapv(f64::ln);
    for _ in 0..10 {
        slow = md_step_theta(&p, slow.view(), 0.5)?;
    }
    println!("after 10 steps, tau = 1:   {:.5}", theta.mapv(f64::exp));
    println!("after 10 steps, tau = 0.5: {:.5}", slow.mapv(f64::exp));
    Ok(())
}
