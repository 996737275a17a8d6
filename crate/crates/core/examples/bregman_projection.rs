//! A single weighted-Burg projection onto the simplex, its multiplier and
//! the KKT residual, plus the block version.

use emml::{bregman_project_simplex, kkt_residual, project_block_simplex, solve_lambda, BlockSimplexConstraint, RootFindConfig};
use ndarray::array;

fn main() -> emml::Result<()> {
    let w = array![1.0, 2.5, 0.4, 3.0];
    let x_tilde = array![0.6, 0.1, 0.9, 0.3];
    let x = bregman_project_simplex(w.view(), x_tilde.view(), 1.0)?;
    let lambda = solve_lambda(w.view(), x_tilde.view(), 1.0, &RootFindConfig::default())?;
    println!("x~     = {x_tilde}");
    println!("proj   = {x:.6}  (sum {:.15})", x.sum());
    println!("lambda = {lambda:.6}");
    println!("kkt    = {:.1e}", kkt_residual(w.view(), x_tilde.view(), x.view(), lambda));

    let blocks = BlockSimplexConstraint::uniform(2, 2, 1.0)?;
    let xb = project_block_simplex(&blocks, w.view(), x_tilde.view())?;
    println!("blocks = {xb:.6}  (sums {:.12}, {:.12})", xb[0] + xb[1], xb[2] + xb[3]);
    Ok(())
}
