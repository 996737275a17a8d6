//! Maximum-likelihood reconstruction under Poisson noise.
//!
//! EMML is mirror descent on `θ = log x` with the log-partition mirror map
//! `A(θ) = Σ w_j e^{θ_j}`, where `w` holds the column sums of the forward
//! operator. Constrained EMML follows each EMML step with a Bregman
//! projection in the weighted Burg geometry, which has a closed form up to one
//! scalar multiplier for simplex constraints. [`diagnostics`] turns the
//! sublinear rate into per-iteration certificates.
//!
//! ```
//! use emml::{emml_run, validate_problem, SolverConfig};
//! use ndarray::array;
//!
//! let p = validate_problem(array![[1.0, 0.0], [0.0, 1.0]], array![2.0, 3.0]).unwrap();
//! let r = emml_run(&p, array![1.0, 1.0].view(), &SolverConfig::default()).unwrap();
//! assert_eq!(r.x, array![2.0, 3.0]);
//! ```

pub mod constraints;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod mirror;
pub mod problem;
pub mod solvers;

pub use constraints::{
    bregman_project_simplex, kkt_residual, project_block_simplex, solve_lambda,
    BlockSimplexConstraint, Constraint, RootFindConfig, SimplexConstraint,
};
pub use diagnostics::{
    certify_bound, objective, psnr, rel_change, BoundCertificate, ReferenceSolution,
};
pub use error::{Error, Result};
pub use mirror::{
    bregman_divergence, kl_divergence, logpartition_divergence_primal, LogPartitionMap, MirrorMap,
    WeightedBurgMap,
};
pub use problem::{
    adjoint, forward, validate_problem, DenseOperator, Observation, PoissonModel, PoissonProblem,
};
pub use solvers::{
    constrained_emml_run, emml_run, emml_step, md_step_theta, objective_grad_theta, SolveResult,
    SolveTrace, SolverConfig, Termination,
};
