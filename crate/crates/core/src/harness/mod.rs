//! Synthetic unmixing experiments, file formats and the command line.

pub mod batch;
pub mod cli;
pub mod experiment;
pub mod io;
pub mod sampling;
pub mod scene;

pub use batch::PixelBatch;
pub use cli::cli_main;
pub use experiment::{
    run_unmixing_experiment, run_unmixing_experiment_with, CertificateSummary, ExperimentOptions,
    ExperimentReport, SolverReport,
};
pub use sampling::{poisson_draw, poisson_sample};
pub use scene::{generate_scene, SceneConfig, UnmixingScene};
