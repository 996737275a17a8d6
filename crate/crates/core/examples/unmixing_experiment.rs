//! Synthetic hyperspectral unmixing: EMML against simplex-constrained EMML.

use emml::harness::experiment::{run_unmixing_experiment_with, ExperimentOptions};
use emml::harness::{generate_scene, SceneConfig};
use emml::SolverConfig;

fn main() -> emml::Result<()> {
    let opts = ExperimentOptions {
        reference_iters: None,
        ..ExperimentOptions::default()
    };
    println!("{:>6} {:>18} {:>12} {:>12}", "sigma", "solver", "iterations", "mean PSNR");
    for sigma in [10.0, 20.0, 40.0, 80.0] {
        let scene = generate_scene(&SceneConfig {
            sigma,
            ..SceneConfig::default()
        })?;
        let report = run_unmixing_experiment_with(&scene, &SolverConfig::default(), &opts)?;
        for s in &report.solvers {
            println!("{sigma:>6} {:>18} {:>12} {:>12.2}", s.name, s.iterations, s.mean_psnr);
        }
    }
    Ok(())
}
