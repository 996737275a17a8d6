mod common;

use std::fs;
use std::path::Path;

use emml::harness::experiment::{run_unmixing_experiment_with, ExperimentOptions};
use emml::harness::io::{read_matrix, read_trace_objectives, write_matrix_file, write_vector_file, TRACE_HEADER};
use emml::harness::{cli_main, generate_scene, run_unmixing_experiment, SceneConfig};
use emml::{emml_run, validate_problem, BlockSimplexConstraint, PoissonModel, SolverConfig};
use ndarray::{array, s, Array1, Axis};

fn small_scene(sigma: f64) -> SceneConfig {
    SceneConfig {
        height: 6,
        width: 5,
        sigma,
        ..SceneConfig::default()
    }
}

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("emml").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn noiseless_scene_is_recovered_by_constrained_emml() {
    let cfg = SceneConfig {
        height: 3,
        width: 3,
        ..small_scene(40.0)
    };
    let scene = generate_scene(&cfg).unwrap().noiseless();
    let cfg = SolverConfig {
        max_iters: 100_000,
        rel_change_tol: 1e-30,
        ..SolverConfig::default()
    };
    let opts = ExperimentOptions {
        reference_iters: None,
        ..ExperimentOptions::default()
    };
    let report = run_unmixing_experiment_with(&scene, &cfg, &opts).unwrap();
    let con = report.solver("constrained_emml").unwrap();
    let err = (&con.abundances - &scene.abundances).fold(0.0_f64, |a, &b| a.max(b.abs()));
    assert!(err <= 1e-6, "sup error {err:e}");
}

#[test]
fn report_structure_and_feasibility() {
    let scene = generate_scene(&small_scene(20.0)).unwrap();
    let report = run_unmixing_experiment(&scene, &SolverConfig::default()).unwrap();
    assert_eq!(report.solvers.len(), 2);
    assert_eq!(report.schema, 1);
    let names: Vec<&str> = report.solvers.iter().map(|s| s.name).collect();
    assert_eq!(names, ["emml", "constrained_emml"]);
    let con = report.solver("constrained_emml").unwrap();
    for row in con.abundances.axis_iter(Axis(0)) {
        assert!((row.sum() - 1.0).abs() <= 1e-9 && row.iter().all(|&v| v > 0.0));
    }
    assert!(con.max_feasibility_gap.unwrap() <= 1e-9);
    for s in &report.solvers {
        assert_eq!(s.psnr.len(), 3);
        assert!(s.certificate.as_ref().unwrap().min_slack >= -1e-9);
        assert_eq!(s.certificates.len(), s.iterations);
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(json["solvers"].as_array().unwrap().len(), 2);
    assert_eq!(json["scene"]["seed"], 42);
}

#[test]
fn batched_iterates_match_per_pixel_runs() {
    let scene = generate_scene(&small_scene(40.0)).unwrap();
    let batch = scene.batch().unwrap();
    let q = batch.n_endmembers();
    let x0 = Array1::from_elem(batch.n_unknowns(), 1.0 / q as f64);
    let cfg = SolverConfig {
        max_iters: 50,
        rel_change_tol: 0.0,
        record_objective: false,
        ..SolverConfig::default()
    };
    let joint = emml_run(&batch, x0.view(), &cfg).unwrap().x;
    let c = BlockSimplexConstraint::uniform(batch.n_pixels(), q, 1.0).unwrap();
    let joint_con = emml::constrained_emml_run(&batch, &c, x0.view(), &cfg).unwrap().x;
    for px in 0..batch.n_pixels() {
        let single = validate_problem(scene.spectra.clone(), scene.counts.row(px).to_owned()).unwrap();
        let start = Array1::from_elem(q, 1.0 / q as f64);
        let own = emml_run(&single, start.view(), &cfg).unwrap().x;
        let own_con =
            emml::constrained_emml_run(&single, &emml::SimplexConstraint::default(), start.view(), &cfg).unwrap().x;
        for (j, o) in [(&joint, &own), (&joint_con, &own_con)] {
            let part = j.slice(s![px * q..(px + 1) * q]).to_owned();
            assert!(common::rel_sup(&part, o) <= 1e-12, "pixel {px}");
        }
    }
}

#[test]
fn cli_solve_writes_trace_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let a = array![[1.0, 0.5, 0.0], [0.2, 1.0, 0.3], [0.0, 0.4, 1.0], [0.7, 0.1, 0.2]];
    write_matrix_file(&dir.path().join("A.csv"), a.view()).unwrap();
    write_vector_file(&dir.path().join("y.csv"), array![3.0, 2.0, 5.0, 1.0].view()).unwrap();
    let (m, y, out, sol) = (
        dir.path().join("A.csv"),
        dir.path().join("y.csv"),
        dir.path().join("trace.csv"),
        dir.path().join("x.csv"),
    );
    let code = run(&["solve", "--matrix", p(&m), "--obs", p(&y), "--out", p(&out), "--solution", p(&sol), "--reference-iters", "2000"]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRACE_HEADER.join(","));
    let objs = read_trace_objectives(text.as_bytes()).unwrap();
    assert!(objs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert_eq!(read_matrix(&sol).unwrap().len(), 3);

    let certs = dir.path().join("certs.csv");
    let code = run(&["verify-bounds", "--matrix", p(&m), "--obs", p(&y), "--trace", p(&out), "--reference-iters", "5000", "--out", p(&certs)]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(&certs).unwrap().starts_with("N,lhs,rhs,slack\n"));

    let con = dir.path().join("con.csv");
    let code = run(&["solve-constrained", "--matrix", p(&m), "--obs", p(&y), "--constraint", "simplex:2", "--out", p(&con), "--solution", p(&sol)]);
    assert_eq!(code, 0);
    assert!((read_matrix(&sol).unwrap().sum() - 2.0).abs() <= 1e-9);
    let code = run(&["verify-bounds", "--matrix", p(&m), "--obs", p(&y), "--trace", p(&con), "--constraint", "simplex:2"]);
    assert_eq!(code, 0);
}

#[test]
fn cli_verify_bounds_flags_a_violated_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (m, y, t) = (dir.path().join("A.csv"), dir.path().join("y.csv"), dir.path().join("t.csv"));
    write_matrix_file(&m, array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap();
    write_vector_file(&y, array![2.0, 3.0].view()).unwrap();
    fs::write(&t, "iter,objective,rel_change,feasibility_gap,bound_lhs,bound_rhs\n1,100,0.1,,,\n").unwrap();
    assert_eq!(run(&["verify-bounds", "--matrix", p(&m), "--obs", p(&y), "--trace", p(&t)]), 2);
}

#[test]
fn cli_zero_column_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let (m, y, out) = (dir.path().join("bad.csv"), dir.path().join("y.csv"), dir.path().join("t.csv"));
    fs::write(&m, "1,0,2\n3,0,1\n").unwrap();
    fs::write(&y, "1\n2\n").unwrap();
    assert_eq!(run(&["solve", "--matrix", p(&m), "--obs", p(&y), "--out", p(&out)]), 1);
    assert!(!out.exists());
    let bin = env!("CARGO_BIN_EXE_emml");
    let output = std::process::Command::new(bin)
        .args(["solve", "--matrix", p(&m), "--obs", p(&y), "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("column 1"), "{stderr}");
}

#[test]
fn cli_missing_file_and_bad_flags() {
    assert_eq!(run(&["solve", "--matrix", "/nonexistent/A.csv", "--obs", "y.csv", "--out", "t.csv"]), 1);
    assert_eq!(run(&["unmix", "--sigma=-3", "--out", "/tmp/never.json"]), 1);
    assert_eq!(run(&["solve-constrained", "--matrix", "a", "--obs", "b", "--out", "c", "--constraint", "simplex", "--blocks", "2"]), 1);
}

#[test]
fn cli_unmix_and_gen_scene() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let code = run(&["unmix", "--seed", "42", "--sigma", "40", "--height", "8", "--width", "8", "--reference-iters", "500", "--out", p(&report), "--trace-dir", p(&dir.path().join("traces"))]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema"], 1);
    assert!(dir.path().join("traces/constrained_emml_trace.csv").exists());

    let scene_dir = dir.path().join("scene");
    assert_eq!(run(&["gen-scene", "--height", "4", "--width", "3", "--out-dir", p(&scene_dir)]), 0);
    let counts = read_matrix(&scene_dir.join("counts.csv")).unwrap();
    assert_eq!(counts.dim(), (12, 64));
    assert_eq!(read_matrix(&scene_dir.join("spectra.csv")).unwrap().dim(), (64, 3));
    let abundances = read_matrix(&scene_dir.join("abundances.csv")).unwrap();
    let expected = generate_scene(&SceneConfig { height: 4, width: 3, ..SceneConfig::default() }).unwrap();
    assert_eq!(abundances, expected.abundances);
    assert_eq!(counts, expected.counts);
    assert!(scene_dir.join("scene.json").exists());
}
