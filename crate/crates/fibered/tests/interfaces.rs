//! External interface tests: the field file format, the JSON problem and
//! run documents, checkpoint/resume, CSV exports, and the command-line
//! contract (verdict summary, exit codes, determinism of reports).

use std::process::Command;
use std::sync::Arc;

use fibered::fields::analytic::{Analytic, TrigPoly};
use fibered::fields::io::{read_field, write_field};
use fibered::fields::{make_grid, sample, Boundary, DerivMode, ScalarField};
use fibered::model::{load_problem_str, strong_residual, Coefficient, Potential, Problem,
    SolutionTuple};
use fibered::solver::{load_checkpoint, solve, SolverConfig};

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("fibered_interfaces").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn field_file_round_trip_is_bit_exact() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let g = make_grid(
        &[[-3.0, 3.0], [0.0, 1.0], [-1.0, 2.0]],
        &[7, 5, 9],
        2,
        &[Boundary::Dirichlet, Boundary::Periodic, Boundary::NeumannZero],
    )
    .unwrap();
    let f = sample(
        Arc::new(TrigPoly::random(3, &mut rng, 4, 1.7)) as Arc<dyn Analytic>,
        g,
    )
    .unwrap();
    let dir = tmp("roundtrip");
    let path = dir.join("field.txt");
    write_field(&f, &path).unwrap();
    let back = read_field(&path).unwrap();
    assert!(back.grid().same_layout(f.grid()));
    assert_eq!(back.values(), f.values());
}

#[test]
fn problem_documents_validate_with_pointers() {
    let good = r#"{
        "n": 1,
        "grid": {"extents": [[0, 1], [0, 1]], "nodes": [9, 9], "m": 1,
                 "boundary": ["neumann-zero", "dirichlet"]},
        "coefficients": [{"kind": "x-modulated", "p": 2.5,
                          "alpha": {"base": 2.0, "amp": 0.5, "freq": 1.0}}],
        "potential": {"kind": "allen-cahn"},
        "bc": {"kind": "dirichlet-from-init"}
    }"#;
    let p = load_problem_str(good).unwrap();
    assert_eq!(p.n, 1);
    for (bad, pointer) in [
        (good.replace("\"m\": 1", "\"m\": 2"), "/grid"),
        (good.replace("allen-cahn", "allen"), "/potential/kind"),
        (
            good.replace("\"amp\": 0.5", "\"amp\": 9.0"),
            "/coefficients/0/alpha",
        ),
        (good.replace("dirichlet-from-init", "robin"), "/bc/kind"),
    ] {
        let err = load_problem_str(&bad).unwrap_err().to_string();
        assert!(err.contains(pointer), "{err} missing {pointer}");
    }
}

#[test]
fn checkpoints_resume_a_solve() {
    let g = make_grid(
        &[[0.0, 1.0], [0.0, 1.0]],
        &[17, 17],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet],
    )
    .unwrap();
    let problem = Problem::new(
        1,
        vec![Coefficient::constant()],
        Potential::AllenCahn,
        g.clone(),
    )
    .unwrap();
    let pi = std::f64::consts::PI;
    let vals: Vec<f64> = (0..g.len())
        .map(|i| {
            let c = g.coords_vec(i);
            0.8 * (pi * c[0]).sin() * (pi * c[1]).sin()
        })
        .collect();
    let init = SolutionTuple::new(vec![ScalarField::from_values(g.clone(), vals).unwrap()])
        .unwrap();
    let dir = tmp("checkpoints");
    // phase 1: a few gradient-flow steps with checkpointing
    let mut cfg = SolverConfig::gradient_flow(0.1, 1e-12, 6);
    cfg.checkpoint_every = Some(2);
    cfg.checkpoint_dir = Some(dir.clone());
    let (_, log1) = solve(&problem, init, &cfg).unwrap();
    assert!(!log1.converged);
    let (iter, restored) = load_checkpoint(&dir).unwrap();
    assert!(iter >= 2);
    // phase 2: resume and finish with Newton
    let mut cfg2 = SolverConfig::newton(1e-10, 30);
    cfg2.start_iteration = iter;
    let (sol, log2) = solve(&problem, restored, &cfg2).unwrap();
    assert!(log2.converged);
    let (r, mask) = strong_residual(&problem, &sol).unwrap();
    let sup = r[0]
        .values()
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .fold(0.0f64, |a, (v, _)| a.max(v.abs()));
    assert!(sup <= 1e-10);
}

#[test]
fn geometry_bundle_csv_has_the_documented_columns() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let g = make_grid(
        &[[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]],
        &[5, 7, 7],
        1,
        &[
            Boundary::Dirichlet,
            Boundary::Dirichlet,
            Boundary::Dirichlet,
        ],
    )
    .unwrap();
    let u = sample(
        Arc::new(TrigPoly::random(3, &mut rng, 3, 1.0)) as Arc<dyn Analytic>,
        g,
    )
    .unwrap();
    let dir = tmp("bundle");
    let path = dir.join("bundle.csv");
    fibered::geometry::export_bundle_csv(&u, DerivMode::Analytic, None, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x0,x1,x2,S,T,U,K");
    assert!(lines.count() > 10);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fibered"))
}

#[test]
fn cli_list_shows_the_registry_and_filters_by_tag() {
    let out = bin().args(["list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for id in [
        "blwz-1d",
        "blwz-2d-fibered",
        "allen-cahn-kink",
        "p-laplacian-minimizer",
        "abg-counterexample",
        "manufactured-identity",
        "growth-and-cutoff",
    ] {
        assert!(text.contains(id), "missing {id}");
    }
    let out = bin().args(["list", "--tag", "appendix"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("p-laplacian-minimizer"));
    assert!(text.contains("abg-counterexample"));
    assert!(!text.contains("blwz-1d"));
    // unknown tag: empty listing, still success
    let out = bin().args(["list", "--tag", "nope"]).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn cli_run_reports_and_exit_codes() {
    let dir = tmp("cli_run");
    let out = bin()
        .args([
            "run",
            "--scenario",
            "abg-counterexample",
            "--out",
            dir.join("ok").to_str().unwrap(),
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("abg-counterexample/two-well-structure: Pass"));
    assert!(text.contains("digest: fnv1a64:"));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("ok").join("report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["seed"], 5);
    assert!(report["digest"].as_str().unwrap().starts_with("fnv1a64:"));

    // malformed configuration exits with 2
    let badcfg = dir.join("bad.json");
    std::fs::write(&badcfg, "{\"scenario\": \"zzz\"}").unwrap();
    let out = bin()
        .args(["run", "--config", badcfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/scenario"));
}

#[test]
fn cli_config_document_round_trip_and_determinism() {
    let dir = tmp("cli_cfg");
    let cfg = serde_json::json!({
        "scenarios": ["abg-counterexample", "p-laplacian-minimizer"],
        "seed": 11,
        "threads": 2,
        "grid_scale": 1.0,
        "out": dir.join("r1").to_str().unwrap(),
    });
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let out1 = bin()
        .args(["run", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out1.status.success());
    let out2 = bin()
        .args([
            "run",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.join("r2").to_str().unwrap(),
            "--threads",
            "1",
        ])
        .output()
        .unwrap();
    assert!(out2.status.success());
    let digest = |p: &std::path::Path| -> String {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["digest"].as_str().unwrap().to_string()
    };
    assert_eq!(
        digest(&dir.join("r1").join("report.json")),
        digest(&dir.join("r2").join("report.json")),
        "same seed and scenarios must give one digest regardless of threads"
    );
}
