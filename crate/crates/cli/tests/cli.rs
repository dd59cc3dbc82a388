use nematikin::hydro::Preset;
use nematikin::{MoleculeSpec, PeriodicGrid};
use nematikin_cli::config::{
    CollideParams, DsmcParams, InitialDirector, RelaxParams, SampleMomentsParams, SolveParams, VerifyParams,
};
use nematikin_cli::{Mode, ScenarioConfig};
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn nematikin(args: &[&str], threads: Option<usize>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nematikin"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("NEMATIKIN_THREADS", t.to_string());
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn scenario(dir: &Path, name: &str, json: Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    path
}

fn run_mode(mode: &str, config: &Path, out: &Path, threads: Option<usize>) -> Run {
    nematikin(&[mode, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()], threads)
}

fn small_spec() -> Value {
    serde_json::to_value(MoleculeSpec { i3: 0.1, ..MoleculeSpec::default() }).unwrap()
}

fn schema() -> Value {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/scenario.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn resolve<'a>(node: &'a Value, root: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => resolve(root.pointer(r.trim_start_matches('#')).expect("reference resolves"), root),
        None => node,
    }
}

/// Asserts that the property names of every object in `value` match the schema node,
/// following `$ref`s and tagged `oneOf` branches.
fn assert_in_sync(value: &Value, node: &Value, root: &Value, path: &str) {
    let node = resolve(node, root);
    if let Some(branches) = node.get("oneOf").and_then(Value::as_array) {
        let tag = ["name", "kind"]
            .into_iter()
            .find_map(|t| value.get(t).map(|v| (t, v)))
            .unwrap_or_else(|| panic!("{path}: tagged value without a tag"));
        let branch = branches
            .iter()
            .find(|b| b.pointer(&format!("/properties/{}/const", tag.0)) == Some(tag.1))
            .unwrap_or_else(|| panic!("{path}: schema has no branch for {}", tag.1));
        return assert_in_sync(value, branch, root, path);
    }
    if let (Value::Object(map), Some(Value::Object(props))) = (value, node.get("properties")) {
        for key in map.keys() {
            assert!(props.contains_key(key), "{path}.{key} is missing from the schema");
        }
        for key in props.keys() {
            assert!(map.contains_key(key), "schema property {path}.{key} does not exist in the config type");
        }
        for (key, v) in map {
            assert_in_sync(v, &props[key], root, &format!("{path}.{key}"));
        }
    }
}

fn def<'a>(root: &'a Value, name: &str) -> &'a Value {
    &root["$defs"][name]
}

fn check<T: Serialize>(value: &T, name: &str) {
    let root = schema();
    assert_in_sync(&serde_json::to_value(value).unwrap(), def(&root, name), &root, name);
}

#[test]
fn schema_lists_every_config_field() {
    let root = schema();
    let top = ScenarioConfig { mode: Some(Mode::Solve), seed: Some(1), out: Some("o".into()), params: Value::Null };
    assert_in_sync(&serde_json::to_value(&top).unwrap(), &root, &root, "scenario");
    check(&SampleMomentsParams::default(), "SampleMomentsParams");
    check(&CollideParams::default(), "CollideParams");
    check(&DsmcParams::default(), "DsmcParams");
    check(&RelaxParams::default(), "RelaxParams");
    check(&SolveParams::default(), "SolveParams");
    check(&VerifyParams::default(), "VerifyParams");
    for initial in [
        InitialDirector::Helix { turns: 2 },
        InitialDirector::Perturbed { amplitude: 0.1 },
        InitialDirector::File { path: "f".into() },
    ] {
        check(&initial, "InitialDirector");
    }
    for name in Preset::NAMES {
        check(&Preset::default_for(name).unwrap(), "Preset");
    }
    let modes: Vec<&str> = root["properties"]["mode"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_str().unwrap())
        .collect();
    for mode in [Mode::SampleMoments, Mode::Collide, Mode::Dsmc, Mode::RelaxDirector, Mode::Solve, Mode::VerifyIdentities] {
        assert!(modes.contains(&mode.name()), "{}", mode.name());
    }
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = nematikin_cli::read_config(&path).unwrap();
        let parsed = match config.mode.expect("scenario names its mode") {
            Mode::SampleMoments => config.params::<SampleMomentsParams>().map(drop),
            Mode::Collide => config.params::<CollideParams>().map(drop),
            Mode::Dsmc => config.params::<DsmcParams>().map(drop),
            Mode::RelaxDirector => config.params::<RelaxParams>().map(drop),
            Mode::Solve => config.params::<SolveParams>().map(drop),
            Mode::VerifyIdentities => config.params::<VerifyParams>().map(drop),
        };
        assert!(parsed.is_ok(), "{}: {parsed:?}", path.display());
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn verify_identities_with_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "v.json", serde_json::json!({}));
    let run = run_mode("verify-identities", &cfg, &dir.path().join("out"), None);
    assert_eq!(run.code, 0, "{}{}", run.stdout, run.stderr);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["passed"] == true && c["name"].is_string()));
}

#[test]
fn sample_moments_is_bit_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "m.json",
        serde_json::json!({
            "mode": "sample-moments",
            "seed": 9,
            "params": { "count": 4000, "resamples": 20,
                        "equilibrium": { "n": 1.0, "theta_bar": 2.5, "spec": small_spec() } }
        }),
    );
    let read = |out: &str, threads| {
        let out = dir.path().join(out);
        let run = run_mode("sample-moments", &cfg, &out, threads);
        assert_eq!(run.code, 0, "{}", run.stderr);
        std::fs::read(out.join("moments.json")).unwrap()
    };
    let a = read("a", Some(1));
    assert_eq!(a, read("b", Some(1)));
    assert_eq!(a, read("c", Some(3)));
}

#[test]
fn solve_uniform_keeps_mass_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "s.json",
        serde_json::json!({
            "mode": "solve",
            "params": {
                "grid": { "dims": [16, 8, 1] },
                "preset": { "name": "uniform", "velocity": [0.3, -0.2, 0.0], "director": [1.0, 1.0, 0.0] },
                "solver": { "t_end": 0.2 },
                "snapshot_every": 5
            }
        }),
    );
    let out = dir.path().join("out");
    let run = run_mode("solve", &cfg, &out, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), nematikin::hydro::DIAGNOSTICS_HEADER);
    let masses: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(masses.len() > 2);
    assert!(masses.iter().all(|m| *m == masses[0]));
    assert!(out.join("snapshots/step_000005.grid").exists());
    let last = nematikin::hydro::FluidField::read(std::io::BufReader::new(
        std::fs::File::open(out.join("state_final.grid")).unwrap(),
    ))
    .unwrap();
    assert_eq!(last.grid, PeriodicGrid::plane(16, 8, 1.0, 1.0).unwrap());
}

#[test]
fn relax_director_restarts_from_its_own_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = scenario(
        dir.path(),
        "r.json",
        serde_json::json!({
            "seed": 4,
            "params": { "grid": { "dims": [12, 12, 1] }, "iterations": 50 }
        }),
    );
    let out = dir.path().join("one");
    assert_eq!(run_mode("relax-director", &first, &out, None).code, 0);
    let second = scenario(
        dir.path(),
        "r2.json",
        serde_json::json!({
            "params": {
                "initial": { "kind": "file", "path": out.join("director_final.grid") },
                "iterations": 50
            }
        }),
    );
    let out2 = dir.path().join("two");
    let run = run_mode("relax-director", &second, &out2, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let energies = |d: &Path| -> Vec<f64> {
        std::fs::read_to_string(d.join("energies.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let (e1, e2) = (energies(&out), energies(&out2));
    assert_eq!(e1.last(), e2.first());
    assert!(e2.last().unwrap() <= e2.first().unwrap());
}

#[test]
fn dsmc_and_collide_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "d.json",
        serde_json::json!({
            "seed": 2,
            "params": { "count": 300, "steps": 5,
                        "equilibrium": { "n": 0.05, "theta_bar": 2.5, "spec": small_spec() } }
        }),
    );
    let run = run_mode("dsmc", &cfg, &dir.path().join("d"), None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(std::fs::read_to_string(dir.path().join("d/dsmc.csv")).unwrap().lines().count(), 6);
    let cfg = scenario(dir.path(), "c.json", serde_json::json!({ "seed": 2, "params": { "count": 200 } }));
    let run = run_mode("collide", &cfg, &dir.path().join("c"), None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(std::fs::read_to_string(dir.path().join("c/collisions.csv")).unwrap().lines().count(), 201);
}

#[test]
fn invariant_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        "c.json",
        serde_json::json!({ "seed": 1, "params": { "count": 200, "tolerances": { "energy": 0.0 } } }),
    );
    let run = run_mode("collide", &cfg, &dir.path().join("c"), None);
    assert_eq!(run.code, 1, "{}", run.stdout);
    assert!(run.stdout.starts_with("FAIL"));
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let unknown = scenario(
        dir.path(),
        "u.json",
        serde_json::json!({ "params": { "solver": { "t_end": 1.0, "sceme": "central_mol" } } }),
    );
    let run = run_mode("solve", &unknown, &out, None);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("params.solver"), "{}", run.stderr);

    let wrong_type = scenario(dir.path(), "t.json", serde_json::json!({ "seed": "seven" }));
    let run = run_mode("collide", &wrong_type, &out, None);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("`seed`"), "{}", run.stderr);

    let no_seed = scenario(dir.path(), "n.json", serde_json::json!({}));
    assert_eq!(run_mode("dsmc", &no_seed, &out, None).code, 2);

    let mismatch = scenario(dir.path(), "m.json", serde_json::json!({ "mode": "collide", "seed": 1 }));
    assert_eq!(run_mode("dsmc", &mismatch, &out, None).code, 2);

    let invalid = scenario(dir.path(), "i.json", serde_json::json!({ "params": { "solver": { "t_end": 1.0, "cfl": 3.0 } } }));
    assert_eq!(run_mode("solve", &invalid, &out, None).code, 2);
    assert!(!out.exists(), "rejected configs must not produce artifacts");
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfl = scenario(
        dir.path(),
        "c.json",
        serde_json::json!({ "params": { "preset": { "name": "acoustic-1d" }, "solver": { "t_end": 1.0, "dt": 1.0 } } }),
    );
    let run = run_mode("solve", &cfl, &dir.path().join("o"), None);
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains("stability limit"));
    let missing = nematikin(&["solve", "--config", dir.path().join("absent.json").to_str().unwrap()], None);
    assert_eq!(missing.code, 3);
}

#[test]
fn degenerate_acoustic_preset_is_uniform() {
    let grid = PeriodicGrid::line(16, 1.0).unwrap();
    let spec = MoleculeSpec::default();
    let acoustic = Preset::Acoustic1d { rho: 1.2, psi0: 0.7, amplitude: 0.0, mode: 3, director: [0.0, 0.0, 1.0] }
        .build(grid, &spec)
        .unwrap();
    let uniform = Preset::Uniform { rho: 1.2, velocity: [0.0; 3], psi0: 0.7, director: [0.0, 0.0, 1.0] }
        .build(grid, &spec)
        .unwrap();
    assert_eq!(acoustic, uniform);
}
