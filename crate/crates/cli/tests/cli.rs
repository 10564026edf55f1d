use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bosenls(args: &[&str], env_output: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bosenls"));
    cmd.args(args).env("RUST_LOG", "error");
    match env_output {
        Some(root) => cmd.env("BOSENLS_OUTPUT", root),
        None => cmd.env_remove("BOSENLS_OUTPUT"),
    };
    cmd.output().expect("binary runs")
}

struct Run {
    _tmp: TempDir,
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exit code")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn json(&self, name: &str) -> Value {
        let text = fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        serde_json::from_str(&text).unwrap()
    }

    fn bytes(&self, name: &str) -> Vec<u8> {
        fs::read(self.out.join(name)).unwrap()
    }
}

fn run(command: &str, config: &str, extra: &[&str]) -> Run {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = tmp.path().join("out");
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let output = bosenls(&args, None);
    Run { _tmp: tmp, out, output }
}

fn assert_schema(instance: &Value, schema: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn assert_ok(r: &Run, schema: &str, record: &str) -> Value {
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let manifest = r.json("manifest.json");
    assert_schema(&manifest, "manifest");
    let listed: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(listed.contains(&record));
    for f in listed {
        assert!(r.out.join(f).is_file(), "{f}");
    }
    let value = r.json(record);
    assert_schema(&value, schema);
    value
}

#[test]
fn exponents_exact_schedule() {
    let r = run("exponents", "[model]\ns = 2\nbeta = 0.7\n", &[]);
    let v = assert_ok(&r, "exponents", "exponents.json");
    assert_eq!(v["exact"]["beta1"], "3/4");
    assert_eq!(v["exact"]["beta0"], "1/6");
    assert_eq!(v["exact"]["c"], "1/130");
    assert_eq!(v["beta1"].as_f64(), Some(0.75));
    assert_eq!(v["verdict"], "converged");
    assert_eq!(v["steps"], 52);
    let csv = String::from_utf8(r.bytes("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 53);
}

#[test]
fn exponents_at_threshold_diverge_and_bad_step_is_rejected() {
    let r = run("exponents", "[model]\ns = 2\nbeta = \"3/4\"\n", &[]);
    let v = assert_ok(&r, "exponents", "exponents.json");
    assert_eq!(v["verdict"], "diverged");
    assert!(v["c"].is_null());

    let r = run("exponents", "[model]\ns = 2\nbeta = 0.7\n[numerics]\nstep = \"1/50\"\n", &[]);
    assert_eq!(r.code(), 2, "{}", r.stderr());
    assert!(r.stderr().contains("numerics.step") && r.stderr().contains("1/65"), "{}", r.stderr());
}

#[test]
fn townes_rerun_is_bit_identical() {
    let a = run("townes", "", &[]);
    let b = run("townes", "", &[]);
    let v = assert_ok(&a, "townes", "townes.json");
    assert!((v["a_star"].as_f64().unwrap() - 11.70).abs() < 0.01);
    for f in ["townes.json", "profile.csv"] {
        assert_eq!(a.bytes(f), b.bytes(f), "{f}");
    }
}

#[test]
fn sweep_errors_decrease() {
    let r = run(
        "sweep-lambda",
        "[model.interaction]\nintegral = -3.0\n[numerics]\ngrid_points = 32\nlambdas = [1.0, 2.0, 4.0, 8.0]\n",
        &[],
    );
    let v = assert_ok(&r, "sweep", "sweep.json");
    assert_eq!(v["strictly_decreasing"], true);
    let errors: Vec<f64> = v["errors"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn nls_and_hartree_records() {
    let r = run("nls", "[model]\ncoupling = -5.0\n[numerics]\ngrid_points = 32\n", &[]);
    let nls = assert_ok(&r, "nls", "nls.json");
    assert_eq!(nls["converged"], true);

    let config = "[model]\nparticles = [10, 40]\nbeta = 0.4\n[model.interaction]\nintegral = -5.0\n\
                  [numerics]\ngrid_points = 32\n";
    let r = run("hartree", config, &["--jobs", "2"]);
    let v = assert_ok(&r, "hartree", "hartree.json");
    let records = v.as_array().unwrap();
    assert_eq!(records.iter().map(|r| r["particles"].as_u64().unwrap()).collect::<Vec<_>>(), [10, 40]);
    for rec in records {
        assert_eq!(rec["converged"], true);
        assert!(rec["energy"]["total"].as_f64().unwrap() > nls["energy"]["total"].as_f64().unwrap() - 0.5);
    }
    assert!(r.out.join("field_n10.csv").is_file());
}

#[test]
fn stability_threshold_at_critical_coupling() {
    let stable = run("stability", "[model.interaction]\nkind = \"bump\"\nintegral = -5.0\n", &[]);
    let v = assert_ok(&stable, "stability", "stability.json");
    assert_eq!(v["unstable"], false);
    let unstable = run("stability", "[model.interaction]\nkind = \"bump\"\nintegral = -20.0\n", &[]);
    let v = assert_ok(&unstable, "stability", "stability.json");
    assert_eq!(v["unstable"], true);
}

#[test]
fn manybody_small_basis() {
    let r = run("manybody", "[model]\nparticles = [2, 3]\n[numerics]\nmodes = 4\ngrid_points = 32\n", &[]);
    let v = assert_ok(&r, "manybody", "manybody.json");
    let records = v["records"].as_array().unwrap();
    assert_eq!(records[0]["dimension"], 10);
    assert_eq!(records[1]["dimension"], 20);
    for rec in records {
        assert!(rec["ground_energy"].as_f64().unwrap() <= rec["hartree_energy"].as_f64().unwrap() + 1e-9);
    }
}

#[test]
fn definetti_random_and_supplied_states() {
    let r = run("definetti", "[model]\nparticles = [8]\nspan = 2\n[numerics]\nstates = 4\n", &["--seed", "7"]);
    let v = assert_ok(&r, "definetti", "definetti.json");
    let seeds: Vec<u64> = v["records"].as_array().unwrap().iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, [7, 8, 9, 10]);
    assert_eq!(r.json("manifest.json")["config"]["seed"], 7);
    for rec in v["records"].as_array().unwrap() {
        assert!(rec["error"].as_f64().unwrap() <= rec["bound_8d_over_n"].as_f64().unwrap());
    }

    let tmp = TempDir::new().unwrap();
    let state = tmp.path().join("state.json");
    // all four particles in mode 0: a product state, whose finite-N error
    // is small but not zero
    fs::write(&state, r#"{"modes": 2, "particles": 4, "amplitudes": [[1,0],[0,0],[0,0],[0,0],[0,0]]}"#).unwrap();
    let config = format!("[model]\nspan = 2\nstate_file = {:?}\n", state.to_str().unwrap());
    let r = run("definetti", &config, &[]);
    let v = assert_ok(&r, "definetti", "definetti.json");
    let rec = &v["records"][0];
    assert!(rec["seed"].is_null());
    assert!((rec["mass"].as_f64().unwrap() - 1.0).abs() < 1e-9, "{rec}");
    assert!(rec["error"].as_f64().unwrap() < 1.0, "{rec}");

    fs::write(&state, r#"{"modes": 2, "particles": 4, "amplitudes": [[1,0]]}"#).unwrap();
    assert_ne!(run("definetti", &config, &[]).code(), 0);
}

#[test]
fn config_errors_list_every_problem() {
    let r = run("nls", "[model]\ncoupling = \"strong\"\nbogus = 1\n[numerics]\ngrid_points = 0\n", &[]);
    assert_eq!(r.code(), 2);
    let err = r.stderr();
    for path in ["model.coupling", "model.bogus", "numerics.grid_points"] {
        assert!(err.contains(path), "{path} missing from:\n{err}");
    }
    assert!(!r.out.exists());

    let missing = bosenls(&["townes", "--config", "/nonexistent/run.toml"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn validate_prints_resolved_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "command = \"exponents\"\n[model]\ns = 2\nbeta = 0.7\n").unwrap();
    let out = bosenls(&["validate", "--config", cfg.to_str().unwrap()], Some(tmp.path()));
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "exponents");
    assert_eq!(v["model"]["beta"], "0.7");
    assert_eq!(Path::new(v["output"].as_str().unwrap()), tmp.path().join("exponents"));

    let out = bosenls(&["validate", "--config", cfg.to_str().unwrap(), "--command", "nls"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_takes_command_from_file_and_env_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "command = \"exponents\"\n[model]\ns = 1\nbeta = 0.6\n").unwrap();
    let out = bosenls(&["run", "--config", cfg.to_str().unwrap()], Some(tmp.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("exponents/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "exponents");
}
