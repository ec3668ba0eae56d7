use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gauss_codazzi::io;
use serde_json::Value;

const PROFILE: &str = "[profile]\nkind = \"HongPower\"\nc = 1.0\ndelta = 2.0\n";

const SMALL_SOLVE: &str = "[solver]\ncells = 32\nviscosity = 1e-2\npsi0 = 0.1\nduration = 1.0\n\
    output_interval = 0.25\ndata = { kind = \"random_cells\", margin = 0.05 }\n";

fn gclab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gclab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

fn repo_config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

#[test]
fn metric_reports_c1_and_a_complete_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", PROFILE);
    let out = gclab(&["metric", "--config", cfg.to_str().unwrap(), "--out", "bundle"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = dir.path().join("bundle");
    let summary = json(&b.join("summary.json"));
    let c1 = summary["c1"].as_f64().unwrap();
    assert!((c1 - 0.5 * 0.5f64.exp()).abs() < 1e-8);
    assert_eq!(summary["phi"]["admissible"], Value::Bool(true));

    let manifest = json(&b.join("bundle.json"));
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config"]["profile"]["delta"], 2.0);
    let input = manifest["inputs"][cfg.display().to_string()].as_str().unwrap();
    assert_eq!(input, gclab::bundle::sha256_hex(PROFILE.as_bytes()));
    for (name, sum) in manifest["outputs"].as_object().unwrap() {
        assert_eq!(sum.as_str().unwrap(), gclab::bundle::sha256_hex(&fs::read(b.join(name)).unwrap()), "{name}");
    }
    assert_eq!(fs::read_to_string(b.join("config.toml")).unwrap(), PROFILE);
    let csv = fs::read_to_string(b.join("metric.csv")).unwrap();
    assert!(csv.starts_with("t,k_star,h,dh,dln_h,sign_switch\n"));
}

#[test]
fn decay_scan_finds_threshold_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = gclab(&["verify-decay", "--config", &repo_config("decay.toml"), "--out", "d"], dir.path());
    assert!(out.status.success());
    let d = json(&dir.path().join("d/decay.json"));
    assert_eq!(d["threshold"], 3.0);
    assert_eq!(d["monotone"], Value::Bool(true));
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for body in [format!("{PROFILE}typo_key = 3\n"), "not toml at all [".to_owned(), format!("{PROFILE}[solver]\ncells = 4\n")] {
        let cfg = write_config(dir.path(), "bad.toml", &body);
        let out = gclab(&["solve", "--config", cfg.to_str().unwrap(), "--out", "never"], dir.path());
        assert_eq!(out.status.code(), Some(2));
        assert_eq!(stderr_json(&out)["kind"], "config");
        assert!(!dir.path().join("never").exists());
    }
    let out = gclab(&["metric", "--out", "never"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = gclab(&["metric", "--config", "absent.toml", "--out", "never"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let cfg = write_config(
        dir.path(),
        "r.toml",
        &format!("{PROFILE}[reconstruct]\ninput = {{ source = \"bundle\", path = \"no/such/bundle\" }}\n"),
    );
    let out = gclab(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", "never"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["kind"], "missing_input");
    assert!(!dir.path().join("never").exists());
}

#[test]
fn solver_abort_exits_3_with_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", &format!("{PROFILE}{SMALL_SOLVE}gap_min = 10.0\n"));
    let out = gclab(&["solve", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "numerical");
    let snap = dir.path().join(err["snapshot"].as_str().unwrap());
    assert_eq!(io::read_checkpoint(&snap).unwrap().len(), 32);
    assert!(!dir.path().join("o/summary.json").exists());
}

#[test]
fn solve_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", &format!("{PROFILE}{SMALL_SOLVE}"));
    for out_dir in ["a", "b"] {
        let out = gclab(&["solve", "--config", cfg.to_str().unwrap(), "--out", out_dir, "--seed", "5"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 6);
    for name in names {
        assert_eq!(fs::read(dir.path().join("a").join(&name)).unwrap(), fs::read(dir.path().join("b").join(&name)).unwrap());
    }
    let summary = json(&dir.path().join("a/summary.json"));
    assert_eq!(summary["region_ok"], Value::Bool(true));
    assert_eq!(json(&dir.path().join("a/bundle.json"))["seed"], 5);
    let csv = fs::read_to_string(dir.path().join("a/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,u,v,l,m,n\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 32);
}

#[test]
fn reconstruct_from_a_solve_bundle_and_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_config("reconstruct_smooth.toml");
    assert!(gclab(&["solve", "--config", &cfg, "--out", "out/smooth"], dir.path()).status.success());
    for out_dir in ["s1", "s2"] {
        let out = gclab(&["reconstruct", "--config", &cfg, "--out", out_dir], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let obj = |d: &str| fs::read(dir.path().join(d).join("surface.obj")).unwrap();
    assert_eq!(obj("s1"), obj("s2"));
    let r = json(&dir.path().join("s1/residuals.json"));
    assert!(r["forms"]["first_max"].as_f64().unwrap() < 1e-2);
    assert!(r["normal_unit_defect"].as_f64().unwrap() < 1e-8);
    let manifest = json(&dir.path().join("s1/bundle.json"));
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 2);

    let out = gclab(&["reconstruct", "--config", &repo_config("reconstruct_plane.toml"), "--out", "plane"], dir.path());
    assert!(out.status.success());
    let r = json(&dir.path().join("plane/residuals.json"));
    assert!(r["forms"]["first_max"].as_f64().unwrap() <= 1e-10 && r["forms"]["second_max"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn demo_config_stays_in_region() {
    let dir = tempfile::tempdir().unwrap();
    let out = gclab(&["solve", "--config", &repo_config("demo.toml"), "--out", "demo", "--jobs", "2"], dir.path());
    assert!(out.status.success());
    let s = json(&dir.path().join("demo/summary.json"));
    assert!(s["worst_margin"].as_f64().unwrap() >= -1e-8);
    assert_eq!(s["region_ok"], Value::Bool(true));
}

#[test]
fn sweep_distances_strictly_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let out = gclab(&["sweep", "--config", &repo_config("sweep.toml"), "--out", "sw", "--jobs", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("sw/summary.json"));
    assert_eq!(s["seeds"][0]["distances_strictly_decreasing"], Value::Bool(true));
    let report = json(&dir.path().join("sw/sweep_seed1.json"));
    assert_eq!(report["distances"].as_array().unwrap().len(), 3);
    let table = fs::read_to_string(dir.path().join("sw/residuals_seed1.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4 * 8);
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", PROFILE);
    let out = Command::new(env!("CARGO_BIN_EXE_gclab"))
        .args(["metric", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("OUTPUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/summary.json").exists());
}
