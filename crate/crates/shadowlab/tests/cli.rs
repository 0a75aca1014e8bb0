//! End-to-end runs of the binary: outputs, determinism and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_shadowlab")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const ESTIMATE: &str = r#"
version = 1
seed = 5

[ensemble]
kind = "local"
n = 2

[noise]
model = "bit-flip"
params = { eps = 0.05 }

[observable]
terms = [{ label = "ZZ", value = 1.0 }]

[state]
preset = "plus"

[sampling]
shots = 4000
batches = 8
raw_samples = true
"#;

#[test]
fn estimate_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", ESTIMATE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let (ca, _, ea) = run(&["estimate", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
    let (cb, _, eb) = run(&["estimate", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "4"]);
    assert_eq!((ca, cb), (0, 0), "{ea}{eb}");
    for f in ["estimate.json", "samples.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let samples = fs::read_to_string(a.join("samples.csv")).unwrap();
    assert!(samples.starts_with("shot,gate_id,outcome,estimate\n"));
    assert_eq!(samples.lines().count(), 4001);
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(j["result"]["shots"], 4000);
    assert_eq!(j["meta"]["seed"], 5);
    assert_eq!(j["meta"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", ESTIMATE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["estimate", "--config", &cfg, "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(run(&["estimate", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "6"]).0, 0);
    assert_ne!(fs::read(a.join("samples.csv")).unwrap(), fs::read(b.join("samples.csv")).unwrap());
}

#[test]
fn fig1_writes_per_state_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "f.toml",
        "version = 1\nseed = 1\n[scenario]\nid = \"fig1\"\ndelta_points = 5\nshots = 2000\nbatches = 4\n",
    );
    let out = dir.path().join("o");
    let (code, stdout, stderr) = run(&["scenario", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("spoof ratio"));
    for i in 0..3 {
        let t = fs::read_to_string(out.join(format!("fig1_c{i}.csv"))).unwrap();
        assert!(t.starts_with("delta,exact,sampled,se\n"));
        assert_eq!(t.lines().count(), 6);
    }
    let svg = fs::read_to_string(out.join("fig1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
    assert!(out.join("rb_axis.csv").exists() && out.join("fig1.json").exists());
}

#[test]
fn exact_only_scenarios_run() {
    let dir = tempfile::tempdir().unwrap();
    for (id, extra) in [("fig2", "delta_points = 3\n"), ("prop1", "n_range = [1, 6]\nfit_window = [4, 6]\n"), ("rse-bitflip", ""), ("rb", "delta_points = 5\n")] {
        let cfg = write(dir.path(), "s.toml", &format!("version = 1\n[scenario]\nid = \"{id}\"\nexact_only = true\n{extra}"));
        let out = dir.path().join(id);
        let (code, _, stderr) = run(&["scenario", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{id}: {stderr}");
        assert!(fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["frame", "--config", missing.to_str().unwrap(), "--out", out]).0, 4);

    let bad = write(dir.path(), "bad.toml", "version = 1\nunknown_key = 3\n");
    assert_eq!(run(&["frame", "--config", &bad, "--out", out]).0, 2);

    let version = write(dir.path(), "v.toml", "version = 9\n");
    assert_eq!(run(&["frame", "--config", &version, "--out", out]).0, 2);

    let model = write(
        dir.path(),
        "m.toml",
        "version = 1\n[ensemble]\nkind = \"global\"\nn = 1\n[noise]\nmodel = \"channel\"\nparams = { pauli_probs = [0.5, 0.5, 0.5, -0.5] }\n",
    );
    assert_eq!(run(&["frame", "--config", &model, "--out", out]).0, 3);

    let ok = write(dir.path(), "ok.toml", "version = 1\n[ensemble]\nkind = \"global\"\nn = 1\n");
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let unwritable = blocker.join("sub");
    assert_eq!(run(&["frame", "--config", &ok, "--out", unwritable.to_str().unwrap()]).0, 4);

    assert_eq!(run(&["frame", "--config", &ok]).0, 2);
    assert_eq!(run(&["frame", "--config", &ok, "--out", out]).0, 0);
}
