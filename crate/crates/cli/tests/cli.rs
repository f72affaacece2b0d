use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"{
  "schema_version": 1,
  "n_samples": 800,
  "n_seeds": 2,
  "max_loop_iterations": 2,
  "fl": {"n_clients": 4, "n_rounds": 2, "learning_rate": 0.03, "dp_sigma": 1.0, "clip_norm": 1.0,
         "fd_step": 0.001, "free": ["shadowing_sigma_db"]},
  "training": {"learning_rates": [0.01], "batch_sizes": [64], "max_epochs": 3, "patience": 2, "hidden": [16, 16]}
}"#;

struct Env {
    tmp: TempDir,
}

impl Env {
    fn new(extra: &[(&str, &str)]) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg: serde_json::Value = serde_json::from_str(SMALL).unwrap();
        for (k, v) in extra {
            cfg[*k] = serde_json::from_str(v).unwrap();
        }
        fs::write(tmp.path().join("config.json"), cfg.to_string()).unwrap();
        Self { tmp }
    }

    fn out(&self) -> PathBuf {
        self.tmp.path().join("out")
    }

    fn seal(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_seal"))
            .args(args)
            .arg("--config")
            .arg(self.tmp.path().join("config.json"))
            .arg("--output")
            .arg(self.out())
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

const OPEN: &str = r#"{"fid_max": null, "eo_gap_max": null}"#;
const SHUT: &str = r#"{"fid_max": 1e-12, "eo_gap_max": 1e-12}"#;

#[test]
fn dry_run_touches_nothing() {
    let env = Env::new(&[]);
    for cmd in ["generate", "run-loop", "validate"] {
        let o = env.seal(&[cmd, "--dry-run"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("would run"));
    }
    assert!(!env.out().exists());
}

#[test]
fn open_gates_certify_and_seal() {
    let env = Env::new(&[("thresholds", OPEN)]);
    let key = env.tmp.path().join("key.hex");
    fs::write(&key, "ab".repeat(32)).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_slice(&fs::read(env.tmp.path().join("config.json")).unwrap()).unwrap();
    cfg["governance"] = serde_json::json!({"key_file": key, "key_id": "test"});
    fs::write(env.tmp.path().join("config.json"), cfg.to_string()).unwrap();

    let o = env.seal(&["run-loop", "--seed", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = env.out().join("seed-0");
    let names = files(&dir);
    assert!(names.contains(&"package.seal".to_string()));
    let log = fs::read_to_string(dir.join("lifecycle.jsonl")).unwrap();
    assert!(log.lines().last().unwrap().contains("\"share\""));
}

#[test]
fn shut_gates_reject_after_the_iteration_budget() {
    let env = Env::new(&[("thresholds", SHUT), ("max_loop_iterations", "1")]);
    let o = env.seal(&["run-loop", "--seed", "0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let dir = env.out().join("seed-0");
    let cals = files(&dir).into_iter().filter(|n| n.starts_with("calibration-")).count();
    assert_eq!(cals, 1);
    assert!(!dir.join("package.seal").exists());
    let ledger = fs::read_to_string(env.out().join("ledger.csv")).unwrap();
    assert!(ledger.lines().nth(1).unwrap().contains("Rejected"));
}

#[test]
fn stage_commands_reproduce_run_loop() {
    let staged = Env::new(&[("thresholds", OPEN)]);
    for cmd in ["generate", "augment", "calibrate", "validate", "govern"] {
        let o = staged.seal(&[cmd, "--seed", "1"]);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
    }
    let looped = Env::new(&[("thresholds", OPEN)]);
    assert_eq!(code(&looped.seal(&["run-loop", "--seed", "1"])), 0);
    let a = fs::read(staged.out().join("seed-1/manifest.json")).unwrap();
    let b = fs::read(looped.out().join("seed-1/manifest.json")).unwrap();
    assert_eq!(String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap());
}

#[test]
fn stages_refuse_edited_or_foreign_artifacts() {
    let env = Env::new(&[]);
    for seed in ["0", "1"] {
        assert_eq!(code(&env.seal(&["generate", "--seed", seed])), 0);
    }
    let s0 = env.out().join("seed-0");
    // data from another seed
    fs::copy(env.out().join("seed-1/real.jsonl"), s0.join("real.jsonl")).unwrap();
    let o = env.seal(&["augment", "--seed", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("digest mismatch for real.jsonl"), "{}", stderr(&o));

    // a stale augmented dataset: regenerate underneath it
    assert_eq!(code(&env.seal(&["generate", "--seed", "0"])), 0);
    assert_eq!(code(&env.seal(&["augment", "--seed", "0"])), 0);
    let dprime = fs::read(s0.join("dprime.json")).unwrap();
    let manifest = fs::read_to_string(s0.join("manifest.json")).unwrap();
    assert_eq!(code(&env.seal(&["calibrate", "--seed", "0"])), 0);
    fs::write(s0.join("dprime.json"), &dprime).unwrap();
    let mut m: serde_json::Value = serde_json::from_str(&fs::read_to_string(s0.join("manifest.json")).unwrap()).unwrap();
    let old: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    m["files"]["dprime.json"] = old["files"]["dprime.json"].clone();
    fs::write(s0.join("manifest.json"), m.to_string()).unwrap();
    let o = env.seal(&["validate", "--seed", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dprime.json base"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_1() {
    let env = Env::new(&[("surprise", "1")]);
    let o = env.seal(&["run-loop"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("surprise"), "{}", stderr(&o));
    let env = Env::new(&[("schema_version", "7")]);
    assert_eq!(code(&env.seal(&["generate"])), 1);
    // a stage with nothing generated yet
    let env = Env::new(&[]);
    assert_eq!(code(&env.seal(&["validate"])), 1);
}

#[test]
fn run_loop_is_deterministic_and_report_aggregates() {
    let a = Env::new(&[("thresholds", SHUT)]);
    let b = Env::new(&[("thresholds", SHUT)]);
    assert_eq!(code(&a.seal(&["run-loop"])), 2);
    assert_eq!(code(&b.seal(&["run-loop"])), 2);
    for f in ["ledger.csv", "summary.json", "seed-0/manifest.json", "seed-1/manifest.json"] {
        assert_eq!(fs::read(a.out().join(f)).unwrap(), fs::read(b.out().join(f)).unwrap(), "{f}");
    }
    let o = a.seal(&["report", "--input", a.out().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("seeds,certified,fid_pre"));
    assert!(lines[1].starts_with("2,0,"));
    assert!(lines[1].contains(" ± "));

    // per-seed ledgers aggregate to the same table
    let per_seed = [a.out().join("seed-0/ledger.csv"), a.out().join("seed-1/ledger.csv")];
    let o = a.seal(&["report", "--input", per_seed[0].to_str().unwrap(), per_seed[1].to_str().unwrap()]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), table);
}
