use std::path::Path;
use std::process::{Command, Output};

fn adeptlab(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_adeptlab"));
    cmd.args(args).env_remove("ADEPTLAB_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const BLOCK: &str = r#"{"class": {"type": "block_union", "d": 1},
 "adversary": {"type": "noisy", "concept": [1], "flip": 0.2}, "T": 50}"#;

#[test]
fn run_writes_transcript_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "block.json", BLOCK);
    let out = dir.path().join("game.csv");
    let o = adeptlab(&["run", "--config", &cfg, "--seed", "4", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("round,x,p1,y_hat,y,active,wc_queries,pruning_queries,cum_raw,cum_dedup,expected_loss,realized_loss"));
    assert_eq!(text.lines().count(), 51);
    let summary = std::fs::read_to_string(dir.path().join("game.summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed 4"));
}

#[test]
fn jsonl_by_extension_and_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "block.json", BLOCK);
    let out = dir.path().join("game.jsonl");
    let o = adeptlab(&["run", "--quiet", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 50);
    assert!(text.lines().all(|l| l.starts_with('{')));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "block.json", BLOCK);
    let o = adeptlab(&["run", "--config", &cfg, "--seed", "9"], &[("ADEPTLAB_OUT_DIR", dir.path())]);
    assert!(o.status.success());
    assert!(dir.path().join("run-9.csv").exists());
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "block.json", BLOCK);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(adeptlab(&["run", "--config", &cfg, "--out", p.to_str().unwrap()], &[]).status.success());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn sweep_writes_cells_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"base": {"class": {"type": "block_union", "d": 1},
                     "adversary": {"type": "noisy", "concept": [0], "flip": 0.2}, "T": 16, "replicates": 3},
            "grid": {"T": [16, 32], "c": [0.5, 1.0]}}"#,
    );
    let out = dir.path().join("cells.csv");
    let o = adeptlab(&["sweep", "--quiet", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 5);
    assert_eq!(std::fs::read_to_string(dir.path().join("cells.runs.csv")).unwrap().lines().count(), 13);
}

#[test]
fn verify_and_dims_succeed() {
    let o = adeptlab(&["verify", "dims"], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS dims"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "class.json", r#"{"type": "finite", "domain_size": 3, "concepts": [[1,0,0],[0,1,0],[0,0,1]]}"#);
    let o = adeptlab(&["dims", "--config", &cfg], &[]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "VC 1\nLittlestone 1\n");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"class": {"type": "block_union", "d": 1}, "T": 5, "colour": 1}"#);
    let o = adeptlab(&["run", "--config", &bad], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert_eq!(adeptlab(&["verify", "nonsense"], &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(adeptlab(&["run", "--config", missing.to_str().unwrap()], &[]).status.code(), Some(2));
    let bad_adv = write(
        dir.path(),
        "adv.json",
        r#"{"class": {"type": "finite", "domain_size": 2, "concepts": [[0,1]]},
            "adversary": {"type": "phase_reset", "d": 1}, "T": 5}"#,
    );
    assert_eq!(adeptlab(&["run", "--config", &bad_adv], &[]).status.code(), Some(2));
}
