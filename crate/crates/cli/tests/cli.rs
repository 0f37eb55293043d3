use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn neighvar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neighvar"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = neighvar(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SMALL: &str = r#"
[graph.sbm]
block_sizes = [40, 40]
p_in = 0.2
p_out = 0.02
[attack]
targets = 6
[sweep]
walk_len = [0, 2]
"#;

fn small_config(dir: &Path) -> String {
    fs::write(dir.join("small.toml"), SMALL).unwrap();
    "small.toml".into()
}

/// generate → train → attack → retrain → detect, returning the poisoned
/// graph directory and model.
fn pipeline(dir: &Path, cfg: &str, seed: &str) {
    ok(dir, &["--config", cfg, "--seed", seed, "--out", "g", "generate"]);
    ok(dir, &["--config", cfg, "--seed", seed, "--out", "m.json", "train", "--graph", "g"]);
    ok(
        dir,
        &[
            "--config", cfg, "--seed", seed, "--out", "p.json", "attack", "--graph", "g", "--model", "m.json",
            "--graph-out", "gp",
        ],
    );
    ok(dir, &["--config", cfg, "--seed", seed, "--out", "mp.json", "train", "--graph", "gp"]);
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(&neighvar(d, &["frobnicate"])), 1);
    assert_eq!(code(&neighvar(d, &["generate", "--p-in", "lots"])), 1);
    assert_eq!(code(&neighvar(d, &["generate"])), 1, "missing --out");
    fs::write(d.join("bad.toml"), "seeed = 3\n").unwrap();
    assert_eq!(code(&neighvar(d, &["--config", "bad.toml", "--out", "g", "generate"])), 1);
    assert_eq!(code(&neighvar(d, &["--config", "absent.toml", "--out", "g", "generate"])), 1);
    assert_eq!(code(&neighvar(d, &["--out", "g", "generate", "--blocks", "0,5"])), 1);
    assert_eq!(code(&neighvar(d, &["--out", "o", "sweep", "--axis", "eta"])), 1);
    assert_eq!(code(&neighvar(d, &["--help"])), 0);
}

#[test]
fn runtime_failures_exit_two() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(&neighvar(d, &["--out", "m.json", "train", "--graph", "missing"])), 2);
    ok(d, &["--out", "g", "generate", "--blocks", "20,20"]);
    fs::write(d.join("m.json"), "{ not json").unwrap();
    assert_eq!(code(&neighvar(d, &["--out", "s.tsv", "detect", "--graph", "g", "--model", "m.json"])), 2);
}

#[test]
fn bad_flag_values_after_loading_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = small_config(d);
    pipeline(d, &cfg, "1");
    let detect = |extra: &[&str]| {
        let mut args = vec!["--out", "s.tsv", "detect", "--graph", "gp", "--model", "mp.json"];
        args.extend_from_slice(extra);
        code(&neighvar(d, &args))
    };
    assert_eq!(detect(&["--variant", "cov"]), 1);
    assert_eq!(detect(&["--gamma", "0"]), 1);
    assert_eq!(detect(&["--eta", "1.5"]), 1);
    assert_eq!(detect(&["--baseline", "radar"]), 1);
    assert_eq!(detect(&["--baseline", "jsd", "--variant", "sim"]), 1);
    let attack = |extra: &[&str]| {
        let mut args = vec!["--out", "q.json", "attack", "--graph", "g", "--model", "m.json"];
        args.extend_from_slice(extra);
        code(&neighvar(d, &args))
    };
    assert_eq!(attack(&["--kind", "nettack"]), 1);
    assert_eq!(attack(&["--budget", "0"]), 1);
    assert_eq!(attack(&["--budget", "2", "--budget-frac", "0.5"]), 1);
    assert_eq!(attack(&["--kind", "dice", "--budget-degree"]), 1);
}

#[test]
fn stepwise_commands_reproduce_run_all() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = small_config(d);
    pipeline(d, &cfg, "5");
    ok(d, &["--config", &cfg, "--seed", "5", "--out", "s.tsv", "detect", "--graph", "gp", "--model", "mp.json"]);
    let eval = ok(
        d,
        &["--config", &cfg, "--seed", "5", "eval", "--scores", "s.tsv", "--perturbation", "p.json", "--graph", "gp"],
    );
    let eval: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();

    ok(d, &["--config", &cfg, "--seed", "5", "--out", "run", "run-all"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "complete");
    let feat = report["detectors"].as_array().unwrap().iter().find(|x| x["name"] == "detecta_feat").unwrap();
    assert_eq!(eval["auc"], feat["auc"]);
    assert_eq!(eval["auc_reversed"], feat["auc_reversed"]);
    assert_eq!(fs::read(d.join("s.tsv")).unwrap(), fs::read(d.join("run/scores/detecta_feat.tsv")).unwrap());
    assert_eq!(fs::read(d.join("p.json")).unwrap(), fs::read(d.join("run/perturbation.json")).unwrap());
    assert_eq!(fs::read(d.join("gp/edges.tsv")).unwrap(), fs::read(d.join("run/poisoned/edges.tsv")).unwrap());
}

#[test]
fn eval_respects_orientation_and_population_flags() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = small_config(d);
    pipeline(d, &cfg, "2");
    let base = ["--out", "asc.tsv", "detect", "--graph", "gp", "--model", "mp.json", "--variant", "sim"];
    ok(d, &base);
    let desc = ok(d, &["eval", "--scores", "asc.tsv", "--perturbation", "p.json", "--graph", "gp"]);
    let mut with_flag = base.to_vec();
    with_flag.push("--ascending");
    ok(d, &with_flag);
    let asc = ok(d, &["eval", "--scores", "asc.tsv", "--perturbation", "p.json", "--graph", "gp"]);
    let desc: serde_json::Value = serde_json::from_slice(&desc.stdout).unwrap();
    let asc: serde_json::Value = serde_json::from_slice(&asc.stdout).unwrap();
    assert_eq!(asc["orientation"], "ascending");
    assert_eq!(asc["auc"], desc["auc_reversed"]);

    let all = ok(
        d,
        &["eval", "--scores", "asc.tsv", "--perturbation", "p.json", "--graph", "gp", "--population", "all"],
    );
    let all: serde_json::Value = serde_json::from_slice(&all.stdout).unwrap();
    assert_eq!(all["population"], "all");
    assert!(all["population_size"].as_u64().unwrap() > asc["population_size"].as_u64().unwrap());
    let bad = neighvar(d, &["eval", "--scores", "asc.tsv", "--perturbation", "p.json", "--graph", "gp", "--population", "some"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = small_config(d);
    for run in ["a", "b"] {
        ok(d, &["--config", &cfg, "--seed", "9", "--out", run, "run-all"]);
    }
    for f in ["report.json", "scores/detecta_feat.tsv", "scores/detecta_sim.tsv", "scores/jsd.tsv", "scores/control.tsv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    ok(d, &["--config", &cfg, "--seed", "10", "--out", "c", "run-all"]);
    assert_ne!(fs::read(d.join("a/report.json")).unwrap(), fs::read(d.join("c/report.json")).unwrap());
}

#[test]
fn sweep_writes_one_row_per_value_and_detector() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = small_config(d);
    let out = ok(d, &["--config", &cfg, "--out", "sw", "sweep", "--axis", "walk-len"]);
    let tsv = fs::read_to_string(d.join("sw/sweep_walk_len.tsv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), tsv);
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("axis\tdetector\tauc\twallclock_ms"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2 * 6);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows.iter().filter(|r| r[0] == "0").count(), 6);
    assert!(d.join("sw/walk_len/2/report.json").exists());
}

#[test]
fn config_out_dir_is_used_without_flag() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("c.toml"), format!("out_dir = \"from_config\"\n{SMALL}")).unwrap();
    ok(d, &["--config", "c.toml", "generate"]);
    assert!(d.join("from_config/edges.tsv").exists());
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = neighvar::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{e}"));
        cfg.validate().unwrap();
        seen += 1;
    }
    assert!(seen >= 3);
    let default = neighvar::harness::ExperimentConfig::load(dir.join("default.toml")).unwrap();
    assert_eq!(default, neighvar::harness::ExperimentConfig::default());
}
