use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cascade_core::model::Network;
use cascade_core::uncertainty::PolytopeSpec;
use cascade_core::Instance;
use serde_json::Value;
use tempfile::TempDir;

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Value of a `key value` line on stdout.
fn field(out: &Output, key: &str) -> String {
    stdout(out)
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).map(str::to_owned))
        .unwrap_or_else(|| panic!("no {key} in output:\n{}", stdout(out)))
}

fn generate(dir: &Path, seed: u64, n: usize) -> PathBuf {
    let path = dir.join(format!("net_{seed}_{n}.json"));
    let out = cascade(&[
        "generate", "--seed", &seed.to_string(), "--n", &n.to_string(), "--area", "40",
        "--delta", "0.2", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_reports_counts_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let out = cascade(&["generate", "--seed", "7", "--n", "15", "--out", p(&a)]);
    assert_eq!(code(&out), 0);
    cascade(&["generate", "--seed", "7", "--n", "15", "--out", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let net = Network::from_json(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(field(&out, "assets"), "15");
    assert_eq!(field(&out, "arcs"), net.arcs().len().to_string());
}

#[test]
fn zero_budget_gives_full_service() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 3, 9);
    let out_dir = dir.path().join("run");
    let out = cascade(&["solve", "--network", p(&net), "--np", "3", "--nc", "0", "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0);
    let network = Network::from_json(&fs::read_to_string(&net).unwrap()).unwrap();
    let summary = read_json(out_dir.join("summary.json"));
    let obj = summary["objective"].as_f64().unwrap();
    assert!((obj - 3.0 * network.total_weight()).abs() < 1e-9);
    assert_eq!(summary["iterations"], 1);
    assert_eq!(summary["gap_pct"], 0.0);
    assert_eq!(summary["disabled_assets"], Value::Array(vec![]));
}

#[test]
fn oracle_check_agrees_for_both_variants() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 11, 10);
    let mut objectives = Vec::new();
    for variant in ["plain", "strengthened"] {
        let out_dir = dir.path().join(variant);
        let out = cascade(&[
            "solve", "--network", p(&net), "--np", "2", "--nc", "3", "--epsilon", "0",
            "--variant", variant, "--oracle-check", "--out", p(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(field(&out, "objective"), field(&out, "oracle_objective"));
        let csv = fs::read_to_string(out_dir.join("iterations.csv")).unwrap();
        assert!(csv.starts_with("iter,lb,ub,gap_pct,master_ms,sub_ms,cuts_total\n"));
        objectives.push(read_json(out_dir.join("summary.json"))["objective"].as_f64().unwrap());
    }
    assert!((objectives[0] - objectives[1]).abs() < 1e-9);
}

#[test]
fn follower_extreme_attacks() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 5, 8);

    let none = dir.path().join("none");
    let out = cascade(&["follower", "--network", p(&net), "--attack", "", "--np", "3", "--out", p(&none)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(none.join("trajectory.csv")).unwrap();
    assert_eq!(traj, "stage,service_level\n1,1\n2,1\n3,1\n");

    let all = dir.path().join("all");
    let ids = (0..8).map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    let out = cascade(&["follower", "--network", p(&net), "--attack", &ids, "--np", "3", "--out", p(&all)]);
    assert_eq!(code(&out), 0);
    assert_eq!(field(&out, "objective"), "0");
    let cascade_json = read_json(all.join("cascade.json"));
    assert_eq!(cascade_json["objective"], 0.0);
    let hist = fs::read_to_string(all.join("histogram.csv")).unwrap();
    // with 10 bins every asset lands in the lowest bin
    assert!(hist.lines().find(|l| l.starts_with("1,")).unwrap().ends_with(",8"));
}

#[test]
fn weight_changes_stay_within_twice_the_radius() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 21, 14);
    let instance = Instance::new(Network::from_json(&fs::read_to_string(&net).unwrap()).unwrap()).unwrap();
    let (delta, max_base) = instance
        .specs()
        .iter()
        .flatten()
        .map(|s| match s {
            PolytopeSpec::SimplexBox { base, delta, .. } => (*delta, base.iter().cloned().fold(0.0, f64::max)),
            _ => unreachable!("generated networks use box specs"),
        })
        .fold((0.0, 0.0), |a: (f64, f64), b| (a.0.max(b.0), a.1.max(b.1)));

    let out_dir = dir.path().join("f");
    let out = cascade(&["follower", "--network", p(&net), "--attack", "0,1,2", "--np", "4", "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(out_dir.join("weight_deltas.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("asset,upstream,stage_pair,delta"));
    for line in lines {
        let d: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(d.abs() <= 2.0 * delta * max_base + 1e-12, "{line}");
    }
}

#[test]
fn enumerate_writes_table() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 2, 6);
    let out_dir = dir.path().join("e");
    let out = cascade(&["enumerate", "--network", p(&net), "--np", "2", "--nc", "2", "--table", "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0);
    assert_eq!(field(&out, "evaluated"), "22");
    let table = fs::read_to_string(out_dir.join("enumeration_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 23);

    let out = cascade(&["enumerate", "--network", p(&net), "--nc", "2", "--guard", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 4, 10);
    let out_dir = dir.path().join("x");

    let out = cascade(&["follower", "--network", p(&net), "--attack", "42", "--out", p(&out_dir)]);
    assert_eq!(code(&out), 2);

    let out = cascade(&["solve", "--network", p(&net), "--nc", "4", "--max-iterations", "1", "--out", p(&out_dir)]);
    assert_eq!(code(&out), 3);
    assert_eq!(read_json(out_dir.join("summary.json"))["status"], "iteration_limit");

    let out = cascade(&["solve", "--network", p(&dir.path().join("missing.json"))]);
    assert_eq!(code(&out), 2);

    let out = cascade(&["solve", "--network", p(&net), "--nc", "11"]);
    assert_eq!(code(&out), 2);

    let out = cascade(&["solve", "--network", p(&net), "--variant", "fancy"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("cfg");
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"generate": {{"seed": 9, "n_assets": 8, "area": 40.0}}, "np": 2, "nc": 7, "out": {:?}}}"#,
            p(&out_dir)
        ),
    )
    .unwrap();
    // the flag lowers the budget from 7 to 0
    let out = cascade(&["solve", "--config", p(&cfg), "--nc", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(out_dir.join("summary.json"))["iterations"], 1);

    fs::write(&cfg, r#"{"np": 2, "budget": 3}"#).unwrap();
    let out = cascade(&["solve", "--config", p(&cfg)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget") && err.contains("line 1"), "{err}");
}

#[test]
fn sweep_table_layout() {
    let dir = TempDir::new().unwrap();
    let net = generate(dir.path(), 6, 8);
    let out_dir = dir.path().join("s");
    let out = cascade(&[
        "sweep", "--network", p(&net), "--np-min", "1", "--np-max", "2", "--nc-min", "2", "--nc-max", "3",
        "--out", p(&out_dir),
    ]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("Np,Nc,time_s_plain,iters_plain,gap_pct_plain,time_s_strengthened,iters_strengthened,gap_pct_strengthened")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("1,2,") && rows[3].starts_with("2,3,"));
}
