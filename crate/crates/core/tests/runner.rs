//! Contract tests of the experiment runner and the command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use cvarloc::frontier::{Frontier, ModelFamily, Provenance};
use cvarloc::instance::{generate_instance, serialize_instance, GeneratorParams};
use cvarloc::runner::{
    compare, emit_plot_data, reevaluate, run_experiment, union, InstanceSource, Method, RiskLevel, RunConfig,
};
use cvarloc::Error;

const TOY: &str = r#"{
  "nodes": [
    {"id": 1, "x": 0.0, "y": 0.0, "is_site": false},
    {"id": 2, "x": 1.0, "y": 0.0, "is_site": true, "opening_cost": 5000, "capacity": 25}
  ],
  "d_max": 6.0,
  "scenarios": [[10, 20], [30, 5], [4, 4]]
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cvarloc"))
}

fn config(instance: InstanceSource, method: Method, model: ModelFamily, risk: RiskLevel, out: PathBuf) -> RunConfig {
    RunConfig {
        instance,
        method,
        model,
        risk,
        time_limit_total: Some(Duration::from_secs(600)),
        time_limit_per_point: None,
        kappa: 2,
        seed: 3,
        out,
    }
}

fn write_instance(dir: &Path, nodes: usize, n: usize) -> PathBuf {
    let (inst, scen) = generate_instance(3, nodes, n, &GeneratorParams::default()).unwrap();
    let p = dir.join("inst.json");
    fs::write(&p, serialize_instance(&inst, &scen).unwrap()).unwrap();
    p
}

#[test]
fn one_site_toy_has_at_most_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("toy.json");
    fs::write(&inst, TOY).unwrap();
    let out = dir.path().join("run");
    let rec = run_experiment(&config(InstanceSource::File(inst), Method::Epsilon, ModelFamily::Classical, RiskLevel::K(1), out.clone()))
        .unwrap();
    assert!(rec.n_ndp <= 2 && rec.n_ndp >= 1);
    assert_eq!(rec.status, "complete");
    assert_eq!(rec.instance, "toy");
    let csv = fs::read_to_string(out.join("record.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("instance,method,model,alpha,k,runtime_s,n_ndp,status"));
    assert!(lines.next().unwrap().starts_with("toy,e,ma,"));
    assert!(!out.join("cuts.log").exists());
}

#[test]
fn alpha_resolves_to_k_in_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_experiment(&config(
        InstanceSource::Generated { nodes: 12, scenarios: 10 },
        Method::Epsilon,
        ModelFamily::Subset,
        RiskLevel::Alpha(0.7),
        dir.path().join("run"),
    ))
    .unwrap();
    assert_eq!(rec.k, 3);
    assert!((rec.alpha - 0.7).abs() < 1e-12);
    let log = fs::read_to_string(dir.path().join("run/cuts.log")).unwrap();
    assert!(log.starts_with("cuts "));
}

#[test]
fn frozen_run_then_reevaluation() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), 21, 10);
    let out = dir.path().join("bar");
    let rec = run_experiment(&config(
        InstanceSource::File(inst.clone()),
        Method::Epsilon,
        ModelFamily::SubsetFrozen,
        RiskLevel::Alpha(0.7),
        out.clone(),
    ))
    .unwrap();
    let log = fs::read_to_string(out.join("cuts.log")).unwrap();
    assert!(log.contains("separator_calls_after_first_point 0"));
    let re_path = dir.path().join("re.json");
    let re = reevaluate(&out.join("frontier.json"), &InstanceSource::File(inst), 3, RiskLevel::Alpha(0.7), &re_path).unwrap();
    let orig = Frontier::from_json(&fs::read_to_string(out.join("frontier.json")).unwrap()).unwrap();
    assert_eq!(re.len(), rec.n_ndp);
    assert!(re.points().iter().all(|p| p.provenance == Provenance::ReEvaluated));
    assert!(orig.points().iter().all(|p| p.provenance != Provenance::ReEvaluated));
    assert_eq!(Frontier::from_json(&fs::read_to_string(re_path).unwrap()).unwrap(), re);
}

#[test]
fn records_are_reproducible_apart_from_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        run_experiment(&config(
            InstanceSource::Generated { nodes: 15, scenarios: 5 },
            Method::BalancedBox,
            ModelFamily::Subset,
            RiskLevel::K(2),
            out.clone(),
        ))
        .unwrap();
        let csv = fs::read_to_string(out.join("record.csv")).unwrap();
        let row: Vec<String> = csv.lines().nth(1).unwrap().split(',').map(String::from).collect();
        (fs::read(out.join("frontier.json")).unwrap(), row)
    };
    let (fa, ra) = run("a");
    let (fb, rb) = run("b");
    assert_eq!(fa, fb);
    // column 5 is runtime_s
    let strip = |r: &[String]| r.iter().enumerate().filter(|(i, _)| *i != 5).map(|(_, c)| c.clone()).collect::<Vec<_>>();
    assert_eq!(strip(&ra), strip(&rb));
}

#[test]
fn compare_against_self_and_union() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ma");
    run_experiment(&config(
        InstanceSource::Generated { nodes: 12, scenarios: 4 },
        Method::Epsilon,
        ModelFamily::Classical,
        RiskLevel::K(2),
        out.clone(),
    ))
    .unwrap();
    let f = Frontier::from_json(&fs::read_to_string(out.join("frontier.json")).unwrap()).unwrap();
    let rows = compare(&[("ma".into(), f.clone())], &f).unwrap();
    assert_eq!(rows[0].1.gh_percent, 0.0);
    assert_eq!(rows[0].1.i_eps, 1.0);
    let u = union(&[&f, &f]);
    assert_eq!(u, f);
    let empty = Frontier::from_points(vec![]);
    assert!(matches!(compare(&[("ma".into(), f)], &empty), Err(Error::UndefinedIndicator(_))));
}

#[test]
fn plot_data_labels_and_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let three = r#"[{"cost": 0, "risk": 9.0, "y": [0, 0], "provenance": "exact"},
                    {"cost": 5000, "risk": 4.0, "y": [1, 0], "provenance": "exact"},
                    {"cost": 10000, "risk": 1.0, "y": [1, 1], "provenance": "exact"}]"#;
    for d in ["a", "b"] {
        fs::create_dir_all(dir.path().join(d)).unwrap();
        fs::write(dir.path().join(d).join("frontier.json"), three).unwrap();
    }
    fs::write(dir.path().join("empty.json"), "[]").unwrap();

    let mut buf = Vec::new();
    emit_plot_data(&[dir.path().join("a/frontier.json")], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);

    let mut buf = Vec::new();
    emit_plot_data(&[dir.path().join("a/frontier.json"), dir.path().join("b/frontier.json")], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let labels: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels.len(), 2);

    let mut buf = Vec::new();
    emit_plot_data(&[dir.path().join("empty.json")], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "series,cost,risk\n");

    let mut buf = Vec::new();
    assert!(matches!(emit_plot_data(&[dir.path().join("missing.json")], &mut buf), Err(Error::Io(_))));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("toy.json");
    fs::write(&inst, TOY).unwrap();
    let inst = inst.to_str().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["run", "--instance", inst, "--method", "e", "--model", "ma", "--k", "1", "--out", out]), Some(0));
    assert_eq!(code(&["run", "--instance", inst, "--method", "bb", "--model", "mb-bar", "--k", "1", "--out", out]), Some(2));
    assert_eq!(code(&["run", "--instance", inst, "--method", "e", "--model", "ma", "--k", "1", "--alpha", "0.5", "--out", out]), Some(2));
    assert_eq!(code(&["run", "--instance", inst, "--method", "x", "--model", "ma", "--k", "1", "--out", out]), Some(2));
    assert_eq!(code(&["run", "--instance", inst, "--method", "e", "--model", "expected", "--k", "1", "--out", out]), Some(2));
    assert_eq!(code(&["run", "--instance", "/nonexistent.json", "--method", "e", "--model", "ma", "--k", "1", "--out", out]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["compare", &format!("{out}/frontier.json")]), Some(0));
    assert_eq!(code(&["plot-data", &format!("{out}/frontier.json")]), Some(0));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn cli_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_str().unwrap().to_string();
    let run = |args: &[&str]| {
        let o = bin().args(args).output().unwrap();
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    run(&["generate", "--nodes", "12", "--scenarios", "5", "--seed", "4", "--out", &d("inst.json")]);
    for (m, model) in [("e", "ma"), ("bb", "mb"), ("mat", "mb-bar")] {
        run(&["run", "--instance", &d("inst.json"), "--method", m, "--model", model, "--alpha", "0.6", "--tl", "600", "--out", &d(&format!("{m}-{model}"))]);
    }
    run(&["reevaluate", &d("mat-mb-bar/frontier.json"), "--instance", &d("inst.json"), "--alpha", "0.6", "--out", &d("re.json")]);
    let table = run(&["compare", &d("e-ma/frontier.json"), &d("bb-mb/frontier.json"), &d("re.json"), "--reference", &d("e-ma/frontier.json")]);
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("label,"));
    assert!(rows[1].starts_with("e-ma,"));
    let plot = run(&["plot-data", &d("e-ma/frontier.json"), &d("bb-mb/frontier.json")]);
    assert!(plot.lines().skip(1).any(|l| l.starts_with("bb-mb,")));
    // generated instances from flags carry the seed into the record
    run(&["run", "--nodes", "12", "--scenarios", "5", "--seed", "4", "--method", "e", "--model", "mb", "--k", "2", "--out", &d("gen")]);
    let rec = fs::read_to_string(d("gen/record.csv")).unwrap();
    assert!(rec.lines().nth(1).unwrap().starts_with("gen-12-5-s4,e,mb,"));
}
