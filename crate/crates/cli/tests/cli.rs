use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coverage_miqp::environment::ScenarioFile;
use coverage_miqp::model::parse_lp;
use coverage_miqp::planner::PlanFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coverage-miqp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tiny(dir: &Path) -> PathBuf {
    let p = dir.join("tiny.json");
    ScenarioFile::tiny().save(&p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bundled_scenarios_match_constructors() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    assert_eq!(
        ScenarioFile::load(&root.join("tiny.json")).unwrap(),
        ScenarioFile::tiny()
    );
    assert_eq!(
        ScenarioFile::load(&root.join("default.json")).unwrap(),
        ScenarioFile::defaults()
    );
}

#[test]
fn init_writes_defaults_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = run(&[
        "init",
        "--out",
        s(&out),
        "--set",
        "horizon=6",
        "--set",
        "grid.nx=2",
        "--seed",
        "9",
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    let f = ScenarioFile::load(&out).unwrap();
    assert_eq!(f.horizon, 6);
    assert_eq!(f.grid.nx, 2);
    assert_eq!(f.visibility.seed, 9);
    assert_eq!(f.weights, ScenarioFile::defaults().weights);
}

#[test]
fn unknown_override_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    assert_eq!(
        code(&run(&["init", "--out", s(&out), "--set", "horizonn=3"])),
        2
    );
    assert_eq!(
        code(&run(&["init", "--out", s(&out), "--set", "horizon"])),
        2
    );
    assert!(!out.exists());
}

#[test]
fn plan_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    let table = dir.path().join("table.json");
    let plan = dir.path().join("plan.json");

    let o = run(&["visibility", "--scenario", s(&sc), "--table", s(&table)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let o = run(&[
        "plan",
        "--scenario",
        s(&sc),
        "--table",
        s(&table),
        "--out",
        s(&plan),
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("optimal-over-grid"));
    let csv = std::fs::read_to_string(plan.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + ScenarioFile::tiny().horizon);

    let o = run(&[
        "check",
        "--scenario",
        s(&sc),
        "--table",
        s(&table),
        "--plan",
        s(&plan),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("fully_covered: true"));

    let o = run(&[
        "objectives",
        "--scenario",
        s(&sc),
        "--table",
        s(&table),
        "--plan",
        s(&plan),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let file = PlanFile::load(&plan).unwrap();
    assert_eq!(v["weighted"].as_f64(), file.objective);
}

#[test]
fn tampered_plan_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    let plan = dir.path().join("plan.json");
    assert_eq!(
        code(&run(&["plan", "--scenario", s(&sc), "--out", s(&plan)])),
        0
    );

    let mut file = PlanFile::load(&plan).unwrap();
    file.controls[0][0] += 0.5;
    file.save(&plan).unwrap();
    let o = run(&["check", "--scenario", s(&sc), "--plan", s(&plan)]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    assert!(stdout(&o).contains("dynamics residual"));
}

#[test]
fn plan_for_another_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    let plan = dir.path().join("plan.json");
    assert_eq!(
        code(&run(&["plan", "--scenario", s(&sc), "--out", s(&plan)])),
        0
    );
    let o = run(&[
        "check",
        "--scenario",
        s(&sc),
        "--plan",
        s(&plan),
        "--set",
        "weights.w1=3",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("different scenario"));
}

#[test]
fn infeasible_horizon_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    let plan = dir.path().join("plan.json");
    let o = run(&[
        "plan",
        "--scenario",
        s(&sc),
        "--set",
        "horizon=1",
        "--out",
        s(&plan),
    ]);
    assert_eq!(code(&o), 1, "{o:?}");
    assert!(stdout(&o).contains("infeasible"));
    let o = run(&[
        "check",
        "--scenario",
        s(&sc),
        "--set",
        "horizon=1",
        "--plan",
        s(&plan),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stale_table_cache_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    let table = dir.path().join("table.json");
    assert_eq!(
        code(&run(&[
            "visibility",
            "--scenario",
            s(&sc),
            "--table",
            s(&table)
        ])),
        0
    );
    let plan = dir.path().join("plan.json");
    let o = run(&[
        "plan",
        "--scenario",
        s(&sc),
        "--table",
        s(&table),
        "--seed",
        "4",
        "--out",
        s(&plan),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn export_lp_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    for extra in [None, Some("--j3-linear")] {
        let lp = dir.path().join("m.lp");
        let mut args = vec!["export-lp", "--scenario", s(&sc), "--out", s(&lp)];
        args.extend(extra);
        assert_eq!(code(&run(&args)), 0);
        let m = parse_lp(&std::fs::read_to_string(&lp).unwrap()).unwrap();
        assert!(m.rows.iter().any(|r| r.name.starts_with("p2_12_cov")));
        assert_eq!(
            m.rows.iter().any(|r| r.name.starts_with("j3_")),
            extra.is_some()
        );
    }
}

#[test]
fn thread_cap_gives_the_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let sc = tiny(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        code(&run(&["visibility", "--scenario", s(&sc), "--out", s(&a)])),
        0
    );
    let o = bin()
        .args(["visibility", "--scenario", s(&sc), "--out", s(&b)])
        .env("COVERAGE_MIQP_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
