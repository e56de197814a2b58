use coverage_miqp::environment::{Scenario, ScenarioFile};
use coverage_miqp::model::{assignment_from_plan, build, check, CHECK_TOL};
use coverage_miqp::planner::{objectives, plan_with, table_for, validate, PlanFile, TableSource};
use coverage_miqp::solver::{PlanStatus, SolverOptions};

#[test]
fn tiny_plan_survives_files_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::from_file(ScenarioFile::tiny()).unwrap();
    let cache = dir.path().join("table.json");
    let (r, vt) = plan_with(
        &s,
        TableSource::Cache(&cache, None),
        &SolverOptions::from_scenario(&s),
    )
    .unwrap();
    assert_eq!(r.status, PlanStatus::OptimalOverGrid);
    assert!(cache.exists());
    assert_eq!(table_for(&s, TableSource::Cache(&cache, None)).unwrap(), vt);

    let path = dir.path().join("plan.json");
    PlanFile::from_result(&s, &r).save(&path).unwrap();
    let back = PlanFile::load(&path).unwrap();
    assert_eq!(back.scenario_hash, s.hash());
    let r2 = back.to_result();
    assert_eq!(r2.controls, r.controls);
    assert_eq!(r2.schedule, r.schedule);
    assert_eq!(r2.coverage_times, r.coverage_times);

    let rep = validate(&s, &r2, &vt).unwrap();
    assert!(rep.is_clean());
    assert_eq!(objectives(&r2, &s, &vt).weighted, r.objective);

    let m = build(&s, &vt).unwrap();
    let asg = assignment_from_plan(&s, &vt, &r2.controls, &r2.schedule).unwrap();
    assert!(check(&m, &asg, CHECK_TOL).is_empty());
}

#[test]
fn default_scenario_builds_a_model() {
    let s = Scenario::from_file(ScenarioFile::defaults()).unwrap();
    assert_eq!(s.n_points(), 11);
    assert_eq!(s.configs().len(), 8);
    assert_eq!(s.grid.len(), 16);
    let vt = table_for(&s, TableSource::Learn).unwrap();
    let m = build(&s, &vt).unwrap();
    assert!(!m.vars.is_empty());
    // The still plan breaks only the coverage rows.
    let still = vec![coverage_miqp::kinematics::ControlInput::ZERO; s.horizon];
    let asg = assignment_from_plan(&s, &vt, &still, &vec![0; s.horizon]).unwrap();
    let v = check(&m, &asg, CHECK_TOL);
    assert!(
        v.iter().all(|x| x.row.starts_with("p2_12_")),
        "{:?}",
        v.first()
    );
}
