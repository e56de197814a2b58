//! End-to-end planning, independent plan validation and objective reporting.
//!
//! Validation replays the dynamics and re-tests every pose with a direct ray
//! cast, so a plan is only reported fully covered when each point is seen
//! without relying on the learned table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::kinematics::{check_bounds, rollout, AgentState, BoundViolation, ControlInput};
use crate::model::Weights;
use crate::solver::{solve, PlanResult, PlanStatus, SolverOptions};
use crate::visibility::{learn_table, learn_table_with_threads, visible_points, VisibilityTable};

/// Residual above which a replayed trajectory counts as inconsistent.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Reading of the `|u_t|` term of the control-effort objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum J2Norm {
    /// `|fx| + |fy|`, as encoded in the program.
    #[default]
    L1,
    /// `sqrt(fx² + fy²)`.
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub weighted: f64,
}

/// Objective terms of a plan from its controls, schedule and first coverage
/// steps.
pub fn evaluate_direct(
    w: &Weights,
    horizon: usize,
    controls: &[ControlInput],
    schedule: &[usize],
    coverage_times: &BTreeMap<usize, usize>,
    norm: J2Norm,
) -> Objectives {
    let tf = horizon as f64;
    let j1: f64 = coverage_times.values().map(|&t| t as f64 / tf).sum();
    let mut j2 = 0.0;
    for pair in controls.windows(2) {
        j2 += (pair[1].fx - pair[0].fx).powi(2) + (pair[1].fy - pair[0].fy).powi(2);
    }
    for u in controls {
        j2 += match norm {
            J2Norm::L1 => u.fx.abs() + u.fy.abs(),
            J2Norm::Euclidean => u.fx.hypot(u.fy),
        };
    }
    let switches = schedule.windows(2).filter(|p| p[0] != p[1]).count();
    let j3 = 2.0 * switches as f64;
    Objectives {
        j1,
        j2,
        j3,
        weighted: w.w1 * j1 + w.w2 * j2 + w.w3 * j3,
    }
}

/// Where [`plan`] gets its visibility table.
#[derive(Clone, Copy, Debug, Default)]
pub enum TableSource<'a> {
    /// Learn on the global thread pool.
    #[default]
    Learn,
    /// Learn on at most this many threads.
    LearnWithThreads(usize),
    /// Load from the file if it exists (its meta must match), otherwise learn
    /// and save it there.
    Cache(&'a Path, Option<usize>),
}

/// Loads or learns the table for `s`.
pub fn table_for(s: &Scenario, source: TableSource<'_>) -> Result<VisibilityTable> {
    match source {
        TableSource::Learn => learn_table(s, s.configs()),
        TableSource::LearnWithThreads(n) => learn_table_with_threads(s, s.configs(), n),
        TableSource::Cache(path, threads) => {
            if path.exists() {
                let vt = VisibilityTable::load(path)?;
                vt.ensure_matches(s, s.configs())?;
                Ok(vt)
            } else {
                let vt = match threads {
                    Some(n) => learn_table_with_threads(s, s.configs(), n)?,
                    None => learn_table(s, s.configs())?,
                };
                vt.save(path)?;
                Ok(vt)
            }
        }
    }
}

/// Learns the table and searches for a plan with the scenario's solver
/// settings.
pub fn plan(s: &Scenario) -> Result<(PlanResult, VisibilityTable)> {
    plan_with(s, TableSource::Learn, &SolverOptions::from_scenario(s))
}

pub fn plan_with(
    s: &Scenario,
    source: TableSource<'_>,
    opts: &SolverOptions,
) -> Result<(PlanResult, VisibilityTable)> {
    let vt = table_for(s, source)?;
    let result = solve(s, &vt, opts)?;
    Ok((result, vt))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCoverage {
    /// First step covered by either test.
    pub covered_at: Option<usize>,
    /// First step covered according to the table.
    pub table_first: Option<usize>,
    /// First step covered by the direct ray cast.
    pub raycast_first: Option<usize>,
    pub table_visible: bool,
    pub raycast_visible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub t: usize,
    pub point: usize,
    pub table: bool,
    pub raycast: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Largest per-step distance between the stored and replayed states.
    pub dynamics_residual: f64,
    pub bound_violations: Vec<BoundViolation>,
    /// Steps at which the agent is strictly inside an obstacle.
    pub obstacle_violations: Vec<usize>,
    pub coverage: BTreeMap<usize, PointCoverage>,
    pub disagreements: Vec<Disagreement>,
    pub fully_covered: bool,
}

impl ValidationReport {
    /// No residual, bound or obstacle problem (coverage aside).
    pub fn is_consistent(&self) -> bool {
        self.dynamics_residual <= RESIDUAL_TOL
            && self.bound_violations.is_empty()
            && self.obstacle_violations.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.is_consistent() && self.fully_covered
    }
}

/// Replays and re-checks a plan.
pub fn validate(s: &Scenario, plan: &PlanResult, vt: &VisibilityTable) -> Result<ValidationReport> {
    let t_max = s.horizon;
    if plan.controls.len() != t_max
        || plan.schedule.len() != t_max
        || plan.trajectory.len() != t_max
    {
        return Err(Error::DimensionMismatch(format!(
            "horizon {t_max} but plan has {} controls, {} schedule entries, {} states",
            plan.controls.len(),
            plan.schedule.len(),
            plan.trajectory.len()
        )));
    }
    let n_cfg = s.configs().len();
    if let Some(&m) = plan.schedule.iter().find(|&&m| m >= n_cfg) {
        return Err(Error::OutOfRange {
            what: "configuration",
            index: m,
            len: n_cfg,
        });
    }
    if vt.n_cells() != s.grid.len() || vt.n_points() != s.n_points() {
        return Err(Error::DimensionMismatch(
            "table does not match the scenario".into(),
        ));
    }
    let replay = rollout(&s.x0, &plan.controls, &s.kinematics);
    let dynamics_residual = replay
        .iter()
        .zip(&plan.trajectory)
        .map(|(a, b)| {
            let (a, b) = (a.to_array(), b.to_array());
            (0..4).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let bound_violations = check_bounds(&plan.trajectory, &plan.controls, &s.kinematics)?;
    let obstacle_violations = plan
        .trajectory
        .iter()
        .enumerate()
        .filter(|(_, st)| s.collides(st.pos))
        .map(|(i, _)| i + 1)
        .collect();

    let n_pts = s.n_points();
    let mut cov = vec![PointCoverage::default(); n_pts];
    let mut disagreements = Vec::new();
    for (i, (st, &m)) in plan.trajectory.iter().zip(&plan.schedule).enumerate() {
        let t = i + 1;
        let cfg = &s.configs()[m];
        let row = vt.row_at(&s.grid, st.pos);
        let direct = visible_points(st.pos, cfg, s);
        for (p, c) in cov.iter_mut().enumerate() {
            let by_table = row[p] && cfg.covers(st.pos, s.boundary.points[p]);
            let by_ray = direct.binary_search(&p).is_ok();
            if by_table && c.table_first.is_none() {
                c.table_first = Some(t);
            }
            if by_ray && c.raycast_first.is_none() {
                c.raycast_first = Some(t);
            }
            if by_table != by_ray {
                disagreements.push(Disagreement {
                    t,
                    point: p,
                    table: by_table,
                    raycast: by_ray,
                });
            }
        }
    }
    for c in &mut cov {
        c.table_visible = c.table_first.is_some();
        c.raycast_visible = c.raycast_first.is_some();
        c.covered_at = match (c.table_first, c.raycast_first) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    let fully_covered = cov
        .iter()
        .all(|c| c.covered_at.is_some() && c.raycast_visible);
    Ok(ValidationReport {
        dynamics_residual,
        bound_violations,
        obstacle_violations,
        coverage: cov.into_iter().enumerate().collect(),
        disagreements,
        fully_covered,
    })
}

/// Table-based first coverage step of each covered point.
pub fn table_coverage_times(
    s: &Scenario,
    vt: &VisibilityTable,
    trajectory: &[AgentState],
    schedule: &[usize],
) -> BTreeMap<usize, usize> {
    let mut times = BTreeMap::new();
    for (i, (st, &m)) in trajectory.iter().zip(schedule).enumerate() {
        let cfg = &s.configs()[m];
        let row = vt.row_at(&s.grid, st.pos);
        for (p, &seen) in row.iter().enumerate() {
            if seen && cfg.covers(st.pos, s.boundary.points[p]) {
                times.entry(p).or_insert(i + 1);
            }
        }
    }
    times
}

/// Objective terms of a plan, recomputing coverage from the table.
pub fn objectives(plan: &PlanResult, s: &Scenario, vt: &VisibilityTable) -> Objectives {
    objectives_with(plan, s, vt, J2Norm::L1)
}

pub fn objectives_with(
    plan: &PlanResult,
    s: &Scenario,
    vt: &VisibilityTable,
    norm: J2Norm,
) -> Objectives {
    let traj = rollout(&s.x0, &plan.controls, &s.kinematics);
    let times = table_coverage_times(s, vt, &traj, &plan.schedule);
    evaluate_direct(
        &s.weights,
        s.horizon,
        &plan.controls,
        &plan.schedule,
        &times,
        norm,
    )
}

/// On-disk plan document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub scenario_hash: String,
    pub status: PlanStatus,
    /// Absent when no plan was found.
    pub objective: Option<f64>,
    pub controls: Vec<[f64; 2]>,
    pub schedule: Vec<usize>,
    pub trajectory: Vec<[f64; 4]>,
    pub coverage_times: BTreeMap<usize, usize>,
}

impl PlanFile {
    pub fn from_result(s: &Scenario, r: &PlanResult) -> Self {
        PlanFile {
            scenario_hash: s.hash(),
            status: r.status,
            objective: r.objective.is_finite().then_some(r.objective),
            controls: r.controls.iter().map(|u| [u.fx, u.fy]).collect(),
            schedule: r.schedule.clone(),
            trajectory: r.trajectory.iter().map(|x| x.to_array()).collect(),
            coverage_times: r.coverage_times.clone(),
        }
    }

    pub fn to_result(&self) -> PlanResult {
        PlanResult {
            controls: self
                .controls
                .iter()
                .map(|u| ControlInput::new(u[0], u[1]))
                .collect(),
            schedule: self.schedule.clone(),
            trajectory: self
                .trajectory
                .iter()
                .map(|&x| AgentState::from_array(x))
                .collect(),
            objective: self.objective.unwrap_or(f64::INFINITY),
            coverage_times: self.coverage_times.clone(),
            status: self.status,
            nodes: 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Per-step plot data: `t,px,py,vx,vy,fx,fy,m,points_covered_cum`, where
/// the force is the one applied during the step ending at `t`.
pub fn plan_csv(r: &PlanResult) -> String {
    let mut out = String::from("t,px,py,vx,vy,fx,fy,m,points_covered_cum\n");
    for (i, ((x, u), m)) in r
        .trajectory
        .iter()
        .zip(&r.controls)
        .zip(&r.schedule)
        .enumerate()
    {
        let t = i + 1;
        let cum = r.coverage_times.values().filter(|&&c| c <= t).count();
        let _ = writeln!(
            out,
            "{t},{},{},{},{},{},{},{m},{cum}",
            x.pos.x, x.pos.y, x.vel.x, x.vel.y, u.fx, u.fy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::ScenarioFile;

    fn w() -> Weights {
        Weights::new(10.0, 0.5, 0.1).unwrap()
    }

    #[test]
    fn direct_examples() {
        let times = BTreeMap::from([(0, 2)]);
        let o = evaluate_direct(&w(), 10, &[], &[], &times, J2Norm::L1);
        assert_eq!(o.j1, 0.2);
        let u = vec![ControlInput::new(1.0, -1.0); 4];
        let o = evaluate_direct(&w(), 4, &u, &[0, 0, 0, 0], &BTreeMap::new(), J2Norm::L1);
        assert_eq!((o.j2, o.j3), (8.0, 0.0));
        let o = evaluate_direct(&w(), 4, &u, &[0, 1, 1, 0], &times, J2Norm::L1);
        assert_eq!(o.j3, 4.0);
        assert!((o.weighted - (10.0 * 0.5 + 0.5 * 8.0 + 0.1 * 4.0)).abs() < 1e-12);
        let e = evaluate_direct(
            &w(),
            1,
            &[ControlInput::new(3.0, 4.0)],
            &[0],
            &BTreeMap::new(),
            J2Norm::Euclidean,
        );
        assert_eq!(e.j2, 5.0);
    }

    #[test]
    fn x0_inside_hull_is_an_error() {
        let mut f = ScenarioFile::tiny();
        f.x0.pos = [12.0, 7.0];
        assert!(Scenario::from_file(f).is_err());
    }

    #[test]
    fn plan_file_round_trip() {
        let s = Scenario::from_file(ScenarioFile::tiny()).unwrap();
        let r = PlanResult {
            controls: vec![ControlInput::new(0.1, 0.2); 4],
            schedule: vec![0, 1, 1, 0],
            trajectory: rollout(&s.x0, &[ControlInput::new(0.1, 0.2); 4], &s.kinematics),
            objective: 1.25,
            coverage_times: BTreeMap::from([(0, 1), (1, 3), (2, 4)]),
            status: PlanStatus::OptimalOverGrid,
            nodes: 0,
        };
        let f = PlanFile::from_result(&s, &r);
        let back: PlanFile = serde_json::from_str(&f.to_json()).unwrap();
        assert_eq!(back.to_result(), r);
        let csv = plan_csv(&r);
        assert!(csv.starts_with("t,px,py,vx,vy,fx,fy,m,points_covered_cum\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(3).unwrap().ends_with(",1,2"));
    }
}
