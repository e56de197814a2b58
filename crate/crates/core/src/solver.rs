//! Depth-first branch-and-bound over a discretized control set and the
//! camera selector, plus an exhaustive enumerator used as a test oracle.
//!
//! Each step picks a force from the cross product of the per-axis control
//! grid and a camera configuration. A point counts as covered at the first
//! step where it lies in the selected footprint and the visibility table
//! marks it for a cell containing the agent. Complete plans are scored by
//! [`crate::planner::evaluate_direct`], shared with the oracle so both
//! produce bit-identical objective values.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::kinematics::{rollout, state_within_bounds, step, AgentState, ControlInput};
use crate::planner::{evaluate_direct, J2Norm};
use crate::visibility::VisibilityTable;

/// Largest leaf count [`enumerate_oracle`] accepts.
pub const ORACLE_LEAF_LIMIT: f64 = 1e7;

/// Relative deflation of lower bounds before comparing with the incumbent.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pruning {
    /// Partial objective plus admissible remainder against the incumbent.
    pub objective: bool,
    /// Uncovered points versus what the remaining steps can see.
    pub coverage: bool,
    /// Use the per-step maximum of table rows instead of all points.
    pub tight_coverage: bool,
    /// Earliest step at which a table-visible cell within camera reach of
    /// each uncovered point can be entered.
    pub reachability: bool,
}

impl Pruning {
    pub const ALL: Pruning = Pruning {
        objective: true,
        coverage: true,
        tight_coverage: true,
        reachability: true,
    };
    pub const NONE: Pruning = Pruning {
        objective: false,
        coverage: false,
        tight_coverage: false,
        reachability: false,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Per-axis force values, newtons.
    pub control_grid: Vec<f64>,
    pub time_limit: Duration,
    /// Child evaluations before giving up.
    pub max_nodes: u64,
    /// Prune nodes whose bound is within this much of the incumbent.
    pub incumbent_tol: f64,
    pub pruning: Pruning,
}

impl SolverOptions {
    pub fn from_scenario(s: &Scenario) -> Self {
        SolverOptions {
            control_grid: s.solver.control_grid.clone(),
            time_limit: Duration::from_secs_f64(s.solver.time_limit_s),
            max_nodes: s.solver.max_nodes,
            incumbent_tol: 0.0,
            pruning: Pruning::ALL,
        }
    }

    pub fn validate(&self, s: &Scenario) -> Result<()> {
        if self.control_grid.is_empty() {
            return Err(Error::invalid("control grid must be nonempty"));
        }
        let fmax = s.kinematics.force_max;
        if self.control_grid.iter().any(|v| !(v.abs() <= fmax)) {
            return Err(Error::invalid(format!(
                "control grid values must lie within ±{fmax}"
            )));
        }
        if self.time_limit.is_zero() {
            return Err(Error::invalid("time limit must be positive"));
        }
        if !(self.incumbent_tol >= 0.0) {
            return Err(Error::invalid("incumbent tolerance must be nonnegative"));
        }
        Ok(())
    }

    /// Grid values ascending without duplicates; children are generated in
    /// this order.
    fn sorted_grid(&self) -> Vec<f64> {
        let mut g = self.control_grid.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    /// Search exhausted: optimal among grid controls.
    OptimalOverGrid,
    /// A limit was hit after a covering plan was found.
    Feasible,
    /// Search exhausted without a covering plan.
    Infeasible,
    /// A limit was hit before any covering plan was found.
    Limit,
}

impl PlanStatus {
    pub fn has_plan(self) -> bool {
        matches!(self, PlanStatus::OptimalOverGrid | PlanStatus::Feasible)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub controls: Vec<ControlInput>,
    /// Configuration index per step.
    pub schedule: Vec<usize>,
    /// States `x_1..x_T`.
    pub trajectory: Vec<AgentState>,
    /// Weighted objective; infinite without a plan.
    pub objective: f64,
    /// Point index → first covering step.
    pub coverage_times: BTreeMap<usize, usize>,
    pub status: PlanStatus,
    /// Children evaluated.
    pub nodes: u64,
}

impl PlanResult {
    fn empty(status: PlanStatus, nodes: u64) -> Self {
        PlanResult {
            controls: Vec::new(),
            schedule: Vec::new(),
            trajectory: Vec::new(),
            objective: f64::INFINITY,
            coverage_times: BTreeMap::new(),
            status,
            nodes,
        }
    }

    fn complete(s: &Scenario, leaf: Leaf, status: PlanStatus, nodes: u64) -> Self {
        let trajectory = rollout(&s.x0, &leaf.controls, &s.kinematics);
        PlanResult {
            controls: leaf.controls,
            schedule: leaf.schedule,
            trajectory,
            objective: leaf.objective,
            coverage_times: leaf.coverage_times,
            status,
            nodes,
        }
    }
}

struct Leaf {
    controls: Vec<ControlInput>,
    schedule: Vec<usize>,
    coverage_times: BTreeMap<usize, usize>,
    objective: f64,
}

fn leaf_objective(
    s: &Scenario,
    controls: &[ControlInput],
    schedule: &[usize],
    times: &BTreeMap<usize, usize>,
) -> f64 {
    evaluate_direct(&s.weights, s.horizon, controls, schedule, times, J2Norm::L1).weighted
}

fn check_inputs(s: &Scenario, vt: &VisibilityTable, opts: &SolverOptions) -> Result<()> {
    opts.validate(s)?;
    if vt.n_cells() != s.grid.len() || vt.n_points() != s.n_points() {
        return Err(Error::DimensionMismatch(format!(
            "table is {} x {}, scenario has {} cells and {} points",
            vt.n_cells(),
            vt.n_points(),
            s.grid.len(),
            s.n_points()
        )));
    }
    Ok(())
}

/// Table-based coverage mask at `pos` for every configuration.
fn coverage_masks(s: &Scenario, vt: &VisibilityTable, pos: Point2) -> Vec<Vec<bool>> {
    let row = vt.row_at(&s.grid, pos);
    s.configs()
        .iter()
        .map(|cfg| {
            row.iter()
                .zip(&s.boundary.points)
                .map(|(&r, &pt)| r && cfg.covers(pos, pt))
                .collect()
        })
        .collect()
}

struct Search<'a> {
    s: &'a Scenario,
    vt: &'a VisibilityTable,
    opts: &'a SolverOptions,
    grid: Vec<f64>,
    /// Rectangles of the cells whose table row contains each point.
    visible_cells: Vec<Vec<Rect>>,
    max_per_step: usize,
    max_reach: f64,
    started: Instant,
    nodes: u64,
    limit_hit: bool,
    path_u: Vec<ControlInput>,
    path_m: Vec<usize>,
    best: Option<Leaf>,
}

impl<'a> Search<'a> {
    fn new(s: &'a Scenario, vt: &'a VisibilityTable, opts: &'a SolverOptions) -> Self {
        let n_pts = s.n_points();
        let visible_cells = (0..n_pts)
            .map(|p| {
                (0..s.grid.len())
                    .filter(|&c| vt.get(c, p))
                    .map(|c| s.grid.cells[c].rect)
                    .collect()
            })
            .collect();
        let max_per_step = if opts.pruning.tight_coverage {
            neighbourhood_max(s, vt)
        } else {
            n_pts
        };
        let max_reach = s.configs().iter().map(|c| c.reach()).fold(0.0, f64::max);
        Search {
            s,
            vt,
            opts,
            grid: opts.sorted_grid(),
            visible_cells,
            max_per_step,
            max_reach,
            started: Instant::now(),
            nodes: 0,
            limit_hit: false,
            path_u: Vec::with_capacity(s.horizon),
            path_m: Vec::with_capacity(s.horizon),
            best: None,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.limit_hit {
            return true;
        }
        if self.nodes >= self.opts.max_nodes
            || (self.nodes.is_multiple_of(1024) && self.started.elapsed() >= self.opts.time_limit)
        {
            self.limit_hit = true;
        }
        self.limit_hit
    }

    /// Earliest number of further steps after which `p` could be table-covered
    /// from `state`, if any within `remaining`.
    fn earliest_cover(&self, state: &AgentState, p: usize, remaining: usize) -> Option<usize> {
        let k = &self.s.kinematics;
        let ws = k.workspace;
        let pt = self.s.boundary.points[p];
        let centre = state.pos + state.vel * k.dt;
        let eps = 1e-9;
        (1..=remaining).find(|&j| {
            let hw = k.dt * (j - 1) as f64 * k.speed_max + eps;
            let bx = (
                (centre.x - hw).max(ws.xmin),
                (centre.y - hw).max(ws.ymin),
                (centre.x + hw).min(ws.xmax),
                (centre.y + hw).min(ws.ymax),
            );
            if bx.0 > bx.2 + eps || bx.1 > bx.3 + eps {
                return false;
            }
            self.visible_cells[p].iter().any(|r| {
                let lo_x = bx.0.max(r.xmin);
                let lo_y = bx.1.max(r.ymin);
                let hi_x = bx.2.min(r.xmax);
                let hi_y = bx.3.min(r.ymax);
                if lo_x > hi_x + eps || lo_y > hi_y + eps {
                    return false;
                }
                let dx = (lo_x - pt.x).max(pt.x - hi_x).max(0.0);
                let dy = (lo_y - pt.y).max(pt.y - hi_y).max(0.0);
                (dx * dx + dy * dy).sqrt() <= self.max_reach + eps
            })
        })
    }

    fn dfs(&mut self, t: usize, state: AgentState, cover: &[usize], j1: f64, j2: f64, j3: f64) {
        let s = self.s;
        let t_max = s.horizon;
        let tf = t_max as f64;
        let w = s.weights;
        let n_cfg = s.configs().len();
        let grid = self.grid.clone();
        for &ux in &grid {
            for &uy in &grid {
                if self.out_of_budget() {
                    return;
                }
                self.nodes += 1;
                let u = ControlInput::new(ux, uy);
                let next = step(&state, &u, &s.kinematics);
                if !state_within_bounds(&next, &s.kinematics) || s.collides(next.pos) {
                    continue;
                }
                let masks = coverage_masks(s, self.vt, next.pos);
                let mut dj2 = ux.abs() + uy.abs();
                if let Some(prev) = self.path_u.last() {
                    dj2 += (ux - prev.fx).powi(2) + (uy - prev.fy).powi(2);
                }
                for (m, mask) in masks.iter().enumerate().take(n_cfg) {
                    if m > 0 {
                        if self.out_of_budget() {
                            return;
                        }
                        self.nodes += 1;
                    }
                    let mut cover2 = cover.to_vec();
                    let mut dj1 = 0.0;
                    for p in 0..cover2.len() {
                        if cover2[p] == 0 && mask[p] {
                            cover2[p] = t;
                            dj1 += t as f64 / tf;
                        }
                    }
                    let dj3 = match self.path_m.last() {
                        Some(&pm) if pm != m => 2.0,
                        _ => 0.0,
                    };
                    let (nj1, nj2, nj3) = (j1 + dj1, j2 + dj2, j3 + dj3);
                    let uncovered: Vec<usize> =
                        (0..cover2.len()).filter(|&p| cover2[p] == 0).collect();

                    self.path_u.push(u);
                    self.path_m.push(m);
                    if t == t_max {
                        if uncovered.is_empty() {
                            self.offer_leaf(&cover2);
                        }
                    } else if self.admissible(t, &next, &uncovered, nj1, nj2, nj3, w) {
                        self.dfs(t + 1, next, &cover2, nj1, nj2, nj3);
                    }
                    self.path_u.pop();
                    self.path_m.pop();
                    if self.limit_hit {
                        return;
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn admissible(
        &self,
        t: usize,
        state: &AgentState,
        uncovered: &[usize],
        j1: f64,
        j2: f64,
        j3: f64,
        w: crate::model::Weights,
    ) -> bool {
        let pr = self.opts.pruning;
        let remaining = self.s.horizon - t;
        let tf = self.s.horizon as f64;
        if pr.coverage && uncovered.len() > remaining * self.max_per_step {
            return false;
        }
        // Every uncovered point is credited at some later step.
        let mut j1_rest: f64 = uncovered.iter().map(|_| (t + 1) as f64 / tf).sum();
        if pr.reachability {
            let mut rest = 0.0;
            for &p in uncovered {
                match self.earliest_cover(state, p, remaining) {
                    Some(j) => rest += (t + j) as f64 / tf,
                    None => return false,
                }
            }
            j1_rest = rest;
        }
        if pr.objective {
            if let Some(best) = &self.best {
                let lb = w.w1 * (j1 + j1_rest) + w.w2 * j2 + w.w3 * j3;
                let lb = lb * (1.0 - BOUND_SLACK) - BOUND_SLACK;
                if lb >= best.objective - self.opts.incumbent_tol {
                    return false;
                }
            }
        }
        true
    }

    fn offer_leaf(&mut self, cover: &[usize]) {
        let times: BTreeMap<usize, usize> = cover.iter().copied().enumerate().collect();
        let obj = leaf_objective(self.s, &self.path_u, &self.path_m, &times);
        if self.best.as_ref().is_none_or(|b| obj < b.objective) {
            self.best = Some(Leaf {
                controls: self.path_u.clone(),
                schedule: self.path_m.clone(),
                coverage_times: times,
                objective: obj,
            });
        }
    }
}

/// Upper bound on the points a single position can table-cover: the union of
/// table rows over each 3 × 3 block of cells (a position touches at most a
/// 2 × 2 block).
fn neighbourhood_max(s: &Scenario, vt: &VisibilityTable) -> usize {
    let (nx, ny) = (s.grid.nx, s.grid.ny);
    let mut best = 0;
    for iy in 0..ny {
        for ix in 0..nx {
            let mut row = vec![false; s.n_points()];
            for jy in iy.saturating_sub(1)..(iy + 2).min(ny) {
                for jx in ix.saturating_sub(1)..(ix + 2).min(nx) {
                    for (o, &b) in row.iter_mut().zip(vt.row(jy * nx + jx)) {
                        *o |= b;
                    }
                }
            }
            best = best.max(row.iter().filter(|&&b| b).count());
        }
    }
    best
}

/// Branch-and-bound search for the cheapest covering plan over the grid.
pub fn solve(s: &Scenario, vt: &VisibilityTable, opts: &SolverOptions) -> Result<PlanResult> {
    check_inputs(s, vt, opts)?;
    let mut search = Search::new(s, vt, opts);
    if search.visible_cells.iter().any(|c| c.is_empty()) {
        // Some point is in no cell's table row: nothing can cover it.
        return Ok(PlanResult::empty(PlanStatus::Infeasible, 0));
    }
    let cover = vec![0usize; s.n_points()];
    search.dfs(1, s.x0, &cover, 0.0, 0.0, 0.0);
    let nodes = search.nodes;
    let status = match (search.limit_hit, search.best.is_some()) {
        (false, true) => PlanStatus::OptimalOverGrid,
        (false, false) => PlanStatus::Infeasible,
        (true, true) => PlanStatus::Feasible,
        (true, false) => PlanStatus::Limit,
    };
    Ok(match search.best {
        Some(leaf) => PlanResult::complete(s, leaf, status, nodes),
        None => PlanResult::empty(status, nodes),
    })
}

/// Number of leaves [`enumerate_oracle`] would visit.
pub fn oracle_leaves(s: &Scenario, opts: &SolverOptions) -> f64 {
    let g = opts.sorted_grid().len() as f64;
    (g * g * s.configs().len() as f64).powi(s.horizon as i32)
}

/// Scores every control/selector sequence; no pruning.
pub fn enumerate_oracle(
    s: &Scenario,
    vt: &VisibilityTable,
    opts: &SolverOptions,
) -> Result<PlanResult> {
    check_inputs(s, vt, opts)?;
    let leaves = oracle_leaves(s, opts);
    if leaves > ORACLE_LEAF_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            leaves,
            limit: ORACLE_LEAF_LIMIT,
        });
    }
    let grid = opts.sorted_grid();
    let g = grid.len();
    let n_cfg = s.configs().len();
    let base = g * g * n_cfg;
    let t_max = s.horizon;
    let n_pts = s.n_points();
    let mut digits = vec![0usize; t_max];
    let mut best: Option<Leaf> = None;
    let mut visited = 0u64;
    let mut controls = vec![ControlInput::ZERO; t_max];
    let mut schedule = vec![0usize; t_max];
    loop {
        visited += 1;
        for (t, &d) in digits.iter().enumerate() {
            let (ui, m) = (d / n_cfg, d % n_cfg);
            controls[t] = ControlInput::new(grid[ui / g], grid[ui % g]);
            schedule[t] = m;
        }
        if let Some(times) = simulate_coverage(s, vt, &controls, &schedule, n_pts) {
            let obj = leaf_objective(s, &controls, &schedule, &times);
            if best.as_ref().is_none_or(|b| obj < b.objective) {
                best = Some(Leaf {
                    controls: controls.clone(),
                    schedule: schedule.clone(),
                    coverage_times: times,
                    objective: obj,
                });
            }
        }
        // Odometer with the first step most significant.
        let mut k = t_max;
        loop {
            if k == 0 {
                return Ok(match best {
                    Some(leaf) => {
                        PlanResult::complete(s, leaf, PlanStatus::OptimalOverGrid, visited)
                    }
                    None => PlanResult::empty(PlanStatus::Infeasible, visited),
                });
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < base {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// First table-coverage step of every point, or `None` when the sequence
/// leaves the bounds, enters an obstacle or misses a point.
pub fn simulate_coverage(
    s: &Scenario,
    vt: &VisibilityTable,
    controls: &[ControlInput],
    schedule: &[usize],
    n_pts: usize,
) -> Option<BTreeMap<usize, usize>> {
    let mut cover = vec![0usize; n_pts];
    let mut state = s.x0;
    for (i, (u, &m)) in controls.iter().zip(schedule).enumerate() {
        if !(u.fx.abs() <= s.kinematics.force_max && u.fy.abs() <= s.kinematics.force_max) {
            return None;
        }
        state = step(&state, u, &s.kinematics);
        if !state_within_bounds(&state, &s.kinematics) || s.collides(state.pos) {
            return None;
        }
        let row = vt.row_at(&s.grid, state.pos);
        let cfg = &s.configs()[m];
        for p in 0..n_pts {
            if cover[p] == 0 && row[p] && cfg.covers(state.pos, s.boundary.points[p]) {
                cover[p] = i + 1;
            }
        }
    }
    if cover.contains(&0) {
        return None;
    }
    Some(cover.into_iter().enumerate().collect())
}
