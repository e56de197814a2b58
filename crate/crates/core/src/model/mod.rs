//! Mixed-integer quadratic program for coverage planning.
//!
//! [`build`] emits the full program for a scenario and a learned visibility
//! table: unrolled dynamics, big-M footprint and cell-membership rows, the
//! one-hot camera selector, the visibility conjunction, coverage rows and
//! obstacle avoidance. [`check`] evaluates a total assignment against every
//! row and bound, and [`assignment_from_plan`] turns a control/selector
//! sequence into such an assignment.

mod derive;
mod lp;
mod objective;
mod vars;

pub use derive::{assignment_from_plan, derive_assignment, Activation};
pub use lp::{export_lp, parse_lp, write_lp, LpModel};
pub use objective::{objective_j1, objective_j2, objective_j3, objective_j3_linear};
pub use vars::{Block, VarKind, VariableSpace};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::kinematics::UnrolledDynamics;
use crate::visibility::VisibilityTable;

/// Default feasibility tolerance of [`check`].
pub const CHECK_TOL: f64 = 1e-6;

/// Objective weights `w1 J1 + w2 J2 + w3 J3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Weights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        if ![w1, w2, w3].iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        Ok(Self { w1, w2, w3 })
    }
}

/// Constraint family a row belongs to; the row name starts with its prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// Unrolled dynamics equalities.
    P2_1,
    /// Big-M footprint edge rows.
    P2_5,
    /// Footprint activation `3 bS <= Σ b`.
    P2_6,
    /// Big-M cell edge rows.
    P2_8,
    /// Cell activation `4 bx <= Σ b~`.
    P2_9,
    /// One-hot selector.
    P2_10,
    /// Visibility conjunction upper bounds.
    P2_11,
    /// Every point covered at least once.
    P2_12,
    /// Big-M obstacle face rows.
    O1,
    /// At least one obstacle face separates the agent.
    O2,
    /// Control split rows, variable bounds and integrality.
    Bnd,
    /// Switch indicators of the linear selector-change form.
    J3,
}

impl Family {
    pub fn prefix(self) -> &'static str {
        match self {
            Family::P2_1 => "p2_1_",
            Family::P2_5 => "p2_5_",
            Family::P2_6 => "p2_6_",
            Family::P2_8 => "p2_8_",
            Family::P2_9 => "p2_9_",
            Family::P2_10 => "p2_10_",
            Family::P2_11 => "p2_11_",
            Family::P2_12 => "p2_12_",
            Family::O1 => "o_1_",
            Family::O2 => "o_2_",
            Family::Bnd => "bnd_",
            Family::J3 => "j3_",
        }
    }

    pub const ALL: [Family; 12] = [
        Family::P2_1,
        Family::P2_5,
        Family::P2_6,
        Family::P2_8,
        Family::P2_9,
        Family::P2_10,
        Family::P2_11,
        Family::P2_12,
        Family::O1,
        Family::O2,
        Family::Bnd,
        Family::J3,
    ];

    /// Family of a row name, by longest matching prefix.
    pub fn of_row(name: &str) -> Option<Family> {
        Family::ALL
            .iter()
            .copied()
            .filter(|f| name.starts_with(f.prefix()))
            .max_by_key(|f| f.prefix().len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub family: Family,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// `coef * x_i * x_j` with `i <= j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadTerm {
    pub i: usize,
    pub j: usize,
    pub coef: f64,
}

/// `Σ lin + Σ quad + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Objective {
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<QuadTerm>,
    pub constant: f64,
}

impl Objective {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(i, c)| c * x[i]).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|q| q.coef * x[q.i] * x[q.j])
            .sum();
        lin + quad + self.constant
    }

    /// Merges duplicate entries and orders terms by variable index.
    pub fn canonical(&self) -> Objective {
        let mut lin: BTreeMap<usize, f64> = BTreeMap::new();
        for &(i, c) in &self.linear {
            *lin.entry(i).or_default() += c;
        }
        let mut quad: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for q in &self.quadratic {
            let key = if q.i <= q.j { (q.i, q.j) } else { (q.j, q.i) };
            *quad.entry(key).or_default() += q.coef;
        }
        Objective {
            linear: lin.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            quadratic: quad
                .into_iter()
                .filter(|&(_, c)| c != 0.0)
                .map(|((i, j), coef)| QuadTerm { i, j, coef })
                .collect(),
            constant: self.constant,
        }
    }

    /// `Σ w_k obj_k`, canonicalized.
    pub fn weighted(parts: &[(f64, &Objective)]) -> Objective {
        let mut out = Objective::default();
        for &(w, o) in parts {
            if w == 0.0 {
                continue;
            }
            out.linear.extend(o.linear.iter().map(|&(i, c)| (i, w * c)));
            out.quadratic.extend(o.quadratic.iter().map(|q| QuadTerm {
                coef: w * q.coef,
                ..*q
            }));
            out.constant += w * o.constant;
        }
        out.canonical()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// Express selector changes with switch indicators instead of squares.
    pub j3_linear: bool,
    /// Constant added to the objective, carried by a variable fixed at 1.
    pub objective_offset: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            j3_linear: false,
            objective_offset: 0.0,
        }
    }
}

/// The unweighted objective terms kept alongside the combined objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveParts {
    pub j1: Objective,
    pub j2: Objective,
    pub j3: Objective,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiqpModel {
    pub vars: VariableSpace,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Objective,
    pub parts: ObjectiveParts,
    pub weights: Weights,
    /// `(lower, upper)` per variable.
    pub bounds: Vec<(f64, f64)>,
}

impl MiqpModel {
    pub fn rows_in(&self, f: Family) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints.iter().filter(move |c| c.family == f)
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vars.len()).filter(|&i| self.vars.kind(i) == VarKind::Binary)
    }

    /// All-zero assignment sized for this model.
    pub fn zero_assignment(&self) -> Assignment {
        Assignment {
            values: vec![0.0; self.vars.len()],
        }
    }
}

/// One value per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
}

impl Assignment {
    #[inline]
    pub fn get(&self, id: usize) -> f64 {
        self.values[id]
    }

    #[inline]
    pub fn set(&mut self, id: usize, v: f64) {
        self.values[id] = v;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: String,
    pub family: Family,
    /// `rhs - lhs` for `<=` rows, `lhs - rhs` for `>=`, `-|lhs - rhs|` for
    /// equalities; negative means violated.
    pub slack: f64,
}

pub(crate) fn space_for(s: &Scenario, opts: &BuildOptions) -> VariableSpace {
    VariableSpace::new(
        s.horizon,
        s.n_points(),
        s.configs().len(),
        s.grid.len(),
        s.obstacle_faces().iter().map(|f| f.len()).collect(),
        opts.j3_linear,
        opts.objective_offset != 0.0,
    )
}

pub fn build(s: &Scenario, vt: &VisibilityTable) -> Result<MiqpModel> {
    build_with(s, vt, &BuildOptions::default())
}

pub fn build_with(s: &Scenario, vt: &VisibilityTable, opts: &BuildOptions) -> Result<MiqpModel> {
    if vt.n_cells() != s.grid.len() || vt.n_points() != s.n_points() {
        return Err(Error::DimensionMismatch(format!(
            "table is {} x {}, scenario has {} cells and {} points",
            vt.n_cells(),
            vt.n_points(),
            s.grid.len(),
            s.n_points()
        )));
    }
    if s.horizon < 1 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if !opts.objective_offset.is_finite() {
        return Err(Error::invalid("objective offset must be finite"));
    }
    let v = space_for(s, opts);
    let t_max = s.horizon;
    let big_m = s.big_m;
    let n_pts = s.n_points();
    let configs = s.configs();
    let mut rows: Vec<LinearConstraint> = Vec::new();
    let mut push = |family: Family, name: String, terms: Vec<(usize, f64)>, sense, rhs| {
        debug_assert!(name.starts_with(family.prefix()));
        rows.push(LinearConstraint {
            name,
            family,
            terms,
            sense,
            rhs,
        });
    };

    // Dynamics: x_t - Σ_τ Φ^{t-τ-1} Γ u_τ = Φ^t x0.
    let dyn_ = UnrolledDynamics::new(&s.kinematics, t_max);
    const COMP: [&str; 4] = ["px", "py", "vx", "vy"];
    for t in 1..=t_max {
        let drift = dyn_.drift(t, &s.x0);
        for (k, comp) in COMP.iter().enumerate() {
            let mut terms = vec![(v.state(t, k), 1.0)];
            for tau in 0..t {
                let r = dyn_.input_response(t - tau - 1);
                for a in 0..2 {
                    let c = r[(k, a)];
                    if c != 0.0 {
                        terms.push((v.control(tau, a), -c));
                    }
                }
            }
            push(
                Family::P2_1,
                format!("p2_1_dyn_t{t}_{comp}"),
                terms,
                Sense::Eq,
                drift[k],
            );
        }
    }

    for t in 1..=t_max {
        // Footprint membership of every point under every configuration.
        for (m, cfg) in configs.iter().enumerate() {
            for (p, pt) in s.boundary.points.iter().enumerate() {
                for (n, hp) in cfg.local_halfplanes.iter().enumerate() {
                    // A·(p - x) <= B  unless  b = 0.
                    let a = hp.normal;
                    push(
                        Family::P2_5,
                        format!("p2_5_fov_n{n}_p{p}_m{m}_t{t}"),
                        vec![
                            (v.state(t, 0), -a.x),
                            (v.state(t, 1), -a.y),
                            (v.fov_edge(n, p, m, t), big_m),
                        ],
                        Sense::Le,
                        hp.offset + big_m - a.dot(*pt),
                    );
                }
                let mut terms = vec![(v.in_fov(p, m, t), 3.0)];
                terms.extend((0..3).map(|n| (v.fov_edge(n, p, m, t), -1.0)));
                push(
                    Family::P2_6,
                    format!("p2_6_infov_p{p}_m{m}_t{t}"),
                    terms,
                    Sense::Le,
                    0.0,
                );
            }
        }

        // Cell membership.
        for (c, cell) in s.grid.cells.iter().enumerate() {
            for (k, hp) in cell.halfplanes.iter().enumerate() {
                push(
                    Family::P2_8,
                    format!("p2_8_cell_k{k}_c{c}_t{t}"),
                    vec![
                        (v.state(t, 0), hp.normal.x),
                        (v.state(t, 1), hp.normal.y),
                        (v.cell_edge(k, c, t), big_m - hp.offset),
                    ],
                    Sense::Le,
                    big_m,
                );
            }
            let mut terms = vec![(v.in_cell(c, t), 4.0)];
            terms.extend((0..4).map(|k| (v.cell_edge(k, c, t), -1.0)));
            push(
                Family::P2_9,
                format!("p2_9_incell_c{c}_t{t}"),
                terms,
                Sense::Le,
                0.0,
            );
        }

        push(
            Family::P2_10,
            format!("p2_10_sel_t{t}"),
            (0..configs.len()).map(|m| (v.select(m, t), 1.0)).collect(),
            Sense::Eq,
            1.0,
        );

        for m in 0..configs.len() {
            for p in 0..n_pts {
                let sp = v.visible(p, m, t);
                push(
                    Family::P2_11,
                    format!("p2_11_sel_p{p}_m{m}_t{t}"),
                    vec![(sp, 1.0), (v.select(m, t), -1.0)],
                    Sense::Le,
                    0.0,
                );
                push(
                    Family::P2_11,
                    format!("p2_11_fov_p{p}_m{m}_t{t}"),
                    vec![(sp, 1.0), (v.in_fov(p, m, t), -1.0)],
                    Sense::Le,
                    0.0,
                );
                let mut terms = vec![(sp, 1.0)];
                terms.extend(
                    (0..s.grid.len())
                        .filter(|&c| vt.get(c, p))
                        .map(|c| (v.in_cell(c, t), -1.0)),
                );
                push(
                    Family::P2_11,
                    format!("p2_11_vis_p{p}_m{m}_t{t}"),
                    terms,
                    Sense::Le,
                    0.0,
                );
            }
        }
    }

    for p in 0..n_pts {
        let mut terms = Vec::with_capacity(t_max * configs.len());
        for t in 1..=t_max {
            for m in 0..configs.len() {
                terms.push((v.visible(p, m, t), 1.0));
            }
        }
        push(
            Family::P2_12,
            format!("p2_12_cov_p{p}"),
            terms,
            Sense::Ge,
            1.0,
        );
    }

    // Obstacles: -α·x - M b <= -β per face; at most n - 1 faces may be relaxed.
    for (o, faces) in s.obstacle_faces().iter().enumerate() {
        for t in 1..=t_max {
            for (i, hp) in faces.iter().enumerate() {
                push(
                    Family::O1,
                    format!("o_1_obs{o}_t{t}_i{i}"),
                    vec![
                        (v.state(t, 0), -hp.normal.x),
                        (v.state(t, 1), -hp.normal.y),
                        (v.collision(o, t, i), -big_m),
                    ],
                    Sense::Le,
                    -hp.offset,
                );
            }
            push(
                Family::O2,
                format!("o_2_obs{o}_t{t}"),
                (0..faces.len())
                    .map(|i| (v.collision(o, t, i), 1.0))
                    .collect(),
                Sense::Le,
                faces.len() as f64 - 1.0,
            );
        }
    }

    for t in 0..t_max {
        for (a, axis) in ["x", "y"].iter().enumerate() {
            push(
                Family::Bnd,
                format!("bnd_split_t{t}_{axis}"),
                vec![
                    (v.control(t, a), 1.0),
                    (v.control_pos(t, a), -1.0),
                    (v.control_neg(t, a), 1.0),
                ],
                Sense::Eq,
                0.0,
            );
        }
    }

    if opts.j3_linear {
        for t in 1..t_max {
            for m in 0..configs.len() {
                let (a, b, sw) = (v.select(m, t + 1), v.select(m, t), v.switch(m, t));
                push(
                    Family::J3,
                    format!("j3_sw_up_m{m}_t{t}"),
                    vec![(a, 1.0), (b, -1.0), (sw, -1.0)],
                    Sense::Le,
                    0.0,
                );
                push(
                    Family::J3,
                    format!("j3_sw_dn_m{m}_t{t}"),
                    vec![(b, 1.0), (a, -1.0), (sw, -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
        }
    }

    let bounds = variable_bounds(s, &v);
    let j1 = objective_j1(&v);
    let j2 = objective_j2(&v);
    let j3 = if opts.j3_linear {
        objective_j3_linear(&v)
    } else {
        objective_j3(&v)
    };
    let w = s.weights;
    let mut objective = Objective::weighted(&[(w.w1, &j1), (w.w2, &j2), (w.w3, &j3)]);
    if opts.objective_offset != 0.0 {
        objective
            .linear
            .push((v.obj_const(), opts.objective_offset));
        objective = objective.canonical();
    }

    Ok(MiqpModel {
        vars: v,
        constraints: rows,
        objective,
        parts: ObjectiveParts { j1, j2, j3 },
        weights: w,
        bounds,
    })
}

fn variable_bounds(s: &Scenario, v: &VariableSpace) -> Vec<(f64, f64)> {
    let k = &s.kinematics;
    let ws = k.workspace;
    let mut b = vec![(0.0, 1.0); v.len()];
    for t in 1..=s.horizon {
        b[v.state(t, 0)] = (ws.xmin, ws.xmax);
        b[v.state(t, 1)] = (ws.ymin, ws.ymax);
        b[v.state(t, 2)] = (-k.speed_max, k.speed_max);
        b[v.state(t, 3)] = (-k.speed_max, k.speed_max);
    }
    for t in 0..s.horizon {
        for a in 0..2 {
            b[v.control(t, a)] = (-k.force_max, k.force_max);
            b[v.control_pos(t, a)] = (0.0, k.force_max);
            b[v.control_neg(t, a)] = (0.0, k.force_max);
        }
    }
    if v.const_var {
        b[v.obj_const()] = (1.0, 1.0);
    }
    b
}

/// Every row, bound and integrality violation beyond `tol`.
///
/// Panics if the assignment was not sized for this model.
pub fn check(m: &MiqpModel, a: &Assignment, tol: f64) -> Vec<Violation> {
    assert_eq!(
        a.values.len(),
        m.vars.len(),
        "assignment size differs from the model"
    );
    let x = &a.values;
    let mut out = Vec::new();
    for row in &m.constraints {
        let lhs = row.lhs(x);
        let slack = match row.sense {
            Sense::Le => row.rhs - lhs,
            Sense::Ge => lhs - row.rhs,
            Sense::Eq => -(lhs - row.rhs).abs(),
        };
        if !(slack >= -tol) {
            out.push(Violation {
                row: row.name.clone(),
                family: row.family,
                slack,
            });
        }
    }
    for (i, (&val, &(lo, hi))) in x.iter().zip(&m.bounds).enumerate() {
        let slack = (val - lo).min(hi - val);
        if !(slack >= -tol) {
            out.push(Violation {
                row: format!("bnd_var_{}", m.vars.name(i)),
                family: Family::Bnd,
                slack,
            });
        }
        if m.vars.kind(i) == VarKind::Binary {
            let gap = (val - val.round()).abs();
            if gap > tol {
                out.push(Violation {
                    row: format!("bnd_int_{}", m.vars.name(i)),
                    family: Family::Bnd,
                    slack: -gap,
                });
            }
        }
    }
    out
}
