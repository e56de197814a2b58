//! Assignment deriver: the values a control/selector sequence forces on
//! every variable of the program.

use super::{space_for, Assignment, BuildOptions, VariableSpace};
use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::kinematics::{rollout, ControlInput};
use crate::visibility::VisibilityTable;

/// How the visibility indicators `bSp` are switched on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Activation {
    /// Only at each point's first covering step, so `J1` counts every point
    /// once, as the reference solver does.
    #[default]
    FirstCover,
    /// Wherever the upper-bound rows allow.
    Maximal,
}

/// Derived assignment for the default build options with
/// [`Activation::FirstCover`].
pub fn assignment_from_plan(
    s: &Scenario,
    vt: &VisibilityTable,
    controls: &[ControlInput],
    schedule: &[usize],
) -> Result<Assignment> {
    derive_assignment(
        s,
        vt,
        &BuildOptions::default(),
        controls,
        schedule,
        Activation::FirstCover,
    )
}

pub fn derive_assignment(
    s: &Scenario,
    vt: &VisibilityTable,
    opts: &BuildOptions,
    controls: &[ControlInput],
    schedule: &[usize],
    activation: Activation,
) -> Result<Assignment> {
    let t_max = s.horizon;
    if controls.len() != t_max || schedule.len() != t_max {
        return Err(Error::DimensionMismatch(format!(
            "horizon {t_max} but {} controls and {} schedule entries",
            controls.len(),
            schedule.len()
        )));
    }
    let n_cfg = s.configs().len();
    if let Some(&m) = schedule.iter().find(|&&m| m >= n_cfg) {
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
    let v: VariableSpace = space_for(s, opts);
    let mut x = vec![0.0; v.len()];
    let traj = rollout(&s.x0, controls, &s.kinematics);

    for (t, u) in controls.iter().enumerate() {
        for (a, val) in [u.fx, u.fy].into_iter().enumerate() {
            x[v.control(t, a)] = val;
            x[v.control_pos(t, a)] = val.max(0.0);
            x[v.control_neg(t, a)] = (-val).max(0.0);
        }
    }

    let mut covered = vec![false; s.n_points()];
    for t in 1..=t_max {
        let st = traj[t - 1];
        let pos = st.pos;
        for (k, val) in st.to_array().into_iter().enumerate() {
            x[v.state(t, k)] = val;
        }

        for (m, cfg) in s.configs().iter().enumerate() {
            for (p, pt) in s.boundary.points.iter().enumerate() {
                let rel = *pt - pos;
                let mut all = true;
                for (n, hp) in cfg.local_halfplanes.iter().enumerate() {
                    let holds = hp.contains(rel);
                    all &= holds;
                    x[v.fov_edge(n, p, m, t)] = f64::from(u8::from(holds));
                }
                x[v.in_fov(p, m, t)] = f64::from(u8::from(all));
            }
        }

        let mut in_cell = vec![false; s.grid.len()];
        for (c, cell) in s.grid.cells.iter().enumerate() {
            let mut all = true;
            for (k, hp) in cell.halfplanes.iter().enumerate() {
                let holds = hp.contains(pos);
                all &= holds;
                x[v.cell_edge(k, c, t)] = f64::from(u8::from(holds));
            }
            in_cell[c] = all;
            x[v.in_cell(c, t)] = f64::from(u8::from(all));
        }

        let m_sel = schedule[t - 1];
        x[v.select(m_sel, t)] = 1.0;
        for p in 0..s.n_points() {
            let allowed = x[v.in_fov(p, m_sel, t)] == 1.0
                && (0..s.grid.len()).any(|c| in_cell[c] && vt.get(c, p));
            let on = match activation {
                Activation::Maximal => allowed,
                Activation::FirstCover => allowed && !covered[p],
            };
            covered[p] |= allowed;
            if on {
                x[v.visible(p, m_sel, t)] = 1.0;
            }
        }

        for (o, faces) in s.obstacle_faces().iter().enumerate() {
            for (i, hp) in faces.iter().enumerate() {
                // Zero only when the agent is on or beyond the face line.
                let outside = hp.signed_distance(pos) >= -crate::geometry::CONTAIN_EPS;
                x[v.collision(o, t, i)] = if outside { 0.0 } else { 1.0 };
            }
        }
    }

    if v.switch_vars {
        for t in 1..t_max {
            for m in 0..n_cfg {
                x[v.switch(m, t)] = (x[v.select(m, t + 1)] - x[v.select(m, t)]).abs();
            }
        }
    }
    if v.const_var {
        x[v.obj_const()] = 1.0;
    }
    Ok(Assignment { values: x })
}
