//! Point-mass agent with linear drag, sampled at a fixed interval.
//!
//! `x_t = Φ x_{t-1} + Γ u_{t-1}` with state `[px, py, vx, vy]`,
//! `Φ = [[I, dt I], [0, (1-η) I]]` and `Γ = [[0], [(dt/m) I]]`.

use nalgebra::{Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect, Vec2};

/// Tolerance for box bound checks; matches the workspace containment slack.
pub const BOUND_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicParams {
    /// Sampling interval, seconds.
    pub dt: f64,
    /// Kilograms.
    pub mass: f64,
    /// Drag coefficient η in `[0, 1)`.
    pub drag: f64,
    /// Per-axis force bound, newtons.
    pub force_max: f64,
    /// Per-axis speed bound, m/s.
    pub speed_max: f64,
    pub workspace: Rect,
}

impl KinematicParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.dt,
            self.mass,
            self.drag,
            self.force_max,
            self.speed_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("kinematic parameters must be finite"));
        }
        if self.dt <= 0.0 {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.mass <= 0.0 {
            return Err(Error::invalid("mass must be positive"));
        }
        if !(0.0..1.0).contains(&self.drag) {
            return Err(Error::invalid("drag must lie in [0, 1)"));
        }
        if self.force_max <= 0.0 || self.speed_max <= 0.0 {
            return Err(Error::invalid("force and speed bounds must be positive"));
        }
        Ok(())
    }

    /// Velocity retention per step, `1 - η`.
    #[inline]
    pub fn retention(&self) -> f64 {
        1.0 - self.drag
    }

    /// Velocity gained per newton per step, `dt / m`.
    #[inline]
    pub fn gain(&self) -> f64 {
        self.dt / self.mass
    }

    pub fn transition(&self) -> Matrix4<f64> {
        let mut phi = Matrix4::identity();
        phi[(0, 2)] = self.dt;
        phi[(1, 3)] = self.dt;
        phi[(2, 2)] = self.retention();
        phi[(3, 3)] = self.retention();
        phi
    }

    pub fn input_matrix(&self) -> Matrix4x2<f64> {
        let mut gamma = Matrix4x2::zeros();
        gamma[(2, 0)] = self.gain();
        gamma[(3, 1)] = self.gain();
        gamma
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AgentState {
    pub pos: Point2,
    pub vel: Vec2,
}

impl AgentState {
    pub fn new(px: f64, py: f64, vx: f64, vy: f64) -> Self {
        Self {
            pos: Point2::new(px, py),
            vel: Point2::new(vx, vy),
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.pos.x, self.pos.y, self.vel.x, self.vel.y]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite()
    }

    fn to_vector(self) -> Vector4<f64> {
        Vector4::from(self.to_array())
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlInput {
    pub fx: f64,
    pub fy: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { fx: 0.0, fy: 0.0 };

    pub const fn new(fx: f64, fy: f64) -> Self {
        Self { fx, fy }
    }
}

impl std::ops::Add for ControlInput {
    type Output = ControlInput;
    fn add(self, o: ControlInput) -> ControlInput {
        ControlInput::new(self.fx + o.fx, self.fy + o.fy)
    }
}

/// One sampling interval of the drag model.
#[inline]
pub fn step(s: &AgentState, u: &ControlInput, k: &KinematicParams) -> AgentState {
    let ret = k.retention();
    // `f dt / m` rather than `(dt / m) f` keeps e.g. 3.35 N on 3.35 kg exact.
    AgentState {
        pos: s.pos + s.vel * k.dt,
        vel: Point2::new(
            ret * s.vel.x + u.fx * k.dt / k.mass,
            ret * s.vel.y + u.fy * k.dt / k.mass,
        ),
    }
}

/// States `x_1..x_T` produced by applying `controls[0..T]` from `x0`.
pub fn rollout(x0: &AgentState, controls: &[ControlInput], k: &KinematicParams) -> Vec<AgentState> {
    controls
        .iter()
        .scan(*x0, |s, u| {
            *s = step(s, u, k);
            Some(*s)
        })
        .collect()
}

/// Same trajectory as [`rollout`], evaluated as
/// `x_t = Φ^t x_0 + Σ_{τ<t} Φ^{t-τ-1} Γ u_τ`.
pub fn rollout_closed_form(
    x0: &AgentState,
    controls: &[ControlInput],
    k: &KinematicParams,
) -> Vec<AgentState> {
    let responses = UnrolledDynamics::new(k, controls.len());
    let x0 = x0.to_vector();
    (1..=controls.len())
        .map(|t| {
            let mut x = responses.free_response(t) * x0;
            for (tau, u) in controls.iter().enumerate().take(t) {
                x += responses.input_response(t - tau - 1) * Vector2::new(u.fx, u.fy);
            }
            AgentState::from_vector(&x)
        })
        .collect()
}

/// Precomputed `Φ^j` and `Φ^j Γ` for `j = 0..=horizon`.
#[derive(Clone, Debug)]
pub struct UnrolledDynamics {
    phi_pows: Vec<Matrix4<f64>>,
    gamma: Matrix4x2<f64>,
}

impl UnrolledDynamics {
    pub fn new(k: &KinematicParams, horizon: usize) -> Self {
        let phi = k.transition();
        let mut phi_pows = Vec::with_capacity(horizon + 1);
        phi_pows.push(Matrix4::identity());
        for j in 1..=horizon {
            phi_pows.push(phi * phi_pows[j - 1]);
        }
        Self {
            phi_pows,
            gamma: k.input_matrix(),
        }
    }

    /// `Φ^t`.
    pub fn free_response(&self, t: usize) -> Matrix4<f64> {
        self.phi_pows[t]
    }

    /// `Φ^lag Γ`: effect of `u_τ` on `x_{τ+lag+1}`.
    pub fn input_response(&self, lag: usize) -> Matrix4x2<f64> {
        self.phi_pows[lag] * self.gamma
    }

    /// `Φ^t x0` as a state.
    pub fn drift(&self, t: usize, x0: &AgentState) -> [f64; 4] {
        let v = self.phi_pows[t] * x0.to_vector();
        [v[0], v[1], v[2], v[3]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundQuantity {
    ForceX,
    ForceY,
    SpeedX,
    SpeedY,
    Position,
}

/// A box-bound breach. Controls are indexed `t = 0..T-1`, states `t = 1..T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub t: usize,
    pub quantity: BoundQuantity,
    pub value: f64,
    pub limit: f64,
}

/// Lists every per-axis force or speed excess and every position outside the
/// workspace. `traj[i]` is the state at `t = i + 1`.
pub fn check_bounds(
    traj: &[AgentState],
    controls: &[ControlInput],
    k: &KinematicParams,
) -> Result<Vec<BoundViolation>> {
    if traj.len() != controls.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} states but {} controls",
            traj.len(),
            controls.len()
        )));
    }
    let mut out = Vec::new();
    for (t, u) in controls.iter().enumerate() {
        for (q, v) in [(BoundQuantity::ForceX, u.fx), (BoundQuantity::ForceY, u.fy)] {
            if !(v.abs() <= k.force_max + BOUND_EPS) {
                out.push(BoundViolation {
                    t,
                    quantity: q,
                    value: v,
                    limit: k.force_max,
                });
            }
        }
    }
    for (i, s) in traj.iter().enumerate() {
        let t = i + 1;
        for (q, v) in [
            (BoundQuantity::SpeedX, s.vel.x),
            (BoundQuantity::SpeedY, s.vel.y),
        ] {
            if !(v.abs() <= k.speed_max + BOUND_EPS) {
                out.push(BoundViolation {
                    t,
                    quantity: q,
                    value: v,
                    limit: k.speed_max,
                });
            }
        }
        if !within_workspace(s.pos, &k.workspace) {
            let d = k.workspace.distance_to(s.pos);
            out.push(BoundViolation {
                t,
                quantity: BoundQuantity::Position,
                value: d,
                limit: 0.0,
            });
        }
    }
    Ok(out)
}

#[inline]
fn within_workspace(p: Point2, w: &Rect) -> bool {
    p.is_finite() && w.contains(p)
}

/// Velocity and workspace bounds of a single state (force bounds excluded).
#[inline]
pub fn state_within_bounds(s: &AgentState, k: &KinematicParams) -> bool {
    s.vel.x.abs() <= k.speed_max + BOUND_EPS
        && s.vel.y.abs() <= k.speed_max + BOUND_EPS
        && within_workspace(s.pos, &k.workspace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> KinematicParams {
        KinematicParams {
            dt: 1.0,
            mass: 3.35,
            drag: 0.2,
            force_max: 3.0,
            speed_max: 2.0,
            workspace: Rect::new(0.0, 0.0, 60.0, 20.0).unwrap(),
        }
    }

    #[test]
    fn step_examples() {
        let k = params();
        let s = step(&AgentState::default(), &ControlInput::new(3.35, 0.0), &k);
        assert_eq!(s.pos, Point2::ORIGIN);
        assert_eq!(s.vel, Point2::new(1.0, 0.0));

        let rest = AgentState::new(4.0, 5.0, 0.0, 0.0);
        assert_eq!(step(&rest, &ControlInput::ZERO, &k), rest);

        let s = step(
            &AgentState::new(0.0, 0.0, 2.0, 0.0),
            &ControlInput::ZERO,
            &k,
        );
        assert_eq!(s.pos, Point2::new(2.0, 0.0));
        assert!((s.vel.x - 1.6).abs() < 1e-15 && s.vel.y == 0.0);
    }

    #[test]
    fn params_validation() {
        let mut k = params();
        assert!(k.validate().is_ok());
        k.drag = 1.0;
        assert!(k.validate().is_err());
        k = params();
        k.mass = 0.0;
        assert!(k.validate().is_err());
        k = params();
        k.dt = -1.0;
        assert!(k.validate().is_err());
    }

    #[test]
    fn rollout_single_step_and_rest() {
        let k = params();
        let x0 = AgentState::new(1.0, 2.0, 0.5, -0.5);
        let u = ControlInput::new(1.0, -2.0);
        assert_eq!(rollout(&x0, &[u], &k), vec![step(&x0, &u, &k)]);

        let still = AgentState::new(3.0, 3.0, 0.0, 0.0);
        assert!(rollout(&still, &[ControlInput::ZERO; 5], &k)
            .iter()
            .all(|s| *s == still));
    }

    #[test]
    fn closed_form_matches_recursion() {
        let k = params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x0 = AgentState::new(
                rng.random_range(0.0..60.0),
                rng.random_range(0.0..20.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let us: Vec<ControlInput> = (0..10)
                .map(|_| {
                    ControlInput::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
                })
                .collect();
            for (a, b) in rollout(&x0, &us, &k)
                .iter()
                .zip(rollout_closed_form(&x0, &us, &k))
            {
                for (p, q) in a.to_array().iter().zip(b.to_array()) {
                    assert!((p - q).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn bounds_report() {
        let k = params();
        let x0 = AgentState::new(10.0, 10.0, 0.0, 0.0);
        let zeros = [ControlInput::ZERO; 3];
        assert!(check_bounds(&rollout(&x0, &zeros, &k), &zeros, &k)
            .unwrap()
            .is_empty());

        let us = [ControlInput::ZERO, ControlInput::new(3.0001, 0.0)];
        let traj = rollout(&x0, &us, &k);
        let v = check_bounds(&traj, &us, &k).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].t, v[0].quantity), (1, BoundQuantity::ForceX));

        let fast = [AgentState::new(10.0, 10.0, 2.5, 0.0)];
        let v = check_bounds(&fast, &[ControlInput::ZERO], &k).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].t, v[0].quantity), (1, BoundQuantity::SpeedX));

        let outside = [AgentState::new(-1.0, 10.0, 0.0, 0.0)];
        let v = check_bounds(&outside, &[ControlInput::ZERO], &k).unwrap();
        assert_eq!(v[0].quantity, BoundQuantity::Position);
        assert!((v[0].value - 1.0).abs() < 1e-12);

        assert!(check_bounds(&outside, &[], &k).is_err());
    }

    fn arb_state() -> impl Strategy<Value = AgentState> {
        (0.0..60.0f64, 0.0..20.0f64, -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(a, b, c, d)| AgentState::new(a, b, c, d))
    }

    fn arb_controls(n: usize) -> impl Strategy<Value = Vec<ControlInput>> {
        prop::collection::vec(
            (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| ControlInput::new(x, y)),
            n,
        )
    }

    proptest! {
        #[test]
        fn superposition(x0 in arb_state(), u in arb_controls(12), w in arb_controls(12)) {
            let k = params();
            let uw: Vec<ControlInput> = u.iter().zip(&w).map(|(a, b)| *a + *b).collect();
            let a = rollout(&x0, &uw, &k);
            let b = rollout(&x0, &u, &k);
            let c = rollout(&AgentState::default(), &w, &k);
            for ((a, b), c) in a.iter().zip(&b).zip(&c) {
                for i in 0..4 {
                    prop_assert!((a.to_array()[i] - b.to_array()[i] - c.to_array()[i]).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn free_speed_decays_geometrically(x0 in arb_state(), drag in 0.01..0.99f64) {
            let k = KinematicParams { drag, ..params() };
            let traj = rollout(&x0, &[ControlInput::ZERO; 10], &k);
            let mut prev = x0.vel.norm();
            for s in traj {
                let sp = s.vel.norm();
                prop_assert!(sp <= prev + 1e-12);
                prop_assert!((sp - (1.0 - drag) * prev).abs() <= 1e-12);
                prev = sp;
            }
        }

        #[test]
        fn closed_form_agrees_up_to_fifty_steps(x0 in arb_state(), u in arb_controls(50)) {
            let k = params();
            for (a, b) in rollout(&x0, &u, &k).iter().zip(rollout_closed_form(&x0, &u, &k)) {
                for (p, q) in a.to_array().iter().zip(b.to_array()) {
                    prop_assert!((p - q).abs() <= 1e-9);
                }
            }
        }
    }
}
