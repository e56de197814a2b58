//! Variable layout. Every symbol of the program owns one contiguous block;
//! time indices of state-like symbols run `1..=T`, controls `0..T`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    State,
    Control,
    ControlPos,
    ControlNeg,
    FovEdge,
    InFov,
    CellEdge,
    InCell,
    Select,
    Visible,
    Collision(usize),
    Switch,
    ObjConst,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariableSpace {
    pub horizon: usize,
    pub n_points: usize,
    pub n_configs: usize,
    pub n_cells: usize,
    /// Face count of each obstacle.
    pub obstacle_faces: Vec<usize>,
    /// Whether switch indicators for the linear selector-change form exist.
    pub switch_vars: bool,
    /// Whether a variable fixed at 1 carries the objective constant.
    pub const_var: bool,
    starts: Vec<(Block, usize, usize)>,
    len: usize,
}

impl VariableSpace {
    pub fn new(
        horizon: usize,
        n_points: usize,
        n_configs: usize,
        n_cells: usize,
        obstacle_faces: Vec<usize>,
        switch_vars: bool,
        const_var: bool,
    ) -> Self {
        let t = horizon;
        let (p, m, g) = (n_points, n_configs, n_cells);
        let mut sizes = vec![
            (Block::State, 4 * t),
            (Block::Control, 2 * t),
            (Block::ControlPos, 2 * t),
            (Block::ControlNeg, 2 * t),
            (Block::FovEdge, 3 * p * m * t),
            (Block::InFov, p * m * t),
            (Block::CellEdge, 4 * g * t),
            (Block::InCell, g * t),
            (Block::Select, m * t),
            (Block::Visible, p * m * t),
        ];
        for (o, &n) in obstacle_faces.iter().enumerate() {
            sizes.push((Block::Collision(o), n * t));
        }
        if switch_vars {
            sizes.push((Block::Switch, m * t.saturating_sub(1)));
        }
        if const_var {
            sizes.push((Block::ObjConst, 1));
        }
        let mut starts = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for (b, n) in sizes {
            starts.push((b, off, n));
            off += n;
        }
        VariableSpace {
            horizon,
            n_points,
            n_configs,
            n_cells,
            obstacle_faces,
            switch_vars,
            const_var,
            starts,
            len: off,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn start(&self, b: Block) -> usize {
        self.starts
            .iter()
            .find(|s| s.0 == b)
            .map(|s| s.1)
            .unwrap_or_else(|| panic!("block {b:?} not present"))
    }

    /// `(offset, size)` of a block.
    pub fn block_range(&self, b: Block) -> Option<(usize, usize)> {
        self.starts.iter().find(|s| s.0 == b).map(|s| (s.1, s.2))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Block, usize, usize)> + '_ {
        self.starts.iter().copied()
    }

    #[inline]
    fn check_t(&self, t: usize) {
        assert!(
            t >= 1 && t <= self.horizon,
            "time index {t} outside 1..={}",
            self.horizon
        );
    }

    /// State component `k` (px, py, vx, vy) at `t in 1..=T`.
    pub fn state(&self, t: usize, k: usize) -> usize {
        self.check_t(t);
        assert!(k < 4);
        self.start(Block::State) + 4 * (t - 1) + k
    }

    /// Control axis `a` at `t in 0..T`.
    pub fn control(&self, t: usize, a: usize) -> usize {
        assert!(t < self.horizon && a < 2);
        self.start(Block::Control) + 2 * t + a
    }

    pub fn control_pos(&self, t: usize, a: usize) -> usize {
        assert!(t < self.horizon && a < 2);
        self.start(Block::ControlPos) + 2 * t + a
    }

    pub fn control_neg(&self, t: usize, a: usize) -> usize {
        assert!(t < self.horizon && a < 2);
        self.start(Block::ControlNeg) + 2 * t + a
    }

    fn pmt(&self, p: usize, m: usize, t: usize) -> usize {
        self.check_t(t);
        assert!(p < self.n_points && m < self.n_configs);
        ((t - 1) * self.n_configs + m) * self.n_points + p
    }

    /// Footprint edge `n` holds for point `p` under config `m` at `t`.
    pub fn fov_edge(&self, n: usize, p: usize, m: usize, t: usize) -> usize {
        assert!(n < 3);
        self.start(Block::FovEdge) + 3 * self.pmt(p, m, t) + n
    }

    pub fn in_fov(&self, p: usize, m: usize, t: usize) -> usize {
        self.start(Block::InFov) + self.pmt(p, m, t)
    }

    pub fn cell_edge(&self, k: usize, c: usize, t: usize) -> usize {
        self.check_t(t);
        assert!(k < 4 && c < self.n_cells);
        self.start(Block::CellEdge) + ((t - 1) * self.n_cells + c) * 4 + k
    }

    pub fn in_cell(&self, c: usize, t: usize) -> usize {
        self.check_t(t);
        assert!(c < self.n_cells);
        self.start(Block::InCell) + (t - 1) * self.n_cells + c
    }

    pub fn select(&self, m: usize, t: usize) -> usize {
        self.check_t(t);
        assert!(m < self.n_configs);
        self.start(Block::Select) + (t - 1) * self.n_configs + m
    }

    pub fn visible(&self, p: usize, m: usize, t: usize) -> usize {
        self.start(Block::Visible) + self.pmt(p, m, t)
    }

    pub fn collision(&self, o: usize, t: usize, i: usize) -> usize {
        self.check_t(t);
        let n = self.obstacle_faces[o];
        assert!(i < n);
        self.start(Block::Collision(o)) + (t - 1) * n + i
    }

    /// Change indicator of config `m` between `t` and `t + 1`, `t in 1..T`.
    pub fn switch(&self, m: usize, t: usize) -> usize {
        assert!(self.switch_vars && t >= 1 && t < self.horizon && m < self.n_configs);
        self.start(Block::Switch) + (t - 1) * self.n_configs + m
    }

    pub fn obj_const(&self) -> usize {
        assert!(self.const_var);
        self.start(Block::ObjConst)
    }

    pub fn kind(&self, id: usize) -> VarKind {
        match self.locate(id).0 {
            Block::State
            | Block::Control
            | Block::ControlPos
            | Block::ControlNeg
            | Block::Switch
            | Block::ObjConst => VarKind::Continuous,
            _ => VarKind::Binary,
        }
    }

    /// Block and offset within it.
    pub fn locate(&self, id: usize) -> (Block, usize) {
        assert!(id < self.len, "variable {id} out of range");
        let s = self
            .starts
            .iter()
            .rev()
            .find(|s| s.1 <= id && s.2 > 0)
            .expect("blocks cover the index range");
        (s.0, id - s.1)
    }

    /// Deterministic LP name. States and controls use their flat offset
    /// (`x_t_<4(t-1)+k>`, `u_t_<2t+a>`); binaries spell out their indices.
    pub fn name(&self, id: usize) -> String {
        let (b, r) = self.locate(id);
        let (p, m, g) = (self.n_points, self.n_configs, self.n_cells);
        match b {
            Block::State => format!("x_t_{r}"),
            Block::Control => format!("u_t_{r}"),
            Block::ControlPos => format!("up_t_{r}"),
            Block::ControlNeg => format!("um_t_{r}"),
            Block::FovEdge => {
                let (n, q) = (r % 3, r / 3);
                format!("b_n{}_p{}_m{}_t{}", n, q % p, (q / p) % m, q / (p * m) + 1)
            }
            Block::InFov => format!("bS_p{}_m{}_t{}", r % p, (r / p) % m, r / (p * m) + 1),
            Block::CellEdge => {
                let (k, q) = (r % 4, r / 4);
                format!("bt_k{}_c{}_t{}", k, q % g, q / g + 1)
            }
            Block::InCell => format!("bx_c{}_t{}", r % g, r / g + 1),
            Block::Select => format!("F_m{}_t{}", r % m, r / m + 1),
            Block::Visible => format!("bSp_p{}_m{}_t{}", r % p, (r / p) % m, r / (p * m) + 1),
            Block::Collision(o) => {
                let n = self.obstacle_faces[o];
                format!("bcol_o{}_t{}_i{}", o, r / n + 1, r % n)
            }
            Block::Switch => format!("sw_m{}_t{}", r % m, r / m + 1),
            Block::ObjConst => "obj_const".to_string(),
        }
    }
}
