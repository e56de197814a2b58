//! Objective builders over a [`VariableSpace`].

use super::{Objective, QuadTerm, VariableSpace};

/// Coverage time: `Σ_{p,m,t} (t / T) bSp_{p,m,t}`.
pub fn objective_j1(v: &VariableSpace) -> Objective {
    let t_max = v.horizon as f64;
    let mut linear = Vec::with_capacity(v.n_points * v.n_configs * v.horizon);
    for t in 1..=v.horizon {
        for m in 0..v.n_configs {
            for p in 0..v.n_points {
                linear.push((v.visible(p, m, t), t as f64 / t_max));
            }
        }
    }
    Objective {
        linear,
        ..Default::default()
    }
    .canonical()
}

/// Control effort: `Σ_{t>=1} ||u_t - u_{t-1}||² + Σ_t (u⁺_t + u⁻_t)` over both axes.
pub fn objective_j2(v: &VariableSpace) -> Objective {
    let mut o = Objective::default();
    for t in 1..v.horizon {
        for a in 0..2 {
            push_square_diff(&mut o, v.control(t, a), v.control(t - 1, a));
        }
    }
    for t in 0..v.horizon {
        for a in 0..2 {
            o.linear.push((v.control_pos(t, a), 1.0));
            o.linear.push((v.control_neg(t, a), 1.0));
        }
    }
    o.canonical()
}

/// Selector changes: `Σ_{t<T} Σ_m (F_{m,t+1} - F_{m,t})²`.
pub fn objective_j3(v: &VariableSpace) -> Objective {
    let mut o = Objective::default();
    for t in 1..v.horizon {
        for m in 0..v.n_configs {
            push_square_diff(&mut o, v.select(m, t + 1), v.select(m, t));
        }
    }
    o.canonical()
}

/// Linear form of [`objective_j3`]: `Σ sw_{m,t}` with `sw >= |F_{m,t+1} - F_{m,t}|`.
pub fn objective_j3_linear(v: &VariableSpace) -> Objective {
    let mut o = Objective::default();
    for t in 1..v.horizon {
        for m in 0..v.n_configs {
            o.linear.push((v.switch(m, t), 1.0));
        }
    }
    o.canonical()
}

fn push_square_diff(o: &mut Objective, a: usize, b: usize) {
    o.quadratic.push(QuadTerm {
        i: a,
        j: a,
        coef: 1.0,
    });
    o.quadratic.push(QuadTerm {
        i: b,
        j: b,
        coef: 1.0,
    });
    o.quadratic.push(QuadTerm {
        i: a.min(b),
        j: a.max(b),
        coef: -2.0,
    });
}
