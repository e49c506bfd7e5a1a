//! Forward and adjoint solvers on a uniform output grid.

use super::data::{trapezoid_sq, Field, Signal};
use super::engine::{Dynamics, Inflow, Plan, Record};
use super::{GridSize, GridTrajectory, ProblemSpec, SimError};
use crate::speeds::Convention;

pub(crate) fn adjoint_dynamics(spec: &ProblemSpec) -> Dynamics {
    let (p, n) = (spec.p(), spec.n());
    let inflow = (0..n)
        .map(|i| {
            if i < p {
                Inflow::Zero
            } else {
                let j = i - p;
                Inflow::Reflect((0..p).map(|k| (k, spec.r[(k, j)])).filter(|&(_, c)| c != 0.0).collect())
            }
        })
        .collect();
    Dynamics {
        profile: spec.profile.clone(),
        dir: (0..n).map(|i| spec.profile.direction(i, Convention::Adjoint)).collect(),
        inflow,
        term: spec.coupling.adjoint_term(&spec.profile),
    }
}

pub(crate) fn forward_dynamics(spec: &ProblemSpec) -> Dynamics {
    let (p, n) = (spec.p(), spec.n());
    let q = spec.q_f64();
    let inflow = (0..n)
        .map(|i| {
            if i < p {
                Inflow::Reflect((0..spec.m()).map(|j| (p + j, q[(i, j)])).filter(|&(_, c)| c != 0.0).collect())
            } else {
                Inflow::Input(i - p)
            }
        })
        .collect();
    Dynamics {
        profile: spec.profile.clone(),
        dir: (0..n).map(|i| spec.profile.direction(i, Convention::Forward)).collect(),
        inflow,
        term: spec.coupling.clone(),
    }
}

fn check_grid(spec: &ProblemSpec, t: f64, grid: GridSize, data_n: usize) -> Result<f64, SimError> {
    if data_n != spec.n() {
        return Err(SimError::Dimensions(format!("data has {data_n} components, system has {}", spec.n())));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(SimError::Dimensions(format!("horizon must be positive, got {t}")));
    }
    if grid.nt < 2 || grid.nx < 2 {
        return Err(SimError::Dimensions("need nt >= 2 and nx >= 2".into()));
    }
    Ok(t / (grid.nt - 1) as f64)
}

fn assemble(levels: Vec<Vec<f64>>, n: usize, grid: GridSize, dt: f64, reverse: bool) -> GridTrajectory {
    let GridSize { nt, nx } = grid;
    let mut values = vec![0.0; nt * nx * n];
    for (l, level) in levels.into_iter().enumerate() {
        let k = if reverse { nt - 1 - l } else { l };
        values[k * nx * n..(k + 1) * nx * n].copy_from_slice(&level);
    }
    let mut left_trace = vec![0.0; nt * n];
    let mut right_trace = vec![0.0; nt * n];
    for k in 0..nt {
        for i in 0..n {
            left_trace[k * n + i] = values[(k * nx) * n + i];
            right_trace[k * n + i] = values[(k * nx + nx - 1) * n + i];
        }
    }
    GridTrajectory {
        n,
        nt,
        nx,
        dt,
        dx: 1.0 / (nx - 1) as f64,
        values,
        left_trace,
        right_trace,
    }
}

/// Adjoint system from the final data `z(T) = z_final`, marched backward to
/// `t = 0`. The returned trajectory is indexed in the original time `t`.
pub fn solve_adjoint(spec: &ProblemSpec, z_final: &dyn Field, t: f64, grid: GridSize) -> Result<GridTrajectory, SimError> {
    let dt = check_grid(spec, t, grid, z_final.n())?;
    let plan = Plan::new(adjoint_dynamics(spec), dt, grid.nt - 1, grid.nx, Vec::new())?;
    let res = plan.run(z_final, None, Record::All)?;
    Ok(assemble(res.levels, spec.n(), grid, dt, true))
}

/// Forward system from `y(0) = y0` with boundary input `u` at `x = 1`.
pub fn solve_forward(
    spec: &ProblemSpec,
    y0: &dyn Field,
    u: &dyn Signal,
    t: f64,
    grid: GridSize,
) -> Result<GridTrajectory, SimError> {
    let dt = check_grid(spec, t, grid, y0.n())?;
    if u.m() != spec.m() {
        return Err(SimError::Dimensions(format!("control has {} entries, system has m = {}", u.m(), spec.m())));
    }
    let plan = Plan::new(forward_dynamics(spec), dt, grid.nt - 1, grid.nx, Vec::new())?;
    let res = plan.run(y0, Some(u), Record::All)?;
    Ok(assemble(res.levels, spec.n(), grid, dt, false))
}

/// `( int_0^T |Lambda_-(1) z_-(t, 1)|^2 dt )^(1/2)` for an adjoint
/// trajectory, trapezoidal in time.
pub fn trace_l2_norm(spec: &ProblemSpec, traj: &GridTrajectory) -> f64 {
    let p = spec.p();
    (0..spec.m())
        .map(|j| {
            let lam = spec.profile.values(p + j).last().copied().unwrap();
            let v: Vec<f64> = (0..traj.nt).map(|k| lam * traj.right(k, p + j)).collect();
            trapezoid_sq(&v, traj.dt)
        })
        .sum::<f64>()
        .sqrt()
}
