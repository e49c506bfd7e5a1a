//! Discretized observation map `z1 -> Lambda_-(1) z_-(., 1)` and the
//! null-controllability variant.
//!
//! Final data are expanded in unit-norm cell indicators (`nx - 1` cells per
//! component). Trace rows sit at half steps `(k + 1/2) dt` and carry the
//! weight `sqrt(dt) lambda(1)`, so the matrix approximates the operator
//! between `L2` spaces. The time step only depends on the grid, so the rows
//! for a shorter horizon are a subset of those for a longer one.

use super::data::CellField;
use super::engine::{Plan, Record};
use super::solve::adjoint_dynamics;
use super::{ProblemSpec, SimError};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Largest admissible basis for the dense SVD.
pub const MAX_BASIS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GramianReport {
    pub t: f64,
    pub n_basis: usize,
    /// Descending, padded with zeros up to `n_basis`.
    pub singular_values: Vec<f64>,
    /// `sigma_min / sigma_max` (0 for the zero map).
    pub defect: f64,
}

impl GramianReport {
    /// `index,sigma` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sigma\n");
        for (k, s) in self.singular_values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", k + 1, s);
        }
        out
    }
}

fn max_speed(spec: &ProblemSpec) -> f64 {
    (0..spec.n())
        .flat_map(|i| spec.profile.values(i).iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
}

fn check_basis(spec: &ProblemSpec, nx: usize) -> Result<usize, SimError> {
    if nx < 3 {
        return Err(SimError::Dimensions("need nx >= 3".into()));
    }
    let n_basis = spec.n() * (nx - 1);
    if n_basis > MAX_BASIS {
        return Err(SimError::SizeBound { n_basis, max: MAX_BASIS });
    }
    Ok(n_basis)
}

fn sorted_singular_values(a: &DMatrix<f64>, pad_to: usize) -> Vec<f64> {
    let mut s: Vec<f64> = if a.nrows() == 0 || a.ncols() == 0 {
        Vec::new()
    } else {
        a.clone().svd(false, false).singular_values.iter().copied().collect()
    };
    s.sort_by(|x, y| y.total_cmp(x));
    s.resize(pad_to.max(s.len()), 0.0);
    s
}

/// Observation matrix assembled once up to `t_max`.
#[derive(Debug, Clone)]
pub struct ObservationMap {
    pub dt: f64,
    pub t_max: f64,
    pub n_basis: usize,
    /// Observed components per time sample.
    pub m: usize,
    /// Rows ordered by sample time, then component.
    pub matrix: DMatrix<f64>,
}

impl ObservationMap {
    pub fn assemble(spec: &ProblemSpec, t_max: f64, nx: usize) -> Result<Self, SimError> {
        let n_basis = check_basis(spec, nx)?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(SimError::Dimensions(format!("horizon must be positive, got {t_max}")));
        }
        let ncell = nx - 1;
        let dt = 1.0 / (ncell as f64 * max_speed(spec));
        let steps = (t_max / dt - 0.5).ceil().max(0.0) as usize;
        let (p, n, m) = (spec.p(), spec.n(), spec.m());
        let observe: Vec<usize> = (p..n).collect();
        let plan = Plan::new(adjoint_dynamics(spec), dt, steps, 2, observe)?;
        let weights: Vec<f64> = (p..n)
            .map(|i| dt.sqrt() * spec.profile.values(i).last().copied().unwrap())
            .collect();
        let columns: Vec<Result<Vec<f64>, SimError>> = (0..n_basis)
            .into_par_iter()
            .map(|col| {
                let data = CellField::unit_indicator(n, ncell, col / ncell, col % ncell);
                let res = plan.run(&data, None, Record::Nothing)?;
                Ok(res
                    .half_traces
                    .iter()
                    .enumerate()
                    .map(|(r, v)| v * weights[r % m])
                    .collect())
            })
            .collect();
        let mut matrix = DMatrix::zeros(steps * m, n_basis);
        for (c, col) in columns.into_iter().enumerate() {
            for (r, v) in col?.into_iter().enumerate() {
                matrix[(r, c)] = v;
            }
        }
        Ok(Self {
            dt,
            t_max,
            n_basis,
            m,
            matrix,
        })
    }

    /// Number of half-step samples strictly inside `(0, t)`.
    pub fn samples_before(&self, t: f64) -> usize {
        let total = self.matrix.nrows() / self.m.max(1);
        ((t / self.dt - 0.5).ceil().max(0.0) as usize).min(total)
    }

    pub fn defect_at(&self, t: f64) -> GramianReport {
        let rows = self.samples_before(t) * self.m;
        let sub = self.matrix.rows(0, rows).into_owned();
        let singular_values = sorted_singular_values(&sub, self.n_basis);
        let smax = singular_values[0];
        let defect = if smax > 0.0 {
            singular_values[self.n_basis - 1] / smax
        } else {
            0.0
        };
        GramianReport {
            t,
            n_basis: self.n_basis,
            singular_values,
            defect,
        }
    }
}

/// Observation defect at horizon `t` with `nx - 1` cells per component.
pub fn observability_defect(spec: &ProblemSpec, t: f64, nx: usize) -> Result<GramianReport, SimError> {
    Ok(ObservationMap::assemble(spec, t, nx)?.defect_at(t))
}

/// Defect of the null-controllability inequality
/// `|z(0)| <= C |trace|` on the discretized adjoint.
///
/// With `A` the trace map and `B` the map to the state at `t = 0`, the
/// result is `inf |A z| / |B z|` over `B z != 0`, scaled by `|B| / |A|`.
/// It is `+inf` when `B = 0` (nothing to steer) and `0` when some final
/// datum is invisible in the trace yet has a nonzero state at `t = 0`.
pub fn null_control_defect(spec: &ProblemSpec, t: f64, nx: usize) -> Result<GramianReport, SimError> {
    let n_basis = check_basis(spec, nx)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(SimError::Dimensions(format!("horizon must be positive, got {t}")));
    }
    let ncell = nx - 1;
    let steps = (t * ncell as f64 * max_speed(spec)).ceil() as usize;
    let dt = t / steps as f64;
    let (p, n, m) = (spec.p(), spec.n(), spec.m());
    let plan = Plan::new(adjoint_dynamics(spec), dt, steps, nx, (p..n).collect())?;
    let tw: Vec<f64> = (p..n)
        .map(|i| dt.sqrt() * spec.profile.values(i).last().copied().unwrap())
        .collect();
    let dx = 1.0 / ncell as f64;
    let columns: Vec<Result<(Vec<f64>, Vec<f64>), SimError>> = (0..n_basis)
        .into_par_iter()
        .map(|col| {
            let data = CellField::unit_indicator(n, ncell, col / ncell, col % ncell);
            let res = plan.run(&data, None, Record::Last)?;
            let a: Vec<f64> = res.half_traces.iter().enumerate().map(|(r, v)| v * tw[r % m]).collect();
            let last = res.levels.last().expect("final level recorded");
            let b: Vec<f64> = last
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let q = idx / n;
                    let w = if q == 0 || q == nx - 1 { 0.5 * dx } else { dx };
                    v * w.sqrt()
                })
                .collect();
            Ok((a, b))
        })
        .collect();
    let mut a = DMatrix::zeros(steps * m, n_basis);
    let mut b = DMatrix::zeros(nx * n, n_basis);
    for (c, col) in columns.into_iter().enumerate() {
        let (ca, cb) = col?;
        for (r, v) in ca.into_iter().enumerate() {
            a[(r, c)] = v;
        }
        for (r, v) in cb.into_iter().enumerate() {
            b[(r, c)] = v;
        }
    }
    Ok(null_defect_from(&a, &b, t, n_basis))
}

fn null_defect_from(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64, n_basis: usize) -> GramianReport {
    let svd_b = b.clone().svd(false, true);
    let b_norm = svd_b.singular_values.max();
    let v_t = svd_b.v_t.expect("requested V");
    let kept: Vec<usize> = (0..svd_b.singular_values.len())
        .filter(|&k| b_norm > 0.0 && svd_b.singular_values[k] > 1e-10 * b_norm)
        .collect();
    if kept.is_empty() {
        return GramianReport {
            t,
            n_basis,
            singular_values: Vec::new(),
            defect: f64::INFINITY,
        };
    }
    let a_norm = sorted_singular_values(a, 1)[0];
    let r = kept.len();
    let cols = a.ncols();
    let mut vr = DMatrix::zeros(cols, r);
    let mut vr_scaled = DMatrix::zeros(cols, r);
    for (c, &k) in kept.iter().enumerate() {
        for row in 0..cols {
            vr[(row, c)] = v_t[(k, row)];
            vr_scaled[(row, c)] = v_t[(k, row)] / svd_b.singular_values[k];
        }
    }
    // A restricted to ker B, then its range.
    let proj_ker = DMatrix::identity(cols, cols) - &vr * vr.transpose();
    let ak = a * proj_ker;
    let svd_k = ak.clone().svd(true, false);
    let u = svd_k.u.expect("requested U");
    let kmax = svd_k.singular_values.max();
    let basis: Vec<usize> = (0..svd_k.singular_values.len())
        .filter(|&k| kmax > 0.0 && svd_k.singular_values[k] > 1e-10 * a_norm.max(kmax))
        .collect();
    let mut target = a * vr_scaled;
    for &k in &basis {
        let uk = u.column(k);
        let coeffs = uk.transpose() * &target;
        target -= uk * coeffs;
    }
    let mut s = sorted_singular_values(&target, r);
    s.truncate(r);
    let defect = if a_norm > 0.0 {
        s[r - 1] * b_norm / a_norm
    } else {
        0.0
    };
    GramianReport {
        t,
        n_basis,
        singular_values: s,
        defect,
    }
}
