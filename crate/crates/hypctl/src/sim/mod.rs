//! Method-of-characteristics solvers, observation maps, witness data and
//! gauge transforms.

mod closed_form;
mod data;
mod engine;
mod gauge;
mod gramian;
mod solve;
mod witness;

pub use closed_form::{adjoint_semigroup_closed_form, closed_form_value};
pub use data::{CellField, Field, FnField, FnSignal, NodalField, SampledSignal, Signal, StepField};
pub use gauge::{gauge_diagonal, gauge_resonant, GaugeDirection, GaugeTransform};
pub use gramian::{
    null_control_defect, observability_defect, ObservationMap, GramianReport, MAX_BASIS,
};
pub use solve::{solve_adjoint, solve_forward, trace_l2_norm};
pub use witness::{build_witness_rank_deficient, build_witness_subcritical, SubcriticalWitness, WitnessCase};

use crate::canon::{BoundaryMatrix, CanonError};
use crate::rational::to_f64;
use crate::speeds::{SpeedError, SpeedProfile};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Speeds(#[from] SpeedError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("grid too coarse: component {component} crosses the domain in {cells:.1} time steps, need at least {min}; increase nt")]
    Coarse { component: usize, cells: f64, min: usize },
    #[error("non-finite value produced at time step {step}")]
    NonFinite { step: usize },
    #[error("basis of {n_basis} elements exceeds the dense limit {max}")]
    SizeBound { n_basis: usize, max: usize },
    #[error("no witness exists: {0}")]
    NoWitness(String),
    #[error("refused: {0}")]
    Refused(String),
}

/// Piecewise-constant `n x n` matrix function on a mesh of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    mesh: Vec<f64>,
    cells: Vec<DMatrix<f64>>,
}

impl Coupling {
    pub fn new(mesh: Vec<f64>, cells: Vec<DMatrix<f64>>) -> Result<Self, SimError> {
        let ok_mesh = mesh.len() >= 2
            && mesh[0] == 0.0
            && *mesh.last().unwrap() == 1.0
            && mesh.windows(2).all(|w| w[0] < w[1]);
        if !ok_mesh {
            return Err(SimError::Dimensions("coupling mesh must run from 0 to 1, increasing".into()));
        }
        if cells.len() + 1 != mesh.len() {
            return Err(SimError::Dimensions(format!(
                "coupling has {} cells for {} mesh points",
                cells.len(),
                mesh.len()
            )));
        }
        let n = cells[0].nrows();
        if cells.iter().any(|c| c.nrows() != n || c.ncols() != n) {
            return Err(SimError::Dimensions("coupling cells must be square and equal-sized".into()));
        }
        if cells.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(SimError::Dimensions("coupling entries must be finite".into()));
        }
        Ok(Self { mesh, cells })
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(DMatrix::zeros(n, n))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            mesh: vec![0.0, 1.0],
            cells: vec![m],
        }
    }

    /// `d_x Lambda` on the speed mesh.
    pub fn speed_derivative(profile: &SpeedProfile) -> Self {
        let n = profile.n();
        let cells = (0..profile.mesh().len() - 1)
            .map(|k| DMatrix::from_fn(n, n, |i, j| if i == j { profile.slope(i, k) } else { 0.0 }))
            .collect();
        Self {
            mesh: profile.mesh().to_vec(),
            cells,
        }
    }

    pub fn n(&self) -> usize {
        self.cells[0].nrows()
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn cells(&self) -> &[DMatrix<f64>] {
        &self.cells
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    pub fn cell_of(&self, x: f64) -> usize {
        let k = self.mesh.partition_point(|&m| m <= x);
        k.clamp(1, self.mesh.len() - 1) - 1
    }

    pub fn at(&self, x: f64) -> &DMatrix<f64> {
        &self.cells[self.cell_of(x)]
    }

    /// Both couplings expressed on the union of their meshes.
    fn merged_mesh(&self, other: &[f64]) -> Vec<f64> {
        let mut mesh: Vec<f64> = self.mesh.iter().chain(other).copied().collect();
        mesh.sort_by(f64::total_cmp);
        mesh.dedup();
        mesh
    }

    /// `-d_x Lambda + M^T`, the zero-order term of the adjoint system.
    pub fn adjoint_term(&self, profile: &SpeedProfile) -> Self {
        let mesh = self.merged_mesh(profile.mesh());
        let n = self.n();
        let cells = mesh
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let k = profile.cell_of(mid);
                let mut c = self.at(mid).transpose();
                for i in 0..n {
                    c[(i, i)] -= profile.slope(i, k);
                }
                c
            })
            .collect();
        Self { mesh, cells }
    }

    /// Max-norm distance to another coupling, compared on merged cells.
    pub fn distance(&self, other: &Coupling) -> f64 {
        let mesh = self.merged_mesh(&other.mesh);
        mesh.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (self.at(mid) - other.at(mid)).amax()
            })
            .fold(0.0, f64::max)
    }
}

/// Complete system data. `r` is always derived from `q` and the speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub profile: SpeedProfile,
    pub coupling: Coupling,
    pub q: BoundaryMatrix,
    pub r: DMatrix<f64>,
}

impl ProblemSpec {
    pub fn new(profile: SpeedProfile, coupling: Coupling, q: BoundaryMatrix) -> Result<Self, SimError> {
        let (p, m) = (profile.p(), profile.m());
        if q.p() != p || q.m() != m {
            return Err(SimError::Dimensions(format!(
                "Q is {}x{}, speeds need {}x{}",
                q.p(),
                q.m(),
                p,
                m
            )));
        }
        if coupling.n() != profile.n() {
            return Err(SimError::Dimensions(format!(
                "coupling is {0}x{0}, speeds have n = {1}",
                coupling.n(),
                profile.n()
            )));
        }
        let diag = profile.validate();
        if !diag.is_valid() {
            return Err(SpeedError::Hypotheses(diag.violations).into());
        }
        let qf = q.matrix().to_f64();
        let r = DMatrix::from_fn(p, m, |i, j| {
            -profile.values(i)[0] * qf[(i, j)] / profile.values(p + j)[0]
        });
        Ok(Self {
            profile,
            coupling,
            q,
            r,
        })
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    pub fn p(&self) -> usize {
        self.profile.p()
    }

    pub fn m(&self) -> usize {
        self.profile.m()
    }

    pub fn q_f64(&self) -> DMatrix<f64> {
        self.q.matrix().to_f64()
    }

    /// Same system with another coupling.
    pub fn with_coupling(&self, coupling: Coupling) -> Result<Self, SimError> {
        Self::new(self.profile.clone(), coupling, self.q.clone())
    }

    /// Whether the coupling equals `d_x Lambda` (max-norm below `tol`).
    pub fn coupling_is_speed_derivative(&self, tol: f64) -> bool {
        self.coupling.distance(&Coupling::speed_derivative(&self.profile)) <= tol
    }

    pub fn q_entry(&self, i: usize, j: usize) -> f64 {
        to_f64(&self.q.matrix()[(i, j)])
    }
}

/// Requested lattice sizes: `nt` time samples, `nx` space samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSize {
    pub nt: usize,
    pub nx: usize,
}

/// Space-time samples `values[(k * nx + q) * n + i]` at `t_k = k dt`,
/// `x_q = q dx`, in the original time orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTrajectory {
    pub n: usize,
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    /// `nt x n` samples at `x = 0`.
    pub left_trace: Vec<f64>,
    /// `nt x n` samples at `x = 1`.
    pub right_trace: Vec<f64>,
}

impl GridTrajectory {
    pub fn value(&self, k: usize, q: usize, i: usize) -> f64 {
        self.values[(k * self.nx + q) * self.n + i]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn x(&self, q: usize) -> f64 {
        q as f64 * self.dx
    }

    /// Snapshot at level `k` as a nodal field.
    pub fn snapshot(&self, k: usize) -> NodalField {
        let mut v = vec![0.0; self.n * self.nx];
        for q in 0..self.nx {
            for i in 0..self.n {
                v[i * self.nx + q] = self.value(k, q, i);
            }
        }
        NodalField::new(self.n, self.nx, v)
    }

    pub fn right(&self, k: usize, i: usize) -> f64 {
        self.right_trace[k * self.n + i]
    }

    pub fn left(&self, k: usize, i: usize) -> f64 {
        self.left_trace[k * self.n + i]
    }

    /// Long-format CSV: `t,x,component,value`; components 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,component,value\n");
        for k in 0..self.nt {
            for q in 0..self.nx {
                for i in 0..self.n {
                    let _ = writeln!(out, "{},{},{},{}", self.time(k), self.x(q), i + 1, self.value(k, q, i));
                }
            }
        }
        out
    }

    /// Boundary traces: `t,component,left,right`.
    pub fn traces_csv(&self) -> String {
        let mut out = String::from("t,component,left,right\n");
        for k in 0..self.nt {
            for i in 0..self.n {
                let _ = writeln!(out, "{},{},{},{}", self.time(k), i + 1, self.left(k, i), self.right(k, i));
            }
        }
        out
    }
}
