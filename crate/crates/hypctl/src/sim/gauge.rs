//! Changes of unknowns `y~ = Psi(x) y` with `Psi` commuting with `Lambda`
//! and `Psi(0) = I`, which map the system with coupling `M` to the one with
//! `M~ = (Psi M - Lambda Psi') Psi^{-1}` and boundary input `Gamma u`.

use super::data::{Field, NodalField, Signal};
use super::{Coupling, ProblemSpec, SimError};
use crate::speeds::SpeedProfile;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeDirection {
    /// From `M = 0` to `M = d_x Lambda`: `Psi_i = lambda_i(0) / lambda_i(x)`.
    ZeroToDerivative,
    /// From `M = d_x Lambda` to `M = 0`.
    DerivativeToZero,
}

#[derive(Debug, Clone)]
enum Kind {
    Diagonal {
        profile: SpeedProfile,
        direction: GaugeDirection,
    },
    /// `Psi` and `Psi'` (one-sided, per refined cell) at the refined nodes.
    Resonant {
        nodes: Vec<f64>,
        psi: Vec<DMatrix<f64>>,
        dpsi_right: Vec<DMatrix<f64>>,
        dpsi_left: Vec<DMatrix<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct GaugeTransform {
    kind: Kind,
    /// Transformed coupling.
    pub m_tilde: Coupling,
    /// Positive-speed block of `Psi(1)`, applied to the boundary input.
    pub gamma: DMatrix<f64>,
    /// Index groups on which `Psi` is block diagonal.
    pub blocks: Vec<Vec<usize>>,
    n: usize,
    p: usize,
}

impl GaugeTransform {
    pub fn psi_at(&self, x: f64) -> DMatrix<f64> {
        match &self.kind {
            Kind::Diagonal { profile, direction } => DMatrix::from_fn(self.n, self.n, |i, j| {
                if i != j {
                    return 0.0;
                }
                let ratio = profile.values(i)[0] / profile.speed(i, x);
                match direction {
                    GaugeDirection::ZeroToDerivative => ratio,
                    GaugeDirection::DerivativeToZero => 1.0 / ratio,
                }
            }),
            Kind::Resonant {
                nodes,
                psi,
                dpsi_right,
                dpsi_left,
            } => {
                let x = x.clamp(0.0, 1.0);
                let k = nodes.partition_point(|&v| v <= x).clamp(1, nodes.len() - 1) - 1;
                let h = nodes[k + 1] - nodes[k];
                let s = (x - nodes[k]) / h;
                // Cubic Hermite with one-sided derivatives inside cell k.
                let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
                let h10 = s.powi(3) - 2.0 * s * s + s;
                let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
                let h11 = s.powi(3) - s * s;
                &psi[k] * h00 + &dpsi_right[k] * (h10 * h) + &psi[k + 1] * h01 + &dpsi_left[k] * (h11 * h)
            }
        }
    }

    /// `Psi f` sampled on `nx` nodes.
    pub fn map_field(&self, field: &dyn Field, nx: usize) -> NodalField {
        let dx = 1.0 / (nx - 1) as f64;
        let mut values = vec![0.0; self.n * nx];
        for q in 0..nx {
            let x = q as f64 * dx;
            let psi = self.psi_at(x);
            let f: Vec<f64> = (0..self.n).map(|j| field.eval(j, x)).collect();
            for i in 0..self.n {
                values[i * nx + q] = (0..self.n).map(|j| psi[(i, j)] * f[j]).sum();
            }
        }
        NodalField::new(self.n, nx, values)
    }

    /// `Gamma u`.
    pub fn map_signal<'a>(&'a self, u: &'a dyn Signal) -> GaugedSignal<'a> {
        GaugedSignal { gamma: &self.gamma, u }
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

pub struct GaugedSignal<'a> {
    gamma: &'a DMatrix<f64>,
    u: &'a dyn Signal,
}

impl Signal for GaugedSignal<'_> {
    fn m(&self) -> usize {
        self.gamma.nrows()
    }

    fn eval(&self, j: usize, t: f64) -> f64 {
        (0..self.gamma.ncols()).map(|k| self.gamma[(j, k)] * self.u.eval(k, t)).sum()
    }
}

/// Diagonal gauge between the `M = 0` and `M = d_x Lambda` systems.
pub fn gauge_diagonal(profile: &SpeedProfile, direction: GaugeDirection) -> GaugeTransform {
    let (n, p) = (profile.n(), profile.p());
    let m_tilde = match direction {
        GaugeDirection::ZeroToDerivative => Coupling::speed_derivative(profile),
        GaugeDirection::DerivativeToZero => Coupling::zero(n),
    };
    let g = GaugeTransform {
        kind: Kind::Diagonal {
            profile: profile.clone(),
            direction,
        },
        m_tilde,
        gamma: DMatrix::zeros(0, 0),
        blocks: (0..n).map(|i| vec![i]).collect(),
        n,
        p,
    };
    let psi1 = g.psi_at(1.0);
    let gamma = psi1.view((p, p), (n - p, n - p)).into_owned();
    GaugeTransform { gamma, ..g }
}

/// Block gauge over the resonance classes. Each block solves
/// `Psi' = (Psi M_kk - lambda' Psi) / lambda`, `Psi(0) = I`, with classical
/// RK4 on a mesh refining both the speed and coupling meshes `refine` times.
/// `M~` is piecewise constant on that mesh, sampled at cell midpoints.
pub fn gauge_resonant(spec: &ProblemSpec, refine: usize) -> Result<GaugeTransform, SimError> {
    let prof = &spec.profile;
    let diag = prof.validate();
    if let Some((i, j, x)) = diag.resonance.offending {
        return Err(SimError::Refused(format!(
            "speeds {} and {} agree at x = {x} but not everywhere",
            i + 1,
            j + 1
        )));
    }
    let (n, p) = (spec.n(), spec.p());
    let blocks = diag.resonance.classes.clone();
    let refine = refine.max(1);
    let mut base: Vec<f64> = prof.mesh().iter().chain(spec.coupling.mesh()).copied().collect();
    base.sort_by(f64::total_cmp);
    base.dedup();
    let mut nodes = vec![0.0];
    for w in base.windows(2) {
        for s in 1..=refine {
            nodes.push(if s == refine { w[1] } else { w[0] + (w[1] - w[0]) * s as f64 / refine as f64 });
        }
    }
    const SUBSTEPS: usize = 8;
    let rhs = |psi: &DMatrix<f64>, x: f64, cell_mid: f64| -> DMatrix<f64> {
        let m = spec.coupling.at(cell_mid);
        let k = prof.cell_of(cell_mid);
        let mut out = DMatrix::zeros(n, n);
        for block in &blocks {
            let lead = block[0];
            let lam = prof.speed(lead, x);
            let dlam = prof.slope(lead, k);
            for &a in block {
                for &b in block {
                    let pm: f64 = block.iter().map(|&c| psi[(a, c)] * m[(c, b)]).sum();
                    out[(a, b)] = (pm - dlam * psi[(a, b)]) / lam;
                }
            }
        }
        out
    };
    let cells = nodes.len() - 1;
    let mut psi = vec![DMatrix::identity(n, n)];
    let mut dpsi_right = Vec::with_capacity(cells);
    let mut dpsi_left = Vec::with_capacity(cells);
    let mut m_cells = Vec::with_capacity(cells);
    for k in 0..cells {
        let (x0, x1) = (nodes[k], nodes[k + 1]);
        let mid = 0.5 * (x0 + x1);
        let h = (x1 - x0) / SUBSTEPS as f64;
        let mut y = psi[k].clone();
        let mut at_mid = None;
        for s in 0..SUBSTEPS {
            let x = x0 + s as f64 * h;
            let k1 = rhs(&y, x, mid);
            let k2 = rhs(&(&y + &k1 * (0.5 * h)), x + 0.5 * h, mid);
            let k3 = rhs(&(&y + &k2 * (0.5 * h)), x + 0.5 * h, mid);
            let k4 = rhs(&(&y + &k3 * h), x + h, mid);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if s + 1 == SUBSTEPS / 2 {
                at_mid = Some(y.clone());
            }
        }
        dpsi_right.push(rhs(&psi[k], x0, mid));
        dpsi_left.push(rhs(&y, x1, mid));
        let psi_mid = at_mid.expect("even substep count");
        let dpsi_mid = rhs(&psi_mid, mid, mid);
        let inv = psi_mid
            .clone()
            .try_inverse()
            .ok_or_else(|| SimError::Refused(format!("gauge matrix singular near x = {mid}")))?;
        let lam = DMatrix::from_fn(n, n, |i, j| if i == j { prof.speed(i, mid) } else { 0.0 });
        let mt = (&psi_mid * spec.coupling.at(mid) - lam * dpsi_mid) * inv;
        m_cells.push(mt);
        psi.push(y);
    }
    let m_tilde = Coupling::new(nodes.clone(), m_cells)?;
    let gamma = psi[cells].view((p, p), (n - p, n - p)).into_owned();
    Ok(GaugeTransform {
        kind: Kind::Resonant {
            nodes,
            psi,
            dpsi_right,
            dpsi_left,
        },
        m_tilde,
        gamma,
        blocks,
        n,
        p,
    })
}
