//! Characteristics-lattice marching shared by the forward and adjoint
//! solvers.
//!
//! The solution is split as `v = e + w`. The part `e` is pure transport of
//! the initial data, boundary input and boundary reflections, evaluated
//! exactly by tracing characteristics. The part `w` carries everything the
//! zero-order term produces; it starts from zero, obeys the same reflection
//! law, and lives on per-component lattices whose nodes are one time step
//! apart along the characteristic, so a step is a pure shift plus a source
//! integral (Heun, trapezoid in time).

use super::data::{Field, Signal};
use super::{Coupling, SimError};
use crate::speeds::SpeedProfile;

/// Boundary law at the inflow end of a component.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Inflow {
    Zero,
    /// Value of boundary input `j`.
    Input(usize),
    /// Linear combination of outflow values of other components.
    Reflect(Vec<(usize, f64)>),
}

#[derive(Debug, Clone)]
pub(crate) struct Dynamics {
    pub profile: SpeedProfile,
    /// `+1` when `phi_i` increases along the characteristic in time.
    pub dir: Vec<f64>,
    pub inflow: Vec<Inflow>,
    pub term: Coupling,
}

impl Dynamics {
    fn travel(&self, i: usize) -> f64 {
        self.profile.travel_time(i)
    }

    fn outflow_phi(&self, k: usize) -> f64 {
        if self.dir[k] > 0.0 {
            self.travel(k)
        } else {
            0.0
        }
    }

    /// Distance from the inflow end in `phi` units.
    fn psi_of_phi(&self, i: usize, phi: f64) -> f64 {
        if self.dir[i] > 0.0 {
            phi
        } else {
            self.travel(i) - phi
        }
    }

    fn phi_of_psi(&self, i: usize, psi: f64) -> f64 {
        if self.dir[i] > 0.0 {
            psi
        } else {
            self.travel(i) - psi
        }
    }

    /// Transport part of component `i` at time `t` and coordinate `phi`.
    pub fn exact(&self, data: &dyn Field, input: Option<&dyn Signal>, i: usize, t: f64, phi: f64) -> f64 {
        let d = self.dir[i];
        let ti = self.travel(i);
        let foot = phi - d * t;
        if (d > 0.0 && foot >= 0.0) || (d < 0.0 && foot <= ti) {
            return data.eval(i, self.profile.phi_inv_clamped(i, foot));
        }
        let s = t - self.psi_of_phi(i, phi);
        match &self.inflow[i] {
            Inflow::Zero => 0.0,
            Inflow::Input(j) => input.map_or(0.0, |u| u.eval(*j, s)),
            Inflow::Reflect(list) => list
                .iter()
                .map(|&(k, c)| c * self.exact(data, input, k, s, self.outflow_phi(k)))
                .sum(),
        }
    }
}

/// Where a point sits in every component's coordinates.
#[derive(Debug, Clone)]
struct Probe {
    phi: Vec<f64>,
    /// Per component: lower lattice index and weight of the upper node.
    interp: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Lattice {
    psi: Vec<f64>,
    /// Last node sits at the outflow end less than a full step after its
    /// predecessor.
    partial: bool,
    probes: Vec<Probe>,
    /// Predecessor of the partial outflow node.
    partial_pred: Option<Probe>,
    /// Source quadrature pieces `(theta0, theta1, cell)` for each node's
    /// incoming segment; empty for node 0.
    pieces: Vec<Vec<(f64, f64, usize)>>,
}

impl Lattice {
    fn len(&self) -> usize {
        self.psi.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Record {
    All,
    Last,
    Nothing,
}

#[derive(Debug, Clone)]
pub(crate) struct MarchResult {
    /// Recorded levels in marching order, each `nx * n` with `[q * n + i]`.
    pub levels: Vec<Vec<f64>>,
    /// Per step, the outflow values of the observed components at the
    /// half-step time `(k + 1/2) dt`.
    pub half_traces: Vec<f64>,
}

/// Precomputed geometry for a fixed time step and output grid.
pub(crate) struct Plan {
    pub dynamics: Dynamics,
    pub dt: f64,
    pub steps: usize,
    pub nx: usize,
    pub observe: Vec<usize>,
    lattices: Vec<Lattice>,
    /// Output node probes, one per `x_q`.
    outputs: Vec<Probe>,
    coupled: bool,
}

pub(crate) const MIN_CELLS: usize = 16;

impl Plan {
    pub fn new(dynamics: Dynamics, dt: f64, steps: usize, nx: usize, observe: Vec<usize>) -> Result<Self, SimError> {
        let n = dynamics.profile.n();
        for i in 0..n {
            let cells = dynamics.travel(i) / dt;
            if cells < MIN_CELLS as f64 {
                return Err(SimError::Coarse {
                    component: i,
                    cells,
                    min: MIN_CELLS,
                });
            }
        }
        let coupled = !dynamics.term.is_zero();
        let mut lattices: Vec<Lattice> = (0..n)
            .map(|i| {
                let ti = dynamics.travel(i);
                let full = (ti / dt).floor() as usize;
                let mut psi: Vec<f64> = (0..=full).map(|k| k as f64 * dt).collect();
                let gap = ti - full as f64 * dt;
                let partial = if gap > 1e-9 * dt {
                    psi.push(ti);
                    true
                } else {
                    *psi.last_mut().unwrap() = ti;
                    false
                };
                Lattice {
                    psi,
                    partial,
                    probes: Vec::new(),
                    partial_pred: None,
                    pieces: Vec::new(),
                }
            })
            .collect();
        let psi_all: Vec<Vec<f64>> = lattices.iter().map(|l| l.psi.clone()).collect();
        let probe_at = |x: f64| -> Probe {
            let phi: Vec<f64> = (0..n).map(|j| dynamics.profile.phi(j, x)).collect();
            let interp = (0..n)
                .map(|j| {
                    let psi = dynamics.psi_of_phi(j, phi[j]);
                    let nodes = &psi_all[j];
                    let k = nodes.partition_point(|&v| v <= psi).clamp(1, nodes.len() - 1) - 1;
                    let w = ((psi - nodes[k]) / (nodes[k + 1] - nodes[k])).clamp(0.0, 1.0);
                    (k, w)
                })
                .collect();
            Probe { phi, interp }
        };
        let dx = 1.0 / (nx - 1) as f64;
        let outputs = (0..nx).map(|q| probe_at(q as f64 * dx)).collect();
        if coupled {
            let breaks = dynamics.term.mesh().to_vec();
            for (i, lat) in lattices.iter_mut().enumerate() {
                let prof = &dynamics.profile;
                let to_x = |psi: f64| prof.phi_inv_clamped(i, dynamics.phi_of_psi(i, psi));
                lat.probes = lat.psi.iter().map(|&s| probe_at(to_x(s))).collect();
                let ti = dynamics.travel(i);
                if lat.partial {
                    lat.partial_pred = Some(probe_at(to_x(ti - dt)));
                }
                let break_psi: Vec<f64> = breaks
                    .iter()
                    .map(|&b| dynamics.psi_of_phi(i, prof.phi(i, b)))
                    .collect();
                let len = lat.psi.len();
                lat.pieces = (0..len)
                    .map(|k| {
                        if k == 0 {
                            return Vec::new();
                        }
                        let a = if lat.partial && k == len - 1 { ti - dt } else { lat.psi[k - 1] };
                        let b = lat.psi[k];
                        let mut cuts: Vec<f64> = break_psi
                            .iter()
                            .filter(|&&s| s > a && s < b)
                            .map(|&s| (s - a) / (b - a))
                            .collect();
                        cuts.sort_by(f64::total_cmp);
                        let mut thetas = vec![0.0];
                        thetas.extend(cuts);
                        thetas.push(1.0);
                        thetas
                            .windows(2)
                            .map(|w| {
                                let mid = a + 0.5 * (w[0] + w[1]) * (b - a);
                                (w[0], w[1], dynamics.term.cell_of(to_x(mid)))
                            })
                            .collect()
                    })
                    .collect();
            }
        }
        Ok(Self {
            dynamics,
            dt,
            steps,
            nx,
            observe,
            lattices,
            outputs,
            coupled,
        })
    }

    fn w_at(&self, w: &[Vec<f64>], j: usize, probe: &Probe) -> f64 {
        let (k, a) = probe.interp[j];
        let row = &w[j];
        row[k] * (1.0 - a) + row[k + 1] * a
    }

    /// Full state vector at a probe.
    fn state(&self, data: &dyn Field, input: Option<&dyn Signal>, t: f64, w: &[Vec<f64>], probe: &Probe, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let e = self.dynamics.exact(data, input, j, t, probe.phi[j]);
            *o = if self.coupled { e + self.w_at(w, j, probe) } else { e };
        }
    }

    fn apply_inflow(&self, w: &mut [Vec<f64>]) {
        for i in 0..w.len() {
            w[i][0] = match &self.dynamics.inflow[i] {
                Inflow::Reflect(list) => list.iter().map(|&(k, c)| c * *w[k].last().unwrap()).sum(),
                _ => 0.0,
            };
        }
    }

    fn record_level(&self, data: &dyn Field, input: Option<&dyn Signal>, t: f64, w: &[Vec<f64>]) -> Vec<f64> {
        let n = self.dynamics.profile.n();
        let mut out = vec![0.0; self.nx * n];
        for (q, probe) in self.outputs.iter().enumerate() {
            for i in 0..n {
                let mut v = self.dynamics.exact(data, input, i, t, probe.phi[i]);
                if self.coupled {
                    v += self.w_at(w, i, probe);
                }
                out[q * n + i] = v;
            }
        }
        out
    }

    pub fn run(&self, data: &dyn Field, input: Option<&dyn Signal>, record: Record) -> Result<MarchResult, SimError> {
        let n = self.dynamics.profile.n();
        let dt = self.dt;
        let mut w: Vec<Vec<f64>> = self.lattices.iter().map(|l| vec![0.0; l.len()]).collect();
        let mut levels = Vec::new();
        if record == Record::All || (record == Record::Last && self.steps == 0) {
            levels.push(self.record_level(data, input, 0.0, &w));
        }
        let mut half_traces = Vec::with_capacity(self.steps * self.observe.len());
        // Scratch: state at every node at the old level, then the predicted
        // state at the new level.
        let mut z_old: Vec<Vec<f64>> = self.lattices.iter().map(|l| vec![0.0; l.len() * n]).collect();
        let mut z_pred_partial: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
        let mut z_new: Vec<Vec<f64>> = z_old.clone();
        let mut w_start: Vec<Vec<f64>> = w.clone();
        let mut w_star: Vec<Vec<f64>> = w.clone();
        for step in 0..self.steps {
            let t0 = step as f64 * dt;
            let t1 = (step + 1) as f64 * dt;
            if self.coupled {
                for (i, lat) in self.lattices.iter().enumerate() {
                    for (k, probe) in lat.probes.iter().enumerate() {
                        self.state(data, input, t0, &w, probe, &mut z_old[i][k * n..(k + 1) * n]);
                    }
                    if let Some(pp) = &lat.partial_pred {
                        let mut buf = vec![0.0; n];
                        self.state(data, input, t0, &w, pp, &mut buf);
                        z_pred_partial[i] = buf;
                    }
                }
                // Predictor.
                for (i, lat) in self.lattices.iter().enumerate() {
                    let len = lat.len();
                    for k in 1..len {
                        let (w0, zp): (f64, &[f64]) = if lat.partial && k == len - 1 {
                            let pp = lat.partial_pred.as_ref().unwrap();
                            (self.w_at(&w, i, pp), &z_pred_partial[i])
                        } else {
                            (w[i][k - 1], &z_old[i][(k - 1) * n..k * n])
                        };
                        let mut src = 0.0;
                        for &(a, b, cell) in &lat.pieces[k] {
                            let row = self.dynamics.term.cells()[cell].row(i);
                            src += (b - a) * row.iter().zip(zp).map(|(c, z)| c * z).sum::<f64>();
                        }
                        w_start[i][k] = w0;
                        w_star[i][k] = w0 + dt * src;
                    }
                }
                self.apply_inflow(&mut w_star);
                // Corrector.
                for (i, lat) in self.lattices.iter().enumerate() {
                    for (k, probe) in lat.probes.iter().enumerate().skip(1) {
                        self.state(data, input, t1, &w_star, probe, &mut z_new[i][k * n..(k + 1) * n]);
                    }
                }
                let w_prev_out: Vec<f64> = w.iter().map(|r| *r.last().unwrap()).collect();
                for (i, lat) in self.lattices.iter().enumerate() {
                    let len = lat.len();
                    for k in 1..len {
                        let zp: &[f64] = if lat.partial && k == len - 1 {
                            &z_pred_partial[i]
                        } else {
                            &z_old[i][(k - 1) * n..k * n]
                        };
                        let zn = &z_new[i][k * n..(k + 1) * n];
                        let mut src = 0.0;
                        for &(a, b, cell) in &lat.pieces[k] {
                            let row = self.dynamics.term.cells()[cell].row(i);
                            let mut acc = 0.0;
                            for j in 0..n {
                                let za = zp[j] + a * (zn[j] - zp[j]);
                                let zb = zp[j] + b * (zn[j] - zp[j]);
                                acc += row[j] * (za + zb);
                            }
                            src += 0.5 * (b - a) * acc;
                        }
                        w[i][k] = w_start[i][k] + dt * src;
                    }
                }
                self.apply_inflow(&mut w);
                if w.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(SimError::NonFinite { step: step + 1 });
                }
                for &i in &self.observe {
                    let th = t0 + 0.5 * dt;
                    let e = self.dynamics.exact(data, input, i, th, self.dynamics.outflow_phi(i));
                    half_traces.push(e + 0.5 * (w_prev_out[i] + *w[i].last().unwrap()));
                }
            } else {
                for &i in &self.observe {
                    let th = t0 + 0.5 * dt;
                    half_traces.push(self.dynamics.exact(data, input, i, th, self.dynamics.outflow_phi(i)));
                }
            }
            if record == Record::All || (record == Record::Last && step + 1 == self.steps) {
                let level = self.record_level(data, input, t1, &w);
                if level.iter().any(|v| !v.is_finite()) {
                    return Err(SimError::NonFinite { step: step + 1 });
                }
                levels.push(level);
            }
        }
        Ok(MarchResult {
            levels,
            half_traces,
        })
    }
}
