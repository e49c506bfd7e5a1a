//! Piecewise-linear speed profiles, travel times and characteristics.
//!
//! Components are indexed from 0: indices `0..p` carry negative speeds,
//! `p..n` positive ones.

use crate::rational::{rational_from_f64, Rational};
use num_traits::One;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeedError {
    #[error("mesh must start at 0, end at 1 and be strictly increasing")]
    Mesh,
    #[error("need at least one negative and one positive speed (p = {p}, n = {n})")]
    Split { p: usize, n: usize },
    #[error("component {component} has {found} values, mesh has {expected} points")]
    Length {
        component: usize,
        expected: usize,
        found: usize,
    },
    #[error("component {component} is not finite at x = {x}")]
    NonFinite { component: usize, x: f64 },
    #[error("component {component} vanishes or changes sign (at x = {x})")]
    Vanishing { component: usize, x: f64 },
    #[error("profile violates the standing hypotheses: {0:?}")]
    Hypotheses(Vec<Violation>),
    #[error("duration {s} outside [0, {t}] for component {component}")]
    Domain { component: usize, s: f64, t: f64 },
}

/// A violated sign or ordering hypothesis, with a witness breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Component declared negative (or positive) has the wrong sign.
    Sign { component: usize, x: f64 },
    /// `lambda_lower > lambda_upper` although the pattern requires `<=`.
    Order { lower: usize, upper: usize, x: f64 },
}

/// Partition of the components into groups of identical speed functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceClasses {
    pub classes: Vec<Vec<usize>>,
    /// Hypothesis "agree somewhere implies agree everywhere".
    pub satisfied: bool,
    /// First pair that agrees at some breakpoint but not at all of them.
    pub offending: Option<(usize, usize, f64)>,
}

impl ResonanceClasses {
    pub fn class_of(&self, i: usize) -> &[usize] {
        self.classes
            .iter()
            .find(|c| c.contains(&i))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
    pub resonance: ResonanceClasses,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimes {
    pub t: Vec<f64>,
    /// Exact values `1/|lambda_i|` when every speed is constant.
    pub exact: Option<Vec<Rational>>,
}

/// Which time orientation the characteristic follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `d_t y = Lambda d_x y`: negative speeds travel to the right.
    Forward,
    /// `d_t z = -Lambda d_x z`: negative speeds travel to the left.
    Adjoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    /// Position at the requested parameter, `None` outside `[s_in, s_out]`.
    pub position: Option<f64>,
    pub s_in: f64,
    pub s_out: f64,
}

/// Diagonal speed matrix as `n` continuous piecewise-linear functions on a
/// shared mesh of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    p: usize,
    mesh: Vec<f64>,
    values: Vec<Vec<f64>>,
    /// `phi_i` at each breakpoint.
    phi_nodes: Vec<Vec<f64>>,
}

impl SpeedProfile {
    /// Structural construction. Each component must keep a strict sign on
    /// `[0, 1]`; whether that sign matches the declared split is left to
    /// [`SpeedProfile::validate`].
    pub fn new(p: usize, mesh: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, SpeedError> {
        let n = values.len();
        if mesh.len() < 2
            || mesh[0] != 0.0
            || *mesh.last().unwrap() != 1.0
            || mesh.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(SpeedError::Mesh);
        }
        if p == 0 || p >= n {
            return Err(SpeedError::Split { p, n });
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != mesh.len() {
                return Err(SpeedError::Length {
                    component: i,
                    expected: mesh.len(),
                    found: v.len(),
                });
            }
            for (k, &val) in v.iter().enumerate() {
                if !val.is_finite() {
                    return Err(SpeedError::NonFinite { component: i, x: mesh[k] });
                }
                if val == 0.0 || val.signum() != v[0].signum() {
                    return Err(SpeedError::Vanishing { component: i, x: mesh[k] });
                }
            }
        }
        let phi_nodes = values
            .iter()
            .map(|v| {
                let mut acc = vec![0.0];
                for k in 0..mesh.len() - 1 {
                    let h = mesh[k + 1] - mesh[k];
                    let prev = *acc.last().unwrap();
                    acc.push(prev + piece_phi(v[k].abs(), v[k + 1].abs(), h, h));
                }
                acc
            })
            .collect();
        Ok(Self {
            p,
            mesh,
            values,
            phi_nodes,
        })
    }

    /// Constant speeds.
    pub fn constant(p: usize, speeds: &[f64]) -> Result<Self, SpeedError> {
        Self::new(p, vec![0.0, 1.0], speeds.iter().map(|&s| vec![s, s]).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.values.len() - self.p
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn values(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|&x| x == v[0]))
    }

    /// Index of the mesh cell containing `x` (the last cell for `x = 1`).
    pub fn cell_of(&self, x: f64) -> usize {
        let k = self.mesh.partition_point(|&m| m <= x);
        k.clamp(1, self.mesh.len() - 1) - 1
    }

    /// `lambda_i(x)`.
    pub fn speed(&self, i: usize, x: f64) -> f64 {
        let k = self.cell_of(x);
        let (x0, x1) = (self.mesh[k], self.mesh[k + 1]);
        let (v0, v1) = (self.values[i][k], self.values[i][k + 1]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Derivative of `lambda_i` on mesh cell `k`.
    pub fn slope(&self, i: usize, k: usize) -> f64 {
        (self.values[i][k + 1] - self.values[i][k]) / (self.mesh[k + 1] - self.mesh[k])
    }

    /// Sign and ordering hypotheses, plus the resonance partition.
    pub fn validate(&self) -> Diagnostics {
        let mut violations = Vec::new();
        let n = self.n();
        for i in 0..n {
            let want_negative = i < self.p;
            if let Some(k) = (0..self.mesh.len()).find(|&k| (self.values[i][k] < 0.0) != want_negative) {
                violations.push(Violation::Sign { component: i, x: self.mesh[k] });
            }
        }
        for i in 0..n - 1 {
            if i + 1 == self.p {
                continue;
            }
            if let Some(k) =
                (0..self.mesh.len()).find(|&k| self.values[i][k] > self.values[i + 1][k])
            {
                violations.push(Violation::Order {
                    lower: i,
                    upper: i + 1,
                    x: self.mesh[k],
                });
            }
        }
        Diagnostics {
            violations,
            resonance: self.resonance_classes(),
        }
    }

    fn resonance_classes(&self) -> ResonanceClasses {
        let n = self.n();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            match classes.iter_mut().find(|c| self.values[c[0]] == self.values[i]) {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        let mut offending = None;
        'outer: for i in 0..n {
            for j in i + 1..n {
                if self.values[i] == self.values[j] {
                    continue;
                }
                if let Some(k) = (0..self.mesh.len()).find(|&k| self.values[i][k] == self.values[j][k]) {
                    offending = Some((i, j, self.mesh[k]));
                    break 'outer;
                }
            }
        }
        ResonanceClasses {
            classes,
            satisfied: offending.is_none(),
            offending,
        }
    }

    fn require_valid(&self) -> Result<(), SpeedError> {
        let d = self.validate();
        if d.is_valid() {
            Ok(())
        } else {
            Err(SpeedError::Hypotheses(d.violations))
        }
    }

    /// `T_i = int_0^1 1/|lambda_i|`, closed form per linear piece.
    pub fn travel_times(&self) -> Result<TravelTimes, SpeedError> {
        self.require_valid()?;
        let t = self.phi_nodes.iter().map(|phi| *phi.last().unwrap()).collect();
        let exact = if self.is_constant() {
            self.values
                .iter()
                .map(|v| rational_from_f64(v[0].abs()).map(|r| Rational::one() / r))
                .collect()
        } else {
            None
        };
        Ok(TravelTimes { t, exact })
    }

    /// `T_i` without the hypothesis check.
    pub fn travel_time(&self, i: usize) -> f64 {
        *self.phi_nodes[i].last().unwrap()
    }

    /// `phi_i(x) = int_0^x 1/|lambda_i|`; `x` is clamped to `[0, 1]`.
    pub fn phi(&self, i: usize, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = self.mesh.partition_point(|&m| m <= x) - 1;
        let nodes = &self.phi_nodes[i];
        if k + 1 == self.mesh.len() {
            return nodes[k];
        }
        let h = self.mesh[k + 1] - self.mesh[k];
        let v = &self.values[i];
        nodes[k] + piece_phi(v[k].abs(), v[k + 1].abs(), h, x - self.mesh[k])
    }

    /// Inverse of `phi_i`, with a domain check.
    pub fn phi_inv(&self, i: usize, s: f64) -> Result<f64, SpeedError> {
        let t = self.travel_time(i);
        if !(0.0..=t).contains(&s) {
            return Err(SpeedError::Domain { component: i, s, t });
        }
        Ok(self.phi_inv_clamped(i, s))
    }

    /// Inverse of `phi_i` with `s` clamped to `[0, T_i]`.
    pub fn phi_inv_clamped(&self, i: usize, s: f64) -> f64 {
        let nodes = &self.phi_nodes[i];
        let t = *nodes.last().unwrap();
        if s <= 0.0 {
            return 0.0;
        }
        if s >= t {
            return 1.0;
        }
        let k = nodes.partition_point(|&v| v <= s) - 1;
        let h = self.mesh[k + 1] - self.mesh[k];
        let v = &self.values[i];
        let a = v[k].abs();
        let b = (v[k + 1].abs() - a) / h;
        let ds = s - nodes[k];
        let xi = if b == 0.0 { a * ds } else { a * (b * ds).exp_m1() / b };
        (self.mesh[k] + xi.clamp(0.0, h)).min(self.mesh[k + 1])
    }

    /// Direction of travel in `phi`-coordinates: `+1` when `phi` increases
    /// along the characteristic as time advances.
    pub fn direction(&self, i: usize, convention: Convention) -> f64 {
        match (convention, i < self.p) {
            (Convention::Forward, true) | (Convention::Adjoint, false) => 1.0,
            _ => -1.0,
        }
    }

    /// Characteristic of component `i` through `(t, x)`, evaluated at `s`,
    /// with the times it enters and leaves the domain. It is affine in
    /// `phi`: `phi(chi(s)) = phi(x) + d (s - t)`.
    pub fn characteristic(
        &self,
        i: usize,
        t: f64,
        x: f64,
        s: f64,
        convention: Convention,
    ) -> Characteristic {
        let d = self.direction(i, convention);
        let ti = self.travel_time(i);
        let fx = self.phi(i, x);
        let (s_in, s_out) = if d > 0.0 {
            (t - fx, t + ti - fx)
        } else {
            (t - (ti - fx), t + fx)
        };
        let position = (s_in..=s_out)
            .contains(&s)
            .then(|| self.phi_inv_clamped(i, fx + d * (s - t)));
        Characteristic {
            position,
            s_in,
            s_out,
        }
    }
}

/// `int_0^xi 1/(a + b t) dt` on a piece of length `h` where `|lambda|` goes
/// from `a` to `a_end`.
fn piece_phi(a: f64, a_end: f64, h: f64, xi: f64) -> f64 {
    let b = (a_end - a) / h;
    if b == 0.0 {
        xi / a
    } else {
        (b * xi / a).ln_1p() / b
    }
}
