//! Data sources fed to the solvers: fields on `[0, 1]` and boundary signals.

use std::sync::Arc;

/// Vector-valued function of `x` on `[0, 1]`, evaluated componentwise.
pub trait Field: Sync {
    fn n(&self) -> usize;
    fn eval(&self, i: usize, x: f64) -> f64;
}

/// Vector-valued function of time on the controlled boundary.
pub trait Signal: Sync {
    fn m(&self) -> usize;
    fn eval(&self, j: usize, t: f64) -> f64;
}

/// Samples on the uniform grid `x_q = q / (nx - 1)`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    n: usize,
    nx: usize,
    values: Vec<f64>,
}

impl NodalField {
    /// `values[i * nx + q]`.
    pub fn new(n: usize, nx: usize, values: Vec<f64>) -> Self {
        assert!(nx >= 2 && values.len() == n * nx, "bad nodal field shape");
        Self { n, nx, values }
    }

    pub fn sample(field: &dyn Field, nx: usize) -> Self {
        let n = field.n();
        let dx = 1.0 / (nx - 1) as f64;
        let values = (0..n)
            .flat_map(|i| (0..nx).map(move |q| (i, q as f64 * dx)))
            .map(|(i, x)| field.eval(i, x))
            .collect();
        Self { n, nx, values }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.values[i * self.nx..(i + 1) * self.nx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoidal L2 norm over all components.
    pub fn l2_norm(&self) -> f64 {
        let dx = 1.0 / (self.nx - 1) as f64;
        (0..self.n)
            .map(|i| trapezoid_sq(self.component(i), dx))
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn trapezoid_sq(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    let inner: f64 = v.iter().map(|a| a * a).sum();
    h * (inner - 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]))
}

impl Field for NodalField {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, i: usize, x: f64) -> f64 {
        let cells = (self.nx - 1) as f64;
        let s = (x.clamp(0.0, 1.0) * cells).min(cells);
        let k = (s.floor() as usize).min(self.nx - 2);
        let w = s - k as f64;
        let row = self.component(i);
        row[k] * (1.0 - w) + row[k + 1] * w
    }
}

/// Piecewise constant on `ncell` uniform cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    n: usize,
    ncell: usize,
    values: Vec<f64>,
}

impl CellField {
    /// `values[i * ncell + k]`.
    pub fn new(n: usize, ncell: usize, values: Vec<f64>) -> Self {
        assert!(ncell >= 1 && values.len() == n * ncell, "bad cell field shape");
        Self { n, ncell, values }
    }

    /// Cell-midpoint sampling.
    pub fn sample(field: &dyn Field, ncell: usize) -> Self {
        let n = field.n();
        let h = 1.0 / ncell as f64;
        let values = (0..n)
            .flat_map(|i| (0..ncell).map(move |k| (i, (k as f64 + 0.5) * h)))
            .map(|(i, x)| field.eval(i, x))
            .collect();
        Self { n, ncell, values }
    }

    /// Indicator of one cell of one component, scaled to unit L2 norm.
    pub fn unit_indicator(n: usize, ncell: usize, i: usize, k: usize) -> Self {
        let mut values = vec![0.0; n * ncell];
        values[i * ncell + k] = (ncell as f64).sqrt();
        Self { n, ncell, values }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.ncell as f64).sqrt()
    }
}

impl Field for CellField {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, i: usize, x: f64) -> f64 {
        let k = ((x * self.ncell as f64).floor().max(0.0) as usize).min(self.ncell - 1);
        self.values[i * self.ncell + k]
    }
}

/// Exact piecewise-constant data on open intervals, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepField {
    /// Per component: `(a, b, value)` on `(a, b)`.
    pub pieces: Vec<Vec<(f64, f64, f64)>>,
}

impl StepField {
    pub fn zeros(n: usize) -> Self {
        Self {
            pieces: vec![Vec::new(); n],
        }
    }

    pub fn push(&mut self, i: usize, a: f64, b: f64, value: f64) {
        if b > a && value != 0.0 {
            self.pieces[i].push((a, b, value));
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.pieces
            .iter()
            .flatten()
            .map(|(a, b, v)| (b - a) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(Vec::is_empty)
    }
}

impl Field for StepField {
    fn n(&self) -> usize {
        self.pieces.len()
    }

    fn eval(&self, i: usize, x: f64) -> f64 {
        self.pieces[i]
            .iter()
            .filter(|(a, b, _)| *a < x && x < *b)
            .map(|(_, _, v)| v)
            .sum()
    }
}

/// Closure-backed field, mostly for analytic test data.
#[derive(Clone)]
pub struct FnField {
    n: usize,
    f: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
}

impl FnField {
    pub fn new(n: usize, f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f) }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, |_, _| 0.0)
    }
}

impl Field for FnField {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, i: usize, x: f64) -> f64 {
        (self.f)(i, x)
    }
}

/// Time samples `t_k = k * t_end / (nt - 1)`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    m: usize,
    nt: usize,
    t_end: f64,
    values: Vec<f64>,
}

impl SampledSignal {
    /// `values[j * nt + k]`.
    pub fn new(m: usize, nt: usize, t_end: f64, values: Vec<f64>) -> Self {
        assert!(nt >= 2 && values.len() == m * nt && t_end > 0.0, "bad signal shape");
        Self { m, nt, t_end, values }
    }

    pub fn zeros(m: usize, nt: usize, t_end: f64) -> Self {
        Self::new(m, nt, t_end, vec![0.0; m * nt])
    }
}

impl Signal for SampledSignal {
    fn m(&self) -> usize {
        self.m
    }

    fn eval(&self, j: usize, t: f64) -> f64 {
        let cells = (self.nt - 1) as f64;
        let s = (t / self.t_end).clamp(0.0, 1.0) * cells;
        let k = (s.floor() as usize).min(self.nt - 2);
        let w = s - k as f64;
        let row = &self.values[j * self.nt..(j + 1) * self.nt];
        row[k] * (1.0 - w) + row[k + 1] * w
    }
}

#[derive(Clone)]
pub struct FnSignal {
    m: usize,
    f: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
}

impl FnSignal {
    pub fn new(m: usize, f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { m, f: Arc::new(f) }
    }
}

impl Signal for FnSignal {
    fn m(&self) -> usize {
        self.m
    }

    fn eval(&self, j: usize, t: f64) -> f64 {
        (self.f)(j, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_interpolation_is_linear() {
        let f = NodalField::new(1, 3, vec![0.0, 1.0, 4.0]);
        assert_eq!(f.eval(0, 0.25), 0.5);
        assert_eq!(f.eval(0, 0.75), 2.5);
        assert_eq!(f.eval(0, 1.0), 4.0);
    }

    #[test]
    fn unit_indicator_has_unit_norm() {
        let f = CellField::unit_indicator(2, 8, 1, 3);
        assert!((f.l2_norm() - 1.0).abs() < 1e-15);
        assert_eq!(f.eval(1, 0.4), 8f64.sqrt());
        assert_eq!(f.eval(0, 0.4), 0.0);
    }

    #[test]
    fn step_field_norm() {
        let mut f = StepField::zeros(2);
        f.push(1, 0.5, 1.0, 2.0);
        assert!((f.l2_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.eval(1, 0.5), 0.0);
        assert_eq!(f.eval(1, 0.7), 2.0);
    }
}
