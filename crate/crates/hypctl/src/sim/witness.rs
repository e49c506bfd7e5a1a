//! Final data whose adjoint trace vanishes on `(0, T)` below the minimal
//! time.

use super::data::StepField;
use super::{ProblemSpec, SimError};
use crate::canon::{self, CanonError};
use crate::mintime;
use crate::rational::{rational_from_f64, to_f64, RatMatrix, Rational};
use num_traits::{One, Zero};

fn lambda0(spec: &ProblemSpec) -> Vec<Rational> {
    (0..spec.n())
        .map(|i| rational_from_f64(spec.profile.values(i)[0]).expect("finite speed"))
        .collect()
}

/// Exact `R = -Lambda_+(0) Q Lambda_-(0)^{-1}`.
fn r_exact(spec: &ProblemSpec, lam: &[Rational]) -> RatMatrix {
    let (p, m) = (spec.p(), spec.m());
    let q = spec.q.matrix();
    let mut r = RatMatrix::zeros(p, m);
    for i in 0..p {
        for j in 0..m {
            r[(i, j)] = -(&lam[i] * &q[(i, j)]) / &lam[p + j];
        }
    }
    r
}

/// `z1_i = eta_i` on `(0, phi_i^{-1}(T_1))` for the negative-speed
/// components, with `R^T eta = 0`. Independent of the horizon.
pub fn build_witness_rank_deficient(spec: &ProblemSpec) -> Result<StepField, SimError> {
    let p = spec.p();
    let rank = canon::rank(&spec.q);
    if rank == p {
        return Err(SimError::NoWitness("rank Q = p, the kernel of R^T is trivial".into()));
    }
    let lam = lambda0(spec);
    let eta = r_exact(spec, &lam)
        .transpose()
        .kernel_basis()
        .into_iter()
        .next()
        .ok_or_else(|| SimError::NoWitness("kernel of R^T is trivial".into()))?;
    let t1 = spec.profile.travel_time(0);
    let mut z = StepField::zeros(spec.n());
    for (i, e) in eta.iter().enumerate() {
        z.push(i, 0.0, spec.profile.phi_inv_clamped(i, t1), to_f64(e));
    }
    Ok(z)
}

/// Which construction produced a subcritical witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessCase {
    /// `T < T_p`: the slowest negative component never reaches `x = 0`.
    BelowSlowestNegative,
    /// `T < T_{p+1}`: the slowest positive component never reaches `x = 1`.
    BelowSlowestPositive,
    /// Reflected data cancelling through the canonical form.
    Canonical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcriticalWitness {
    pub z1: StepField,
    pub case: WitnessCase,
    /// Smallest index maximizing `T_i + T_{p+c_i}` (canonical case).
    pub i0: Option<usize>,
    pub c: Vec<usize>,
    /// All `n` amplitudes; the last `m` are the reflected ones.
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
    /// `-q0_{i0,c_i0} lambda_i0(0) / lambda_{p+c_i0}(0)`.
    pub alpha_reflected_expected: Option<Rational>,
}

impl SubcriticalWitness {
    /// Computed `alpha_{p+c_i0}`.
    pub fn alpha_reflected(&self) -> Option<&Rational> {
        let p = self.c.len();
        self.i0.map(|i0| &self.alpha[p + self.c[i0]])
    }
}

/// Step data built from the canonical form. The trace vanishes exactly for
/// the uncoupled dynamics (`M = 0`); a nonzero coupling leaves a residual.
pub fn build_witness_subcritical(spec: &ProblemSpec, t: f64) -> Result<SubcriticalWitness, SimError> {
    let (p, m, n) = (spec.p(), spec.m(), spec.n());
    let prof = &spec.profile;
    let report = mintime::minimal_time(prof, &spec.q, None).map_err(|e| match e {
        mintime::MintimeError::Speeds(s) => SimError::Speeds(s),
        mintime::MintimeError::Canon(c) => SimError::Canon(c),
        other => SimError::Dimensions(other.to_string()),
    })?;
    if report.rank < p {
        return Err(CanonError::NotFullRowRank { rank: report.rank, p }.into());
    }
    if !(t >= 0.0) || t >= report.t_opt {
        return Err(SimError::NoWitness(format!("T = {t} is not below T_opt = {}", report.t_opt)));
    }
    let dec = canon::canonical_ul_decompose(&spec.q)?;
    let tt = |i: usize| prof.travel_time(i);
    let mut z = StepField::zeros(n);
    let zero = vec![Rational::zero(); n];
    if t < tt(p - 1) {
        z.push(p - 1, prof.phi_inv_clamped(p - 1, t), 1.0, 1.0);
        return Ok(SubcriticalWitness {
            z1: z,
            case: WitnessCase::BelowSlowestNegative,
            i0: None,
            c: dec.c,
            alpha: zero.clone(),
            beta: vec![Rational::zero(); m],
            alpha_reflected_expected: None,
        });
    }
    if t < tt(p) {
        z.push(p, 0.0, prof.phi_inv_clamped(p, tt(p) - t), 1.0);
        return Ok(SubcriticalWitness {
            z1: z,
            case: WitnessCase::BelowSlowestPositive,
            i0: None,
            c: dec.c,
            alpha: zero,
            beta: vec![Rational::zero(); m],
            alpha_reflected_expected: None,
        });
    }
    let i0 = report.argmax.expect("full rank report has an argmax");
    let c = &dec.c;
    let q0 = &dec.q0;
    let lam = lambda0(spec);
    let mut alpha = vec![Rational::zero(); n];
    alpha[i0] = Rational::one();
    for i in i0 + 1..p {
        let ci = c[i];
        let s: Rational = (0..i).map(|k| &q0[(k, ci)] * &lam[k] * &alpha[k]).sum();
        alpha[i] = -s / (&q0[(i, ci)] * &lam[i]);
    }
    let beta: Vec<Rational> = (0..m)
        .map(|j| (0..p).map(|k| &q0[(k, j)] * &lam[k] * &alpha[k]).sum())
        .collect();
    if let Some(j) = (c[i0] + 1..m).find(|&j| !beta[j].is_zero()) {
        return Err(SimError::Refused(format!("cancellation failed: beta_{} != 0", j + 1)));
    }
    let lt_inv = dec.l.transpose().inverse().expect("unit triangular");
    for j in 0..m {
        let v: Rational = (0..m).map(|k| &lt_inv[(j, k)] * &beta[k]).sum();
        alpha[p + j] = -v / &lam[p + j];
    }
    let expected = -(&q0[(i0, c[i0])] * &lam[i0]) / &lam[p + c[i0]];
    if alpha[p + c[i0]].is_zero() {
        return Err(SimError::Refused("reflected amplitude vanished".into()));
    }
    let lo = t - tt(p + c[i0]);
    let hi = tt(i0);
    for (i, a) in alpha.iter().enumerate().take(p).skip(i0) {
        z.push(i, prof.phi_inv_clamped(i, lo), prof.phi_inv_clamped(i, hi), to_f64(a));
    }
    Ok(SubcriticalWitness {
        z1: z,
        case: WitnessCase::Canonical,
        i0: Some(i0),
        c: dec.c.clone(),
        alpha,
        beta,
        alpha_reflected_expected: Some(expected),
    })
}
