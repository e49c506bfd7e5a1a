//! Minimal control time and the two comparison times built from the kernel
//! chain and from the fixed pairing `c_i = m - p + i`.
//!
//! Times are generic over [`TimeScalar`] so the same formulas run on exact
//! rationals and on floats.

use crate::canon::{self, BoundaryMatrix, CanonError};
use crate::rational::{rational_from_f64, to_f64, RatMatrix, Rational};
use crate::sim::Coupling;
use crate::speeds::{SpeedError, SpeedProfile};
use num_traits::Zero;
use std::ops::Add;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MintimeError {
    #[error(transparent)]
    Speeds(#[from] SpeedError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("dimension mismatch: profile has p = {p}, m = {m}; Q is {qp} x {qm}")]
    Dimensions { p: usize, m: usize, qp: usize, qm: usize },
    #[error("exhaustive search needs p <= m <= {max} (got p = {p}, m = {m})")]
    SearchBound { p: usize, m: usize, max: usize },
}

pub trait TimeScalar: Clone + PartialOrd + Add<Output = Self> {
    fn zero() -> Self;
}

impl TimeScalar for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl TimeScalar for Rational {
    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
}

fn max_of<T: TimeScalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

/// `max_i max(T_{p+1}, T_i + T_{p+c_i})` and the smallest `i` maximizing
/// `T_i + T_{p+c_i}`.
pub fn topt_formula<T: TimeScalar>(times: &[T], p: usize, c: &[usize]) -> (T, usize) {
    let mut best = times[0].clone() + times[p + c[0]].clone();
    let mut arg = 0;
    for (i, &ci) in c.iter().enumerate().skip(1) {
        let v = times[i].clone() + times[p + ci].clone();
        if v > best {
            best = v;
            arg = i;
        }
    }
    (max_of(best, times[p].clone()), arg)
}

/// `max_k max(T_{p-k+1} + T_{p+l(k)}, T_{p+1})` with `T_{p+inf} = 0`.
/// `ell[k - 1]` is `l(k)` as a 0-based column index.
pub fn weck_formula<T: TimeScalar>(times: &[T], p: usize, ell: &[Option<usize>]) -> T {
    let mut out = times[p].clone();
    for (k0, l) in ell.iter().enumerate() {
        let k = k0 + 1;
        let tail = l.map_or_else(T::zero, |l| times[p + l].clone());
        out = max_of(out, times[p - k].clone() + tail);
    }
    out
}

/// `max_i max(T_i + T_{m+i}, T_{p+1})`; requires `m >= p`.
pub fn cn_formula<T: TimeScalar>(times: &[T], p: usize) -> T {
    let m = times.len() - p;
    assert!(m >= p, "pairing needs m >= p");
    let c: Vec<usize> = (0..p).map(|i| m - p + i).collect();
    topt_formula(times, p, &c).0
}

/// Result of the exhaustive search over injective pairings.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce<T> {
    pub min: T,
    pub argmins: Vec<Vec<usize>>,
    /// Whether `c_i = m - p + i` is among the minimizers.
    pub best_pairing_attains: bool,
    pub equals_cn: bool,
}

pub const BRUTE_FORCE_MAX_M: usize = 7;

pub fn optimality_bruteforce_times<T: TimeScalar>(
    times: &[T],
    p: usize,
) -> Result<BruteForce<T>, MintimeError> {
    let m = times.len() - p;
    if p > m || m > BRUTE_FORCE_MAX_M {
        return Err(MintimeError::SearchBound { p, m, max: BRUTE_FORCE_MAX_M });
    }
    let mut min: Option<T> = None;
    let mut argmins = Vec::new();
    let mut current = Vec::with_capacity(p);
    let mut taken = vec![false; m];
    enumerate(p, m, &mut current, &mut taken, &mut |c| {
        let v = topt_formula(times, p, c).0;
        match &min {
            Some(best) if v > *best => {}
            Some(best) if v == *best => argmins.push(c.to_vec()),
            _ => {
                min = Some(v);
                argmins = vec![c.to_vec()];
            }
        }
    });
    let min = min.expect("at least one injection exists");
    let best: Vec<usize> = (0..p).map(|i| m - p + i).collect();
    let cn = cn_formula(times, p);
    Ok(BruteForce {
        best_pairing_attains: argmins.contains(&best),
        equals_cn: cn == min,
        min,
        argmins,
    })
}

fn enumerate(
    p: usize,
    m: usize,
    current: &mut Vec<usize>,
    taken: &mut [bool],
    visit: &mut dyn FnMut(&[usize]),
) {
    if current.len() == p {
        visit(current);
        return;
    }
    for j in 0..m {
        if !taken[j] {
            taken[j] = true;
            current.push(j);
            enumerate(p, m, current, taken, visit);
            current.pop();
            taken[j] = false;
        }
    }
}

/// `C_0`, `Sigma` and the selector matrices of the kernel chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeckMatrices {
    pub c0: RatMatrix,
    pub sigma: RatMatrix,
}

impl WeckMatrices {
    /// `lambda0` holds the `n` speeds at `x = 0`.
    pub fn new(lambda0: &[Rational], q: &BoundaryMatrix) -> Self {
        let (p, m) = (q.p(), q.m());
        let mut sigma = RatMatrix::zeros(p, p);
        for i in 0..p {
            sigma[(i, p - 1 - i)] = Rational::from_integer(1.into());
        }
        let qt = q.matrix().transpose();
        let mut c0 = RatMatrix::zeros(m, p);
        for j in 0..m {
            for i in 0..p {
                c0[(j, i)] = -(&qt[(j, i)] * &lambda0[i]) / &lambda0[p + j];
            }
        }
        Self { c0: c0.mul(&sigma), sigma }
    }

    /// Keeps the first `k` diagonal entries.
    pub fn eplus(&self, k: usize) -> RatMatrix {
        let p = self.sigma.nrows();
        let mut e = RatMatrix::zeros(p, p);
        for i in 0..k.min(p) {
            e[(i, i)] = Rational::from_integer(1.into());
        }
        e
    }

    /// Zeroes the first `l` diagonal entries.
    pub fn eminus(&self, l: usize) -> RatMatrix {
        let m = self.c0.nrows();
        let mut e = RatMatrix::zeros(m, m);
        for i in l.min(m)..m {
            e[(i, i)] = Rational::from_integer(1.into());
        }
        e
    }

    /// `l(k)` for `k = 1..p`: the first `l` at which the kernel of
    /// `E-_l C0 E+_k` grows past that of `C0 E+_k`, as a 0-based column
    /// index; `None` when `C0 E+_k = 0`.
    pub fn kernel_chain(&self) -> Vec<Option<usize>> {
        let (m, p) = (self.c0.nrows(), self.c0.ncols());
        (1..=p)
            .map(|k| {
                let base = self.c0.mul(&self.eplus(k));
                let r0 = base.rank();
                if r0 == 0 {
                    return None;
                }
                (1..=m)
                    .find(|&l| self.eminus(l).mul(&base).rank() < r0)
                    .map(|l| l - 1)
            })
            .collect()
    }
}

/// Closed form `l(k) = min(c_p, ..., c_{p-k+1})`.
pub fn ell_closed_form(c: &[usize]) -> Vec<Option<usize>> {
    let p = c.len();
    (1..=p).map(|k| c[p - k..].iter().min().copied()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeReport {
    pub travel: Vec<f64>,
    /// Whether all times were exact rationals.
    pub exact: bool,
    pub rank: usize,
    pub t_opt: f64,
    pub t_c: Option<f64>,
    /// `None` when `m < p`.
    pub t_cn: Option<f64>,
    /// Smallest index maximizing `T_i + T_{p+c_i}` (0-based).
    pub argmax: Option<usize>,
    pub ell: Vec<Option<usize>>,
    pub c: Vec<usize>,
    /// A nonzero coupling was supplied and not used.
    pub coupling_ignored: bool,
    /// The resonance hypothesis holds; the formula is only meaningful then.
    pub resonance_ok: bool,
}

impl TimeReport {
    /// Flat `key = value` block. Indices are printed 1-based.
    pub fn to_text(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), fmt_time);
        let list = |v: &[usize]| {
            v.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(",")
        };
        let ell: Vec<String> = self
            .ell
            .iter()
            .map(|l| l.map_or("inf".to_string(), |l| (l + 1).to_string()))
            .collect();
        let travel: Vec<String> = self.travel.iter().map(|&t| fmt_time(t)).collect();
        let mut out = String::new();
        out += &format!("travel_times = {}\n", travel.join(","));
        out += &format!("exact = {}\n", self.exact);
        out += &format!("rank_q = {}\n", self.rank);
        out += &format!("t_opt = {}\n", fmt_time(self.t_opt));
        out += &format!("t_c = {}\n", fmt_opt(self.t_c));
        out += &format!("t_cn = {}\n", fmt_opt(self.t_cn));
        out += &format!("argmax = {}\n", self.argmax.map_or("n/a".to_string(), |a| (a + 1).to_string()));
        out += &format!("c = {}\n", list(&self.c));
        out += &format!("ell = {}\n", ell.join(","));
        out += &format!("coupling_ignored = {}\n", self.coupling_ignored);
        out += &format!("resonance_hypothesis = {}\n", if self.resonance_ok { "ok" } else { "violated" });
        out
    }

    pub fn csv_header() -> &'static str {
        "t_opt,t_c,t_cn,argmax,rank_q,resonance_ok"
    }

    pub fn to_csv_row(&self) -> String {
        let o = |v: Option<f64>| v.map_or(String::new(), fmt_time);
        format!(
            "{},{},{},{},{},{}",
            fmt_time(self.t_opt),
            o(self.t_c),
            o(self.t_cn),
            self.argmax.map_or(String::new(), |a| (a + 1).to_string()),
            self.rank,
            self.resonance_ok
        )
    }
}

fn fmt_time(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        format!("{t}")
    }
}

fn check_dims(profile: &SpeedProfile, q: &BoundaryMatrix) -> Result<(), MintimeError> {
    if profile.p() != q.p() || profile.m() != q.m() {
        return Err(MintimeError::Dimensions {
            p: profile.p(),
            m: profile.m(),
            qp: q.p(),
            qm: q.m(),
        });
    }
    Ok(())
}

fn lambda0(profile: &SpeedProfile) -> Vec<Rational> {
    (0..profile.n())
        .map(|i| rational_from_f64(profile.values(i)[0]).expect("finite speed"))
        .collect()
}

/// `l(k)` from the kernel chain of `C0` built on the speeds at `x = 0`.
pub fn ell_indices(profile: &SpeedProfile, q: &BoundaryMatrix) -> Result<Vec<Option<usize>>, MintimeError> {
    check_dims(profile, q)?;
    let rank = canon::rank(q);
    if rank < q.p() {
        return Err(CanonError::NotFullRowRank { rank, p: q.p() }.into());
    }
    Ok(WeckMatrices::new(&lambda0(profile), q).kernel_chain())
}

pub fn weck_time(profile: &SpeedProfile, q: &BoundaryMatrix) -> Result<f64, MintimeError> {
    let ell = ell_indices(profile, q)?;
    let tt = profile.travel_times()?;
    Ok(match tt.exact {
        Some(ex) => to_f64(&weck_formula(&ex, q.p(), &ell)),
        None => weck_formula(&tt.t, q.p(), &ell),
    })
}

pub fn cn_time(profile: &SpeedProfile) -> Result<f64, MintimeError> {
    let tt = profile.travel_times()?;
    let (p, m) = (profile.p(), profile.m());
    if m < p {
        return Err(MintimeError::SearchBound { p, m, max: BRUTE_FORCE_MAX_M });
    }
    Ok(match tt.exact {
        Some(ex) => to_f64(&cn_formula(&ex, p)),
        None => cn_formula(&tt.t, p),
    })
}

pub fn optimality_bruteforce(profile: &SpeedProfile) -> Result<BruteForce<f64>, MintimeError> {
    let tt = profile.travel_times()?;
    match tt.exact {
        Some(ex) => {
            let b = optimality_bruteforce_times(&ex, profile.p())?;
            Ok(BruteForce {
                min: to_f64(&b.min),
                argmins: b.argmins,
                best_pairing_attains: b.best_pairing_attains,
                equals_cn: b.equals_cn,
            })
        }
        None => optimality_bruteforce_times(&tt.t, profile.p()),
    }
}

/// Every time attached to `(Lambda, Q)`. The coupling never enters the
/// formula; passing a nonzero one is recorded in the report.
pub fn minimal_time(
    profile: &SpeedProfile,
    q: &BoundaryMatrix,
    coupling: Option<&Coupling>,
) -> Result<TimeReport, MintimeError> {
    check_dims(profile, q)?;
    let diag = profile.validate();
    let tt = profile.travel_times()?;
    let (p, m) = (profile.p(), profile.m());
    let rank = canon::rank(q);
    let coupling_ignored = coupling.is_some_and(|c| !c.is_zero());
    let t_cn = (m >= p).then(|| match &tt.exact {
        Some(ex) => to_f64(&cn_formula(ex, p)),
        None => cn_formula(&tt.t, p),
    });
    let mut report = TimeReport {
        travel: tt.t.clone(),
        exact: tt.exact.is_some(),
        rank,
        t_opt: f64::INFINITY,
        t_c: None,
        t_cn,
        argmax: None,
        ell: Vec::new(),
        c: Vec::new(),
        coupling_ignored,
        resonance_ok: diag.resonance.satisfied,
    };
    if rank < p {
        return Ok(report);
    }
    let dec = canon::canonical_ul_decompose(q)?;
    let ell = WeckMatrices::new(&lambda0(profile), q).kernel_chain();
    let (t_opt, t_c, argmax) = match &tt.exact {
        Some(ex) => {
            let (v, a) = topt_formula(ex, p, &dec.c);
            (to_f64(&v), to_f64(&weck_formula(ex, p, &ell)), a)
        }
        None => {
            let (v, a) = topt_formula(&tt.t, p, &dec.c);
            (v, weck_formula(&tt.t, p, &ell), a)
        }
    };
    report.t_opt = t_opt;
    report.t_c = Some(t_c);
    report.argmax = Some(argmax);
    report.ell = ell;
    report.c = dec.c;
    Ok(report)
}
