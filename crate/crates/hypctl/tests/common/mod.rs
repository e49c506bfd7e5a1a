//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use hypctl::canon::BoundaryMatrix;
use hypctl::rational::{int, RatMatrix, Rational};
use hypctl::sim::{Coupling, Field, FnField, FnSignal, ProblemSpec, Signal};
use hypctl::speeds::SpeedProfile;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Random rational with small numerator and denominator.
pub fn small_rational(r: &mut ChaCha8Rng, span: i64) -> Rational {
    frac(r.gen_range(-span..=span), r.gen_range(1..=4))
}

/// Random `p x m` rational matrix of full row rank, with some zeros.
pub fn random_full_rank(r: &mut ChaCha8Rng, p: usize, m: usize) -> BoundaryMatrix {
    loop {
        let rows: Vec<Vec<Rational>> = (0..p)
            .map(|_| {
                (0..m)
                    .map(|_| if r.gen_bool(0.35) { int(0) } else { small_rational(r, 5) })
                    .collect()
            })
            .collect();
        let q = RatMatrix::from_rows(rows).unwrap();
        if q.rank() == p {
            return BoundaryMatrix::new(q).unwrap();
        }
    }
}

pub fn random_unit_lower(r: &mut ChaCha8Rng, m: usize) -> RatMatrix {
    let mut l = RatMatrix::identity(m);
    for i in 0..m {
        for j in 0..i {
            if r.gen_bool(0.7) {
                l[(i, j)] = small_rational(r, 4);
            }
        }
    }
    l
}

/// Ordered rational times: nondecreasing on `0..p`, nonincreasing on `p..n`.
pub fn random_times(r: &mut ChaCha8Rng, p: usize, m: usize) -> Vec<Rational> {
    let mut neg: Vec<Rational> = (0..p).map(|_| frac(r.gen_range(1..=12), r.gen_range(1..=3))).collect();
    let mut pos: Vec<Rational> = (0..m).map(|_| frac(r.gen_range(1..=12), r.gen_range(1..=3))).collect();
    neg.sort();
    pos.sort_by(|a, b| b.cmp(a));
    neg.into_iter().chain(pos).collect()
}

pub fn unit_speeds(p: usize, m: usize) -> SpeedProfile {
    let v: Vec<f64> = (0..p).map(|_| -1.0).chain((0..m).map(|_| 1.0)).collect();
    SpeedProfile::constant(p, &v).unwrap()
}

pub fn random_coupling(r: &mut ChaCha8Rng, n: usize, mesh: &[f64]) -> Coupling {
    let cells = mesh
        .windows(2)
        .map(|_| DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0)))
        .collect();
    Coupling::new(mesh.to_vec(), cells).unwrap()
}

/// Instance (a): unit speeds, `Q = I`, `M = 0`.
pub fn instance_a() -> ProblemSpec {
    ProblemSpec::new(unit_speeds(2, 2), Coupling::zero(4), BoundaryMatrix::identity(2)).unwrap()
}

/// Instance (b): as (a) with a random constant coupling.
pub fn instance_b() -> ProblemSpec {
    let mut r = rng(2024);
    ProblemSpec::new(unit_speeds(2, 2), random_coupling(&mut r, 4, &[0.0, 1.0]), BoundaryMatrix::identity(2)).unwrap()
}

/// Instance (c): `p = 2`, `m = 3`, canonical form `[[0,0,1],[1,0,0]]`.
pub fn instance_c() -> ProblemSpec {
    let prof = SpeedProfile::constant(2, &[-1.0, -0.5, 0.5, 1.0, 1.0]).unwrap();
    let q = BoundaryMatrix::from_i64(&[&[2, -1, 1], &[1, 0, 0]]);
    ProblemSpec::new(prof, Coupling::zero(5), q).unwrap()
}

/// Nonconstant speeds with a reflection pattern, `p = m = 2`.
pub fn curved_profile() -> SpeedProfile {
    SpeedProfile::new(
        2,
        vec![0.0, 0.4, 1.0],
        vec![
            vec![-1.5, -1.7, -2.0],
            vec![-1.0, -1.2, -1.5],
            vec![0.8, 0.96, 1.2],
            vec![1.2, 1.0, 1.5],
        ],
    )
    .unwrap()
}

/// Smooth random field: a few random sine modes per component.
pub fn smooth_field(r: &mut ChaCha8Rng, n: usize) -> FnField {
    let coeffs: Vec<Vec<(f64, f64, f64)>> = (0..n)
        .map(|_| {
            (1..=3)
                .map(|k| (r.gen_range(-1.0..1.0), k as f64 * std::f64::consts::PI, r.gen_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect();
    FnField::new(n, move |i, x| coeffs[i].iter().map(|(a, w, ph)| a * (w * x + ph).sin()).sum())
}

pub fn smooth_signal(r: &mut ChaCha8Rng, m: usize) -> FnSignal {
    let coeffs: Vec<Vec<(f64, f64, f64)>> = (0..m)
        .map(|_| (1..=3).map(|k| (r.gen_range(-1.0..1.0), k as f64 * 1.7, r.gen_range(0.0..std::f64::consts::TAU))).collect())
        .collect();
    FnSignal::new(m, move |j, t| coeffs[j].iter().map(|(a, w, ph)| a * (w * t + ph).sin()).sum())
}

/// Trapezoidal `int_0^1 f g` over nodal samples.
pub fn trapezoid_dot(f: &[f64], g: &[f64], h: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f.iter().zip(g).map(|(a, b)| a * b).sum();
    h * (inner - 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]))
}

/// Smooth random field vanishing to second order at both ends, so that it is
/// compatible with every boundary law.
pub fn bump_field(r: &mut ChaCha8Rng, n: usize) -> FnField {
    let base = smooth_field(r, n);
    FnField::new(n, move |i, x| 16.0 * (x * (1.0 - x)).powi(2) * base.eval(i, x))
}

/// Smooth random control that starts at zero with zero slope.
pub fn ramped_signal(r: &mut ChaCha8Rng, m: usize) -> FnSignal {
    let base = smooth_signal(r, m);
    FnSignal::new(m, move |j, t| {
        let ramp = 0.5 * (1.0 - (std::f64::consts::PI * t.min(1.0)).cos());
        ramp * base.eval(j, t)
    })
}
