//! Ready-made systems used by the tests and the shipped spec files.

use crate::canon::BoundaryMatrix;
use crate::sim::{Coupling, ProblemSpec};
use crate::speeds::SpeedProfile;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Bracketed bisection for an increasing or decreasing `f` with a sign
/// change on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "root not bracketed");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|lambda_2(1)|` such that `|lambda_2|` going linearly from 1 at `x = 1/2`
/// to this value at `x = 1` spends time 3/2 on `[1/2, 1]`.
pub fn counterexample_tail_speed() -> f64 {
    // (1/2) ln(1/w) / (1 - w) = 3/2
    bisect(|w| (1.0 / w).ln() / (1.0 - w) - 3.0, 1e-6, 0.5, 1e-12)
}

/// Speeds `(-1, lambda_2, 1/2, 1)` where `lambda_2 = -1` on `[0, 1/2]` and
/// then slows down, so that the travel times are `(1, 2, 2, 1)`.
pub fn counterexample_profile() -> SpeedProfile {
    let w = counterexample_tail_speed();
    SpeedProfile::new(
        2,
        vec![0.0, 0.5, 1.0],
        vec![
            vec![-1.0, -1.0, -1.0],
            vec![-1.0, -1.0, -w],
            vec![0.5, 0.5, 0.5],
            vec![1.0, 1.0, 1.0],
        ],
    )
    .expect("well-formed profile")
}

/// Rotation coupling `a J` between the two negative components with
/// `a = pi` on `(0, 1/2)` and `0` on `(1/2, 1)`.
pub fn counterexample_coupling() -> Coupling {
    let mut first = DMatrix::zeros(4, 4);
    first[(0, 1)] = PI;
    first[(1, 0)] = -PI;
    Coupling::new(vec![0.0, 0.5, 1.0], vec![first, DMatrix::zeros(4, 4)]).expect("valid coupling")
}

/// The counterexample system with `Q = I`. Signs and ordering hold; only
/// the resonance hypothesis fails, which [`ProblemSpec::new`] tolerates.
pub fn counterexample() -> ProblemSpec {
    ProblemSpec::new(counterexample_profile(), counterexample_coupling(), BoundaryMatrix::identity(2))
        .expect("signs and ordering hold")
}

/// `y1_t = -y1_x - eps y2`, `y2_t = y2_x`, `y1(t, 0) = 0`, `y2(t, 1) = u`.
pub fn delayed_null_control(eps: f64) -> ProblemSpec {
    let profile = SpeedProfile::constant(1, &[-1.0, 1.0]).expect("unit speeds");
    let m = DMatrix::from_row_slice(2, 2, &[0.0, -eps, 0.0, 0.0]);
    ProblemSpec::new(profile, Coupling::constant(m), BoundaryMatrix::from_i64(&[&[0]])).expect("valid system")
}
