//! Explicit adjoint semigroup when the coupling equals `d_x Lambda`.

use super::data::{Field, NodalField};
use super::{ProblemSpec, SimError};

/// `(S(t) z0)_i(x)` by the explicit case split.
pub fn closed_form_value(spec: &ProblemSpec, t: f64, z0: &dyn Field, i: usize, x: f64) -> f64 {
    let prof = &spec.profile;
    let p = spec.p();
    let negative = |k: usize, s: f64| {
        if s <= prof.travel_time(k) {
            z0.eval(k, prof.phi_inv_clamped(k, s))
        } else {
            0.0
        }
    };
    if i < p {
        return negative(i, t + prof.phi(i, x));
    }
    let j = i - p;
    let fx = prof.phi(i, x);
    if t <= fx {
        z0.eval(i, prof.phi_inv_clamped(i, fx - t))
    } else {
        let s = t - fx;
        (0..p).map(|k| spec.r[(k, j)] * negative(k, s)).sum()
    }
}

/// Closed form sampled on `nx` uniform nodes.
pub fn adjoint_semigroup_closed_form(
    spec: &ProblemSpec,
    t: f64,
    z0: &dyn Field,
    nx: usize,
) -> Result<NodalField, SimError> {
    if !spec.coupling_is_speed_derivative(1e-12) {
        return Err(SimError::Refused("closed form needs the coupling to equal d_x Lambda".into()));
    }
    if t < 0.0 || nx < 2 {
        return Err(SimError::Dimensions("need t >= 0 and nx >= 2".into()));
    }
    let n = spec.n();
    let dx = 1.0 / (nx - 1) as f64;
    let values = (0..n)
        .flat_map(|i| (0..nx).map(move |q| (i, q as f64 * dx)))
        .map(|(i, x)| closed_form_value(spec, t, z0, i, x))
        .collect();
    Ok(NodalField::new(n, nx, values))
}
