mod common;

use common::*;
use hypctl::canon::BoundaryMatrix;
use hypctl::instances;
use hypctl::sim::{
    adjoint_semigroup_closed_form, closed_form_value, solve_adjoint, solve_forward, Coupling, Field, FnField,
    FnSignal, GridSize, NodalField, ProblemSpec, SimError, Signal,
};
use hypctl::speeds::SpeedProfile;
use proptest::prelude::*;

fn scalar_pair(q: i64) -> ProblemSpec {
    let prof = SpeedProfile::constant(1, &[-1.0, 1.0]).unwrap();
    ProblemSpec::new(prof, Coupling::zero(2), BoundaryMatrix::from_i64(&[&[q]])).unwrap()
}

fn curved_derivative_spec() -> ProblemSpec {
    let prof = curved_profile();
    let q = BoundaryMatrix::from_i64(&[&[1, 2], &[-1, 1]]);
    ProblemSpec::new(prof.clone(), Coupling::speed_derivative(&prof), q).unwrap()
}

#[test]
fn closed_form_at_time_zero_is_identity() {
    let spec = curved_derivative_spec();
    let z0 = smooth_field(&mut rng(51), 4);
    let s = adjoint_semigroup_closed_form(&spec, 0.0, &z0, 65).unwrap();
    let direct = NodalField::sample(&z0, 65);
    let err = s.values().iter().zip(direct.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn closed_form_negative_components_die_after_travel() {
    let spec = curved_derivative_spec();
    let z0 = smooth_field(&mut rng(52), 4);
    for i in 0..2 {
        let t = spec.profile.travel_time(i) + 1e-9;
        let s = adjoint_semigroup_closed_form(&spec, t, &z0, 101).unwrap();
        assert!(s.component(i).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn closed_form_scalar_reflection() {
    let spec = scalar_pair(3);
    let z0 = FnField::new(2, |i, x| if i == 0 { (2.0 * x).sin() + x } else { x * x });
    let (t, x) = (0.8, 0.3);
    // 0 < t - x < 1: the reflected value r z0_1(t - x) with r = q.
    assert!((closed_form_value(&spec, t, &z0, 1, x) - 3.0 * z0.eval(0, t - x)).abs() < 1e-15);
    // Before reflection the positive component is pure transport.
    assert!((closed_form_value(&spec, 0.2, &z0, 1, 0.5) - z0.eval(1, 0.3)).abs() < 1e-15);
}

#[test]
fn closed_form_refuses_other_couplings() {
    let spec = instance_b();
    let z0 = FnField::zeros(4);
    assert!(matches!(adjoint_semigroup_closed_form(&spec, 0.5, &z0, 33), Err(SimError::Refused(_))));
}

#[test]
fn adjoint_pure_transport_with_one_reflection() {
    let spec = scalar_pair(2);
    let z1 = bump_field(&mut rng(53), 2);
    let t_end = 1.6;
    let nx = 512;
    let nt = 820;
    let traj = solve_adjoint(&spec, &z1, t_end, GridSize { nt, nx }).unwrap();
    // Hand formula in original time, tau = T - t.
    let hand = |tau: f64, i: usize, x: f64| -> f64 {
        if i == 0 {
            if x + tau < 1.0 { z1.eval(0, x + tau) } else { 0.0 }
        } else if tau < x {
            z1.eval(1, x - tau)
        } else if tau - x < 1.0 {
            2.0 * z1.eval(0, tau - x)
        } else {
            0.0
        }
    };
    let mut worst = 0.0f64;
    for k in (0..nt).step_by(7) {
        for q in 0..nx {
            for i in 0..2 {
                let e = (traj.value(k, q, i) - hand(t_end - traj.time(k), i, traj.x(q))).abs();
                worst = worst.max(e);
            }
        }
    }
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn adjoint_matches_closed_form_under_refinement() {
    let spec = curved_derivative_spec();
    let z1 = bump_field(&mut rng(54), 4);
    let mut errs = Vec::new();
    for nx in [129usize, 257] {
        let t = 1.1;
        let nt = ((nx - 1) as f64 * t * 2.0).ceil() as usize + 1;
        let traj = solve_adjoint(&spec, &NodalField::sample(&z1, nx), t, GridSize { nt, nx }).unwrap();
        let exact = adjoint_semigroup_closed_form(&spec, t, &z1, nx).unwrap();
        let got = traj.snapshot(0);
        let e = got.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!(errs[0] / errs[1] >= 1.5, "{errs:?}");
}

#[test]
fn negative_components_vanish_after_their_travel_time() {
    let spec = curved_derivative_spec();
    let z1 = smooth_field(&mut rng(55), 4);
    let t_end = 2.0;
    let (nt, nx) = (401, 101);
    let traj = solve_adjoint(&spec, &z1, t_end, GridSize { nt, nx }).unwrap();
    for i in 0..2 {
        let ti = spec.profile.travel_time(i);
        for k in 0..nt {
            if t_end - traj.time(k) > ti + traj.dt {
                assert!((0..nx).all(|q| traj.value(k, q, i) == 0.0));
            }
        }
    }
}

#[test]
fn finite_speed_of_propagation() {
    let spec = instance_b();
    let (x0, delta) = (0.5, 0.05);
    let z1 = FnField::new(4, move |_, x| if (x - x0).abs() < delta { 1.0 } else { 0.0 });
    let t_end = 0.3;
    let (nt, nx) = (151, 201);
    let traj = solve_adjoint(&spec, &z1, t_end, GridSize { nt, nx }).unwrap();
    let speed = 1.0;
    for k in 0..nt {
        let reach = speed * (t_end - traj.time(k)) + delta + traj.dx;
        for q in 0..nx {
            if (traj.x(q) - x0).abs() > reach {
                assert!((0..4).all(|i| traj.value(k, q, i).abs() <= 1e-12), "k={k} q={q}");
            }
        }
    }
}

#[test]
fn closed_form_semigroup_law() {
    let spec = curved_derivative_spec();
    let z0 = bump_field(&mut rng(56), 4);
    let nx = 401;
    let dx = 1.0 / (nx - 1) as f64;
    let fine = NodalField::sample(&z0, 4001);
    let lip = (0..4)
        .flat_map(|i| fine.component(i).windows(2).map(|w| (w[1] - w[0]).abs() * 4000.0).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    for (t, s) in [(0.3, 0.4), (0.9, 0.5), (0.2, 1.3)] {
        let direct = adjoint_semigroup_closed_form(&spec, t + s, &z0, nx).unwrap();
        let half = adjoint_semigroup_closed_form(&spec, s, &z0, nx).unwrap();
        let composed = adjoint_semigroup_closed_form(&spec, t, &half, nx).unwrap();
        let err = direct.values().iter().zip(composed.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // The reflection gain enters once per bounce.
        let gain = 1.0 + spec.r.amax();
        assert!(err <= 3.0 * dx * lip * gain, "t={t} s={s} err={err}");
    }
}

#[test]
fn zero_data_gives_zero() {
    let spec = instance_b();
    let traj = solve_forward(&spec, &FnField::zeros(4), &FnSignal::new(2, |_, _| 0.0), 1.0, GridSize { nt: 65, nx: 33 })
        .unwrap();
    assert!(traj.values.iter().all(|&v| v == 0.0));
}

#[test]
fn coarse_grid_is_refused() {
    let spec = instance_a();
    let err = solve_adjoint(&spec, &FnField::zeros(4), 2.0, GridSize { nt: 20, nx: 33 }).unwrap_err();
    assert!(matches!(err, SimError::Coarse { min: 16, .. }));
}

#[test]
fn rotation_on_the_resonant_pair() {
    let spec = instances::counterexample();
    let t = 3.5;
    let (nt, nx) = (3585, 1025);
    let mut r = rng(57);
    let y0 = bump_field(&mut r, 4);
    let u = ramped_signal(&mut r, 2);
    let traj = solve_forward(&spec, &y0, &u, t, GridSize { nt, nx }).unwrap();
    // With int a = pi/2 the pair is rotated by a quarter turn at x = 1/2.
    let (k, back, q) = (nt - 1, nt - 1 - 512, 512);
    assert_eq!(traj.x(q), 0.5);
    let e1 = (traj.value(k, q, 0) - traj.left(back, 1)).abs();
    let e2 = (traj.value(k, q, 1) + traj.left(back, 0)).abs();
    assert!(e1.max(e2) <= 1e-3, "{e1} {e2}");
}

#[test]
fn csv_exports() {
    let spec = scalar_pair(1);
    let traj = solve_adjoint(&spec, &FnField::new(2, |_, x| x), 1.0, GridSize { nt: 33, nx: 5 }).unwrap();
    let csv = traj.to_csv();
    assert!(csv.starts_with("t,x,component,value\n"));
    assert_eq!(csv.lines().count(), 1 + 33 * 5 * 2);
    assert!(traj.traces_csv().starts_with("t,component,left,right\n"));
    assert_eq!(traj.left(3, 0), traj.value(3, 0, 0));
    assert_eq!(traj.right(3, 1), traj.value(3, 4, 1));
}

fn duality_gap(spec: &ProblemSpec, seed: u64, t: f64, nx: usize) -> f64 {
    let mut r = rng(seed);
    let n = spec.n();
    let p = spec.p();
    let y0 = bump_field(&mut r, n);
    let z1 = bump_field(&mut r, n);
    let u = ramped_signal(&mut r, spec.m());
    let nt = ((nx - 1) as f64 * t * 1.6).ceil() as usize + 1;
    let grid = GridSize { nt, nx };
    let fwd = solve_forward(spec, &y0, &u, t, grid).unwrap();
    let adj = solve_adjoint(spec, &z1, t, grid).unwrap();
    let h = 1.0 / (nx - 1) as f64;
    let y0n = NodalField::sample(&y0, nx);
    let z1n = NodalField::sample(&z1, nx);
    let (yt, z0) = (fwd.snapshot(nt - 1), adj.snapshot(0));
    let mut gap = 0.0;
    for i in 0..n {
        gap += trapezoid_dot(yt.component(i), z1n.component(i), h);
        gap -= trapezoid_dot(y0n.component(i), z0.component(i), h);
    }
    let mut u2 = 0.0;
    for j in 0..spec.m() {
        let lam = *spec.profile.values(p + j).last().unwrap();
        let uu: Vec<f64> = (0..nt).map(|k| u.eval(j, fwd.time(k))).collect();
        let tr: Vec<f64> = (0..nt).map(|k| lam * adj.right(k, p + j)).collect();
        gap -= trapezoid_dot(&uu, &tr, fwd.dt);
        u2 += trapezoid_dot(&uu, &uu, fwd.dt);
    }
    gap.abs() / ((y0n.l2_norm() + u2.sqrt()) * z1n.l2_norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn duality_holds_for_random_systems(seed in any::<u64>(), t in 0.4f64..2.5, curved in any::<bool>()) {
        let mut r = rng(seed);
        let prof = if curved { curved_profile() } else { unit_speeds(2, 2) };
        let q = random_full_rank(&mut r, 2, 2);
        let coupling = random_coupling(&mut r, 4, prof.mesh());
        let spec = ProblemSpec::new(prof, coupling, q).unwrap();
        let gap = duality_gap(&spec, seed ^ 0x5eed, t, 257);
        prop_assert!(gap <= 1e-2, "gap {}", gap);
    }
}
