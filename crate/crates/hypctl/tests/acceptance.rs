//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p hypctl --test acceptance`. Failures are reported
//! but only change the exit status when `ACCEPTANCE_STRICT` is set.
//! `ACCEPTANCE_ONLY=k` runs criterion `k` alone.

mod common;

use common::*;
use hypctl::canon::{canonical_ul_decompose, is_canonical, BoundaryMatrix};
use hypctl::instances;
use hypctl::mintime::{
    self, cn_formula, ell_closed_form, optimality_bruteforce_times, topt_formula, weck_formula, WeckMatrices,
};
use hypctl::rational::{int, RatMatrix, Rational};
use hypctl::sim::{
    self, adjoint_semigroup_closed_form, build_witness_subcritical, gauge_resonant, null_control_defect,
    solve_adjoint, solve_forward, trace_l2_norm, Coupling, Field, GridSize, NodalField, ObservationMap, ProblemSpec,
};
use hypctl::speeds::SpeedProfile;
use rand::Rng;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let q1 = BoundaryMatrix::from_i64(&[&[4, 6, 3, -1], &[8, -1, 5, 3], &[2, -1, 1, 1]]);
    let q2 = BoundaryMatrix::from_i64(&[&[4, -4, 4], &[5, 2, 0], &[2, 1, 0]]);
    let q3 = RatMatrix::from_i64(&[&[1, 4, -1, 0], &[0, 2, 3, 0], &[0, 0, 1, 1]]);
    let d1 = canonical_ul_decompose(&q1).unwrap();
    let d2 = canonical_ul_decompose(&q2).unwrap();
    let rejected = is_canonical(&q3).is_none();
    let elapsed = start.elapsed();
    let ok1 = d1.q0 == RatMatrix::from_i64(&[&[0, 1, 4, -1], &[0, 0, 2, 3], &[0, 0, 0, 1]]) && d1.c == vec![1, 2, 3];
    let ok2 = d2.q0 == RatMatrix::from_i64(&[&[0, 0, 4], &[1, 2, 0], &[0, 1, 0]]) && d2.c == vec![2, 0, 1];
    let recon = q1.matrix().mul(&d1.l) == d1.q0 && q2.matrix().mul(&d2.l) == d2.q0;
    outcome(
        ok1 && ok2 && rejected && recon && elapsed.as_secs_f64() < 1e-3,
        format!("Q1 {ok1}, Q2 {ok2}, Q3 rejected {rejected}, QL=Q0 {recon}, {:.1} us", elapsed.as_secs_f64() * 1e6),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut mismatches = 0;
    for _ in 0..500 {
        let m = r.gen_range(1..=6);
        let p = r.gen_range(1..=m);
        let q = random_full_rank(&mut r, p, m);
        let l = random_unit_lower(&mut r, m);
        let ql = BoundaryMatrix::new(q.matrix().mul(&l)).unwrap();
        if canonical_ul_decompose(&q).unwrap().q0 != canonical_ul_decompose(&ql).unwrap().q0 {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(mismatches == 0 && secs < 5.0, format!("{mismatches} mismatches in 500, {secs:.2} s"))
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let (mut time_bad, mut ell_bad) = (0, 0);
    for _ in 0..200 {
        let p = r.gen_range(1..=6);
        let m = r.gen_range(1..=6);
        let times = random_times(&mut r, p, m);
        let lam0: Vec<Rational> = (0..p + m)
            .map(|i| {
                let v = frac(r.gen_range(1..=9), r.gen_range(1..=4));
                if i < p {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let q = random_full_rank(&mut r, p, m.max(p));
        // Keep m >= p only when drawn that way: rank p needs m >= p.
        let m = q.m();
        let times = if times.len() == p + m { times } else { random_times(&mut r, p, m) };
        let lam0 = if lam0.len() == p + m {
            lam0
        } else {
            (0..p + m).map(|i| if i < p { int(-1) } else { int(1) }).collect()
        };
        let c = canonical_ul_decompose(&q).unwrap().c;
        let ell = WeckMatrices::new(&lam0, &q).kernel_chain();
        if ell != ell_closed_form(&c) {
            ell_bad += 1;
        }
        if topt_formula(&times, p, &c).0 != weck_formula(&times, p, &ell) {
            time_bad += 1;
        }
    }
    outcome(
        time_bad == 0 && ell_bad == 0,
        format!("T_opt != T_c on {time_bad}/200, l(k) mismatch on {ell_bad}/200"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4);
    let mut bad = 0;
    let mut total = 0;
    for m in 1..=5 {
        for p in 1..=m {
            for _ in 0..50 {
                let times = random_times(&mut r, p, m);
                let b = optimality_bruteforce_times(&times, p).unwrap();
                total += 1;
                if !(b.equals_cn && b.best_pairing_attains && b.min == cn_formula(&times, p)) {
                    bad += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(bad == 0 && secs < 30.0, format!("{bad}/{total} failures, {secs:.2} s"))
}

fn closed_form_error(spec: &ProblemSpec, z: &dyn Field, t: f64, nx: usize) -> f64 {
    let sampled = NodalField::sample(z, nx);
    let traj = solve_adjoint(spec, &sampled, t, GridSize { nt: nx, nx }).unwrap();
    let exact = adjoint_semigroup_closed_form(spec, t, z, nx).unwrap();
    let got = traj.snapshot(0);
    let diff: Vec<f64> = got.values().iter().zip(exact.values()).map(|(a, b)| a - b).collect();
    NodalField::new(spec.n(), nx, diff).l2_norm()
}

fn criterion_5() -> Outcome {
    let prof = curved_profile();
    let q = BoundaryMatrix::new(RatMatrix::from_rows(vec![vec![int(1), frac(1, 2)], vec![frac(-3, 10), int(2)]]).unwrap())
        .unwrap();
    let spec = ProblemSpec::new(prof.clone(), Coupling::speed_derivative(&prof), q).unwrap();
    let mut r = rng(5);
    let mut worst_err = 0.0f64;
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..3 {
        let z = smooth_field(&mut r, 4);
        let e256 = closed_form_error(&spec, &z, 0.9, 256);
        let e512 = closed_form_error(&spec, &z, 0.9, 512);
        worst_err = worst_err.max(e512);
        worst_ratio = worst_ratio.min(e256 / e512);
    }
    outcome(
        worst_err <= 1e-3 && worst_ratio >= 1.5,
        format!("L2 error at nx=512 {worst_err:.2e}, ratio 256->512 {worst_ratio:.2}"),
    )
}

/// `<y(T), z1> - <y0, z(0)> - int u . Lambda_-(1) z_-(t, 1)`, relative.
fn duality_residual(spec: &ProblemSpec, seed: u64, t: f64, nx: usize, nt: usize) -> f64 {
    let mut r = rng(seed);
    let n = spec.n();
    let p = spec.p();
    let y0 = NodalField::sample(&bump_field(&mut r, n), nx);
    let z1 = NodalField::sample(&bump_field(&mut r, n), nx);
    let u = ramped_signal(&mut r, spec.m());
    let grid = GridSize { nt, nx };
    let fwd = solve_forward(spec, &y0, &u, t, grid).unwrap();
    let adj = solve_adjoint(spec, &z1, t, grid).unwrap();
    let h = 1.0 / (nx - 1) as f64;
    let yt = fwd.snapshot(nt - 1);
    let z0 = adj.snapshot(0);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..n {
        lhs += trapezoid_dot(yt.component(i), z1.component(i), h);
        rhs += trapezoid_dot(y0.component(i), z0.component(i), h);
    }
    let mut boundary = 0.0;
    let mut u_norm_sq = 0.0;
    for j in 0..spec.m() {
        let lam = spec.profile.values(p + j).last().copied().unwrap();
        let uu: Vec<f64> = (0..nt).map(|k| hypctl::sim::Signal::eval(&u, j, fwd.time(k))).collect();
        let tr: Vec<f64> = (0..nt).map(|k| lam * adj.right(k, p + j)).collect();
        boundary += trapezoid_dot(&uu, &tr, fwd.dt);
        u_norm_sq += trapezoid_dot(&uu, &uu, fwd.dt);
    }
    let scale = (y0.l2_norm() + u_norm_sq.sqrt()) * z1.l2_norm();
    (lhs - rhs - boundary).abs() / scale
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let prof = if k % 2 == 0 { curved_profile() } else { unit_speeds(2, 2) };
        let q = random_full_rank(&mut r, 2, 2);
        let coupling = random_coupling(&mut r, 4, prof.mesh());
        let spec = ProblemSpec::new(prof, coupling, q).unwrap();
        worst = worst.max(duality_residual(&spec, 600 + k, 1.7, 512, 871));
    }
    outcome(worst <= 1e-2, format!("worst relative residual {worst:.2e} over 20 instances"))
}

fn transition(spec: &ProblemSpec) -> (f64, f64, f64, f64) {
    let start = Instant::now();
    let t_opt = mintime::minimal_time(&spec.profile, &spec.q, Some(&spec.coupling)).unwrap().t_opt;
    let map = ObservationMap::assemble(spec, t_opt + 0.25, 128).unwrap();
    let above = map.defect_at(t_opt + 0.25).defect;
    let below = map.defect_at(t_opt - 0.25).defect;
    (t_opt, above, below, start.elapsed().as_secs_f64())
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("a", instance_a()), ("b", instance_b()), ("c", instance_c())] {
        let (t_opt, above, below, secs) = transition(&spec);
        let ok = above >= 1e-3 && below <= 1e-6 && secs < 120.0;
        pass &= ok;
        parts.push(format!("({name}) T_opt={t_opt} above {above:.2e} below {below:.2e} {secs:.1}s"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("a", instance_a()), ("b", instance_b()), ("c", instance_c())] {
        let t_opt = mintime::minimal_time(&spec.profile, &spec.q, None).unwrap().t_opt;
        let t = t_opt - 0.25;
        let w = build_witness_subcritical(&spec, t).unwrap();
        let norm = w.z1.l2_norm();
        let nx = 512;
        let nt = (t * 512.0).ceil() as usize + 1;
        let traj = solve_adjoint(&spec, &w.z1, t, GridSize { nt, nx }).unwrap();
        let residual = trace_l2_norm(&spec, &traj) / norm;
        let state = traj.snapshot(0).l2_norm() / norm;
        let alpha_ok = w.alpha_reflected().is_some() && w.alpha_reflected() == w.alpha_reflected_expected.as_ref();
        let ok = residual <= 1e-3 && state >= 0.5 && alpha_ok;
        pass &= ok;
        parts.push(format!("({name}) trace {residual:.2e} |z(0)| {state:.3} alpha {alpha_ok}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let spec = instances::counterexample();
    let report = mintime::minimal_time(&spec.profile, &spec.q, Some(&spec.coupling)).unwrap();
    let t = 3.5;
    let nx = 1025;
    let nt = 3585;
    let y0 = sim::FnField::new(4, move |i, x| if i == 2 && x > (t - 2.0) / 2.0 { 1.0 } else { 0.0 });
    let lo = spec.profile.phi_inv(1, 1.5).unwrap();
    let mut r = rng(9);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let u = smooth_signal(&mut r, 2);
        let traj = solve_forward(&spec, &y0, &u, t, GridSize { nt, nx }).unwrap();
        let dx = traj.dx;
        for q in 0..nx {
            let x = traj.x(q);
            if x > lo + dx && x < 1.0 - dx {
                worst = worst.max((traj.value(nt - 1, q, 1) + 1.0).abs());
            }
        }
    }
    let formula_three = (report.t_opt - 3.0).abs() < 1e-9 && !report.resonance_ok;
    outcome(
        worst <= 5e-2 && formula_three,
        format!(
            "max |y2(T)+1| on omega=({lo:.4},1): {worst:.2e}; formula reports {} with hypothesis flagged {}",
            report.t_opt, !report.resonance_ok
        ),
    )
}

fn gauge_instance() -> ProblemSpec {
    let prof = SpeedProfile::new(
        2,
        vec![0.0, 0.5, 1.0],
        vec![vec![-1.0, -1.4, -1.2], vec![-1.0, -1.4, -1.2], vec![0.6, 0.8, 0.7], vec![1.0, 1.3, 1.6]],
    )
    .unwrap();
    let mut r = rng(10);
    let coupling = random_coupling(&mut r, 4, prof.mesh());
    let q = BoundaryMatrix::new(RatMatrix::from_rows(vec![vec![int(1), frac(1, 3)], vec![frac(1, 2), int(-1)]]).unwrap())
        .unwrap();
    ProblemSpec::new(prof, coupling, q).unwrap()
}

fn criterion_10() -> Outcome {
    let spec = gauge_instance();
    let g = gauge_resonant(&spec, 32).unwrap();
    let prof = &spec.profile;
    let mut block_gap = 0.0f64;
    for (k, w) in g.m_tilde.mesh().windows(2).enumerate() {
        let mid = 0.5 * (w[0] + w[1]);
        let cell = prof.cell_of(mid);
        for block in &g.blocks {
            for &a in block {
                for &b in block {
                    let exact = if a == b { prof.slope(a, cell) } else { 0.0 };
                    block_gap = block_gap.max((g.m_tilde.cells()[k][(a, b)] - exact).abs());
                }
            }
        }
    }
    let t = 1.6;
    let (nx, nt) = (513, 820);
    let mut r = rng(11);
    let y0 = bump_field(&mut r, 4);
    let u = ramped_signal(&mut r, 2);
    let grid = GridSize { nt, nx };
    let orig = solve_forward(&spec, &y0, &u, t, grid).unwrap();
    let spec_t = spec.with_coupling(g.m_tilde.clone()).unwrap();
    let y0_t = g.map_field(&y0, 4 * (nx - 1) + 1);
    let u_t = g.map_signal(&u);
    let mapped = solve_forward(&spec_t, &y0_t, &u_t, t, grid).unwrap();
    let mut worst = 0.0f64;
    for k in (0..nt).step_by(41).chain([nt - 1]) {
        let mut err = vec![0.0; 4 * nx];
        let mut reference = vec![0.0; 4 * nx];
        for q in 0..nx {
            let psi = g.psi_at(orig.x(q));
            for i in 0..4 {
                let v: f64 = (0..4).map(|j| psi[(i, j)] * orig.value(k, q, j)).sum();
                reference[i * nx + q] = v;
                err[i * nx + q] = mapped.value(k, q, i) - v;
            }
        }
        let e = NodalField::new(4, nx, err).l2_norm() / NodalField::new(4, nx, reference).l2_norm().max(1e-300);
        worst = worst.max(e);
    }
    let zero = spec.with_coupling(Coupling::zero(4)).unwrap();
    let g0 = gauge_resonant(&zero, 4).unwrap();
    let deriv = Coupling::speed_derivative(&zero.profile);
    let zero_gap = g0.m_tilde.distance(&deriv);
    outcome(
        block_gap <= 1e-8 && worst <= 1e-2 && zero_gap <= 1e-12,
        format!("block entries off by {block_gap:.1e}; mapping error {worst:.2e}; M=0 gives d_x Lambda within {zero_gap:.1e}"),
    )
}

fn criterion_11() -> Outcome {
    let coupled = null_control_defect(&instances::delayed_null_control(1.0), 1.5, 128).unwrap().defect;
    let uncoupled = null_control_defect(&instances::delayed_null_control(0.0), 1.5, 128).unwrap().defect;
    outcome(
        coupled <= 1e-6 && uncoupled >= 1e-3,
        format!("eps=1 defect {coupled:.2e}; eps=0 defect {uncoupled:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("canonical form fidelity", criterion_1),
        ("uniqueness of the canonical form", criterion_2),
        ("minimal time equals kernel-chain time", criterion_3),
        ("optimal pairing of travel times", criterion_4),
        ("closed-form semigroup convergence", criterion_5),
        ("forward/adjoint duality", criterion_6),
        ("controllability transition", criterion_7),
        ("subcritical witness", criterion_8),
        ("resonance counterexample", criterion_9),
        ("gauge transforms", criterion_10),
        ("null-control sensitivity to coupling", criterion_11),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("{failed} criteria failed");
    // Report-only by default; ACCEPTANCE_STRICT=1 turns failures into a nonzero exit.
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
