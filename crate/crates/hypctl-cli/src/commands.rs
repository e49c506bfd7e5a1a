use crate::specfile::{parse_spec, SpecFile};
use crate::table::Table;
use crate::Mode;
use hypctl::canon::{self, canonical_ul_decompose};
use hypctl::mintime::{self, TimeReport};
use hypctl::sim::{
    build_witness_rank_deficient, build_witness_subcritical, closed_form_value, solve_adjoint, solve_forward,
    trace_l2_norm, Field, FnField, FnSignal, GridSize, GridTrajectory, ObservationMap, ProblemSpec, SimError,
    StepField, WitnessCase,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Refused(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Refused(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let msg = e.to_string();
        match e {
            SimError::Speeds(_) | SimError::Canon(_) | SimError::Dimensions(_) => CliError::Input(msg),
            SimError::NoWitness(_) | SimError::Refused(_) => CliError::Refused(msg),
            SimError::Coarse { .. } | SimError::NonFinite { .. } | SimError::SizeBound { .. } => {
                CliError::Numeric(msg)
            }
        }
    }
}

impl From<mintime::MintimeError> for CliError {
    fn from(e: mintime::MintimeError) -> Self {
        CliError::Input(e.to_string())
    }
}

pub struct Output {
    pub header: bool,
}

impl Output {
    fn emit(&self, body: &str, path: Option<&Path>) -> Result<(), CliError> {
        let mut text = String::new();
        if self.header {
            let _ = writeln!(text, "# hypctl {}", env!("CARGO_PKG_VERSION"));
        }
        text += body;
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<SpecFile, CliError> {
    parse_spec(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn max_speed(spec: &ProblemSpec) -> f64 {
    (0..spec.n())
        .flat_map(|i| spec.profile.values(i).iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
}

/// One time step per cell crossing at the fastest speed.
fn auto_nt(spec: &ProblemSpec, t: f64, nx: usize) -> usize {
    (t * (nx - 1) as f64 * max_speed(spec)).ceil() as usize + 1
}

fn horizon(flag: Option<f64>, file: &SpecFile) -> Result<f64, CliError> {
    let t = flag
        .or(file.horizon)
        .ok_or_else(|| CliError::Input("no horizon: pass --t or set [horizon] t".into()))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(CliError::Input(format!("horizon must be positive, got {t}")));
    }
    Ok(t)
}

fn join_1based(v: &[usize]) -> String {
    v.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(",")
}

pub fn canon(path: &Path) -> Result<(), CliError> {
    let file = load(path)?;
    let q = &file.problem.q;
    let (p, m) = (q.p(), q.m());
    let rank = canon::rank(q);
    let mut out = format!("p = {p}, m = {m}\nQ =\n{}", q.matrix());
    if rank < p {
        let _ = writeln!(out, "rank Q = {rank} < p = {p}; T_opt = +inf");
        print!("{out}");
        return Ok(());
    }
    let dec = canonical_ul_decompose(q).map_err(|e| CliError::Input(e.to_string()))?;
    let check = q.matrix().mul(&dec.l) == dec.q0;
    let _ = write!(out, "Q0 =\n{}L =\n{}", dec.q0, dec.l);
    let _ = writeln!(out, "c = {}", join_1based(&dec.c));
    let _ = writeln!(out, "check Q L = Q0: {}", if check { "ok" } else { "FAILED" });
    print!("{out}");
    if check {
        Ok(())
    } else {
        Err(CliError::Numeric("Q L differs from Q0".into()))
    }
}

pub fn times(path: &Path, csv: bool, out: &Output) -> Result<(), CliError> {
    let file = load(path)?;
    let spec = &file.problem;
    let report = mintime::minimal_time(&spec.profile, &spec.q, Some(&spec.coupling))?;
    if csv {
        out.emit(&format!("{}\n{}\n", TimeReport::csv_header(), report.to_csv_row()), None)
    } else {
        print!("{}", report.to_text());
        Ok(())
    }
}

pub struct SimulateArgs {
    pub mode: Mode,
    pub data: Option<PathBuf>,
    pub control: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub t: Option<f64>,
    pub nt: Option<usize>,
    pub nx: Option<usize>,
    pub stride: usize,
}

fn trajectory_csv(traj: &GridTrajectory, stride: usize, reference: Option<&dyn Fn(f64, usize, f64) -> f64>) -> (String, f64) {
    let mut out = String::from("t,x,component,value");
    if reference.is_some() {
        out += ",closed_form,error";
    }
    out.push('\n');
    let mut worst = 0.0f64;
    let levels = (0..traj.nt).filter(|k| k % stride == 0 || *k == traj.nt - 1);
    for k in levels {
        let t = traj.time(k);
        for q in 0..traj.nx {
            let x = traj.x(q);
            for i in 0..traj.n {
                let v = traj.value(k, q, i);
                let _ = write!(out, "{t},{x},{},{v}", i + 1);
                if let Some(f) = reference {
                    let exact = f(t, i, x);
                    let err = (v - exact).abs();
                    worst = worst.max(err);
                    let _ = write!(out, ",{exact},{err}");
                }
                out.push('\n');
            }
        }
    }
    (out, worst)
}

pub fn simulate(path: &Path, args: &SimulateArgs, out: &Output) -> Result<(), CliError> {
    let file = load(path)?;
    let spec = &file.problem;
    let t = horizon(args.t, &file)?;
    let nx = args.nx.or(file.nx).unwrap_or(257);
    if nx < 3 {
        return Err(CliError::Input(format!("nx must be at least 3, got {nx}")));
    }
    if args.stride == 0 {
        return Err(CliError::Input("stride must be positive".into()));
    }
    let nt = args.nt.or(file.nt).unwrap_or_else(|| auto_nt(spec, t, nx));
    let grid = GridSize { nt, nx };
    let n = spec.n();
    let data: Box<dyn Field> = match &args.data {
        Some(p) => Box::new(Table::parse(&read(p)?, n, &p.display().to_string()).map_err(CliError::Input)?),
        None => Box::new(FnField::zeros(n)),
    };
    let (body, summary) = match args.mode {
        Mode::Forward => {
            let traj = match &args.control {
                Some(p) => {
                    let u = Table::parse(&read(p)?, spec.m(), &p.display().to_string()).map_err(CliError::Input)?;
                    solve_forward(spec, data.as_ref(), &u, t, grid)?
                }
                None => solve_forward(spec, data.as_ref(), &FnSignal::new(spec.m(), |_, _| 0.0), t, grid)?,
            };
            (trajectory_csv(&traj, args.stride, None).0, None)
        }
        Mode::Adjoint => {
            if args.control.is_some() {
                return Err(CliError::Input("--control only applies to forward runs".into()));
            }
            let traj = solve_adjoint(spec, data.as_ref(), t, grid)?;
            if spec.coupling_is_speed_derivative(1e-12) {
                // Closed form of the backward evolution from z(T).
                let f = |time: f64, i: usize, x: f64| closed_form_value(spec, t - time, data.as_ref(), i, x);
                let (body, worst) = trajectory_csv(&traj, args.stride, Some(&f));
                (body, Some(worst))
            } else {
                (trajectory_csv(&traj, args.stride, None).0, None)
            }
        }
    };
    out.emit(&body, args.out.as_deref())?;
    if args.out.is_some() {
        println!("grid = {nt} x {nx}");
        if let Some(w) = summary {
            println!("max_closed_form_error = {w:e}");
        }
    }
    Ok(())
}

pub fn gramian(
    path: &Path,
    tmin: f64,
    tmax: f64,
    steps: usize,
    nx: Option<usize>,
    out_path: Option<&Path>,
    out: &Output,
) -> Result<(), CliError> {
    if !(tmin > 0.0 && tmin < tmax && tmax.is_finite()) || steps == 0 {
        return Err(CliError::Input(format!(
            "empty sweep: need 0 < tmin < tmax and steps >= 1 (got tmin = {tmin}, tmax = {tmax}, steps = {steps})"
        )));
    }
    let file = load(path)?;
    let spec = &file.problem;
    let nx = nx.or(file.nx).unwrap_or(65);
    let map = ObservationMap::assemble(spec, tmax, nx)?;
    let mut body = String::from("t,defect,sigma_min,sigma_max\n");
    for k in 0..=steps {
        let t = tmin + (tmax - tmin) * k as f64 / steps as f64;
        let r = map.defect_at(t);
        let smin = r.singular_values.last().copied().unwrap_or(0.0);
        let smax = r.singular_values.first().copied().unwrap_or(0.0);
        if !r.defect.is_finite() {
            return Err(CliError::Numeric(format!("non-finite defect at t = {t}")));
        }
        let _ = writeln!(body, "{t},{},{smin},{smax}", r.defect);
    }
    out.emit(&body, out_path)
}

fn witness_csv(z: &StepField) -> String {
    let mut out = String::from("component,a,b,value\n");
    for (i, pieces) in z.pieces.iter().enumerate() {
        for (a, b, v) in pieces {
            let _ = writeln!(out, "{},{a},{b},{v}", i + 1);
        }
    }
    out
}

pub fn witness(
    path: &Path,
    t: Option<f64>,
    nx: Option<usize>,
    out_path: Option<&Path>,
    out: &Output,
) -> Result<(), CliError> {
    let file = load(path)?;
    let spec = &file.problem;
    let t = horizon(t, &file)?;
    let mut report = String::new();
    let z1 = if canon::rank(&spec.q) < spec.p() {
        let _ = writeln!(report, "case = kernel");
        build_witness_rank_deficient(spec)?
    } else {
        let w = build_witness_subcritical(spec, t)?;
        let case = match w.case {
            WitnessCase::BelowSlowestNegative => "below_slowest_negative",
            WitnessCase::BelowSlowestPositive => "below_slowest_positive",
            WitnessCase::Canonical => "canonical",
        };
        let _ = writeln!(report, "case = {case}");
        if let Some(i0) = w.i0 {
            let _ = writeln!(report, "i0 = {}", i0 + 1);
        }
        if let (Some(a), Some(e)) = (w.alpha_reflected(), &w.alpha_reflected_expected) {
            let _ = writeln!(report, "alpha_reflected = {a}");
            let _ = writeln!(report, "alpha_expected = {e}");
        }
        w.z1
    };
    let norm = z1.l2_norm();
    if norm == 0.0 {
        return Err(CliError::Numeric("witness has zero norm".into()));
    }
    let nx = nx.or(file.nx).unwrap_or(257);
    let grid = GridSize {
        nt: auto_nt(spec, t, nx),
        nx,
    };
    let traj = solve_adjoint(spec, &z1, t, grid)?;
    let residual = trace_l2_norm(spec, &traj) / norm;
    let state = traj.snapshot(0).l2_norm() / norm;
    let _ = writeln!(report, "t = {t}");
    let _ = writeln!(report, "norm_z1 = {norm}");
    let _ = writeln!(report, "trace_residual = {residual:e}");
    let _ = writeln!(report, "state_ratio = {state}");
    out.emit(&witness_csv(&z1), out_path)?;
    if out_path.is_some() {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    Ok(())
}
