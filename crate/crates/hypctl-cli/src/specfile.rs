//! TOML problem files.
//!
//! ```toml
//! [speeds]
//! p = 2
//! constant = [-1, -1, 1, 1]          # or `mesh` + one `values` row per component
//!
//! [boundary]
//! q = [[1, "1/2"], [0, 1]]
//!
//! [coupling]                          # optional, default M = 0
//! mesh = [0, 0.5, 1]
//! cells = [ [[..], ..], [[..], ..] ]  # one n x n matrix per cell
//!
//! [horizon]
//! t = 2.5
//!
//! [grid]
//! nx = 257
//! ```

use hypctl::canon::BoundaryMatrix;
use hypctl::rational::{parse_rational, rational_from_f64, to_f64, RatMatrix, Rational};
use hypctl::sim::{Coupling, ProblemSpec};
use hypctl::speeds::SpeedProfile;
use nalgebra::DMatrix;
use serde::Deserialize;
use std::fmt;
use std::ops::Range;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for SpecError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    speeds: RawSpeeds,
    coupling: Option<RawCoupling>,
    boundary: RawBoundary,
    horizon: Option<RawHorizon>,
    grid: Option<RawGrid>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpeeds {
    p: usize,
    constant: Option<Spanned<Vec<Number>>>,
    mesh: Option<Spanned<Vec<Number>>>,
    values: Option<Vec<Spanned<Vec<Number>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    q: Vec<Spanned<Vec<Number>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    /// `"zero"`, `"speed_derivative"`, or omitted when matrices are given.
    kind: Option<Spanned<String>>,
    constant: Option<Vec<Spanned<Vec<Number>>>>,
    mesh: Option<Spanned<Vec<Number>>>,
    cells: Option<Vec<Spanned<Vec<Vec<Number>>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    t: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nt: Option<usize>,
    nx: Option<usize>,
}

/// A parsed problem file.
#[derive(Debug, Clone)]
pub struct SpecFile {
    pub problem: ProblemSpec,
    pub horizon: Option<f64>,
    pub nt: Option<usize>,
    pub nx: Option<usize>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, span: Range<usize>, message: impl Into<String>) -> SpecError {
        SpecError {
            line: Some(self.line_of(span)),
            message: message.into(),
        }
    }

    fn rational(&self, v: &Number, span: Range<usize>, field: &str) -> Result<Rational, SpecError> {
        match v {
            Number::Int(i) => Ok(Rational::from_integer((*i).into())),
            Number::Float(x) => {
                rational_from_f64(*x).ok_or_else(|| self.err(span, format!("{field}: value {x} is not finite")))
            }
            Number::Text(s) => parse_rational(s).map_err(|e| self.err(span, format!("{field}: {e}"))),
        }
    }

    fn real(&self, v: &Number, span: Range<usize>, field: &str) -> Result<f64, SpecError> {
        match v {
            Number::Int(i) => Ok(*i as f64),
            Number::Float(x) => Ok(*x),
            Number::Text(_) => Ok(to_f64(&self.rational(v, span, field)?)),
        }
    }

    fn reals(&self, row: &Spanned<Vec<Number>>, field: &str) -> Result<Vec<f64>, SpecError> {
        row.get_ref().iter().map(|v| self.real(v, row.span(), field)).collect()
    }
}

pub fn parse_spec(text: &str) -> Result<SpecFile, SpecError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| SpecError {
        line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    let cx = Ctx { text };
    let profile = parse_speeds(&cx, &raw.speeds)?;
    let q = parse_boundary(&cx, &raw.boundary, profile.p(), profile.m())?;
    let n = profile.n();
    let coupling = match &raw.coupling {
        None => Coupling::zero(n),
        Some(c) => parse_coupling(&cx, c, &profile)?,
    };
    if let Some(h) = &raw.horizon {
        if !(h.t > 0.0 && h.t.is_finite()) {
            return Err(SpecError {
                line: None,
                message: format!("horizon.t must be positive, got {}", h.t),
            });
        }
    }
    let problem = ProblemSpec::new(profile, coupling, q).map_err(|e| SpecError {
        line: None,
        message: e.to_string(),
    })?;
    Ok(SpecFile {
        problem,
        horizon: raw.horizon.map(|h| h.t),
        nt: raw.grid.as_ref().and_then(|g| g.nt),
        nx: raw.grid.as_ref().and_then(|g| g.nx),
    })
}

fn parse_speeds(cx: &Ctx, s: &RawSpeeds) -> Result<SpeedProfile, SpecError> {
    match (&s.constant, &s.mesh, &s.values) {
        (Some(c), None, None) => {
            let v = cx.reals(c, "speeds.constant")?;
            SpeedProfile::constant(s.p, &v).map_err(|e| cx.err(c.span(), format!("speeds.constant: {e}")))
        }
        (None, Some(mesh), Some(rows)) => {
            let m = cx.reals(mesh, "speeds.mesh")?;
            let mut values = Vec::with_capacity(rows.len());
            for (k, row) in rows.iter().enumerate() {
                let v = cx.reals(row, &format!("speeds.values row {}", k + 1))?;
                if v.len() != m.len() {
                    return Err(cx.err(
                        row.span(),
                        format!("speeds.values row {}: {} entries, mesh has {}", k + 1, v.len(), m.len()),
                    ));
                }
                values.push(v);
            }
            SpeedProfile::new(s.p, m, values).map_err(|e| cx.err(mesh.span(), format!("speeds: {e}")))
        }
        _ => Err(SpecError {
            line: None,
            message: "speeds: give either `constant` or both `mesh` and `values`".into(),
        }),
    }
}

fn parse_boundary(cx: &Ctx, b: &RawBoundary, p: usize, m: usize) -> Result<BoundaryMatrix, SpecError> {
    if b.q.len() != p {
        return Err(SpecError {
            line: b.q.first().map(|r| cx.line_of(r.span())),
            message: format!("boundary.q has {} rows, speeds declare p = {p}", b.q.len()),
        });
    }
    let mut rows = Vec::with_capacity(p);
    for (k, row) in b.q.iter().enumerate() {
        let field = format!("boundary.q row {}", k + 1);
        if row.get_ref().len() != m {
            return Err(cx.err(row.span(), format!("{field}: {} entries, expected m = {m}", row.get_ref().len())));
        }
        rows.push(
            row.get_ref()
                .iter()
                .map(|v| cx.rational(v, row.span(), &field))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let q = RatMatrix::from_rows(rows).expect("rows checked");
    BoundaryMatrix::new(q).map_err(|e| SpecError {
        line: None,
        message: format!("boundary.q: {e}"),
    })
}

/// `rows` pairs each row with the span used to anchor errors.
fn square(cx: &Ctx, rows: &[(Range<usize>, &Vec<Number>)], n: usize, field: &str) -> Result<DMatrix<f64>, SpecError> {
    if rows.len() != n {
        return Err(SpecError {
            line: rows.first().map(|r| cx.line_of(r.0.clone())),
            message: format!("{field}: {} rows, expected n = {n}", rows.len()),
        });
    }
    let mut out = DMatrix::zeros(n, n);
    for (i, (span, row)) in rows.iter().enumerate() {
        let f = format!("{field} row {}", i + 1);
        let v = row.iter().map(|x| cx.real(x, span.clone(), &f)).collect::<Result<Vec<_>, _>>()?;
        if v.len() != n {
            return Err(cx.err(span.clone(), format!("{f}: {} entries, expected n = {n}", v.len())));
        }
        for (j, x) in v.into_iter().enumerate() {
            out[(i, j)] = x;
        }
    }
    Ok(out)
}

fn parse_coupling(cx: &Ctx, c: &RawCoupling, profile: &SpeedProfile) -> Result<Coupling, SpecError> {
    let n = profile.n();
    if let Some(kind) = &c.kind {
        if c.constant.is_some() || c.mesh.is_some() || c.cells.is_some() {
            return Err(cx.err(kind.span(), "coupling: `kind` excludes explicit matrices"));
        }
        return match kind.get_ref().as_str() {
            "zero" => Ok(Coupling::zero(n)),
            "speed_derivative" => Ok(Coupling::speed_derivative(profile)),
            other => Err(cx.err(
                kind.span(),
                format!("coupling.kind: unknown `{other}` (zero, speed_derivative)"),
            )),
        };
    }
    match (&c.constant, &c.mesh, &c.cells) {
        (Some(rows), None, None) => {
            let rows: Vec<_> = rows.iter().map(|r| (r.span(), r.get_ref())).collect();
            Ok(Coupling::constant(square(cx, &rows, n, "coupling.constant")?))
        }
        (None, Some(mesh), Some(cells)) => {
            let m = cx.reals(mesh, "coupling.mesh")?;
            if cells.len() + 1 != m.len() {
                return Err(cx.err(
                    mesh.span(),
                    format!("coupling: {} cells for a mesh of {} points", cells.len(), m.len()),
                ));
            }
            let mut mats = Vec::with_capacity(cells.len());
            for (k, cell) in cells.iter().enumerate() {
                // Rows of a cell share the cell's span.
                let rows: Vec<_> = cell.get_ref().iter().map(|r| (cell.span(), r)).collect();
                mats.push(square(cx, &rows, n, &format!("coupling.cells[{}]", k + 1))?);
            }
            Coupling::new(m, mats).map_err(|e| cx.err(mesh.span(), format!("coupling: {e}")))
        }
        _ => Err(SpecError {
            line: None,
            message: "coupling: give `kind`, `constant`, or both `mesh` and `cells`".into(),
        }),
    }
}
