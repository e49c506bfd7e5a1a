//! Canonical UL-decomposition `Q L = Q0` of boundary matrices over the
//! rationals. Column indices are 0-based in the API.

use crate::rational::{RatMatrix, Rational};
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("boundary matrix must have at least one row and one column")]
    Empty,
    #[error("not full row rank: rank Q = {rank} < p = {p}")]
    NotFullRowRank { rank: usize, p: usize },
}

/// The `p x m` matrix coupling the boundary values at `x = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix(RatMatrix);

impl BoundaryMatrix {
    pub fn new(q: RatMatrix) -> Result<Self, CanonError> {
        if q.nrows() == 0 || q.ncols() == 0 {
            return Err(CanonError::Empty);
        }
        Ok(Self(q))
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::new(RatMatrix::from_i64(rows)).expect("empty matrix")
    }

    pub fn identity(p: usize) -> Self {
        Self(RatMatrix::identity(p))
    }

    pub fn p(&self) -> usize {
        self.0.nrows()
    }

    pub fn m(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalDecomposition {
    pub q0: RatMatrix,
    /// Lower triangular with unit diagonal.
    pub l: RatMatrix,
    /// Pivot column of each row of `q0`.
    pub c: Vec<usize>,
}

pub fn rank(q: &BoundaryMatrix) -> usize {
    q.0.rank()
}

/// Bottom-up elimination: in row `i` the pivot is the last nonzero entry
/// outside the pivot columns of the rows below, and every entry to its left
/// is cleared by a column operation.
pub fn canonical_ul_decompose(q: &BoundaryMatrix) -> Result<CanonicalDecomposition, CanonError> {
    let (p, m) = (q.p(), q.m());
    let mut a = q.0.clone();
    let mut l = RatMatrix::identity(m);
    let mut c = vec![0usize; p];
    for i in (0..p).rev() {
        let used = &c[i + 1..];
        let pivot = (0..m)
            .rev()
            .find(|&j| !a[(i, j)].is_zero() && !used.contains(&j))
            .ok_or(CanonError::NotFullRowRank { rank: q.0.rank(), p })?;
        c[i] = pivot;
        for j in 0..pivot {
            if a[(i, j)].is_zero() {
                continue;
            }
            let f: Rational = &a[(i, j)] / &a[(i, pivot)];
            column_axpy(&mut a, j, pivot, &f);
            column_axpy(&mut l, j, pivot, &f);
        }
    }
    Ok(CanonicalDecomposition { q0: a, l, c })
}

/// `col[j] -= f * col[src]`.
fn column_axpy(a: &mut RatMatrix, j: usize, src: usize, f: &Rational) {
    for r in 0..a.nrows() {
        if a[(r, src)].is_zero() {
            continue;
        }
        let delta = f * &a[(r, src)];
        a[(r, j)] -= delta;
    }
}

/// The pivot columns if `q0` is in canonical form.
pub fn is_canonical(q0: &RatMatrix) -> Option<Vec<usize>> {
    let (p, m) = (q0.nrows(), q0.ncols());
    let mut c = vec![0usize; p];
    for i in (0..p).rev() {
        let ci = (0..m).find(|&j| !q0[(i, j)].is_zero())?;
        let used = &c[i + 1..];
        if used.contains(&ci) {
            return None;
        }
        if (ci + 1..m).any(|j| !q0[(i, j)].is_zero() && !used.contains(&j)) {
            return None;
        }
        c[i] = ci;
    }
    Some(c)
}

pub fn column_indices(q: &BoundaryMatrix) -> Result<Vec<usize>, CanonError> {
    canonical_ul_decompose(q).map(|d| d.c)
}
