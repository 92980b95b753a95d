//! Small dense helpers shared by the Gram, subspace and diagnostics modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Matrices whose Cholesky factor has a diagonal ratio below this are
/// treated as singular.
const MIN_RCOND: f64 = 1e-15;

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub(crate) fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let chol = Cholesky::new(m.clone())
        .ok_or(Error::NotPositiveDefinite("Cholesky factorization failed"))?;
    let diag = chol.l_dirty().diagonal();
    if !diag.is_empty() {
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d.abs()), hi.max(d.abs())));
        let rcond = (lo / hi) * (lo / hi);
        if !(rcond > MIN_RCOND) {
            return Err(Error::IllConditioned(rcond));
        }
    }
    Ok(chol)
}

pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut inv = cholesky(m)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

pub(crate) fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: b.len() });
    }
    Ok(cholesky(m)?.solve(b))
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
