//! Thin wrappers around faer for dense complex Hermitian algebra.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn from_rows(rows: &[Vec<C64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

/// max |M - M^dagger|
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Replaces M by (M + M^dagger)/2 and returns the deviation that was removed.
pub fn hermitize(m: &mut CMat) -> f64 {
    let n = m.nrows();
    let dev = hermitian_deviation(m);
    for j in 0..n {
        for i in 0..j {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
    dev
}

/// Eigenvalues ascending, assuming M Hermitian.
pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)
}

/// Eigenvalues ascending with eigenvectors as columns.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = e.S();
    let vals = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

/// A^dagger B
pub fn adjoint_mul(a: &CMat, b: &CMat) -> CMat {
    a.adjoint() * b
}

pub fn mul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn col(m: &CMat, j: usize) -> Vec<C64> {
    m.col_as_slice(j).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_reconstructs() {
        let m = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else if i < j {
                C64::new(0.3, 0.1 * (i + j) as f64)
            } else {
                C64::new(0.3, -0.1 * (i + j) as f64)
            }
        });
        let (w, v) = eigh(&m).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let mv = &m * &v;
        for k in 0..3 {
            for i in 0..3 {
                assert!((mv[(i, k)] - v[(i, k)] * w[k]).norm() < 1e-12);
            }
        }
        assert_eq!(eigvalsh(&m).unwrap().len(), 3);
    }

    #[test]
    fn hermitize_symmetrizes() {
        let mut m = Mat::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, (i as f64) - (j as f64) * 0.5));
        let dev = hermitize(&mut m);
        assert!(dev > 0.0);
        assert_eq!(hermitian_deviation(&m), 0.0);
    }
}
