//! Dense brute-force references for validating the fast solver paths.
//!
//! Nothing here touches an FFT or the stencil eigen-solver: the Laplacian is
//! assembled from explicit cosine sums and every inverse, solve, and SVD is a
//! plain dense factorization. Sizes are capped so each oracle stays cheap.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Largest system the oracles will assemble.
pub const MAX_UNKNOWNS: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{0} unknowns exceeds the oracle cap of {MAX_UNKNOWNS}")]
    TooLarge(usize),
    #[error("dense matrix is singular")]
    Singular,
    #[error("length {found} does not match expected {expected}")]
    Shape { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, OracleError>;

fn unknowns(d: usize, n: usize) -> Result<usize> {
    let total = n.pow(d as u32);
    if total > MAX_UNKNOWNS {
        return Err(OracleError::TooLarge(total));
    }
    Ok(total)
}

fn coords(d: usize, n: usize, mut idx: usize) -> Vec<usize> {
    let mut c = vec![0; d];
    for k in (0..d).rev() {
        c[k] = idx % n;
        idx /= n;
    }
    c
}

fn index(n: usize, c: &[usize]) -> usize {
    c.iter().fold(0, |acc, &x| acc * n + x)
}

/// One-dimensional spectral second-derivative row:
/// `l[delta] = (1/n) sum_{k=-n/2}^{n/2-1} 4 pi^2 k^2 cos(2 pi k delta / n)`.
fn laplacian_row_1d(n: usize) -> Vec<f64> {
    let half = (n / 2) as i64;
    (0..n)
        .map(|delta| {
            let sum: f64 = (-half..half)
                .map(|k| {
                    let kf = k as f64;
                    4.0 * PI * PI * kf * kf * (2.0 * PI * kf * delta as f64 / n as f64).cos()
                })
                .sum();
            sum / n as f64
        })
        .collect()
}

/// Dense `L + diag(v)` on the periodic `n^d` grid (row-major, dimension 0 slowest).
pub fn dense_assemble(d: usize, n: usize, v: &[f64]) -> Result<DMatrix<f64>> {
    let total = unknowns(d, n)?;
    if v.len() != total {
        return Err(OracleError::Shape {
            expected: total,
            found: v.len(),
        });
    }
    let row = laplacian_row_1d(n);
    let mut a = DMatrix::zeros(total, total);
    for r in 0..total {
        let cr = coords(d, n, r);
        for c in 0..total {
            let cc = coords(d, n, c);
            // L is a sum of 1D operators acting on one axis at a time.
            let mut val = 0.0;
            for axis in 0..d {
                if (0..d).all(|k| k == axis || cr[k] == cc[k]) {
                    val += row[(cr[axis] + n - cc[axis]) % n];
                }
            }
            a[(r, c)] = val;
        }
        a[(r, r)] += v[r];
    }
    Ok(a)
}

/// Dense Green's matrix `(L + s)^{-1}`.
pub fn dense_green(d: usize, n: usize, s: f64) -> Result<DMatrix<f64>> {
    let total = unknowns(d, n)?;
    let a = dense_assemble(d, n, &vec![s; total])?;
    a.try_inverse().ok_or(OracleError::Singular)
}

/// Solve `A x = b` by dense LU with partial pivoting.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != b.len() || !a.is_square() {
        return Err(OracleError::Shape {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let lu = a.clone().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(OracleError::Singular)
}

/// Extract `G[rows, cols]`.
pub fn submatrix(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| g[(rows[i], cols[j])])
}

/// Smallest singular value of `G[rows, cols]` and its left singular vector,
/// sign-normalized so the largest-magnitude entry is positive.
pub fn dense_svd_block(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> (f64, Vec<f64>) {
    let b = submatrix(g, rows, cols);
    let svd = b.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    // With fewer columns than rows some left vectors have implicit zero singular values.
    let (smin, col) = if rows.len() > cols.len() {
        (0.0, null_left_vector(&b))
    } else {
        (smin, u.column(imin).iter().copied().collect::<Vec<_>>())
    };
    (smin, normalize_sign(col))
}

fn null_left_vector(b: &DMatrix<f64>) -> Vec<f64> {
    let bt = b.transpose();
    let svd = (b * bt).symmetric_eigen();
    let (imin, _) = svd
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    svd.eigenvectors.column(imin).iter().copied().collect()
}

fn normalize_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Indices of the periodic cube `{j + o : |o|_inf <= t}` in lexicographic offset order,
/// and the indices of its complement in ascending order.
pub fn neighborhood(d: usize, n: usize, center: usize, t: usize) -> (Vec<usize>, Vec<usize>) {
    let total = n.pow(d as u32);
    let c = coords(d, n, center);
    let w = 2 * t + 1;
    let mut inside = Vec::new();
    for k in 0..w.pow(d as u32) {
        let off = coords(d, w, k);
        let p: Vec<usize> = (0..d)
            .map(|a| (c[a] as isize + off[a] as isize - t as isize).rem_euclid(n as isize) as usize)
            .collect();
        inside.push(index(n, &p));
    }
    let mut mask = vec![false; total];
    for &i in &inside {
        mask[i] = true;
    }
    let outside = (0..total).filter(|&i| !mask[i]).collect();
    (inside, outside)
}

/// `B B^T` for `B = G[rows, cols]`.
pub fn block_gram(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let b = submatrix(g, rows, cols);
    &b * b.transpose()
}

/// Relative residual `||A x - b|| / ||b||`.
pub fn relative_residual(a: &DMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
    let ax = a * DVector::from_column_slice(x);
    let bv = DVector::from_column_slice(b);
    (ax - &bv).norm() / bv.norm()
}
