//! Restarted GMRES with a left preconditioner.
//!
//! Solves `M A x = M b` from a zero initial guess, stopping when the
//! preconditioned residual `||M (b - A x)|| / ||M b||` drops below the
//! tolerance. The Arnoldi basis uses modified Gram-Schmidt with a second pass
//! whenever orthogonalization removes more than a sliver of the new vector.

use std::time::Duration;

use crate::error::{Error, Result};

/// A square linear map `y = Op x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// Wrap a closure as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    pub restart: usize,
    /// Cap on the total number of Arnoldi steps.
    pub max_iter: usize,
    /// Record `max |V^T V - I|` per cycle (costs `O(restart^2 N)` per cycle).
    pub check_orthogonality: bool,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            restart: 40,
            max_iter: 200,
            check_orthogonality: false,
        }
    }
}

/// Stage durations of one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub stencil: Duration,
    pub nd_setup: Duration,
    /// Time spent inside sparse triangular solves during the iteration.
    pub nd_solve: Duration,
    pub gmres: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Total preconditioned matrix-vector products.
    pub iterations: usize,
    pub converged: bool,
    /// Relative preconditioned residual after each iteration.
    pub residual_history: Vec<f64>,
    /// Iteration index at which each restart cycle began.
    pub cycle_starts: Vec<usize>,
    /// `||A x - b|| / ||b||` of the returned iterate.
    pub true_residual: f64,
    pub timings: StageTimings,
    /// Largest `|V^T V - I|` entry seen, when requested.
    pub orthogonality_loss: Option<f64>,
    pub seed: Option<u64>,
}

const BREAKDOWN: f64 = 1e-14;
const REORTH_LOSS: f64 = 1e-3;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Preconditioned residual `M (b - A x)`.
fn preconditioned_residual(
    a: &impl LinearOperator,
    m: &impl LinearOperator,
    x: &[f64],
    b: &[f64],
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    a.apply(x, &mut ax);
    check_finite(&ax, "operator application")?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    check_finite(&z, "preconditioner application")?;
    Ok(z)
}

pub fn gmres(
    a: &impl LinearOperator,
    m: &impl LinearOperator,
    b: &[f64],
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n || m.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !(cfg.tol > 0.0) || cfg.restart == 0 {
        return Err(Error::InvalidProblem(
            "GMRES needs tol > 0 and restart >= 1".into(),
        ));
    }
    check_finite(b, "right-hand side")?;
    let mut report = SolveReport::default();
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }

    let mut r = preconditioned_residual(a, m, &x, b)?;
    let mb_norm = norm(&r);
    if mb_norm == 0.0 {
        return Err(Error::InvalidProblem("preconditioner annihilates b".into()));
    }
    let mut beta = mb_norm;
    let restart = cfg.restart.min(n);
    let mut av = vec![0.0; n];
    let mut w = vec![0.0; n];

    while beta / mb_norm > cfg.tol && report.iterations < cfg.max_iter {
        report.cycle_starts.push(report.iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|x| x / beta).collect());
        // Hessenberg columns, each of length j + 2.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        let mut breakdown = false;

        for j in 0..restart {
            a.apply(&basis[j], &mut av);
            check_finite(&av, "operator application")?;
            m.apply(&av, &mut w);
            check_finite(&w, "preconditioner application")?;
            report.iterations += 1;

            let before = norm(&w);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                axpy(-hij, v, &mut w);
            }
            let mut after = norm(&w);
            if after < (1.0 - REORTH_LOSS) * before {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    col[i] += c;
                    axpy(-c, v, &mut w);
                }
                after = norm(&w);
            }
            col[j + 1] = after;

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            let res = g[j + 1].abs();
            report.residual_history.push(res / mb_norm);

            if after <= BREAKDOWN * before {
                breakdown = true;
                break;
            }
            if res / mb_norm <= cfg.tol || report.iterations >= cfg.max_iter {
                break;
            }
            basis.push(w.iter().map(|x| x / after).collect());
        }

        // Back substitution for the least-squares coefficients.
        let k = h.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().take(k).skip(i + 1) {
                acc -= h[l][i] * yl;
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut x);
        }

        if cfg.check_orthogonality {
            let mut loss = report.orthogonality_loss.unwrap_or(0.0);
            for (i, vi) in basis.iter().enumerate() {
                for (l, vl) in basis.iter().enumerate() {
                    let target = if i == l { 1.0 } else { 0.0 };
                    loss = loss.max((dot(vi, vl) - target).abs());
                }
            }
            report.orthogonality_loss = Some(loss);
        }

        r = preconditioned_residual(a, m, &x, b)?;
        beta = norm(&r);
        if breakdown {
            break;
        }
    }

    report.converged = beta / mb_norm <= cfg.tol;
    let mut ax = vec![0.0; n];
    a.apply(&x, &mut ax);
    report.true_residual = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / b_norm;
    Ok((x, report))
}
