//! Assembly of the sparse surrogate system.
//!
//! Row `j` uses the stencil for its assigned shift `s_j` and radius `t_j`:
//!
//! ```text
//! Q[j, mu] = alpha^T
//! C[j, mu] = alpha^T G_s[mu, mu]
//! P[j, mu] = Q[j, mu] + C[j, mu] diag(v[mu] - s_j)
//! ```
//!
//! with `mu` the periodic cube of radius `t_j` around `j`. Stencils are
//! translation invariant, so each row only translates a shared [`Stencil`].

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::sparse::CsrMatrix;
use crate::stencil::{Stencil, StencilTable};

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub grid: GridSpec,
    pub c: CsrMatrix,
    pub p: CsrMatrix,
    /// Index into the shift list for each point.
    pub shift_index: Vec<usize>,
    /// Stencil radius for each point.
    pub t_map: Vec<usize>,
}

fn row_columns(grid: GridSpec, j: usize, stencil: &Stencil) -> impl Iterator<Item = usize> + '_ {
    stencil.offsets.iter().map(move |o| grid.shifted(j, o))
}

pub fn assemble_sparse_system(
    grid: GridSpec,
    v: &RealField,
    table: &StencilTable,
    t_map: &[usize],
    shift_index: &[usize],
) -> Result<SparseSystem> {
    grid.check_len(v.values().len())?;
    grid.check_len(t_map.len())?;
    grid.check_len(shift_index.len())?;
    if table.grid() != grid {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: table.grid().len(),
        });
    }
    let nnz: usize = t_map.iter().map(|&t| (2 * t + 1).pow(grid.dim() as u32)).sum();
    let mut row_ptr = Vec::with_capacity(grid.len() + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut c_vals = Vec::with_capacity(nnz);
    let mut p_vals = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for j in 0..grid.len() {
        let stencil = table.get(shift_index[j], t_map[j])?;
        let s = stencil.s;
        for ((col, &alpha), &c) in row_columns(grid, j, stencil).zip(&stencil.alpha).zip(&stencil.c_row) {
            cols.push(col);
            c_vals.push(c);
            p_vals.push(alpha + c * (v[col] - s));
        }
        row_ptr.push(cols.len());
    }
    let n = grid.len();
    let c = CsrMatrix::new(n, n, row_ptr.clone(), cols.clone(), c_vals)?;
    let p = CsrMatrix::new(n, n, row_ptr, cols, p_vals)?;
    Ok(SparseSystem {
        grid,
        c,
        p,
        shift_index: shift_index.to_vec(),
        t_map: t_map.to_vec(),
    })
}

impl SparseSystem {
    /// Row `j` of `Q`, rebuilt from the stencil table.
    pub fn q_row(&self, table: &StencilTable, j: usize) -> Result<Vec<(usize, f64)>> {
        let stencil = table.get(self.shift_index[j], self.t_map[j])?;
        Ok(row_columns(self.grid, j, stencil).zip(stencil.alpha.iter().copied()).collect())
    }
}
