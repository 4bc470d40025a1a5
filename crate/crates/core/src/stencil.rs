//! Shift lists and optimal local stencils.
//!
//! For a shift `s` and radius `t`, the stencil `alpha` is the unit vector
//! minimizing `|| alpha^T G_s[mu, mu^c] ||_2` where `mu` is the cube of radius
//! `t` around the origin. Rather than forming the `m x (N - m)` block, we use
//!
//! ```text
//! G[mu, mu^c] G[mu, mu^c]^T = G[mu, :] G[mu, :]^T - G[mu, mu] G[mu, mu]^T
//! ```
//!
//! where the first term is read off the autocorrelation `g * g` of the kernel
//! vector. `alpha` is the eigenvector of the smallest eigenvalue of that
//! `m x m` matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{cube_offsets, GridSpec, RealField, MAX_DIM};
use crate::spectral::{greens_kernel, kernel_autocorrelation};

const PI_SQ: f64 = PI * PI;

/// Env var capping worker threads during stencil construction.
pub const THREADS_ENV: &str = "PERISOLVE_THREADS";

/// Shift value `(4m + 2) pi^2`.
#[inline]
pub fn shift_value(m: i64) -> f64 {
    (4 * m + 2) as f64 * PI_SQ
}

/// The `m` whose shift `(4m + 2) pi^2` is nearest to `target` (ties round up).
pub fn snap_shift(target: f64) -> i64 {
    let m = ((target / PI_SQ - 2.0) / 4.0).round() as i64;
    // `round` works on the scaled value; confirm against the actual lattice.
    [m - 1, m, m + 1]
        .into_iter()
        .min_by(|&a, &b| {
            let da = (shift_value(a) - target).abs();
            let db = (shift_value(b) - target).abs();
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .unwrap()
}

/// Sorted, deduplicated shifts of the form `(4m + 2) pi^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftList {
    lattice: Vec<i64>,
    shifts: Vec<f64>,
    v_min: f64,
    v_max: f64,
}

impl ShiftList {
    /// Build directly from lattice indices `m`.
    pub fn from_lattice(mut lattice: Vec<i64>, v_min: f64, v_max: f64) -> Result<Self> {
        lattice.sort_unstable();
        lattice.dedup();
        if lattice.is_empty() {
            return Err(Error::InvalidProblem("empty shift list".into()));
        }
        let shifts = lattice.iter().map(|&m| shift_value(m)).collect();
        Ok(Self {
            lattice,
            shifts,
            v_min,
            v_max,
        })
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    /// The integers `m` with `s = (4m + 2) pi^2`.
    pub fn lattice(&self) -> &[i64] {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }
}

/// Evenly spaced targets over `[v_min, v_max]` (endpoints included), snapped to
/// the resonance-free lattice.
pub fn build_shift_list(v: &RealField, count: usize) -> Result<ShiftList> {
    shift_list_for_range(v.min(), v.max(), count)
}

pub fn shift_list_for_range(v_min: f64, v_max: f64, count: usize) -> Result<ShiftList> {
    if count == 0 {
        return Err(Error::InvalidProblem("shift count must be positive".into()));
    }
    let targets: Vec<f64> = if count == 1 {
        vec![0.5 * (v_min + v_max)]
    } else {
        let step = (v_max - v_min) / (count - 1) as f64;
        (0..count).map(|i| v_min + step * i as f64).collect()
    };
    ShiftList::from_lattice(targets.into_iter().map(snap_shift).collect(), v_min, v_max)
}

/// Index of the shift nearest to each `v_j`; ties go to the smaller shift.
pub fn assign_shifts(v: &RealField, shifts: &ShiftList) -> Vec<usize> {
    let s = shifts.shifts();
    v.values()
        .iter()
        .map(|&vj| {
            let mut best = 0;
            for (i, &si) in s.iter().enumerate().skip(1) {
                if (si - vj).abs() < (s[best] - vj).abs() {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Optimal stencil for one `(s, t)` pair.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub s: f64,
    pub t: usize,
    /// Offsets of the cube around the origin, lexicographic, dimension 0 slowest.
    pub offsets: Vec<[isize; MAX_DIM]>,
    /// Unit stencil vector; its largest-magnitude entry is positive.
    pub alpha: Vec<f64>,
    /// `G_s[mu, mu]`, row-major `m x m`.
    pub green_block: Vec<f64>,
    /// `alpha^T G_s[mu, mu]`: the retained part of the row of `Q G_s`.
    pub c_row: Vec<f64>,
    /// `|| alpha^T G_s[mu, mu^c] ||_2`.
    pub sigma_min: f64,
    /// Smallest eigenvalue of `A1 - A2` before clamping at zero.
    pub min_eigenvalue: f64,
}

impl Stencil {
    pub fn size(&self) -> usize {
        self.alpha.len()
    }
}

fn check_radius(grid: GridSpec, t: usize) -> Result<()> {
    if t == 0 || 2 * t + 1 >= grid.n() {
        return Err(Error::RadiusTooLarge { t, n: grid.n() });
    }
    Ok(())
}

fn offset_index(grid: GridSpec, a: &[isize; MAX_DIM], b: &[isize; MAX_DIM]) -> usize {
    let mut diff = [0isize; MAX_DIM];
    for k in 0..grid.dim() {
        diff[k] = a[k] - b[k];
    }
    grid.shifted(0, &diff)
}

/// `G_s[mu, mu]` for the radius-`t` cube, row-major.
pub fn green_block(grid: GridSpec, g: &RealField, t: usize) -> Vec<f64> {
    let offsets = cube_offsets(grid.dim(), t);
    let mut out = Vec::with_capacity(offsets.len() * offsets.len());
    for p in &offsets {
        for q in &offsets {
            out.push(g[offset_index(grid, p, q)]);
        }
    }
    out
}

/// `A1 - A2 = G[mu, :] G[mu, :]^T - G[mu, mu] G[mu, mu]^T` from the kernel and
/// its autocorrelation.
pub fn offpattern_gram(grid: GridSpec, g: &RealField, autocorr: &RealField, t: usize) -> DMatrix<f64> {
    let offsets = cube_offsets(grid.dim(), t);
    let m = offsets.len();
    let block = DMatrix::from_row_slice(m, m, &green_block(grid, g, t));
    let a1 = DMatrix::from_fn(m, m, |p, q| autocorr[offset_index(grid, &offsets[p], &offsets[q])]);
    let a2 = &block * block.transpose();
    a1 - a2
}

/// Compute the stencil for `(s, t)` from scratch.
pub fn compute_stencil(grid: GridSpec, s: f64, t: usize) -> Result<Stencil> {
    check_radius(grid, t)?;
    let g = greens_kernel(grid, s)?;
    let a = kernel_autocorrelation(grid, &g)?;
    Ok(stencil_from_kernels(grid, s, t, &g, &a))
}

fn stencil_from_kernels(grid: GridSpec, s: f64, t: usize, g: &RealField, a: &RealField) -> Stencil {
    let offsets = cube_offsets(grid.dim(), t);
    let m = offsets.len();
    let gram = offpattern_gram(grid, g, a, t);
    let eig = SymmetricEigen::new(gram);
    let mut imin = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < eig.eigenvalues[imin] {
            imin = i;
        }
    }
    let min_eigenvalue = eig.eigenvalues[imin];
    let mut alpha: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
    let norm = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut lead = 0;
    for (i, x) in alpha.iter().enumerate() {
        if x.abs() > alpha[lead].abs() {
            lead = i;
        }
    }
    let sign = if alpha[lead] < 0.0 { -1.0 } else { 1.0 };
    alpha.iter_mut().for_each(|x| *x *= sign / norm);

    let block = green_block(grid, g, t);
    let c_row = (0..m)
        .map(|q| (0..m).map(|p| alpha[p] * block[p * m + q]).sum())
        .collect();
    Stencil {
        s,
        t,
        offsets,
        alpha,
        green_block: block,
        c_row,
        sigma_min: min_eigenvalue.max(0.0).sqrt(),
        min_eigenvalue,
    }
}

/// Stencils for every shift and every radius `1..=t_max`.
#[derive(Debug, Clone)]
pub struct StencilTable {
    grid: GridSpec,
    shifts: ShiftList,
    t_max: usize,
    stencils: Vec<Stencil>,
    kernel_transforms: usize,
}

impl StencilTable {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn shifts(&self) -> &ShiftList {
        &self.shifts
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn get(&self, shift_index: usize, t: usize) -> Result<&Stencil> {
        if t == 0 || t > self.t_max || shift_index >= self.shifts.len() {
            return Err(Error::MissingStencil { shift_index, t });
        }
        Ok(&self.stencils[shift_index * self.t_max + t - 1])
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    /// Number of kernel autocorrelations performed while building the table.
    pub fn kernel_transforms(&self) -> usize {
        self.kernel_transforms
    }

    pub fn iter(&self) -> impl Iterator<Item = &Stencil> {
        self.stencils.iter()
    }
}

pub(crate) fn with_worker_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0);
    match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Build all stencils; each shift's kernel and autocorrelation are computed once
/// and shared across radii.
pub fn build_stencil_table(grid: GridSpec, shifts: &ShiftList, t_max: usize) -> Result<StencilTable> {
    check_radius(grid, t_max)?;
    let per_shift: Vec<Result<Vec<Stencil>>> = with_worker_pool(|| {
        shifts
            .shifts()
            .par_iter()
            .map(|&s| {
                let g = greens_kernel(grid, s)?;
                let a = kernel_autocorrelation(grid, &g)?;
                Ok((1..=t_max)
                    .map(|t| stencil_from_kernels(grid, s, t, &g, &a))
                    .collect())
            })
            .collect()
    });
    let mut stencils = Vec::with_capacity(shifts.len() * t_max);
    for r in per_shift {
        stencils.extend(r?);
    }
    Ok(StencilTable {
        grid,
        shifts: shifts.clone(),
        t_max,
        stencils,
        kernel_transforms: shifts.len(),
    })
}

/// One column of a row of `Q G_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEntry {
    pub column: usize,
    pub magnitude: f64,
    /// Whether the column lies in the stencil support (kept in `C`) or is truncated.
    pub reserved: bool,
}

/// Magnitudes `|alpha^T G_s[mu_j, :]|` across row `j` of `Q G_s` on a 1D grid.
pub fn qg_row_profile(grid: GridSpec, s: f64, t: usize, j: usize) -> Result<Vec<ProfileEntry>> {
    if grid.dim() != 1 {
        return Err(Error::InvalidProblem(
            "row profiles are defined on 1D grids".into(),
        ));
    }
    if j >= grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: j,
        });
    }
    check_radius(grid, t)?;
    let g = greens_kernel(grid, s)?;
    let a = kernel_autocorrelation(grid, &g)?;
    let stencil = stencil_from_kernels(grid, s, t, &g, &a);
    let n = grid.n() as isize;
    Ok((0..grid.n())
        .map(|c| {
            let val: f64 = stencil
                .offsets
                .iter()
                .zip(&stencil.alpha)
                .map(|(o, &al)| al * g[(j as isize + o[0] - c as isize).rem_euclid(n) as usize])
                .sum();
            let dist = (c as isize - j as isize).rem_euclid(n);
            let dist = dist.min(n - dist) as usize;
            ProfileEntry {
                column: c,
                magnitude: val.abs(),
                reserved: dist <= t,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn snapping_targets() {
        assert_eq!(snap_shift(-620.0), -16);
        assert!((shift_value(-16) + 62.0 * PI_SQ).abs() < 1e-12);
        assert_eq!(snap_shift(2.0 * PI_SQ), 0);
        assert_eq!(snap_shift(0.0), 0); // -2 pi^2 and 2 pi^2 tie; the larger wins
    }

    #[test]
    fn constant_field_gives_single_shift() {
        let grid = make_grid(2, 8).unwrap();
        let v = RealField::constant(grid, -611.98);
        let s = build_shift_list(&v, 4).unwrap();
        assert_eq!(s.lattice(), &[-16]);
        assert_eq!(assign_shifts(&v, &s), vec![0; 64]);
    }

    #[test]
    fn range_targets_snap_independently() {
        let s = shift_list_for_range(-1000.0, -100.0, 4).unwrap();
        let brute: Vec<i64> = [-1000.0, -700.0, -400.0, -100.0]
            .iter()
            .map(|&x| {
                (-100..100)
                    .min_by(|&a, &b| {
                        (shift_value(a) - x)
                            .abs()
                            .total_cmp(&(shift_value(b) - x).abs())
                    })
                    .unwrap()
            })
            .collect();
        assert_eq!(s.lattice(), &brute[..]);
        assert_eq!(s.len(), 4);
        assert!(s.shifts().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(shift_list_for_range(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn assignment_ties_go_low() {
        let grid = make_grid(1, 4).unwrap();
        let shifts = ShiftList::from_lattice(vec![0, 1], 0.0, 0.0).unwrap();
        let mid = 0.5 * (shifts.shifts()[0] + shifts.shifts()[1]);
        let v = RealField::new(grid, vec![mid, mid + 1.0, mid - 1.0, 1e6]).unwrap();
        assert_eq!(assign_shifts(&v, &shifts), vec![0, 1, 0, 1]);
    }

    #[test]
    fn assignment_matches_linear_scan() {
        let grid = make_grid(2, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = RealField::from_fn(grid, |_| rng.gen_range(-3000.0..-200.0));
        let shifts = build_shift_list(&v, 4).unwrap();
        let got = assign_shifts(&v, &shifts);
        for (j, &vj) in v.values().iter().enumerate() {
            let dists: Vec<f64> = shifts.shifts().iter().map(|s| (s - vj).abs()).collect();
            let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
            let first = dists.iter().position(|&x| x == best).unwrap();
            assert_eq!(got[j], first);
        }
    }

    #[test]
    fn stencil_invariants() {
        let grid = make_grid(2, 16).unwrap();
        let st = compute_stencil(grid, -62.0 * PI_SQ, 2).unwrap();
        assert_eq!(st.size(), 25);
        let norm: f64 = st.alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(st.sigma_min >= 0.0);
        let m = st.size();
        for p in 0..m {
            for q in 0..m {
                assert_eq!(st.green_block[p * m + q], st.green_block[q * m + p]);
            }
        }
        let lead = st
            .alpha
            .iter()
            .cloned()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        assert!(lead > 0.0);
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        for (d, n) in [(1, 32), (2, 16), (3, 8)] {
            let grid = make_grid(d, n).unwrap();
            for s in [2.0 * PI_SQ, -62.0 * PI_SQ] {
                let g = greens_kernel(grid, s).unwrap();
                let a = kernel_autocorrelation(grid, &g).unwrap();
                for t in 1..=2.min((n - 2) / 2) {
                    let gram = offpattern_gram(grid, &g, &a, t);
                    let a1_norm = (0..gram.nrows()).map(|i| a[0].abs().max(gram[(i, i)].abs())).fold(0.0, f64::max);
                    let eig = gram.symmetric_eigenvalues();
                    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                    assert!(lo >= -1e-10 * a1_norm, "d={d} s={s} t={t}: {lo}");
                }
            }
        }
    }

    #[test]
    fn radius_must_fit() {
        let grid = make_grid(1, 8).unwrap();
        assert!(matches!(compute_stencil(grid, 2.0 * PI_SQ, 4), Err(Error::RadiusTooLarge { .. })));
        assert!(compute_stencil(grid, 2.0 * PI_SQ, 3).is_ok());
        assert!(compute_stencil(grid, 2.0 * PI_SQ, 0).is_err());
    }

    #[test]
    fn resonance_is_propagated() {
        let grid = make_grid(1, 8).unwrap();
        assert!(matches!(
            compute_stencil(grid, -4.0 * PI_SQ, 1),
            Err(Error::ResonantShift { .. })
        ));
    }

    #[test]
    fn table_reuses_kernels() {
        let grid = make_grid(2, 16).unwrap();
        let shifts = shift_list_for_range(-1000.0, -100.0, 4).unwrap();
        let table = build_stencil_table(grid, &shifts, 2).unwrap();
        assert_eq!(table.len(), 8);
        assert_eq!(table.kernel_transforms(), 4);
        for si in 0..4 {
            for t in 1..=2 {
                let st = table.get(si, t).unwrap();
                assert_eq!(st.t, t);
                assert_eq!(st.s, shifts.shifts()[si]);
            }
        }
        assert!(table.get(4, 1).is_err());
        assert!(table.get(0, 3).is_err());
    }

    #[test]
    fn table_matches_direct_computation_bitwise() {
        let grid = make_grid(2, 16).unwrap();
        let shifts = shift_list_for_range(-700.0, -100.0, 2).unwrap();
        let table = build_stencil_table(grid, &shifts, 2).unwrap();
        let direct = compute_stencil(grid, shifts.shifts()[1], 2).unwrap();
        assert_eq!(table.get(1, 2).unwrap().alpha, direct.alpha);
    }

    #[test]
    fn profile_partitions_columns() {
        let grid = make_grid(1, 32).unwrap();
        let prof = qg_row_profile(grid, -62.0 * PI_SQ, 1, 16).unwrap();
        assert_eq!(prof.len(), 32);
        let reserved: Vec<usize> = prof.iter().filter(|e| e.reserved).map(|e| e.column).collect();
        assert_eq!(reserved, vec![15, 16, 17]);
        for off in 1..16 {
            let a = prof[16 + off].magnitude;
            let b = prof[16 - off].magnitude;
            assert!((a - b).abs() <= 1e-9 * a.max(b).max(1e-300), "offset {off}");
        }
        assert!(qg_row_profile(make_grid(2, 8).unwrap(), 2.0 * PI_SQ, 1, 0).is_err());
    }
}
