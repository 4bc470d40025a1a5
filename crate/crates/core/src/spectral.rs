//! Pseudospectral operator `L + diag(v)` and the translation-invariant Green's
//! kernels of `L + s`, all applied through d-dimensional FFTs.
//!
//! `L` is diagonal in Fourier space with symbol `4 pi^2 |k|^2`. A circulant
//! matrix `G[j1, j2] = g[j1 - j2]` is represented by its kernel vector `g`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Relative tolerance used to decide that `4 pi^2 |k|^2 + s` vanishes.
pub const RESONANCE_TOL: f64 = 1e-10;

/// Unnormalized forward/inverse d-dimensional FFT on a grid.
#[derive(Clone)]
pub struct FftNd {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("grid", &self.grid).finish()
    }
}

impl FftNd {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform without the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let total = self.grid.len();
        debug_assert_eq!(data.len(), total);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let strides = self.grid.strides();
        for axis in 0..self.grid.dim() {
            let stride = strides[axis];
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            // Gather `stride` lines at a time so each gather reads contiguous rows.
            let block = stride * n;
            let mut lines = vec![Complex64::default(); block];
            for base in (0..total).step_by(block) {
                let chunk = &mut data[base..base + block];
                for i in 0..n {
                    for off in 0..stride {
                        lines[off * n + i] = chunk[i * stride + off];
                    }
                }
                plan.process_with_scratch(&mut lines, &mut scratch);
                for i in 0..n {
                    for off in 0..stride {
                        chunk[i * stride + off] = lines[off * n + i];
                    }
                }
            }
        }
    }
}

fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Inverse transform, scale by `1/N`, and drop the imaginary part.
///
/// Returns the real data and the relative size of the discarded imaginary part.
fn inverse_to_real(fft: &FftNd, mut spec: Vec<Complex64>) -> (Vec<f64>, f64) {
    fft.inverse(&mut spec);
    let scale = 1.0 / spec.len() as f64;
    let mut re_norm = 0.0f64;
    let mut im_norm = 0.0f64;
    let out = spec
        .iter()
        .map(|z| {
            re_norm = re_norm.max(z.re.abs());
            im_norm = im_norm.max(z.im.abs());
            z.re * scale
        })
        .collect();
    let residue = if re_norm > 0.0 { im_norm / re_norm } else { im_norm };
    (out, residue)
}

/// `(L + diag(v)) u` with plans cached for repeated application.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    fft: FftNd,
    symbol: Vec<f64>,
    potential: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(v: &RealField) -> Self {
        let grid = v.grid();
        let symbol = grid
            .wavenumber_sq()
            .into_iter()
            .map(|k2| FOUR_PI_SQ * k2 as f64)
            .collect();
        Self {
            fft: FftNd::new(grid),
            symbol,
            potential: v.values().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let (lu, _) = self.apply_laplacian(u);
        for ((o, l), (&vi, &ui)) in out
            .iter_mut()
            .zip(lu)
            .zip(self.potential.iter().zip(u))
        {
            *o = l + vi * ui;
        }
    }

    fn apply_laplacian(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let mut spec = to_complex(u);
        self.fft.forward(&mut spec);
        for (z, &sym) in spec.iter_mut().zip(&self.symbol) {
            *z *= sym;
        }
        inverse_to_real(&self.fft, spec)
    }
}

/// Apply the pseudospectral operator `(L + diag(v)) u`.
pub fn apply_operator(grid: GridSpec, v: &RealField, u: &RealField) -> Result<RealField> {
    Ok(apply_operator_with_residue(grid, v, u)?.0)
}

pub(crate) fn apply_operator_with_residue(
    grid: GridSpec,
    v: &RealField,
    u: &RealField,
) -> Result<(RealField, f64)> {
    grid.check_len(v.values().len())?;
    grid.check_len(u.values().len())?;
    if v.grid() != grid || u.grid() != grid {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: u.values().len(),
        });
    }
    let op = SpectralOperator::new(v);
    let (lu, residue) = op.apply_laplacian(u.values());
    let out = lu
        .into_iter()
        .zip(v.values().iter().zip(u.values()))
        .map(|(l, (&vi, &ui))| l + vi * ui)
        .collect();
    Ok((RealField::from_values_unchecked(grid, out), residue))
}

/// Fourier symbol of `(L + s)^{-1}`, rejecting resonant shifts.
fn green_symbol(grid: GridSpec, s: f64) -> Result<Vec<f64>> {
    let tol = RESONANCE_TOL * s.abs().max(1.0);
    grid.wavenumber_sq()
        .into_iter()
        .map(|k2| {
            let denom = FOUR_PI_SQ * k2 as f64 + s;
            if denom.abs() < tol {
                Err(Error::ResonantShift {
                    shift: s,
                    k2,
                    gap: denom.abs(),
                })
            } else {
                Ok(1.0 / denom)
            }
        })
        .collect()
}

/// Kernel vector `g` of the circulant Green's matrix `G_s = (L + s)^{-1}`.
pub fn greens_kernel(grid: GridSpec, s: f64) -> Result<RealField> {
    Ok(greens_kernel_with_residue(grid, s)?.0)
}

pub(crate) fn greens_kernel_with_residue(grid: GridSpec, s: f64) -> Result<(RealField, f64)> {
    let symbol = green_symbol(grid, s)?;
    let fft = FftNd::new(grid);
    let spec = symbol.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let (mut g, residue) = inverse_to_real(&fft, spec);
    symmetrize(grid, &mut g);
    Ok((RealField::from_values_unchecked(grid, g), residue))
}

/// Periodic autocorrelation `a = g * g`, so that `a[j1 - j2] = G[j1,:] . G[j2,:]`.
pub fn kernel_autocorrelation(grid: GridSpec, g: &RealField) -> Result<RealField> {
    Ok(kernel_autocorrelation_with_residue(grid, g)?.0)
}

pub(crate) fn kernel_autocorrelation_with_residue(
    grid: GridSpec,
    g: &RealField,
) -> Result<(RealField, f64)> {
    grid.check_len(g.values().len())?;
    let fft = FftNd::new(grid);
    let mut spec = to_complex(g.values());
    fft.forward(&mut spec);
    for z in spec.iter_mut() {
        *z = *z * *z;
    }
    let (mut a, residue) = inverse_to_real(&fft, spec);
    symmetrize(grid, &mut a);
    Ok((RealField::from_values_unchecked(grid, a), residue))
}

/// Average `x[j]` with `x[-j]` so even kernels are exactly even.
fn symmetrize(grid: GridSpec, x: &mut [f64]) {
    let n = grid.n();
    for j in 0..x.len() {
        let c = grid.coords(j);
        let mut mirror = [0; crate::grid::MAX_DIM];
        for k in 0..grid.dim() {
            mirror[k] = (n - c[k]) % n;
        }
        let m = grid.index(&mirror);
        if m > j {
            let avg = 0.5 * (x[j] + x[m]);
            x[j] = avg;
            x[m] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: GridSpec, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RealField::from_fn(grid, |_| rng.gen_range(-1.0..1.0))
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn cosine_is_eigenfunction() {
        let g = make_grid(1, 4).unwrap();
        let u = RealField::from_fn(g, |j| (2.0 * PI * j as f64 / 4.0).cos());
        let out = apply_operator(g, &RealField::zeros(g), &u).unwrap();
        let expect: Vec<f64> = u.values().iter().map(|x| FOUR_PI_SQ * x).collect();
        for (a, b) in out.values().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12 * FOUR_PI_SQ);
        }
    }

    #[test]
    fn constants_map_to_potential() {
        let g = make_grid(2, 8).unwrap();
        let v = random_field(g, 3);
        let out = apply_operator(g, &v, &RealField::constant(g, 1.0)).unwrap();
        for (a, b) in out.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_waves_are_eigenvectors() {
        // cos and sin parts of e_k for a handful of k in 3D.
        let g = make_grid(3, 8).unwrap();
        for k in [[1, 0, 0], [2, -3, 1], [-4, 0, 3], [0, 0, 0]] {
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            for phase in [0.0, PI / 2.0] {
                let u = RealField::from_fn(g, |idx| {
                    let c = g.coords(idx);
                    let arg: f64 = (0..3).map(|a| k[a] as f64 * c[a] as f64).sum::<f64>();
                    (2.0 * PI * arg / 8.0 + phase).cos()
                });
                if u.values().iter().all(|x| x.abs() < 1e-12) {
                    continue;
                }
                let out = apply_operator(g, &RealField::zeros(g), &u).unwrap();
                let expect: Vec<f64> = u.values().iter().map(|x| FOUR_PI_SQ * k2 * x).collect();
                if k2 == 0.0 {
                    assert!(out.values().iter().all(|x| x.abs() < 1e-12));
                } else {
                    assert!(rel_err(out.values(), &expect) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_point_green_kernel() {
        let g = GridSpec::unchecked(1, 2);
        let s = 2.0 * PI * PI;
        let k = greens_kernel(g, s).unwrap();
        let p2 = PI * PI;
        assert!((k[0] - 1.0 / (3.0 * p2)).abs() < 1e-15);
        assert!((k[1] - 1.0 / (6.0 * p2)).abs() < 1e-15);
    }

    #[test]
    fn two_point_autocorrelation_matches_double_sum() {
        let grid = GridSpec::unchecked(1, 2);
        let g = greens_kernel(grid, 2.0 * PI * PI).unwrap();
        let a = kernel_autocorrelation(grid, &g).unwrap();
        // a[d] = sum_j g[d - j] g[j]
        for d in 0..2 {
            let brute: f64 = (0..2).map(|j| g[(d + 2 - j) % 2] * g[j]).sum();
            assert!((a[d] - brute).abs() < 1e-16);
        }
        let p4 = PI.powi(4);
        assert!((a[0] - 5.0 / (36.0 * p4)).abs() < 1e-15);
        assert!((a[1] - 4.0 / (36.0 * p4)).abs() < 1e-15);
    }

    #[test]
    fn kernel_sums_to_inverse_shift() {
        for (d, n) in [(1, 16), (2, 8), (3, 4)] {
            let grid = make_grid(d, n).unwrap();
            for s in [3.0, 2.0 * PI * PI, 1234.5] {
                let g = greens_kernel(grid, s).unwrap();
                let sum: f64 = g.values().iter().sum();
                assert!((sum * s - 1.0).abs() < 1e-12);
                let a = kernel_autocorrelation(grid, &g).unwrap();
                let asum: f64 = a.values().iter().sum();
                assert!((asum * s * s - 1.0).abs() < 1e-12);
                let zero_lag: f64 = g.values().iter().map(|x| x * x).sum();
                assert!((a[0] - zero_lag).abs() < 1e-12 * zero_lag);
            }
        }
    }

    #[test]
    fn green_kernel_is_symmetric() {
        let grid = make_grid(2, 16).unwrap();
        let g = greens_kernel(grid, -62.0 * PI * PI).unwrap();
        for idx in 0..grid.len() {
            let c = grid.coords(idx);
            let m = grid.index(&[(16 - c[0]) % 16, (16 - c[1]) % 16]);
            assert!((g[idx] - g[m]).abs() <= 1e-14 * g[0].abs().max(1e-3));
        }
    }

    #[test]
    fn green_inverts_shifted_operator() {
        let grid = make_grid(2, 16).unwrap();
        let s = -62.0 * PI * PI;
        let g = greens_kernel(grid, s).unwrap();
        let f = random_field(grid, 11);
        // G f as a circulant product, computed directly.
        let gf = RealField::from_fn(grid, |j| {
            (0..grid.len())
                .map(|i| {
                    let cj = grid.coords(j);
                    let ci = grid.coords(i);
                    let diff = grid.index(&[(cj[0] + 16 - ci[0]) % 16, (cj[1] + 16 - ci[1]) % 16]);
                    g[diff] * f[i]
                })
                .sum()
        });
        let back = apply_operator(grid, &RealField::constant(grid, s), &gf).unwrap();
        assert!(rel_err(back.values(), f.values()) < 1e-10);
    }

    #[test]
    fn autocorrelation_spectrum_is_squared_symbol() {
        let grid = make_grid(2, 8).unwrap();
        let s = 2.0 * PI * PI;
        let g = greens_kernel(grid, s).unwrap();
        let a = kernel_autocorrelation(grid, &g).unwrap();
        let fft = FftNd::new(grid);
        let mut spec = to_complex(a.values());
        fft.forward(&mut spec);
        for (z, k2) in spec.iter().zip(grid.wavenumber_sq()) {
            let want = 1.0 / (FOUR_PI_SQ * k2 as f64 + s).powi(2);
            assert!((z.re - want).abs() <= 1e-12 * want);
            assert!(z.im.abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn outputs_are_real() {
        let grid = make_grid(2, 16).unwrap();
        let v = random_field(grid, 1);
        let u = random_field(grid, 2);
        let (_, r1) = apply_operator_with_residue(grid, &v, &u).unwrap();
        let (g, r2) = greens_kernel_with_residue(grid, -62.0 * PI * PI).unwrap();
        let (_, r3) = kernel_autocorrelation_with_residue(grid, &g).unwrap();
        for r in [r1, r2, r3] {
            assert!(r <= 1e-13, "imaginary residue {r}");
        }
    }

    #[test]
    fn resonant_shift_is_rejected() {
        let grid = make_grid(2, 8).unwrap();
        // |k|^2 = 5 is attained at k = (1, 2).
        let err = greens_kernel(grid, -20.0 * PI * PI).unwrap_err();
        assert!(matches!(err, Error::ResonantShift { k2: 5, .. }));
        assert!(greens_kernel(grid, 0.0).is_err());
    }

    #[test]
    fn mismatched_lengths_error() {
        let g8 = make_grid(1, 8).unwrap();
        let g16 = make_grid(1, 16).unwrap();
        let err = apply_operator(g8, &RealField::zeros(g16), &RealField::zeros(g8));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
