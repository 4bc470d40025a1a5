//! Periodic Cartesian grid on `[0,1)^d` and real fields sampled on it.
//!
//! Points are stored row-major with dimension 0 varying slowest. The
//! frequency grid uses FFT-natural storage; [`GridSpec::frequency`] maps a
//! storage index to its signed wavenumber in `-n/2..n/2`.

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    d: usize,
    n: usize,
}

/// Build a grid with `n` points per dimension in `d` dimensions.
pub fn make_grid(d: usize, n: usize) -> Result<GridSpec> {
    GridSpec::new(d, n)
}

impl GridSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidDimension(d));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGridSize(n));
        }
        if !n.is_power_of_two() {
            return Err(Error::NonPowerOfTwo(n));
        }
        Ok(Self { d, n })
    }

    /// Grid without the `n >= 4` / power-of-two checks, for tiny hand-checked cases.
    #[cfg(test)]
    pub(crate) fn unchecked(d: usize, n: usize) -> Self {
        Self { d, n }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Step size `1/n`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of unknowns `n^d`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides, dimension 0 slowest.
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0; MAX_DIM];
        let mut acc = 1;
        for k in (0..self.d).rev() {
            s[k] = acc;
            acc *= self.n;
        }
        s
    }

    pub fn coords(&self, mut index: usize) -> [usize; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for k in (0..self.d).rev() {
            c[k] = index % self.n;
            index /= self.n;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords[..self.d]
            .iter()
            .fold(0, |acc, &c| acc * self.n + c % self.n)
    }

    /// Index of `j + offset` with periodic wrap.
    pub fn shifted(&self, j: usize, offset: &[isize]) -> usize {
        let c = self.coords(j);
        let n = self.n as isize;
        let mut idx = 0;
        for k in 0..self.d {
            let w = (c[k] as isize + offset[k]).rem_euclid(n) as usize;
            idx = idx * self.n + w;
        }
        idx
    }

    /// Signed wavenumber for FFT-natural storage index `i` along one axis.
    #[inline]
    pub fn frequency(&self, i: usize) -> isize {
        if i < self.n / 2 {
            i as isize
        } else {
            i as isize - self.n as isize
        }
    }

    /// `|k|^2` for every FFT-natural storage index, row-major.
    pub fn wavenumber_sq(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for idx in 0..self.len() {
            let c = self.coords(idx);
            let k2 = (0..self.d)
                .map(|k| {
                    let f = self.frequency(c[k]);
                    (f * f) as usize
                })
                .sum();
            out.push(k2);
        }
        out
    }

    /// Physical position `h * j` of point `index`.
    pub fn position(&self, index: usize) -> [f64; MAX_DIM] {
        let c = self.coords(index);
        let h = self.h();
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.d {
            x[k] = c[k] as f64 * h;
        }
        x
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Lexicographic offsets of the cube `{-t..=t}^d`, dimension 0 slowest.
pub fn cube_offsets(d: usize, t: usize) -> Vec<[isize; MAX_DIM]> {
    let w = 2 * t + 1;
    let m = w.pow(d as u32);
    let t = t as isize;
    (0..m)
        .map(|mut idx| {
            let mut o = [0isize; MAX_DIM];
            for k in (0..d).rev() {
                o[k] = (idx % w) as isize - t;
                idx /= w;
            }
            o
        })
        .collect()
}

/// A real array sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field construction"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl FnMut(usize) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(f).collect(),
        }
    }

    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for RealField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}
