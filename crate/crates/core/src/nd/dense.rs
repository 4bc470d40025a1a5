//! Dense kernels for frontal matrices.

use crate::error::{Error, Result};

/// Relative threshold for accepting the diagonal as pivot.
pub const PIVOT_THRESHOLD: f64 = 0.1;

/// Pivots smaller than this times the front scale are treated as zero.
pub const PIVOT_FLOOR: f64 = 1e-14;

const PANEL: usize = 48;

/// Partially factor a row-major `nf x nf` front, eliminating its leading `k`
/// columns with row pivoting restricted to the leading `k` rows.
///
/// On return rows `0..k` hold `L11 \ U11` and `U12`, rows `k..` hold `L21` in
/// columns `0..k` and the Schur complement in columns `k..`. Entry `i` of the
/// returned vector is the row swapped with row `i` at step `i`.
pub fn partial_lu(a: &mut [f64], nf: usize, k: usize, scale: f64) -> Result<Vec<usize>> {
    debug_assert_eq!(a.len(), nf * nf);
    debug_assert!(k <= nf);
    let floor = PIVOT_FLOOR * scale;
    let mut piv = Vec::with_capacity(k);
    let mut j0 = 0;
    while j0 < k {
        let jend = (j0 + PANEL).min(k);
        for j in j0..jend {
            let mut best = j;
            let mut amax = 0.0f64;
            for r in j..k {
                let x = a[r * nf + j].abs();
                if x > amax {
                    amax = x;
                    best = r;
                }
            }
            if !(amax > floor) {
                return Err(Error::SingularPivot { step: j, pivot: amax });
            }
            let p = if a[j * nf + j].abs() >= PIVOT_THRESHOLD * amax { j } else { best };
            if p != j {
                for c in 0..nf {
                    a.swap(j * nf + c, p * nf + c);
                }
            }
            piv.push(p);
            let inv = 1.0 / a[j * nf + j];
            let (head, tail) = a.split_at_mut((j + 1) * nf);
            let pivot_row = &head[j * nf + j + 1..j * nf + jend];
            for row in tail.chunks_exact_mut(nf) {
                let l = row[j] * inv;
                row[j] = l;
                if l != 0.0 {
                    for (x, &u) in row[j + 1..jend].iter_mut().zip(pivot_row) {
                        *x -= l * u;
                    }
                }
            }
        }
        if jend < nf {
            // U block row: solve with the unit lower panel.
            for j in j0..jend {
                let (head, tail) = a.split_at_mut((j + 1) * nf);
                let src = &head[j * nf + jend..j * nf + nf];
                for i in j + 1..jend {
                    let row = &mut tail[(i - j - 1) * nf..(i - j) * nf];
                    let l = row[j];
                    if l != 0.0 {
                        for (x, &u) in row[jend..].iter_mut().zip(src) {
                            *x -= l * u;
                        }
                    }
                }
            }
            trailing_update(a, nf, j0, jend);
        }
        j0 = jend;
    }
    Ok(piv)
}

/// `A[jend.., jend..] -= A[jend.., j0..jend] * A[j0..jend, jend..]`.
fn trailing_update(a: &mut [f64], nf: usize, j0: usize, jend: usize) {
    let m = nf - jend;
    let kk = jend - j0;
    if m == 0 || kk == 0 {
        return;
    }
    let base = a.as_mut_ptr();
    // SAFETY: the three blocks are disjoint sub-rectangles of `a`: rows `jend..`
    // x cols `j0..jend` (lhs), rows `j0..jend` x cols `jend..` (rhs), and rows
    // `jend..` x cols `jend..` (output). All offsets stay within `nf * nf`.
    unsafe {
        let lhs = base.add(jend * nf + j0) as *const f64;
        let rhs = base.add(j0 * nf + jend) as *const f64;
        let out = base.add(jend * nf + jend);
        matrixmultiply::dgemm(
            m,
            kk,
            m,
            -1.0,
            lhs,
            nf as isize,
            1,
            rhs,
            nf as isize,
            1,
            1.0,
            out,
            nf as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(nf: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..nf * nf).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn reference_partial(a: &[f64], nf: usize, k: usize) -> (Vec<f64>, Vec<usize>) {
        // Unblocked right-looking elimination with the same pivot rule.
        let mut a = a.to_vec();
        let mut piv = Vec::new();
        for j in 0..k {
            let mut best = j;
            for r in j..k {
                if a[r * nf + j].abs() > a[best * nf + j].abs() {
                    best = r;
                }
            }
            let amax = a[best * nf + j].abs();
            let p = if a[j * nf + j].abs() >= PIVOT_THRESHOLD * amax { j } else { best };
            for c in 0..nf {
                a.swap(j * nf + c, p * nf + c);
            }
            piv.push(p);
            for r in j + 1..nf {
                let l = a[r * nf + j] / a[j * nf + j];
                a[r * nf + j] = l;
                for c in j + 1..nf {
                    a[r * nf + c] -= l * a[j * nf + c];
                }
            }
        }
        (a, piv)
    }

    #[test]
    fn blocked_matches_unblocked() {
        for (nf, k) in [(5, 3), (60, 60), (130, 100), (130, 17), (97, 0)] {
            let a0 = random(nf, nf as u64 + k as u64);
            let mut a = a0.clone();
            let piv = partial_lu(&mut a, nf, k, 1.0).unwrap();
            let (want, want_piv) = reference_partial(&a0, nf, k);
            assert_eq!(piv, want_piv);
            let err = a.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "nf={nf} k={k}: {err}");
        }
    }

    #[test]
    fn pivots_stay_within_leading_rows() {
        // Column 0 is largest in a trailing row, which must not be chosen.
        let nf = 3;
        let mut a = vec![1e-3, 1.0, 0.0, 1.0, 2.0, 1.0, 100.0, 0.0, 1.0];
        let piv = partial_lu(&mut a, nf, 2, 100.0).unwrap();
        assert_eq!(piv, vec![1, 1]);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut a = vec![0.0, 1.0, 0.0, 1.0];
        let err = partial_lu(&mut a, 2, 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::SingularPivot { step: 0, .. }));
    }
}
