//! Matrix permanents and the permanent-based transition amplitude.
//!
//! This is the brute-force oracle for [`crate::fock::apply_transform`]:
//! `⟨m|U|n⟩ = per(U[rows(m), cols(n)]) / sqrt(Π n_i! Π m_j!)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{config, domain, Result};
use crate::fock::{factorial, ModeTransform, OccupationVector};

/// Largest matrix the permanent is evaluated for.
pub const MAX_PERMANENT_DIM: usize = 16;

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order so
/// each step updates the row sums with a single column.
pub fn permanent(a: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(domain("permanent needs a square matrix"));
    }
    if n > MAX_PERMANENT_DIM {
        return Err(domain(format!("permanent of a {n}x{n} matrix exceeds the {MAX_PERMANENT_DIM}x{MAX_PERMANENT_DIM} limit")));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let flipped = (next ^ gray).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += a[(i, flipped)];
            } else {
                *s -= a[(i, flipped)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if next.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Amplitude for `n_in -> n_out` under `t`. Occupation vectors are indexed by
/// position in `t.modes()` (the transform's local modes).
pub fn transition_amplitude(t: &ModeTransform, n_in: &OccupationVector, n_out: &OccupationVector) -> Result<Complex64> {
    let d = t.dim();
    if n_in.len() != d || n_out.len() != d {
        return Err(config(format!("occupation vectors must have {d} entries (the transform's modes)")));
    }
    if n_in.total() != n_out.total() {
        return Err(domain(format!("photon number mismatch: {} in, {} out", n_in.total(), n_out.total())));
    }
    let cols = n_in.photon_modes();
    let rows = n_out.photon_modes();
    let k = cols.len();
    let sub = DMatrix::from_fn(k, k, |r, c| t.matrix()[(rows[r], cols[c])]);
    let norm: f64 = n_in.counts().iter().chain(n_out.counts()).map(|&c| factorial(c)).product();
    Ok(permanent(&sub)? / norm.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Direct sum over permutations.
    fn permanent_naive(a: &DMatrix<Complex64>) -> Complex64 {
        fn rec(a: &DMatrix<Complex64>, row: usize, used: &mut Vec<bool>) -> Complex64 {
            if row == a.nrows() {
                return c(1.0);
            }
            let mut s = c(0.0);
            for col in 0..a.ncols() {
                if !used[col] {
                    used[col] = true;
                    s += a[(row, col)] * rec(a, row + 1, used);
                    used[col] = false;
                }
            }
            s
        }
        rec(a, 0, &mut vec![false; a.ncols()])
    }

    #[test]
    fn permanent_of_small_matrices() {
        assert_eq!(permanent(&DMatrix::identity(5, 5)).unwrap(), c(1.0));
        let ones = DMatrix::from_element(4, 4, c(1.0));
        assert!((permanent(&ones).unwrap() - c(24.0)).norm() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert!((permanent(&m).unwrap() - c(10.0)).norm() < 1e-12);
    }

    #[test]
    fn ryser_matches_permutation_sum() {
        for n in 1..=6 {
            let m = DMatrix::from_fn(n, n, |i, j| {
                Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 * 0.5)
            });
            assert!((permanent(&m).unwrap() - permanent_naive(&m)).norm() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn balanced_splitter_amplitudes() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let t = ModeTransform::new(vec![0, 1], DMatrix::from_row_slice(2, 2, &[c(s), c(s), c(-s), c(s)])).unwrap();
        let a = transition_amplitude(&t, &OccupationVector(vec![1, 1]), &OccupationVector(vec![2, 0])).unwrap();
        assert!((a.norm() - s).abs() < 1e-12);
        assert!((a.norm_sqr() - 0.5).abs() < 1e-12);
        let a = transition_amplitude(&t, &OccupationVector(vec![1, 1]), &OccupationVector(vec![1, 1])).unwrap();
        assert!(a.norm() < 1e-15);
    }

    #[test]
    fn identity_preserves_fock_state() {
        let t = ModeTransform::identity(vec![0, 1, 2]).unwrap();
        let n = OccupationVector(vec![2, 0, 1]);
        assert!((transition_amplitude(&t, &n, &n).unwrap() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn photon_number_mismatch_is_domain_error() {
        let t = ModeTransform::identity(vec![0, 1]).unwrap();
        let r = transition_amplitude(&t, &OccupationVector(vec![1, 0]), &OccupationVector(vec![1, 1]));
        assert!(matches!(r, Err(crate::Error::Domain(_))));
    }
}
