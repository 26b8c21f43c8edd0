//! LU factorization of complex banded matrices with partial pivoting.
//!
//! Band storage follows the LAPACK `zgbtrf` convention: a matrix with `kl`
//! subdiagonals and `ku` superdiagonals is stored in an array with
//! `2*kl + ku + 1` rows (the extra `kl` rows hold fill-in produced by row
//! interchanges), entry A[i,j] living at `ab[kl + ku + i - j, j]`.
//!
//! The superoperators in this crate couple vectorized density-matrix
//! entries only within a fixed index distance, so their shifted forms
//! factor in O(n kl (kl + ku)) time without any symbolic analysis.

use num_complex::Complex64;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// column-major: entry (r, j) at ab[j * lda + r], lda = 2*kl + ku + 1
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor `A - shift * I` where `A` is given in CSR form.
    pub fn factor_shifted(a: &CsrMatrix, shift: Complex64) -> Result<Self> {
        assert_eq!(a.n_rows(), a.n_cols(), "banded LU requires a square matrix");
        let n = a.n_rows();
        let (kl, ku) = a.band_extents();
        let lda = 2 * kl + ku + 1;
        let mut ab = vec![Complex64::ZERO; lda * n];

        let at = |i: usize, j: usize| kl + ku + i - j; // band row index
        for i in 0..n {
            for (j, v) in a.row(i) {
                ab[j * lda + at(i, j)] += v;
            }
        }
        for i in 0..n {
            ab[i * lda + at(i, i)] -= shift;
        }

        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            // pivot search in column j, rows j..=j+kl
            let i_hi = (j + kl).min(n - 1);
            let mut p = j;
            let mut pmax = ab[j * lda + at(j, j)].norm_sqr();
            for i in (j + 1)..=i_hi {
                let m = ab[j * lda + at(i, j)].norm_sqr();
                if m > pmax {
                    pmax = m;
                    p = i;
                }
            }
            ipiv[j] = p;
            if pmax == 0.0 {
                return Err(Error::NonConvergence {
                    stage: "banded LU (exactly singular pivot)",
                    residual: 0.0,
                    tol: 0.0,
                });
            }
            let c_hi = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=c_hi {
                    ab.swap(c * lda + at(j, c), c * lda + at(p, c));
                }
            }
            let piv = ab[j * lda + at(j, j)];
            for i in (j + 1)..=i_hi {
                let m = ab[j * lda + at(i, j)] / piv;
                ab[j * lda + at(i, j)] = m;
                if m != Complex64::ZERO {
                    for c in (j + 1)..=c_hi {
                        let u = ab[c * lda + at(j, c)];
                        ab[c * lda + at(i, c)] -= m * u;
                    }
                }
            }
        }

        Ok(BandedLu {
            n,
            kl,
            ku,
            ab,
            ipiv,
        })
    }

    #[inline]
    fn band(&self, i: usize, j: usize) -> Complex64 {
        self.ab[j * (2 * self.kl + self.ku + 1) + self.kl + self.ku + i - j]
    }

    /// Solve (A - shift I) x = b in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // forward: apply interchanges and L
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let i_hi = (j + self.kl).min(n - 1);
            let bj = b[j];
            for i in (j + 1)..=i_hi {
                b[i] -= self.band(i, j) * bj;
            }
        }
        // backward: U x = y, U has bandwidth kl + ku above the diagonal
        let w = self.kl + self.ku;
        for j in (0..n).rev() {
            let c_hi = (j + w).min(n - 1);
            let mut acc = b[j];
            for c in (j + 1)..=c_hi {
                acc -= self.band(j, c) * b[c];
            }
            b[j] = acc / self.band(j, j);
        }
    }

    /// Solve (A - shift I)^H x = b in place (conjugate transpose).
    pub fn solve_conj_transpose(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let w = self.kl + self.ku;
        // A - shift I = P L U  =>  (A - shift I)^H = U^H L^H P^T
        // 1) U^H z = b (U^H is lower triangular with bandwidth w)
        for j in 0..n {
            let mut acc = b[j];
            let c_lo = j.saturating_sub(w);
            for c in c_lo..j {
                acc -= self.band(c, j).conj() * b[c];
            }
            b[j] = acc / self.band(j, j).conj();
        }
        // 2) L^H y = z (unit upper triangular), then x = P y applying swaps in reverse
        for j in (0..n).rev() {
            let i_hi = (j + self.kl).min(n - 1);
            let mut acc = b[j];
            for i in (j + 1)..=i_hi {
                acc -= self.band(i, j).conj() * b[i];
            }
            b[j] = acc;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }
}
