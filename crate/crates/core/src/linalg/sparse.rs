//! Minimal complex CSR matrix: storage, matvec, and band-extent queries.
//!
//! The superoperators built in this crate are sparse *and* banded (the
//! nonzero pattern sits within a fixed distance of the diagonal), so this
//! is all the structure the solvers need.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Build from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, Complex64)],
    ) -> Self {
        let mut sorted: Vec<(usize, usize, Complex64)> = triplets
            .iter()
            .copied()
            .filter(|&(_, _, v)| v != Complex64::ZERO)
            .collect();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut rows: Vec<usize> = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            assert!(r < n_rows && c < n_cols, "triplet out of bounds");
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }

        let mut row_ptr = vec![0usize; n_rows + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// y = A x
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut acc = Complex64::ZERO;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::ZERO; self.n_rows];
        self.matvec(x, &mut y);
        y
    }

    /// y = A^T x (plain transpose, no conjugation). Used for left functionals.
    pub fn transpose_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_rows);
        let mut y = vec![Complex64::ZERO; self.n_cols];
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * x[r];
            }
        }
        y
    }

    /// y = A† x.
    pub fn conj_transpose_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_rows);
        let mut y = vec![Complex64::ZERO; self.n_cols];
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k].conj() * x[r];
            }
        }
        y
    }

    /// (max subdiagonal extent, max superdiagonal extent) of the nonzero pattern.
    pub fn band_extents(&self) -> (usize, usize) {
        let mut kl = 0usize;
        let mut ku = 0usize;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if r > c {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    /// Gershgorin bound on the spectral radius: max_r sum_c |a_rc|.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum())
            .fold(0.0, f64::max)
    }

    /// Dense copy for small systems and test oracles.
    pub fn to_dense(&self) -> ndarray::Array2<Complex64> {
        let mut a = ndarray::Array2::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                a[[r, c]] += v;
            }
        }
        a
    }
}
