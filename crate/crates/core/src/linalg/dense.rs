//! Dense complex LU with partial pivoting.
//!
//! Used as the small-system fallback of the steady-state solver and as the
//! independent oracle the banded factorization is tested against.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub struct DenseLu {
    n: usize,
    lu: Array2<Complex64>,
    ipiv: Vec<usize>,
    swap_sign: f64,
}

impl DenseLu {
    pub fn factor(a: &Array2<Complex64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut lu = a.clone();
        let mut ipiv = vec![0usize; n];
        let mut swap_sign = 1.0;
        for j in 0..n {
            let mut p = j;
            let mut pmax = lu[[j, j]].norm_sqr();
            for i in (j + 1)..n {
                let m = lu[[i, j]].norm_sqr();
                if m > pmax {
                    pmax = m;
                    p = i;
                }
            }
            ipiv[j] = p;
            if pmax == 0.0 {
                return Err(Error::NonConvergence {
                    stage: "dense LU (exactly singular pivot)",
                    residual: 0.0,
                    tol: 0.0,
                });
            }
            if p != j {
                for c in 0..n {
                    let t = lu[[j, c]];
                    lu[[j, c]] = lu[[p, c]];
                    lu[[p, c]] = t;
                }
                swap_sign = -swap_sign;
            }
            let piv = lu[[j, j]];
            for i in (j + 1)..n {
                let m = lu[[i, j]] / piv;
                lu[[i, j]] = m;
                if m != Complex64::ZERO {
                    for c in (j + 1)..n {
                        let u = lu[[j, c]];
                        lu[[i, c]] -= m * u;
                    }
                }
            }
        }
        Ok(DenseLu {
            n,
            lu,
            ipiv,
            swap_sign,
        })
    }

    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            for i in (j + 1)..n {
                b[i] -= self.lu[[i, j]] * bj;
            }
        }
        for j in (0..n).rev() {
            let mut acc = b[j];
            for c in (j + 1)..n {
                acc -= self.lu[[j, c]] * b[c];
            }
            b[j] = acc / self.lu[[j, j]];
        }
    }

    /// Solve A† x = b given the factorization P A = L U.
    pub fn solve_conj_transpose(&self, b: &mut [Complex64]) {
        let n = self.n;
        // U† z = b (lower triangular)
        for j in 0..n {
            let mut acc = b[j];
            for c in 0..j {
                acc -= self.lu[[c, j]].conj() * b[c];
            }
            b[j] = acc / self.lu[[j, j]].conj();
        }
        // L† y = z (unit upper triangular), then undo the interchanges
        for j in (0..n).rev() {
            let mut acc = b[j];
            for i in (j + 1)..n {
                acc -= self.lu[[i, j]].conj() * b[i];
            }
            b[j] = acc;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }

    pub fn determinant(&self) -> Complex64 {
        let mut det = Complex64::new(self.swap_sign, 0.0);
        for i in 0..self.n {
            det *= self.lu[[i, i]];
        }
        det
    }
}

pub fn dense_solve(a: &Array2<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let lu = DenseLu::factor(a)?;
    let mut x = b.to_vec();
    lu.solve(&mut x);
    Ok(x)
}

/// det(a) via LU; oracle for the eigenvalue solver.
pub fn dense_determinant(a: &Array2<Complex64>) -> Result<Complex64> {
    Ok(DenseLu::factor(a)?.determinant())
}
