//! Eigenvalues of Hermitian complex matrices via cyclic Jacobi rotations.
//!
//! Needed for trace distances and positivity checks of density matrices.
//! Dimensions here stay in the low hundreds, where Jacobi's O(n³) per sweep
//! with quadratic convergence is perfectly adequate.

use ndarray::Array2;
use num_complex::Complex64;

/// Eigenvalues of a Hermitian matrix, ascending. The input is hermitized
/// as (A + A†)/2 first; callers pass matrices Hermitian up to rounding.
pub fn hermitian_eigenvalues(a: &Array2<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut h = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            h[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]].conj());
        }
    }

    let norm: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; n];
    }
    let tol = 1e-30 * norm * norm;

    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += h[[p, q]].norm_sqr();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = h[[p, q]];
                let mag = apq.norm();
                if mag * mag <= tol / (n * n) as f64 {
                    continue;
                }
                let app = h[[p, p]].re;
                let aqq = h[[q, q]].re;
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                // small-magnitude root of t² - 2θt - 1 = 0 for this U convention
                let t = -theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                // s chosen so that (U† H U)[p,q] = 0 with
                // U = [[c, -conj(s)], [s, c]] acting on columns (p, q)
                let s = t * c * phase.conj();

                // column update: H <- H U
                for k in 0..n {
                    let hkp = h[[k, p]];
                    let hkq = h[[k, q]];
                    h[[k, p]] = hkp * c + hkq * s;
                    h[[k, q]] = -hkp * s.conj() + hkq * c;
                }
                // row update: H <- U† H
                for k in 0..n {
                    let hpk = h[[p, k]];
                    let hqk = h[[q, k]];
                    h[[p, k]] = hpk * c + hqk * s.conj();
                    h[[q, k]] = -hpk * s + hqk * c;
                }
            }
        }
    }

    let mut eigs: Vec<f64> = (0..n).map(|i| h[[i, i]].re).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Sum of absolute eigenvalues of the Hermitian part; 2x the trace distance
/// when applied to a difference of density matrices.
pub fn trace_norm_hermitian(a: &Array2<Complex64>) -> f64 {
    hermitian_eigenvalues(a).iter().map(|e| e.abs()).sum()
}
