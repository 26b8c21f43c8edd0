//! Density matrices in the Dicke basis.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::eigen::{hermitian_eigenvalues, trace_norm_hermitian};
use crate::spin::{coherent_state, CoherentLabel, SpinQuantum};

/// Hermitian, trace-one matrix ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-10.
    pub fn new(rho: Array2<Complex64>) -> Result<Self> {
        let n = rho.nrows();
        if n != rho.ncols() {
            return Err(Error::InvalidParams("density matrix must be square".into()));
        }
        let mut herm_defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                herm_defect = herm_defect.max((rho[[i, j]] - rho[[j, i]].conj()).norm());
            }
        }
        if herm_defect > 1e-10 {
            return Err(Error::InvalidParams(format!(
                "density matrix not Hermitian (defect {herm_defect:.3e})"
            )));
        }
        let tr: Complex64 = (0..n).map(|i| rho[[i, i]]).sum();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParams(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        Ok(DensityMatrix { rho })
    }

    /// Hermitize and trace-normalize a raw matrix (e.g. a solver output).
    pub fn from_unnormalized(m: &Array2<Complex64>) -> Result<Self> {
        let n = m.nrows();
        let mut rho = Array2::<Complex64>::zeros((n, n));
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                rho[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]].conj());
                scale = scale.max(rho[[i, j]].norm());
            }
        }
        let tr: f64 = (0..n).map(|i| rho[[i, i]].re).sum();
        if !(tr.is_finite()) || tr.abs() < 1e-12 * scale.max(1e-300) * n as f64 {
            return Err(Error::NonConvergence {
                stage: "density normalization (trace vanished)",
                residual: tr.abs(),
                tol: 1e-12,
            });
        }
        rho.mapv_inplace(|z| z / tr);
        Ok(DensityMatrix { rho })
    }

    pub fn pure(state: &Array1<Complex64>) -> Self {
        let n = state.len();
        let norm_sqr: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        let mut rho = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                rho[[i, j]] = state[i] * state[j].conj() / norm_sqr;
            }
        }
        DensityMatrix { rho }
    }

    pub fn coherent(j: SpinQuantum, label: &CoherentLabel) -> Result<Self> {
        Ok(Self::pure(&coherent_state(j, label)?))
    }

    pub fn maximally_mixed(j: SpinQuantum) -> Self {
        let dim = j.dim();
        let mut rho = Array2::<Complex64>::zeros((dim, dim));
        for i in 0..dim {
            rho[[i, i]] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[[i, i]].re).sum()
    }

    /// Tr(ρ²) = ||ρ||_F² for Hermitian ρ.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Tr(op ρ).
    pub fn expect(&self, op: &Array2<Complex64>) -> Complex64 {
        let n = self.dim();
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += op[[i, j]] * self.rho[[j, i]];
            }
        }
        acc
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.rho)[0]
    }

    /// (1/2)||ρ - σ||₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.rho - &other.rho;
        0.5 * trace_norm_hermitian(&diff)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.rho
            .iter()
            .zip(other.rho.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Mirror reflection U conj(ρ) U† with U = exp(-iπ J_z); in the Dicke
    /// basis the phases collapse to (-1)^(k-l) conj(ρ_kl). Involutive; sends
    /// |μ⟩⟨μ| to |-μ*⟩⟨-μ*|.
    pub fn mirror(&self) -> DensityMatrix {
        let n = self.dim();
        let mut out = Array2::<Complex64>::zeros((n, n));
        for k in 0..n {
            for l in 0..n {
                let sign = if (k + l) % 2 == 0 { 1.0 } else { -1.0 };
                out[[k, l]] = sign * self.rho[[k, l]].conj();
            }
        }
        DensityMatrix { rho: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn pure_state_has_unit_purity_and_trace() {
        let j = SpinQuantum::from_two_j(6).unwrap();
        let rho =
            DensityMatrix::coherent(j, &CoherentLabel::north(Complex64::new(0.4, -0.2))).unwrap();
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-13);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn maximally_mixed_observables() {
        // var Jz on the maximally mixed state is j(j+1)/3: mean of m² over the multiplet
        let j = SpinQuantum::from_two_j(10).unwrap();
        let rho = DensityMatrix::maximally_mixed(j);
        let ops = crate::spin::SpinOperators::new(j);
        let mean = rho.expect(&ops.jz).re;
        let mut m2 = 0.0;
        for k in 0..j.dim() {
            m2 += j.m_at(k) * j.m_at(k) / j.dim() as f64;
        }
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m2, 5.0 * 6.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.purity(), 1.0 / j.dim() as f64, epsilon = 1e-13);
    }

    #[test]
    fn mirror_maps_coherent_to_reflected_label() {
        let j = SpinQuantum::from_two_j(7).unwrap();
        let label = CoherentLabel::north(Complex64::new(0.6, 0.25));
        let rho = DensityMatrix::coherent(j, &label).unwrap();
        let reflected = DensityMatrix::coherent(j, &label.mirror()).unwrap();
        assert!(rho.mirror().max_abs_diff(&reflected) < 1e-13);
        // involutive
        assert!(rho.mirror().mirror().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn pole_projector_is_mirror_invariant() {
        let j = SpinQuantum::from_two_j(5).unwrap();
        let rho = DensityMatrix::coherent(j, &CoherentLabel::north(Complex64::ZERO)).unwrap();
        assert!(rho.mirror().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn trace_distance_of_orthogonal_pures_is_one() {
        let j = SpinQuantum::from_two_j(1).unwrap();
        let up = DensityMatrix::coherent(j, &CoherentLabel::north(Complex64::ZERO)).unwrap();
        let down = DensityMatrix::coherent(j, &CoherentLabel::south(Complex64::ZERO)).unwrap();
        assert_abs_diff_eq!(up.trace_distance(&down), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(up.trace_distance(&up), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = Array2::<Complex64>::zeros((2, 2));
        m[[0, 0]] = Complex64::new(0.7, 0.0);
        m[[1, 1]] = Complex64::new(0.4, 0.0); // trace 1.1
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[[1, 1]] = Complex64::new(0.3, 0.0);
        m[[0, 1]] = Complex64::new(0.0, 0.2); // not Hermitian
        assert!(DensityMatrix::new(m).is_err());
    }
}
