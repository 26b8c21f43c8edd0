//! Self-contained complex linear algebra: sparse storage, banded and dense
//! LU, Hermitian eigenvalues, and Gauss–Legendre quadrature.

// factorization kernels index several arrays by position, LAPACK style
#![allow(clippy::needless_range_loop)]

pub mod banded;
pub mod dense;
pub mod eigen;
pub mod quadrature;
pub mod sparse;

pub use banded::BandedLu;
pub use dense::{dense_solve, DenseLu};
pub use eigen::{hermitian_eigenvalues, trace_norm_hermitian};
pub use quadrature::gauss_legendre;
pub use sparse::CsrMatrix;
