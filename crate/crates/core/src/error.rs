//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("superoperator dimension {dim_sq} exceeds memory budget {budget}")]
    DimensionBudget { dim_sq: usize, budget: usize },

    #[error("{stage}: residual {residual:.3e} did not reach tolerance {tol:.3e}")]
    NonConvergence {
        stage: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("second near-null direction detected (discrepancy {discrepancy:.3e}); null space numerically degenerate")]
    AmbiguousNull { discrepancy: f64 },

    #[error("no cyclic solutions at lambda = {lambda} (requires lambda > 1)")]
    NotCyclic { lambda: f64 },

    #[error("drive omega = 0; the fixed-point pair degenerates to mu = 0")]
    DegenerateDrive,

    #[error("divergent at the critical point lambda = 1")]
    CriticalPoint,

    #[error("trajectory {trajectory} diverged at t = {time:.6e}")]
    Blowup { trajectory: usize, time: f64 },

    #[error("dt = {dt:.3e} exceeds stability bound {dt_max:.3e}")]
    StepTooLarge { dt: f64, dt_max: f64 },

    #[error("coherent-state normalization underflowed")]
    NormalizationUnderflow,

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("exact and stochastic estimates disagree at 2j = {two_j}: |{exact:.6} - {stochastic:.6}| > 3 x {stderr:.2e}")]
    MethodMismatch {
        two_j: u32,
        exact: f64,
        stochastic: f64,
        stderr: f64,
    },

    #[error("curve value {value:.3e} at epsilon = {epsilon:.3e} is not positive; log-log slope undefined")]
    NonPositiveCurve { epsilon: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
