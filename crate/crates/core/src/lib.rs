//! Driven-dissipative collective spin-j model: exact master-equation
//! solving, quantum-state-diffusion trajectories on spin coherent states,
//! and the closed-form steady-state theory, with cross-checks between the
//! three layers.

pub mod analytic;
pub mod density;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod liouvillian;
pub mod model;
pub mod qsd;
pub mod spin;

pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use liouvillian::{observables, Liouvillian, Observables, SteadyState};
pub use model::ModelParams;
pub use spin::{Chart, CoherentLabel, SpinOperators, SpinQuantum};
