//! Physical parameters of the driven damped collective spin.

use crate::error::{Error, Result};
use crate::spin::SpinQuantum;

/// Parameters of the model: spin length j, drive ω, collective damping κ
/// (both dissipators share the rate κ/j), and an optional symmetry-breaking
/// longitudinal field ω_z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub j: SpinQuantum,
    pub omega: f64,
    pub kappa: f64,
    pub omega_z: f64,
}

impl ModelParams {
    pub fn new(j: SpinQuantum, omega: f64, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParams(format!("kappa = {kappa} must be > 0")));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega = {omega} must be >= 0"
            )));
        }
        Ok(ModelParams {
            j,
            omega,
            kappa,
            omega_z: 0.0,
        })
    }

    /// Convenience constructor in units of κ = 1.
    pub fn from_lambda(j: SpinQuantum, lambda: f64) -> Result<Self> {
        Self::new(j, lambda, 1.0)
    }

    pub fn with_omega_z(mut self, omega_z: f64) -> Result<Self> {
        if !omega_z.is_finite() {
            return Err(Error::InvalidParams("omega_z must be finite".into()));
        }
        self.omega_z = omega_z;
        Ok(self)
    }

    /// Control parameter λ = ω/κ.
    pub fn lambda(&self) -> f64 {
        self.omega / self.kappa
    }

    /// Effective damping of the coherent label, κ(1 + 1/(2j)). This is the
    /// coefficient for which the label ensemble reproduces the master
    /// equation exactly at finite j; it tends to κ in the thermodynamic
    /// limit where the deterministic flow applies.
    pub fn kappa_tilde(&self) -> f64 {
        self.kappa * (1.0 + 1.0 / self.j.two_j() as f64)
    }

    /// Noise amplitude sqrt(κ/j) of the label Langevin equation.
    pub fn noise_amplitude(&self) -> f64 {
        (self.kappa / self.j.j()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derived_quantities() {
        let j = SpinQuantum::from_two_j(8).unwrap();
        let p = ModelParams::new(j, 0.8, 2.0).unwrap();
        assert_abs_diff_eq!(p.lambda(), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.kappa_tilde(), 2.0 * (1.0 + 0.125), epsilon = 1e-15);
        assert_abs_diff_eq!(p.noise_amplitude(), (2.0f64 / 4.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn kappa_tilde_tends_to_kappa_from_above() {
        let big = ModelParams::new(SpinQuantum::from_two_j(2_000_000).unwrap(), 1.0, 1.0).unwrap();
        assert!(big.kappa_tilde() > big.kappa);
        assert_abs_diff_eq!(big.kappa_tilde(), big.kappa, epsilon = 1e-5);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let j = SpinQuantum::from_two_j(2).unwrap();
        assert!(ModelParams::new(j, 1.0, 0.0).is_err());
        assert!(ModelParams::new(j, -1.0, 1.0).is_err());
        assert!(ModelParams::new(j, f64::NAN, 1.0).is_err());
    }
}
