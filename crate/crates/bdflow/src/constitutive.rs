//! Viscosity law, pressure law and the derived potentials.
//!
//! The shear viscosity is the power law `mu(rho) = mu rho^alpha`; the
//! bulk viscosity is then forced to `lambda(rho) = 2 rho mu'(rho) - 2 mu(rho)`,
//! and `phi` is the potential with `rho phi'(rho) = 2 mu'(rho)`, so that
//! `grad phi(rho)` is the effective-velocity correction.

use crate::spectral_grid::{gradient, ScalarField, VectorField};
use thiserror::Error;

/// Densities are clamped below at this floor before any power or
/// logarithm is taken, guarding near-vacuum states.
pub const RHO_MIN: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("viscosity constant must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("adiabatic exponent must be >= 1, got {0}")]
    BadGamma(f64),
    #[error("alpha = {alpha} violates the Lame condition alpha > 1 - 1/N for dim {dim}")]
    LameViolation { alpha: f64, dim: usize },
    #[error("reference density must be positive, got {0}")]
    BadReferenceDensity(f64),
}

/// Barotropic fluid model: `mu(rho) = mu rho^alpha`, `P(rho) = rho^gamma`,
/// reference density `rho_ref` (the constant background the potentials
/// are normalized against).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FluidModel {
    pub mu: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub rho_ref: f64,
}

impl FluidModel {
    /// Validate and build a model for spatial dimension `dim`.
    pub fn new(mu: f64, alpha: f64, gamma: f64, rho_ref: f64, dim: usize) -> Result<FluidModel, ModelError> {
        let model = FluidModel {
            mu,
            alpha,
            gamma,
            rho_ref,
        };
        model.validate(dim)?;
        Ok(model)
    }

    pub fn validate(&self, dim: usize) -> Result<(), ModelError> {
        if !(self.mu > 0.0) {
            return Err(ModelError::NonPositiveMu(self.mu));
        }
        if !(self.gamma >= 1.0) {
            return Err(ModelError::BadGamma(self.gamma));
        }
        if !(self.alpha > 1.0 - 1.0 / dim as f64) {
            return Err(ModelError::LameViolation {
                alpha: self.alpha,
                dim,
            });
        }
        if !(self.rho_ref > 0.0) {
            return Err(ModelError::BadReferenceDensity(self.rho_ref));
        }
        Ok(())
    }

    fn clamp(rho: f64) -> f64 {
        rho.max(RHO_MIN)
    }

    /// Shear viscosity `mu rho^alpha`.
    pub fn viscosity(&self, rho: f64) -> f64 {
        self.mu * Self::clamp(rho).powf(self.alpha)
    }

    /// `mu'(rho) = mu alpha rho^(alpha - 1)`.
    pub fn viscosity_deriv(&self, rho: f64) -> f64 {
        self.mu * self.alpha * Self::clamp(rho).powf(self.alpha - 1.0)
    }

    /// `mu''(rho)`.
    pub fn viscosity_second_deriv(&self, rho: f64) -> f64 {
        self.mu * self.alpha * (self.alpha - 1.0) * Self::clamp(rho).powf(self.alpha - 2.0)
    }

    /// Bulk viscosity `lambda(rho) = 2 rho mu'(rho) - 2 mu(rho)
    /// = 2 mu (alpha - 1) rho^alpha`.
    pub fn lambda_of(&self, rho: f64) -> f64 {
        2.0 * self.mu * (self.alpha - 1.0) * Self::clamp(rho).powf(self.alpha)
    }

    /// Effective-velocity potential: `rho phi'(rho) = 2 mu'(rho)`,
    /// normalized so `phi(rho_ref) = 0`.
    pub fn phi_of(&self, rho: f64) -> f64 {
        let r = Self::clamp(rho);
        let r0 = self.rho_ref;
        if (self.alpha - 1.0).abs() < 1e-12 {
            2.0 * self.mu * (r / r0).ln()
        } else {
            2.0 * self.mu * self.alpha / (self.alpha - 1.0)
                * (r.powf(self.alpha - 1.0) - r0.powf(self.alpha - 1.0))
        }
    }

    /// Pressure `P(rho) = rho^gamma`.
    pub fn pressure(&self, rho: f64) -> f64 {
        Self::clamp(rho).powf(self.gamma)
    }

    /// `P'(rho) = gamma rho^(gamma - 1)`.
    pub fn pressure_deriv(&self, rho: f64) -> f64 {
        self.gamma * Self::clamp(rho).powf(self.gamma - 1.0)
    }

    /// Pressure potential: `F'(rho) = P'(rho) / rho`, normalized so
    /// `F(rho_ref) = 0`.
    pub fn big_f_of(&self, rho: f64) -> f64 {
        let r = Self::clamp(rho);
        let r0 = self.rho_ref;
        if (self.gamma - 1.0).abs() < 1e-12 {
            (r / r0).ln()
        } else {
            self.gamma / (self.gamma - 1.0)
                * (r.powf(self.gamma - 1.0) - r0.powf(self.gamma - 1.0))
        }
    }

    /// Relative pressure entropy density
    /// `Pi(s) = s (e(s) - e(rho_ref)) - (s - rho_ref) P(rho_ref) / rho_ref`
    /// with `e'(s) = P(s) / s^2`; convex, vanishing with zero slope at
    /// `s = rho_ref`.
    pub fn pi_of(&self, s: f64) -> f64 {
        let s = Self::clamp(s);
        let r0 = self.rho_ref;
        let e = |r: f64| -> f64 {
            if (self.gamma - 1.0).abs() < 1e-12 {
                r.ln()
            } else {
                r.powf(self.gamma - 1.0) / (self.gamma - 1.0)
            }
        };
        s * (e(s) - e(r0)) - (s - r0) * self.pressure(r0) / r0
    }
}

/// Pointwise composition of a model coefficient with a density field.
pub fn compose(model: &FluidModel, rho: &ScalarField, f: impl Fn(&FluidModel, f64) -> f64) -> ScalarField {
    rho.map(|r| f(model, r))
}

/// `mu(rho)` as a field.
pub fn viscosity_field(model: &FluidModel, rho: &ScalarField) -> ScalarField {
    compose(model, rho, FluidModel::viscosity)
}

/// `phi(rho)` as a field.
pub fn phi_field(model: &FluidModel, rho: &ScalarField) -> ScalarField {
    compose(model, rho, FluidModel::phi_of)
}

/// `grad phi(rho)` by spectral differentiation of the composed field.
pub fn grad_phi(model: &FluidModel, rho: &ScalarField) -> VectorField {
    gradient(&phi_field(model, rho))
}

/// `F(rho)` as a field.
pub fn big_f_field(model: &FluidModel, rho: &ScalarField) -> ScalarField {
    compose(model, rho, FluidModel::big_f_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_grid::make_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn validation_contract() {
        assert!(FluidModel::new(1.0, 1.0, 2.0, 1.0, 2).is_ok());
        assert!(FluidModel::new(0.5, 0.75, 1.4, 1.0, 3).is_ok());
        assert!(matches!(
            FluidModel::new(0.0, 1.0, 2.0, 1.0, 2),
            Err(ModelError::NonPositiveMu(_))
        ));
        assert!(matches!(
            FluidModel::new(1.0, 1.0, 0.9, 1.0, 2),
            Err(ModelError::BadGamma(_))
        ));
        assert!(matches!(
            FluidModel::new(1.0, 0.5, 2.0, 2.0, 2),
            Err(ModelError::LameViolation { .. })
        ));
        // alpha = 0.6 passes in 2d (needs > 1/2) but fails in 3d (needs > 2/3)
        assert!(FluidModel::new(1.0, 0.6, 2.0, 1.0, 2).is_ok());
        assert!(matches!(
            FluidModel::new(1.0, 0.6, 2.0, 1.0, 3),
            Err(ModelError::LameViolation { .. })
        ));
        assert!(matches!(
            FluidModel::new(1.0, 1.0, 2.0, 0.0, 2),
            Err(ModelError::BadReferenceDensity(0.0))
        ));
    }

    #[test]
    fn bd_relation_and_known_values() {
        let m = FluidModel::new(1.5, 2.0, 2.0, 1.0, 2).unwrap();
        for rho in [0.3, 1.0, 2.7] {
            let lhs = m.lambda_of(rho);
            let rhs = 2.0 * rho * m.viscosity_deriv(rho) - 2.0 * m.viscosity(rho);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
        assert!((m.viscosity(2.0) - 6.0).abs() < 1e-12);
        assert!((m.lambda_of(2.0) - 12.0).abs() < 1e-12);
        // alpha = 1: lambda vanishes identically
        let m1 = FluidModel::new(0.7, 1.0, 1.4, 1.0, 2).unwrap();
        for rho in [0.2, 1.0, 5.0] {
            assert!(m1.lambda_of(rho).abs() < 1e-14);
        }
    }

    #[test]
    fn potentials_normalized_and_consistent() {
        for (alpha, gamma) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.4), (0.75, 2.0)] {
            let m = FluidModel::new(1.3, alpha, gamma, 1.0, 2).unwrap();
            assert!(m.phi_of(1.0).abs() < 1e-14);
            assert!(m.big_f_of(1.0).abs() < 1e-14);
            assert!(m.pi_of(1.0).abs() < 1e-14);
            // derivative identities by centered differences
            let h = 1e-6;
            for rho in [0.4, 1.0, 1.9] {
                let dphi = (m.phi_of(rho + h) - m.phi_of(rho - h)) / (2.0 * h);
                assert!(
                    (rho * dphi - 2.0 * m.viscosity_deriv(rho)).abs() < 1e-5,
                    "phi' mismatch at rho {rho}"
                );
                let df = (m.big_f_of(rho + h) - m.big_f_of(rho - h)) / (2.0 * h);
                assert!((df - m.pressure_deriv(rho) / rho).abs() < 1e-5);
                let dmu = (m.viscosity(rho + h) - m.viscosity(rho - h)) / (2.0 * h);
                assert!((dmu - m.viscosity_deriv(rho)).abs() < 1e-5);
                let d2mu =
                    (m.viscosity(rho + h) - 2.0 * m.viscosity(rho) + m.viscosity(rho - h)) / (h * h);
                assert!((d2mu - m.viscosity_second_deriv(rho)).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn pi_known_values_gamma_two() {
        // gamma = 2, rho_ref = 1: e(s) = s, Pi(s) = s^2 - 2 s + 1 = (s - 1)^2
        let m = FluidModel::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
        for s in [0.5, 1.0, 1.5, 3.0] {
            assert!((m.pi_of(s) - (s - 1.0).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_floor_guard() {
        let m = FluidModel::new(1.0, 1.0, 1.4, 1.0, 2).unwrap();
        assert!(m.phi_of(0.0).is_finite());
        assert!(m.phi_of(-0.5).is_finite());
        assert_eq!(m.phi_of(0.0), m.phi_of(RHO_MIN));
        assert!(m.big_f_of(0.0).is_finite());
        let m2 = FluidModel::new(1.0, 0.75, 2.0, 1.0, 2).unwrap();
        assert!(m2.viscosity_second_deriv(0.0).is_finite());
    }

    #[test]
    fn field_compositions_match_pointwise() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let m = FluidModel::new(1.2, 2.0, 2.0, 1.0, 2).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].sin());
        let mu_f = viscosity_field(&m, &rho);
        for (r, v) in rho.values().iter().zip(mu_f.values()) {
            assert_eq!(*v, m.viscosity(*r));
        }
        // alpha = 2: phi = 4 mu (rho - 1), so grad phi = 4 mu grad rho
        let gp = grad_phi(&m, &rho);
        let expect = gradient(&rho).scale(4.0 * m.mu);
        assert!(gp.sub(&expect).max_abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn prop_pi_convex_nonnegative(
            s in 0.05f64..4.0,
            gamma in 1.0f64..3.0,
            r0 in 0.3f64..2.0,
        ) {
            let m = FluidModel::new(1.0, 1.0, gamma, r0, 2).unwrap();
            prop_assert!(m.pi_of(s) >= -1e-12);
            // convexity via second difference
            let h = 1e-3;
            let dd = m.pi_of(s + h) - 2.0 * m.pi_of(s) + m.pi_of(s - h);
            prop_assert!(dd >= -1e-10);
        }

        #[test]
        fn prop_bd_relation(
            rho in 0.05f64..5.0,
            alpha in 0.55f64..3.0,
            mu in 0.1f64..4.0,
        ) {
            let m = FluidModel::new(mu, alpha, 2.0, 1.0, 2).unwrap();
            let lhs = m.lambda_of(rho);
            let rhs = 2.0 * rho * m.viscosity_deriv(rho) - 2.0 * m.viscosity(rho);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }

        #[test]
        fn prop_monotone_viscosity(
            a in 0.05f64..5.0,
            b in 0.05f64..5.0,
            alpha in 0.55f64..3.0,
        ) {
            let m = FluidModel::new(1.0, alpha, 2.0, 1.0, 2).unwrap();
            if a < b {
                prop_assert!(m.viscosity(a) <= m.viscosity(b) + 1e-12);
            }
        }
    }
}
