//! Numerical integration: Gauss rules, adaptive half-line integrals with a
//! Gil-Pelaez front end, planar cubature over clipped square unions, and the
//! radial (path-loss space) transform used by the analytic engine.

mod gauss;
mod halfline;
mod radial;
mod region;
pub mod special;

pub use gauss::{gauss_legendre, gk21, GaussRule};
pub use halfline::{
    adaptive_gk21, gil_pelaez_cdf, gil_pelaez_cdf_scaled, halfline_integral, oscillatory_tail_integral, Estimate,
};
pub use radial::{RadialDensity, Rect};
pub use region::integrate_region;

use num_complex::Complex64;
use thiserror::Error;

/// Tolerances and budgets shared by the integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on panel (or cell) evaluations per integral.
    pub max_panels: usize,
    /// Gauss nodes per panel axis.
    pub panel_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-4,
            max_panels: 20_000,
            panel_order: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        QuadratureSpec { abs_tol, ..self }
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        QuadratureSpec { rel_tol, ..self }
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_panels < 1 || self.panel_order < 2 {
            return Err(QuadError::InvalidSpec(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("tolerance not reached: estimate {estimate} with error bound {error:.3e}")]
    ToleranceNotReached { estimate: Complex64, error: f64 },
    #[error("integrand decays too slowly to certify the tail: estimate {estimate} with error bound {error:.3e}")]
    SlowDecay { estimate: Complex64, error: f64 },
    #[error("invalid quadrature spec {0:?}")]
    InvalidSpec(QuadratureSpec),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

impl QuadError {
    /// Best available estimate and its error bound, when the failure carries one.
    pub fn best_estimate(&self) -> Option<(Complex64, f64)> {
        match *self {
            QuadError::ToleranceNotReached { estimate, error } | QuadError::SlowDecay { estimate, error } => {
                Some((estimate, error))
            }
            _ => None,
        }
    }
}
