//! One-dimensional slab transport with a variable Eddington factor (VEF)
//! closure, discretized with continuous quadratic elements for the current J
//! and discontinuous linear elements for the scalar flux φ.
//!
//! The moment system is
//!
//! ```text
//! J' + σ_a φ = Q
//! (E φ)' + σ_t J = 0
//! ```
//!
//! and its mixed discretization is the block system `[M_t, -G; B, M_a]`.

mod assembly;
pub mod quadrature;
mod solve;
mod transport;

pub use assembly::{assemble_vef, VefDiscretization, VefVariant};
pub use solve::{
    vef_driver, vef_preconditioner, vef_solve, vef_table, VefDriverResult, VefKind, VefOperator, VefTableRow,
};
pub use transport::{eddington, transport_sweep, AngularFlux, AngularQuadrature};

use crate::error::{Error, Result};

/// Quadrature points per element used for assembly and for the Eddington factor.
pub const FEM_POINTS: usize = 4;

/// Marshak boundary factor: `J·n = φ/2` for an isotropic outgoing flux.
pub const MARSHAK_FACTOR: f64 = 0.5;

pub(crate) fn fem_rule() -> (Vec<f64>, Vec<f64>) {
    quadrature::gauss_legendre_unit(FEM_POINTS)
}

/// Homogeneous slab `[0, length]` with isotropic scattering and source.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    pub length: f64,
    pub n_elements: usize,
    pub sigma_t: f64,
    pub sigma_a: f64,
    pub source: f64,
    /// Number of discrete ordinates (even).
    pub n_angles: usize,
    /// Isotropic incoming angular flux at each boundary.
    pub inflow_left: f64,
    pub inflow_right: f64,
}

impl Default for TransportProblem {
    fn default() -> Self {
        Self {
            length: 1.0,
            n_elements: 200,
            sigma_t: 1.0,
            sigma_a: 0.0,
            source: 1.0,
            n_angles: 8,
            inflow_left: 0.0,
            inflow_right: 0.0,
        }
    }
}

impl TransportProblem {
    pub fn new(n_elements: usize, sigma_a: f64) -> Self {
        Self {
            n_elements,
            sigma_a,
            ..Self::default()
        }
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_t - self.sigma_a
    }

    pub fn element_length(&self) -> f64 {
        self.length / self.n_elements as f64
    }

    /// Number of continuous quadratic nodes, `2 n_elements + 1`.
    pub fn h1_nodes(&self) -> usize {
        2 * self.n_elements + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(Error::Mesh("at least one element is required".into()));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Mesh(format!("nonpositive element length {}", self.element_length())));
        }
        if !(self.sigma_t > 0.0) {
            return Err(Error::Precondition(format!("σ_t must be positive, got {}", self.sigma_t)));
        }
        if !(self.sigma_a >= 0.0 && self.sigma_a <= self.sigma_t) {
            return Err(Error::Precondition(format!(
                "need 0 <= σ_a <= σ_t, got σ_a = {} and σ_t = {}",
                self.sigma_a, self.sigma_t
            )));
        }
        if self.n_angles == 0 || self.n_angles % 2 == 1 {
            return Err(Error::Precondition(format!(
                "the angular quadrature needs a positive even order, got {}",
                self.n_angles
            )));
        }
        Ok(())
    }
}

/// Eddington factor at the assembly quadrature points (`FEM_POINTS` per
/// element, in order) and at the two boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct EddingtonField {
    pub interior: Vec<f64>,
    pub left: f64,
    pub right: f64,
}

impl EddingtonField {
    pub fn constant(n_elements: usize, value: f64) -> Self {
        Self {
            interior: vec![value; n_elements * FEM_POINTS],
            left: value,
            right: value,
        }
    }

    pub fn min(&self) -> f64 {
        self.interior.iter().fold(self.left.min(self.right), |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.interior.iter().fold(self.left.max(self.right), |m, &v| m.max(v))
    }
}
