//! Discrete-ordinates sweeps in slab geometry and the Eddington factor.

use super::quadrature::gauss_legendre;
use super::{EddingtonField, TransportProblem, FEM_POINTS};
use crate::error::{Error, Result};

/// Angular quadrature on `μ ∈ [-1, 1]`, weights summing to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    pub mu: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngularQuadrature {
    /// Gauss–Legendre with an even number of directions, so `μ = 0` never occurs.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 || n % 2 == 1 {
            return Err(Error::Precondition(format!(
                "the angular quadrature needs a positive even order, got {n}"
            )));
        }
        let (mu, weights) = gauss_legendre(n);
        Ok(Self { mu, weights })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// `t - (1 - e^{-a t}) / a`, accurate for small `a t`.
fn ramp_response(a: f64, t: f64) -> f64 {
    let z = a * t;
    if z.abs() < 1e-3 {
        // a t²/2 - a² t³/6 + a³ t⁴/24
        t * z * (0.5 - z / 6.0 + z * z / 24.0)
    } else {
        t + (-z).exp_m1() / a
    }
}

/// Angular fluxes from one sweep: the value at every element edge for every
/// direction, plus the cell sources needed to evaluate inside a cell exactly.
#[derive(Debug, Clone)]
pub struct AngularFlux {
    pub quadrature: AngularQuadrature,
    /// `edges[d][k]`: flux of direction `d` at node `x_k`, `k = 0..=n_elements`.
    pub edges: Vec<Vec<f64>>,
    /// Right-hand side `(σ_s φ + Q)/2` at the left and right end of each cell.
    pub source: Vec<(f64, f64)>,
    sigma_t: f64,
    h: f64,
}

impl AngularFlux {
    pub fn n_elements(&self) -> usize {
        self.source.len()
    }

    /// Flux of direction `d` at local coordinate `t ∈ [0, 1]` of element `e`.
    pub fn value(&self, d: usize, e: usize, t: f64) -> f64 {
        let mu = self.quadrature.mu[d];
        let (s_in, s_out, inflow, tau) = if mu > 0.0 {
            let (s0, s1) = self.source[e];
            (s0, s1, self.edges[d][e], t)
        } else {
            let (s0, s1) = self.source[e];
            (s1, s0, self.edges[d][e + 1], 1.0 - t)
        };
        let a = self.sigma_t * self.h / mu.abs();
        let decay = (-a * tau).exp();
        let slope = s_out - s_in;
        inflow * decay
            + s_in / self.sigma_t * (-(-a * tau).exp_m1())
            + slope / self.sigma_t * ramp_response(a, tau)
    }

    /// `Σ w_d ψ_d` at a point.
    pub fn scalar_flux(&self, e: usize, t: f64) -> f64 {
        (0..self.quadrature.len())
            .map(|d| self.quadrature.weights[d] * self.value(d, e, t))
            .sum()
    }
}

/// Solves `μ_d ψ' + σ_t ψ = (σ_s φ + Q)/2` for every direction, with `φ`
/// linear in each cell (`phi[2e]`, `phi[2e+1]` at the cell ends). The solution
/// of the cell problem with a linear source is exact, so the only
/// discretization error is the representation of `φ`.
pub fn transport_sweep(problem: &TransportProblem, phi: &[f64]) -> Result<AngularFlux> {
    problem.validate()?;
    let n = problem.n_elements;
    if phi.len() != 2 * n {
        return Err(Error::Dimension(format!(
            "scalar flux has {} values, the mesh needs {}",
            phi.len(),
            2 * n
        )));
    }
    let quadrature = AngularQuadrature::gauss_legendre(problem.n_angles)?;
    let sigma_s = problem.sigma_s();
    let source: Vec<(f64, f64)> = (0..n)
        .map(|e| {
            (
                0.5 * (sigma_s * phi[2 * e] + problem.source),
                0.5 * (sigma_s * phi[2 * e + 1] + problem.source),
            )
        })
        .collect();
    let h = problem.element_length();
    let mut flux = AngularFlux {
        quadrature,
        edges: Vec::new(),
        source,
        sigma_t: problem.sigma_t,
        h,
    };
    let mut edges = Vec::with_capacity(flux.quadrature.len());
    for d in 0..flux.quadrature.len() {
        let mut psi = vec![0.0; n + 1];
        if flux.quadrature.mu[d] > 0.0 {
            psi[0] = problem.inflow_left;
            for e in 0..n {
                psi[e + 1] = cell_outflow(&flux, d, e, psi[e]);
            }
        } else {
            psi[n] = problem.inflow_right;
            for e in (0..n).rev() {
                psi[e] = cell_outflow(&flux, d, e, psi[e + 1]);
            }
        }
        edges.push(psi);
    }
    flux.edges = edges;
    Ok(flux)
}

fn cell_outflow(flux: &AngularFlux, d: usize, e: usize, inflow: f64) -> f64 {
    let mu = flux.quadrature.mu[d];
    let (s0, s1) = flux.source[e];
    let (s_in, s_out) = if mu > 0.0 { (s0, s1) } else { (s1, s0) };
    let a = flux.sigma_t * flux.h / mu.abs();
    inflow * (-a).exp() + s_in / flux.sigma_t * (-(-a).exp_m1()) + (s_out - s_in) / flux.sigma_t * ramp_response(a, 1.0)
}

fn ratio(flux: &AngularFlux, x: f64, moments: impl Fn(usize) -> f64) -> Result<f64> {
    let q = &flux.quadrature;
    let (mut num, mut den) = (0.0, 0.0);
    for d in 0..q.len() {
        let psi = moments(d);
        num += q.mu[d] * q.mu[d] * q.weights[d] * psi;
        den += q.weights[d] * psi;
    }
    if !(den > 0.0) {
        return Err(Error::ClosureBreakdown { x, value: den });
    }
    Ok(num / den)
}

/// `E = Σ μ² w ψ / Σ w ψ` at the finite-element quadrature points of every
/// element and at both boundaries.
pub fn eddington(flux: &AngularFlux, problem: &TransportProblem) -> Result<EddingtonField> {
    let n = flux.n_elements();
    let h = problem.element_length();
    let (tq, _) = super::fem_rule();
    let mut interior = Vec::with_capacity(n * FEM_POINTS);
    for e in 0..n {
        for &t in &tq {
            let x = (e as f64 + t) * h;
            interior.push(ratio(flux, x, |d| flux.value(d, e, t))?);
        }
    }
    let left = ratio(flux, 0.0, |d| flux.edges[d][0])?;
    let right = ratio(flux, problem.length, |d| flux.edges[d][n])?;
    Ok(EddingtonField { interior, left, right })
}
