//! The semi-discrete operator `ρ ↦ dρ/dt`.
//!
//! Per cell, with the diagonal Gauss-Lobatto mass matrix, both
//! `u = ∂_x ξ` (central flux `ξ̂`) and `dρ/dt = ∂_x(f u)` (Lax-Friedrichs
//! type flux `f̂u`) are local matrix-vector products; no global solve is
//! needed. Interface traces are the endpoint nodal values of the adjacent
//! cells. In 2D the same 1D operator is swept along the Lobatto lines.

mod one_d;
mod two_d;

pub use one_d::Scheme1D;
pub use two_d::Scheme2D;

use crate::convolution::{ConvolutionBackend, ConvolutionMode, DEFAULT_MOMENT_TOL};
use crate::error::{DgError, Result};
use crate::field::{CellSpace, NodalField};
use crate::model::ModelSpec;

/// One-sided values at an interface.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Trace {
    pub rho: f64,
    pub f: f64,
    pub g: f64,
    pub u: f64,
    pub xi: f64,
}

/// Traces on both sides of an interface: `minus` from the left (lower)
/// cell's last node, `plus` from the right (upper) cell's first node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterfaceState {
    pub minus: Trace,
    pub plus: Trace,
}

impl InterfaceState {
    /// `max(|u⁺|, |u⁻|)`
    pub fn alpha(&self) -> f64 {
        self.plus.u.abs().max(self.minus.u.abs())
    }
}

/// `½(f⁺u⁺ + f⁻u⁻) + (α/2)(g⁺ − g⁻)` with `α = max(|u⁺|, |u⁻|)`.
pub fn interface_flux_fu(state: &InterfaceState) -> f64 {
    lax_friedrichs_flux(state, state.alpha())
}

/// The `f u` flux with an explicit viscosity `alpha`.
#[inline]
pub fn lax_friedrichs_flux(state: &InterfaceState, alpha: f64) -> f64 {
    let (m, p) = (&state.minus, &state.plus);
    0.5 * (p.f * p.u + m.f * m.u) + 0.5 * alpha * (p.g - m.g)
}

/// Largest step allowed by one side of an interface in the weak
/// positivity bound; `0/0` and non-positive denominators give `+∞`.
#[inline]
pub(crate) fn side_bound(h: f64, weight: f64, rho: f64, denom: f64) -> f64 {
    if denom <= 0.0 || !(denom.is_finite()) {
        return f64::INFINITY;
    }
    (h * weight * rho / denom).max(0.0)
}

/// Construction options shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    /// `None` picks quadrature for smooth kernels and exact moments otherwise.
    pub convolution: Option<ConvolutionMode>,
    pub backend: ConvolutionBackend,
    /// Multiplier (≥ 1) on the interface viscosity `α`.
    pub alpha_factor: f64,
    pub moment_tol: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            convolution: None,
            backend: ConvolutionBackend::Fft,
            alpha_factor: 1.0,
            moment_tol: DEFAULT_MOMENT_TOL,
        }
    }
}

impl SchemeOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha_factor >= 1.0) || !self.alpha_factor.is_finite() {
            return Err(DgError::Config(format!(
                "alpha factor must be at least 1, got {}",
                self.alpha_factor
            )));
        }
        Ok(())
    }
}

/// Everything one right-hand-side evaluation produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub xi: NodalField,
    /// One component per space dimension.
    pub velocity: Vec<NodalField>,
    pub rhs: NodalField,
    /// `Ĩ = ∫~ f |u|²`
    pub dissipation: f64,
    /// `Σ (α/2)[g][ξ]`, interface quadrature included in 2D.
    pub jump_dissipation: f64,
}

/// Terms of the discrete entropy balance `⟨dρ/dt, ξ⟩ = −Ĩ − Σ (α/2)[g][ξ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBudget {
    /// `⟨dρ/dt, ξ⟩` in the quadrature inner product.
    pub pairing: f64,
    pub dissipation: f64,
    pub jump_dissipation: f64,
}

impl EntropyBudget {
    /// `pairing + Ĩ + jumps`, zero up to roundoff.
    pub fn residual(&self) -> f64 {
        self.pairing + self.dissipation + self.jump_dissipation
    }
}

/// A dimension-generic semi-discrete DG operator.
pub trait SpatialOperator: Send + Sync {
    type Space: CellSpace;

    fn space(&self) -> &Self::Space;
    fn model(&self) -> &ModelSpec;

    /// `ξ = H'(ρ) + V + W∗ρ` at the nodes.
    fn compute_xi(&self, rho: &NodalField) -> Result<NodalField>;

    /// `W∗ρ` at the nodes, or `None` without a kernel.
    fn convolve(&self, rho: &NodalField) -> Result<Option<NodalField>>;

    /// Nodal values of the confinement potential.
    fn potential_values(&self) -> &[f64];

    /// Full evaluation at `(ρ, t)`.
    fn evaluate(&self, rho: &NodalField, t: f64) -> Result<Evaluation>;

    /// Weak-positivity step bound for an Euler step from `rho`.
    fn max_stable_dt(&self, rho: &NodalField) -> Result<f64>;

    fn rhs(&self, rho: &NodalField, t: f64) -> Result<NodalField> {
        Ok(self.evaluate(rho, t)?.rhs)
    }

    /// `u = ∇ξ` components.
    fn compute_velocity(&self, rho: &NodalField) -> Result<Vec<NodalField>> {
        Ok(self.evaluate(rho, 0.0)?.velocity)
    }

    fn entropy_budget(&self, rho: &NodalField, t: f64) -> Result<EntropyBudget> {
        let ev = self.evaluate(rho, t)?;
        Ok(EntropyBudget {
            pairing: self.space().inner(&ev.rhs, &ev.xi),
            dissipation: ev.dissipation,
            jump_dissipation: ev.jump_dissipation,
        })
    }
}

pub(crate) fn check_finite(field: &NodalField, what: &str) -> Result<()> {
    if field.all_finite() {
        Ok(())
    } else {
        Err(DgError::NonFinite(what.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(rho: f64, u: f64) -> Trace {
        Trace {
            rho,
            f: rho,
            g: rho,
            u,
            xi: 0.0,
        }
    }

    #[test]
    fn flux_examples() {
        let rest = InterfaceState {
            minus: trace(0.7, 0.0),
            plus: trace(0.3, 0.0),
        };
        assert_eq!(interface_flux_fu(&rest), 0.0);

        let smooth = InterfaceState {
            minus: trace(1.3, -0.4),
            plus: trace(1.3, -0.4),
        };
        assert!((interface_flux_fu(&smooth) - 1.3 * -0.4).abs() < 1e-16);

        let jump = InterfaceState {
            minus: trace(0.0, 2.0),
            plus: trace(1.0, -1.0),
        };
        assert_eq!(interface_flux_fu(&jump), 0.5);
    }

    #[test]
    fn side_bound_conventions() {
        assert_eq!(side_bound(1.0, 1.0, 0.0, 0.0), f64::INFINITY);
        assert_eq!(side_bound(1.0, 1.0, 1.0, -2.0), f64::INFINITY);
        assert_eq!(side_bound(0.5, 1.0, 1.0, 2.0), 0.25);
    }

    #[test]
    fn alpha_factor_below_one_rejected() {
        let o = SchemeOptions {
            alpha_factor: 0.5,
            ..Default::default()
        };
        assert!(o.validate().is_err());
    }
}
