//! Nodal discontinuous Galerkin discretization of
//! `∂t ρ = ∇·(f(ρ) ∇(H'(ρ) + V + W∗ρ))` on periodic 1D intervals and 2D
//! Cartesian boxes.
//!
//! The pieces, bottom up:
//!
//! - [`quadrature`]: Gauss-Lobatto rules and the `(M, D, B)` operators.
//! - [`mesh`], [`field`]: partitions, node coordinates and nodal arrays.
//! - [`model`]: the problem functions `f, g, H, H', V, W` and a source.
//! - [`convolution`]: `W∗ρ` by quadrature or exact moments, direct or FFT.
//! - [`spatial`]: the semi-discrete operator in 1D and 2D.
//! - [`limiter`], [`timestep`]: positivity limiting and SSP-RK stepping.
//! - [`diagnostics`]: entropy, dissipation, error norms, decay fits.
//!
//! ```
//! use dgflow_core::prelude::*;
//!
//! let mesh = uniform_mesh_1d(-std::f64::consts::PI, std::f64::consts::PI, 20).unwrap();
//! let space = Space1D::new(mesh, 2).unwrap();
//! let model = ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln());
//! let scheme = Scheme1D::new(space, model, SchemeOptions::default()).unwrap();
//! let rho0 = scheme.space().interpolate(&|x| 2.0 + x[0].sin());
//! let h = scheme.space().mesh().h(0);
//! let schedule = Schedule { t_final: 0.01, tau: 0.01 * h * h, snapshot_times: vec![], diag_every: 0 };
//! let out = run(&scheme, rho0, &schedule, RkOrder::Ssp2, true).unwrap();
//! assert!(out.error.is_none());
//! ```

pub mod convolution;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod limiter;
pub mod mesh;
pub mod model;
pub mod quadrature;
pub mod spatial;
pub mod timestep;

pub use error::{DgError, Result};

/// The types most callers need.
pub mod prelude {
    pub use crate::convolution::{
        convolve_direct, convolve_fft, convolve_quadrature, kernel_moments, kernel_moments_2d,
        ConvolutionBackend, ConvolutionMode, Convolver, FftConvolver, KernelMoments,
    };
    pub use crate::diagnostics::{
        decay_rate_fit, discrete_dissipation, discrete_entropy, error_norms, error_norms_by_dof,
        error_norms_field, DiagnosticsRecord, ErrorNorms,
    };
    pub use crate::error::{DgError, Result};
    pub use crate::field::{CellSpace, NodalField, Space1D, Space2D};
    pub use crate::limiter::{apply_positivity_limiter, cell_averages, limit_in_place, max_stable_dt, LimiterReport};
    pub use crate::mesh::{physical_nodes, uniform_mesh_1d, Mesh1D, Mesh2D};
    pub use crate::model::{
        validate_model, xlogx, EntropyParts, FluxSplit, Kernel, ModelSpec, ValidationReport, XiBoundaryOverride,
    };
    pub use crate::quadrature::{gauss_lobatto_rule, lagrange_operators, OperatorSet, QuadRule};
    pub use crate::spatial::{
        interface_flux_fu, EntropyBudget, Evaluation, InterfaceState, Scheme1D, Scheme2D, SchemeOptions,
        SpatialOperator, Trace,
    };
    pub use crate::timestep::{
        advance, euler_stage, run, ssp_stage_combine, RkOrder, RunOutput, Schedule, SemiDiscrete, SolverState,
        StepControls, StepOutcome,
    };
}
