//! Problem declaration: mobility `f`, flux function `g`, internal energy
//! `H` with derivative `H'`, confinement `V`, interaction kernel `W` and an
//! optional source term.

use std::fmt;
use std::sync::Arc;

/// Scalar function of the density.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Function of position (or displacement), given as a 1- or 2-slice.
pub type PositionFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Source term `F(x, t)`.
pub type SourceFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// IEEE guard for `H'` at vacuum: `H'(max(ρ, RHO_FLOOR))`.
pub const RHO_FLOOR: f64 = 1e-300;

const PROBE_POINTS: usize = 1024;
const KERNEL_PROBE_POINTS: usize = 256;

/// `x log x` extended continuously by 0 at the origin.
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Choice of `g` in the Lax-Friedrichs part of the `f u` flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxSplit {
    /// `g = f`, valid when `f` is increasing.
    MirrorF,
    /// `g(ρ) = C ρ`, valid when `f(ρ)/ρ <= C`.
    Linear(f64),
}

/// Interaction potential `W`, symmetric by contract.
#[derive(Clone)]
pub struct Kernel {
    eval: PositionFn,
    smooth: bool,
    breakpoints: Vec<f64>,
}

impl Kernel {
    /// A smooth kernel. Its convolution is taken with the nodal quadrature.
    pub fn smooth(eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            smooth: true,
            breakpoints: Vec::new(),
        }
    }

    /// A kernel with kinks or integrable singularities at the listed
    /// per-axis displacements. Its convolution is integrated exactly.
    pub fn nonsmooth(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        breakpoints: Vec<f64>,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            smooth: false,
            breakpoints,
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    /// Per-axis displacements where the kernel is not smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn eval(&self, d: &[f64]) -> f64 {
        (self.eval)(d)
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("smooth", &self.smooth)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

/// Replaces the central `ξ̂` at the two ends of a 1D domain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XiBoundaryOverride {
    /// Value seen by the first cell at `x = a`.
    pub left: Option<f64>,
    /// Value seen by the last cell at `x = b`.
    pub right: Option<f64>,
}

/// One problem instance `∂t ρ = ∇·(f(ρ) ∇(H'(ρ) + V + W∗ρ)) + F`.
#[derive(Clone)]
pub struct ModelSpec {
    mobility: ScalarFn,
    flux_split: FluxSplit,
    energy: ScalarFn,
    energy_prime: ScalarFn,
    potential: Option<PositionFn>,
    kernel: Option<Kernel>,
    source: Option<SourceFn>,
    xi_override: XiBoundaryOverride,
    probe_range: (f64, f64),
    probe_extent: f64,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("flux_split", &self.flux_split)
            .field("has_potential", &self.potential.is_some())
            .field("kernel", &self.kernel)
            .field("has_source", &self.source.is_some())
            .field("xi_override", &self.xi_override)
            .field("probe_range", &self.probe_range)
            .finish()
    }
}

impl ModelSpec {
    /// Starts a model from `f`, `H` and `H'`, with `g(ρ) = ρ`.
    pub fn new(
        mobility: impl Fn(f64) -> f64 + Send + Sync + 'static,
        energy: impl Fn(f64) -> f64 + Send + Sync + 'static,
        energy_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            mobility: Arc::new(mobility),
            flux_split: FluxSplit::Linear(1.0),
            energy: Arc::new(energy),
            energy_prime: Arc::new(energy_prime),
            potential: None,
            kernel: None,
            source: None,
            xi_override: XiBoundaryOverride::default(),
            probe_range: (0.0, 1.0),
            probe_extent: 1.0,
        }
    }

    pub fn with_flux_split(mut self, split: FluxSplit) -> Self {
        self.flux_split = split;
        self
    }

    pub fn with_potential(mut self, v: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.potential = Some(Arc::new(v));
        self
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn with_source(mut self, s: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(s));
        self
    }

    pub fn with_xi_override(mut self, o: XiBoundaryOverride) -> Self {
        self.xi_override = o;
        self
    }

    /// Density range `[lo, hi]` on which [`validate_model`] probes `f` and `H'`.
    pub fn with_probe_range(mut self, lo: f64, hi: f64) -> Self {
        self.probe_range = (lo, hi);
        self
    }

    /// Half-width of the displacement box used to probe kernel symmetry.
    pub fn with_probe_extent(mut self, extent: f64) -> Self {
        self.probe_extent = extent;
        self
    }

    #[inline]
    pub fn f(&self, rho: f64) -> f64 {
        (self.mobility)(rho)
    }

    #[inline]
    pub fn g(&self, rho: f64) -> f64 {
        match self.flux_split {
            FluxSplit::MirrorF => (self.mobility)(rho),
            FluxSplit::Linear(c) => c * rho,
        }
    }

    #[inline]
    pub fn h(&self, rho: f64) -> f64 {
        (self.energy)(rho)
    }

    /// `H'` with the vacuum guard applied.
    #[inline]
    pub fn h_prime(&self, rho: f64) -> f64 {
        (self.energy_prime)(rho.max(RHO_FLOOR))
    }

    pub fn flux_split(&self) -> FluxSplit {
        self.flux_split
    }

    pub fn potential(&self) -> Option<&PositionFn> {
        self.potential.as_ref()
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn source(&self) -> Option<&SourceFn> {
        self.source.as_ref()
    }

    pub fn xi_override(&self) -> XiBoundaryOverride {
        self.xi_override
    }
}

/// Entropy split into its three contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyParts {
    pub internal: f64,
    pub confinement: f64,
    pub interaction: f64,
    pub total: f64,
}

impl EntropyParts {
    pub fn new(internal: f64, confinement: f64, interaction: f64) -> Self {
        Self {
            internal,
            confinement,
            interaction,
            total: internal + confinement + interaction,
        }
    }
}

/// Outcome of [`validate_model`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the structural assumptions on a probe grid: `f(0) = 0`, `f >= 0`,
/// the `g` rule, strict monotonicity of `H'` and symmetry of `W`.
pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut failures = Vec::new();
    let (lo, hi) = spec.probe_range;

    let f0 = spec.f(0.0);
    if f0 != 0.0 {
        failures.push(format!("f(0) = {f0}, expected 0"));
    }

    let grid: Vec<f64> = (0..PROBE_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (PROBE_POINTS - 1) as f64)
        .collect();

    let mut prev_f: Option<f64> = None;
    let mut prev_hp: Option<(f64, f64)> = None;
    for &rho in &grid {
        let f = spec.f(rho);
        if !(f >= 0.0) {
            failures.push(format!("f({rho}) = {f} is negative"));
            break;
        }
        match spec.flux_split {
            FluxSplit::MirrorF => {
                if let Some(p) = prev_f {
                    if f < p {
                        failures.push(format!("f decreases at rho = {rho}; g = f needs increasing f"));
                        break;
                    }
                }
            }
            FluxSplit::Linear(c) => {
                if rho > 0.0 && f / rho > c * (1.0 + 1e-12) {
                    failures.push(format!(
                        "f(rho)/rho = {} exceeds C = {c} at rho = {rho}",
                        f / rho
                    ));
                    break;
                }
            }
        }
        prev_f = Some(f);

        if rho > 0.0 {
            let hp = spec.h_prime(rho);
            if let Some((r0, h0)) = prev_hp {
                if !(hp > h0) && hp != f64::INFINITY {
                    // H' ≡ 0 models (pure transport) are admitted.
                    if !(hp == 0.0 && h0 == 0.0) {
                        failures.push(format!(
                            "H' not strictly increasing between rho = {r0} and {rho}"
                        ));
                        break;
                    }
                }
            }
            prev_hp = Some((rho, hp));
        }
    }

    if let Some(kernel) = &spec.kernel {
        let e = spec.probe_extent;
        for i in 0..KERNEL_PROBE_POINTS {
            let t = (i as f64 + 0.5) / KERNEL_PROBE_POINTS as f64;
            let d = -e + 2.0 * e * t;
            // A 1D kernel ignores the second coordinate.
            let d2 = e * (2.0 * ((i * 37) % KERNEL_PROBE_POINTS) as f64 / KERNEL_PROBE_POINTS as f64 - 1.0);
            for pts in [[d, d2], [d, 0.0]] {
                let a = kernel.eval(&pts);
                let b = kernel.eval(&[-pts[0], -pts[1]]);
                let scale = 1.0 + a.abs().max(b.abs());
                if (a - b).abs() > 1e-12 * scale {
                    failures.push(format!("W not symmetric at {pts:?}: {a} vs {b}"));
                    break;
                }
            }
            if failures.last().map_or(false, |f| f.starts_with("W not")) {
                break;
            }
        }
    }

    ValidationReport { failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_mobility_with_unit_constant_passes() {
        let spec = ModelSpec::new(|r| r, xlogx, |r: f64| r.ln()).with_probe_range(0.0, 5.0);
        assert!(validate_model(&spec).passed());
    }

    #[test]
    fn sqrt_mobility_mirrored_passes() {
        let spec = ModelSpec::new(|r: f64| r.max(0.0).sqrt(), |r: f64| 4.0 / 3.0 * r.powf(1.5), |r: f64| 2.0 * r.sqrt())
            .with_flux_split(FluxSplit::MirrorF)
            .with_probe_range(0.0, 4.0);
        assert!(validate_model(&spec).passed());
    }

    #[test]
    fn constant_too_small_fails() {
        let spec = ModelSpec::new(|r| r, xlogx, |r: f64| r.ln())
            .with_flux_split(FluxSplit::Linear(0.5))
            .with_probe_range(0.0, 5.0);
        let report = validate_model(&spec);
        assert!(!report.passed());
        assert!(report.failures[0].contains("exceeds C"));
    }

    #[test]
    fn nonzero_mobility_at_vacuum_fails() {
        let spec = ModelSpec::new(|r| r + 0.1, |r| r * r, |r| 2.0 * r);
        assert!(!validate_model(&spec).passed());
    }

    #[test]
    fn decreasing_h_prime_fails() {
        let spec = ModelSpec::new(|r| r, |r| -r * r, |r| -2.0 * r);
        assert!(!validate_model(&spec).passed());
    }

    #[test]
    fn asymmetric_kernel_fails() {
        let spec = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0).with_kernel(Kernel::smooth(|d| d[0]));
        assert!(!validate_model(&spec).passed());
        let spec = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0)
            .with_kernel(Kernel::smooth(|d| (-d[0] * d[0]).exp()));
        assert!(validate_model(&spec).passed());
    }

    #[test]
    fn entropy_parts_total() {
        let e = EntropyParts::new(1.5, -0.25, 0.125);
        assert_eq!(e.total, 1.375);
    }

    #[test]
    fn h_prime_guard_at_vacuum() {
        let spec = ModelSpec::new(|r| r, xlogx, |r: f64| r.ln());
        assert!((spec.h_prime(0.0) - RHO_FLOOR.ln()).abs() < 1e-12);
        assert!(spec.h_prime(0.0).is_finite());
    }
}
