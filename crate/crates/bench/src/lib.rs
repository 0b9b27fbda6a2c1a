//! Fixtures shared by the criterion benchmarks.

use dgflow_core::prelude::*;

/// Gaussian kernel moments on `[-1, 1]` with `n` cells of degree `k`.
pub fn gaussian_moments(n: usize, k: usize) -> KernelMoments {
    let kernel = Kernel::smooth(|d| (-d[0] * d[0] / 0.1).exp());
    let rule = gauss_lobatto_rule(k).expect("supported degree");
    let mesh = uniform_mesh_1d(-1.0, 1.0, n).expect("valid mesh");
    kernel_moments(&kernel, &mesh, &rule, ConvolutionMode::Quadrature, 1e-13).expect("moments")
}

/// A deterministic positive field with `n` cells of `npc` nodes.
pub fn wavy_field(n: usize, npc: usize) -> NodalField {
    let values = (0..n * npc).map(|i| 1.5 + (0.37 * i as f64).sin()).collect();
    NodalField::new(values, npc).expect("consistent shape")
}

/// Heat equation with a Gaussian interaction kernel on `[-1, 1]`.
pub fn kernel_scheme(n: usize, k: usize) -> Scheme1D {
    let space = Space1D::new(uniform_mesh_1d(-1.0, 1.0, n).expect("valid mesh"), k).expect("valid space");
    let model = ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln())
        .with_kernel(Kernel::smooth(|d| (-d[0] * d[0] / 0.1).exp()));
    Scheme1D::new(space, model, SchemeOptions::default()).expect("valid scheme")
}
