//! The nonlocal term `W∗ρ_h` at every node.
//!
//! On a uniform periodic mesh the convolution is block-Toeplitz in the cell
//! index: `(W∗ρ)_i = Σ_m K_m ρ_{i+m}` with time-independent moment blocks
//! `K_m`. The blocks are filled either by nodal quadrature (smooth kernels)
//! or by adaptive integration of the kernel against the Lagrange basis
//! (kernels with kinks or log singularities). Applying them is a direct
//! `O(N²)` sum or a per-node-pair circular convolution through the FFT.
//!
//! Displacements are taken as minimal images on the periodic box.

mod integrate;

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{DgError, Result};
use crate::field::{CellSpace, NodalField, Space1D, Space2D};
use crate::mesh::{Mesh1D, Mesh2D};
use crate::model::Kernel;
use crate::quadrature::QuadRule;

pub(crate) use integrate::tanh_sinh;

/// Absolute tolerance for exactly integrated moments.
pub const DEFAULT_MOMENT_TOL: f64 = 1e-10;

/// How the moment blocks are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionMode {
    /// Gauss-Lobatto quadrature in the source cell.
    Quadrature,
    /// Adaptive integration split at the kernel's declared breakpoints.
    Exact,
}

impl ConvolutionMode {
    /// Quadrature for smooth kernels, exact integration otherwise.
    pub fn for_kernel(kernel: &Kernel) -> Self {
        if kernel.is_smooth() {
            Self::Quadrature
        } else {
            Self::Exact
        }
    }
}

/// How the moment blocks are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionBackend {
    Direct,
    Fft,
}

/// Moment blocks `K_o` for every periodic cell offset `o`.
///
/// In 2D the offset `o = l·N_x + m` stands for a shift of `m` cells in `x`
/// and `l` in `y`. Each block is `(nodes per cell)²`, row-major with the
/// target node as row.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMoments {
    dims: [usize; 2],
    dimension: usize,
    npc: usize,
    spacing: [f64; 2],
    mode: ConvolutionMode,
    blocks: Vec<f64>,
}

impl KernelMoments {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mode(&self) -> ConvolutionMode {
        self.mode
    }

    /// Cells along `x` and `y` (`y` is 1 in 1D).
    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.npc
    }

    pub fn n_offsets(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn block(&self, offset: usize) -> &[f64] {
        let size = self.npc * self.npc;
        &self.blocks[offset * size..(offset + 1) * size]
    }

    /// Entry `(K_offset)_{target, source}`.
    pub fn entry(&self, offset: usize, target: usize, source: usize) -> f64 {
        self.block(offset)[target * self.npc + source]
    }

    fn check_field(&self, field: &NodalField) -> Result<()> {
        let expected = self.n_offsets() * self.npc;
        if field.len() != expected || field.nodes_per_cell() != self.npc {
            return Err(DgError::ShapeMismatch {
                expected,
                got: field.len(),
            });
        }
        Ok(())
    }
}

fn require_uniform(mesh: &Mesh1D) -> Result<f64> {
    if !mesh.is_uniform() {
        return Err(DgError::UnsupportedMesh(
            "kernel moments need a uniform mesh".into(),
        ));
    }
    Ok(mesh.length() / mesh.n_cells() as f64)
}

/// Reference coordinates in `(-1, 1)` where the displacement
/// `d(ζ) = (h/2)(ζ_r - ζ) - shift` hits a kernel breakpoint or the periodic
/// seam, sorted and bracketed by the cell ends.
fn panel_edges(zeta_r: f64, h: f64, shift: f64, length: f64, breakpoints: &[f64]) -> Vec<f64> {
    let d_lo = 0.5 * h * (zeta_r - 1.0) - shift;
    let d_hi = 0.5 * h * (zeta_r + 1.0) - shift;
    let mut cuts = vec![-1.0, 1.0];
    let seam = 0.5 * length;
    for &b in breakpoints.iter().chain(std::iter::once(&seam)) {
        let j_lo = ((d_lo - b) / length).ceil() as i64;
        let j_hi = ((d_hi - b) / length).floor() as i64;
        for j in j_lo..=j_hi {
            let t = b + j as f64 * length;
            if t > d_lo && t < d_hi {
                let z = zeta_r - 2.0 * (t + shift) / h;
                if z > -1.0 && z < 1.0 {
                    cuts.push(z);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    cuts
}

/// Moment blocks on a uniform 1D mesh.
///
/// `Quadrature` gives `(K_m)_{rs} = (h/2) w_s W(x_i^r - x_{i+m}^s)`; `Exact`
/// integrates `W(x_i^r - y) L_s(y)` over cell `i+m` to absolute tolerance
/// `tol`.
pub fn kernel_moments(
    kernel: &Kernel,
    mesh: &Mesh1D,
    rule: &QuadRule,
    mode: ConvolutionMode,
    tol: f64,
) -> Result<KernelMoments> {
    if !(tol > 0.0) {
        return Err(DgError::Config("moment tolerance must be positive".into()));
    }
    let h = require_uniform(mesh)?;
    let n_cells = mesh.n_cells();
    let length = mesh.length();
    let n = rule.len();
    let z = rule.nodes();
    let w = rule.weights();

    let blocks: Vec<Vec<f64>> = (0..n_cells)
        .into_par_iter()
        .map(|m| -> Result<Vec<f64>> {
            let shift = m as f64 * h;
            let mut block = vec![0.0; n * n];
            for r in 0..n {
                match mode {
                    ConvolutionMode::Quadrature => {
                        for s in 0..n {
                            let d = mesh.periodic_displacement(0.5 * h * (z[r] - z[s]) - shift);
                            block[r * n + s] = 0.5 * h * w[s] * kernel.eval(&[d]);
                        }
                    }
                    ConvolutionMode::Exact => {
                        let cuts = panel_edges(z[r], h, shift, length, kernel.breakpoints());
                        let panel_tol = tol / (cuts.len() - 1) as f64;
                        let mut basis = vec![0.0; n];
                        let mut integrand = |zeta: f64, out: &mut [f64]| {
                            let d = mesh.periodic_displacement(0.5 * h * (z[r] - zeta) - shift);
                            let wv = 0.5 * h * kernel.eval(&[d]);
                            rule.basis_into(zeta, &mut basis);
                            for (o, b) in out.iter_mut().zip(&basis) {
                                *o = wv * b;
                            }
                        };
                        for pair in cuts.windows(2) {
                            let part = tanh_sinh(&mut integrand, pair[0], pair[1], n, panel_tol)
                                .map_err(|estimate| DgError::Tolerance {
                                    offset: m,
                                    tol,
                                    estimate,
                                })?;
                            for (s, v) in part.iter().enumerate() {
                                block[r * n + s] += v;
                            }
                        }
                    }
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;

    Ok(KernelMoments {
        dims: [n_cells, 1],
        dimension: 1,
        npc: n,
        spacing: [h, 0.0],
        mode,
        blocks: blocks.concat(),
    })
}

/// Moment blocks on a uniform Cartesian mesh, with tensor Lagrange basis.
pub fn kernel_moments_2d(
    kernel: &Kernel,
    mesh: &Mesh2D,
    rule: &QuadRule,
    mode: ConvolutionMode,
    tol: f64,
) -> Result<KernelMoments> {
    if !(tol > 0.0) {
        return Err(DgError::Config("moment tolerance must be positive".into()));
    }
    let hx = require_uniform(&mesh.x)?;
    let hy = require_uniform(&mesh.y)?;
    let (nx, ny) = (mesh.x.n_cells(), mesh.y.n_cells());
    let (lx, ly) = (mesh.x.length(), mesh.y.length());
    let n = rule.len();
    let npc = n * n;
    let z = rule.nodes();
    let w = rule.weights();

    let blocks: Vec<Vec<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|o| -> Result<Vec<f64>> {
            let (m, l) = (o % nx, o / nx);
            let (sx, sy) = (m as f64 * hx, l as f64 * hy);
            let mut block = vec![0.0; npc * npc];
            for s in 0..n {
                for r in 0..n {
                    let a = s * n + r;
                    let row = &mut block[a * npc..(a + 1) * npc];
                    match mode {
                        ConvolutionMode::Quadrature => {
                            for q in 0..n {
                                let dy = mesh.y.periodic_displacement(0.5 * hy * (z[s] - z[q]) - sy);
                                for p in 0..n {
                                    let dx = mesh.x.periodic_displacement(0.5 * hx * (z[r] - z[p]) - sx);
                                    row[q * n + p] =
                                        0.25 * hx * hy * w[p] * w[q] * kernel.eval(&[dx, dy]);
                                }
                            }
                        }
                        ConvolutionMode::Exact => {
                            let cuts_x = panel_edges(z[r], hx, sx, lx, kernel.breakpoints());
                            let cuts_y = panel_edges(z[s], hy, sy, ly, kernel.breakpoints());
                            let inner_tol = 0.1 * tol / ((cuts_x.len() - 1) as f64);
                            let outer_tol = 0.5 * tol / ((cuts_y.len() - 1) as f64);
                            let mut failure: Option<f64> = None;
                            let mut bx = vec![0.0; n];
                            let mut by = vec![0.0; n];
                            let mut outer = |eta: f64, out: &mut [f64]| {
                                let dy = mesh.y.periodic_displacement(0.5 * hy * (z[s] - eta) - sy);
                                let mut line = vec![0.0; n];
                                let mut inner = |zeta: f64, o: &mut [f64]| {
                                    let dx = mesh.x.periodic_displacement(0.5 * hx * (z[r] - zeta) - sx);
                                    let wv = 0.5 * hx * kernel.eval(&[dx, dy]);
                                    rule.basis_into(zeta, &mut bx);
                                    for (oo, b) in o.iter_mut().zip(&bx) {
                                        *oo = wv * b;
                                    }
                                };
                                for pair in cuts_x.windows(2) {
                                    match tanh_sinh(&mut inner, pair[0], pair[1], n, inner_tol) {
                                        Ok(part) => {
                                            for (acc, v) in line.iter_mut().zip(&part) {
                                                *acc += v;
                                            }
                                        }
                                        Err(e) => failure = Some(failure.unwrap_or(0.0).max(e)),
                                    }
                                }
                                rule.basis_into(eta, &mut by);
                                for q in 0..n {
                                    for p in 0..n {
                                        out[q * n + p] = 0.5 * hy * by[q] * line[p];
                                    }
                                }
                            };
                            for pair in cuts_y.windows(2) {
                                let part = tanh_sinh(&mut outer, pair[0], pair[1], npc, outer_tol)
                                    .map_err(|estimate| DgError::Tolerance {
                                        offset: o,
                                        tol,
                                        estimate,
                                    })?;
                                for (acc, v) in row.iter_mut().zip(&part) {
                                    *acc += v;
                                }
                            }
                            if let Some(estimate) = failure {
                                return Err(DgError::Tolerance {
                                    offset: o,
                                    tol,
                                    estimate,
                                });
                            }
                        }
                    }
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;

    Ok(KernelMoments {
        dims: [nx, ny],
        dimension: 2,
        npc,
        spacing: [hx, hy],
        mode,
        blocks: blocks.concat(),
    })
}

/// `(W∗ρ)_c = Σ_o K_o ρ_{c+o}` with periodic wrap, by direct summation.
pub fn convolve_direct(moments: &KernelMoments, field: &NodalField) -> Result<NodalField> {
    moments.check_field(field)?;
    let [nx, ny] = moments.dims;
    let npc = moments.npc;
    let rho = field.values();
    let mut out = vec![0.0; rho.len()];
    out.par_chunks_mut(npc).enumerate().for_each(|(c, out_cell)| {
        let (i, j) = (c % nx, c / nx);
        for l in 0..ny {
            let jj = (j + l) % ny;
            for m in 0..nx {
                let ii = (i + m) % nx;
                let src = &rho[(jj * nx + ii) * npc..(jj * nx + ii + 1) * npc];
                let block = moments.block(l * nx + m);
                for (a, o) in out_cell.iter_mut().enumerate() {
                    let row = &block[a * npc..(a + 1) * npc];
                    let mut acc = 0.0;
                    for (k, v) in row.iter().zip(src) {
                        acc += k * v;
                    }
                    *o += acc;
                }
            }
        }
    });
    NodalField::new(out, npc)
}

/// Periodic 1D/2D FFT on a grid stored with `x` fastest.
struct GridFft {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl GridFft {
    fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fx: planner.plan_fft_forward(nx),
            fy: planner.plan_fft_forward(ny),
            ix: planner.plan_fft_inverse(nx),
            iy: planner.plan_fft_inverse(ny),
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (fx, fy) = if inverse {
            (&self.ix, &self.iy)
        } else {
            (&self.fx, &self.fy)
        };
        fx.process(buf);
        if self.ny > 1 {
            let (nx, ny) = (self.nx, self.ny);
            let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    t[i * ny + j] = buf[j * nx + i];
                }
            }
            fy.process(&mut t);
            for j in 0..ny {
                for i in 0..nx {
                    buf[j * nx + i] = t[i * ny + j];
                }
            }
        }
    }
}

/// Precomputed spectra of the moment blocks for repeated FFT convolution.
pub struct FftConvolver {
    dims: [usize; 2],
    npc: usize,
    grid: GridFft,
    /// Spectrum of the reversed block sequence, one per `(target, source)`.
    spectra: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver")
            .field("dims", &self.dims)
            .field("nodes_per_cell", &self.npc)
            .finish()
    }
}

impl FftConvolver {
    pub fn new(moments: &KernelMoments) -> Self {
        let [nx, ny] = moments.dims;
        let npc = moments.npc;
        let grid = GridFft::new(nx, ny);
        // Σ_o K_o ρ_{c+o} is a correlation; K̃_o = K_{-o} makes it a convolution.
        let spectra = (0..npc * npc)
            .into_par_iter()
            .map(|ab| {
                let mut g = vec![Complex64::new(0.0, 0.0); nx * ny];
                for l in 0..ny {
                    for m in 0..nx {
                        let src = ((ny - l) % ny) * nx + (nx - m) % nx;
                        g[l * nx + m] = Complex64::new(moments.block(src)[ab], 0.0);
                    }
                }
                grid.transform(&mut g, false);
                g
            })
            .collect();
        Self {
            dims: [nx, ny],
            npc,
            grid,
            spectra,
        }
    }

    pub fn convolve(&self, field: &NodalField) -> Result<NodalField> {
        let [nx, ny] = self.dims;
        let npc = self.npc;
        let cells = nx * ny;
        if field.len() != cells * npc || field.nodes_per_cell() != npc {
            return Err(DgError::ShapeMismatch {
                expected: cells * npc,
                got: field.len(),
            });
        }
        let rho = field.values();
        let inputs: Vec<Vec<Complex64>> = (0..npc)
            .into_par_iter()
            .map(|b| {
                let mut g: Vec<Complex64> = (0..cells)
                    .map(|c| Complex64::new(rho[c * npc + b], 0.0))
                    .collect();
                self.grid.transform(&mut g, false);
                g
            })
            .collect();
        let scale = 1.0 / cells as f64;
        let outputs: Vec<Vec<f64>> = (0..npc)
            .into_par_iter()
            .map(|a| {
                let mut acc = vec![Complex64::new(0.0, 0.0); cells];
                for (b, input) in inputs.iter().enumerate() {
                    let spec = &self.spectra[a * npc + b];
                    for ((o, k), v) in acc.iter_mut().zip(spec).zip(input) {
                        *o += k * v;
                    }
                }
                self.grid.transform(&mut acc, true);
                acc.iter().map(|v| v.re * scale).collect()
            })
            .collect();
        let mut out = vec![0.0; cells * npc];
        for (a, vals) in outputs.iter().enumerate() {
            for (c, v) in vals.iter().enumerate() {
                out[c * npc + a] = *v;
            }
        }
        NodalField::new(out, npc)
    }
}

/// Same sum as [`convolve_direct`] through the FFT. Plans and spectra are
/// rebuilt on every call; keep an [`FftConvolver`] for repeated use.
pub fn convolve_fft(moments: &KernelMoments, field: &NodalField) -> Result<NodalField> {
    moments.check_field(field)?;
    FftConvolver::new(moments).convolve(field)
}

/// Nodal quadrature of the convolution on any mesh:
/// `(W∗ρ)(x_t) = Σ_c |c| Σ_b ŵ_b W(x_t - x_{c,b}) ρ_{c,b}`.
pub fn convolve_quadrature<S: CellSpace>(kernel: &Kernel, space: &S, field: &NodalField) -> Result<NodalField> {
    space.check_shape(field)?;
    let npc = space.nodes_per_cell();
    let dim = space.dimension();
    let w = space.reference_weights();
    let rho = field.values();
    let weighted: Vec<f64> = (0..space.n_dofs())
        .map(|d| space.cell_volume(d / npc) * w[d % npc] * rho[d])
        .collect();
    let out: Vec<f64> = (0..space.n_dofs())
        .into_par_iter()
        .map(|t| {
            let xt = space.point(t);
            let mut disp = [0.0; 2];
            let mut acc = 0.0;
            for (s, ws) in weighted.iter().enumerate() {
                let xs = space.point(s);
                for ax in 0..dim {
                    disp[ax] = space.wrap_displacement(ax, xt[ax] - xs[ax]);
                }
                acc += ws * kernel.eval(&disp[..dim]);
            }
            acc
        })
        .collect();
    NodalField::new(out, npc)
}

/// The convolution strategy a scheme holds for its whole run.
#[derive(Debug)]
pub enum Convolver {
    Direct(KernelMoments),
    Fft(FftConvolver),
    /// Nested nodal quadrature, used on non-uniform meshes.
    Nested(Kernel),
}

impl Convolver {
    pub fn for_space_1d(
        kernel: &Kernel,
        space: &Space1D,
        mode: ConvolutionMode,
        backend: ConvolutionBackend,
        tol: f64,
    ) -> Result<Self> {
        if !space.mesh().is_uniform() {
            return match mode {
                ConvolutionMode::Quadrature => Ok(Self::Nested(kernel.clone())),
                ConvolutionMode::Exact => Err(DgError::UnsupportedMesh(
                    "exact kernel moments need a uniform mesh".into(),
                )),
            };
        }
        let moments = kernel_moments(kernel, space.mesh(), space.rule(), mode, tol)?;
        Ok(Self::from_moments(moments, backend))
    }

    pub fn for_space_2d(
        kernel: &Kernel,
        space: &Space2D,
        mode: ConvolutionMode,
        backend: ConvolutionBackend,
        tol: f64,
    ) -> Result<Self> {
        let mesh = space.mesh();
        if !mesh.x.is_uniform() || !mesh.y.is_uniform() {
            return match mode {
                ConvolutionMode::Quadrature => Ok(Self::Nested(kernel.clone())),
                ConvolutionMode::Exact => Err(DgError::UnsupportedMesh(
                    "exact kernel moments need a uniform mesh".into(),
                )),
            };
        }
        let moments = kernel_moments_2d(kernel, mesh, space.rule(), mode, tol)?;
        Ok(Self::from_moments(moments, backend))
    }

    pub fn from_moments(moments: KernelMoments, backend: ConvolutionBackend) -> Self {
        match backend {
            ConvolutionBackend::Direct => Self::Direct(moments),
            ConvolutionBackend::Fft => Self::Fft(FftConvolver::new(&moments)),
        }
    }

    pub fn apply<S: CellSpace>(&self, space: &S, field: &NodalField) -> Result<NodalField> {
        match self {
            Self::Direct(m) => convolve_direct(m, field),
            Self::Fft(f) => f.convolve(field),
            Self::Nested(kernel) => convolve_quadrature(kernel, space, field),
        }
    }
}
