//! Nodal coefficient arrays and the discrete spaces they live on.
//!
//! A [`NodalField`] stores the values `ρ_i^r` (1D) or `ρ_{ij}^{rs}` (2D) cell
//! by cell. Because the basis is Lagrangian on the Gauss-Lobatto nodes, the
//! coefficients are point values, and the first/last coefficients of a cell
//! are its interface traces.

use crate::error::{DgError, Result};
use crate::mesh::{physical_nodes, Mesh1D, Mesh2D};
use crate::quadrature::{gauss_lobatto_rule, lagrange_operators, OperatorSet, QuadRule};

/// Per-cell nodal values, cell-major. In 2D the local index of node `(r, s)`
/// is `s * (k + 1) + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<f64>,
    nodes_per_cell: usize,
}

impl NodalField {
    pub fn new(values: Vec<f64>, nodes_per_cell: usize) -> Result<Self> {
        if nodes_per_cell == 0 || values.len() % nodes_per_cell != 0 {
            return Err(DgError::ShapeMismatch {
                expected: nodes_per_cell.max(1) * (values.len() / nodes_per_cell.max(1) + 1),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            nodes_per_cell,
        })
    }

    pub fn zeros(n_cells: usize, nodes_per_cell: usize) -> Self {
        Self {
            values: vec![0.0; n_cells * nodes_per_cell],
            nodes_per_cell,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.nodes_per_cell
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() / self.nodes_per_cell
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.values[c * self.nodes_per_cell..(c + 1) * self.nodes_per_cell]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.nodes_per_cell..(c + 1) * self.nodes_per_cell]
    }

    pub fn cells(&self) -> std::slice::Chunks<'_, f64> {
        self.values.chunks(self.nodes_per_cell)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &NodalField) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn same_shape(&self, other: &NodalField) -> bool {
        self.nodes_per_cell == other.nodes_per_cell && self.values.len() == other.values.len()
    }
}

/// Geometry shared by the 1D and 2D discretizations: cells, quadrature
/// weights, and physical node coordinates.
pub trait CellSpace: Send + Sync {
    fn dimension(&self) -> usize;
    fn rule(&self) -> &QuadRule;
    fn ops(&self) -> &OperatorSet;
    fn n_cells(&self) -> usize;
    fn nodes_per_cell(&self) -> usize;
    /// Measure (length or area) of cell `c`.
    fn cell_volume(&self, c: usize) -> f64;
    /// Quadrature weights of the nodes of one cell, normalized to sum to 1
    /// (`w_r / 2` in 1D, `w_r w_s / 4` in 2D).
    fn reference_weights(&self) -> &[f64];
    /// Physical coordinates of a degree of freedom.
    fn point(&self, dof: usize) -> &[f64];
    /// Minimal-image representative of a displacement along `axis`.
    fn wrap_displacement(&self, axis: usize, d: f64) -> f64;

    fn n_dofs(&self) -> usize {
        self.n_cells() * self.nodes_per_cell()
    }

    fn zeros(&self) -> NodalField {
        NodalField::zeros(self.n_cells(), self.nodes_per_cell())
    }

    fn check_shape(&self, field: &NodalField) -> Result<()> {
        if field.len() != self.n_dofs() || field.nodes_per_cell() != self.nodes_per_cell() {
            return Err(DgError::ShapeMismatch {
                expected: self.n_dofs(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// Nodal interpolation of a function of position.
    fn interpolate(&self, f: &dyn Fn(&[f64]) -> f64) -> NodalField {
        let values = (0..self.n_dofs()).map(|d| f(self.point(d))).collect();
        NodalField {
            values,
            nodes_per_cell: self.nodes_per_cell(),
        }
    }

    /// Quadrature of `Σ_c |c| Σ_n w_n v_n`, summed cells ascending.
    fn integrate(&self, field: &NodalField) -> f64 {
        self.integrate_with(field, &|v| v)
    }

    fn integrate_with(&self, field: &NodalField, g: &dyn Fn(f64) -> f64) -> f64 {
        let w = self.reference_weights();
        field
            .cells()
            .enumerate()
            .map(|(c, vals)| {
                let s: f64 = vals.iter().zip(w).map(|(v, wn)| wn * g(*v)).sum();
                self.cell_volume(c) * s
            })
            .sum()
    }

    /// Quadrature pairing `⟨a, b⟩`.
    fn inner(&self, a: &NodalField, b: &NodalField) -> f64 {
        let w = self.reference_weights();
        a.cells()
            .zip(b.cells())
            .enumerate()
            .map(|(c, (va, vb))| {
                let s: f64 = va.iter().zip(vb).zip(w).map(|((x, y), wn)| wn * x * y).sum();
                self.cell_volume(c) * s
            })
            .sum()
    }

    /// Cell averages `Σ_n w_n ρ_n` with normalized weights.
    fn cell_averages(&self, field: &NodalField) -> Vec<f64> {
        let w = self.reference_weights();
        field
            .cells()
            .map(|vals| vals.iter().zip(w).map(|(v, wn)| wn * v).sum())
            .collect()
    }
}

/// Discretization of an interval partition with `P^k` elements.
#[derive(Debug, Clone)]
pub struct Space1D {
    mesh: Mesh1D,
    rule: QuadRule,
    ops: OperatorSet,
    nodes: Vec<f64>,
    ref_weights: Vec<f64>,
}

impl Space1D {
    pub fn new(mesh: Mesh1D, k: usize) -> Result<Self> {
        let rule = gauss_lobatto_rule(k)?;
        let ops = lagrange_operators(&rule)?;
        let nodes = physical_nodes(&mesh, &rule);
        let ref_weights = rule.weights().iter().map(|w| 0.5 * w).collect();
        Ok(Self {
            mesh,
            rule,
            ops,
            nodes,
            ref_weights,
        })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.rule.degree()
    }

    /// All physical node coordinates, cell-major.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Evaluates the piecewise polynomial at `x`; `prefer_right` selects the
    /// trace at a cell interface.
    pub fn evaluate(&self, field: &NodalField, x: f64, prefer_right: bool) -> Option<f64> {
        let i = self.mesh.locate(x, prefer_right)?;
        let zeta = self.mesh.to_reference(i, x).clamp(-1.0, 1.0);
        Some(self.rule.interpolate(field.cell(i), zeta))
    }
}

impl CellSpace for Space1D {
    fn dimension(&self) -> usize {
        1
    }
    fn rule(&self) -> &QuadRule {
        &self.rule
    }
    fn ops(&self) -> &OperatorSet {
        &self.ops
    }
    fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }
    fn nodes_per_cell(&self) -> usize {
        self.rule.len()
    }
    fn cell_volume(&self, c: usize) -> f64 {
        self.mesh.h(c)
    }
    fn reference_weights(&self) -> &[f64] {
        &self.ref_weights
    }
    fn point(&self, dof: usize) -> &[f64] {
        std::slice::from_ref(&self.nodes[dof])
    }
    fn wrap_displacement(&self, _axis: usize, d: f64) -> f64 {
        self.mesh.periodic_displacement(d)
    }
}

/// Discretization of a Cartesian mesh with tensor `Q^k` elements.
#[derive(Debug, Clone)]
pub struct Space2D {
    mesh: Mesh2D,
    rule: QuadRule,
    ops: OperatorSet,
    /// Interleaved `(x, y)` per degree of freedom.
    points: Vec<f64>,
    ref_weights: Vec<f64>,
}

impl Space2D {
    pub fn new(mesh: Mesh2D, k: usize) -> Result<Self> {
        let rule = gauss_lobatto_rule(k)?;
        let ops = lagrange_operators(&rule)?;
        let n = rule.len();
        let xs = physical_nodes(&mesh.x, &rule);
        let ys = physical_nodes(&mesh.y, &rule);
        let (nx, ny) = (mesh.x.n_cells(), mesh.y.n_cells());
        let mut points = Vec::with_capacity(2 * nx * ny * n * n);
        for j in 0..ny {
            for i in 0..nx {
                for s in 0..n {
                    for r in 0..n {
                        points.push(xs[i * n + r]);
                        points.push(ys[j * n + s]);
                    }
                }
            }
        }
        let w = rule.weights();
        let mut ref_weights = Vec::with_capacity(n * n);
        for s in 0..n {
            for r in 0..n {
                ref_weights.push(0.25 * w[r] * w[s]);
            }
        }
        Ok(Self {
            mesh,
            rule,
            ops,
            points,
            ref_weights,
        })
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.rule.degree()
    }

    pub fn cells_x(&self) -> usize {
        self.mesh.x.n_cells()
    }

    pub fn cells_y(&self) -> usize {
        self.mesh.y.n_cells()
    }

    /// Evaluates the tensor polynomial at `(x, y)`.
    pub fn evaluate(&self, field: &NodalField, x: f64, y: f64, prefer_right: bool) -> Option<f64> {
        let i = self.mesh.x.locate(x, prefer_right)?;
        let j = self.mesh.y.locate(y, prefer_right)?;
        let bx = self.rule.basis_at(self.mesh.x.to_reference(i, x).clamp(-1.0, 1.0));
        let by = self.rule.basis_at(self.mesh.y.to_reference(j, y).clamp(-1.0, 1.0));
        let n = self.rule.len();
        let vals = field.cell(self.mesh.cell_index(i, j));
        let mut acc = 0.0;
        for s in 0..n {
            for r in 0..n {
                acc += bx[r] * by[s] * vals[s * n + r];
            }
        }
        Some(acc)
    }
}

impl CellSpace for Space2D {
    fn dimension(&self) -> usize {
        2
    }
    fn rule(&self) -> &QuadRule {
        &self.rule
    }
    fn ops(&self) -> &OperatorSet {
        &self.ops
    }
    fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }
    fn nodes_per_cell(&self) -> usize {
        self.rule.len() * self.rule.len()
    }
    fn cell_volume(&self, c: usize) -> f64 {
        let nx = self.mesh.x.n_cells();
        self.mesh.x.h(c % nx) * self.mesh.y.h(c / nx)
    }
    fn reference_weights(&self) -> &[f64] {
        &self.ref_weights
    }
    fn point(&self, dof: usize) -> &[f64] {
        &self.points[2 * dof..2 * dof + 2]
    }
    fn wrap_displacement(&self, axis: usize, d: f64) -> f64 {
        if axis == 0 {
            self.mesh.x.periodic_displacement(d)
        } else {
            self.mesh.y.periodic_displacement(d)
        }
    }
}
