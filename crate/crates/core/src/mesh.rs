//! Interval partitions and Cartesian tensor meshes.

use crate::error::{DgError, Result};
use crate::quadrature::QuadRule;

/// Relative tolerance used to decide whether a mesh is uniform.
const UNIFORM_RTOL: f64 = 1e-12;

/// A partition `a = x_{1/2} < x_{3/2} < ... < x_{N+1/2} = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    edges: Vec<f64>,
}

impl Mesh1D {
    /// Builds a mesh from explicit edges.
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(DgError::Config("a mesh needs at least one cell".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(DgError::Config("mesh edges must be finite".into()));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(DgError::Config("mesh edges must be strictly increasing".into()));
        }
        Ok(Self { edges })
    }

    pub fn n_cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn left(&self) -> f64 {
        self.edges[0]
    }

    pub fn right(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.right() - self.left()
    }

    /// Width `h_i` of cell `i`.
    pub fn h(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_cells()).map(|i| self.h(i)).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.n_cells())
            .map(|i| self.h(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_uniform(&self) -> bool {
        let h0 = self.length() / self.n_cells() as f64;
        (0..self.n_cells()).all(|i| (self.h(i) - h0).abs() <= UNIFORM_RTOL * h0)
    }

    /// Periodic neighbour `i + offset` modulo `N`.
    pub fn wrap(&self, i: usize, offset: isize) -> usize {
        let n = self.n_cells() as isize;
        (i as isize + offset).rem_euclid(n) as usize
    }

    /// Minimal-image displacement on the periodic domain, in `[-L/2, L/2]`.
    pub fn periodic_displacement(&self, d: f64) -> f64 {
        let l = self.length();
        d - l * (d / l).round()
    }

    /// Index of the cell containing `x`. Points on an interior edge are
    /// assigned to the cell on the side given by `prefer_right`.
    pub fn locate(&self, x: f64, prefer_right: bool) -> Option<usize> {
        if x < self.left() || x > self.right() {
            return None;
        }
        let n = self.n_cells();
        // first edge strictly greater than x
        let upper = self.edges.partition_point(|&e| e <= x);
        let mut i = upper.saturating_sub(1).min(n - 1);
        if !prefer_right && i > 0 && self.edges[i] == x {
            i -= 1;
        }
        Some(i)
    }

    /// Maps a physical point in cell `i` to the reference interval.
    pub fn to_reference(&self, i: usize, x: f64) -> f64 {
        let a = self.edges[i];
        let h = self.h(i);
        2.0 * (x - a) / h - 1.0
    }
}

/// `N` equal cells on `[a, b]`.
pub fn uniform_mesh_1d(a: f64, b: f64, n: usize) -> Result<Mesh1D> {
    if n == 0 {
        return Err(DgError::Config("cell count must be positive".into()));
    }
    if !(a < b) {
        return Err(DgError::Config(format!("empty domain [{a}, {b}]")));
    }
    let mut edges: Vec<f64> = (0..=n)
        .map(|i| a + (b - a) * (i as f64) / (n as f64))
        .collect();
    edges[0] = a;
    edges[n] = b;
    Mesh1D::from_edges(edges)
}

/// Physical Gauss-Lobatto nodes `x_i^r`, cell-major.
///
/// The first and last node of each cell are copied from the edges so the
/// interface nodes coincide with the edges bitwise.
pub fn physical_nodes(mesh: &Mesh1D, rule: &QuadRule) -> Vec<f64> {
    let n = rule.len();
    let mut out = Vec::with_capacity(mesh.n_cells() * n);
    for i in 0..mesh.n_cells() {
        let a = mesh.edges[i];
        let b = mesh.edges[i + 1];
        let h = b - a;
        for (r, z) in rule.nodes().iter().enumerate() {
            let x = if r == 0 {
                a
            } else if r == n - 1 {
                b
            } else {
                a + 0.5 * h * (z + 1.0)
            };
            out.push(x);
        }
    }
    out
}

/// Tensor product of two interval partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub x: Mesh1D,
    pub y: Mesh1D,
}

impl Mesh2D {
    pub fn new(x: Mesh1D, y: Mesh1D) -> Self {
        Self { x, y }
    }

    pub fn uniform(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Ok(Self {
            x: uniform_mesh_1d(x_range.0, x_range.1, nx)?,
            y: uniform_mesh_1d(y_range.0, y_range.1, ny)?,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.x.n_cells() * self.y.n_cells()
    }

    /// Flat cell index, x fastest.
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.x.n_cells() + i
    }
}
