//! Gauss-Lobatto quadrature on `[-1, 1]` and the collocation operators
//! `(M, D, B)` built on its nodes.
//!
//! The nodes are the endpoints together with the roots of `P'_k`, so the
//! first and last nodes coincide with the cell interfaces. With `k + 1`
//! nodes the rule is exact for polynomials of degree `2k - 1`, which is
//! exactly what the summation-by-parts identity `MD + (MD)^T = B` needs.

use crate::error::{DgError, Result};

/// Smallest and largest supported polynomial degree.
pub const MIN_DEGREE: usize = 1;
pub const MAX_DEGREE: usize = 8;

/// A `(k+1)`-point Gauss-Lobatto rule on the reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes, `k + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Values of all Lagrange basis polynomials at a reference point.
    pub fn basis_at(&self, zeta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.basis_into(zeta, &mut out);
        out
    }

    pub fn basis_into(&self, zeta: f64, out: &mut [f64]) {
        let nodes = &self.nodes;
        for (s, value) in out.iter_mut().enumerate() {
            let mut p = 1.0;
            for (j, &zj) in nodes.iter().enumerate() {
                if j != s {
                    p *= (zeta - zj) / (nodes[s] - zj);
                }
            }
            *value = p;
        }
    }

    /// Evaluates the interpolant of nodal `values` at a reference point.
    pub fn interpolate(&self, values: &[f64], zeta: f64) -> f64 {
        let mut basis = vec![0.0; self.len()];
        self.basis_into(zeta, &mut basis);
        basis.iter().zip(values).map(|(b, v)| b * v).sum()
    }
}

/// Legendre polynomial `P_k(x)` and its predecessor `P_{k-1}(x)`.
fn legendre_pair(k: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    if k == 0 {
        return (1.0, 0.0);
    }
    for n in 1..k {
        let n = n as f64;
        let next = ((2.0 * n + 1.0) * x * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Builds the `(k+1)`-point Gauss-Lobatto rule.
///
/// Interior nodes are the roots of `P'_k`, found by Newton iteration from
/// Chebyshev-Gauss-Lobatto guesses and then symmetrized about the origin.
pub fn gauss_lobatto_rule(k: usize) -> Result<QuadRule> {
    if !(MIN_DEGREE..=MAX_DEGREE).contains(&k) {
        return Err(DgError::Config(format!(
            "polynomial degree {k} outside supported range {MIN_DEGREE}..={MAX_DEGREE}"
        )));
    }
    let n = k + 1;
    let kf = k as f64;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[k] = 1.0;

    for (j, node) in nodes.iter_mut().enumerate().take(k).skip(1) {
        let mut x = -(std::f64::consts::PI * j as f64 / kf).cos();
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(k, x);
            let one_minus = 1.0 - x * x;
            let dp = kf * (p_prev - x * p) / one_minus;
            let d2p = (2.0 * x * dp - kf * (kf + 1.0) * p) / one_minus;
            let step = dp / d2p;
            x -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        *node = x;
    }

    // ζ_r = -ζ_{k+2-r}
    for r in 1..n / 2 {
        let avg = 0.5 * (nodes[n - 1 - r] - nodes[r]);
        nodes[r] = -avg;
        nodes[n - 1 - r] = avg;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre_pair(k, x);
            2.0 / (kf * (kf + 1.0) * p * p)
        })
        .collect();

    Ok(QuadRule {
        degree: k,
        nodes,
        weights,
    })
}

/// The collocation operators on a Gauss-Lobatto rule: the lumped mass
/// matrix `M = diag(w)`, the differentiation matrix `D_rs = L_s'(ζ_r)` and
/// the boundary matrix `B = diag(-1, 0, ..., 0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    n: usize,
    mass: Vec<f64>,
    diff: Vec<f64>,
    boundary: Vec<f64>,
}

impl OperatorSet {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Diagonal of `M`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `D` in row-major order.
    pub fn diff(&self) -> &[f64] {
        &self.diff
    }

    pub fn d(&self, r: usize, s: usize) -> f64 {
        self.diff[r * self.n + s]
    }

    /// Diagonal of `B`.
    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    /// Applies the per-cell weak divergence
    /// `out = (2/h) M^{-1} (-D^T M v + B v*)` with `v* = [left, 0, .., 0, right]`.
    ///
    /// Both the velocity equation and the density update have this form.
    /// It is evaluated as `(2/h) (D v + M^{-1} B (v* - v))`, equal by the
    /// summation-by-parts identity, with `D v` summed as `Σ_s D_rs (v_s - v_r)`
    /// so that constant data give exactly zero.
    pub fn weak_divergence(&self, h: f64, values: &[f64], left: f64, right: f64, out: &mut [f64]) {
        self.weak_divergence_strided(h, values, 0, 1, left, right, out);
    }

    /// Same as [`weak_divergence`](Self::weak_divergence) for a strided line of values.
    pub(crate) fn weak_divergence_strided(
        &self,
        h: f64,
        values: &[f64],
        offset: usize,
        stride: usize,
        left: f64,
        right: f64,
        out: &mut [f64],
    ) {
        let n = self.n;
        let scale = 2.0 / h;
        for r in 0..n {
            let row = &self.diff[r * n..(r + 1) * n];
            let vr = values[offset + r * stride];
            let mut acc = 0.0;
            for q in 0..n {
                acc += row[q] * (values[offset + q * stride] - vr);
            }
            out[offset + r * stride] = scale * acc;
        }
        let first = values[offset];
        let last = values[offset + (n - 1) * stride];
        out[offset] -= scale * (left - first) / self.mass[0];
        out[offset + (n - 1) * stride] += scale * (right - last) / self.mass[n - 1];
    }

    /// Nodal derivative `(2/h) D v` of the interpolant on a cell of width `h`.
    pub fn derivative(&self, h: f64, values: &[f64], out: &mut [f64]) {
        let n = self.n;
        for r in 0..n {
            let mut acc = 0.0;
            for s in 0..n {
                acc += self.diff[r * n + s] * values[s];
            }
            out[r] = 2.0 * acc / h;
        }
    }
}

/// Builds `(M, D, B)` from the Lagrange basis on the rule's nodes.
pub fn lagrange_operators(rule: &QuadRule) -> Result<OperatorSet> {
    let nodes = rule.nodes();
    let n = nodes.len();
    if n < 2 {
        return Err(DgError::Config("a rule needs at least two nodes".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            if nodes[i] == nodes[j] {
                return Err(DgError::Config(format!(
                    "duplicate quadrature nodes at positions {i} and {j}"
                )));
            }
        }
    }

    // barycentric weights
    let bary: Vec<f64> = (0..n)
        .map(|s| {
            let p: f64 = (0..n)
                .filter(|&j| j != s)
                .map(|j| nodes[s] - nodes[j])
                .product();
            1.0 / p
        })
        .collect();

    let mut diff = vec![0.0; n * n];
    for r in 0..n {
        let mut row_sum = 0.0;
        for s in 0..n {
            if r != s {
                let d = (bary[s] / bary[r]) / (nodes[r] - nodes[s]);
                diff[r * n + s] = d;
                row_sum += d;
            }
        }
        diff[r * n + r] = -row_sum;
    }

    let mass = rule.weights().to_vec();
    let mut boundary = vec![0.0; n];
    boundary[0] = -1.0;
    boundary[n - 1] = 1.0;

    Ok(OperatorSet {
        n,
        mass,
        diff,
        boundary,
    })
}
