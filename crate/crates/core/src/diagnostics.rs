//! Discrete entropy and dissipation, error norms and decay-rate fits.

use crate::error::{DgError, Result};
use crate::field::{CellSpace, NodalField};
use crate::model::EntropyParts;
use crate::spatial::SpatialOperator;

/// One row of a run's diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub entropy: EntropyParts,
    pub dissipation: f64,
    pub min_rho: f64,
    /// Step length that led to this state (0 for the initial record).
    pub tau: f64,
    /// Cells touched by the limiter during that step.
    pub limited_cells: usize,
}

/// `Ẽ = ∫~ H(ρ) + ∫~ V ρ + ½ ∫~∫~ W(x − y) ρ(x) ρ(y)`, all by nodal
/// quadrature; the interaction uses the operator's own convolution.
pub fn discrete_entropy<P: SpatialOperator + ?Sized>(op: &P, rho: &NodalField) -> Result<EntropyParts> {
    let space = op.space();
    space.check_shape(rho)?;
    let model = op.model();
    let w = space.reference_weights();
    let npc = space.nodes_per_cell();
    let v = op.potential_values();
    let conv = op.convolve(rho)?;
    let (mut internal, mut confinement, mut interaction) = (0.0, 0.0, 0.0);
    for c in 0..space.n_cells() {
        let vol = space.cell_volume(c);
        let (mut hi, mut vi, mut wi) = (0.0, 0.0, 0.0);
        for a in 0..npc {
            let d = c * npc + a;
            let r = rho.values()[d];
            hi += w[a] * model.h(r);
            vi += w[a] * v[d] * r;
            if let Some(cv) = &conv {
                wi += w[a] * r * cv.values()[d];
            }
        }
        internal += vol * hi;
        confinement += vol * vi;
        interaction += vol * wi;
    }
    Ok(EntropyParts::new(internal, confinement, 0.5 * interaction))
}

/// `Ĩ = ∫~ f(ρ) |u|²`
pub fn discrete_dissipation<P: SpatialOperator + ?Sized>(op: &P, rho: &NodalField) -> Result<f64> {
    Ok(op.evaluate(rho, 0.0)?.dissipation)
}

/// Discrete `L¹`, `L²` and `L∞` errors over the Lobatto nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Errors against a function of position evaluated at the nodes.
pub fn error_norms<S: CellSpace + ?Sized>(
    space: &S,
    rho: &NodalField,
    exact: impl Fn(&[f64]) -> f64,
) -> Result<ErrorNorms> {
    error_norms_by_dof(space, rho, |d| exact(space.point(d)))
}

/// Errors against a reference value supplied per degree of freedom.
pub fn error_norms_by_dof<S: CellSpace + ?Sized>(
    space: &S,
    rho: &NodalField,
    reference: impl Fn(usize) -> f64,
) -> Result<ErrorNorms> {
    space.check_shape(rho)?;
    let w = space.reference_weights();
    let npc = space.nodes_per_cell();
    let mut norms = ErrorNorms::default();
    let mut sq = 0.0;
    for c in 0..space.n_cells() {
        let vol = space.cell_volume(c);
        let (mut a1, mut a2) = (0.0, 0.0);
        for a in 0..npc {
            let d = c * npc + a;
            let e = (rho.values()[d] - reference(d)).abs();
            a1 += w[a] * e;
            a2 += w[a] * e * e;
            norms.linf = norms.linf.max(e);
        }
        norms.l1 += vol * a1;
        sq += vol * a2;
    }
    norms.l2 = sq.sqrt();
    Ok(norms)
}

/// Errors against a reference field on the same discretization.
pub fn error_norms_field<S: CellSpace + ?Sized>(
    space: &S,
    rho: &NodalField,
    reference: &NodalField,
) -> Result<ErrorNorms> {
    if !rho.same_shape(reference) {
        return Err(DgError::ResampleUnsupported);
    }
    error_norms_by_dof(space, rho, |d| reference.values()[d])
}

/// Least-squares slope of `log(value)` against `t` for samples with
/// `window.0 <= t <= window.1`, stopping at the first non-positive value.
pub fn decay_rate_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let mut pts = Vec::new();
    for &(t, v) in series {
        if t < window.0 {
            continue;
        }
        if t > window.1 {
            break;
        }
        if !(v > 0.0) {
            break;
        }
        pts.push((t, v.ln()));
    }
    if pts.len() < 3 {
        return Err(DgError::InsufficientData(format!(
            "{} usable samples in [{}, {}], need at least 3",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in &pts {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    if sxx == 0.0 {
        return Err(DgError::InsufficientData("all samples share one time".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Space1D;
    use crate::mesh::uniform_mesh_1d;
    use crate::model::ModelSpec;
    use crate::spatial::{Scheme1D, SchemeOptions};

    #[test]
    fn entropy_of_constant_quadratic() {
        let space = Space1D::new(uniform_mesh_1d(-1.5, 2.5, 7).unwrap(), 3).unwrap();
        let op = Scheme1D::new(space, ModelSpec::new(|r| r, |r| r * r, |r| 2.0 * r), SchemeOptions::default()).unwrap();
        let rho = op.space().interpolate(&|_| 0.7);
        let e = discrete_entropy(&op, &rho).unwrap();
        assert!((e.total - 0.49 * 4.0).abs() < 1e-13);
        assert_eq!(e.interaction, 0.0);
        assert_eq!(e.confinement, 0.0);
    }

    #[test]
    fn norms_of_constant_error() {
        let space = Space1D::new(uniform_mesh_1d(0.0, 3.0, 5).unwrap(), 2).unwrap();
        let rho = space.interpolate(&|_| 0.25);
        let n = error_norms(&space, &rho, |_| 0.0).unwrap();
        assert!((n.l1 - 0.75).abs() < 1e-15);
        assert!((n.l2 - 0.25 * 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(n.linf, 0.25);
        let z = error_norms(&space, &rho, |_| 0.25).unwrap();
        assert_eq!(z, ErrorNorms::default());
    }

    #[test]
    fn mismatched_reference_rejected() {
        let space = Space1D::new(uniform_mesh_1d(0.0, 1.0, 4).unwrap(), 1).unwrap();
        let a = space.zeros();
        let b = NodalField::zeros(8, 2);
        assert_eq!(error_norms_field(&space, &a, &b), Err(DgError::ResampleUnsupported));
    }

    #[test]
    fn decay_fits() {
        let s: Vec<(f64, f64)> = (0..50).map(|i| (0.1 * i as f64, (-2.0 * 0.1 * i as f64).exp())).collect();
        assert!((decay_rate_fit(&s, (0.0, 10.0)).unwrap() + 2.0).abs() < 1e-10);
        let c: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0)).collect();
        assert!(decay_rate_fit(&c, (0.0, 10.0)).unwrap().abs() < 1e-14);
        let short = [(0.0, 1.0), (1.0, 0.5), (2.0, -0.1), (3.0, 0.1)];
        assert!(matches!(decay_rate_fit(&short, (0.0, 5.0)), Err(DgError::InsufficientData(_))));
    }
}
