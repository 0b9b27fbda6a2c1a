//! Scaling limiter toward the cell average.
//!
//! Each cell with a negative node is contracted as `ρ̄ + θ(ρ − ρ̄)` with
//! `θ = min(ρ̄ / (ρ̄ − m), 1)`, `m` the smallest nodal value. Averages are kept
//! and every node becomes non-negative, provided the average was.

use crate::error::{DgError, Result};
use crate::field::{CellSpace, NodalField};
use crate::spatial::SpatialOperator;

/// Below this spread the contraction is skipped (`0/0` cells).
const THETA_GUARD: f64 = 1e-300;
/// Averages and values within this distance below zero are roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterReport {
    pub cells_modified: usize,
    pub min_theta: f64,
    pub min_value_before: f64,
    pub min_value_after: f64,
}

impl Default for LimiterReport {
    fn default() -> Self {
        Self {
            cells_modified: 0,
            min_theta: 1.0,
            min_value_before: f64::INFINITY,
            min_value_after: f64::INFINITY,
        }
    }
}

/// `ρ̄_c = Σ_n ŵ_n ρ_n` with the normalized tensor Lobatto weights.
pub fn cell_averages<S: CellSpace + ?Sized>(space: &S, field: &NodalField) -> Vec<f64> {
    space.cell_averages(field)
}

/// Returns the limited field and a report; see [`limit_in_place`].
pub fn apply_positivity_limiter<S: CellSpace + ?Sized>(
    space: &S,
    field: &NodalField,
) -> Result<(NodalField, LimiterReport)> {
    let mut out = field.clone();
    let report = limit_in_place(space, &mut out)?;
    Ok((out, report))
}

/// Limits `field` cell by cell.
///
/// Fails with [`DgError::WeakPositivityViolated`] on the first cell whose
/// average is below `-ROUNDOFF_FLOOR`; the field is left untouched then.
/// Averages in `[-ROUNDOFF_FLOOR, 0)` are treated as zero. After the
/// contraction, negative roundoff in limited cells is set to 0.
pub fn limit_in_place<S: CellSpace + ?Sized>(space: &S, field: &mut NodalField) -> Result<LimiterReport> {
    space.check_shape(field)?;
    let averages = space.cell_averages(field);
    if let Some((cell, &average)) = averages
        .iter()
        .enumerate()
        .find(|(_, a)| !(**a >= -ROUNDOFF_FLOOR))
    {
        return Err(DgError::WeakPositivityViolated { cell, average });
    }

    let mut report = LimiterReport {
        min_value_before: field.min(),
        ..Default::default()
    };
    for (c, &avg) in averages.iter().enumerate() {
        let vals = field.cell_mut(c);
        let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if m >= 0.0 {
            continue;
        }
        let spread = avg - m;
        let theta = if spread < THETA_GUARD {
            1.0
        } else {
            (avg.max(0.0) / spread).min(1.0)
        };
        if theta < 1.0 {
            let base = avg.max(0.0);
            for v in vals.iter_mut() {
                *v = base + theta * (*v - avg);
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            report.cells_modified += 1;
            report.min_theta = report.min_theta.min(theta);
        } else {
            for v in vals.iter_mut() {
                if *v < 0.0 && *v >= -ROUNDOFF_FLOOR {
                    *v = 0.0;
                }
            }
        }
    }
    report.min_value_after = field.min();
    Ok(report)
}

/// Weak-positivity step bound of an operator at `rho`; `+∞` if unconstrained.
pub fn max_stable_dt<P: SpatialOperator + ?Sized>(op: &P, rho: &NodalField) -> Result<f64> {
    op.max_stable_dt(rho)
}
