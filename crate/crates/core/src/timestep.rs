//! Forward Euler and SSP Runge-Kutta stepping with the positivity limiter
//! after every Euler stage.
//!
//! A stage whose cell averages turn negative aborts the attempt; the step
//! length is halved and the whole step restarts from the last accepted
//! state. The halved length is kept for the rest of the run.

use crate::diagnostics::{discrete_entropy, DiagnosticsRecord};
use crate::error::{DgError, Result};
use crate::field::{CellSpace, NodalField};
use crate::limiter::{limit_in_place, LimiterReport};
use crate::spatial::{Scheme1D, Scheme2D, SpatialOperator};

/// Smallest admissible step, relative to the final time.
pub const TAU_MIN_FACTOR: f64 = 1e-14;

/// What the stepper needs from a discretization.
pub trait SemiDiscrete {
    /// `dρ/dt` at `(ρ, t)`.
    fn time_derivative(&self, rho: &NodalField, t: f64) -> Result<NodalField>;
    /// Positivity limiting after an Euler stage.
    fn limit(&self, rho: &mut NodalField) -> Result<LimiterReport>;
}

macro_rules! semi_discrete_for {
    ($t:ty) => {
        impl SemiDiscrete for $t {
            fn time_derivative(&self, rho: &NodalField, t: f64) -> Result<NodalField> {
                SpatialOperator::rhs(self, rho, t)
            }
            fn limit(&self, rho: &mut NodalField) -> Result<LimiterReport> {
                limit_in_place(self.space(), rho)
            }
        }
    };
}
semi_discrete_for!(Scheme1D);
semi_discrete_for!(Scheme2D);

/// Time integrator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkOrder {
    Euler,
    Ssp2,
    Ssp3,
}

impl RkOrder {
    /// Euler for `P¹`, two stages for `P²`/`P³`, three stages above.
    pub fn for_degree(k: usize) -> Self {
        match k {
            0 | 1 => Self::Euler,
            2 | 3 => Self::Ssp2,
            _ => Self::Ssp3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub order: RkOrder,
    pub limiter: bool,
    /// Step lengths below `TAU_MIN_FACTOR · t_final` abort the run.
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub rho: NodalField,
    pub t: f64,
    pub tau: f64,
    pub step_count: usize,
    pub halving_count: usize,
}

impl SolverState {
    pub fn new(rho: NodalField, tau: f64) -> Self {
        Self {
            rho,
            t: 0.0,
            tau,
            step_count: 0,
            halving_count: 0,
        }
    }
}

/// What one accepted step did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub tau: f64,
    pub halvings: usize,
    pub limited_cells: usize,
}

/// `ρ + τ F(ρ, t)`, before limiting.
pub fn euler_stage<P: SemiDiscrete + ?Sized>(op: &P, rho: &NodalField, t: f64, tau: f64) -> Result<NodalField> {
    let mut out = rho.clone();
    out.axpy(tau, &op.time_derivative(rho, t)?);
    Ok(out)
}

/// Nodewise `Σ_j weights[j] · states[j]`.
pub fn ssp_stage_combine(weights: &[f64], states: &[&NodalField]) -> NodalField {
    assert_eq!(weights.len(), states.len(), "one weight per state");
    assert!(!states.is_empty(), "at least one state");
    let mut out = states[0].clone();
    for (v, x) in out.values_mut().iter_mut().zip(states[0].values()) {
        *v = weights[0] * x;
    }
    for (w, s) in weights.iter().zip(states).skip(1) {
        out.axpy(*w, s);
    }
    out
}

fn limited_euler<P: SemiDiscrete + ?Sized>(
    op: &P,
    rho: &NodalField,
    t: f64,
    tau: f64,
    limiter: bool,
    limited: &mut usize,
) -> Result<NodalField> {
    let mut out = euler_stage(op, rho, t, tau)?;
    if limiter {
        *limited += op.limit(&mut out)?.cells_modified;
    }
    Ok(out)
}

fn attempt<P: SemiDiscrete + ?Sized>(
    op: &P,
    rho: &NodalField,
    t: f64,
    tau: f64,
    controls: &StepControls,
) -> Result<(NodalField, usize)> {
    let lim = controls.limiter;
    let mut limited = 0;
    let next = match controls.order {
        RkOrder::Euler => limited_euler(op, rho, t, tau, lim, &mut limited)?,
        RkOrder::Ssp2 => {
            let u1 = limited_euler(op, rho, t, tau, lim, &mut limited)?;
            let u2 = limited_euler(op, &u1, t + tau, tau, lim, &mut limited)?;
            ssp_stage_combine(&[0.5, 0.5], &[rho, &u2])
        }
        RkOrder::Ssp3 => {
            let u1 = limited_euler(op, rho, t, tau, lim, &mut limited)?;
            let e2 = limited_euler(op, &u1, t + tau, tau, lim, &mut limited)?;
            let u2 = ssp_stage_combine(&[0.75, 0.25], &[rho, &e2]);
            let e3 = limited_euler(op, &u2, t + 0.5 * tau, tau, lim, &mut limited)?;
            ssp_stage_combine(&[1.0 / 3.0, 2.0 / 3.0], &[rho, &e3])
        }
    };
    Ok((next, limited))
}

/// Takes one step of length `min(state.tau, t_final − t)`, halving on weak
/// positivity failures.
pub fn advance<P: SemiDiscrete + ?Sized>(op: &P, state: &mut SolverState, controls: &StepControls) -> Result<StepOutcome> {
    let tau_min = TAU_MIN_FACTOR * controls.t_final;
    let mut halvings = 0;
    loop {
        if state.tau < tau_min || !(state.tau > 0.0) {
            return Err(DgError::StepUnderflow {
                t: state.t,
                tau: state.tau,
                tau_min,
            });
        }
        let remaining = controls.t_final - state.t;
        // land exactly on t_final instead of leaving a roundoff-sized step
        let last = remaining > 0.0 && remaining <= state.tau * (1.0 + 1e-9);
        let tau = if last { remaining } else { state.tau };
        match attempt(op, &state.rho, state.t, tau, controls) {
            Ok((rho, limited)) => {
                state.rho = rho;
                state.t = if last { controls.t_final } else { state.t + tau };
                state.step_count += 1;
                return Ok(StepOutcome {
                    tau,
                    halvings,
                    limited_cells: limited,
                });
            }
            Err(DgError::WeakPositivityViolated { .. }) if controls.limiter => {
                state.tau = 0.5 * tau;
                state.halving_count += 1;
                halvings += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub t_final: f64,
    pub tau: f64,
    /// Times at which snapshots are taken; steps are shortened to land on them.
    pub snapshot_times: Vec<f64>,
    /// A diagnostics record every this many steps (0 keeps only first/last).
    pub diag_every: usize,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SolverState,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, NodalField)>,
    /// Smallest nodal value seen at any step boundary.
    pub min_rho: f64,
    /// Largest `|mass(t) − mass(0)| / |mass(0)|` at any step boundary.
    pub max_mass_drift: f64,
    /// Set when the run stopped early; the state is the last accepted one.
    pub error: Option<DgError>,
}

fn record<P: SpatialOperator + ?Sized>(
    op: &P,
    rho: &NodalField,
    t: f64,
    tau: f64,
    limited_cells: usize,
) -> Result<DiagnosticsRecord> {
    let ev = op.evaluate(rho, t)?;
    Ok(DiagnosticsRecord {
        t,
        mass: op.space().integrate(rho),
        entropy: discrete_entropy(op, rho)?,
        dissipation: ev.dissipation,
        min_rho: rho.min(),
        tau,
        limited_cells,
    })
}

/// Integrates from `rho0` to `schedule.t_final`.
///
/// With the limiter on, `rho0` is limited once first. Solver failures are
/// returned inside [`RunOutput::error`] together with everything recorded
/// up to that point.
pub fn run<P>(op: &P, rho0: NodalField, schedule: &Schedule, order: RkOrder, limiter: bool) -> Result<RunOutput>
where
    P: SpatialOperator + SemiDiscrete,
{
    if !(schedule.tau > 0.0) || !(schedule.t_final >= 0.0) {
        return Err(DgError::Config("step length must be positive and final time non-negative".into()));
    }
    op.space().check_shape(&rho0)?;
    let mut rho0 = rho0;
    if limiter {
        op.limit(&mut rho0)?;
    }
    let controls = StepControls {
        order,
        limiter,
        t_final: schedule.t_final,
    };
    let mass0 = op.space().integrate(&rho0);
    let mut state = SolverState::new(rho0, schedule.tau);
    let mut out = RunOutput {
        records: vec![record(op, &state.rho, 0.0, 0.0, 0)?],
        snapshots: vec![(0.0, state.rho.clone())],
        min_rho: state.rho.min(),
        max_mass_drift: 0.0,
        state: state.clone(),
        error: None,
    };
    let mut pending: Vec<f64> = schedule
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < schedule.t_final)
        .collect();
    pending.sort_by(|a, b| a.total_cmp(b));
    pending.reverse();

    while state.t < schedule.t_final {
        let target = StepControls {
            t_final: pending.last().copied().unwrap_or(schedule.t_final),
            ..controls
        };
        let outcome = match advance(op, &mut state, &target) {
            Ok(o) => o,
            Err(e) => {
                out.error = Some(e);
                break;
            }
        };
        out.min_rho = out.min_rho.min(state.rho.min());
        let mass = op.space().integrate(&state.rho);
        let drift = if mass0 != 0.0 {
            ((mass - mass0) / mass0).abs()
        } else {
            (mass - mass0).abs()
        };
        out.max_mass_drift = out.max_mass_drift.max(drift);

        let done = state.t >= schedule.t_final;
        let due = schedule.diag_every > 0 && state.step_count % schedule.diag_every == 0;
        if due || done {
            match record(op, &state.rho, state.t, outcome.tau, outcome.limited_cells) {
                Ok(r) => out.records.push(r),
                Err(e) => {
                    out.error = Some(e);
                    break;
                }
            }
        }
        while pending.last().map_or(false, |&ts| state.t >= ts) {
            pending.pop();
            out.snapshots.push((state.t, state.rho.clone()));
        }
    }
    if out.error.is_none() && schedule.t_final > 0.0 {
        out.snapshots.push((state.t, state.rho.clone()));
    }
    out.state = state;
    Ok(out)
}
