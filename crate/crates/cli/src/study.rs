//! Convergence studies: one run per cell count, errors against the exact
//! solution or a fine-grid run, and observed orders for mesh doubling.

use std::fmt::Write as _;

use dgflow_core::prelude::*;
use std::result::Result;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::runner::simulate;
use crate::scenarios::{build, Discretization, Problem};

/// What the errors are measured against.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// The scenario's exact solution at the final time.
    Exact,
    /// A run of the same scenario with degree `k` on `n` cells.
    Fine { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub n: usize,
    pub l1: f64,
    pub order_l1: Option<f64>,
    pub l2: f64,
    pub order_l2: Option<f64>,
    pub linf: f64,
    pub order_linf: Option<f64>,
    /// Set when this row's run failed; its error columns are NaN then.
    pub failure: Option<String>,
}

/// `log2(coarse / fine)`
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).ln() / 2f64.ln()
}

/// Final state of a 1D run, kept for evaluation at other nodes.
pub struct FineSolution {
    space: Space1D,
    rho: NodalField,
}

impl FineSolution {
    /// Value at `x`, taken from the cell on the requested side of an edge.
    pub fn eval(&self, x: f64, prefer_right: bool) -> f64 {
        self.space
            .evaluate(&self.rho, x, prefer_right)
            .expect("evaluation points lie in the common domain")
    }
}

fn with_n(base: &ScenarioConfig, k: usize, n: usize) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.k = k;
    cfg.n_x = n;
    if cfg.dimension == 2 {
        cfg.n_y = n;
    }
    cfg
}

fn solve(cfg: &ScenarioConfig) -> Result<(Problem, NodalField, f64), CliError> {
    let problem = build(cfg)?;
    let sim = simulate(&problem)?;
    if let Some(e) = sim.output.error {
        return Err(CliError::Solver(e));
    }
    let t = sim.output.state.t;
    Ok((problem, sim.output.state.rho, t))
}

/// Runs the fine reference of a study.
pub fn fine_reference(base: &ScenarioConfig, k: usize, n: usize) -> Result<FineSolution, CliError> {
    if base.dimension != 1 {
        return Err(CliError::Config("fine-grid references are supported in 1D only".into()));
    }
    let (problem, rho, _) = solve(&with_n(base, k, n))?;
    match problem.disc {
        Discretization::OneD(s) => Ok(FineSolution {
            space: s.space().clone(),
            rho,
        }),
        Discretization::TwoD(_) => unreachable!("checked above"),
    }
}

/// Errors of one run against the reference.
fn row_errors(cfg: &ScenarioConfig, fine: Option<&FineSolution>) -> Result<ErrorNorms, CliError> {
    let (problem, rho, t) = solve(cfg)?;
    match (&problem.disc, fine) {
        (Discretization::OneD(s), Some(f)) => {
            let space = s.space();
            let npc = space.nodes_per_cell();
            // endpoint nodes read the reference from inside their own cell
            Ok(error_norms_by_dof(space, &rho, |d| {
                let a = d % npc;
                f.eval(space.nodes()[d], a != npc - 1)
            })?)
        }
        (_, Some(_)) => Err(CliError::Config("fine-grid references are supported in 1D only".into())),
        (disc, None) => {
            let exact = problem
                .exact
                .as_ref()
                .ok_or_else(|| CliError::Config(format!("scenario {} has no exact solution", cfg.scenario)))?;
            Ok(match disc {
                Discretization::OneD(s) => error_norms(s.space(), &rho, |x| exact(x, t))?,
                Discretization::TwoD(s) => error_norms(s.space(), &rho, |x| exact(x, t))?,
            })
        }
    }
}

/// Runs `base` at each cell count and tabulates errors and orders.
///
/// Failed rows are kept with NaN errors and the failure message.
pub fn convergence_study(base: &ScenarioConfig, ns: &[usize], reference: &Reference) -> Result<Vec<ConvergenceRow>, CliError> {
    if ns.is_empty() {
        return Err(CliError::Config("empty cell-count list".into()));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("cell counts must be strictly increasing".into()));
    }
    let fine = match reference {
        Reference::Exact => None,
        Reference::Fine { k, n } => Some(fine_reference(base, *k, *n)?),
    };
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in ns {
        let cfg = with_n(base, base.k, n);
        let (errs, failure) = match row_errors(&cfg, fine.as_ref()) {
            Ok(e) => (e, None),
            Err(e) => (
                ErrorNorms {
                    l1: f64::NAN,
                    l2: f64::NAN,
                    linf: f64::NAN,
                },
                Some(e.to_string()),
            ),
        };
        let prev = rows.last().filter(|p| n == 2 * p.n && p.failure.is_none() && failure.is_none());
        rows.push(ConvergenceRow {
            k: base.k,
            n,
            l1: errs.l1,
            order_l1: prev.map(|p| observed_order(p.l1, errs.l1)),
            l2: errs.l2,
            order_l2: prev.map(|p| observed_order(p.l2, errs.l2)),
            linf: errs.linf,
            order_linf: prev.map(|p| observed_order(p.linf, errs.linf)),
            failure,
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|o| format!("{o:.2}")).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("k,n,l1,order_l1,l2,order_l2,linf,order_linf,failure\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.6e},{},{:.6e},{},{:.6e},{},{}",
            r.k,
            r.n,
            r.l1,
            opt(r.order_l1),
            r.l2,
            opt(r.order_l2),
            r.linf,
            opt(r.order_linf),
            r.failure.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    s
}

pub fn rows_to_text(rows: &[ConvergenceRow]) -> String {
    let mut s = format!(
        "{:>2} {:>6} {:>13} {:>6} {:>13} {:>6} {:>13} {:>6}\n",
        "k", "N", "L1 error", "order", "L2 error", "order", "Linf error", "order"
    );
    for r in rows {
        let _ = write!(
            s,
            "{:>2} {:>6} {:>13.6e} {:>6} {:>13.6e} {:>6} {:>13.6e} {:>6}",
            r.k,
            r.n,
            r.l1,
            opt(r.order_l1),
            r.l2,
            opt(r.order_l2),
            r.linf,
            opt(r.order_linf)
        );
        if let Some(f) = &r.failure {
            let _ = write!(s, "  FAILED: {f}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_arithmetic() {
        // hand-computed: log(0.155489 / 0.0403867) / log 2 = 1.9448...
        assert!((observed_order(0.155489, 0.403867e-1) - 1.94484).abs() < 1e-4);
        assert_eq!(observed_order(8.0, 1.0), 3.0);
    }

    #[test]
    fn table_layout() {
        let rows = vec![
            ConvergenceRow {
                k: 1,
                n: 20,
                l1: 0.5,
                order_l1: None,
                l2: 0.25,
                order_l2: None,
                linf: 1.0,
                order_linf: None,
                failure: None,
            },
            ConvergenceRow {
                k: 1,
                n: 40,
                l1: 0.125,
                order_l1: Some(2.0),
                l2: 0.0625,
                order_l2: Some(2.0),
                linf: 0.25,
                order_linf: Some(2.0),
                failure: None,
            },
        ];
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "1,20,5.000000e-1,,2.500000e-1,,1.000000e0,,");
        assert_eq!(lines[2], "1,40,1.250000e-1,2.00,6.250000e-2,2.00,2.500000e-1,2.00,");
        let text = rows_to_text(&rows);
        assert_eq!(text.lines().count(), 3);
    }
}
