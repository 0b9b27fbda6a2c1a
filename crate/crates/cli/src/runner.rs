//! Runs a scenario and writes its artifacts.
//!
//! A run directory holds `manifest.txt` (the resolved configuration, which
//! parses back as a config, plus a status block in comments),
//! `diagnostics.csv`, `snapshot_NNNN.csv` files indexed by `snapshots.csv`,
//! `steady_state.csv` when the final time is reached, and
//! `relative_entropy.csv` when a reference state is known.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dgflow_core::prelude::*;
use std::result::Result;

use crate::config::{RawConfig, ScenarioConfig};
use crate::error::CliError;
use crate::scenarios::{self, Discretization, Problem, ProfileFn};

/// Overrides the directory relative output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "DGFLOW_OUTPUT_ROOT";

/// Target number of diagnostics rows when `diag_every` is left at 0.
const AUTO_DIAG_ROWS: usize = 500;

pub const DIAGNOSTICS_HEADER: &str =
    "t,mass,entropy_total,entropy_internal,entropy_confinement,entropy_interaction,dissipation,min_rho,tau,limited_cells";

/// Where a run with this configuration writes.
pub fn run_dir(cfg: &ScenarioConfig) -> PathBuf {
    if cfg.output_dir.is_absolute() {
        return cfg.output_dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    root.join(&cfg.output_dir)
}

/// Everything a run produced, in memory.
pub struct Simulation {
    pub output: RunOutput,
    /// `ξ` of the final state.
    pub xi: NodalField,
    /// `(t, Ẽ(t) − Ẽ_ref)` per diagnostics record, when a reference exists.
    pub relative_entropy: Option<Vec<(f64, f64)>>,
    /// Errors against the exact solution at the final time, if known.
    pub final_errors: Option<ErrorNorms>,
}

impl Simulation {
    pub fn reached_final_time(&self, cfg: &ScenarioConfig) -> bool {
        self.output.error.is_none() && self.output.state.t >= cfg.t_final
    }
}

fn steps_estimate(cfg: &ScenarioConfig) -> usize {
    (cfg.t_final / cfg.tau()).ceil() as usize
}

fn schedule(cfg: &ScenarioConfig) -> Schedule {
    let diag_every = if cfg.diag_every > 0 {
        cfg.diag_every
    } else {
        (steps_estimate(cfg) / AUTO_DIAG_ROWS).max(1)
    };
    Schedule {
        t_final: cfg.t_final,
        tau: cfg.tau(),
        snapshot_times: cfg.snapshot_times.clone(),
        diag_every,
    }
}

fn simulate_with<P>(
    op: &P,
    cfg: &ScenarioConfig,
    rho0: NodalField,
    exact: Option<&scenarios::ExactFn>,
    reference: Option<NodalField>,
) -> Result<Simulation, CliError>
where
    P: SpatialOperator + SemiDiscrete,
{
    let order = RkOrder::for_degree(cfg.k);
    let output = run(op, rho0, &schedule(cfg), order, cfg.limiter)?;
    let xi = op.compute_xi(&output.state.rho)?;
    let relative_entropy = match reference {
        Some(r) => {
            let e_ref = discrete_entropy(op, &r)?.total;
            Some(output.records.iter().map(|rec| (rec.t, rec.entropy.total - e_ref)).collect())
        }
        None => None,
    };
    let final_errors = match exact {
        Some(e) => {
            let t = output.state.t;
            Some(error_norms(op.space(), &output.state.rho, |x| e(x, t))?)
        }
        None => None,
    };
    Ok(Simulation {
        output,
        xi,
        relative_entropy,
        final_errors,
    })
}

/// Steady state of an earlier run on the same discretization.
pub fn load_reference(dir: &Path, space: &dyn Fn(usize) -> Vec<f64>, n_dofs: usize, npc: usize) -> Result<NodalField, CliError> {
    let path = dir.join("steady_state.csv");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read reference {}: {e}", path.display())))?;
    let table = read_csv(&text)?;
    if table.rows.len() != n_dofs {
        return Err(CliError::Solver(DgError::ResampleUnsupported));
    }
    let rho_col = table.column("rho")?;
    let coord_cols: Vec<usize> = ["x", "y"].iter().filter_map(|c| table.column(c).ok()).collect();
    let mut values = Vec::with_capacity(n_dofs);
    for (d, row) in table.rows.iter().enumerate() {
        let p = space(d);
        if p.len() != coord_cols.len() {
            return Err(CliError::Solver(DgError::ResampleUnsupported));
        }
        for (x, c) in p.iter().zip(&coord_cols) {
            if (row[*c] - x).abs() > 1e-12 * (1.0 + x.abs()) {
                return Err(CliError::Solver(DgError::ResampleUnsupported));
            }
        }
        values.push(row[rho_col]);
    }
    Ok(NodalField::new(values, npc)?)
}

fn reference_state<S: CellSpace>(
    cfg: &ScenarioConfig,
    space: &S,
    steady: Option<&ProfileFn>,
) -> Result<Option<NodalField>, CliError> {
    if let Some(dir) = &cfg.reference_run {
        let dir = if dir.is_absolute() { dir.clone() } else { run_dir_for(dir) };
        let field = load_reference(&dir, &|d| space.point(d).to_vec(), space.n_dofs(), space.nodes_per_cell())?;
        return Ok(Some(field));
    }
    Ok(steady.map(|f| space.interpolate(&|x| f(x))))
}

fn run_dir_for(rel: &Path) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    root.join(rel)
}

/// Runs a built problem without touching the disk.
pub fn simulate(problem: &Problem) -> Result<Simulation, CliError> {
    let cfg = &problem.config;
    match &problem.disc {
        Discretization::OneD(s) => {
            let r = reference_state(cfg, s.space(), problem.steady.as_ref())?;
            simulate_with(s, cfg, problem.rho0.clone(), problem.exact.as_ref(), r)
        }
        Discretization::TwoD(s) => {
            let r = reference_state(cfg, s.space(), problem.steady.as_ref())?;
            simulate_with(s, cfg, problem.rho0.clone(), problem.exact.as_ref(), r)
        }
    }
}

/// What [`run_scenario`] reports back.
pub struct RunSummary {
    pub dir: PathBuf,
    pub simulation: Simulation,
}

fn e17(v: f64) -> String {
    format!("{v:.16e}")
}

fn coords_of(problem: &Problem) -> (Vec<Vec<f64>>, &'static str) {
    match &problem.disc {
        Discretization::OneD(s) => ((0..s.space().n_dofs()).map(|d| s.space().point(d).to_vec()).collect(), "x"),
        Discretization::TwoD(s) => ((0..s.space().n_dofs()).map(|d| s.space().point(d).to_vec()).collect(), "x,y"),
    }
}

fn nodal_csv(coords: &[Vec<f64>], header: &str, columns: &[&[f64]]) -> String {
    let mut s = String::with_capacity(coords.len() * 48);
    s.push_str(header);
    s.push('\n');
    for (d, p) in coords.iter().enumerate() {
        let mut parts: Vec<String> = p.iter().map(|x| e17(*x)).collect();
        parts.extend(columns.iter().map(|c| e17(c[d])));
        s.push_str(&parts.join(","));
        s.push('\n');
    }
    s
}

fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            e17(r.t),
            e17(r.mass),
            e17(r.entropy.total),
            e17(r.entropy.internal),
            e17(r.entropy.confinement),
            e17(r.entropy.interaction),
            e17(r.dissipation),
            e17(r.min_rho),
            e17(r.tau),
            r.limited_cells
        );
    }
    s
}

fn status_block(sim: Option<&Simulation>, err: Option<&CliError>) -> String {
    let mut s = String::from("\n# status\n");
    if let Some(e) = err {
        let _ = writeln!(s, "# result = aborted: {e}");
    }
    if let Some(sim) = sim {
        let o = &sim.output;
        match &o.error {
            Some(e) => {
                let _ = writeln!(s, "# result = aborted: {e}");
            }
            None => s.push_str("# result = completed\n"),
        }
        let _ = writeln!(s, "# t_reached = {}", e17(o.state.t));
        let _ = writeln!(s, "# steps = {}", o.state.step_count);
        let _ = writeln!(s, "# halvings = {}", o.state.halving_count);
        let _ = writeln!(s, "# tau_final = {}", e17(o.state.tau));
        let _ = writeln!(s, "# min_rho = {}", e17(o.min_rho));
        let _ = writeln!(s, "# max_mass_drift = {}", e17(o.max_mass_drift));
        if let Some(n) = &sim.final_errors {
            let _ = writeln!(s, "# error_l1 = {}", e17(n.l1));
            let _ = writeln!(s, "# error_l2 = {}", e17(n.l2));
            let _ = writeln!(s, "# error_linf = {}", e17(n.linf));
        }
    }
    s
}

/// Resolves, builds, runs and writes one configuration.
///
/// Solver aborts still leave the manifest and everything recorded so far on
/// disk; the error is returned afterwards.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary, CliError> {
    let dir = run_dir(cfg);
    fs::create_dir_all(&dir)?;
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, cfg.to_text())?;

    let outcome = scenarios::build(cfg).and_then(|p| simulate(&p).map(|s| (p, s)));
    let (problem, sim) = match outcome {
        Ok(v) => v,
        Err(e) => {
            fs::write(&manifest, cfg.to_text() + &status_block(None, Some(&e)))?;
            return Err(e);
        }
    };
    write_artifacts(&dir, &problem, &sim)?;
    fs::write(&manifest, cfg.to_text() + &status_block(Some(&sim), None))?;
    if let Some(e) = &sim.output.error {
        return Err(CliError::Solver(e.clone()));
    }
    Ok(RunSummary { dir, simulation: sim })
}

fn write_artifacts(dir: &Path, problem: &Problem, sim: &Simulation) -> Result<(), CliError> {
    let cfg = &problem.config;
    let out = &sim.output;
    fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&out.records))?;

    let (coords, coord_header) = coords_of(problem);
    let mut index = String::from("index,t,file\n");
    for (i, (t, rho)) in out.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:04}.csv");
        fs::write(dir.join(&name), nodal_csv(&coords, &format!("{coord_header},rho"), &[rho.values()]))?;
        let _ = writeln!(index, "{i},{},{name}", e17(*t));
    }
    fs::write(dir.join("snapshots.csv"), index)?;

    if sim.reached_final_time(cfg) {
        fs::write(
            dir.join("steady_state.csv"),
            nodal_csv(
                &coords,
                &format!("{coord_header},rho,xi"),
                &[out.state.rho.values(), sim.xi.values()],
            ),
        )?;
    }
    if let Some(rel) = &sim.relative_entropy {
        let mut s = String::from("t,relative_entropy\n");
        for (t, e) in rel {
            let _ = writeln!(s, "{},{}", e17(*t), e17(*e));
        }
        fs::write(dir.join("relative_entropy.csv"), s)?;
    }
    Ok(())
}

/// A parsed numeric CSV with a header row.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("missing column {name:?}")))
    }
}

pub fn read_csv(text: &str) -> Result<CsvTable, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config("empty csv".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("csv row {}: not numeric", i + 2)))?;
        if row.len() != header.len() {
            return Err(CliError::Config(format!("csv row {}: {} fields, expected {}", i + 2, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Reads the resolved configuration back from a run directory.
pub fn load_manifest(dir: &Path) -> Result<ScenarioConfig, CliError> {
    let raw = RawConfig::from_file(&dir.join("manifest.txt"))?;
    scenarios::resolve(&raw)
}
