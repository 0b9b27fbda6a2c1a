use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgflow_cli::config::RawConfig;
use dgflow_cli::error::CliError;
use dgflow_cli::runner::{load_manifest, read_csv, run_dir, run_scenario};
use dgflow_cli::scenarios::{registry, resolve};
use dgflow_cli::steady::steady_state_check;
use dgflow_cli::study::{convergence_study, rows_to_csv, rows_to_text, Reference};
use dgflow_core::prelude::*;
use std::result::Result;

#[derive(Parser)]
#[command(name = "dgflow", version, about = "Nodal DG solver for entropy-dissipating gradient flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. --set k=3 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Convergence study over a list of cell counts.
    Study {
        config: PathBuf,
        /// Comma-separated cell counts, e.g. 20,40,80.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// `exact`, or `fine:K,N` for a fine-grid reference run.
        #[arg(long, default_value = "exact")]
        reference: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Steady-state report for a finished 1D run directory.
    CheckSteady { run_dir: PathBuf },
    /// List the scenario catalog.
    ListScenarios,
}

fn load(config: &PathBuf, overrides: &[String]) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::from_file(config)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {o:?} is not KEY=VALUE")))?;
        raw.set(k.trim(), v.trim())?;
    }
    Ok(raw)
}

fn parse_reference(s: &str) -> Result<Reference, CliError> {
    if s == "exact" {
        return Ok(Reference::Exact);
    }
    let bad = || CliError::Config(format!("reference must be exact or fine:K,N, got {s:?}"));
    let spec = s.strip_prefix("fine:").ok_or_else(bad)?;
    let (k, n) = spec.split_once(',').ok_or_else(bad)?;
    Ok(Reference::Fine {
        k: k.trim().parse().map_err(|_| bad())?,
        n: n.trim().parse().map_err(|_| bad())?,
    })
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, overrides } => {
            let cfg = resolve(&load(&config, &overrides)?)?;
            let summary = run_scenario(&cfg)?;
            let o = &summary.simulation.output;
            println!("wrote {}", summary.dir.display());
            println!(
                "t = {}  steps = {}  halvings = {}  min rho = {:.3e}  mass drift = {:.3e}",
                o.state.t, o.state.step_count, o.state.halving_count, o.min_rho, o.max_mass_drift
            );
            if let Some(e) = &summary.simulation.final_errors {
                println!("errors: L1 = {:.6e}  L2 = {:.6e}  Linf = {:.6e}", e.l1, e.l2, e.linf);
            }
        }
        Command::Study {
            config,
            n,
            reference,
            overrides,
        } => {
            let cfg = resolve(&load(&config, &overrides)?)?;
            let rows = convergence_study(&cfg, &n, &parse_reference(&reference)?)?;
            let dir = run_dir(&cfg);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("convergence.csv"), rows_to_csv(&rows))?;
            std::fs::write(dir.join("convergence.txt"), rows_to_text(&rows))?;
            print!("{}", rows_to_text(&rows));
            if let Some(r) = rows.iter().find(|r| r.failure.is_some()) {
                return Err(CliError::Config(format!(
                    "row N={} failed: {}",
                    r.n,
                    r.failure.as_deref().unwrap_or("")
                )));
            }
        }
        Command::CheckSteady { run_dir } => {
            let cfg = load_manifest(&run_dir)?;
            if cfg.dimension != 1 {
                return Err(CliError::Config("check-steady supports 1D runs".into()));
            }
            let space = Space1D::new(uniform_mesh_1d(cfg.x_min, cfg.x_max, cfg.n_x)?, cfg.k)?;
            let path = run_dir.join("steady_state.csv");
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let table = read_csv(&text)?;
            let (rc, xc) = (table.column("rho")?, table.column("xi")?);
            let npc = space.nodes_per_cell();
            let rho = NodalField::new(table.rows.iter().map(|r| r[rc]).collect(), npc)?;
            let xi = NodalField::new(table.rows.iter().map(|r| r[xc]).collect(), npc)?;
            let rep = steady_state_check(&space, &rho, &xi)?;
            println!("max |rho d_x xi| = {:.6e}", rep.max_flux);
            println!("support components: {}", rep.components.len());
            for c in &rep.components {
                println!(
                    "  [{:.6}, {:.6}]  xi in [{:.12}, {:.12}]  spread {:.3e}",
                    c.x_start,
                    c.x_end,
                    c.xi_min,
                    c.xi_max,
                    c.spread()
                );
            }
            if rep.disconnected() {
                println!("disconnected support");
            }
        }
        Command::ListScenarios => {
            for s in registry() {
                let tag = if s.long { " [long]" } else { "" };
                println!("{:<20} {}{}", s.name, s.summary, tag);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dgflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
