//! Regressions on whole scenario runs: entropy monotonicity at small steps,
//! mass conservation in 2D and the 2D manufactured-solution table.

use dgflow_cli::config::RawConfig;
use dgflow_cli::runner::simulate;
use dgflow_cli::scenarios::{build, resolve};

fn run(text: &str) -> dgflow_cli::runner::Simulation {
    let cfg = resolve(&RawConfig::parse(text).unwrap()).unwrap();
    let sim = simulate(&build(&cfg).unwrap()).unwrap();
    assert!(sim.output.error.is_none(), "{:?}", sim.output.error);
    sim
}

fn assert_entropy_non_increasing(text: &str) {
    let sim = run(text);
    let recs = &sim.output.records;
    assert!(recs.len() > 10);
    for w in recs.windows(2) {
        let (a, b) = (w[0].entropy.total, w[1].entropy.total);
        assert!(b <= a + 1e-10 * (1.0 + a.abs()), "entropy rose from {a} to {b} at t = {}", w[1].t);
    }
}

#[test]
fn entropy_decreases_without_kernel() {
    assert_entropy_non_increasing("scenario = heat_log\nn = 20\ntau_coeff = 0.005\nt_final = 0.5\ndiag_every = 1\n");
}

#[test]
fn entropy_decreases_with_smooth_kernel() {
    assert_entropy_non_increasing(
        "scenario = kernel_smooth\nk = 2\nn = 20\ntau_coeff = 0.1\nt_final = 0.2\nlimiter = false\ndiag_every = 1\n",
    );
}

#[test]
fn entropy_decreases_with_confinement_and_limiter() {
    assert_entropy_non_increasing(
        "scenario = fp_fermion\nk = 2\nn = 40\ntau_coeff = 0.0002\nt_final = 0.02\ndiag_every = 10\n",
    );
}

#[test]
fn mass_is_conserved_in_two_dimensions() {
    let sim = run("scenario = keller_segel\ndimension = 2\nn = 8\nt_final = 0.002\n");
    assert!(sim.output.max_mass_drift <= 1e-12, "{}", sim.output.max_mass_drift);
    assert!(sim.output.min_rho >= 0.0);
}

#[test]
fn manufactured_2d_error_matches_published_table() {
    // P2 on 10×10 cells at t = 0.1: published L1/L2/L∞ 1.45276, 0.306948, 0.167537
    let sim = run("scenario = accuracy2d\ndimension = 2\nk = 2\nn = 10\nt_final = 0.1\nlimiter = false\n");
    let e = sim.final_errors.unwrap();
    for (got, want) in [(e.l1, 1.45276), (e.l2, 0.306948), (e.linf, 0.167537)] {
        assert!(got <= 1.5 * want && got >= want / 1.5, "{got} vs {want}");
    }
}
