//! The scenario catalog: each entry maps a name to a model, initial data and
//! desk-scale defaults.
//!
//! Defaults are small enough for every entry to finish in seconds. Entries
//! marked `long` need much longer runs (finer steps, later final times or
//! finer grids) to show their characteristic behaviour.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use dgflow_core::model::RHO_FLOOR;
use dgflow_core::prelude::*;
use std::result::Result;

use crate::config::{BackendChoice, ConvolutionChoice, RawConfig, ScenarioConfig};
use crate::error::CliError;

/// Exact solution `ρ(x, t)`.
pub type ExactFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Time-independent profile, e.g. an analytic steady state.
pub type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scenario defaults; unspecified config keys take these values.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub dimension: usize,
    pub k: usize,
    pub n: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub tau_coeff: f64,
    pub tau_fixed: Option<f64>,
    pub t_final: f64,
    pub params: Vec<(&'static str, f64)>,
}

impl Defaults {
    fn one_d(k: usize, n: usize, x: (f64, f64), tau_coeff: f64, t_final: f64) -> Self {
        Self {
            dimension: 1,
            k,
            n,
            x,
            y: (0.0, 1.0),
            tau_coeff,
            tau_fixed: None,
            t_final,
            params: Vec::new(),
        }
    }

    fn two_d(k: usize, n: usize, x: (f64, f64), tau_coeff: f64, t_final: f64) -> Self {
        Self {
            dimension: 2,
            y: x,
            ..Self::one_d(k, n, x, tau_coeff, t_final)
        }
    }

    fn with_params(mut self, params: &[(&'static str, f64)]) -> Self {
        self.params = params.to_vec();
        self
    }
}

/// What a scenario contributes besides the mesh.
pub struct Setup {
    pub model: ModelSpec,
    pub rho0: ProfileFn,
    /// Initial data with jumps at cell edges: sample each cell from inside.
    pub discontinuous: bool,
    /// Rescale the interpolated initial data to this discrete mass.
    pub normalize_mass: Option<f64>,
    pub exact: Option<ExactFn>,
    pub steady: Option<ProfileFn>,
}

impl Setup {
    fn new(model: ModelSpec, rho0: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            model,
            rho0: Arc::new(rho0),
            discontinuous: false,
            normalize_mass: None,
            exact: None,
            steady: None,
        }
    }

    fn exact(mut self, e: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(e));
        self
    }

    fn steady(mut self, s: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.steady = Some(Arc::new(s));
        self
    }
}

/// A catalog entry.
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub long: bool,
    defaults: fn(&BTreeMap<String, f64>) -> Defaults,
    setup: fn(&ScenarioConfig) -> Result<Setup, CliError>,
}

impl Scenario {
    pub fn defaults(&self, params: &BTreeMap<String, f64>) -> Defaults {
        (self.defaults)(params)
    }

    pub fn setup(&self, cfg: &ScenarioConfig) -> Result<Setup, CliError> {
        (self.setup)(cfg)
    }
}

fn param(params: &BTreeMap<String, f64>, name: &str, default: f64) -> f64 {
    params.get(name).copied().unwrap_or(default)
}

fn log_entropy() -> ModelSpec {
    ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln())
}

fn hat(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

fn advection(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let model = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0)
        .with_potential(|x| x[0])
        .with_xi_override(XiBoundaryOverride {
            left: Some(cfg.x_min),
            right: Some(cfg.x_max),
        })
        .with_probe_range(0.0, 2.0);
    Ok(Setup::new(model, |x| 1.0 + x[0].sin()).exact(|x, t| 1.0 + (x[0] + t).sin()))
}

fn heat_log(_: &ScenarioConfig) -> Result<Setup, CliError> {
    let model = log_entropy().with_probe_range(0.0, 3.0);
    Ok(Setup::new(model, |x| 2.0 + x[0].sin()).exact(|x, t| 2.0 + (-t).exp() * x[0].sin()))
}

fn heat_sqrt(_: &ScenarioConfig) -> Result<Setup, CliError> {
    let model = ModelSpec::new(
        |r: f64| r.max(0.0).sqrt(),
        |r: f64| 4.0 / 3.0 * r.max(0.0).powf(1.5),
        |r: f64| 2.0 * r.sqrt(),
    )
    .with_flux_split(FluxSplit::MirrorF)
    .with_probe_range(0.0, 3.0);
    Ok(Setup::new(model, |x| 2.0 + x[0].sin()).exact(|x, t| 2.0 + (-t).exp() * x[0].sin()))
}

fn peaked(x: f64) -> f64 {
    ((-x * x / 0.1).exp() / (0.1 * PI).sqrt()).powi(4)
}

fn kernel_smooth(_: &ScenarioConfig) -> Result<Setup, CliError> {
    let w = Kernel::smooth(|d| 0.2 * (-d[0] * d[0] / 0.1).exp() / (0.1 * PI).sqrt());
    let model = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0).with_kernel(w).with_probe_range(0.0, 10.0);
    Ok(Setup::new(model, |x| peaked(x[0])))
}

fn kernel_hat(_: &ScenarioConfig) -> Result<Setup, CliError> {
    let w = Kernel::nonsmooth(|d| (0.2 - d[0].abs()).max(0.0), vec![-0.2, 0.0, 0.2]);
    let model = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0).with_kernel(w).with_probe_range(0.0, 10.0);
    Ok(Setup::new(model, |x| peaked(x[0])))
}

/// `max((3/8)^{2/3} − x²/4, 0)`, the unit-mass steady state of `porous_m2`.
pub fn porous_steady(x: f64) -> f64 {
    ((3.0f64 / 8.0).powf(2.0 / 3.0) - 0.25 * x * x).max(0.0)
}

fn porous_m2(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let shift = cfg.param("shift")?;
    let model = ModelSpec::new(|r| r, |r| r * r, |r| 2.0 * r)
        .with_potential(|x| 0.5 * x[0] * x[0])
        .with_probe_range(0.0, 2.0);
    Ok(Setup::new(model, move |x| hat(x[0] - shift)).steady(|x| porous_steady(x[0])))
}

fn fokker_planck(kappa: f64) -> Result<Setup, CliError> {
    let one_plus = move |r: f64| (1.0 + kappa * r).max(RHO_FLOOR);
    let model = ModelSpec::new(
        move |r: f64| r.max(0.0) * (1.0 + kappa * r).max(0.0),
        move |r: f64| xlogx(r) - kappa * xlogx(one_plus(r)),
        move |r: f64| r.ln() - one_plus(r).ln(),
    )
    .with_flux_split(FluxSplit::Linear(2.0))
    .with_potential(|x| 0.5 * x[0] * x[0])
    .with_probe_range(0.0, if kappa < 0.0 { 0.999 } else { 1.0 });
    let rho0 = |x: &[f64]| (-(x[0] - 1.0).powi(2) / 0.4).exp() / (0.4 * PI);
    Ok(Setup::new(model, rho0))
}

/// `∫₀^ρ ln(1 + s³) ds` in closed form.
fn log_one_plus_cube_integral(rho: f64) -> f64 {
    let r3 = 3f64.sqrt();
    let inv = |s: f64| (1.0 + s).ln() / 3.0 - (s * s - s + 1.0).ln() / 6.0 + ((2.0 * s - 1.0) / r3).atan() / r3;
    rho * (1.0 + rho.powi(3)).ln() - 3.0 * rho + 3.0 * (inv(rho) - inv(0.0))
}

fn fp_generalized(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let mass = cfg.param("mass")?;
    let model = ModelSpec::new(
        |r: f64| r.max(0.0) * (1.0 + r.max(0.0).powi(3)),
        |r: f64| xlogx(r) - r - log_one_plus_cube_integral(r.max(0.0)) / 3.0,
        |r: f64| r.ln() - (1.0 + r.powi(3)).ln() / 3.0,
    )
    .with_flux_split(FluxSplit::MirrorF)
    .with_potential(|x| 0.5 * x[0] * x[0])
    .with_probe_range(0.0, 10.0);
    let c = mass / (2.0 * (2.0 * PI).sqrt());
    let rho0 = move |x: &[f64]| c * ((-(x[0] - 2.0).powi(2) / 2.0).exp() + (-(x[0] + 2.0).powi(2) / 2.0).exp());
    Ok(Setup::new(model, rho0))
}

fn aggregation_smooth(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let m = cfg.param("m")?;
    let nu = cfg.param("nu")?;
    if !(m > 1.0) || !(nu > 0.0) {
        return Err(CliError::Config("aggregation_smooth needs m > 1 and nu > 0".into()));
    }
    let w = Kernel::smooth(|d| -(-d[0] * d[0] / 2.0).exp() / (2.0 * PI).sqrt());
    let model = ModelSpec::new(
        |r| r,
        move |r: f64| nu * r.max(0.0).powf(m) / m,
        move |r: f64| nu * r.max(0.0).powf(m - 1.0),
    )
    .with_kernel(w)
    .with_probe_range(0.0, 1.0)
    .with_probe_extent(6.0);
    let setup = if cfg.param("staircase")? != 0.0 {
        Setup::new(model, |x| {
            let x = x[0];
            0.15 * hat(x - 4.75) + 0.25 * hat(x - 2.0) + 0.2 * hat(x + 0.425) + 0.4 * hat(x + 3.75)
        })
    } else {
        let c = 1.0 / (2.0 * (2.0 * PI).sqrt());
        Setup::new(model, move |x| {
            c * ((-(x[0] - 2.5).powi(2) / 2.0).exp() + (-(x[0] + 2.5).powi(2) / 2.0).exp())
        })
    };
    Ok(setup)
}

fn aggregation_local(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let a = cfg.param("a")?;
    let w = Kernel::nonsmooth(|d| -(1.0 - d[0].abs()).max(0.0), vec![-1.0, 0.0, 1.0]);
    let model = ModelSpec::new(|r| r, |r: f64| r.powi(3) / 12.0, |r: f64| 0.25 * r * r)
        .with_kernel(w)
        .with_probe_range(0.0, 2.0)
        .with_probe_extent(4.0);
    let mut s = Setup::new(model, move |x| if x[0].abs() <= a { 1.0 } else { 0.0 });
    s.discontinuous = true;
    Ok(s)
}

fn accuracy2d(_: &ScenarioConfig) -> Result<Setup, CliError> {
    let source = |p: &[f64], t: f64| {
        let s = p[0] + p[1];
        4.0 * s.sin() + (s + t).cos() + (2.0 + 8.0 * PI * PI) * (s + t).sin()
            - 2.0 * (2.0 * s + t).cos()
            - 4.0 * PI * PI * (2.0 * (s + t)).cos()
    };
    let model = log_entropy()
        .with_potential(|p| (p[0] + p[1]).sin())
        .with_kernel(Kernel::smooth(|d| (d[0] + d[1]).cos()))
        .with_source(source)
        .with_probe_range(0.0, 4.0)
        .with_probe_extent(PI);
    Ok(Setup::new(model, |p| 2.0 + (p[0] + p[1]).sin()).exact(|p, t| 2.0 + (p[0] + p[1] + t).sin()))
}

/// Floor on `1 − |x|²/r²` so the spring potential stays finite outside the ball.
pub const FENE_FLOOR: f64 = 1e-2;

fn dumbbell_fene(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let r = cfg.param("r")?;
    let (k11, k12, k21, k22) = (cfg.param("k11")?, cfg.param("k12")?, cfg.param("k21")?, cfg.param("k22")?);
    let s2 = cfg.param("sigma2")?;
    let potential = move |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        let u = -0.5 * r * r * (1.0 - (x * x + y * y) / (r * r)).max(FENE_FLOOR).ln();
        let xkx = x * (k11 * x + k12 * y) + y * (k21 * x + k22 * y);
        u - 0.5 * xkx
    };
    let model = log_entropy().with_potential(potential).with_probe_range(0.0, 10.0);
    let rho0 = move |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        let bump = |cx: f64, cy: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s2)).exp();
        (24.0 - (x * x + y * y)).max(0.0) * (bump(2.0, 2.0) + bump(-2.0, -2.0) + bump(1.0, 1.0) + bump(-1.0, -1.0))
    };
    let mut s = Setup::new(model, rho0);
    s.normalize_mass = Some(1.0);
    Ok(s)
}

fn keller_segel(cfg: &ScenarioConfig) -> Result<Setup, CliError> {
    let sign = if cfg.param("supercritical")? != 0.0 { 1.0 } else { -1.0 };
    let level = 2.0 * (PI + sign * 0.2);
    let w = Kernel::nonsmooth(
        |d| (d[0] * d[0] + d[1] * d[1]).max(RHO_FLOOR).ln() / (4.0 * PI),
        vec![0.0],
    );
    let model = log_entropy()
        .with_kernel(w)
        .with_probe_range(0.0, 20.0)
        .with_probe_extent(cfg.x_max - cfg.x_min);
    let mut s = Setup::new(model, move |p| {
        if p[0].abs() <= 1.0 && p[1].abs() <= 1.0 {
            level
        } else {
            0.0
        }
    });
    s.discontinuous = true;
    Ok(s)
}

fn supercritical(p: &BTreeMap<String, f64>) -> bool {
    param(p, "supercritical", 0.0) != 0.0
}

/// The full catalog.
pub fn registry() -> &'static [Scenario] {
    const PI_RANGE: (f64, f64) = (-PI, PI);
    static REGISTRY: &[Scenario] = &[
        Scenario {
            name: "advection",
            summary: "linear transport with manual xi overrides, exact solution 1+sin(x+t)",
            long: false,
            defaults: |_| Defaults::one_d(2, 40, PI_RANGE, 0.02, 2.0),
            setup: advection,
        },
        Scenario {
            name: "heat_log",
            summary: "heat equation as f=rho, H'=log rho; exact 2+exp(-t) sin x",
            long: false,
            defaults: |_| Defaults::one_d(2, 40, PI_RANGE, 0.01, 2.0),
            setup: heat_log,
        },
        Scenario {
            name: "heat_sqrt",
            summary: "heat equation as f=sqrt rho, H'=2 sqrt rho, g=f; exact 2+exp(-t) sin x",
            long: false,
            defaults: |_| Defaults::one_d(2, 40, PI_RANGE, 0.01, 2.0),
            setup: heat_sqrt,
        },
        Scenario {
            name: "kernel_smooth",
            summary: "pure interaction with a Gaussian kernel on [-1,1]",
            long: false,
            defaults: |_| Defaults::one_d(3, 40, (-1.0, 1.0), 0.4, 0.2),
            setup: kernel_smooth,
        },
        Scenario {
            name: "kernel_hat",
            summary: "pure interaction with the hat kernel max(0.2-|x|,0), exact moments",
            long: false,
            defaults: |_| Defaults::one_d(2, 40, (-1.0, 1.0), 0.4, 0.2),
            setup: kernel_hat,
        },
        Scenario {
            name: "porous_m2",
            summary: "porous medium m=2 with V=x^2/2; param.shift moves the initial hat",
            long: false,
            defaults: |_| Defaults::one_d(2, 40, (-2.0, 2.0), 0.005, 5.0).with_params(&[("shift", 0.0)]),
            setup: porous_m2,
        },
        Scenario {
            name: "fp_boson",
            summary: "Fokker-Planck relaxation of a boson gas (kappa=1), g=2 rho",
            long: true,
            defaults: |_| Defaults::one_d(2, 100, (-10.0, 10.0), 0.0002, 0.05),
            setup: |_| fokker_planck(1.0),
        },
        Scenario {
            name: "fp_fermion",
            summary: "Fokker-Planck relaxation of a fermion gas (kappa=-1), g=2 rho",
            long: true,
            defaults: |_| Defaults::one_d(2, 100, (-10.0, 10.0), 0.0002, 0.05),
            setup: |_| fokker_planck(-1.0),
        },
        Scenario {
            name: "fp_generalized",
            summary: "superlinear drift rho(1+rho^3); param.mass 1 (sub) or 10 (super)",
            long: true,
            defaults: |p| {
                let heavy = param(p, "mass", 1.0) > 1.0;
                let (tau, t) = if heavy { (0.0005, 0.01) } else { (0.003, 0.05) };
                Defaults::one_d(4, 120, (-6.0, 6.0), tau, t).with_params(&[("mass", 1.0)])
            },
            setup: fp_generalized,
        },
        Scenario {
            name: "aggregation_smooth",
            summary: "nonlinear diffusion nu rho^(m-1) with Gaussian attraction; param.staircase=1 for four hats",
            long: true,
            defaults: |p| {
                let stairs = param(p, "staircase", 0.0) != 0.0;
                let (m, nu) = if stairs { (6.0, 6.0) } else { (1.5, 0.28) };
                Defaults::one_d(2, 120, (-6.0, 6.0), 0.05, 2.0).with_params(&[
                    ("m", m),
                    ("nu", nu),
                    ("staircase", 0.0),
                ])
            },
            setup: aggregation_smooth,
        },
        Scenario {
            name: "aggregation_local",
            summary: "diffusion rho^2/4 with the compactly supported kernel -max(1-|x|,0); indicator of [-a,a]",
            long: false,
            defaults: |_| Defaults::one_d(2, 80, (-4.0, 4.0), 0.01, 1.0).with_params(&[("a", 3.0)]),
            setup: aggregation_local,
        },
        Scenario {
            name: "accuracy2d",
            summary: "2D manufactured solution 2+sin(x+y+t) with kernel cos(x+y) and a source",
            long: false,
            defaults: |_| Defaults::two_d(2, 10, PI_RANGE, 0.0005, 0.1),
            setup: accuracy2d,
        },
        Scenario {
            name: "dumbbell_fene",
            summary: "2D FENE dumbbell Fokker-Planck in a planar flow, four Gaussian bumps",
            long: true,
            defaults: |_| {
                let mut d = Defaults::two_d(3, 20, (-5.0, 5.0), 0.0, 0.002).with_params(&[
                    ("r", 5.0),
                    ("k11", 0.3),
                    ("k12", 0.2),
                    ("k21", 0.2),
                    ("k22", -0.3),
                    ("sigma2", 0.2),
                ]);
                d.tau_fixed = Some(2e-6);
                d
            },
            setup: dumbbell_fene,
        },
        Scenario {
            name: "keller_segel",
            summary: "2D Keller-Segel with the log kernel; param.supercritical selects mass 2(pi+0.2) on [-1,1]^2",
            long: true,
            defaults: |p| {
                // the periodic box must hold the support at less than half a period,
                // or attraction acts across the boundary and the collapse stalls
                let half = if supercritical(p) { 3.0 } else { 5.0 };
                Defaults::two_d(2, 16, (-half, half), 0.0005, 0.01).with_params(&[("supercritical", 0.0)])
            },
            setup: keller_segel,
        },
    ];
    REGISTRY
}

pub fn find(name: &str) -> Result<&'static Scenario, CliError> {
    registry()
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::Config(format!("unknown scenario {name:?}; see list-scenarios")))
}

/// Fills unspecified keys from the scenario's defaults and checks the result.
pub fn resolve(raw: &RawConfig) -> Result<ScenarioConfig, CliError> {
    let name = raw
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Config("missing key: scenario".into()))?;
    let sc = find(name)?;
    let d = sc.defaults(&raw.params);
    let mut params: BTreeMap<String, f64> = d.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in &raw.params {
        if !params.contains_key(k) {
            return Err(CliError::Config(format!("scenario {name} has no parameter {k:?}")));
        }
        params.insert(k.clone(), *v);
    }
    let dimension = raw.dimension.unwrap_or(d.dimension);
    if dimension != d.dimension {
        return Err(CliError::Config(format!("scenario {name} is {}D", d.dimension)));
    }
    let n_x = raw.n_x.or(raw.n).unwrap_or(d.n);
    let n_y = raw.n_y.or(raw.n).unwrap_or(d.n);
    let cfg = ScenarioConfig {
        scenario: name.to_string(),
        dimension,
        k: raw.k.unwrap_or(d.k),
        n_x,
        n_y: if dimension == 1 { 1 } else { n_y },
        x_min: raw.x_min.unwrap_or(d.x.0),
        x_max: raw.x_max.unwrap_or(d.x.1),
        y_min: raw.y_min.unwrap_or(d.y.0),
        y_max: raw.y_max.unwrap_or(d.y.1),
        tau_coeff: raw.tau_coeff.unwrap_or(d.tau_coeff),
        tau_fixed: raw.tau_fixed.or(if raw.tau_coeff.is_some() { None } else { d.tau_fixed }),
        t_final: raw.t_final.unwrap_or(d.t_final),
        limiter: raw.limiter.unwrap_or(true),
        convolution: raw.convolution.unwrap_or(ConvolutionChoice::Auto),
        conv_backend: raw.conv_backend.unwrap_or(BackendChoice::Fft),
        seed: raw.seed.unwrap_or(0),
        output_dir: raw.output_dir.clone().unwrap_or_else(|| PathBuf::from(name)),
        snapshot_times: raw.snapshot_times.clone().unwrap_or_default(),
        diag_every: raw.diag_every.unwrap_or(0),
        alpha_factor: raw.alpha_factor.unwrap_or(1.0),
        reference_run: raw.reference_run.clone(),
        params,
    };
    check(&cfg)?;
    Ok(cfg)
}

fn check(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    if !(1..=8).contains(&cfg.k) {
        return bad(format!("k must be in 1..=8, got {}", cfg.k));
    }
    if cfg.n_x == 0 || cfg.n_y == 0 {
        return bad("cell counts must be positive".into());
    }
    if !(cfg.x_max > cfg.x_min) || (cfg.dimension == 2 && !(cfg.y_max > cfg.y_min)) {
        return bad("domain bounds must satisfy min < max".into());
    }
    if !(cfg.tau() > 0.0) || !cfg.tau().is_finite() {
        return bad(format!("time step must be positive, got {}", cfg.tau()));
    }
    if !(cfg.t_final >= 0.0) || !cfg.t_final.is_finite() {
        return bad(format!("t_final must be non-negative, got {}", cfg.t_final));
    }
    if !(cfg.alpha_factor >= 1.0) {
        return bad(format!("alpha_factor must be at least 1, got {}", cfg.alpha_factor));
    }
    Ok(())
}

/// A discretized scenario ready to run.
pub enum Discretization {
    OneD(Scheme1D),
    TwoD(Scheme2D),
}

pub struct Problem {
    pub config: ScenarioConfig,
    pub disc: Discretization,
    pub rho0: NodalField,
    pub exact: Option<ExactFn>,
    pub steady: Option<ProfileFn>,
}

fn options(cfg: &ScenarioConfig) -> SchemeOptions {
    SchemeOptions {
        convolution: match cfg.convolution {
            ConvolutionChoice::Auto => None,
            ConvolutionChoice::Quadrature => Some(ConvolutionMode::Quadrature),
            ConvolutionChoice::Exact => Some(ConvolutionMode::Exact),
        },
        backend: match cfg.conv_backend {
            BackendChoice::Fft => ConvolutionBackend::Fft,
            BackendChoice::Direct => ConvolutionBackend::Direct,
        },
        alpha_factor: cfg.alpha_factor,
        ..SchemeOptions::default()
    }
}

/// Interpolates `f`, sampling each node a hair inside its own cell when
/// `inside` is set so jumps at cell edges land on the right side.
fn initial_field<S: CellSpace>(space: &S, f: &ProfileFn, inside: bool, centres: &dyn Fn(usize) -> Vec<f64>) -> NodalField {
    if !inside {
        return space.interpolate(&|x| f(x));
    }
    let npc = space.nodes_per_cell();
    let values = (0..space.n_dofs())
        .map(|d| {
            let c = centres(d / npc);
            let p: Vec<f64> = space.point(d).iter().zip(&c).map(|(x, m)| x + 1e-9 * (m - x)).collect();
            f(&p)
        })
        .collect();
    NodalField::new(values, npc).expect("shape follows the space")
}

/// Builds mesh, scheme and initial data for a resolved configuration.
pub fn build(cfg: &ScenarioConfig) -> Result<Problem, CliError> {
    let sc = find(&cfg.scenario)?;
    let setup = sc.setup(cfg)?;
    let report = validate_model(&setup.model);
    if !report.passed() {
        return Err(CliError::Config(format!(
            "scenario {} fails model validation: {}",
            cfg.scenario,
            report.failures.join("; ")
        )));
    }
    let opts = options(cfg);
    let (disc, mut rho0) = if cfg.dimension == 1 {
        let mesh = uniform_mesh_1d(cfg.x_min, cfg.x_max, cfg.n_x)?;
        let space = Space1D::new(mesh, cfg.k)?;
        let edges = space.mesh().edges().to_vec();
        let rho0 = initial_field(&space, &setup.rho0, setup.discontinuous, &|c| {
            vec![0.5 * (edges[c] + edges[c + 1])]
        });
        (Discretization::OneD(Scheme1D::new(space, setup.model, opts)?), rho0)
    } else {
        let mesh = Mesh2D::uniform((cfg.x_min, cfg.x_max), (cfg.y_min, cfg.y_max), cfg.n_x, cfg.n_y)?;
        let space = Space2D::new(mesh, cfg.k)?;
        let (ex, ey) = (space.mesh().x.edges().to_vec(), space.mesh().y.edges().to_vec());
        let nx = cfg.n_x;
        let rho0 = initial_field(&space, &setup.rho0, setup.discontinuous, &|c| {
            let (i, j) = (c % nx, c / nx);
            vec![0.5 * (ex[i] + ex[i + 1]), 0.5 * (ey[j] + ey[j + 1])]
        });
        (Discretization::TwoD(Scheme2D::new(space, setup.model, opts)?), rho0)
    };
    if let Some(target) = setup.normalize_mass {
        let mass = match &disc {
            Discretization::OneD(s) => s.space().integrate(&rho0),
            Discretization::TwoD(s) => s.space().integrate(&rho0),
        };
        if !(mass > 0.0) {
            return Err(CliError::Config("initial data have no mass to normalize".into()));
        }
        for v in rho0.values_mut() {
            *v *= target / mass;
        }
    }
    Ok(Problem {
        config: cfg.clone(),
        disc,
        rho0,
        exact: setup.exact,
        steady: setup.steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(name: &str) -> RawConfig {
        RawConfig {
            scenario: Some(name.into()),
            ..Default::default()
        }
    }

    #[test]
    fn every_preset_passes_model_validation() {
        for sc in registry() {
            let mut r = raw(sc.name);
            // keep the construction cheap; moments are not part of validation
            r.n = Some(4);
            r.k = Some(1);
            let cfg = resolve(&r).unwrap();
            let setup = sc.setup(&cfg).unwrap();
            let rep = validate_model(&setup.model);
            assert!(rep.passed(), "{}: {:?}", sc.name, rep.failures);
        }
        let mut r = raw("aggregation_smooth");
        r.params.insert("staircase".into(), 1.0);
        let cfg = resolve(&r).unwrap();
        assert_eq!((cfg.params["m"], cfg.params["nu"]), (6.0, 6.0));
        assert!(validate_model(&aggregation_smooth(&cfg).unwrap().model).passed());
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = registry().iter().map(|s| s.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), registry().len());
    }

    #[test]
    fn resolution_rules() {
        assert!(matches!(resolve(&raw("nope")), Err(CliError::Config(_))));
        let mut r = raw("porous_m2");
        r.params.insert("m".into(), 3.0);
        assert!(matches!(resolve(&r), Err(CliError::Config(_))));
        let mut r = raw("keller_segel");
        r.params.insert("supercritical".into(), 1.0);
        let cfg = resolve(&r).unwrap();
        assert_eq!((cfg.x_min, cfg.y_max), (-3.0, 3.0));
        let mut r = raw("dumbbell_fene");
        assert_eq!(resolve(&r).unwrap().tau(), 2e-6);
        r.tau_coeff = Some(0.01);
        let cfg = resolve(&r).unwrap();
        assert!((cfg.tau() - 0.01 * 0.25).abs() < 1e-15);
        let mut r = raw("heat_log");
        r.k = Some(9);
        assert!(matches!(resolve(&r), Err(CliError::Config(_))));
    }

    #[test]
    fn generalized_entropy_density_has_the_right_derivative() {
        for r in [0.05, 0.5, 1.0, 2.0, 4.0] {
            let h = |x: f64| xlogx(x) - x - log_one_plus_cube_integral(x) / 3.0;
            let e = 1e-6;
            let fd = (h(r + e) - h(r - e)) / (2.0 * e);
            let hp = r.ln() - (1.0 + r.powi(3)).ln() / 3.0;
            assert!((fd - hp).abs() < 1e-7, "rho={r}: {fd} vs {hp}");
        }
    }

    #[test]
    fn fermion_entropy_density_has_the_right_derivative() {
        let s = fokker_planck(-1.0).unwrap();
        for r in [0.1, 0.4, 0.8] {
            let e = 1e-6;
            let fd = (s.model.h(r + e) - s.model.h(r - e)) / (2.0 * e);
            assert!((fd - s.model.h_prime(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn dumbbell_data_are_normalized() {
        let mut r = raw("dumbbell_fene");
        r.n = Some(10);
        r.k = Some(2);
        let p = build(&resolve(&r).unwrap()).unwrap();
        let Discretization::TwoD(s) = &p.disc else { panic!("2D scenario") };
        assert!((s.space().integrate(&p.rho0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn indicator_data_are_sampled_inside_cells() {
        let p = build(&resolve(&raw("aggregation_local")).unwrap()).unwrap();
        // [-4,4] with 80 cells: x = ±3 are edges, so cells are either all 1 or all 0
        for cell in p.rho0.cells() {
            assert!(cell.iter().all(|v| *v == cell[0]));
        }
    }
}
