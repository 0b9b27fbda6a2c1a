//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment, unknown keys are rejected.
//! Scenario parameters use a `param.` prefix. Keys left out are filled from
//! the scenario's defaults when the configuration is resolved.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// How kernel moments are formed; `Auto` follows the kernel's smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionChoice {
    Auto,
    Quadrature,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Fft,
    Direct,
}

/// A configuration as read; every field is optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub dimension: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub n_x: Option<usize>,
    pub n_y: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub tau_coeff: Option<f64>,
    pub tau_fixed: Option<f64>,
    pub t_final: Option<f64>,
    pub limiter: Option<bool>,
    pub convolution: Option<ConvolutionChoice>,
    pub conv_backend: Option<BackendChoice>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub snapshot_times: Option<Vec<f64>>,
    pub diag_every: Option<usize>,
    pub alpha_factor: Option<f64>,
    pub reference_run: Option<PathBuf>,
    pub params: BTreeMap<String, f64>,
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub dimension: usize,
    pub k: usize,
    /// Cells per axis; `n_y` is ignored in 1D.
    pub n_x: usize,
    pub n_y: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// `τ = tau_coeff · h_x²` unless `tau_fixed` is set.
    pub tau_coeff: f64,
    pub tau_fixed: Option<f64>,
    pub t_final: f64,
    pub limiter: bool,
    pub convolution: ConvolutionChoice,
    pub conv_backend: BackendChoice,
    /// Reserved; every scenario is deterministic.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub diag_every: usize,
    pub alpha_factor: f64,
    /// Run directory whose steady state is the relative-entropy reference.
    pub reference_run: Option<PathBuf>,
    pub params: BTreeMap<String, f64>,
}

impl ScenarioConfig {
    pub fn h_x(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn tau(&self) -> f64 {
        self.tau_fixed.unwrap_or(self.tau_coeff * self.h_x() * self.h_x())
    }

    pub fn param(&self, name: &str) -> Result<f64, CliError> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| CliError::Config(format!("scenario {} needs param.{name}", self.scenario)))
    }

    /// Serializes in the same format the parser reads.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("scenario", self.scenario.clone());
        put("dimension", self.dimension.to_string());
        put("k", self.k.to_string());
        if self.dimension == 1 {
            put("n", self.n_x.to_string());
        } else {
            put("n_x", self.n_x.to_string());
            put("n_y", self.n_y.to_string());
        }
        put("x_min", fmt_f64(self.x_min));
        put("x_max", fmt_f64(self.x_max));
        if self.dimension == 2 {
            put("y_min", fmt_f64(self.y_min));
            put("y_max", fmt_f64(self.y_max));
        }
        put("tau_coeff", fmt_f64(self.tau_coeff));
        if let Some(t) = self.tau_fixed {
            put("tau_fixed", fmt_f64(t));
        }
        put("t_final", fmt_f64(self.t_final));
        put("limiter", self.limiter.to_string());
        put(
            "convolution",
            match self.convolution {
                ConvolutionChoice::Auto => "auto",
                ConvolutionChoice::Quadrature => "quadrature",
                ConvolutionChoice::Exact => "exact",
            }
            .into(),
        );
        put(
            "conv_backend",
            match self.conv_backend {
                BackendChoice::Fft => "fft",
                BackendChoice::Direct => "direct",
            }
            .into(),
        );
        put("seed", self.seed.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put(
            "snapshot_times",
            self.snapshot_times.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(","),
        );
        put("diag_every", self.diag_every.to_string());
        put("alpha_factor", fmt_f64(self.alpha_factor));
        if let Some(r) = &self.reference_run {
            put("reference_run", r.display().to_string());
        }
        for (k, v) in &self.params {
            put(&format!("param.{k}"), fmt_f64(*v));
        }
        s
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("line {}: {m}", lineno + 1)),
                    other => other,
                })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key; used by the parser and by callers overriding fields.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "scenario" => self.scenario = Some(v.to_string()),
            "dimension" => self.dimension = Some(parse_num(key, v)?),
            "k" => self.k = Some(parse_num(key, v)?),
            "n" => self.n = Some(parse_num(key, v)?),
            "n_x" => self.n_x = Some(parse_num(key, v)?),
            "n_y" => self.n_y = Some(parse_num(key, v)?),
            "x_min" => self.x_min = Some(parse_num(key, v)?),
            "x_max" => self.x_max = Some(parse_num(key, v)?),
            "y_min" => self.y_min = Some(parse_num(key, v)?),
            "y_max" => self.y_max = Some(parse_num(key, v)?),
            "tau_coeff" => self.tau_coeff = Some(parse_num(key, v)?),
            "tau_fixed" => self.tau_fixed = Some(parse_num(key, v)?),
            "t_final" => self.t_final = Some(parse_num(key, v)?),
            "limiter" => self.limiter = Some(parse_bool(key, v)?),
            "convolution" => {
                self.convolution = Some(match v {
                    "auto" => ConvolutionChoice::Auto,
                    "quadrature" => ConvolutionChoice::Quadrature,
                    "exact" => ConvolutionChoice::Exact,
                    _ => return Err(CliError::Config(format!("convolution: unknown mode {v:?}"))),
                })
            }
            "conv_backend" => {
                self.conv_backend = Some(match v {
                    "fft" => BackendChoice::Fft,
                    "direct" => BackendChoice::Direct,
                    _ => return Err(CliError::Config(format!("conv_backend: unknown backend {v:?}"))),
                })
            }
            "seed" => self.seed = Some(parse_num(key, v)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            "snapshot_times" => {
                self.snapshot_times = Some(
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_num(key, s))
                        .collect::<Result<_, _>>()?,
                )
            }
            "diag_every" => self.diag_every = Some(parse_num(key, v)?),
            "alpha_factor" => self.alpha_factor = Some(parse_num(key, v)?),
            "reference_run" => self.reference_run = Some(PathBuf::from(v)),
            _ => match key.strip_prefix("param.") {
                Some(name) if !name.is_empty() => {
                    self.params.insert(name.to_string(), parse_num(key, v)?);
                }
                _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
            },
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_params() {
        let raw = RawConfig::parse(
            "# heat run\nscenario = heat_log\nk = 2  # degree\nn=40\nlimiter = off\nparam.m = 1.5\nsnapshot_times = 0.5, 1\n",
        )
        .unwrap();
        assert_eq!(raw.scenario.as_deref(), Some("heat_log"));
        assert_eq!(raw.k, Some(2));
        assert_eq!(raw.n, Some(40));
        assert_eq!(raw.limiter, Some(false));
        assert_eq!(raw.params["m"], 1.5);
        assert_eq!(raw.snapshot_times, Some(vec![0.5, 1.0]));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RawConfig::parse("scenaro = heat_log"), Err(CliError::Config(_))));
        assert!(matches!(RawConfig::parse("k = two"), Err(CliError::Config(_))));
        assert!(matches!(RawConfig::parse("limiter = maybe"), Err(CliError::Config(_))));
        assert!(matches!(RawConfig::parse("just text"), Err(CliError::Config(_))));
        assert!(matches!(RawConfig::parse("param. = 1"), Err(CliError::Config(_))));
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -std::f64::consts::PI, 2e-6, 1e300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
