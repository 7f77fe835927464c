//! Experiment configuration: TOML with sections, unknown keys rejected.
//!
//! ```toml
//! name = "sheet"
//! output_dir = "runs"
//! seed = 1
//! delta = 0.1
//!
//! [grid]
//! lx = 8.0
//! nx = 64
//!
//! [initial]
//! family = "lifted2d"
//! eps = 1e-3
//!
//! [stepper]
//! t_end = 2.0
//!
//! [sweep]
//! deltas = [0.2, 0.1, 0.05, 0.025]
//! eta_rule = "delta"
//! ```
//!
//! Every key has a default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{InitialFamily, InitialParams};
use crate::grid::GridSpec;
use crate::integrator::StepperConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub sigma: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lx: 8.0,
            ly: 2.0,
            nx: 64,
            ny: 16,
            nz: 16,
            sigma: 0.25,
        }
    }
}

impl GridConfig {
    pub fn spec(&self, delta: f64) -> GridSpec<f64> {
        GridSpec::new(self.lx, self.ly, delta, self.nx, self.ny, self.nz).with_sigma(self.sigma)
    }
}

/// How the perturbation weight of the lifted family depends on the thickness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaRule {
    /// `η` as configured.
    Fixed,
    /// `η·δ`.
    Delta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Highest total derivative order in the series and the 3D/2D comparison.
    pub max_order: usize,
    /// Top order of the thickness-weighted total energy.
    pub functional_top: usize,
    /// Write a snapshot file at every cadence point.
    pub snapshots: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            max_order: 2,
            functional_top: 4,
            snapshots: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub deltas: Vec<f64>,
    pub eta_rule: EtaRule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            eta_rule: EtaRule::Delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressureConfig {
    /// Random point pairs for the kernel bound and wall checks.
    pub samples: usize,
    /// Kernel truncation tolerance.
    pub tol: f64,
    pub lx: f64,
    pub ly: f64,
    pub delta: f64,
    /// Coarsest grid of the agreement table; each further row doubles it.
    pub grid: [usize; 3],
    pub levels: usize,
    /// Gaussian width and offset of the probe blobs.
    pub probe_width: f64,
    pub probe_offset: f64,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            tol: 1e-9,
            lx: 2.0,
            ly: 2.0,
            delta: 1.0,
            grid: [16, 16, 8],
            levels: 2,
            probe_width: 0.4,
            probe_offset: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    /// Parent directory; each command writes into `output_dir/name`.
    pub output_dir: PathBuf,
    /// Seed of every randomized sample set.
    pub seed: u64,
    /// Slab half-height of single runs.
    pub delta: f64,
    pub grid: GridConfig,
    pub initial: InitialParams<f64>,
    pub stepper: StepperConfig<f64>,
    pub diagnostics: DiagnosticsConfig,
    pub sweep: SweepConfig,
    pub pressure: PressureConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            output_dir: PathBuf::from("runs"),
            seed: 1,
            delta: 0.1,
            grid: GridConfig::default(),
            initial: InitialParams::default(),
            stepper: StepperConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            sweep: SweepConfig::default(),
            pressure: PressureConfig::default(),
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse `a.b.c=value`; the value is read as TOML and falls back to a string.
fn parse_override(s: &str) -> Result<toml::Table> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override {s:?} has an empty key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut out = toml::Table::new();
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = &mut out;
    for p in &parts[..parts.len() - 1] {
        cur = match cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())) {
            toml::Value::Table(t) => t,
            _ => unreachable!("fresh table"),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::layered(Some(text), &[])
    }

    /// Defaults, then the file contents, then each `key=value` override.
    pub fn layered(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table = match toml::Value::try_from(Self::default()) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("the default configuration serializes to a table"),
        };
        if let Some(text) = text {
            let file: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            merge(&mut table, file);
        }
        for o in overrides {
            merge(&mut table, parse_override(o)?);
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p)?),
            None => None,
        };
        Self::layered(text.as_deref(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("experiment name {:?} is not a plain file name", self.name)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!("delta = {} must lie in (0, 1]", self.delta)));
        }
        let d = &self.sweep.deltas;
        if d.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::Config("every sweep thickness must lie in (0, 1]".into()));
        }
        if d.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("sweep thicknesses must be strictly decreasing".into()));
        }
        if self.initial.family != InitialFamily::Zero && !(self.initial.eps > 0.0) {
            return Err(Error::Config(format!("eps = {} must be positive", self.initial.eps)));
        }
        if self.pressure.samples == 0 || self.pressure.levels == 0 || !(self.pressure.tol > 0.0) {
            return Err(Error::Config("pressure validation needs samples, levels and a positive tolerance".into()));
        }
        self.stepper.validate()?;
        self.grid.spec(self.delta).validate()?;
        self.initial.validate(&self.grid.spec(self.delta))?;
        Ok(())
    }

    /// Initial-data parameters at thickness `delta` under the sweep's rule.
    pub fn initial_at(&self, delta: f64) -> InitialParams<f64> {
        let mut p = self.initial.clone();
        if self.sweep.eta_rule == EtaRule::Delta && p.family == InitialFamily::Lifted2d {
            p.eta *= delta;
        }
        p
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }
}
