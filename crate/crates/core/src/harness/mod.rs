//! Command implementations behind the `slabmhd` binary. Everything here is
//! `f64`.
//!
//! Each command writes into `output_dir/name`:
//!
//! | command | files |
//! |---|---|
//! | run3d, run2d | `series.csv`, `summary.json`, `run.log`, `snapshots/`, `plots/` |
//! | sweep-delta | `sweep.csv`, `slopes.json`, `plots/`, one sub-directory per thickness |
//! | validate-pressure | `pressure.json`, `agreement.csv` |
//!
//! Every JSON file carries a `checks` array of named threshold tests, which
//! `report` and `--check` read.

pub mod config;
pub mod fit;
pub mod report;
pub mod run;
pub mod svg;
pub mod sweep;
pub mod validate;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use config::ExperimentConfig;

/// A named threshold test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: String,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=".into(),
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=".into(),
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {:.6e} {} {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.threshold
        )
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Fixed-format CSV cell, so that identical runs give identical bytes.
fn cell(v: f64) -> String {
    format!("{v:.15e}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}
