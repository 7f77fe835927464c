//! Plots and a one-page text summary from existing artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use super::svg::{Plot, Series};
use super::sweep::{sweep_plot, SweepSummary};
use super::Check;
use crate::error::{Error, Result};

/// Artifact files recognized by [`cmd_report`], in report order.
pub const ARTIFACTS: [&str; 3] = ["summary.json", "slopes.json", "pressure.json"];

pub struct ReportOutcome {
    pub text: String,
    pub checks: Vec<Check>,
    pub plots: Vec<PathBuf>,
}

/// One SVG per quantity of `series.csv`, written to `plots/<quantity>.svg`.
pub fn render_series_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(dir.join("series.csv"))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::NoArtifacts(dir.display().to_string()))?.split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    let t_col = header.iter().position(|h| *h == "t").ok_or_else(|| Error::Snapshot("series.csv has no t column".into()))?;
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    let mut out = vec![];
    for (c, name) in header.iter().enumerate() {
        if c == t_col || *name == "dim" {
            continue;
        }
        let plot = Plot {
            title: name.to_string(),
            x_label: "t".into(),
            y_label: name.to_string(),
            log: false,
            series: vec![Series {
                label: name.to_string(),
                points: rows.iter().filter(|r| r.len() > c).map(|r| (r[t_col], r[c])).collect(),
                markers: false,
            }],
            note: None,
        };
        let path = plots.join(format!("{name}.svg"));
        fs::write(&path, plot.render())?;
        out.push(path);
    }
    Ok(out)
}

/// Render plots for every artifact in `dir` and write `report.txt`.
pub fn cmd_report(dir: &Path) -> Result<ReportOutcome> {
    let present: Vec<&str> = ARTIFACTS.iter().copied().filter(|f| dir.join(f).is_file()).collect();
    if present.is_empty() {
        return Err(Error::NoArtifacts(dir.display().to_string()));
    }
    let mut text = format!("report for {}\n", dir.display());
    let mut checks = vec![];
    let mut plots = vec![];
    for file in present {
        let raw = fs::read_to_string(dir.join(file))?;
        let value: serde_json::Value = serde_json::from_str(&raw)?;
        match file {
            "summary.json" if dir.join("series.csv").is_file() => plots.extend(render_series_plots(dir)?),
            "slopes.json" => {
                let s: SweepSummary = serde_json::from_value(value.clone())?;
                let path = dir.join("plots").join("sweep_loglog.svg");
                fs::create_dir_all(dir.join("plots"))?;
                fs::write(&path, sweep_plot(&s).render())?;
                plots.push(path);
                for (label, fit) in [("difference", &s.fits.difference), ("vertical", &s.fits.vertical)] {
                    match fit {
                        Some(f) => text.push_str(&format!(
                            "{label} slope {:.4} (R2 {:.4}){}\n",
                            f.slope,
                            f.r2,
                            if f.verdict.is_none() { ", no verdict" } else { "" }
                        )),
                        None => text.push_str(&format!("{label} slope: not enough data\n")),
                    }
                }
            }
            _ => {}
        }
        let found: Vec<Check> = match value.get("checks") {
            Some(c) => serde_json::from_value(c.clone())?,
            None => vec![],
        };
        text.push_str(&format!("\n{file}\n"));
        for c in &found {
            text.push_str(&c.line());
            text.push('\n');
        }
        checks.extend(found);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    text.push_str(&format!("\n{} checks, {} failed\n", checks.len(), failed));
    fs::write(dir.join("report.txt"), &text)?;
    Ok(ReportOutcome { text, checks, plots })
}
