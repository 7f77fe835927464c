//! Thickness sweeps: paired slab and planar runs per `δ`, the mean/fluctuation
//! split, and log-log slopes of the slab-to-plane differences.

use std::fs;

use serde::{Deserialize, Serialize};

use super::config::{EtaRule, ExperimentConfig};
use super::fit::{loglog_fit, SlopeFit};
use super::run::write_pair;
use super::svg::{Plot, Series};
use super::{cell, write_csv, write_json, Check};
use crate::diagnostics::{decompose, slice_energies};
use crate::error::{Error, Result};
use crate::fields::{make_initial, InitialFamily};
use crate::integrator::Integrator;
use crate::mhd2d::{compare_3d_2d, run_paired, Integrator2D, State2D};

/// Allowed growth of the sup-slice fluctuation energy.
pub const WH_GROWTH: f64 = 4.0;
/// Allowed spread of the `δ⁻²`-scaled vertical fluctuation energy.
pub const W3_SPREAD: f64 = 2.0;
pub const DIFFERENCE_SLOPE: f64 = 0.9;
pub const VERTICAL_SLOPE: f64 = 1.8;
/// Noise band of the monotonicity check.
pub const MONOTONE_BAND: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub eta: f64,
    pub steps: usize,
    pub failure: Option<String>,
    /// `Σ±,k sup_{x₃} E±,h^(k)(w^h(·,x₃))` at the first and last snapshot.
    pub wh_initial: f64,
    pub wh_final: f64,
    pub wh_ratio: f64,
    /// `δ⁻² sup_t Σ±,k<N sup_{x₃} E±,h^(k)(w³(·,x₃))`.
    pub w3_scaled: f64,
    /// Unweighted slab energy at `t = 0`, the scale of the sheet check.
    pub energy_initial: f64,
    /// Sup-slice `E±,h^(k)(z^h − z₀^h)` summed over signs and `k`, final time.
    pub difference_final: f64,
    /// Sup-slice `E±,h^(k)(z³/δ)` summed over signs and `k`, final time.
    pub vertical_final: f64,
    pub relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    pub difference: Option<SlopeFit>,
    pub vertical: Option<SlopeFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub family: InitialFamily,
    pub eta_rule: EtaRule,
    pub max_order: usize,
    pub rows: Vec<SweepRow>,
    pub fits: SweepFits,
    pub checks: Vec<Check>,
}

fn run_member(cfg: &ExperimentConfig, delta: f64) -> Result<SweepRow> {
    let spec = cfg.grid.spec(delta);
    let slab = Integrator::new(&spec, cfg.stepper.clone())?;
    let planar = Integrator2D::new(&spec, cfg.stepper.clone())?;
    let params = cfg.initial_at(delta);
    let init3 = make_initial(slab.spectral(), &params)?;
    let init2 = State2D::from_slab_mean(&slab.spectral().grid, &init3);
    let energy_initial = init3.energy(&spec);
    let (t3, t2) = run_paired(&slab, &planar, init3, init2)?;
    let n = cfg.diagnostics.max_order;
    let sp2 = planar.spectral();
    let grid = &slab.spectral().grid;

    let mut wh = vec![];
    let mut w3_sup = 0.0_f64;
    for s in &t3.snapshots {
        let d = decompose(grid, s);
        let (mut h, mut v) = (0.0, 0.0);
        for (w, plus) in d.w.iter().zip([true, false]) {
            for k in 0..=n {
                h += slice_energies(sp2, &[&w.c[0], &w.c[1]], plus, k, s.t).sup;
                if k < n {
                    v += slice_energies(sp2, &[&w.c[2]], plus, k, s.t).sup;
                }
            }
        }
        wh.push(h);
        w3_sup = w3_sup.max(v);
    }
    let cmp = compare_3d_2d(sp2, &spec, &t3.snapshots, &t2.snapshots, n)?;
    let dir = cfg.run_dir().join(format!("delta_{delta}"));
    write_pair(cfg, (&slab, &t3), (&planar, &t2), &dir)?;
    let (wh_initial, wh_final) = (wh[0], *wh.last().expect("initial snapshot"));
    Ok(SweepRow {
        delta,
        eta: params.eta,
        steps: t3.log.len() - 1,
        failure: t3.failure.as_ref().map(|e| e.to_string()),
        wh_initial,
        wh_final,
        wh_ratio: if wh_initial > 0.0 { wh_final / wh_initial } else { 0.0 },
        w3_scaled: w3_sup / (delta * delta),
        energy_initial,
        difference_final: cmp.final_difference(),
        vertical_final: cmp.final_vertical(),
        relative_difference: cmp.max_relative_difference(),
    })
}

fn failed_row(delta: f64, e: &Error) -> SweepRow {
    SweepRow {
        delta,
        eta: f64::NAN,
        steps: 0,
        failure: Some(e.to_string()),
        wh_initial: f64::NAN,
        wh_final: f64::NAN,
        wh_ratio: f64::NAN,
        w3_scaled: f64::NAN,
        energy_initial: f64::NAN,
        difference_final: f64::NAN,
        vertical_final: f64::NAN,
        relative_difference: f64::NAN,
    }
}

fn sweep_checks(cfg: &ExperimentConfig, rows: &[SweepRow], fits: &SweepFits) -> Vec<Check> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let mut checks = vec![Check::at_most(
        "failed sweep members",
        (rows.len() - ok.len()) as f64,
        0.0,
    )];
    let family = cfg.initial.family;
    match family {
        InitialFamily::Sheet | InitialFamily::Zero => {
            let worst = ok
                .iter()
                .map(|r| {
                    let scale = if r.energy_initial > 0.0 { r.energy_initial } else { 1.0 };
                    r.wh_final.max(r.w3_scaled * r.delta * r.delta) / scale
                })
                .fold(0.0_f64, f64::max);
            checks.push(Check::at_most("fluctuation energy of height-independent data", worst, 1e-20));
        }
        InitialFamily::Tube | InitialFamily::Lifted2d => {
            let growth = ok.iter().map(|r| r.wh_ratio).fold(0.0_f64, f64::max);
            checks.push(Check::at_most("sup-slice w^h energy ratio final/initial", growth, WH_GROWTH));
            if family == InitialFamily::Tube || cfg.sweep.eta_rule == EtaRule::Fixed {
                let (lo, hi) = ok
                    .iter()
                    .map(|r| r.w3_scaled)
                    .fold((f64::INFINITY, 0.0_f64), |(a, b), v| (a.min(v), b.max(v)));
                let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
                checks.push(Check::at_most("spread of scaled w3 energy", spread, W3_SPREAD));
            } else {
                // a perturbation shrinking with δ shrinks the scaled energy too
                let growth = ok
                    .windows(2)
                    .map(|w| w[1].w3_scaled / w[0].w3_scaled)
                    .fold(0.0_f64, f64::max);
                checks.push(Check::at_most(
                    "scaled w3 energy growth toward thinner slabs",
                    growth,
                    1.0 + MONOTONE_BAND,
                ));
            }
        }
    }
    if family == InitialFamily::Lifted2d && cfg.sweep.eta_rule == EtaRule::Delta {
        let slope = |f: &Option<SlopeFit>| f.as_ref().and_then(|f| f.verdict).unwrap_or(f64::NAN);
        let r2 = fits.difference.as_ref().map_or(f64::NAN, |f| f.r2);
        checks.push(Check::at_least("slope of 3D-2D difference energy", slope(&fits.difference), DIFFERENCE_SLOPE));
        checks.push(Check::at_least("R2 of 3D-2D difference fit", r2, super::fit::MIN_R2));
        checks.push(Check::at_least("slope of z3 slice energy", slope(&fits.vertical), VERTICAL_SLOPE));
        let worst = ok
            .windows(2)
            .map(|w| w[1].difference_final / w[0].difference_final)
            .fold(0.0_f64, f64::max);
        checks.push(Check::at_most(
            "difference growth toward thinner slabs",
            worst,
            1.0 + MONOTONE_BAND,
        ));
    }
    checks
}

/// Paired runs for every thickness of the sweep, run concurrently.
pub fn cmd_sweep_delta(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    let deltas = &cfg.sweep.deltas;
    if deltas.len() < 3 {
        return Err(Error::Config(format!("a sweep needs at least 3 thicknesses, got {}", deltas.len())));
    }
    for &d in deltas {
        cfg.initial_at(d).validate(&cfg.grid.spec(d))?;
    }
    let dir = cfg.run_dir();
    fs::create_dir_all(dir.join("plots"))?;
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let jobs: Vec<_> = deltas.iter().map(|&d| (d, s.spawn(move || run_member(cfg, d)))).collect();
        jobs.into_iter()
            .map(|(d, j)| match j.join() {
                Ok(Ok(row)) => row,
                Ok(Err(e)) => failed_row(d, &e),
                Err(_) => failed_row(d, &Error::Config("sweep member panicked".into())),
            })
            .collect()
    });

    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let xs: Vec<f64> = ok.iter().map(|r| r.delta).collect();
    let fits = SweepFits {
        difference: loglog_fit(&xs, &ok.iter().map(|r| r.difference_final).collect::<Vec<_>>()),
        vertical: loglog_fit(&xs, &ok.iter().map(|r| r.vertical_final).collect::<Vec<_>>()),
    };
    let checks = sweep_checks(cfg, &rows, &fits);
    let summary = SweepSummary {
        name: cfg.name.clone(),
        family: cfg.initial.family,
        eta_rule: cfg.sweep.eta_rule,
        max_order: cfg.diagnostics.max_order,
        rows,
        fits,
        checks,
    };

    let header: Vec<String> = [
        "delta",
        "eta",
        "steps",
        "failed",
        "wh_initial",
        "wh_final",
        "wh_ratio",
        "w3_scaled",
        "difference_final",
        "vertical_final",
        "relative_difference",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let table: Vec<Vec<String>> = summary
        .rows
        .iter()
        .map(|r| {
            vec![
                cell(r.delta),
                cell(r.eta),
                r.steps.to_string(),
                (r.failure.is_some() as u8).to_string(),
                cell(r.wh_initial),
                cell(r.wh_final),
                cell(r.wh_ratio),
                cell(r.w3_scaled),
                cell(r.difference_final),
                cell(r.vertical_final),
                cell(r.relative_difference),
            ]
        })
        .collect();
    write_csv(&dir.join("sweep.csv"), &header, &table)?;
    write_json(&dir.join("slopes.json"), &summary)?;
    fs::write(dir.join("plots").join("sweep_loglog.svg"), sweep_plot(&summary).render())?;
    Ok(summary)
}

/// Log-log plot of the difference energies against `δ` with fitted lines.
pub fn sweep_plot(s: &SweepSummary) -> Plot {
    let ok: Vec<&SweepRow> = s.rows.iter().filter(|r| r.failure.is_none()).collect();
    let mut series = vec![];
    let mut notes = vec![];
    for (label, get, fit) in [
        ("3D-2D difference", (|r: &SweepRow| r.difference_final) as fn(&SweepRow) -> f64, &s.fits.difference),
        ("z3 slice energy", |r: &SweepRow| r.vertical_final, &s.fits.vertical),
    ] {
        series.push(Series {
            label: label.into(),
            points: ok.iter().map(|r| (r.delta, get(r))).collect(),
            markers: true,
        });
        if let Some(f) = fit {
            series.push(Series {
                label: format!("{label} fit"),
                points: ok
                    .iter()
                    .map(|r| (r.delta, 10f64.powf(f.intercept + f.slope * r.delta.log10())))
                    .collect(),
                markers: false,
            });
            notes.push(format!("{label}: slope = {:.3} (R2 = {:.3})", f.slope, f.r2));
        }
    }
    Plot {
        title: format!("{}: thickness sweep", s.name),
        x_label: "delta".into(),
        y_label: "final energy".into(),
        log: true,
        series,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}
