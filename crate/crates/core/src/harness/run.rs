//! Single slab and planar runs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{cell, report, write_csv, write_json, Check};
use crate::diagnostics::{
    total_energy_functional, z3_gain_ratio, DerivativeIntegrals, EnergyReport, FluxAccumulator, Part,
};
use crate::error::Result;
use crate::fields::{make_initial, ElsasserState, InitialFamily};
use crate::grid::GridSpec;
use crate::integrator::{Integrator, StepRecord, Trajectory};
use crate::mhd2d::{trajectory_diagnostics, Integrator2D, State2D, Trajectory2D};
use crate::scaling::verify_norm_identities;
use crate::snapshot::{write_snapshot, write_snapshot_2d};
use crate::spectral::Spectral;

/// Drift of the unweighted energy allowed per unit time.
pub const DRIFT_PER_TIME: f64 = 1e-6;
pub const DIVERGENCE_LIMIT: f64 = 1e-10;
/// Growth allowed for the weighted energy functional over a run.
pub const FUNCTIONAL_GROWTH: f64 = 2.0;
pub const SCALING_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub max_order: usize,
    pub max_rel_err: f64,
    pub divergence_form_rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub dim: usize,
    pub delta: f64,
    pub grid: GridSpec<f64>,
    pub family: InitialFamily,
    pub t_final: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub energy_initial: f64,
    pub energy_drift: f64,
    pub energy_drift_per_time: f64,
    pub max_divergence: f64,
    /// Thickness-weighted total energy in 3D, summed horizontal weighted
    /// energies in 2D.
    pub functional_initial: f64,
    pub functional_final: f64,
    pub functional_ratio: f64,
    pub functional_sup_ratio: f64,
    pub failure: Option<String>,
    pub scaling_identities: Option<ScalingSummary>,
    pub checks: Vec<Check>,
}

/// Diagnostics of one snapshot, in series order.
struct Row {
    t: f64,
    energy: f64,
    divergence: f64,
    functional: f64,
    z3_gain: f64,
    /// `E±^(k,0)` for `k ≤ max_order`, `z₊` first.
    energy_k: Vec<f64>,
    flux_k: Vec<f64>,
}

fn series_header(max_order: usize) -> Vec<String> {
    let mut h: Vec<String> = ["dim", "t", "energy", "divergence", "functional", "z3_gain"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for q in ["E", "F"] {
        for s in ["p", "m"] {
            for k in 0..=max_order {
                h.push(format!("{q}{s}_{k}"));
            }
        }
    }
    h
}

fn series_rows(dim: usize, rows: &[Row]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![
                dim.to_string(),
                cell(r.t),
                cell(r.energy),
                cell(r.divergence),
                cell(r.functional),
                cell(r.z3_gain),
            ];
            v.extend(r.energy_k.iter().chain(&r.flux_k).map(|&x| cell(x)));
            v
        })
        .collect()
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    fs::create_dir_all(dir.join("plots"))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    cfg: &ExperimentConfig,
    dim: usize,
    spec: &GridSpec<f64>,
    log: &[StepRecord<f64>],
    rows: &[Row],
    drift: f64,
    failure: Option<String>,
    scaling: Option<ScalingSummary>,
) -> RunSummary {
    let first = &rows[0];
    let last = rows.last().expect("a run has its initial snapshot");
    let elapsed = last.t - first.t;
    let per_time = if elapsed > 0.0 { drift / elapsed } else { 0.0 };
    let max_div = log.iter().fold(0.0_f64, |m, r| m.max(r.divergence));
    let f0 = first.functional;
    let sup = rows.iter().fold(0.0_f64, |m, r| m.max(r.functional));
    let mut checks = vec![
        Check::at_most("energy drift per unit time", per_time, DRIFT_PER_TIME),
        Check::at_most("divergence residual", max_div, DIVERGENCE_LIMIT),
    ];
    if dim == 3 {
        checks.push(Check::at_most(
            "weighted functional ratio final/initial",
            ratio(last.functional, f0),
            FUNCTIONAL_GROWTH,
        ));
    } else {
        checks.push(Check::at_most(
            "weighted energy ratio sup/initial",
            ratio(sup, f0),
            FUNCTIONAL_GROWTH,
        ));
    }
    if let Some(s) = &scaling {
        checks.push(Check::at_most("rescaling identities", s.max_rel_err, SCALING_TOLERANCE));
    }
    checks.push(Check::at_most("run completed", if failure.is_some() { 1.0 } else { 0.0 }, 0.0));
    RunSummary {
        name: cfg.name.clone(),
        dim,
        delta: spec.delta,
        grid: spec.clone(),
        family: cfg.initial.family,
        t_final: last.t,
        steps: log.len() - 1,
        snapshots: rows.len(),
        energy_initial: first.energy,
        energy_drift: drift,
        energy_drift_per_time: per_time,
        max_divergence: max_div,
        functional_initial: f0,
        functional_final: last.functional,
        functional_ratio: ratio(last.functional, f0),
        functional_sup_ratio: ratio(sup, f0),
        failure,
        scaling_identities: scaling,
        checks,
    }
}

/// Slab diagnostics along a trajectory.
fn slab_rows(
    cfg: &ExperimentConfig,
    it: &Integrator<f64>,
    snapshots: &[ElsasserState<f64>],
) -> Result<Vec<Row>> {
    let sp = it.spectral();
    let spec = it.spec();
    let d = &cfg.diagnostics;
    let order = d.max_order.max(d.functional_top).max(crate::diagnostics::functional_orders(d.functional_top).2);
    let mut acc = FluxAccumulator::new(d.max_order);
    let mut rows = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let ints = DerivativeIntegrals::new(sp, s, order + 1);
        acc.push(&ints)?;
        let report = EnergyReport::from_integrals(&ints);
        let mut energy_k = vec![];
        let mut flux_k = vec![];
        for plus in [true, false] {
            for k in 0..=d.max_order {
                energy_k.push(report.get(plus, k, 0, Part::Full));
                flux_k.push(acc.get(plus, k, 0, Part::Full));
            }
        }
        let z3_gain = [true, false]
            .into_iter()
            .flat_map(|p| (0..d.max_order).map(move |k| (p, k)))
            .map(|(p, k)| z3_gain_ratio(&report, p, k, spec.delta))
            .fold(0.0_f64, f64::max);
        rows.push(Row {
            t: s.t,
            energy: s.energy(spec),
            divergence: it.divergence(s),
            functional: total_energy_functional(&report, spec.delta, d.functional_top),
            z3_gain,
            energy_k,
            flux_k,
        });
    }
    Ok(rows)
}

fn planar_rows(cfg: &ExperimentConfig, it: &Integrator2D<f64>, snapshots: &[State2D<f64>]) -> Vec<Row> {
    let max_order = cfg.diagnostics.max_order;
    let diag = trajectory_diagnostics(it.spectral(), snapshots, max_order);
    snapshots
        .iter()
        .map(|s| {
            let at: Vec<_> = diag.iter().filter(|r| r.t == s.t).collect();
            let energy_k: Vec<f64> = at.iter().map(|r| r.energy).collect();
            let flux_k: Vec<f64> = at.iter().map(|r| r.flux).collect();
            Row {
                t: s.t,
                energy: s.energy(it.spec()),
                divergence: it.divergence(s),
                functional: energy_k.iter().sum(),
                z3_gain: 0.0,
                energy_k,
                flux_k,
            }
        })
        .collect()
}

/// Slab run: trajectory, diagnostics and artifacts in `cfg.run_dir()`.
pub fn cmd_run3d(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dir = cfg.run_dir();
    prepare_dir(&dir)?;
    let spec = cfg.grid.spec(cfg.delta);
    let it = Integrator::new(&spec, cfg.stepper.clone())?;
    let init = make_initial(it.spectral(), &cfg.initial_at(cfg.delta))?;
    let scaling = verify_norm_identities(&init, it.spec(), cfg.diagnostics.max_order)?;
    let traj = it.run(init);
    let summary = write_slab_run(cfg, &it, &traj, &dir, Some(scaling))?;
    Ok(summary)
}

fn write_slab_run(
    cfg: &ExperimentConfig,
    it: &Integrator<f64>,
    traj: &Trajectory<f64>,
    dir: &Path,
    scaling: Option<crate::scaling::ScalingReport<f64>>,
) -> Result<RunSummary> {
    prepare_dir(dir)?;
    let rows = slab_rows(cfg, it, &traj.snapshots)?;
    write_csv(&dir.join("series.csv"), &series_header(cfg.diagnostics.max_order), &series_rows(3, &rows))?;
    traj.write_log(BufWriter::new(File::create(dir.join("run.log"))?))?;
    if cfg.diagnostics.snapshots {
        for (n, s) in traj.snapshots.iter().enumerate() {
            let f = File::create(dir.join("snapshots").join(format!("snap_{n:04}.bin")))?;
            write_snapshot(BufWriter::new(f), it.spec(), s)?;
        }
    }
    let scaling = scaling.map(|r| ScalingSummary {
        max_order: r.max_order,
        max_rel_err: r.max_rel_err,
        divergence_form_rel_err: r.divergence_form_rel_err,
    });
    let summary = summarize(
        cfg,
        3,
        it.spec(),
        &traj.log,
        &rows,
        traj.energy_drift(it.spec()),
        traj.failure.as_ref().map(|e| e.to_string()),
        scaling,
    );
    write_json(&dir.join("summary.json"), &summary)?;
    report::render_series_plots(dir)?;
    Ok(summary)
}

fn write_planar_run(
    cfg: &ExperimentConfig,
    it: &Integrator2D<f64>,
    traj: &Trajectory2D<f64>,
    dir: &Path,
) -> Result<RunSummary> {
    prepare_dir(dir)?;
    let rows = planar_rows(cfg, it, &traj.snapshots);
    write_csv(&dir.join("series.csv"), &series_header(cfg.diagnostics.max_order), &series_rows(2, &rows))?;
    traj.write_log(BufWriter::new(File::create(dir.join("run.log"))?))?;
    if cfg.diagnostics.snapshots {
        for (n, s) in traj.snapshots.iter().enumerate() {
            let f = File::create(dir.join("snapshots").join(format!("snap_{n:04}.bin")))?;
            write_snapshot_2d(BufWriter::new(f), it.spec(), s)?;
        }
    }
    let summary = summarize(
        cfg,
        2,
        it.spec(),
        &traj.log,
        &rows,
        traj.energy_drift(it.spec()),
        traj.failure.as_ref().map(|e| e.to_string()),
        None,
    );
    write_json(&dir.join("summary.json"), &summary)?;
    report::render_series_plots(dir)?;
    Ok(summary)
}

/// Planar initial data: the vertical mean of the configured slab data.
pub fn planar_initial(cfg: &ExperimentConfig, delta: f64) -> Result<State2D<f64>> {
    let spec = cfg.grid.spec(delta);
    let sp = Spectral::new(&spec)?;
    let init3 = make_initial(&sp, &cfg.initial_at(delta))?;
    Ok(State2D::from_slab_mean(&sp.grid, &init3))
}

/// Planar run of the vertical mean of the configured initial data.
pub fn cmd_run2d(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dir = cfg.run_dir();
    let spec = cfg.grid.spec(cfg.delta);
    let it = Integrator2D::new(&spec, cfg.stepper.clone())?;
    let init = planar_initial(cfg, cfg.delta)?;
    let traj = it.run(init);
    write_planar_run(cfg, &it, &traj, &dir)
}

pub(crate) fn write_pair(
    cfg: &ExperimentConfig,
    slab: (&Integrator<f64>, &Trajectory<f64>),
    planar: (&Integrator2D<f64>, &Trajectory2D<f64>),
    dir: &Path,
) -> Result<(RunSummary, RunSummary)> {
    let a = write_slab_run(cfg, slab.0, slab.1, &dir.join("slab"), None)?;
    let b = write_planar_run(cfg, planar.0, planar.1, &dir.join("planar"))?;
    Ok((a, b))
}
