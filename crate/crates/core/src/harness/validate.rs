//! Pressure validation: the kernel bound, the wall condition, a manufactured
//! Poisson problem, and quadrature against spectral pressure gradients.

use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{cell, write_csv, write_json, Check};
use crate::error::Result;
use crate::grid::{GridSpec, Parity, ScalarField};
use crate::pressure::{
    grad_pressure_spectral, grad_pressure_via_green, green_grad, poisson_residual, probe_state, solve_poisson,
};
use crate::spectral::Spectral;

/// `δ·|x_h − y_h|·|∇ₓG_δ| ≤ 3/16` for `|x_h − y_h| ≥ δ`.
pub const KERNEL_BOUND: f64 = 0.1875;
pub const KERNEL_BOUND_SLACK: f64 = 1e-3;
pub const WALL_LIMIT: f64 = 1e-8;
pub const MANUFACTURED_LIMIT: f64 = 1e-9;
pub const AGREEMENT_LIMIT: f64 = 0.02;

/// Sample points as fractions of `(lx, ly, δ)`, moved to the nearest node.
pub const PROBE_POINTS: [[f64; 3]; 6] = [
    [0.0, 0.0, 0.0],
    [0.125, -0.125, -0.25],
    [-0.125, 0.0, 0.25],
    [-0.25, 0.25, 0.0],
    [0.0, 0.0, -0.5],
    [0.25, 0.0, 0.0],
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundMeasurement {
    pub samples: usize,
    pub max_scaled: f64,
    pub worst_x: [f64; 3],
    pub worst_y: [f64; 3],
    pub worst_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallMeasurement {
    pub samples: usize,
    pub max_abs_d3: f64,
    pub max_tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub grid: [usize; 3],
    pub samples: Vec<[f64; 3]>,
    pub green: Vec<[f64; 3]>,
    pub spectral: Vec<[f64; 3]>,
    /// `|∇p_G − ∇p_S| / |∇p_S|` per sample.
    pub rel_err: Vec<f64>,
    pub max_rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureReport {
    pub bound: BoundMeasurement,
    pub wall: WallMeasurement,
    pub manufactured_residual: f64,
    pub manufactured_error: f64,
    pub agreement: Vec<AgreementRow>,
    pub checks: Vec<Check>,
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Largest `δ·|x_h − y_h|·|∇ₓG_δ(x, y)|` over random pairs with
/// `δ ∈ [0.05, 1]` and `|x_h − y_h| ∈ [δ, 30δ]`.
pub fn measure_kernel_bound(samples: usize, tol: f64, seed: u64) -> Result<BoundMeasurement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = BoundMeasurement {
        samples,
        max_scaled: 0.0,
        worst_x: [0.0; 3],
        worst_y: [0.0; 3],
        worst_delta: 0.0,
    };
    for _ in 0..samples {
        let d: f64 = rng.gen_range(0.05..=1.0);
        let r = d * 10f64.powf(rng.gen_range(0.0..1.5));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-d..=d)];
        let y = [x[0] + r * th.cos(), x[1] + r * th.sin(), rng.gen_range(-d..=d)];
        let e = green_grad(x, y, d, tol)?;
        let v = d * r * norm(e.value);
        if v > best.max_scaled {
            best = BoundMeasurement {
                max_scaled: v,
                worst_x: x,
                worst_y: y,
                worst_delta: d,
                ..best
            };
        }
    }
    Ok(best)
}

/// Largest `|∂₃G_δ|` with the evaluation point on either wall.
pub fn measure_wall_derivative(samples: usize, tol: f64, seed: u64) -> Result<WallMeasurement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = WallMeasurement {
        samples,
        max_abs_d3: 0.0,
        max_tail_bound: 0.0,
    };
    for n in 0..samples {
        let d: f64 = rng.gen_range(0.05..=1.0);
        let wall = if n % 2 == 0 { d } else { -d };
        let r = d * 10f64.powf(rng.gen_range(-1.5..1.5));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = [0.0, 0.0, wall];
        let y = [r * th.cos(), r * th.sin(), rng.gen_range(-d..=d)];
        let e = green_grad(x, y, d, tol)?;
        out.max_abs_d3 = out.max_abs_d3.max(e.value[2].abs());
        out.max_tail_bound = out.max_tail_bound.max(e.tail_bound);
    }
    Ok(out)
}

/// Relative residual and error of the spectral Neumann solve for a single
/// cosine mode.
pub fn manufactured_poisson(lx: f64, delta: f64) -> Result<(f64, f64)> {
    let sp = Spectral::new(&GridSpec::new(lx, 1.0, delta, 16, 8, 8))?;
    let a = std::f64::consts::PI / lx;
    let b = std::f64::consts::PI / delta;
    let exact = ScalarField::from_fn(&sp.grid, Parity::Even, |x, _, z| (a * x).cos() * (b * z).cos());
    let f = exact.scale(a * a + b * b);
    let p = solve_poisson(&sp, &f)?;
    Ok((poisson_residual(&sp, &p, &f), (&p - &exact).max_abs() / exact.max_abs()))
}

/// Quadrature against spectral pressure gradients for the probe state on one grid.
pub fn agreement_on(cfg: &ExperimentConfig, n: [usize; 3]) -> Result<AgreementRow> {
    let pc = &cfg.pressure;
    let spec = GridSpec::new(pc.lx, pc.ly, pc.delta, n[0], n[1], n[2]).with_dealias(false);
    let sp = Spectral::new(&spec)?;
    let state = probe_state(&sp, pc.probe_width, pc.probe_offset);
    let g = &sp.grid;
    let node = |f: f64, half: f64, count: usize| ((f * half + half) / (2.0 * half / count as f64)).round() as usize;
    let samples: Vec<[f64; 3]> = PROBE_POINTS
        .iter()
        .map(|p| {
            let i = node(p[0], pc.lx, n[0]) % n[0];
            let j = node(p[1], pc.ly, n[1]) % n[1];
            let k = node(p[2], pc.delta, n[2]).min(n[2]);
            [g.x1[i], g.x2[j], g.x3[k]]
        })
        .collect();
    let green = grad_pressure_via_green(&sp, &state, &samples, pc.tol)?;
    let spectral = grad_pressure_spectral(&sp, &state, &samples)?;
    let rel_err: Vec<f64> = green
        .iter()
        .zip(&spectral)
        .map(|(a, b)| norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]) / norm(*b))
        .collect();
    Ok(AgreementRow {
        grid: n,
        max_rel_err: rel_err.iter().cloned().fold(0.0, f64::max),
        samples,
        green,
        spectral,
        rel_err,
    })
}

pub fn pressure_report(cfg: &ExperimentConfig) -> Result<PressureReport> {
    let pc = &cfg.pressure;
    let bound = measure_kernel_bound(pc.samples, pc.tol, cfg.seed)?;
    let wall = measure_wall_derivative(pc.samples, pc.tol, cfg.seed.wrapping_add(1))?;
    let (manufactured_residual, manufactured_error) = manufactured_poisson(1.5, 0.3)?;
    let mut agreement = vec![];
    for lev in 0..pc.levels {
        let f = 1usize << lev;
        agreement.push(agreement_on(cfg, pc.grid.map(|n| n * f))?);
    }
    let mut checks = vec![
        Check::at_most(
            "scaled kernel gradient",
            bound.max_scaled,
            KERNEL_BOUND * (1.0 + KERNEL_BOUND_SLACK),
        ),
        Check::at_most("wall derivative of the kernel", wall.max_abs_d3, WALL_LIMIT),
        Check::at_most("manufactured Poisson residual", manufactured_residual, MANUFACTURED_LIMIT),
        Check::at_most(
            "quadrature vs spectral on the coarsest grid",
            agreement[0].max_rel_err,
            AGREEMENT_LIMIT,
        ),
    ];
    if agreement.len() > 1 {
        let worst = agreement
            .windows(2)
            .map(|w| w[1].max_rel_err / w[0].max_rel_err)
            .fold(0.0_f64, f64::max);
        checks.push(Check::at_most("error ratio under refinement", worst, 1.0));
    }
    Ok(PressureReport {
        bound,
        wall,
        manufactured_residual,
        manufactured_error,
        agreement,
        checks,
    })
}

pub fn cmd_validate_pressure(cfg: &ExperimentConfig) -> Result<PressureReport> {
    let report = pressure_report(cfg)?;
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("pressure.json"), &report)?;
    let header: Vec<String> = [
        "nx", "ny", "nz", "x1", "x2", "x3", "green1", "green2", "green3", "spectral1", "spectral2", "spectral3", "rel_err",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = vec![];
    for a in &report.agreement {
        for n in 0..a.samples.len() {
            let mut r: Vec<String> = a.grid.iter().map(|v| v.to_string()).collect();
            r.extend(a.samples[n].iter().chain(&a.green[n]).chain(&a.spectral[n]).map(|&v| cell(v)));
            r.push(cell(a.rel_err[n]));
            rows.push(r);
        }
    }
    write_csv(&dir.join("agreement.csv"), &header, &rows)?;
    Ok(report)
}
