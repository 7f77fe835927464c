//! Acceptance criteria, one line each.
//!
//! Runs with a custom harness: `cargo test --release --test acceptance`.
//! Extra arguments after `--` select criteria by substring. A criterion that
//! fails prints `FAIL` and makes the target exit nonzero unless it is listed
//! in [`KNOWN_FAILURES`]; `--strict` turns those into errors as well.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slabmhd::diagnostics::{
    centroid_x1, flux_surface_identity_check, mean_project, z3_gain_ratio, EnergyReport, Part,
};
use slabmhd::fields::{lift, make_initial, InitialFamily, InitialParams, VECTOR_PARITY};
use slabmhd::grid::{bracket, bracket_shift_constant, characteristic_coords, GridSpec, Parity, ScalarField};
use slabmhd::harness::config::EtaRule;
use slabmhd::harness::validate::{
    agreement_on, manufactured_poisson, measure_kernel_bound, measure_wall_derivative, KERNEL_BOUND,
    KERNEL_BOUND_SLACK,
};
use slabmhd::harness::{all_pass, sweep, ExperimentConfig};
use slabmhd::integrator::{Integrator, StepperConfig};
use slabmhd::mhd2d::{compare_3d_2d, run_paired, Integrator2D, State2D};
use slabmhd::pressure::solve_pressure;
use slabmhd::scaling::{rescale_from_unit, rescale_to_unit, verify_norm_identities};
use slabmhd::spectral::Spectral;
use slabmhd::Result;

/// Criteria whose stated constant is contradicted by the measurement.
const KNOWN_FAILURES: [&str; 1] = ["weight lemmas"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn kernel_bound() -> Result<Outcome> {
    let b = measure_kernel_bound(20_000, 1e-9, 11)?;
    let limit = KERNEL_BOUND * (1.0 + KERNEL_BOUND_SLACK);
    outcome(
        b.max_scaled <= limit,
        format!("max δ|x_h−y_h||∇G| = {:.6} over {} pairs, limit {limit:.6}", b.max_scaled, b.samples),
    )
}

fn neumann_condition() -> Result<Outcome> {
    let w = measure_wall_derivative(20_000, 1e-9, 12)?;
    let (residual, error) = manufactured_poisson(1.5, 0.3)?;
    let spec = GridSpec::new(4.0, 2.0, 0.5, 32, 16, 8);
    let sp = Spectral::new(&spec)?;
    let state = make_initial(&sp, &tube(0.3, 0.5))?;
    let p = solve_pressure(&sp, &state)?;
    let even = p.field.parity == Parity::Even;
    outcome(
        w.max_abs_d3 <= 1e-8 && residual <= 1e-9 && even,
        format!(
            "wall |∂₃G| = {:.2e}, manufactured residual {residual:.2e} (error {error:.2e}), pressure parity {}",
            w.max_abs_d3,
            p.field.parity.as_str()
        ),
    )
}

fn green_vs_spectral() -> Result<Outcome> {
    let cfg = ExperimentConfig::default();
    let coarse = agreement_on(&cfg, [16, 16, 8])?;
    let fine = agreement_on(&cfg, [32, 32, 16])?;
    outcome(
        coarse.max_rel_err <= 0.02 && fine.max_rel_err < coarse.max_rel_err,
        format!(
            "max relative error {:.3}% on 16×16×8, {:.3}% on 32×32×16",
            100.0 * coarse.max_rel_err,
            100.0 * fine.max_rel_err
        ),
    )
}

fn tube(eps: f64, width: f64) -> InitialParams<f64> {
    InitialParams {
        family: InitialFamily::Tube,
        eps,
        width,
        ..InitialParams::default()
    }
}

fn stepper(t_end: f64, cadence: f64) -> StepperConfig<f64> {
    StepperConfig {
        t_end,
        snapshot_cadence: cadence,
        ..StepperConfig::default()
    }
}

fn conservation() -> Result<Outcome> {
    let spec = GridSpec::new(8.0, 2.0, 0.1, 64, 16, 16).with_sigma(0.25);
    let it = Integrator::new(&spec, stepper(2.0, 0.25))?;
    let traj = it.run(make_initial(it.spectral(), &tube(1e-3, 1.0))?);
    if let Some(e) = &traj.failure {
        return outcome(false, format!("run failed: {e}"));
    }
    let drift = traj.energy_drift(&spec) / 2.0;
    let div = traj.log.iter().fold(0.0_f64, |m, r| m.max(r.divergence));
    let parity_ok = traj.snapshots.iter().all(|s| {
        [&s.zp, &s.zm]
            .iter()
            .all(|z| z.parities() == VECTOR_PARITY && z.c[2].max_abs_on_walls() == 0.0)
    });
    outcome(
        drift <= 1e-6 && div <= 1e-10 && parity_ok,
        format!(
            "energy drift {drift:.2e} per unit time, max divergence {div:.2e} over {} steps, parity kept: {parity_ok}",
            traj.log.len() - 1
        ),
    )
}

fn alfven_transport() -> Result<Outcome> {
    let spec = GridSpec::new(8.0, 2.0, 0.25, 128, 16, 8).with_sigma(0.25);
    let it = Integrator::new(&spec, stepper(2.0, 0.25))?;
    let p = InitialParams {
        eps: 1e-4,
        centers: [2.5, -2.5],
        ..tube(1e-4, 1.0)
    };
    let traj = it.run(make_initial(it.spectral(), &p)?);
    if let Some(e) = &traj.failure {
        return outcome(false, format!("run failed: {e}"));
    }
    let g = &it.spectral().grid;
    let (first, last) = (&traj.snapshots[0], traj.last());
    let span = last.t - first.t;
    let speed_p = (centroid_x1(g, &last.zp) - centroid_x1(g, &first.zp)) / span;
    let speed_m = (centroid_x1(g, &last.zm) - centroid_x1(g, &first.zm)) / span;
    let energy = |s| EnergyReport::new(it.spectral(), s, 0).get(true, 0, 0, Part::Full);
    let e0 = energy(first);
    let variation = traj
        .snapshots
        .iter()
        .map(|s| (energy(s) / e0 - 1.0).abs())
        .fold(0.0_f64, f64::max);
    let speeds_ok = (speed_p + 1.0).abs() <= 0.02 && (speed_m - 1.0).abs() <= 0.02;
    outcome(
        speeds_ok && variation <= 0.01,
        format!("centroid speeds {speed_p:+.4} / {speed_m:+.4}, weighted E₊ variation {:.3}%", 100.0 * variation),
    )
}

fn projection_identities() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for delta in [0.3, 0.05] {
        let spec = GridSpec::new(4.0, 2.0, delta, 32, 16, 16);
        let sp = Spectral::new(&spec)?;
        let g = &sp.grid;
        let s = make_initial(&sp, &InitialParams { mode: 2, ..tube(0.5, 0.7) })?;
        let mixed = ScalarField::from_fn(g, Parity::Even, |x, y, z| {
            (0.7 * x).sin() * (PI * y / 2.0).cos() * (1.0 + z * z / (delta * delta)) + (-x * x).exp() * z.powi(4)
        });
        for f in [&s.zp.c[0], &s.zm.c[1], &mixed] {
            let m = mean_project(g, f);
            let lifted = lift(&spec, &m, f.parity);
            let mm = mean_project(g, &lifted);
            worst = worst.max(m.axpy(-1.0, &mm).max_abs() / m.max_abs());
            let rest = f - &lifted;
            worst = worst.max(mean_project(g, &rest).max_abs() / f.max_abs());
        }
        for z in [&s.zp.c[2], &s.zm.c[2]] {
            let d3 = sp.derivative(z, 2);
            worst = worst.max(mean_project(g, &d3).max_abs() / d3.max_abs());
        }
    }
    outcome(worst <= 1e-12, format!("worst relative defect {worst:.2e}"))
}

fn rescaling_identities() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let mut round_trip = 0.0_f64;
    for delta in [0.2, 0.05] {
        let spec = GridSpec::new(4.0, 2.0, delta, 32, 16, 16).with_sigma(0.25);
        let sp = Spectral::new(&spec)?;
        for family in [InitialFamily::Tube, InitialFamily::Lifted2d] {
            let s = make_initial(&sp, &InitialParams { family, ..tube(0.1, 0.7) })?;
            let r = verify_norm_identities(&s, &spec, 4)?;
            worst = worst.max(r.max_rel_err);
            let (back, _) = rescale_from_unit(&rescale_to_unit(&s, &spec)?)?;
            round_trip = round_trip.max(back.zp.axpy(-1.0, &s.zp).max_abs() / s.zp.max_abs());
        }
    }
    outcome(
        worst <= 1e-12 && round_trip <= 1e-12,
        format!("worst identity error {worst:.2e} for k+l ≤ 4, round trip {round_trip:.2e}"),
    )
}

fn z3_gain() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for delta in [0.2, 0.1, 0.05, 0.025] {
        let spec = GridSpec::new(8.0, 2.0, delta, 64, 16, 16).with_sigma(0.25);
        let sp = Spectral::new(&spec)?;
        for family in [InitialFamily::Tube, InitialFamily::Lifted2d] {
            for mode in [1, 2] {
                for (width, ky) in [(0.5, 1), (1.0, 2)] {
                    let p = InitialParams {
                        family,
                        mode,
                        ky,
                        centers: [0.5, -0.7],
                        amplitudes: [1.0, 0.6],
                        ..tube(1e-2, width)
                    };
                    let rep = EnergyReport::new(&sp, &make_initial(&sp, &p)?, 4);
                    for plus in [true, false] {
                        for k in 0..4 {
                            worst = worst.max(z3_gain_ratio(&rep, plus, k, delta));
                            cases += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(worst <= 4.0, format!("max E(z³)/(δ·E(∇z^h)) = {worst:.4} over {cases} cases"))
}

fn sheet_equivalence() -> Result<Outcome> {
    let spec = GridSpec::new(8.0, 2.0, 0.1, 64, 16, 16).with_sigma(0.25);
    let cfg = stepper(1.0, 0.25);
    let slab = Integrator::new(&spec, cfg.clone())?;
    let planar = Integrator2D::new(&spec, cfg)?;
    let p = InitialParams {
        family: InitialFamily::Sheet,
        centers: [1.0, -1.0],
        ..tube(0.05, 1.0)
    };
    let init3 = make_initial(slab.spectral(), &p)?;
    let init2 = State2D::from_slab_mean(&slab.spectral().grid, &init3);
    let (t3, t2) = run_paired(&slab, &planar, init3, init2)?;
    let cmp = compare_3d_2d(planar.spectral(), &spec, &t3.snapshots, &t2.snapshots, 2)?;
    let rel = cmp.max_relative_difference();
    outcome(
        rel <= 1e-8 && t3.failure.is_none(),
        format!("max relative slice difference {rel:.2e} up to t = {}", t3.last().t),
    )
}

fn sweep_config(name: &str, rule: EtaRule, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.name = name.into();
    cfg.output_dir = dir.to_path_buf();
    cfg.initial.family = InitialFamily::Lifted2d;
    cfg.sweep.eta_rule = rule;
    cfg
}

fn sweep_line(s: &sweep::SweepSummary) -> String {
    s.checks.iter().map(|c| c.line()).collect::<Vec<_>>().join("; ")
}

fn uniform_fluctuation_bounds() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let s = sweep::cmd_sweep_delta(&sweep_config("fixed", EtaRule::Fixed, dir.path()))?;
    outcome(all_pass(&s.checks), sweep_line(&s))
}

fn thin_limit_rates() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let s = sweep::cmd_sweep_delta(&sweep_config("scaled", EtaRule::Delta, dir.path()))?;
    outcome(all_pass(&s.checks), sweep_line(&s))
}

fn flux_surface() -> Result<Outcome> {
    let spec = GridSpec::new(8.0, 2.0, 0.2, 64, 16, 8).with_sigma(0.25);
    let p = InitialParams {
        centers: [1.5, -1.5],
        ..tube(1e-3, 1.0)
    };
    let mut errs = vec![];
    for cadence in [0.1, 0.05] {
        let it = Integrator::new(&spec, stepper(1.0, cadence))?;
        let traj = it.run(make_initial(it.spectral(), &p)?);
        let mut worst = 0.0_f64;
        for plus in [true, false] {
            for alpha in [[0, 0, 0], [1, 0, 0], [0, 0, 1]] {
                let r = flux_surface_identity_check(it.spectral(), &traj.snapshots, plus, alpha)?;
                worst = worst.max(r.rel_diff);
            }
        }
        errs.push(worst);
    }
    // once both evaluations agree to roundoff there is nothing left to improve
    let improving = errs[1] < errs[0] || errs[1] <= 1e-9;
    outcome(
        errs[0] <= 0.02 && improving,
        format!("relative difference {:.2e} at cadence 0.1, {:.2e} at 0.05", errs[0], errs[1]),
    )
}

fn weight_lemmas() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 100_000;
    let u = |plus: bool, t: f64, x1: f64| {
        let (up, um) = characteristic_coords(t, x1);
        if plus {
            up
        } else {
            um
        }
    };
    let (mut near_bad, mut near_worst, mut far_bad, mut far_worst) = (0, 0.0_f64, 0, 0.0_f64);
    for _ in 0..n {
        let plus: bool = rng.gen();
        let t: f64 = rng.gen_range(0.0..10.0);
        let x1: f64 = rng.gen_range(-10.0..10.0);
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);

        let r = 2.0 * rng.gen::<f64>().sqrt();
        let ratio = bracket(u(plus, t, x1)) / bracket(u(plus, t, x1 + r * th.cos()));
        near_worst = near_worst.max(ratio);
        near_bad += (ratio > 5.0_f64.sqrt()) as usize;

        let d: f64 = rng.gen_range(1.0..20.0);
        let ratio = bracket(u(plus, t, x1)) / (d * bracket(u(plus, t, x1 + d * th.cos())));
        far_worst = far_worst.max(ratio);
        far_bad += (ratio > 3.0_f64.sqrt()) as usize;
    }
    outcome(
        near_bad == 0 && far_bad == 0,
        format!(
            "|x_h−y_h| ≤ 2: {near_bad} of {n} samples exceed √5 (max ratio {near_worst:.4}, sharp constant {:.4}); \
             |x_h−y_h| ≥ 1: {far_bad} of {n} exceed √3·|x_h−y_h| (max {far_worst:.4})",
            bracket_shift_constant(2.0)
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 13] = [
    ("kernel gradient bound", kernel_bound),
    ("neumann condition", neumann_condition),
    ("quadrature vs spectral pressure", green_vs_spectral),
    ("conservation and constraints", conservation),
    ("alfven transport and weights", alfven_transport),
    ("mean projection identities", projection_identities),
    ("rescaling identities", rescaling_identities),
    ("z3 gain", z3_gain),
    ("sheet data 3d vs 2d", sheet_equivalence),
    ("uniform fluctuation bounds", uniform_fluctuation_bounds),
    ("thin limit rates", thin_limit_rates),
    ("flux surface identity", flux_surface),
    ("weight lemmas", weight_lemmas),
];

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    let mut ran = 0;
    for (name, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = run().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass && (strict || !KNOWN_FAILURES.contains(&name)) {
            unexpected += 1;
        }
    }
    println!("{ran} criteria run, {unexpected} unexpected failures");
    if unexpected > 0 {
        std::process::exit(1);
    }
}
