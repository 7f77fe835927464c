//! The planar limit system on the horizontal torus and its comparison with
//! slab runs.
//!
//! `∂ₜz₊ − ∂₁z₊ + (z₋·∇)z₊ = −∇p`, `∂ₜz₋ + ∂₁z₋ + (z₊·∇)z₋ = −∇p` with
//! two-component divergence-free fields, and `−Δp = Σ ∂_α z₋^β ∂_β z₊^α`.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{horizontal_integrals, mean_project_h, slice, SliceEnergies};
use crate::error::{Error, Result};
use crate::fields::ElsasserState;
use crate::grid::{Grid, GridSpec};
use crate::integrator::{Integrator, StepRecord, StepperConfig, Trajectory, BLOW_UP_LIMIT};
use crate::scalar::Real;
use crate::spectral::{Cplx, Field2, Spectral2};

/// Horizontal Elsässer pair at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State2D<T> {
    pub zp: [Field2<T>; 2],
    pub zm: [Field2<T>; 2],
    pub t: T,
}

impl<T: Real> State2D<T> {
    pub fn zeros(spec: &GridSpec<T>) -> Self {
        let z = || [Field2::zeros(spec.nx, spec.ny), Field2::zeros(spec.nx, spec.ny)];
        Self {
            zp: z(),
            zm: z(),
            t: T::zero(),
        }
    }

    pub fn field(&self, plus: bool) -> &[Field2<T>; 2] {
        if plus {
            &self.zp
        } else {
            &self.zm
        }
    }

    pub fn max_abs(&self) -> T {
        self.zp
            .iter()
            .chain(&self.zm)
            .fold(T::zero(), |m, f| m.max(f.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.zp.iter().chain(&self.zm).all(|f| f.values.iter().all(|v| v.is_finite()))
    }

    /// `∫(|z₊|² + |z₋|²) dx_h`.
    pub fn energy(&self, spec: &GridSpec<T>) -> T {
        let sq: T = self
            .zp
            .iter()
            .chain(&self.zm)
            .map(|f| f.values.iter().fold(T::zero(), |a, &v| a + v * v))
            .fold(T::zero(), |a, v| a + v);
        sq * spec.dx() * spec.dy()
    }

    /// Vertical mean of the horizontal components of a slab state.
    pub fn from_slab_mean(grid: &Grid<T>, state: &ElsasserState<T>) -> Self {
        Self {
            zp: mean_project_h(grid, &state.zp),
            zm: mean_project_h(grid, &state.zm),
            t: state.t,
        }
    }

    /// Horizontal components of a slab state at one vertical level.
    pub fn from_slab_level(state: &ElsasserState<T>, level: usize) -> Self {
        Self {
            zp: [slice(&state.zp.c[0], level), slice(&state.zp.c[1], level)],
            zm: [slice(&state.zm.c[0], level), slice(&state.zm.c[1], level)],
            t: state.t,
        }
    }

    fn axpy(&self, a: T, d: &([Field2<T>; 2], [Field2<T>; 2])) -> Self {
        Self {
            zp: [self.zp[0].axpy(a, &d.0[0]), self.zp[1].axpy(a, &d.0[1])],
            zm: [self.zm[0].axpy(a, &d.1[0]), self.zm[1].axpy(a, &d.1[1])],
            t: self.t + a,
        }
    }
}

type Hats<T> = [Vec<Cplx<T>>; 2];
/// `grad[a][b] = ∂_b z^a`.
type Grad2<T> = [[Field2<T>; 2]; 2];

fn hats<T: Real>(sp2: &Spectral2<T>, z: &[Field2<T>; 2]) -> Hats<T> {
    let (a, b) = sp2.forward_pair(&z[0], &z[1]);
    [a, b]
}

fn gradient<T: Real>(sp2: &Spectral2<T>, h: &Hats<T>) -> Grad2<T> {
    std::array::from_fn(|a| {
        let (d1, d2) = sp2.inverse_pair(&sp2.deriv_hat(&h[a], [1, 0]), &sp2.deriv_hat(&h[a], [0, 1]));
        [d1, d2]
    })
}

fn source<T: Real>(gp: &Grad2<T>, gm: &Grad2<T>) -> Field2<T> {
    let mut out = Field2::zeros(gp[0][0].nx, gp[0][0].ny);
    for a in 0..2 {
        for b in 0..2 {
            // ∂_α z₋^β ∂_β z₊^α
            let (u, v) = (&gm[b][a].values, &gp[a][b].values);
            for n in 0..out.values.len() {
                out.values[n] = out.values[n] + u[n] * v[n];
            }
        }
    }
    out
}

fn project<T: Real>(sp2: &Spectral2<T>, h: &mut Hats<T>) {
    let [a, b] = h;
    for flat in 0..a.len() {
        let k = sp2.kvec(flat);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == T::zero() {
            continue;
        }
        let d = (a[flat] * k[0] + b[flat] * k[1]) / k2;
        a[flat] = a[flat] - d * k[0];
        b[flat] = b[flat] - d * k[1];
    }
}

/// Relative spectral divergence `‖∇·z‖∞ / ‖∇z‖∞` of a horizontal field.
pub fn divergence_residual_2d<T: Real>(sp2: &Spectral2<T>, z: &[Field2<T>; 2]) -> T {
    let h = hats(sp2, z);
    let g = gradient(sp2, &h);
    let div = g[0][0].axpy(T::one(), &g[1][1]);
    let scale = g.iter().flatten().fold(T::zero(), |m, f| m.max(f.max_abs()));
    if scale == T::zero() {
        T::zero()
    } else {
        div.max_abs() / scale
    }
}

/// Dealiased spectrum of `Σ ∂_α z₋^β ∂_β z₊^α`.
pub fn pressure_source_2d<T: Real>(sp2: &Spectral2<T>, state: &State2D<T>) -> Vec<Cplx<T>> {
    let gp = gradient(sp2, &hats(sp2, &state.zp));
    let gm = gradient(sp2, &hats(sp2, &state.zm));
    let mut hat = sp2.forward(&source(&gp, &gm));
    sp2.dealias(&mut hat);
    hat
}

/// Zero-mean pressure of a horizontal state.
pub fn solve_pressure_2d<T: Real>(sp2: &Spectral2<T>, state: &State2D<T>) -> Field2<T> {
    sp2.inverse(&sp2.inverse_laplacian_hat(&pressure_source_2d(sp2, state)))
}

/// `∇p` at arbitrary points by direct quadrature of the planar logarithmic
/// kernel, `∇p(x) = −(1/2π) Σ_y (x−y)/|x−y|² f(y) ΔA`, with nearest-image
/// distances on the torus. The source is spectrally resampled on a grid
/// `refine` times finer. Samples should be grid nodes; elsewhere the punctured
/// sum is only first-order accurate.
pub fn grad_pressure_log_kernel<T: Real>(
    sp2: &Spectral2<T>,
    state: &State2D<T>,
    samples: &[[T; 2]],
    refine: usize,
) -> Result<Vec<[T; 2]>> {
    if refine == 0 {
        return Err(Error::Config("refinement factor must be positive".into()));
    }
    let spec = sp2.spec();
    let fine_spec = GridSpec {
        nx: spec.nx * refine,
        ny: spec.ny * refine,
        ..spec.clone()
    };
    let fine = Spectral2::new(&fine_spec)?;
    let coarse = pressure_source_2d(sp2, state);
    let mut padded = vec![Cplx::new(T::zero(), T::zero()); fine.len()];
    let (nx, ny) = (spec.nx as isize, spec.ny as isize);
    let (fx, fy) = (fine_spec.nx as isize, fine_spec.ny as isize);
    let scale = T::from_count(refine * refine);
    for (flat, &v) in coarse.iter().enumerate() {
        let i = crate::grid::fft_index(flat / spec.ny, spec.nx);
        let j = crate::grid::fft_index(flat % spec.ny, spec.ny);
        if 2 * i.abs() == nx || 2 * j.abs() == ny {
            continue;
        }
        let fi = i.rem_euclid(fx) as usize;
        let fj = j.rem_euclid(fy) as usize;
        padded[fi * fine_spec.ny + fj] = v * scale;
    }
    let f = fine.inverse(&padded);

    let (px, py) = (T::lit(2.0) * spec.lx, T::lit(2.0) * spec.ly);
    let wrap = |d: T, p: T| d - p * (d / p).round();
    let area = fine_spec.dx() * fine_spec.dy();
    let c = -area / (T::lit(2.0) * T::PI());
    let half_x = spec.lx * (T::one() - T::lit(1e-12));
    let half_y = spec.ly * (T::one() - T::lit(1e-12));
    let mut out = Vec::with_capacity(samples.len());
    for x in samples {
        // the kernel integrates to zero over the torus cell centred at x,
        // so subtracting f(x) leaves a bounded integrand
        let fx = eval_at(&fine, &padded, *x);
        let mut g = [T::zero(); 2];
        for (i, &y1) in fine.grid.x1.iter().enumerate() {
            let d1 = wrap(x[0] - y1, px);
            for (j, &y2) in fine.grid.x2.iter().enumerate() {
                let d2 = wrap(x[1] - y2, py);
                let r2 = d1 * d1 + d2 * d2;
                if r2 == T::zero() {
                    continue;
                }
                let w = (f.values[i * fine_spec.ny + j] - fx) / r2;
                // an antipodal node sits at ±L with equal weight
                let a1 = if d1.abs() >= half_x { T::zero() } else { d1 };
                let a2 = if d2.abs() >= half_y { T::zero() } else { d2 };
                g[0] = g[0] + a1 * w;
                g[1] = g[1] + a2 * w;
            }
        }
        out.push([c * g[0], c * g[1]]);
    }
    Ok(out)
}

/// `∇p` at arbitrary points from the spectral pressure.
pub fn grad_pressure_spectral_2d<T: Real>(sp2: &Spectral2<T>, state: &State2D<T>, samples: &[[T; 2]]) -> Vec<[T; 2]> {
    let p_hat = sp2.inverse_laplacian_hat(&pressure_source_2d(sp2, state));
    let d = [sp2.deriv_hat(&p_hat, [1, 0]), sp2.deriv_hat(&p_hat, [0, 1])];
    samples.iter().map(|&x| [eval_at(sp2, &d[0], x), eval_at(sp2, &d[1], x)]).collect()
}

fn eval_at<T: Real>(sp2: &Spectral2<T>, hat: &[Cplx<T>], x: [T; 2]) -> T {
    let g = &sp2.grid;
    let phase = |k: &[T], x: T, x0: T| -> Vec<Cplx<T>> {
        k.iter().map(|&k| Cplx::from_polar(T::one(), k * (x - x0))).collect()
    };
    let e1 = phase(&g.k1, x[0], g.x1[0]);
    let e2 = phase(&g.k2, x[1], g.x2[0]);
    let ny = g.x2.len();
    let mut acc = Cplx::new(T::zero(), T::zero());
    for (i, &a) in e1.iter().enumerate() {
        let mut row = Cplx::new(T::zero(), T::zero());
        for (j, &b) in e2.iter().enumerate() {
            row = row + hat[i * ny + j] * b;
        }
        acc = acc + row * a;
    }
    acc.re / T::from_count(sp2.len())
}

/// Output of [`Integrator2D::run`].
#[derive(Debug)]
pub struct Trajectory2D<T> {
    pub snapshots: Vec<State2D<T>>,
    pub log: Vec<StepRecord<T>>,
    pub failure: Option<Error>,
}

impl<T: Real> Trajectory2D<T> {
    pub fn last(&self) -> &State2D<T> {
        self.snapshots.last().expect("a trajectory holds its initial state")
    }

    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn write_log(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# step t dt energy divergence")?;
        for r in &self.log {
            writeln!(w, "{} {:.12e} {:.12e} {:.16e} {:.6e}", r.step, r.t, r.dt, r.energy, r.divergence)?;
        }
        if let Some(e) = &self.failure {
            writeln!(w, "# aborted: {e}")?;
        }
        Ok(())
    }

    pub fn energy_drift(&self, spec: &GridSpec<T>) -> T {
        let e0 = self.snapshots[0].energy(spec);
        let worst = self.log.iter().fold(T::zero(), |m, r| m.max((r.energy - e0).abs()));
        if e0 == T::zero() {
            worst
        } else {
            worst / e0
        }
    }
}

/// Horizontal weighted energies and accumulated fluxes along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics2D<T> {
    pub t: T,
    pub plus: bool,
    pub k: usize,
    pub energy: T,
    /// Trapezoid time integral of the flux density up to `t`.
    pub flux: T,
}

/// `E±,h^(k)` at every snapshot and `F±,h^(k)` accumulated between them.
pub fn trajectory_diagnostics<T: Real>(
    sp2: &Spectral2<T>,
    snapshots: &[State2D<T>],
    max_order: usize,
) -> Vec<Diagnostics2D<T>> {
    let mut out = Vec::new();
    let mut prev: Vec<(T, T)> = Vec::new();
    let mut flux = vec![T::zero(); 2 * (max_order + 1)];
    for (n, s) in snapshots.iter().enumerate() {
        let mut row = Vec::with_capacity(flux.len());
        for (slot, (plus, k)) in [true, false]
            .into_iter()
            .flat_map(|p| (0..=max_order).map(move |k| (p, k)))
            .enumerate()
        {
            let (e, fd) = horizontal_integrals(sp2, s.field(plus), plus, k, s.t);
            if n > 0 {
                let dt = s.t - snapshots[n - 1].t;
                flux[slot] = flux[slot] + T::lit(0.5) * dt * (fd + prev[slot].1);
            }
            out.push(Diagnostics2D {
                t: s.t,
                plus,
                k,
                energy: e,
                flux: flux[slot],
            });
            row.push((e, fd));
        }
        prev = row;
    }
    out
}

/// Stepper for the planar system.
pub struct Integrator2D<T: Real> {
    sp2: Spectral2<T>,
    pub config: StepperConfig<T>,
}

impl<T: Real> Integrator2D<T> {
    pub fn new(spec: &GridSpec<T>, config: StepperConfig<T>) -> Result<Self> {
        config.validate()?;
        let sp2 = Spectral2::new(&spec.clone().with_dealias(config.dealias))?;
        Ok(Self { sp2, config })
    }

    pub fn spectral(&self) -> &Spectral2<T> {
        &self.sp2
    }

    pub fn spec(&self) -> &GridSpec<T> {
        self.sp2.spec()
    }

    pub fn rhs(&self, state: &State2D<T>) -> ([Field2<T>; 2], [Field2<T>; 2]) {
        let sp2 = &self.sp2;
        let hp = hats(sp2, &state.zp);
        let hm = hats(sp2, &state.zm);
        let gp = gradient(sp2, &hp);
        let gm = gradient(sp2, &hm);
        let advect = |u: &[Field2<T>; 2], g: &[Field2<T>; 2]| u[0].product(&g[0]).axpy(T::one(), &u[1].product(&g[1]));
        let h = |f: Field2<T>| {
            let mut hat = sp2.forward(&f);
            sp2.dealias(&mut hat);
            hat
        };
        let ap = [h(advect(&state.zm, &gp[0])), h(advect(&state.zm, &gp[1]))];
        let am = [h(advect(&state.zp, &gm[0])), h(advect(&state.zp, &gm[1]))];
        let p_hat = sp2.inverse_laplacian_hat(&h(source(&gp, &gm)));
        let dp = [sp2.deriv_hat(&p_hat, [1, 0]), sp2.deriv_hat(&p_hat, [0, 1])];
        let assemble = |z: &Hats<T>, adv: &[Vec<Cplx<T>>; 2], sign: T| {
            let mut out: Hats<T> = std::array::from_fn(|a| {
                sp2.deriv_hat(&z[a], [1, 0])
                    .iter()
                    .zip(&adv[a])
                    .zip(&dp[a])
                    .map(|((&d, &b), &c)| d * sign - b - c)
                    .collect()
            });
            project(sp2, &mut out);
            let (u, v) = sp2.inverse_pair(&out[0], &out[1]);
            [u, v]
        };
        (assemble(&hp, &ap, T::one()), assemble(&hm, &am, -T::one()))
    }

    /// Courant-limited step `cfl·min(Δx,Δy)/(1 + max‖z±‖∞)`.
    pub fn max_dt(&self, state: &State2D<T>) -> T {
        let s = self.spec();
        self.config.cfl * s.dx().min(s.dy()) / (T::one() + state.max_abs())
    }

    fn project_state(&self, z: &[Field2<T>; 2]) -> [Field2<T>; 2] {
        let mut h = hats(&self.sp2, z);
        project(&self.sp2, &mut h);
        let (u, v) = self.sp2.inverse_pair(&h[0], &h[1]);
        [u, v]
    }

    pub fn step(&self, state: &State2D<T>, dt: T) -> Result<State2D<T>> {
        let half = T::lit(0.5) * dt;
        let k1 = self.rhs(state);
        let k2 = self.rhs(&state.axpy(half, &k1));
        let k3 = self.rhs(&state.axpy(half, &k2));
        let k4 = self.rhs(&state.axpy(dt, &k3));
        let w = dt / T::lit(6.0);
        let two = T::lit(2.0) * w;
        let combine = |base: &Field2<T>, p: [&Field2<T>; 4]| base.axpy(w, p[0]).axpy(two, p[1]).axpy(two, p[2]).axpy(w, p[3]);
        let zp: [Field2<T>; 2] =
            std::array::from_fn(|a| combine(&state.zp[a], [&k1.0[a], &k2.0[a], &k3.0[a], &k4.0[a]]));
        let zm: [Field2<T>; 2] =
            std::array::from_fn(|a| combine(&state.zm[a], [&k1.1[a], &k2.1[a], &k3.1[a], &k4.1[a]]));
        let next = State2D {
            zp: self.project_state(&zp),
            zm: self.project_state(&zm),
            t: state.t + dt,
        };
        guard(&next)?;
        Ok(next)
    }

    pub fn divergence(&self, state: &State2D<T>) -> T {
        divergence_residual_2d(&self.sp2, &state.zp).max(divergence_residual_2d(&self.sp2, &state.zm))
    }

    fn record(&self, step: usize, dt: T, s: &State2D<T>) -> StepRecord<T> {
        StepRecord {
            step,
            t: s.t,
            dt,
            energy: s.energy(self.spec()),
            divergence: self.divergence(s),
        }
    }

    /// Advance to `t_end`, landing exactly on every snapshot time.
    pub fn run(&self, init: State2D<T>) -> Trajectory2D<T> {
        let cfg = &self.config;
        if cfg.t_end > T::lit(0.5) * self.spec().lx {
            warn!("t_end = {} exceeds half the horizontal half-period; packets may wrap around", cfg.t_end);
        }
        let mut traj = Trajectory2D {
            log: vec![self.record(0, T::zero(), &init)],
            snapshots: vec![],
            failure: None,
        };
        if let Err(e) = guard(&init) {
            traj.snapshots.push(init);
            traj.failure = Some(e);
            return traj;
        }
        let schedule = Schedule::new(cfg, init.t);
        let mut state = init.clone();
        traj.snapshots.push(init);
        let mut step = 0;
        while let Some(target) = schedule.target(state.t, traj.snapshots.len()) {
            let dt = self.max_dt(&state).min(target - state.t);
            match self.step(&state, dt) {
                Ok(mut s) => {
                    step += 1;
                    let landed = schedule.snap(&mut s.t, target);
                    traj.log.push(self.record(step, dt, &s));
                    state = s;
                    if landed {
                        traj.snapshots.push(state.clone());
                    }
                }
                Err(e) => {
                    if traj.last().t != state.t {
                        traj.snapshots.push(state.clone());
                    }
                    traj.failure = Some(e);
                    break;
                }
            }
        }
        traj
    }
}

struct Schedule<T> {
    t0: T,
    t_end: T,
    cadence: T,
    tiny: T,
}

impl<T: Real> Schedule<T> {
    fn new(cfg: &StepperConfig<T>, t0: T) -> Self {
        let t_end = t0 + cfg.t_end;
        Self {
            t0,
            t_end,
            cadence: cfg.snapshot_cadence,
            tiny: T::lit(1e-12) * (T::one() + t_end.abs()),
        }
    }

    /// Next snapshot time given the number of snapshots stored so far.
    fn target(&self, t: T, stored: usize) -> Option<T> {
        if t >= self.t_end - self.tiny {
            return None;
        }
        Some((self.t0 + self.cadence * T::from_count(stored)).min(self.t_end))
    }

    fn snap(&self, t: &mut T, target: T) -> bool {
        if (*t - target).abs() <= self.tiny {
            *t = target;
        }
        *t == target
    }
}

fn guard<T: Real>(s: &State2D<T>) -> Result<()> {
    let t = s.t.to_f64_lossy();
    if !s.is_finite() {
        return Err(Error::BlowUp {
            t,
            reason: "non-finite field value".into(),
        });
    }
    let m = s.max_abs();
    if m > T::lit(BLOW_UP_LIMIT) {
        return Err(Error::BlowUp {
            t,
            reason: format!("field magnitude {m} exceeds {BLOW_UP_LIMIT:e}"),
        });
    }
    Ok(())
}

/// Run a slab state and a planar state side by side with a shared step
/// sequence and shared snapshot times. Both steppers use the slab
/// integrator's configuration.
pub fn run_paired<T: Real>(
    slab: &Integrator<T>,
    planar: &Integrator2D<T>,
    init3: ElsasserState<T>,
    init2: State2D<T>,
) -> Result<(Trajectory<T>, Trajectory2D<T>)> {
    if !slab.spec().same_horizontal(planar.spec()) {
        return Err(Error::ShapeMismatch("paired runs need identical horizontal grids".into()));
    }
    if init3.t != init2.t {
        return Err(Error::ShapeMismatch("paired runs must start at the same time".into()));
    }
    let spec3 = slab.spec().clone();
    let mut t3 = Trajectory {
        log: vec![StepRecord {
            step: 0,
            t: init3.t,
            dt: T::zero(),
            energy: init3.energy(&spec3),
            divergence: slab.divergence(&init3),
        }],
        snapshots: vec![init3.clone()],
        failure: None,
    };
    let mut t2 = Trajectory2D {
        log: vec![planar.record(0, T::zero(), &init2)],
        snapshots: vec![init2.clone()],
        failure: None,
    };
    let schedule = Schedule::new(&slab.config, init3.t);
    let (mut s3, mut s2) = (init3, init2);
    let mut step = 0;
    while let Some(target) = schedule.target(s3.t, t3.snapshots.len()) {
        let dt = slab.max_dt(&s3).min(planar.max_dt(&s2)).min(target - s3.t);
        let next = slab.step(&s3, dt).and_then(|a| planar.step(&s2, dt).map(|b| (a, b)));
        match next {
            Ok((mut a, mut b)) => {
                step += 1;
                let landed = schedule.snap(&mut a.t, target);
                b.t = a.t;
                t3.log.push(StepRecord {
                    step,
                    t: a.t,
                    dt,
                    energy: a.energy(&spec3),
                    divergence: slab.divergence(&a),
                });
                t2.log.push(planar.record(step, dt, &b));
                s3 = a;
                s2 = b;
                if landed {
                    t3.snapshots.push(s3.clone());
                    t2.snapshots.push(s2.clone());
                }
            }
            Err(e) => {
                if t3.last().t != s3.t {
                    t3.snapshots.push(s3.clone());
                    t2.snapshots.push(s2.clone());
                }
                t3.failure = Some(e);
                break;
            }
        }
    }
    Ok((t3, t2))
}

/// Per-snapshot, per-sign, per-order slice comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceComparison<T> {
    pub t: T,
    pub plus: bool,
    pub k: usize,
    /// `E±,h^(k)(z^h(·,x₃) − z₀^h)` per level.
    pub difference: SliceEnergies<T>,
    /// `E±,h^(k)(z³(·,x₃)/δ)` per level.
    pub vertical: SliceEnergies<T>,
    /// `E±,h^(k)(z₀^h)`, the scale for relative statements.
    pub reference: T,
}

impl<T: Real> SliceComparison<T> {
    pub fn relative_difference(&self) -> T {
        if self.reference == T::zero() {
            self.difference.sup
        } else {
            self.difference.sup / self.reference
        }
    }
}

/// Slab-versus-planar comparison over a pair of trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison3d2d<T> {
    pub delta: T,
    pub max_order: usize,
    pub rows: Vec<SliceComparison<T>>,
}

impl<T: Real> Comparison3d2d<T> {
    fn at_last(&self, f: impl Fn(&SliceComparison<T>) -> T) -> T {
        let Some(last) = self.rows.last().map(|r| r.t) else {
            return T::zero();
        };
        self.rows.iter().filter(|r| r.t == last).fold(T::zero(), |a, r| a + f(r))
    }

    /// Sum over signs and orders of the sup-slice difference at the final time.
    pub fn final_difference(&self) -> T {
        self.at_last(|r| r.difference.sup)
    }

    /// Sum over signs and orders of the sup-slice vertical energy at the final time.
    pub fn final_vertical(&self) -> T {
        self.at_last(|r| r.vertical.sup)
    }

    /// Largest relative difference over all rows.
    pub fn max_relative_difference(&self) -> T {
        self.rows.iter().fold(T::zero(), |m, r| m.max(r.relative_difference()))
    }
}

pub fn compare_3d_2d<T: Real>(
    sp2: &Spectral2<T>,
    spec3: &GridSpec<T>,
    slab: &[ElsasserState<T>],
    planar: &[State2D<T>],
    max_order: usize,
) -> Result<Comparison3d2d<T>> {
    if !spec3.same_horizontal(sp2.spec()) {
        return Err(Error::ShapeMismatch("slab and planar grids differ horizontally".into()));
    }
    if slab.len() != planar.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} slab snapshots against {} planar snapshots",
            slab.len(),
            planar.len()
        )));
    }
    let inv_delta = T::one() / spec3.delta;
    let mut rows = Vec::new();
    for (s3, s2) in slab.iter().zip(planar) {
        if s3.t != s2.t {
            return Err(Error::ShapeMismatch(format!("snapshot times {} and {} differ", s3.t, s2.t)));
        }
        if s3.zp.c[0].nx != spec3.nx || s3.zp.c[0].nz != spec3.nz {
            return Err(Error::ShapeMismatch("slab snapshot does not match its grid".into()));
        }
        for plus in [true, false] {
            let z3 = s3.field(plus);
            let z2 = s2.field(plus);
            let levels: Vec<([Field2<T>; 2], Field2<T>)> = (0..spec3.nzp())
                .map(|lev| {
                    let d = [
                        slice(&z3.c[0], lev).axpy(-T::one(), &z2[0]),
                        slice(&z3.c[1], lev).axpy(-T::one(), &z2[1]),
                    ];
                    (d, slice(&z3.c[2], lev).scale(inv_delta))
                })
                .collect();
            for k in 0..=max_order {
                let energies = |f: &dyn Fn(&([Field2<T>; 2], Field2<T>)) -> T| {
                    let per_level: Vec<T> = levels.iter().map(f).collect();
                    let sup = per_level.iter().fold(T::zero(), |m, &v| m.max(v));
                    SliceEnergies { per_level, sup }
                };
                let difference = energies(&|l| horizontal_integrals(sp2, &l.0, plus, k, s3.t).0);
                let vertical = energies(&|l| horizontal_integrals(sp2, std::slice::from_ref(&l.1), plus, k, s3.t).0);
                rows.push(SliceComparison {
                    t: s3.t,
                    plus,
                    k,
                    difference,
                    vertical,
                    reference: horizontal_integrals(sp2, z2, plus, k, s3.t).0,
                });
            }
        }
    }
    Ok(Comparison3d2d {
        delta: spec3.delta,
        max_order,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_initial, sheet_2d, InitialFamily, InitialParams};
    use crate::pressure::solve_pressure;
    use crate::spectral::Spectral;

    fn spec() -> GridSpec<f64> {
        GridSpec::new(4.0, 2.0, 0.2, 32, 16, 4)
    }

    fn sheet_state(sp2: &Spectral2<f64>, eps: f64, centers: [f64; 2]) -> State2D<f64> {
        let p = InitialParams {
            eps,
            centers,
            width: 0.5,
            ..InitialParams::default()
        };
        let [zp, zm] = sheet_2d(sp2, &p);
        State2D { zp, zm, t: 0.0 }
    }

    fn integrator(spec: &GridSpec<f64>, t_end: f64) -> Integrator2D<f64> {
        let cfg = StepperConfig {
            t_end,
            snapshot_cadence: 0.5,
            ..StepperConfig::default()
        };
        Integrator2D::new(spec, cfg).unwrap()
    }

    #[test]
    fn one_field_zero_gives_no_pressure() {
        let sp2 = Spectral2::new(&spec()).unwrap();
        let mut s = sheet_state(&sp2, 0.1, [-1.0, 1.0]);
        s.zm = [Field2::zeros(32, 16), Field2::zeros(32, 16)];
        assert_eq!(solve_pressure_2d(&sp2, &s).max_abs(), 0.0);
    }

    #[test]
    fn manufactured_pressure_is_recovered() {
        // z₊ = (sin x₂, 0), z₋ = (0, sin x₁) gives Σ∂_α z₋^β ∂_β z₊^α = cos x₁ cos x₂,
        // so p = cos x₁ cos x₂ / 2.
        let spec = GridSpec::new(std::f64::consts::PI, std::f64::consts::PI, 0.5, 16, 16, 4);
        let sp2 = Spectral2::new(&spec).unwrap();
        let z = |f: fn(f64, f64) -> f64| Field2::from_fn(&sp2.grid, f);
        let s = State2D {
            zp: [z(|_, y| y.sin()), Field2::zeros(16, 16)],
            zm: [Field2::zeros(16, 16), z(|x, _| x.sin())],
            t: 0.0,
        };
        let p = solve_pressure_2d(&sp2, &s);
        let exact = z(|x, y| 0.5 * x.cos() * y.cos());
        let err = p.axpy(-1.0, &exact).max_abs() / exact.max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn matches_slab_pressure_on_height_independent_data() {
        let sp = Spectral::new(&spec()).unwrap();
        let p = InitialParams {
            eps: 0.2,
            centers: [-1.0, 0.5],
            width: 0.5,
            ..InitialParams::default()
        };
        let s3 = make_initial(&sp, &p).unwrap();
        let sp2 = Spectral2::new(&spec()).unwrap();
        let s2 = State2D::from_slab_level(&s3, 0);
        let p2 = solve_pressure_2d(&sp2, &s2);
        let p3 = solve_pressure(&sp, &s3).unwrap().field;
        for lev in 0..=spec().nz {
            let err = slice(&p3, lev).axpy(-1.0, &p2).max_abs() / p2.max_abs();
            assert!(err < 1e-9, "level {lev}: {err}");
        }
    }

    #[test]
    fn log_kernel_agrees_with_spectral_gradient() {
        let spec = GridSpec::new(6.0, 6.0, 0.5, 64, 64, 4);
        let sp2 = Spectral2::new(&spec).unwrap();
        let bump = |cx: f64, cy: f64| {
            // ∇⊥ of a Gaussian stream function
            let u = Field2::from_fn(&sp2.grid, move |x, y| {
                -2.0 * (y - cy) * (-(x - cx).powi(2) - (y - cy).powi(2)).exp()
            });
            let v = Field2::from_fn(&sp2.grid, move |x, y| {
                2.0 * (x - cx) * (-(x - cx).powi(2) - (y - cy).powi(2)).exp()
            });
            [u, v]
        };
        let s = State2D {
            zp: bump(-0.5, 0.0),
            zm: bump(0.5, 0.3),
            t: 0.0,
        };
        // grid nodes, where the punctured trapezoid sum is symmetric
        let node = |i: usize, j: usize| [sp2.grid.x1[i], sp2.grid.x2[j]];
        let samples = [node(32, 32), node(34, 30), node(27, 36), node(38, 33)];
        let spectral = grad_pressure_spectral_2d(&sp2, &s, &samples);
        let kernel = grad_pressure_log_kernel(&sp2, &s, &samples, 4).unwrap();
        let scale = spectral.iter().fold(0.0_f64, |m, g| m.max(g[0].hypot(g[1])));
        for (a, b) in kernel.iter().zip(&spectral) {
            let err = (a[0] - b[0]).hypot(a[1] - b[1]) / scale;
            assert!(err < 0.01, "{a:?} vs {b:?}: {err}");
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let it = integrator(&spec(), 0.5);
        let traj = it.run(State2D::zeros(&spec()));
        assert!(traj.failure.is_none());
        assert!(traj.snapshots.iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn energy_is_conserved() {
        // RK4 damps a mode of frequency ω by (ω dt)⁶/144 per step, so the
        // Courant factor is lowered to keep that below the tolerance
        let spec = GridSpec::new(8.0, 2.0, 0.2, 64, 16, 4);
        let cfg = StepperConfig {
            cfl: 0.25,
            t_end: 2.0,
            ..StepperConfig::default()
        };
        let it = Integrator2D::new(&spec, cfg).unwrap();
        let p = InitialParams {
            centers: [-1.0, 1.0],
            ..InitialParams::default()
        };
        let [zp, zm] = sheet_2d(it.spectral(), &p);
        let traj = it.run(State2D { zp, zm, t: 0.0 });
        assert!(traj.failure.is_none());
        let drift = traj.energy_drift(it.spec());
        assert!(drift < 1e-6, "drift {drift}");
        assert!(traj.log.iter().all(|r| r.divergence < 1e-10));
    }

    #[test]
    fn single_sided_pulse_moves_left() {
        let it = integrator(&spec(), 1.0);
        let mut init = sheet_state(it.spectral(), 1e-3, [0.5, 0.0]);
        init.zm = [Field2::zeros(32, 16), Field2::zeros(32, 16)];
        let traj = it.run(init);
        let centroid = |s: &State2D<f64>| {
            let g = &it.spectral().grid;
            let (mut m, mut w) = (0.0, 0.0);
            for (i, &x) in g.x1.iter().enumerate() {
                let e: f64 = (0..16).map(|j| s.zp[0].values[i * 16 + j].powi(2) + s.zp[1].values[i * 16 + j].powi(2)).sum();
                m += x * e;
                w += e;
            }
            m / w
        };
        let speed = (centroid(traj.last()) - centroid(&traj.snapshots[0])) / 1.0;
        assert!((speed + 1.0).abs() < 0.02, "speed {speed}");
    }

    #[test]
    fn weighted_energies_stay_bounded() {
        let spec = GridSpec::new(8.0, 2.0, 0.2, 64, 16, 4);
        let cfg = StepperConfig {
            t_end: 5.0,
            snapshot_cadence: 0.5,
            ..StepperConfig::default()
        };
        let it = Integrator2D::new(&spec, cfg).unwrap();
        let init = sheet_state(it.spectral(), 1e-3, [2.5, -2.5]);
        let traj = it.run(init);
        let d = trajectory_diagnostics(it.spectral(), &traj.snapshots, 2);
        for plus in [true, false] {
            let sum_at = |t: f64| d.iter().filter(|r| r.plus == plus && r.t == t).map(|r| r.energy).sum::<f64>();
            let e0 = sum_at(0.0);
            for s in &traj.snapshots {
                assert!(sum_at(s.t) <= 2.0 * e0, "t = {}: {} vs {e0}", s.t, sum_at(s.t));
            }
        }
        assert!(d.iter().all(|r| r.flux >= 0.0));
    }

    #[test]
    fn sheet_data_keeps_slab_and_plane_in_step() {
        let spec = GridSpec::new(4.0, 2.0, 0.1, 32, 16, 4);
        let cfg = StepperConfig {
            t_end: 0.5,
            snapshot_cadence: 0.25,
            ..StepperConfig::default()
        };
        let slab = Integrator::new(&spec, cfg.clone()).unwrap();
        let planar = Integrator2D::new(&spec, cfg).unwrap();
        let p = InitialParams {
            eps: 0.1,
            centers: [-1.0, 1.0],
            width: 0.5,
            ..InitialParams::default()
        };
        let init3 = make_initial(slab.spectral(), &p).unwrap();
        let init2 = State2D::from_slab_mean(&slab.spectral().grid, &init3);
        let (t3, t2) = run_paired(&slab, &planar, init3, init2).unwrap();
        assert_eq!(t3.times(), t2.times());
        let cmp = compare_3d_2d(planar.spectral(), &spec, &t3.snapshots, &t2.snapshots, 2).unwrap();
        assert!(cmp.max_relative_difference() < 1e-16, "{}", cmp.max_relative_difference());
        assert!(cmp.final_vertical() < 1e-20, "{}", cmp.final_vertical());
    }

    #[test]
    fn identical_data_compares_to_zero_and_mismatch_is_rejected() {
        let spec = spec();
        let sp = Spectral::new(&spec).unwrap();
        let p = InitialParams {
            family: InitialFamily::Sheet,
            width: 0.5,
            ..InitialParams::default()
        };
        let s3 = make_initial(&sp, &p).unwrap();
        let sp2 = Spectral2::new(&spec).unwrap();
        let s2 = State2D::from_slab_mean(&sp.grid, &s3);
        let cmp = compare_3d_2d(&sp2, &spec, std::slice::from_ref(&s3), std::slice::from_ref(&s2), 1).unwrap();
        assert!(cmp.final_difference() < 1e-30);
        let mut late = s2.clone();
        late.t = 1.0;
        assert!(compare_3d_2d(&sp2, &spec, &[s3], &[late], 1).is_err());
    }
}
