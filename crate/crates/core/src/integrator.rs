//! Time stepping of the Elsässer system with a stage-wise pressure projection.
//!
//! Each stage evaluates `∂ₜz₊ = ∂₁z₊ − (z₋·∇)z₊ − ∇p` and
//! `∂ₜz₋ = −∂₁z₋ − (z₊·∇)z₋ − ∇p` pseudo-spectrally and projects the result
//! onto divergence-free fields. The update is classical four-stage
//! Runge–Kutta with a Courant-limited step.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    divergence_residual, project_divfree, project_hat, vector_from_hat, vector_hat, ElsasserState, VectorField,
    VECTOR_PARITY,
};
use crate::grid::{GridSpec, ScalarField};
use crate::pressure::{gradient_tensor, source_from_gradients, GradientTensor};
use crate::scalar::Real;
use crate::spectral::{Cplx, Spectral};

/// Any field value beyond this magnitude aborts a run.
pub const BLOW_UP_LIMIT: f64 = 1e6;

/// Time-stepping parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperConfig<T> {
    /// Courant factor.
    pub cfl: T,
    pub t_end: T,
    /// Interval between stored snapshots.
    pub snapshot_cadence: T,
    pub dealias: bool,
}

impl<T: Real> Default for StepperConfig<T> {
    fn default() -> Self {
        Self {
            cfl: T::lit(0.4),
            t_end: T::lit(2.0),
            snapshot_cadence: T::lit(0.1),
            dealias: true,
        }
    }
}

impl<T: Real> StepperConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > T::zero() && self.cfl < T::one()) {
            return Err(Error::Config(format!("cfl = {} must lie in (0, 1)", self.cfl)));
        }
        if !(self.t_end >= T::zero() && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be finite and non-negative", self.t_end)));
        }
        if !(self.snapshot_cadence > T::zero()) {
            return Err(Error::Config("snapshot cadence must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the run log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub step: usize,
    pub t: T,
    pub dt: T,
    pub energy: T,
    /// Larger of the two relative divergence residuals.
    pub divergence: T,
}

/// Output of [`Integrator::run`].
#[derive(Debug)]
pub struct Trajectory<T> {
    /// States at `t = 0`, every cadence multiple and `t_end`.
    pub snapshots: Vec<ElsasserState<T>>,
    pub log: Vec<StepRecord<T>>,
    /// Set when the blow-up guard stopped the run; the last snapshot is then
    /// the last healthy state.
    pub failure: Option<Error>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &ElsasserState<T> {
        self.snapshots.last().expect("a trajectory holds its initial state")
    }

    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Line-oriented log: `step t dt energy divergence`.
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

    /// Largest relative energy change against the initial state.
    pub fn energy_drift(&self, spec: &GridSpec<T>) -> T {
        let e0 = self.snapshots[0].energy(spec);
        let worst = self
            .log
            .iter()
            .fold(T::zero(), |m, r| m.max((r.energy - e0).abs()));
        if e0 == T::zero() {
            worst
        } else {
            worst / e0
        }
    }
}

/// Stepper bound to one grid.
pub struct Integrator<T: Real> {
    sp: Spectral<T>,
    pub config: StepperConfig<T>,
}

fn advect<T: Real>(u: &VectorField<T>, grad: &GradientTensor<T>, i: usize) -> ScalarField<T> {
    let mut out = u.c[0].product(&grad[i][0]);
    for j in 1..3 {
        let term = u.c[j].product(&grad[i][j]);
        out = &out + &term;
    }
    out
}

impl<T: Real> Integrator<T> {
    pub fn new(spec: &GridSpec<T>, config: StepperConfig<T>) -> Result<Self> {
        config.validate()?;
        let sp = Spectral::new(&spec.clone().with_dealias(config.dealias))?;
        Ok(Self { sp, config })
    }

    pub fn spectral(&self) -> &Spectral<T> {
        &self.sp
    }

    pub fn spec(&self) -> &GridSpec<T> {
        self.sp.spec()
    }

    /// Time derivatives `(∂ₜz₊, ∂ₜz₋)` at a state.
    pub fn rhs(&self, state: &ElsasserState<T>) -> Result<(VectorField<T>, VectorField<T>)> {
        if state.zp.parities() != VECTOR_PARITY || state.zm.parities() != VECTOR_PARITY {
            return Err(Error::Parity("Elsässer fields must carry parities (even, even, odd)".into()));
        }
        let sp = &self.sp;
        let hp = vector_hat(sp, &state.zp);
        let hm = vector_hat(sp, &state.zm);
        let gp = gradient_tensor(sp, &hp, VECTOR_PARITY);
        let gm = gradient_tensor(sp, &hm, VECTOR_PARITY);

        let products = [
            advect(&state.zm, &gp, 0),
            advect(&state.zm, &gp, 1),
            advect(&state.zm, &gp, 2),
            advect(&state.zp, &gm, 0),
            advect(&state.zp, &gm, 1),
            advect(&state.zp, &gm, 2),
            source_from_gradients(&gp, &gm),
        ];
        let refs: Vec<_> = products.iter().collect();
        let mut hats = sp.forward_many(&refs);
        for h in &mut hats {
            sp.dealias(h);
        }
        let p_hat = sp.inverse_laplacian_hat(&hats[6]);
        let dp = [
            sp.deriv_hat(&p_hat, [1, 0, 0]),
            sp.deriv_hat(&p_hat, [0, 1, 0]),
            sp.deriv_hat(&p_hat, [0, 0, 1]),
        ];

        let assemble = |h: &[Vec<Cplx<T>>; 3], adv: &[Vec<Cplx<T>>], sign: T| {
            let mut out: [Vec<Cplx<T>>; 3] = std::array::from_fn(|i| {
                let d1 = sp.deriv_hat(&h[i], [1, 0, 0]);
                d1.iter()
                    .zip(&adv[i])
                    .zip(&dp[i])
                    .map(|((&a, &b), &c)| a * sign - b - c)
                    .collect()
            });
            project_hat(sp, &mut out);
            vector_from_hat(sp, out, VECTOR_PARITY)
        };
        let dzp = assemble(&hp, &hats[0..3], T::one());
        let dzm = assemble(&hm, &hats[3..6], -T::one());
        Ok((dzp, dzm))
    }

    /// Courant-limited step `cfl·min(Δx,Δy,Δz)/(1 + max‖z±‖∞)`.
    pub fn max_dt(&self, state: &ElsasserState<T>) -> T {
        let s = self.spec();
        let h = s.dx().min(s.dy()).min(s.dz());
        self.config.cfl * h / (T::one() + state.max_abs())
    }

    /// One Runge–Kutta step of size `dt`, followed by a projection.
    pub fn step(&self, state: &ElsasserState<T>, dt: T) -> Result<ElsasserState<T>> {
        let half = T::lit(0.5) * dt;
        let shifted = |k: &(VectorField<T>, VectorField<T>), a: T| ElsasserState {
            zp: state.zp.axpy(a, &k.0),
            zm: state.zm.axpy(a, &k.1),
            t: state.t + a,
        };
        let k1 = self.rhs(state)?;
        let k2 = self.rhs(&shifted(&k1, half))?;
        let k3 = self.rhs(&shifted(&k2, half))?;
        let k4 = self.rhs(&shifted(&k3, dt))?;
        let w = dt / T::lit(6.0);
        let two = T::lit(2.0) * w;
        let combine = |base: &VectorField<T>, parts: [&VectorField<T>; 4]| {
            let out = base.axpy(w, parts[0]).axpy(two, parts[1]).axpy(two, parts[2]).axpy(w, parts[3]);
            project_divfree(&self.sp, &out)
        };
        let next = ElsasserState {
            zp: combine(&state.zp, [&k1.0, &k2.0, &k3.0, &k4.0]),
            zm: combine(&state.zm, [&k1.1, &k2.1, &k3.1, &k4.1]),
            t: state.t + dt,
        };
        guard(&next)?;
        Ok(next)
    }

    /// Relative divergence residual of the worse of the two fields.
    pub fn divergence(&self, state: &ElsasserState<T>) -> T {
        divergence_residual(&self.sp, &state.zp).max(divergence_residual(&self.sp, &state.zm))
    }

    /// Advance to `t_end`, landing exactly on every snapshot time.
    pub fn run(&self, init: ElsasserState<T>) -> Trajectory<T> {
        let spec = self.spec().clone();
        let cfg = &self.config;
        if cfg.t_end > T::lit(0.5) * spec.lx {
            warn!(
                "t_end = {} exceeds half the horizontal half-period; packets may wrap around",
                cfg.t_end
            );
        }
        let t0 = init.t;
        let mut traj = Trajectory {
            log: vec![StepRecord {
                step: 0,
                t: init.t,
                dt: T::zero(),
                energy: init.energy(&spec),
                divergence: self.divergence(&init),
            }],
            snapshots: vec![],
            failure: None,
        };
        if let Err(e) = guard(&init) {
            traj.snapshots.push(init);
            traj.failure = Some(e);
            return traj;
        }
        let t_end = t0 + cfg.t_end;
        let mut state = init.clone();
        traj.snapshots.push(init);
        let mut next_snap = 1usize;
        let mut step = 0usize;
        // tolerance for landing on a snapshot time
        let tiny = T::lit(1e-12) * (T::one() + t_end.abs());
        while state.t < t_end - tiny {
            let target = (t0 + cfg.snapshot_cadence * T::from_count(next_snap)).min(t_end);
            let dt = self.max_dt(&state).min(target - state.t);
            match self.step(&state, dt) {
                Ok(mut s) => {
                    step += 1;
                    if (s.t - target).abs() <= tiny {
                        s.t = target;
                    }
                    traj.log.push(StepRecord {
                        step,
                        t: s.t,
                        dt,
                        energy: s.energy(&spec),
                        divergence: self.divergence(&s),
                    });
                    state = s;
                    if state.t == target {
                        traj.snapshots.push(state.clone());
                        next_snap += 1;
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

fn guard<T: Real>(s: &ElsasserState<T>) -> Result<()> {
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
