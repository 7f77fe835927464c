//! Elsässer states, the divergence-free constraint and initial data.

use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Parity, ScalarField};
use crate::pressure::gradient_tensor;
use crate::scalar::Real;
use crate::spectral::{Cplx, Field2, Spectral, Spectral2};

/// Parities of a velocity-like field: horizontal even, vertical odd.
pub const VECTOR_PARITY: [Parity; 3] = [Parity::Even, Parity::Even, Parity::Odd];

/// Parities of a curl: horizontal odd, vertical even.
pub const PSEUDO_PARITY: [Parity; 3] = [Parity::Odd, Parity::Odd, Parity::Even];

/// Three components on the slab grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub c: [ScalarField<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn zeros(spec: &GridSpec<T>) -> Self {
        Self::zeros_with(spec, VECTOR_PARITY)
    }

    pub fn zeros_with(spec: &GridSpec<T>, parity: [Parity; 3]) -> Self {
        Self {
            c: parity.map(|p| ScalarField::zeros(spec, p)),
        }
    }

    pub fn parities(&self) -> [Parity; 3] {
        [self.c[0].parity, self.c[1].parity, self.c[2].parity]
    }

    pub fn max_abs(&self) -> T {
        self.c.iter().fold(T::zero(), |m, f| m.max(f.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(ScalarField::is_finite)
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            c: [self.c[0].scale(a), self.c[1].scale(a), self.c[2].scale(a)],
        }
    }

    pub fn axpy(&self, a: T, other: &Self) -> Self {
        Self {
            c: [
                self.c[0].axpy(a, &other.c[0]),
                self.c[1].axpy(a, &other.c[1]),
                self.c[2].axpy(a, &other.c[2]),
            ],
        }
    }

    /// Pointwise Euclidean norm squared, summed against the trapezoid
    /// weights of the slab: `∫|z|² dx`.
    pub fn l2_sq(&self, spec: &GridSpec<T>) -> T {
        let wz = vertical_weights(spec);
        let cell = spec.dx() * spec.dy();
        let nzp = spec.nzp();
        let mut total = T::zero();
        for f in &self.c {
            for col in f.values.chunks(nzp) {
                total = total + col.iter().zip(&wz).map(|(&v, &w)| w * v * v).sum::<T>();
            }
        }
        total * cell
    }
}

fn vertical_weights<T: Real>(spec: &GridSpec<T>) -> Vec<T> {
    let h = spec.dz();
    (0..spec.nzp())
        .map(|k| if k == 0 || k == spec.nz { h / T::lit(2.0) } else { h })
        .collect()
}

impl<T: Real> Add for &VectorField<T> {
    type Output = VectorField<T>;

    fn add(self, rhs: Self) -> VectorField<T> {
        self.axpy(T::one(), rhs)
    }
}

impl<T: Real> Sub for &VectorField<T> {
    type Output = VectorField<T>;

    fn sub(self, rhs: Self) -> VectorField<T> {
        self.axpy(-T::one(), rhs)
    }
}

impl<T: Real> Neg for &VectorField<T> {
    type Output = VectorField<T>;

    fn neg(self) -> VectorField<T> {
        self.scale(-T::one())
    }
}

/// The perturbation pair `(z₊, z₋)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElsasserState<T> {
    pub zp: VectorField<T>,
    pub zm: VectorField<T>,
    pub t: T,
}

impl<T: Real> ElsasserState<T> {
    pub fn zeros(spec: &GridSpec<T>) -> Self {
        Self {
            zp: VectorField::zeros(spec),
            zm: VectorField::zeros(spec),
            t: T::zero(),
        }
    }

    /// `z₊` for `sign = +1`, `z₋` otherwise.
    pub fn field(&self, plus: bool) -> &VectorField<T> {
        if plus {
            &self.zp
        } else {
            &self.zm
        }
    }

    pub fn max_abs(&self) -> T {
        self.zp.max_abs().max(self.zm.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.zp.is_finite() && self.zm.is_finite() && self.t.is_finite()
    }

    /// `∫ |z₊|² + |z₋|² dx`.
    pub fn energy(&self, spec: &GridSpec<T>) -> T {
        self.zp.l2_sq(spec) + self.zm.l2_sq(spec)
    }

    /// Time-reversal partner: `(z₊, z₋) ↦ (−z₋, −z₊)` solves the same
    /// system backwards in time.
    pub fn reversed(&self) -> Self {
        Self {
            zp: -&self.zm,
            zm: -&self.zp,
            t: self.t,
        }
    }
}

fn check_vector_parity<T: Real>(z: &VectorField<T>, what: &str) -> Result<()> {
    if z.parities() != VECTOR_PARITY {
        return Err(Error::Parity(format!("{what} must carry parities (even, even, odd)")));
    }
    Ok(())
}

/// Spectra of the three components.
pub fn vector_hat<T: Real>(sp: &Spectral<T>, z: &VectorField<T>) -> [Vec<Cplx<T>>; 3] {
    let mut h = sp.forward_many(&[&z.c[0], &z.c[1], &z.c[2]]).into_iter();
    [h.next().unwrap(), h.next().unwrap(), h.next().unwrap()]
}

pub fn vector_from_hat<T: Real>(sp: &Spectral<T>, hats: [Vec<Cplx<T>>; 3], parity: [Parity; 3]) -> VectorField<T> {
    let [a, b, c] = hats;
    let mut out = sp.inverse_many(&[(a, parity[0]), (b, parity[1]), (c, parity[2])]).into_iter();
    VectorField {
        c: [out.next().unwrap(), out.next().unwrap(), out.next().unwrap()],
    }
}

/// Remove the gradient part of a spectral vector field in place.
pub fn project_hat<T: Real>(sp: &Spectral<T>, hats: &mut [Vec<Cplx<T>>; 3]) {
    let [a, b, c] = hats;
    for flat in 0..a.len() {
        let k = sp.kvec(flat);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == T::zero() {
            continue;
        }
        let d = (a[flat] * k[0] + b[flat] * k[1] + c[flat] * k[2]) / k2;
        a[flat] = a[flat] - d * k[0];
        b[flat] = b[flat] - d * k[1];
        c[flat] = c[flat] - d * k[2];
    }
}

/// Leray projection onto spectrally divergence-free fields.
pub fn project_divfree<T: Real>(sp: &Spectral<T>, z: &VectorField<T>) -> VectorField<T> {
    let mut hats = vector_hat(sp, z);
    project_hat(sp, &mut hats);
    vector_from_hat(sp, hats, z.parities())
}

/// Spectral divergence; its parity is that of the horizontal components.
pub fn divergence<T: Real>(sp: &Spectral<T>, z: &VectorField<T>) -> ScalarField<T> {
    let [a, b, c] = vector_hat(sp, z);
    let div: Vec<_> = (0..a.len())
        .map(|flat| {
            let k = sp.kvec(flat);
            (a[flat] * k[0] + b[flat] * k[1] + c[flat] * k[2]) * Cplx::new(T::zero(), T::one())
        })
        .collect();
    sp.inverse(&div, z.c[0].parity)
}

/// Spectral curl; every component parity flips.
pub fn curl<T: Real>(sp: &Spectral<T>, z: &VectorField<T>) -> VectorField<T> {
    let [a, b, c] = vector_hat(sp, z);
    let i = Cplx::new(T::zero(), T::one());
    let n = a.len();
    let (mut x, mut y, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for flat in 0..n {
        let k = sp.kvec(flat);
        x.push((c[flat] * k[1] - b[flat] * k[2]) * i);
        y.push((a[flat] * k[2] - c[flat] * k[0]) * i);
        w.push((b[flat] * k[0] - a[flat] * k[1]) * i);
    }
    vector_from_hat(sp, [x, y, w], z.parities().map(Parity::flip))
}

/// Spectral gradient of a scalar.
pub fn gradient<T: Real>(sp: &Spectral<T>, f: &ScalarField<T>) -> VectorField<T> {
    let h = sp.forward(f);
    let hats = [sp.deriv_hat(&h, [1, 0, 0]), sp.deriv_hat(&h, [0, 1, 0]), sp.deriv_hat(&h, [0, 0, 1])];
    vector_from_hat(sp, hats, [f.parity, f.parity, f.parity.flip()])
}

/// Largest spectral divergence relative to the largest first derivative.
pub fn divergence_residual<T: Real>(sp: &Spectral<T>, z: &VectorField<T>) -> T {
    let hats = vector_hat(sp, z);
    let i = Cplx::new(T::zero(), T::one());
    let div: Vec<_> = (0..hats[0].len())
        .map(|flat| {
            let k = sp.kvec(flat);
            (hats[0][flat] * k[0] + hats[1][flat] * k[1] + hats[2][flat] * k[2]) * i
        })
        .collect();
    let div = sp.inverse(&div, z.c[0].parity).max_abs();
    let grad = gradient_tensor(sp, &hats, z.parities())
        .iter()
        .flatten()
        .fold(T::zero(), |m, f| m.max(f.max_abs()));
    if grad == T::zero() {
        div
    } else {
        div / grad
    }
}

/// Tolerance used when checking admissibility of `(v, b)`.
const ADMISSIBLE_TOL: f64 = 1e-8;

fn check_admissible<T: Real>(sp: &Spectral<T>, z: &VectorField<T>, what: &str) -> Result<()> {
    check_vector_parity(z, what)?;
    let scale = z.max_abs();
    if z.c[2].max_abs_on_walls() > T::lit(ADMISSIBLE_TOL) * scale {
        return Err(Error::Inadmissible(format!("{what}: vertical component does not vanish on the walls")));
    }
    if divergence_residual(sp, z) > T::lit(ADMISSIBLE_TOL) {
        return Err(Error::Inadmissible(format!("{what} is not divergence-free")));
    }
    Ok(())
}

/// `z₊ = v + b − e₁`, `z₋ = v − b + e₁` with the unit background field `e₁`.
pub fn elsasser_from_vb<T: Real>(
    sp: &Spectral<T>,
    v: &VectorField<T>,
    b: &VectorField<T>,
    t: T,
) -> Result<ElsasserState<T>> {
    check_admissible(sp, v, "velocity")?;
    check_admissible(sp, b, "magnetic field")?;
    let mut zp = v + b;
    let mut zm = v - b;
    zp.c[0] = zp.c[0].map(|x| x - T::one());
    zm.c[0] = zm.c[0].map(|x| x + T::one());
    Ok(ElsasserState { zp, zm, t })
}

/// Inverse of [`elsasser_from_vb`].
pub fn vb_from_elsasser<T: Real>(state: &ElsasserState<T>) -> (VectorField<T>, VectorField<T>) {
    let half = T::lit(0.5);
    let v = (&state.zp + &state.zm).scale(half);
    let mut b = (&state.zp - &state.zm).scale(half);
    b.c[0] = b.c[0].map(|x| x + T::one());
    (v, b)
}

/// Initial-data families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialFamily {
    Zero,
    /// Height-independent horizontal stream-function data.
    Sheet,
    /// Curl of a vector potential with a vertical half-wave profile.
    Tube,
    /// Sheet data plus `η` times tube data.
    Lifted2d,
}

/// Parameters shared by the initial-data families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialParams<T> {
    pub family: InitialFamily,
    /// Sup-norm scale of the horizontal components.
    pub eps: T,
    /// Gaussian envelope width along x₁.
    pub width: T,
    /// Envelope centres of the `z₊` and `z₋` packets.
    pub centers: [T; 2],
    /// Relative amplitudes of the `z₊` and `z₋` packets.
    pub amplitudes: [T; 2],
    /// Number of half-periods of the cosine profile across x₂.
    pub ky: usize,
    /// Vertical mode: profile `cos((2m−1)πx₃/(2δ))`.
    pub mode: usize,
    /// Weight of the tube perturbation in the lifted family.
    pub eta: T,
}

impl<T: Real> Default for InitialParams<T> {
    fn default() -> Self {
        Self {
            family: InitialFamily::Sheet,
            eps: T::lit(1e-3),
            width: T::one(),
            centers: [T::zero(), T::zero()],
            amplitudes: [T::one(), T::one()],
            ky: 1,
            mode: 1,
            eta: T::one(),
        }
    }
}

impl<T: Real> InitialParams<T> {
    pub fn validate(&self, spec: &GridSpec<T>) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > T::zero()) && self.family != InitialFamily::Zero {
            return Err(Error::InitialData(format!("amplitude must be positive, got {}", self.eps)));
        }
        if !(self.width > T::zero()) {
            return Err(Error::InitialData("envelope width must be positive".into()));
        }
        for &c in &self.centers {
            let gap = spec.lx - c.abs();
            let edge = (-(gap * gap) / (T::lit(2.0) * self.width * self.width)).exp();
            if gap <= T::zero() || edge > T::lit(1e-6) {
                return Err(Error::InitialData(format!(
                    "envelope centred at {c} with width {} does not decay inside the torus of half-period {}",
                    self.width, spec.lx
                )));
            }
        }
        if 3 * self.ky > spec.ny {
            return Err(Error::InitialData(format!("transverse mode {} is not resolved", self.ky)));
        }
        if self.mode == 0 || 3 * (2 * self.mode - 1) > 2 * spec.nz {
            return Err(Error::InitialData(format!("vertical mode {} is not resolved", self.mode)));
        }
        if !self.eta.is_finite() {
            return Err(Error::InitialData("perturbation weight must be finite".into()));
        }
        Ok(())
    }
}

fn envelope<T: Real>(sp: &Spectral2<T>, p: &InitialParams<T>, center: T) -> Field2<T> {
    let ly = sp.spec().ly;
    let ky = T::from_count(p.ky) * T::PI() / ly;
    let two_w2 = T::lit(2.0) * p.width * p.width;
    Field2::from_fn(&sp.grid, |x1, x2| {
        let d = x1 - center;
        (-(d * d) / two_w2).exp() * (ky * x2).cos()
    })
}

/// Horizontal sheet data `ε·∇⊥ψ` with `∇⊥ψ = (∂₂ψ, −∂₁ψ)`, normalized so that
/// the larger of the two packets has sup-norm `ε`.
pub fn sheet_2d<T: Real>(sp: &Spectral2<T>, p: &InitialParams<T>) -> [[Field2<T>; 2]; 2] {
    let mut out = Vec::with_capacity(2);
    let mut peak = T::zero();
    for s in 0..2 {
        let psi = envelope(sp, p, p.centers[s]);
        let hat = sp.forward(&psi);
        let (d2, d1) = sp.inverse_pair(&sp.deriv_hat(&hat, [0, 1]), &sp.deriv_hat(&hat, [1, 0]));
        let u = d2;
        let v = d1.scale(-T::one());
        let m = u
            .values
            .iter()
            .zip(&v.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a * a + b * b).sqrt()));
        peak = peak.max(m);
        out.push([u, v]);
    }
    let mut it = out.into_iter().enumerate().map(|(s, [u, v])| {
        let a = if peak > T::zero() { p.eps * p.amplitudes[s] / peak } else { T::zero() };
        [u.scale(a), v.scale(a)]
    });
    [it.next().unwrap(), it.next().unwrap()]
}

/// Copy a horizontal field onto every slab level.
pub fn lift<T: Real>(spec: &GridSpec<T>, f: &Field2<T>, parity: Parity) -> ScalarField<T> {
    let nzp = spec.nzp();
    let mut values = Vec::with_capacity(spec.len());
    for &v in &f.values {
        values.extend(std::iter::repeat(v).take(nzp));
    }
    ScalarField {
        nx: spec.nx,
        ny: spec.ny,
        nz: spec.nz,
        values,
        parity,
    }
}

fn tube_field<T: Real>(sp: &Spectral<T>, sp2: &Spectral2<T>, p: &InitialParams<T>, s: usize) -> VectorField<T> {
    let spec = sp.spec();
    let q = T::from_count(2 * p.mode - 1) * T::PI() / (T::lit(2.0) * spec.delta);
    let phi = envelope(sp2, p, p.centers[s]);
    let chi = phi.scale(T::lit(0.5));
    let profile = |f: &Field2<T>| {
        let nzp = spec.nzp();
        let mut values = Vec::with_capacity(spec.len());
        for &v in &f.values {
            for &x3 in &sp.grid.x3 {
                values.push(v * (q * x3).cos());
            }
        }
        let mut f = ScalarField {
            nx: spec.nx,
            ny: spec.ny,
            nz: spec.nz,
            values,
            parity: Parity::Odd,
        };
        for col in f.values.chunks_mut(nzp) {
            col[0] = T::zero();
            col[nzp - 1] = T::zero();
        }
        f
    };
    let potential = VectorField {
        c: [profile(&chi), profile(&phi), ScalarField::zeros(spec, Parity::Even)],
    };
    curl(sp, &potential)
}

/// Generate an Elsässer state of the requested family at `t = 0`.
pub fn make_initial<T: Real>(sp: &Spectral<T>, p: &InitialParams<T>) -> Result<ElsasserState<T>> {
    let spec = sp.spec().clone();
    p.validate(&spec)?;
    let mut state = ElsasserState::zeros(&spec);
    if p.family == InitialFamily::Zero {
        return Ok(state);
    }
    let sp2 = Spectral2::new(&spec)?;
    if matches!(p.family, InitialFamily::Sheet | InitialFamily::Lifted2d) {
        let [sp_plus, sp_minus] = sheet_2d(&sp2, p);
        for (z, [u, v]) in [(&mut state.zp, sp_plus), (&mut state.zm, sp_minus)] {
            z.c[0] = lift(&spec, &u, Parity::Even);
            z.c[1] = lift(&spec, &v, Parity::Even);
        }
    }
    let eta = match p.family {
        InitialFamily::Tube => T::one(),
        InitialFamily::Lifted2d => p.eta,
        _ => T::zero(),
    };
    if eta != T::zero() {
        let tubes = [tube_field(sp, &sp2, p, 0), tube_field(sp, &sp2, p, 1)];
        let peak = tubes
            .iter()
            .map(|z| {
                z.c[0]
                    .values
                    .iter()
                    .zip(&z.c[1].values)
                    .fold(T::zero(), |m, (&a, &b)| m.max((a * a + b * b).sqrt()))
            })
            .fold(T::zero(), T::max);
        for (s, tube) in tubes.iter().enumerate() {
            let a = eta * p.eps * p.amplitudes[s] / peak;
            let z = if s == 0 { &mut state.zp } else { &mut state.zm };
            *z = z.axpy(a, tube);
        }
    }
    Ok(state)
}
