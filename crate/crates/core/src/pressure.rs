//! Pressure: the spectral Neumann solve on the reflected box and, as an
//! independent check, the image-series Green's function of the slab.
//!
//! The pressure solves `−Δp = ∂ᵢz₊ʲ ∂ⱼz₋ⁱ` with `∂₃p = 0` on the walls. Even
//! reflection turns the Neumann problem into a periodic one, so the production
//! path is a division by `|k|²` on the extended box.

use log::warn;

use crate::error::{Error, Result};
use crate::fields::{curl, vector_hat, ElsasserState, VectorField, PSEUDO_PARITY, VECTOR_PARITY};
use crate::grid::{GridSpec, Parity, ScalarField};
use crate::scalar::Real;
use crate::special::bessel_k01;
use crate::spectral::{Cplx, Spectral};

/// Even, mean-free pressure on the slab.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureField<T> {
    pub field: ScalarField<T>,
}

/// `grad[i][j] = ∂ⱼ zⁱ` evaluated on the slab nodes.
pub type GradientTensor<T> = [[ScalarField<T>; 3]; 3];

/// All first derivatives of a vector field from its component spectra.
pub fn gradient_tensor<T: Real>(sp: &Spectral<T>, hats: &[Vec<Cplx<T>>; 3], parity: [Parity; 3]) -> GradientTensor<T> {
    let mut jobs = Vec::with_capacity(9);
    for (i, h) in hats.iter().enumerate() {
        for j in 0..3 {
            let mut alpha = [0; 3];
            alpha[j] = 1;
            let p = if j == 2 { parity[i].flip() } else { parity[i] };
            jobs.push((sp.deriv_hat(h, alpha), p));
        }
    }
    let mut it = sp.inverse_many(&jobs).into_iter();
    let mut row = || [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    [row(), row(), row()]
}

/// Pointwise `Σᵢⱼ ∂ᵢz₊ʲ ∂ⱼz₋ⁱ` from the two gradient tensors.
pub fn source_from_gradients<T: Real>(gp: &GradientTensor<T>, gm: &GradientTensor<T>) -> ScalarField<T> {
    let mut out = ScalarField {
        values: vec![T::zero(); gp[0][0].values.len()],
        parity: Parity::Even,
        ..gp[0][0].clone()
    };
    for i in 0..3 {
        for j in 0..3 {
            // ∂ᵢz₊ʲ = gp[j][i], ∂ⱼz₋ⁱ = gm[i][j]
            let (a, b) = (&gp[j][i].values, &gm[i][j].values);
            for n in 0..out.values.len() {
                out.values[n] = out.values[n] + a[n] * b[n];
            }
        }
    }
    out
}

fn check_state<T: Real>(state: &ElsasserState<T>) -> Result<()> {
    if state.zp.parities() != VECTOR_PARITY || state.zm.parities() != VECTOR_PARITY {
        return Err(Error::Parity("Elsässer fields must carry parities (even, even, odd)".into()));
    }
    Ok(())
}

/// Dealiased spectrum of the pressure source of a state.
pub fn pressure_source_hat<T: Real>(sp: &Spectral<T>, state: &ElsasserState<T>) -> Result<Vec<Cplx<T>>> {
    check_state(state)?;
    let gp = gradient_tensor(sp, &vector_hat(sp, &state.zp), VECTOR_PARITY);
    let gm = gradient_tensor(sp, &vector_hat(sp, &state.zm), VECTOR_PARITY);
    let mut hat = sp.forward(&source_from_gradients(&gp, &gm));
    sp.dealias(&mut hat);
    Ok(hat)
}

/// Solve `−Δp = f` on the slab with Neumann walls and zero mean.
pub fn solve_poisson<T: Real>(sp: &Spectral<T>, f: &ScalarField<T>) -> Result<ScalarField<T>> {
    if f.parity != Parity::Even {
        return Err(Error::Parity("a Neumann problem needs an even source".into()));
    }
    Ok(sp.inverse(&sp.inverse_laplacian_hat(&sp.forward(f)), Parity::Even))
}

/// Pressure of an Elsässer state.
pub fn solve_pressure<T: Real>(sp: &Spectral<T>, state: &ElsasserState<T>) -> Result<PressureField<T>> {
    let hat = pressure_source_hat(sp, state)?;
    Ok(PressureField {
        field: sp.inverse(&sp.inverse_laplacian_hat(&hat), Parity::Even),
    })
}

/// `‖−Δp − f‖∞ / ‖f‖∞` with the Laplacian taken spectrally.
pub fn poisson_residual<T: Real>(sp: &Spectral<T>, p: &ScalarField<T>, f: &ScalarField<T>) -> T {
    let lap: Vec<_> = sp.forward(p).iter().enumerate().map(|(n, &v)| v * sp.ksq(n)).collect();
    let neg_lap = sp.inverse(&lap, Parity::Even);
    let scale = f.max_abs();
    let err = (&neg_lap - f).max_abs();
    if scale == T::zero() {
        err
    } else {
        err / scale
    }
}

/// Which representation produced a kernel value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenRoute {
    /// Direct sum over reflected images of the evaluation point.
    Images,
    /// Fourier-resummed sum over the vertical image lattice.
    Lattice,
}

/// `∇ₓG_δ(x, y)` with a rigorous bound on the truncation error.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenEval<T> {
    pub x: [T; 3],
    pub y: [T; 3],
    pub delta: T,
    /// Number of image pairs (or lattice modes) summed.
    pub kmax: usize,
    pub value: [T; 3],
    pub tail_bound: T,
    pub route: GreenRoute,
    /// The same kernel evaluated after translating both points horizontally
    /// so that `y_h = 0`.
    pub translated: [T; 3],
}

fn inv_4pi<T: Real>() -> T {
    T::one() / (T::lit(4.0) * T::PI())
}

/// Tail bound of the direct image sum after `k` pairs.
pub fn image_tail_bound<T: Real>(r: T, delta: T, k: usize) -> T {
    if k == 0 {
        return T::infinity();
    }
    let s = T::lit(2.0) * delta * T::from_count(k - 1);
    let big_r = (r * r + s * s).sqrt();
    if big_r == T::zero() {
        return T::infinity();
    }
    let denom = big_r * (big_r + s);
    let th = r * inv_4pi::<T>() / (delta * denom);
    let tv = T::one() / (T::PI() * denom);
    (th * th + tv * tv).sqrt()
}

/// Smallest number of image pairs whose tail bound is at most `tol`.
fn image_count<T: Real>(r: T, delta: T, tol: T) -> usize {
    let mut hi = 1usize;
    while image_tail_bound(r, delta, hi) > tol {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if image_tail_bound(r, delta, mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `∇ₓ 1/|X − y|` for an image `X` whose third coordinate carries the
/// chain-rule factor `s3`, accumulated into `acc`.
#[inline]
fn add_point<T: Real>(acc: &mut [T; 3], dh: [T; 2], dz: T, s3: T) {
    let r2 = dh[0] * dh[0] + dh[1] * dh[1] + dz * dz;
    let inv3 = T::one() / (r2 * r2.sqrt());
    acc[0] = acc[0] - dh[0] * inv3;
    acc[1] = acc[1] - dh[1] * inv3;
    acc[2] = acc[2] - s3 * dz * inv3;
}

fn images_sum<T: Real>(dh: [T; 2], x3: T, y3: T, delta: T, pairs: usize) -> [T; 3] {
    let mut acc = [T::zero(); 3];
    add_point(&mut acc, dh, x3 - y3, T::one());
    let two_d = T::lit(2.0) * delta;
    for k in 1..=pairs {
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        let shift = two_d * T::from_count(k);
        add_point(&mut acc, dh, sign * (x3 - shift) - y3, sign);
        add_point(&mut acc, dh, sign * (x3 + shift) - y3, sign);
    }
    acc.map(|v| v * inv_4pi::<T>())
}

/// Radial and vertical derivatives of the line-lattice potential
/// `Σⱼ 1/|(r, z − jL)|`, Fourier-resummed, summed up to `q ≤ modes`.
struct LatticeTerms<T> {
    dr: [T; 2],
    dz: [T; 2],
    modes: usize,
    tail: T,
}

fn lattice_sum<T: Real>(r: T, za: T, zb: T, period: T, tol: T) -> LatticeTerms<T> {
    let tau = T::TAU();
    let a = tau * r / period;
    let rho = (-a).exp();
    let c = T::lit(8.0) * T::PI() / (period * period);
    let mut dr = [-T::lit(2.0) / (period * r); 2];
    let mut dz = [T::zero(); 2];
    let zs = [za, zb];
    let bound_scale = T::lit(4.0) * T::SQRT_2() / (period * period);
    let one_minus = T::one() - rho;
    let mut q = 0usize;
    loop {
        q += 1;
        let (k0, k1) = bessel_k01(a * T::from_count(q));
        let qf = T::from_count(q);
        for s in 0..2 {
            let phase = tau * qf * zs[s] / period;
            dr[s] = dr[s] - c * qf * k1 * phase.cos();
            dz[s] = dz[s] - c * qf * k0 * phase.sin();
        }
        // remainder over modes beyond q, via the monotonicity of e^x √x K₁(x)
        let (_, k1_next) = bessel_k01(a * T::from_count(q + 1));
        let sum = k1_next * (T::from_count(q + 1) / one_minus + rho / (one_minus * one_minus));
        let tail = bound_scale * sum;
        if tail <= tol || q > 100_000 {
            return LatticeTerms { dr, dz, modes: q, tail };
        }
    }
}

fn lattice_value<T: Real>(dh: [T; 2], x3: T, y3: T, delta: T, tol: T) -> ([T; 3], usize, T) {
    let r = (dh[0] * dh[0] + dh[1] * dh[1]).sqrt();
    let za = x3 - y3;
    let zb = T::lit(2.0) * delta - x3 - y3;
    let lt = lattice_sum(r, za, zb, T::lit(4.0) * delta, tol);
    let radial = (lt.dr[0] + lt.dr[1]) / r;
    let k = inv_4pi::<T>();
    (
        [k * radial * dh[0], k * radial * dh[1], k * (lt.dz[0] - lt.dz[1])],
        lt.modes,
        lt.tail,
    )
}

/// Kernel gradient without argument checks, choosing the representation by
/// horizontal distance. Points may lie on the walls.
pub fn green_grad_raw<T: Real>(dh: [T; 2], x3: T, y3: T, delta: T, tol: T) -> ([T; 3], usize, T, GreenRoute) {
    let r = (dh[0] * dh[0] + dh[1] * dh[1]).sqrt();
    if r >= delta / T::lit(2.0) {
        let (v, n, tail) = lattice_value(dh, x3, y3, delta, tol);
        (v, n, tail, GreenRoute::Lattice)
    } else {
        let n = image_count(r, delta, tol);
        (images_sum(dh, x3, y3, delta, n), n, image_tail_bound(r, delta, n), GreenRoute::Images)
    }
}

/// Direct image sum with a prescribed truncation tolerance, bypassing the
/// route choice.
pub fn green_grad_images<T: Real>(x: [T; 3], y: [T; 3], delta: T, tol: T) -> ([T; 3], T) {
    let dh = [x[0] - y[0], x[1] - y[1]];
    let r = (dh[0] * dh[0] + dh[1] * dh[1]).sqrt();
    let n = image_count(r, delta, tol);
    (images_sum(dh, x[2], y[2], delta, n), image_tail_bound(r, delta, n))
}

/// Lattice representation, valid for `x_h ≠ y_h`.
pub fn green_grad_lattice<T: Real>(x: [T; 3], y: [T; 3], delta: T, tol: T) -> ([T; 3], T) {
    let (v, _, tail) = lattice_value([x[0] - y[0], x[1] - y[1]], x[2], y[2], delta, tol);
    (v, tail)
}

/// `∇ₓG_δ(x, y)` of the Neumann Laplacian on the slab `ℝ² × (−δ, δ)`.
pub fn green_grad<T: Real>(x: [T; 3], y: [T; 3], delta: T, tol: T) -> Result<GreenEval<T>> {
    if !(delta > T::zero()) || !(tol > T::zero()) {
        return Err(Error::InvalidPoint(format!("need δ > 0 and tol > 0, got δ = {delta}, tol = {tol}")));
    }
    for (name, p) in [("x", x), ("y", y)] {
        if p.iter().any(|v| !v.is_finite()) || p[2].abs() > delta {
            return Err(Error::InvalidPoint(format!("{name} = {p:?} lies outside the slab of half-height {delta}")));
        }
    }
    if x == y {
        return Err(Error::InvalidPoint("the kernel is singular at x = y".into()));
    }
    let dh = [x[0] - y[0], x[1] - y[1]];
    let (value, kmax, tail_bound, route) = green_grad_raw(dh, x[2], y[2], delta, tol);
    // with y_h moved to the origin, x_h becomes the offset itself
    let moved = [x[0] - y[0], x[1] - y[1]];
    let (translated, ..) = green_grad_raw(moved, x[2], y[2], delta, tol);
    Ok(GreenEval {
        x,
        y,
        delta,
        kmax,
        value,
        tail_bound,
        route,
        translated,
    })
}

fn wrap<T: Real>(d: T, half_period: T) -> T {
    let period = T::lit(2.0) * half_period;
    let mut d = d % period;
    if d >= half_period {
        d = d - period;
    } else if d < -half_period {
        d = d + period;
    }
    d
}

/// Treatment of the removed self-node in [`grad_pressure_via_green_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelfCell {
    /// Equal-volume ball: `a²∇g(x)/6` with `a³ = 3V/(4π)`.
    Ball,
    /// Exact second-moment defect of the punctured lattice, per axis.
    Lattice,
}

/// Options of the quadrature path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenQuadrature<T> {
    /// Kernel truncation tolerance.
    pub tol: T,
    /// Quadrature nodes per grid cell along each axis; the source is carried
    /// to the finer nodes by trigonometric interpolation.
    pub refine: usize,
    pub self_cell: SelfCell,
}

/// Per-axis constants `cᵢ` such that the punctured lattice rule misses
/// `cᵢ ∂ᵢg(x)` of `∫ ∂ₓᵢG g`, for the kernel `s/(4π|s|³)`.
///
/// Computed as the difference between the integral and the lattice sum of
/// `sᵢ²/|s|³` under a wide Gaussian cutoff.
pub fn lattice_self_constants<T: Real>(h: [T; 3]) -> [T; 3] {
    let hmax = h[0].max(h[1]).max(h[2]);
    let radius = T::lit(8.0) * hmax;
    let reach = T::lit(6.0) * radius;
    let n: Vec<i64> = h.iter().map(|&hi| (reach / hi).ceil().to_f64_lossy() as i64).collect();
    let vol = h[0] * h[1] * h[2];
    let inv_r2 = T::one() / (radius * radius);
    let mut sums = [T::zero(); 3];
    for a in -n[0]..=n[0] {
        let x = h[0] * T::lit(a as f64);
        for b in -n[1]..=n[1] {
            let y = h[1] * T::lit(b as f64);
            let mut col = [T::zero(); 3];
            for c in -n[2]..=n[2] {
                if a == 0 && b == 0 && c == 0 {
                    continue;
                }
                let z = h[2] * T::lit(c as f64);
                let r2 = x * x + y * y + z * z;
                let f = (-r2 * inv_r2).exp() / (r2 * r2.sqrt());
                col[0] = col[0] + x * x * f;
                col[1] = col[1] + y * y * f;
                col[2] = col[2] + z * z * f;
            }
            for i in 0..3 {
                sums[i] = sums[i] + col[i];
            }
        }
    }
    // ∫ sᵢ²/|s|³ e^{−|s|²/R²} ds = (4π/3)·R²/2
    let integral = T::lit(2.0) * T::PI() * radius * radius / T::lit(3.0);
    sums.map(|s| (integral - vol * s) / (T::lit(4.0) * T::PI()))
}

/// Trigonometric interpolation of a spectrum onto a grid refined `f` times
/// along every axis.
fn refine_spectrum<T: Real>(coarse: &Spectral<T>, fine: &Spectral<T>, hat: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let c = coarse.spec();
    let f = fine.spec();
    let dims_c = [c.nx, c.ny, c.nze()];
    let dims_f = [f.nx, f.ny, f.nze()];
    let scale = T::from_count(fine.len_ext()) / T::from_count(coarse.len_ext());
    let map = |n: usize, nc: usize, nf: usize| -> Option<usize> {
        let s = crate::grid::fft_index(n, nc);
        if nc % 2 == 0 && n == nc / 2 {
            return None;
        }
        Some(if s >= 0 { s as usize } else { (nf as isize + s) as usize })
    };
    let mut out = vec![Cplx::new(T::zero(), T::zero()); fine.len_ext()];
    for i in 0..dims_c[0] {
        let Some(fi) = map(i, dims_c[0], dims_f[0]) else { continue };
        for j in 0..dims_c[1] {
            let Some(fj) = map(j, dims_c[1], dims_f[1]) else { continue };
            for m in 0..dims_c[2] {
                let Some(fm) = map(m, dims_c[2], dims_f[2]) else { continue };
                out[(fi * dims_f[1] + fj) * dims_f[2] + fm] = hat[(i * dims_c[1] + j) * dims_c[2] + m] * scale;
            }
        }
    }
    out
}

/// `∇p` at slab nodes by quadrature of the kernel against the pressure
/// source, with a twice-refined quadrature grid and the exact lattice
/// self-cell constants.
pub fn grad_pressure_via_green<T: Real>(
    sp: &Spectral<T>,
    state: &ElsasserState<T>,
    samples: &[[T; 3]],
    tol: T,
) -> Result<Vec<[T; 3]>> {
    grad_pressure_via_green_with(
        sp,
        state,
        samples,
        GreenQuadrature {
            tol,
            refine: 2,
            self_cell: SelfCell::Lattice,
        },
    )
}

/// Quadrature path with explicit options.
///
/// The node coinciding with the sample is removed and its cell replaced by
/// a first-order correction. Horizontal distances follow the nearest image
/// on the torus.
pub fn grad_pressure_via_green_with<T: Real>(
    sp: &Spectral<T>,
    state: &ElsasserState<T>,
    samples: &[[T; 3]],
    opts: GreenQuadrature<T>,
) -> Result<Vec<[T; 3]>> {
    if opts.refine == 0 {
        return Err(Error::InvalidGrid("quadrature refinement must be at least 1".into()));
    }
    let coarse = sp.spec().clone();
    let g_coarse = pressure_source_hat(sp, state)?;
    let fine_spec = GridSpec {
        nx: coarse.nx * opts.refine,
        ny: coarse.ny * opts.refine,
        nz: coarse.nz * opts.refine,
        ..coarse.clone()
    };
    let fine_owned;
    let (q, g_hat) = if opts.refine == 1 {
        (sp, g_coarse)
    } else {
        fine_owned = Spectral::new(&fine_spec)?;
        let h = refine_spectrum(sp, &fine_owned, &g_coarse);
        (&fine_owned, h)
    };
    let spec = q.spec().clone();
    let g = q.inverse(&g_hat, Parity::Even);
    let grad_g = [
        q.inverse(&q.deriv_hat(&g_hat, [1, 0, 0]), Parity::Even),
        q.inverse(&q.deriv_hat(&g_hat, [0, 1, 0]), Parity::Even),
        q.inverse(&q.deriv_hat(&g_hat, [0, 0, 1]), Parity::Odd),
    ];
    let grid = &q.grid;
    let wz = grid.vertical_weights();
    let h = [spec.dx(), spec.dy(), spec.dz()];
    let correction = match opts.self_cell {
        SelfCell::Ball => {
            let a = (T::lit(3.0) * h[0] * h[1] * h[2] / (T::lit(4.0) * T::PI())).cbrt();
            [a * a / T::lit(6.0); 3]
        }
        SelfCell::Lattice => lattice_self_constants(h),
    };
    let mut out = Vec::with_capacity(samples.len());
    for &x in samples {
        if x[2].abs() >= spec.delta {
            return Err(Error::InvalidPoint(format!("sample {x:?} is not inside the slab")));
        }
        let node = nearest_node(q, x).filter(|&(i, j, k)| {
            let d = [grid.x1[i] - x[0], grid.x2[j] - x[1], grid.x3[k] - x[2]];
            d.iter().all(|v| v.abs() <= T::lit(1e-12) * (T::one() + spec.lx))
        });
        if node.is_none() {
            warn!("sample {x:?} is off the quadrature nodes; the singular cell is not corrected");
        }
        let mut acc = [T::zero(); 3];
        for i in 0..spec.nx {
            let d1 = wrap(x[0] - grid.x1[i], spec.lx);
            for j in 0..spec.ny {
                let d2 = wrap(x[1] - grid.x2[j], spec.ly);
                for k in 0..spec.nzp() {
                    let src = g.values[spec.idx(i, j, k)];
                    if src == T::zero() || (d1 == T::zero() && d2 == T::zero() && grid.x3[k] == x[2]) {
                        continue;
                    }
                    let (kv, ..) = green_grad_raw([d1, d2], x[2], grid.x3[k], spec.delta, opts.tol);
                    let w = wz[k] * src;
                    for c in 0..3 {
                        acc[c] = acc[c] + w * kv[c];
                    }
                }
            }
        }
        let cell = h[0] * h[1];
        let mut v = acc.map(|a| a * cell);
        if let Some((i, j, k)) = node {
            let n = spec.idx(i, j, k);
            for c in 0..3 {
                v[c] = v[c] + correction[c] * grad_g[c].values[n];
            }
        }
        out.push(v);
    }
    Ok(out)
}

fn nearest_node<T: Real>(sp: &Spectral<T>, x: [T; 3]) -> Option<(usize, usize, usize)> {
    let s = sp.spec();
    let idx = |v: T, origin: T, h: T, n: usize| -> Option<usize> {
        let f = ((v - origin) / h).round();
        if f < T::zero() {
            return None;
        }
        let i = f.to_f64_lossy() as usize;
        (i < n).then_some(i)
    };
    Some((
        idx(x[0], -s.lx, s.dx(), s.nx)?,
        idx(x[1], -s.ly, s.dy(), s.ny)?,
        idx(x[2], -s.delta, s.dz(), s.nzp())?,
    ))
}

/// Spectral `∇p` at arbitrary points, by trigonometric interpolation.
pub fn grad_pressure_spectral<T: Real>(sp: &Spectral<T>, state: &ElsasserState<T>, samples: &[[T; 3]]) -> Result<Vec<[T; 3]>> {
    let p_hat = sp.inverse_laplacian_hat(&pressure_source_hat(sp, state)?);
    let d = [
        sp.deriv_hat(&p_hat, [1, 0, 0]),
        sp.deriv_hat(&p_hat, [0, 1, 0]),
        sp.deriv_hat(&p_hat, [0, 0, 1]),
    ];
    Ok(samples
        .iter()
        .map(|&x| [sp.eval_at(&d[0], x), sp.eval_at(&d[1], x), sp.eval_at(&d[2], x)])
        .collect())
}

/// A pair of compact vortex blobs used to exercise the pressure solvers.
///
/// `z₊` is a height-independent horizontal swirl and `z₋` the curl of a
/// potential carrying the lowest wall-vanishing vertical profile. Both are
/// horizontally localized Gaussians. The resulting pressure source has zero
/// vertical mean, so its field decays exponentially on the scale of the
/// slab height and the nearest-image quadrature sees no periodic copies.
pub fn probe_state<T: Real>(sp: &Spectral<T>, width: T, offset: T) -> ElsasserState<T> {
    let spec = sp.spec();
    let q = T::PI() / (T::lit(2.0) * spec.delta);
    let two_w2 = T::lit(2.0) * width * width;
    let blob = |cx: T, cy: T, amp: T, parity: Parity, vertical: bool| {
        ScalarField::from_fn(&sp.grid, parity, move |x, y, z| {
            let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            let prof = if vertical { (q * z).cos() } else { T::one() };
            amp * (-r2 / two_w2).exp() * prof
        })
    };
    let mut swirl = VectorField::zeros_with(spec, PSEUDO_PARITY);
    swirl.c[2] = blob(offset, T::zero(), width, Parity::Even, false);
    let mut tube = VectorField::zeros_with(spec, PSEUDO_PARITY);
    tube.c[0] = blob(-offset, offset, T::lit(0.5), Parity::Odd, true);
    tube.c[1] = blob(-offset, offset, T::one(), Parity::Odd, true);
    for f in &mut tube.c[..2] {
        for col in f.values.chunks_mut(spec.nzp()) {
            col[0] = T::zero();
            col[spec.nz] = T::zero();
        }
    }
    ElsasserState {
        zp: curl(sp, &swirl),
        zm: curl(sp, &tube),
        t: T::zero(),
    }
}
