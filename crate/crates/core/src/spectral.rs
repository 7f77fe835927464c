//! Fourier machinery on the reflection-extended box and on the horizontal
//! torus.
//!
//! Slab fields are continued to the `4δ`-periodic box with [`reflect_extend`]
//! and transformed with a full 3D FFT. Parity is carried by the caller: a
//! spectrum knows nothing about it, and [`Spectral::inverse`] restores the tag.
//! Two real fields are packed into one complex transform whenever possible.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::{fft_index, make_grid, reflect_extend, Grid, GridSpec, Parity, ScalarField};
use crate::scalar::Real;

pub type Cplx<T> = Complex<T>;

/// Batched 1D transforms along every axis of a row-major array.
struct AxisPlans<T: Real> {
    dims: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<T>>>,
    inv: Vec<Arc<dyn Fft<T>>>,
    scratch_len: usize,
}

impl<T: Real> AxisPlans<T> {
    fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let fwd: Vec<_> = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inv: Vec<_> = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let scratch_len = fwd
            .iter()
            .chain(inv.iter())
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            dims: dims.to_vec(),
            fwd,
            inv,
            scratch_len,
        }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn transform(&self, buf: &mut [Cplx<T>], inverse: bool) {
        let plans = if inverse { &self.inv } else { &self.fwd };
        let total = buf.len();
        let mut scratch = vec![Cplx::new(T::zero(), T::zero()); self.scratch_len];
        let mut tmp = vec![Cplx::new(T::zero(), T::zero()); total];
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.dims[axis];
            let inner: usize = self.dims[axis + 1..].iter().product();
            if n == 1 {
                continue;
            }
            if inner == 1 {
                plan.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let block = n * inner;
            for (src, dst) in buf.chunks_mut(block).zip(tmp.chunks_mut(block)) {
                transpose(src, dst, n, inner);
                plan.process_with_scratch(dst, &mut scratch);
                transpose(dst, src, inner, n);
            }
        }
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Wavenumber tables for one axis.
#[derive(Clone, Debug)]
struct AxisWaves<T> {
    /// Derivative wavenumber, zero at the Nyquist index.
    kd: Vec<T>,
    /// Full `k²`, used by the Laplacian.
    ksq: Vec<T>,
    /// Kept by the 2/3 rule.
    keep: Vec<bool>,
}

impl<T: Real> AxisWaves<T> {
    fn new(k: &[T]) -> Self {
        let n = k.len();
        let kd = k
            .iter()
            .enumerate()
            .map(|(i, &v)| if n % 2 == 0 && i == n / 2 { T::zero() } else { v })
            .collect();
        let ksq = k.iter().map(|&v| v * v).collect();
        let keep = (0..n).map(|i| 3 * fft_index(i, n).unsigned_abs() <= n).collect();
        Self { kd, ksq, keep }
    }
}

fn neg_index(i: usize, n: usize) -> usize {
    if i == 0 {
        0
    } else {
        n - i
    }
}

/// Flat index of `−k` for every mode `k` of a row-major array.
fn mirror_table(dims: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            for d in (0..dims.len()).rev() {
                idx[d] = rem % dims[d];
                rem /= dims[d];
            }
            idx.iter().zip(dims).fold(0, |m, (&i, &n)| m * n + neg_index(i, n))
        })
        .collect()
}

/// Split the transform of `f + i·g` into the transforms of real `f` and `g`.
fn unpack_pair<T: Real>(h: &[Cplx<T>], mirror: &[usize]) -> (Vec<Cplx<T>>, Vec<Cplx<T>>) {
    let half = T::lit(0.5);
    let mut a = Vec::with_capacity(h.len());
    let mut b = Vec::with_capacity(h.len());
    for (&hk, &m) in h.iter().zip(mirror) {
        let hm = h[m].conj();
        a.push((hk + hm) * half);
        let d = (hk - hm) * half;
        // (hk − conj(h₋k)) / (2i)
        b.push(Cplx::new(d.im, -d.re));
    }
    (a, b)
}

/// Spectral operator set on the reflection-extended slab.
pub struct Spectral<T: Real> {
    pub grid: Grid<T>,
    plans: AxisPlans<T>,
    waves: [AxisWaves<T>; 3],
    mirror: Vec<usize>,
}

impl<T: Real> Spectral<T> {
    pub fn new(spec: &GridSpec<T>) -> Result<Self> {
        let grid = make_grid(spec)?;
        let dims = [spec.nx, spec.ny, spec.nze()];
        let plans = AxisPlans::new(&dims);
        let mirror = mirror_table(&dims);
        let waves = [
            AxisWaves::new(&grid.k1),
            AxisWaves::new(&grid.k2),
            AxisWaves::new(&grid.k3),
        ];
        Ok(Self {
            grid,
            plans,
            waves,
            mirror,
        })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.grid.spec
    }

    /// Number of modes of the extended box.
    pub fn len_ext(&self) -> usize {
        self.plans.len()
    }

    fn dims(&self) -> [usize; 3] {
        let s = self.spec();
        [s.nx, s.ny, s.nze()]
    }

    #[inline]
    fn split(&self, flat: usize) -> (usize, usize, usize) {
        let [_, ny, nze] = self.dims();
        (flat / (ny * nze), (flat / nze) % ny, flat % nze)
    }

    fn extended_complex(&self, f: &ScalarField<T>, g: Option<&ScalarField<T>>) -> Vec<Cplx<T>> {
        let ef = reflect_extend(&self.grid, f);
        match g {
            None => ef.values.iter().map(|&v| Cplx::new(v, T::zero())).collect(),
            Some(g) => {
                let eg = reflect_extend(&self.grid, g);
                ef.values.iter().zip(&eg.values).map(|(&u, &v)| Cplx::new(u, v)).collect()
            }
        }
    }

    /// Transform of the reflection extension of `f`.
    pub fn forward(&self, f: &ScalarField<T>) -> Vec<Cplx<T>> {
        let mut buf = self.extended_complex(f, None);
        self.plans.transform(&mut buf, false);
        buf
    }

    /// Transforms of two real fields through one complex FFT.
    pub fn forward_pair(&self, f: &ScalarField<T>, g: &ScalarField<T>) -> (Vec<Cplx<T>>, Vec<Cplx<T>>) {
        let mut buf = self.extended_complex(f, Some(g));
        self.plans.transform(&mut buf, false);
        unpack_pair(&buf, &self.mirror)
    }

    pub fn forward_many(&self, fields: &[&ScalarField<T>]) -> Vec<Vec<Cplx<T>>> {
        let mut out = Vec::with_capacity(fields.len());
        for chunk in fields.chunks(2) {
            if chunk.len() == 2 {
                let (a, b) = self.forward_pair(chunk[0], chunk[1]);
                out.push(a);
                out.push(b);
            } else {
                out.push(self.forward(chunk[0]));
            }
        }
        out
    }

    fn restrict_real(&self, buf: &[Cplx<T>], parity: Parity, imag: bool) -> ScalarField<T> {
        let s = self.spec();
        let (nzp, nze) = (s.nzp(), s.nze());
        let norm = T::one() / T::from_count(self.len_ext());
        let mut values = Vec::with_capacity(s.len());
        for col in buf.chunks(nze) {
            for c in &col[..nzp] {
                values.push(norm * if imag { c.im } else { c.re });
            }
        }
        let mut f = ScalarField {
            nx: s.nx,
            ny: s.ny,
            nz: s.nz,
            values,
            parity,
        };
        if parity == Parity::Odd {
            for col in f.values.chunks_mut(nzp) {
                col[0] = T::zero();
                col[nzp - 1] = T::zero();
            }
        }
        f
    }

    /// Inverse transform restricted to the slab, tagged with `parity`.
    pub fn inverse(&self, hat: &[Cplx<T>], parity: Parity) -> ScalarField<T> {
        let mut buf = hat.to_vec();
        self.plans.transform(&mut buf, true);
        self.restrict_real(&buf, parity, false)
    }

    /// Inverse of two spectra of real fields through one complex FFT.
    pub fn inverse_pair(
        &self,
        a: &[Cplx<T>],
        pa: Parity,
        b: &[Cplx<T>],
        pb: Parity,
    ) -> (ScalarField<T>, ScalarField<T>) {
        let mut buf: Vec<_> = a.iter().zip(b).map(|(&x, &y)| x + Cplx::new(-y.im, y.re)).collect();
        self.plans.transform(&mut buf, true);
        (self.restrict_real(&buf, pa, false), self.restrict_real(&buf, pb, true))
    }

    pub fn inverse_many(&self, hats: &[(Vec<Cplx<T>>, Parity)]) -> Vec<ScalarField<T>> {
        let mut out = Vec::with_capacity(hats.len());
        for chunk in hats.chunks(2) {
            if chunk.len() == 2 {
                let (a, b) = self.inverse_pair(&chunk[0].0, chunk[0].1, &chunk[1].0, chunk[1].1);
                out.push(a);
                out.push(b);
            } else {
                out.push(self.inverse(&chunk[0].0, chunk[0].1));
            }
        }
        out
    }

    /// Multiply a spectrum by `(i k₁)^a₁ (i k₂)^a₂ (i k₃)^a₃`.
    pub fn deriv_hat(&self, hat: &[Cplx<T>], alpha: [usize; 3]) -> Vec<Cplx<T>> {
        if alpha == [0, 0, 0] {
            return hat.to_vec();
        }
        let [nx, ny, nze] = self.dims();
        let pow = |k: T, n: usize| -> Cplx<T> {
            let mut z = Cplx::new(T::one(), T::zero());
            for _ in 0..n {
                z = z * Cplx::new(T::zero(), k);
            }
            z
        };
        let f1: Vec<_> = (0..nx).map(|i| pow(self.waves[0].kd[i], alpha[0])).collect();
        let f2: Vec<_> = (0..ny).map(|j| pow(self.waves[1].kd[j], alpha[1])).collect();
        let f3: Vec<_> = (0..nze).map(|m| pow(self.waves[2].kd[m], alpha[2])).collect();
        let mut out = Vec::with_capacity(hat.len());
        for i in 0..nx {
            for j in 0..ny {
                let fij = f1[i] * f2[j];
                let base = (i * ny + j) * nze;
                for m in 0..nze {
                    out.push(hat[base + m] * fij * f3[m]);
                }
            }
        }
        out
    }

    /// Spectral derivative along `axis` (0, 1 or 2).
    pub fn derivative(&self, f: &ScalarField<T>, axis: usize) -> ScalarField<T> {
        let mut alpha = [0; 3];
        alpha[axis] = 1;
        let parity = if axis == 2 { f.parity.flip() } else { f.parity };
        self.inverse(&self.deriv_hat(&self.forward(f), alpha), parity)
    }

    /// Derivative wavenumber vector of mode `flat`.
    #[inline]
    pub fn kvec(&self, flat: usize) -> [T; 3] {
        let (i, j, m) = self.split(flat);
        [self.waves[0].kd[i], self.waves[1].kd[j], self.waves[2].kd[m]]
    }

    /// `|k|²` of mode `flat` (Nyquist included).
    #[inline]
    pub fn ksq(&self, flat: usize) -> T {
        let (i, j, m) = self.split(flat);
        self.waves[0].ksq[i] + self.waves[1].ksq[j] + self.waves[2].ksq[m]
    }

    /// Zero every mode outside the 2/3 band (no-op when dealiasing is off).
    pub fn dealias(&self, hat: &mut [Cplx<T>]) {
        if !self.spec().dealias {
            return;
        }
        let [nx, ny, nze] = self.dims();
        let zero = Cplx::new(T::zero(), T::zero());
        for i in 0..nx {
            for j in 0..ny {
                let base = (i * ny + j) * nze;
                let row_keep = self.waves[0].keep[i] && self.waves[1].keep[j];
                for m in 0..nze {
                    if !(row_keep && self.waves[2].keep[m]) {
                        hat[base + m] = zero;
                    }
                }
            }
        }
    }

    /// Solve `−Δu = f` on the extended box with zero mean.
    pub fn inverse_laplacian_hat(&self, hat: &[Cplx<T>]) -> Vec<Cplx<T>> {
        hat.iter()
            .enumerate()
            .map(|(flat, &v)| {
                let k2 = self.ksq(flat);
                if k2 == T::zero() {
                    Cplx::new(T::zero(), T::zero())
                } else {
                    v / k2
                }
            })
            .collect()
    }

    /// Evaluate the trigonometric interpolant of a spectrum at an arbitrary
    /// point of the extended box.
    pub fn eval_at(&self, hat: &[Cplx<T>], p: [T; 3]) -> T {
        let [nx, ny, nze] = self.dims();
        let g = &self.grid;
        let s = self.spec();
        let phase = |k: &[T], x: T| -> Vec<Cplx<T>> { k.iter().map(|&kk| Cplx::from_polar(T::one(), kk * x)).collect() };
        // sample origin is (−Lx, −Ly, −δ); the Nyquist column contributes its cosine part only
        let e1 = phase(&g.k1, p[0] + s.lx);
        let e2 = phase(&g.k2, p[1] + s.ly);
        let e3 = phase(&g.k3, p[2] + s.delta);
        let mut acc = Cplx::new(T::zero(), T::zero());
        for i in 0..nx {
            for j in 0..ny {
                let eij = e1[i] * e2[j];
                let base = (i * ny + j) * nze;
                let mut col = Cplx::new(T::zero(), T::zero());
                for m in 0..nze {
                    col = col + hat[base + m] * e3[m];
                }
                acc = acc + col * eij;
            }
        }
        acc.re / T::from_count(self.len_ext())
    }
}

/// Real samples on the horizontal torus, layout `[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2<T> {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
}

impl<T: Real> Field2<T> {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            values: vec![T::zero(); nx * ny],
        }
    }

    pub fn from_fn(grid: &Grid<T>, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.x1.len() * grid.x2.len());
        for &x1 in &grid.x1 {
            for &x2 in &grid.x2 {
                values.push(f(x1, x2));
            }
        }
        Self {
            nx: grid.x1.len(),
            ny: grid.x2.len(),
            values,
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn axpy(&self, a: T, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(&u, &v)| u + a * v).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| a * v).collect(),
            ..self.clone()
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(&u, &v)| u * v).collect(),
            ..self.clone()
        }
    }
}

/// Spectral operator set on the horizontal torus.
pub struct Spectral2<T: Real> {
    pub grid: Grid<T>,
    plans: AxisPlans<T>,
    waves: [AxisWaves<T>; 2],
    mirror: Vec<usize>,
}

impl<T: Real> Spectral2<T> {
    pub fn new(spec: &GridSpec<T>) -> Result<Self> {
        let grid = make_grid(spec)?;
        let plans = AxisPlans::new(&[spec.nx, spec.ny]);
        let waves = [AxisWaves::new(&grid.k1), AxisWaves::new(&grid.k2)];
        let mirror = mirror_table(&[spec.nx, spec.ny]);
        Ok(Self {
            grid,
            plans,
            waves,
            mirror,
        })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.grid.spec
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, f: &Field2<T>) -> Vec<Cplx<T>> {
        let mut buf: Vec<_> = f.values.iter().map(|&v| Cplx::new(v, T::zero())).collect();
        self.plans.transform(&mut buf, false);
        buf
    }

    pub fn forward_pair(&self, f: &Field2<T>, g: &Field2<T>) -> (Vec<Cplx<T>>, Vec<Cplx<T>>) {
        let mut buf: Vec<_> = f.values.iter().zip(&g.values).map(|(&u, &v)| Cplx::new(u, v)).collect();
        self.plans.transform(&mut buf, false);
        unpack_pair(&buf, &self.mirror)
    }

    pub fn inverse(&self, hat: &[Cplx<T>]) -> Field2<T> {
        let mut buf = hat.to_vec();
        self.plans.transform(&mut buf, true);
        let norm = T::one() / T::from_count(self.len());
        Field2 {
            nx: self.spec().nx,
            ny: self.spec().ny,
            values: buf.iter().map(|c| c.re * norm).collect(),
        }
    }

    pub fn inverse_pair(&self, a: &[Cplx<T>], b: &[Cplx<T>]) -> (Field2<T>, Field2<T>) {
        let mut buf: Vec<_> = a.iter().zip(b).map(|(&x, &y)| x + Cplx::new(-y.im, y.re)).collect();
        self.plans.transform(&mut buf, true);
        let norm = T::one() / T::from_count(self.len());
        let (nx, ny) = (self.spec().nx, self.spec().ny);
        (
            Field2 {
                nx,
                ny,
                values: buf.iter().map(|c| c.re * norm).collect(),
            },
            Field2 {
                nx,
                ny,
                values: buf.iter().map(|c| c.im * norm).collect(),
            },
        )
    }

    pub fn deriv_hat(&self, hat: &[Cplx<T>], alpha: [usize; 2]) -> Vec<Cplx<T>> {
        if alpha == [0, 0] {
            return hat.to_vec();
        }
        let ny = self.spec().ny;
        let pow = |k: T, n: usize| -> Cplx<T> {
            let mut z = Cplx::new(T::one(), T::zero());
            for _ in 0..n {
                z = z * Cplx::new(T::zero(), k);
            }
            z
        };
        hat.iter()
            .enumerate()
            .map(|(flat, &v)| v * pow(self.waves[0].kd[flat / ny], alpha[0]) * pow(self.waves[1].kd[flat % ny], alpha[1]))
            .collect()
    }

    pub fn derivative(&self, f: &Field2<T>, axis: usize) -> Field2<T> {
        let mut alpha = [0; 2];
        alpha[axis] = 1;
        self.inverse(&self.deriv_hat(&self.forward(f), alpha))
    }

    #[inline]
    pub fn kvec(&self, flat: usize) -> [T; 2] {
        let ny = self.spec().ny;
        [self.waves[0].kd[flat / ny], self.waves[1].kd[flat % ny]]
    }

    #[inline]
    pub fn ksq(&self, flat: usize) -> T {
        let ny = self.spec().ny;
        self.waves[0].ksq[flat / ny] + self.waves[1].ksq[flat % ny]
    }

    pub fn dealias(&self, hat: &mut [Cplx<T>]) {
        if !self.spec().dealias {
            return;
        }
        let ny = self.spec().ny;
        for (flat, v) in hat.iter_mut().enumerate() {
            if !(self.waves[0].keep[flat / ny] && self.waves[1].keep[flat % ny]) {
                *v = Cplx::new(T::zero(), T::zero());
            }
        }
    }

    pub fn inverse_laplacian_hat(&self, hat: &[Cplx<T>]) -> Vec<Cplx<T>> {
        hat.iter()
            .enumerate()
            .map(|(flat, &v)| {
                let k2 = self.ksq(flat);
                if k2 == T::zero() {
                    Cplx::new(T::zero(), T::zero())
                } else {
                    v / k2
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn spectral() -> Spectral<f64> {
        Spectral::new(&GridSpec::new(1.5, 1.0, 0.4, 16, 8, 8)).unwrap()
    }

    #[test]
    fn forward_inverse_round_trip() {
        let sp = spectral();
        let f = ScalarField::from_fn(&sp.grid, Parity::Even, |x, y, z| (x.sin() + 0.3 * y.cos()) * (1.0 + z * z));
        let back = sp.inverse(&sp.forward(&f), Parity::Even);
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn paired_transforms_match_single_ones() {
        let sp = spectral();
        let f = ScalarField::from_fn(&sp.grid, Parity::Even, |x, y, _| (2.0 * x).cos() * y.sin());
        let d = 0.4;
        let g = ScalarField::from_fn(&sp.grid, Parity::Odd, |x, _, z| {
            x.sin() * (std::f64::consts::PI * z / (2.0 * d)).cos()
        });
        let (fa, ga) = sp.forward_pair(&f, &g);
        let (fb, gb) = (sp.forward(&f), sp.forward(&g));
        for i in 0..fa.len() {
            assert!((fa[i] - fb[i]).norm() < 1e-11);
            assert!((ga[i] - gb[i]).norm() < 1e-11);
        }
        let (f2, g2) = sp.inverse_pair(&fa, Parity::Even, &ga, Parity::Odd);
        for i in 0..f.values.len() {
            assert!((f2.values[i] - f.values[i]).abs() < 1e-13);
            assert!((g2.values[i] - g.values[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn derivatives_of_trigonometric_modes() {
        let sp = spectral();
        let (lx, ly, d) = (1.5, 1.0, 0.4);
        let a = std::f64::consts::PI / lx;
        let b = std::f64::consts::PI / ly;
        let c = std::f64::consts::PI / (2.0 * d);
        let f = ScalarField::from_fn(&sp.grid, Parity::Even, |x, y, z| (a * x).sin() * (b * y).cos() * (c * z).sin());
        let d1 = sp.derivative(&f, 0);
        let d2 = sp.derivative(&f, 1);
        let d3 = sp.derivative(&f, 2);
        assert_eq!(d3.parity, Parity::Odd);
        for &((x, y), z) in &iproduct(&sp.grid) {
            let idx = sp.spec().idx(x, y, z);
            let (x, y, z) = (sp.grid.x1[x], sp.grid.x2[y], sp.grid.x3[z]);
            assert!((d1.values[idx] - a * (a * x).cos() * (b * y).cos() * (c * z).sin()).abs() < 1e-12);
            assert!((d2.values[idx] + b * (a * x).sin() * (b * y).sin() * (c * z).sin()).abs() < 1e-12);
            assert!((d3.values[idx] - c * (a * x).sin() * (b * y).cos() * (c * z).cos()).abs() < 1e-12);
        }
    }

    fn iproduct(g: &Grid<f64>) -> Vec<((usize, usize), usize)> {
        let mut v = Vec::new();
        for i in 0..g.x1.len() {
            for j in 0..g.x2.len() {
                for k in 0..g.x3.len() {
                    v.push(((i, j), k));
                }
            }
        }
        v
    }

    #[test]
    fn vertical_derivative_alternates_parity() {
        let sp = spectral();
        let f = ScalarField::from_fn(&sp.grid, Parity::Even, |x, _, z| x.cos() * (-(z * z) * 3.0).exp());
        let d = sp.derivative(&f, 2);
        assert_eq!(d.parity, Parity::Odd);
        assert_eq!(d.max_abs_on_walls(), 0.0);
        let ext = reflect_extend(&sp.grid, &d);
        assert!(crate::grid::parity_defect(&sp.grid, &ext, Parity::Odd) < 1e-12);
        assert_eq!(sp.derivative(&d, 2).parity, Parity::Even);
    }

    #[test]
    fn eval_at_reproduces_nodes_and_modes() {
        let sp = spectral();
        let f = ScalarField::from_fn(&sp.grid, Parity::Even, |x, y, z| {
            (std::f64::consts::PI * x / 1.5).cos() * (std::f64::consts::PI * y).sin() + z.cos()
        });
        let hat = sp.forward(&f);
        let idx = sp.spec().idx(3, 5, 2);
        let p = [sp.grid.x1[3], sp.grid.x2[5], sp.grid.x3[2]];
        assert!((sp.eval_at(&hat, p) - f.values[idx]).abs() < 1e-12);
        let g = ScalarField::from_fn(&sp.grid, Parity::Even, |x, _, _| (std::f64::consts::PI * x / 1.5).sin());
        let p = [0.123, -0.3, 0.05];
        let v = sp.eval_at(&sp.forward(&g), p);
        assert!((v - (std::f64::consts::PI * 0.123 / 1.5).sin()).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_round_trip_and_derivative() {
        let sp = Spectral2::new(&GridSpec::new(2.0, 1.0, 1.0, 16, 8, 4)).unwrap();
        let f = Field2::from_fn(&sp.grid, |x, y| (std::f64::consts::PI * x / 2.0).sin() * (std::f64::consts::PI * y).cos());
        let d = sp.derivative(&f, 1);
        for (n, &v) in d.values.iter().enumerate() {
            let (x, y) = (sp.grid.x1[n / 8], sp.grid.x2[n % 8]);
            let exact = -std::f64::consts::PI * (std::f64::consts::PI * x / 2.0).sin() * (std::f64::consts::PI * y).sin();
            assert!((v - exact).abs() < 1e-12);
        }
        let g = f.scale(0.5);
        let (a, b) = sp.forward_pair(&f, &g);
        let (f2, g2) = sp.inverse_pair(&a, &b);
        for n in 0..f.values.len() {
            assert!((f2.values[n] - f.values[n]).abs() < 1e-14);
            assert!((g2.values[n] - g.values[n]).abs() < 1e-14);
        }
    }
}
