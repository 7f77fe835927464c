//! Slab discretization, the 4δ-periodic reflection extension and the
//! characteristic weights ⟨x₁ ∓ t⟩^{1+σ}.
//!
//! The slab `(−Lx, Lx) × (−Ly, Ly) × (−δ, δ)` is sampled on a uniform grid.
//! Horizontally the grid is periodic. Vertically it holds `Nz + 1` nodes
//! including both walls, `x₃ₖ = −δ + k·2δ/Nz`. Reflecting across the walls
//! maps nodes onto nodes, so a slab field of known parity extends without
//! interpolation to a `2·Nz`-point grid of period `4δ`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Behaviour of a scalar field under reflection across `x₃ = ±δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity after one `∂₃`.
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Parity after `l` vertical derivatives.
    pub fn after_d3(self, l: usize) -> Self {
        if l % 2 == 0 {
            self
        } else {
            self.flip()
        }
    }

    pub fn sign<T: Real>(self) -> T {
        match self {
            Parity::Even => T::one(),
            Parity::Odd => -T::one(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl Mul for Parity {
    type Output = Parity;

    fn mul(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Discretization parameters of the slab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    /// Horizontal half-period along x₁.
    pub lx: T,
    /// Horizontal half-period along x₂.
    pub ly: T,
    /// Slab half-height δ.
    pub delta: T,
    pub nx: usize,
    pub ny: usize,
    /// Number of vertical intervals; the slab holds `nz + 1` nodes.
    pub nz: usize,
    /// Weight exponent σ ∈ (0, 1/3).
    pub sigma: T,
    /// Apply the 2/3 truncation to quadratic terms.
    pub dealias: bool,
}

impl<T: Real> GridSpec<T> {
    pub fn new(lx: T, ly: T, delta: T, nx: usize, ny: usize, nz: usize) -> Self {
        Self {
            lx,
            ly,
            delta,
            nx,
            ny,
            nz,
            sigma: T::lit(0.25),
            dealias: true,
        }
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    /// Same horizontal layout, different thickness.
    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nx", self.nx), ("ny", self.ny), ("nz", self.nz)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even and at least 4")));
            }
        }
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be a power of two")));
            }
        }
        if !(self.lx > T::zero()) || !(self.ly > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "horizontal half-periods must be positive (lx = {}, ly = {})",
                self.lx, self.ly
            )));
        }
        if !(self.delta > T::zero() && self.delta <= T::one()) {
            return Err(Error::InvalidGrid(format!("delta = {} must lie in (0, 1]", self.delta)));
        }
        let third = T::one() / T::lit(3.0);
        if !(self.sigma > T::zero() && self.sigma < third) {
            return Err(Error::InvalidGrid(format!("sigma = {} must lie in (0, 1/3)", self.sigma)));
        }
        Ok(())
    }

    pub fn dx(&self) -> T {
        T::lit(2.0) * self.lx / T::from_count(self.nx)
    }

    pub fn dy(&self) -> T {
        T::lit(2.0) * self.ly / T::from_count(self.ny)
    }

    pub fn dz(&self) -> T {
        T::lit(2.0) * self.delta / T::from_count(self.nz)
    }

    /// Nodes per vertical column, walls included.
    pub fn nzp(&self) -> usize {
        self.nz + 1
    }

    /// Points per period of the reflection-extended vertical grid.
    pub fn nze(&self) -> usize {
        2 * self.nz
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nzp()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len2(&self) -> usize {
        self.nx * self.ny
    }

    /// Index of node `(i, j, k)` in slab storage (x₃ fastest).
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nzp() + k
    }

    /// Horizontal layout identical (the thickness may differ).
    pub fn same_horizontal(&self, other: &GridSpec<T>) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }

    pub fn same_layout(&self, other: &GridSpec<T>) -> bool {
        self.same_horizontal(other) && self.nz == other.nz
    }
}

/// Collocation coordinates and wavenumbers of a validated [`GridSpec`].
#[derive(Clone, Debug)]
pub struct Grid<T> {
    pub spec: GridSpec<T>,
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    /// Slab nodes, `nz + 1` of them, walls included.
    pub x3: Vec<T>,
    /// Nodes of one `4δ` period of the extension, starting at `−δ`.
    pub x3_ext: Vec<T>,
    /// Horizontal wavenumbers, multiples of `2π/(2Lx)` and `2π/(2Ly)`.
    pub k1: Vec<T>,
    pub k2: Vec<T>,
    /// Vertical wavenumbers of the extension, multiples of `2π/(4δ)`.
    pub k3: Vec<T>,
}

/// Signed FFT frequency index.
pub fn fft_index(n: usize, len: usize) -> isize {
    if n <= len / 2 {
        n as isize
    } else {
        n as isize - len as isize
    }
}

fn wavenumbers<T: Real>(len: usize, period: T) -> Vec<T> {
    let base = T::TAU() / period;
    (0..len).map(|n| base * T::lit(fft_index(n, len) as f64)).collect()
}

/// Build coordinates and wavenumbers for a grid specification.
pub fn make_grid<T: Real>(spec: &GridSpec<T>) -> Result<Grid<T>> {
    spec.validate()?;
    let two = T::lit(2.0);
    let x1 = (0..spec.nx).map(|i| -spec.lx + spec.dx() * T::from_count(i)).collect();
    let x2 = (0..spec.ny).map(|j| -spec.ly + spec.dy() * T::from_count(j)).collect();
    let x3 = (0..spec.nzp()).map(|k| -spec.delta + spec.dz() * T::from_count(k)).collect();
    let x3_ext = (0..spec.nze()).map(|m| -spec.delta + spec.dz() * T::from_count(m)).collect();
    Ok(Grid {
        k1: wavenumbers(spec.nx, two * spec.lx),
        k2: wavenumbers(spec.ny, two * spec.ly),
        k3: wavenumbers(spec.nze(), T::lit(4.0) * spec.delta),
        spec: spec.clone(),
        x1,
        x2,
        x3,
        x3_ext,
    })
}

impl<T: Real> Grid<T> {
    /// Vertical extent of one period of the extension.
    pub fn vertical_period(&self) -> T {
        T::lit(4.0) * self.spec.delta
    }

    /// Slab node represented by extended index `m`, and the sign picked up
    /// by an odd field on the way (`false` for the image half).
    #[inline]
    pub fn reflect_index(&self, m: usize) -> (usize, bool) {
        let nz = self.spec.nz;
        if m <= nz {
            (m, true)
        } else {
            (2 * nz - m, false)
        }
    }

    /// Trapezoidal weights of the vertical nodes, summing to `2δ`.
    pub fn vertical_weights(&self) -> Vec<T> {
        let h = self.spec.dz();
        let half = T::lit(0.5);
        (0..self.spec.nzp())
            .map(|k| if k == 0 || k == self.spec.nz { h * half } else { h })
            .collect()
    }
}

/// Real samples on the slab grid tagged with their reflection parity.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub values: Vec<T>,
    pub parity: Parity,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(spec: &GridSpec<T>, parity: Parity) -> Self {
        Self {
            nx: spec.nx,
            ny: spec.ny,
            nz: spec.nz,
            values: vec![T::zero(); spec.len()],
            parity,
        }
    }

    /// Sample `f(x₁, x₂, x₃)` at every slab node.
    pub fn from_fn(grid: &Grid<T>, parity: Parity, f: impl Fn(T, T, T) -> T) -> Self {
        let s = &grid.spec;
        let mut values = Vec::with_capacity(s.len());
        for &x1 in &grid.x1 {
            for &x2 in &grid.x2 {
                for &x3 in &grid.x3 {
                    values.push(f(x1, x2, x3));
                }
            }
        }
        Self {
            nx: s.nx,
            ny: s.ny,
            nz: s.nz,
            values,
            parity,
        }
    }

    pub fn nzp(&self) -> usize {
        self.nz + 1
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.values[(i * self.ny + j) * (self.nz + 1) + k]
    }

    pub fn matches(&self, spec: &GridSpec<T>) -> bool {
        self.nx == spec.nx && self.ny == spec.ny && self.nz == spec.nz
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nz == other.nz
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest magnitude among the wall samples `x₃ = ±δ`.
    pub fn max_abs_on_walls(&self) -> T {
        let nzp = self.nzp();
        self.values
            .chunks(nzp)
            .fold(T::zero(), |m, col| m.max(col[0].abs()).max(col[nzp - 1].abs()))
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// `self + a·other`; parities must agree.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        debug_assert_eq!(self.parity, other.parity);
        Self {
            values: self.values.iter().zip(&other.values).map(|(&u, &v)| u + a * v).collect(),
            ..self.clone()
        }
    }

    /// Pointwise product; the parity multiplies.
    pub fn product(&self, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            values: self.values.iter().zip(&other.values).map(|(&u, &v)| u * v).collect(),
            parity: self.parity * other.parity,
            ..self.clone()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl<T: Real> Add for &ScalarField<T> {
    type Output = ScalarField<T>;

    fn add(self, rhs: Self) -> ScalarField<T> {
        self.axpy(T::one(), rhs)
    }
}

impl<T: Real> Sub for &ScalarField<T> {
    type Output = ScalarField<T>;

    fn sub(self, rhs: Self) -> ScalarField<T> {
        self.axpy(-T::one(), rhs)
    }
}

impl<T: Real> Neg for &ScalarField<T> {
    type Output = ScalarField<T>;

    fn neg(self) -> ScalarField<T> {
        self.map(|v| -v)
    }
}

/// Samples of a field continued to one full `4δ` period, layout `[i][j][m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedField<T> {
    pub nx: usize,
    pub ny: usize,
    pub nze: usize,
    pub values: Vec<T>,
}

/// Continue a slab field across the walls according to its parity.
pub fn reflect_extend<T: Real>(grid: &Grid<T>, f: &ScalarField<T>) -> ExtendedField<T> {
    let s = &grid.spec;
    let (nzp, nze) = (s.nzp(), s.nze());
    let sign = f.parity.sign::<T>();
    let mut values = Vec::with_capacity(s.nx * s.ny * nze);
    for col in f.values.chunks(nzp) {
        values.extend_from_slice(col);
        for m in nzp..nze {
            values.push(sign * col[2 * s.nz - m]);
        }
    }
    ExtendedField {
        nx: s.nx,
        ny: s.ny,
        nze,
        values,
    }
}

/// Restrict a periodic extension back to the slab nodes.
pub fn restrict<T: Real>(grid: &Grid<T>, ext: &ExtendedField<T>, parity: Parity) -> ScalarField<T> {
    let s = &grid.spec;
    let nzp = s.nzp();
    let mut values = Vec::with_capacity(s.len());
    for col in ext.values.chunks(ext.nze) {
        values.extend_from_slice(&col[..nzp]);
    }
    ScalarField {
        nx: s.nx,
        ny: s.ny,
        nz: s.nz,
        values,
        parity,
    }
}

/// Largest violation of `f(2δ − x₃) = ±f(x₃)` on an extended field.
pub fn parity_defect<T: Real>(grid: &Grid<T>, ext: &ExtendedField<T>, parity: Parity) -> T {
    let nz = grid.spec.nz;
    let sign = parity.sign::<T>();
    let mut worst = T::zero();
    for col in ext.values.chunks(ext.nze) {
        for m in 1..nz {
            worst = worst.max((col[2 * nz - m] - sign * col[m]).abs());
        }
        if parity == Parity::Odd {
            worst = worst.max(col[0].abs()).max(col[nz].abs());
        }
    }
    worst
}

/// Japanese bracket `⟨u⟩ = (1 + u²)^{1/2}`.
#[inline]
pub fn bracket<T: Real>(u: T) -> T {
    (T::one() + u * u).sqrt()
}

/// Characteristic weight `⟨u⟩^{1+σ}`.
#[inline]
pub fn weight<T: Real>(u: T, sigma: T) -> T {
    (T::one() + u * u).powf((T::one() + sigma) / T::lit(2.0))
}

/// Sharp constant `C(r)` in `⟨a⟩ ≤ C(r)·⟨b⟩` for `|a − b| ≤ r`.
///
/// The ratio `⟨b + r⟩/⟨b⟩` peaks at `b = (√(r² + 4) − r)/2`, where it equals
/// `(r + √(r² + 4))/2`; for `r = 2` that is `1 + √2`.
pub fn bracket_shift_constant<T: Real>(r: T) -> T {
    (r + (r * r + T::lit(4.0)).sqrt()) / T::lit(2.0)
}

/// Characteristic coordinates `(u₊, u₋) = (x₁ − t, x₁ + t)`.
#[inline]
pub fn characteristic_coords<T: Real>(t: T, x1: T) -> (T, T) {
    (x1 - t, x1 + t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(nx: usize, nz: usize, lx: f64, delta: f64) -> GridSpec<f64> {
        GridSpec::new(lx, 1.0, delta, nx, 8, nz)
    }

    #[test]
    fn uniform_horizontal_samples() {
        let g = make_grid(&spec(8, 8, std::f64::consts::PI, 0.5)).unwrap();
        assert_eq!(g.x1.len(), 8);
        assert!((g.x1[0] + std::f64::consts::PI).abs() < 1e-15);
        for w in g.x1.windows(2) {
            assert!((w[1] - w[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        }
        assert!(*g.x1.last().unwrap() < std::f64::consts::PI);
    }

    #[test]
    fn extended_period_is_four_delta() {
        let g = make_grid(&spec(8, 8, 1.0, 0.5)).unwrap();
        assert_eq!(g.x3_ext.len(), 16);
        assert!((g.vertical_period() - 2.0).abs() < 1e-15);
        let h = g.spec.dz();
        assert!((g.x3_ext[15] + h - (-0.5 + 2.0)).abs() < 1e-14);
        // the lowest vertical wavenumber is 2π/(4δ)
        assert!((g.k3[1] - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn odd_sample_next_to_wall_maps_to_its_negative() {
        let g = make_grid(&spec(8, 8, 1.0, 0.5)).unwrap();
        let f = ScalarField::from_fn(&g, Parity::Odd, |_, _, x3| (std::f64::consts::PI * x3).cos());
        let ext = reflect_extend(&g, &f);
        // slab node k = nz - 1 sits at δ - h, its mirror at δ + h is m = nz + 1
        let (k, direct) = g.reflect_index(9);
        assert_eq!((k, direct), (7, false));
        let col = &ext.values[..16];
        assert!((col[9] + col[7]).abs() < 1e-15);
        assert!((g.x3_ext[9] - 0.5 - (0.5 - g.x3[7])).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(make_grid(&spec(7, 8, 1.0, 0.5)).is_err());
        assert!(make_grid(&spec(8, 6, 1.0, 0.5)).is_ok());
        assert!(make_grid(&spec(12, 8, 1.0, 0.5)).is_err());
        assert!(make_grid(&spec(8, 2, 1.0, 0.5)).is_err());
        assert!(make_grid(&spec(8, 8, -1.0, 0.5)).is_err());
        assert!(make_grid(&spec(8, 8, 1.0, 0.0)).is_err());
        assert!(make_grid(&spec(8, 8, 1.0, 1.5)).is_err());
        assert!(make_grid(&spec(8, 8, 1.0, 0.5).with_sigma(0.34)).is_err());
        assert!(make_grid(&spec(8, 8, 1.0, 0.5).with_sigma(0.0)).is_err());
    }

    #[test]
    fn cosine_extends_to_negative_cosine_on_image_half() {
        let delta = 0.5;
        let g = make_grid(&spec(8, 8, 1.0, delta)).unwrap();
        let c = |x3: f64| (std::f64::consts::PI * x3 / (2.0 * delta)).cos();
        let f = ScalarField::from_fn(&g, Parity::Odd, |_, _, x3| c(x3));
        let ext = reflect_extend(&g, &f);
        for (m, &x3) in g.x3_ext.iter().enumerate() {
            // on the image half the extension is f(2δ − x₃)·(−1) = cos(πx₃/2δ) as well
            assert!((ext.values[m] - c(x3)).abs() < 1e-14, "m = {m}");
        }
        assert!(parity_defect(&g, &ext, Parity::Odd) < 1e-14);
    }

    #[test]
    fn constant_even_field_extends_to_constant() {
        let g = make_grid(&spec(8, 8, 1.0, 0.3)).unwrap();
        let f = ScalarField::from_fn(&g, Parity::Even, |_, _, _| 1.0);
        let ext = reflect_extend(&g, &f);
        assert!(ext.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn weight_values() {
        assert_eq!(weight(0.0, 0.2), 1.0);
        assert!((weight(2.0_f64, 0.0) - 5.0_f64.sqrt()).abs() < 1e-15);
        assert!((weight(1.0_f64, 0.25) - 2.0_f64.powf(0.625)).abs() < 1e-15);
        assert!((weight(1.0_f64, 0.25) - 1.54221).abs() < 1e-5);
        assert_eq!(weight(-1.7, 0.25), weight(1.7, 0.25));
        assert!(weight(1.8, 0.25) > weight(1.7, 0.25));
    }

    #[test]
    fn characteristic_examples() {
        assert_eq!(characteristic_coords(0.0, 3.0), (3.0, 3.0));
        assert_eq!(characteristic_coords(2.0, 0.0), (-2.0, 2.0));
        assert_eq!(characteristic_coords(1.0, 1.0), (0.0, 2.0));
    }

    #[test]
    fn shift_constant_is_attained() {
        let c = bracket_shift_constant(2.0_f64);
        assert!((c - (1.0 + 2.0_f64.sqrt())).abs() < 1e-15);
        let b = 2.0_f64.sqrt() - 1.0;
        assert!((bracket(b + 2.0) / bracket(b) - c).abs() < 1e-14);
        assert!((bracket_shift_constant(0.0_f64) - 1.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn shifted_bracket_never_exceeds_the_sharp_constant(
            t in -50.0..50.0_f64,
            x1 in -50.0..50.0_f64,
            r in 0.0..2.0_f64,
            theta in 0.0..std::f64::consts::TAU,
            plus: bool,
        ) {
            let y1 = x1 + r * theta.cos();
            let pick = |x: f64| {
                let (up, um) = characteristic_coords(t, x);
                if plus { up } else { um }
            };
            let ratio = bracket(pick(x1)) / bracket(pick(y1));
            proptest::prop_assert!(ratio <= bracket_shift_constant(2.0) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn parity_algebra() {
        assert_eq!(Parity::Odd * Parity::Even, Parity::Odd);
        assert_eq!(Parity::Even * Parity::Even, Parity::Even);
        assert_eq!(Parity::Odd * Parity::Odd, Parity::Even);
        assert_eq!(Parity::Even.after_d3(3), Parity::Odd);
    }
}
