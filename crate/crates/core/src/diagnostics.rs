//! Weighted energies and fluxes, the vertical mean projection and the
//! quantities derived from them.
//!
//! For the `z₊` family the energy weight is `⟨u₋⟩^{2(1+σ)}` with
//! `u₋ = x₁ + t` and the flux density carries an extra `⟨u₊⟩^{−(1+σ)}`,
//! `u₊ = x₁ − t`; the `z₋` family swaps the two coordinates. Horizontal
//! integrals use the rectangle rule on the torus, vertical ones the trapezoid
//! rule on the slab nodes. `E^(k,l)` sums over the horizontal multi-indices
//! `(a₁, a₂)` with `a₁ + a₂ = k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{vector_hat, ElsasserState, VectorField};
use crate::grid::{characteristic_coords, weight, Grid, Parity, ScalarField};
use crate::scalar::Real;
use crate::spectral::{Cplx, Field2, Spectral, Spectral2};

/// Which components of a field enter an energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Full,
    Horizontal,
    Vertical,
    /// The full field after one more vertical derivative.
    D3,
}

impl Part {
    pub const ALL: [Part; 4] = [Part::Full, Part::Horizontal, Part::Vertical, Part::D3];

    pub fn as_str(self) -> &'static str {
        match self {
            Part::Full => "full",
            Part::Horizontal => "h",
            Part::Vertical => "v",
            Part::D3 => "d3",
        }
    }

    fn select<T: Real>(self, c: [T; 3]) -> T {
        match self {
            Part::Full | Part::D3 => c[0] + c[1] + c[2],
            Part::Horizontal => c[0] + c[1],
            Part::Vertical => c[2],
        }
    }
}

/// Energy weight `⟨u∓⟩^{2(1+σ)}` and flux weight
/// `⟨u∓⟩^{2(1+σ)}/⟨u±⟩^{1+σ}` at abscissa `x₁` and time `t`.
pub fn weights_at<T: Real>(plus: bool, x1: T, t: T, sigma: T) -> (T, T) {
    let (up, um) = characteristic_coords(t, x1);
    let (own, other) = if plus { (up, um) } else { (um, up) };
    let w = weight(other, sigma);
    let e = w * w;
    (e, e / weight(own, sigma))
}

fn weight_columns<T: Real>(grid: &Grid<T>, plus: bool, t: T) -> (Vec<T>, Vec<T>) {
    grid.x1.iter().map(|&x| weights_at(plus, x, t, grid.spec.sigma)).unzip()
}

/// Horizontal multi-indices of total order `k`.
pub fn multi_indices(k: usize) -> impl Iterator<Item = [usize; 2]> {
    (0..=k).rev().map(move |a| [a, k - a])
}

/// `Σ w(x₁)·f²` over the slab with the trapezoid rule in `x₃`.
fn slab_integral<T: Real>(grid: &Grid<T>, f: &ScalarField<T>, w: &[T]) -> T {
    let s = &grid.spec;
    let vw = grid.vertical_weights();
    let nzp = s.nzp();
    let mut total = T::zero();
    for (i, &wi) in w.iter().enumerate() {
        let mut col_sum = T::zero();
        for j in 0..s.ny {
            let base = (i * s.ny + j) * nzp;
            let mut acc = T::zero();
            for (k, &v) in vw.iter().enumerate() {
                let x = f.values[base + k];
                acc = acc + v * x * x;
            }
            col_sum = col_sum + acc;
        }
        total = total + wi * col_sum;
    }
    total * s.dx() * s.dy()
}

/// Weighted integrals of every derivative `∂₁^a₁ ∂₂^a₂ ∂₃^l` with
/// `a₁ + a₂ + l ≤ order`, per component, for both fields of one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeIntegrals<T> {
    pub t: T,
    pub sigma: T,
    pub order: usize,
    rows: Vec<[usize; 3]>,
    /// `[sign][row][component]`, sign 0 is `z₊`.
    energy: [Vec<[T; 3]>; 2],
    flux: [Vec<[T; 3]>; 2],
}

impl<T: Real> DerivativeIntegrals<T> {
    pub fn new(sp: &Spectral<T>, state: &ElsasserState<T>, order: usize) -> Self {
        let mut rows = vec![];
        for total in 0..=order {
            for l in 0..=total {
                for [a1, a2] in multi_indices(total - l) {
                    rows.push([a1, a2, l]);
                }
            }
        }
        let grid = &sp.grid;
        let mut energy = [vec![], vec![]];
        let mut flux = [vec![], vec![]];
        for (s, plus) in [(0, true), (1, false)] {
            let z = state.field(plus);
            let hats = vector_hat(sp, z);
            let (we, wf) = weight_columns(grid, plus, state.t);
            for alpha in &rows {
                let jobs: Vec<(Vec<Cplx<T>>, Parity)> = (0..3)
                    .map(|c| (sp.deriv_hat(&hats[c], *alpha), z.c[c].parity.after_d3(alpha[2])))
                    .collect();
                let fields = sp.inverse_many(&jobs);
                let mut e = [T::zero(); 3];
                let mut f = [T::zero(); 3];
                for c in 0..3 {
                    e[c] = slab_integral(grid, &fields[c], &we);
                    f[c] = slab_integral(grid, &fields[c], &wf);
                }
                energy[s].push(e);
                flux[s].push(f);
            }
        }
        Self {
            t: state.t,
            sigma: grid.spec.sigma,
            order,
            rows,
            energy,
            flux,
        }
    }

    fn row(&self, alpha: [usize; 2], l: usize) -> usize {
        let key = [alpha[0], alpha[1], l];
        self.rows
            .iter()
            .position(|r| *r == key)
            .unwrap_or_else(|| panic!("derivative {key:?} exceeds the tabulated order {}", self.order))
    }

    fn pick(&self, table: &[Vec<[T; 3]>; 2], plus: bool, alpha: [usize; 2], l: usize, part: Part) -> T {
        let s = if plus { 0 } else { 1 };
        let l = if part == Part::D3 { l + 1 } else { l };
        part.select(table[s][self.row(alpha, l)])
    }

    /// `E^(α,l)` of the selected part.
    pub fn alpha_energy(&self, plus: bool, alpha: [usize; 2], l: usize, part: Part) -> T {
        self.pick(&self.energy, plus, alpha, l, part)
    }

    /// Spatial integral of the flux density of `∂^α ∂₃^l`.
    pub fn alpha_flux_density(&self, plus: bool, alpha: [usize; 2], l: usize, part: Part) -> T {
        self.pick(&self.flux, plus, alpha, l, part)
    }

    pub fn energy(&self, plus: bool, k: usize, l: usize, part: Part) -> T {
        multi_indices(k).map(|a| self.alpha_energy(plus, a, l, part)).sum()
    }

    pub fn flux_density(&self, plus: bool, k: usize, l: usize, part: Part) -> T {
        multi_indices(k).map(|a| self.alpha_flux_density(plus, a, l, part)).sum()
    }

    /// Largest `k + l` for which every part is available.
    pub fn report_order(&self) -> usize {
        self.order.saturating_sub(1)
    }
}

/// `E±^(k,l)` of one part of one snapshot, computed directly.
pub fn weighted_energy<T: Real>(
    sp: &Spectral<T>,
    state: &ElsasserState<T>,
    plus: bool,
    k: usize,
    l: usize,
    part: Part,
) -> T {
    let z = state.field(plus);
    let hats = vector_hat(sp, z);
    let (we, _) = weight_columns(&sp.grid, plus, state.t);
    let l = if part == Part::D3 { l + 1 } else { l };
    let comps: &[usize] = match part {
        Part::Full | Part::D3 => &[0, 1, 2],
        Part::Horizontal => &[0, 1],
        Part::Vertical => &[2],
    };
    let mut total = T::zero();
    for a in multi_indices(k) {
        for &c in comps {
            let f = sp.inverse(&sp.deriv_hat(&hats[c], [a[0], a[1], l]), z.c[c].parity.after_d3(l));
            total = total + slab_integral(&sp.grid, &f, &we);
        }
    }
    total
}

/// One `(sign, k, l)` row of an [`EnergyReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry<T> {
    pub plus: bool,
    pub k: usize,
    pub l: usize,
    pub full: T,
    pub horizontal: T,
    pub vertical: T,
    pub d3: T,
}

impl<T: Real> EnergyEntry<T> {
    pub fn part(&self, part: Part) -> T {
        match part {
            Part::Full => self.full,
            Part::Horizontal => self.horizontal,
            Part::Vertical => self.vertical,
            Part::D3 => self.d3,
        }
    }
}

/// All weighted energies with `k + l ≤ max_order` of one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub t: T,
    pub sigma: T,
    pub max_order: usize,
    pub entries: Vec<EnergyEntry<T>>,
}

impl<T: Real> EnergyReport<T> {
    pub fn from_integrals(ints: &DerivativeIntegrals<T>) -> Self {
        let max_order = ints.report_order();
        let mut entries = vec![];
        for plus in [true, false] {
            for total in 0..=max_order {
                for l in 0..=total {
                    let k = total - l;
                    entries.push(EnergyEntry {
                        plus,
                        k,
                        l,
                        full: ints.energy(plus, k, l, Part::Full),
                        horizontal: ints.energy(plus, k, l, Part::Horizontal),
                        vertical: ints.energy(plus, k, l, Part::Vertical),
                        d3: ints.energy(plus, k, l, Part::D3),
                    });
                }
            }
        }
        Self {
            t: ints.t,
            sigma: ints.sigma,
            max_order,
            entries,
        }
    }

    pub fn new(sp: &Spectral<T>, state: &ElsasserState<T>, max_order: usize) -> Self {
        Self::from_integrals(&DerivativeIntegrals::new(sp, state, max_order + 1))
    }

    pub fn get(&self, plus: bool, k: usize, l: usize, part: Part) -> T {
        self.entries
            .iter()
            .find(|e| e.plus == plus && e.k == k && e.l == l)
            .map(|e| e.part(part))
            .unwrap_or_else(|| panic!("energy ({k}, {l}) exceeds the report order {}", self.max_order))
    }
}

/// One running flux `F±^(k,l)` for each part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxEntry<T> {
    pub plus: bool,
    pub k: usize,
    pub l: usize,
    /// Indexed like [`Part::ALL`].
    pub value: [T; 4],
}

/// Trapezoidal time integration of the flux densities between snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxAccumulator<T> {
    pub max_order: usize,
    pub entries: Vec<FluxEntry<T>>,
    pub last_t: Option<T>,
    last_density: Vec<[T; 4]>,
}

impl<T: Real> FluxAccumulator<T> {
    pub fn new(max_order: usize) -> Self {
        let mut entries = vec![];
        for plus in [true, false] {
            for total in 0..=max_order {
                for l in 0..=total {
                    entries.push(FluxEntry {
                        plus,
                        k: total - l,
                        l,
                        value: [T::zero(); 4],
                    });
                }
            }
        }
        let n = entries.len();
        Self {
            max_order,
            entries,
            last_t: None,
            last_density: vec![[T::zero(); 4]; n],
        }
    }

    /// Add the interval ending at the snapshot behind `ints`.
    pub fn push(&mut self, ints: &DerivativeIntegrals<T>) -> Result<()> {
        if ints.report_order() < self.max_order {
            return Err(Error::ShapeMismatch(format!(
                "flux of order {} needs derivatives of order {}",
                self.max_order,
                self.max_order + 1
            )));
        }
        if let Some(last) = self.last_t {
            if ints.t < last {
                return Err(Error::OutOfOrder {
                    t: ints.t.to_f64_lossy(),
                    last: last.to_f64_lossy(),
                });
            }
        }
        let density: Vec<[T; 4]> = self
            .entries
            .iter()
            .map(|e| Part::ALL.map(|p| ints.flux_density(e.plus, e.k, e.l, p)))
            .collect();
        if let Some(last) = self.last_t {
            let half = T::lit(0.5) * (ints.t - last);
            for (e, (now, before)) in self.entries.iter_mut().zip(density.iter().zip(&self.last_density)) {
                for p in 0..4 {
                    e.value[p] = e.value[p] + half * (now[p] + before[p]);
                }
            }
        }
        self.last_density = density;
        self.last_t = Some(ints.t);
        Ok(())
    }

    pub fn get(&self, plus: bool, k: usize, l: usize, part: Part) -> T {
        let p = Part::ALL.iter().position(|&q| q == part).unwrap();
        self.entries
            .iter()
            .find(|e| e.plus == plus && e.k == k && e.l == l)
            .map(|e| e.value[p])
            .unwrap_or_else(|| panic!("flux ({k}, {l}) exceeds the accumulated order {}", self.max_order))
    }
}

/// Convenience wrapper computing the snapshot integrals on the way.
pub fn accumulate_flux<T: Real>(
    mut acc: FluxAccumulator<T>,
    sp: &Spectral<T>,
    state: &ElsasserState<T>,
) -> Result<FluxAccumulator<T>> {
    acc.push(&DerivativeIntegrals::new(sp, state, acc.max_order + 1))?;
    Ok(acc)
}

/// Family of a term of the thickness-weighted total energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// `δ^{2l−1} E^(k,l)(z)`.
    Field,
    /// `δ^{−3} E^(k,0)(z³)`.
    Vertical,
    /// `δ^{2l−1} E^(k,l)(∂₃z)`.
    D3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTerm<T> {
    pub plus: bool,
    pub kind: TermKind,
    pub k: usize,
    pub l: usize,
    /// Unweighted energy on the slab.
    pub energy: T,
    /// Power of `δ` multiplying it.
    pub factor: T,
}

impl<T: Real> FunctionalTerm<T> {
    pub fn value(&self) -> T {
        self.factor * self.energy
    }
}

/// Orders of the three sums of the total energy. The top order of the `∂₃z`
/// sum is `top/2 + 2`.
pub fn functional_orders(top: usize) -> (usize, usize, usize) {
    (top, top.saturating_sub(1), top / 2 + 2)
}

/// Every term of the thickness-weighted total energy, in a fixed order.
pub fn functional_terms<T: Real>(report: &EnergyReport<T>, delta: T, top: usize) -> Vec<FunctionalTerm<T>> {
    let (n_field, n_vertical, n_d3) = functional_orders(top);
    assert!(
        report.max_order >= n_field.max(n_d3),
        "the report must reach order {}",
        n_field.max(n_d3)
    );
    let power = |l: usize| delta.powi(2 * l as i32 - 1);
    let mut terms = vec![];
    for plus in [true, false] {
        for total in 0..=n_field {
            for l in 0..=total {
                let k = total - l;
                terms.push(FunctionalTerm {
                    plus,
                    kind: TermKind::Field,
                    k,
                    l,
                    energy: report.get(plus, k, l, Part::Full),
                    factor: power(l),
                });
            }
        }
        for k in 0..=n_vertical {
            terms.push(FunctionalTerm {
                plus,
                kind: TermKind::Vertical,
                k,
                l: 0,
                energy: report.get(plus, k, 0, Part::Vertical),
                factor: delta.powi(-3),
            });
        }
        for total in 0..=n_d3 {
            for l in 0..=total {
                let k = total - l;
                terms.push(FunctionalTerm {
                    plus,
                    kind: TermKind::D3,
                    k,
                    l,
                    energy: report.get(plus, k, l, Part::D3),
                    factor: power(l),
                });
            }
        }
    }
    terms
}

/// The thickness-weighted total energy of a snapshot.
pub fn total_energy_functional<T: Real>(report: &EnergyReport<T>, delta: T, top: usize) -> T {
    functional_terms(report, delta, top).iter().map(FunctionalTerm::value).sum()
}

/// Vertical average with the trapezoid rule.
pub fn mean_project<T: Real>(grid: &Grid<T>, f: &ScalarField<T>) -> Field2<T> {
    let s = &grid.spec;
    let vw = grid.vertical_weights();
    let inv = T::one() / (T::lit(2.0) * s.delta);
    let values = f
        .values
        .chunks(s.nzp())
        .map(|col| col.iter().zip(&vw).fold(T::zero(), |a, (&x, &w)| a + w * x) * inv)
        .collect();
    Field2 {
        nx: s.nx,
        ny: s.ny,
        values,
    }
}

/// Vertical averages of the horizontal components.
pub fn mean_project_h<T: Real>(grid: &Grid<T>, z: &VectorField<T>) -> [Field2<T>; 2] {
    [mean_project(grid, &z.c[0]), mean_project(grid, &z.c[1])]
}

/// Height-average and fluctuation of both fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<T> {
    /// `[sign][component]`, sign 0 is `z₊`.
    pub zbar: [[Field2<T>; 2]; 2],
    /// `w = (z^h − z̄^h, z³)` for both signs.
    pub w: [VectorField<T>; 2],
}

pub fn decompose<T: Real>(grid: &Grid<T>, state: &ElsasserState<T>) -> Decomposition<T> {
    let split = |z: &VectorField<T>| {
        let bar = mean_project_h(grid, z);
        let mut w = z.clone();
        for c in 0..2 {
            let nzp = grid.spec.nzp();
            for (col, &m) in w.c[c].values.chunks_mut(nzp).zip(&bar[c].values) {
                for v in col {
                    *v = *v - m;
                }
            }
        }
        (bar, w)
    };
    let (bp, wp) = split(&state.zp);
    let (bm, wm) = split(&state.zm);
    Decomposition {
        zbar: [bp, bm],
        w: [wp, wm],
    }
}

impl<T: Real> Decomposition<T> {
    /// `z̄ + w` as a slab state at time `t`.
    pub fn reassemble(&self, grid: &Grid<T>, t: T) -> ElsasserState<T> {
        let add = |bar: &[Field2<T>; 2], w: &VectorField<T>| {
            let mut z = w.clone();
            for c in 0..2 {
                let nzp = grid.spec.nzp();
                for (col, &m) in z.c[c].values.chunks_mut(nzp).zip(&bar[c].values) {
                    for v in col {
                        *v = *v + m;
                    }
                }
            }
            z
        };
        ElsasserState {
            zp: add(&self.zbar[0], &self.w[0]),
            zm: add(&self.zbar[1], &self.w[1]),
            t,
        }
    }
}

/// One horizontal level of a slab field.
pub fn slice<T: Real>(f: &ScalarField<T>, level: usize) -> Field2<T> {
    let nzp = f.nz + 1;
    Field2 {
        nx: f.nx,
        ny: f.ny,
        values: f.values.chunks(nzp).map(|col| col[level]).collect(),
    }
}

/// `Σ_{|α|=k} ‖⟨u∓⟩^{1+σ} ∂^α f‖²` over the torus for a horizontal field
/// given by its components.
pub fn horizontal_energy<T: Real>(sp2: &Spectral2<T>, f: &[Field2<T>], plus: bool, k: usize, t: T) -> T {
    horizontal_integrals(sp2, f, plus, k, t).0
}

/// Energy and flux density of a horizontal field.
pub fn horizontal_integrals<T: Real>(sp2: &Spectral2<T>, f: &[Field2<T>], plus: bool, k: usize, t: T) -> (T, T) {
    let grid = &sp2.grid;
    let s = &grid.spec;
    let (we, wf) = weight_columns(grid, plus, t);
    let mut e = T::zero();
    let mut fl = T::zero();
    for comp in f {
        let hat = sp2.forward(comp);
        for a in multi_indices(k) {
            let d = sp2.inverse(&sp2.deriv_hat(&hat, a));
            for (i, row) in d.values.chunks(s.ny).enumerate() {
                let sq = row.iter().fold(T::zero(), |acc, &v| acc + v * v);
                e = e + we[i] * sq;
                fl = fl + wf[i] * sq;
            }
        }
    }
    let area = s.dx() * s.dy();
    (e * area, fl * area)
}

/// Per-level horizontal energies of the selected slab components and their
/// maximum over levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceEnergies<T> {
    pub per_level: Vec<T>,
    pub sup: T,
}

pub fn slice_energies<T: Real>(
    sp2: &Spectral2<T>,
    comps: &[&ScalarField<T>],
    plus: bool,
    k: usize,
    t: T,
) -> SliceEnergies<T> {
    let nzp = comps[0].nz + 1;
    let per_level: Vec<T> = (0..nzp)
        .map(|lev| {
            let f: Vec<Field2<T>> = comps.iter().map(|c| slice(c, lev)).collect();
            horizontal_energy(sp2, &f, plus, k, t)
        })
        .collect();
    let sup = per_level.iter().fold(T::zero(), |m, &v| m.max(v));
    SliceEnergies { per_level, sup }
}

/// `E^(k,0)(z³) / (δ·E^(k+1,0)(z^h))` for one sign.
pub fn z3_gain_ratio<T: Real>(report: &EnergyReport<T>, plus: bool, k: usize, delta: T) -> T {
    let num = report.get(plus, k, 0, Part::Vertical);
    let den = delta * report.get(plus, k + 1, 0, Part::Horizontal);
    if den == T::zero() {
        if num == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        num / den
    }
}

/// Share of the unweighted energy of a state lying at `|x₁| > lx/2`.
pub fn envelope_mass_outside<T: Real>(grid: &Grid<T>, state: &ElsasserState<T>) -> T {
    let half = T::lit(0.5) * grid.spec.lx;
    let inner: Vec<T> = grid.x1.iter().map(|&x| if x.abs() > half { T::zero() } else { T::one() }).collect();
    let ones = vec![T::one(); grid.x1.len()];
    let mut total = T::zero();
    let mut kept = T::zero();
    for z in [&state.zp, &state.zm] {
        for c in &z.c {
            total = total + slab_integral(grid, c, &ones);
            kept = kept + slab_integral(grid, c, &inner);
        }
    }
    if total == T::zero() {
        T::zero()
    } else {
        (total - kept) / total
    }
}

/// Energy-weighted mean of `x₁` over a field.
pub fn centroid_x1<T: Real>(grid: &Grid<T>, z: &VectorField<T>) -> T {
    let ones = vec![T::one(); grid.x1.len()];
    let mass: T = z.c.iter().map(|c| slab_integral(grid, c, &ones)).sum();
    let moment: T = z.c.iter().map(|c| slab_integral(grid, c, &grid.x1)).sum();
    moment / mass
}

/// The two evaluations of a characteristic-surface flux.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFluxReport<T> {
    /// Spacetime integral over the slab and the time window.
    pub direct: T,
    /// Integral over the characteristic surfaces with their area element;
    /// the identity predicts `√2·direct`.
    pub surface: T,
    pub rel_diff: T,
    pub cadence: T,
}

/// Flux of `∂^α ∂₃^l z±` over a trajectory with uniform snapshot cadence,
/// once as a spacetime integral and once foliated by the characteristic
/// surfaces `x₁ ∓ t = u`, on which the surface measure is `√2 dτ dx₂ dx₃`.
pub fn flux_surface_identity_check<T: Real>(
    sp: &Spectral<T>,
    snapshots: &[ElsasserState<T>],
    plus: bool,
    alpha: [usize; 3],
) -> Result<SurfaceFluxReport<T>> {
    if snapshots.len() < 2 {
        return Err(Error::Config("the surface flux needs at least two snapshots".into()));
    }
    let h = snapshots[1].t - snapshots[0].t;
    for w in snapshots.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > T::lit(1e-9) * h.abs().max(T::one()) {
            return Err(Error::Config("the surface flux needs a uniform snapshot cadence".into()));
        }
    }
    let grid = &sp.grid;
    let s = &grid.spec;
    let sigma = s.sigma;
    let n = snapshots.len();
    let mut direct = T::zero();
    let mut surface = T::zero();
    for (idx, snap) in snapshots.iter().enumerate() {
        let tw = if idx == 0 || idx == n - 1 { T::lit(0.5) * h } else { h };
        let z = snap.field(plus);
        let hats = vector_hat(sp, z);
        let tau = snap.t - snapshots[0].t;
        // along the surface the abscissa moves with the characteristic speed
        let shift = if plus { tau } else { -tau };
        let mut plain = vec![];
        let mut moved = vec![];
        for c in 0..3 {
            let d = sp.deriv_hat(&hats[c], alpha);
            let shifted: Vec<Cplx<T>> = d
                .iter()
                .enumerate()
                .map(|(flat, &v)| {
                    let k1 = sp.kvec(flat)[0];
                    v * Cplx::new((k1 * shift).cos(), (k1 * shift).sin())
                })
                .collect();
            let p = z.c[c].parity.after_d3(alpha[2]);
            plain.push((d, p));
            moved.push((shifted, p));
        }
        let plain = sp.inverse_many(&plain);
        let moved = sp.inverse_many(&moved);
        let (_, wf) = weight_columns(grid, plus, snap.t);
        let surf_w: Vec<T> = grid
            .x1
            .iter()
            .map(|&u| weights_at(plus, u + shift, snap.t, sigma).0 / weight(u, sigma))
            .collect();
        for c in 0..3 {
            direct = direct + tw * slab_integral(grid, &plain[c], &wf);
            surface = surface + tw * slab_integral(grid, &moved[c], &surf_w);
        }
    }
    let sqrt2 = T::lit(2.0).sqrt();
    let surface = sqrt2 * surface;
    Ok(SurfaceFluxReport {
        direct,
        surface,
        rel_diff: crate::scalar::rel_diff(sqrt2 * direct, surface),
        cadence: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_initial, InitialFamily, InitialParams, VECTOR_PARITY};
    use crate::grid::GridSpec;
    use crate::testutil::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sp(lx: f64, delta: f64, n: usize, nz: usize) -> Spectral<f64> {
        Spectral::new(&GridSpec::new(lx, 1.0, delta, n, n, nz)).unwrap()
    }

    #[test]
    fn zero_field_has_zero_energies() {
        let sp = sp(2.0, 0.5, 8, 8);
        let z = ElsasserState::zeros(sp.spec());
        let rep = EnergyReport::new(&sp, &z, 4);
        assert!(rep.entries.iter().all(|e| Part::ALL.iter().all(|&p| e.part(p) == 0.0)));
        assert_eq!(total_energy_functional(&rep, 0.5, 4), 0.0);
    }

    /// Analytic derivative of `a·cos(p x₁ + φ) cos(q x₂) cos(r(x₃+δ))`.
    fn mode_derivative(a: f64, [p, q, r]: [f64; 3], phase: f64, delta: f64, alpha: [usize; 3], x: [f64; 3]) -> f64 {
        let d = |freq: f64, arg: f64, n: usize| -> f64 {
            // n-th derivative of cos(freq·s) at arg = freq·s
            freq.powi(n as i32) * (arg + n as f64 * PI / 2.0).cos()
        };
        a * d(p, p * x[0] + phase, alpha[0]) * d(q, q * x[1], alpha[1]) * d(r, r * (x[2] + delta), alpha[2])
    }

    #[test]
    fn single_mode_matches_nodal_quadrature() {
        let (lx, delta) = (2.0, 0.5);
        let sp = sp(lx, delta, 8, 8);
        let g = &sp.grid;
        let (a, phase) = (0.7, 0.3);
        let freqs = [PI / lx, 2.0 * PI, PI / delta];
        let mut state = ElsasserState::zeros(sp.spec());
        state.t = 0.4;
        state.zp.c[1] = ScalarField::from_fn(g, Parity::Even, |x, y, z| {
            mode_derivative(a, freqs, phase, delta, [0; 3], [x, y, z])
        });
        let ints = DerivativeIntegrals::new(&sp, &state, 4);
        let vw = g.vertical_weights();
        for total in 0..=4 {
            for l in 0..=total {
                for alpha in multi_indices(total - l) {
                    let mut oracle = 0.0;
                    for &x in &g.x1 {
                        let (w, _) = weights_at(true, x, state.t, g.spec.sigma);
                        for &y in &g.x2 {
                            for (k, &z) in g.x3.iter().enumerate() {
                                let v = mode_derivative(a, freqs, phase, delta, [alpha[0], alpha[1], l], [x, y, z]);
                                oracle += w * vw[k] * v * v;
                            }
                        }
                    }
                    oracle *= g.spec.dx() * g.spec.dy();
                    let got = ints.alpha_energy(true, alpha, l, Part::Full);
                    assert!(
                        (got - oracle).abs() <= 1e-12 * oracle.max(1e-300),
                        "{alpha:?} {l}: {got} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn direct_and_tabulated_energies_agree() {
        let sp = sp(2.0, 0.5, 8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut s = random_state(&sp, 0.5, &mut rng);
        s.t = 0.7;
        let rep = EnergyReport::new(&sp, &s, 3);
        for plus in [true, false] {
            for total in 0..=3 {
                for l in 0..=total {
                    for part in Part::ALL {
                        let a = rep.get(plus, total - l, l, part);
                        let b = weighted_energy(&sp, &s, plus, total - l, l, part);
                        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{plus} {total} {l} {part:?}");
                    }
                }
                // additivity over multi-indices of the tabulated values
                let ints = DerivativeIntegrals::new(&sp, &s, 4);
                for l in 0..=total {
                    let k = total - l;
                    let sum: f64 = multi_indices(k).map(|a| ints.alpha_energy(plus, a, l, Part::Full)).sum();
                    assert_eq!(sum, rep.get(plus, k, l, Part::Full));
                    let parts = rep.get(plus, k, l, Part::Horizontal) + rep.get(plus, k, l, Part::Vertical);
                    assert!((parts - rep.get(plus, k, l, Part::Full)).abs() <= 1e-13 * parts);
                }
            }
        }
    }

    #[test]
    fn height_independent_field_has_no_vertical_energy() {
        let spec = GridSpec::new(6.0, 1.0, 0.3, 16, 8, 8);
        let sp = Spectral::new(&spec).unwrap();
        let p = InitialParams {
            family: InitialFamily::Sheet,
            ..InitialParams::default()
        };
        let s = make_initial(&sp, &p).unwrap();
        let rep = EnergyReport::new(&sp, &s, 3);
        for plus in [true, false] {
            for k in 0..3 {
                let flat = rep.get(plus, k, 0, Part::Full);
                assert!(flat > 0.0);
                assert!(rep.get(plus, k, 1, Part::Full) <= 1e-28 * flat);
                assert!(rep.get(plus, k, 0, Part::D3) <= 1e-28 * flat);
            }
        }
    }

    #[test]
    fn flux_accumulator_quadrature() {
        let sp = sp(2.0, 0.5, 8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let s = random_state(&sp, 0.5, &mut rng);
        let ints = DerivativeIntegrals::new(&sp, &s, 3);
        let mut acc = FluxAccumulator::new(2);
        acc.push(&ints).unwrap();
        assert!(acc.entries.iter().all(|e| e.value == [0.0; 4]));
        // a constant integrand integrates exactly
        let mut later = ints.clone();
        later.t = 1.5;
        acc.push(&later).unwrap();
        for e in &acc.entries {
            for (n, part) in Part::ALL.into_iter().enumerate() {
                let expect = 1.5 * ints.flux_density(e.plus, e.k, e.l, part);
                assert!((e.value[n] - expect).abs() <= 1e-14 * expect.abs().max(1e-300));
            }
        }
        let mut early = ints.clone();
        early.t = 1.0;
        assert!(matches!(acc.push(&early), Err(Error::OutOfOrder { .. })));
    }

    #[test]
    fn flux_density_is_nonnegative_and_bounded_by_energy_weight() {
        let sp = sp(2.0, 0.5, 8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = random_state(&sp, 0.5, &mut rng);
        let ints = DerivativeIntegrals::new(&sp, &s, 2);
        for plus in [true, false] {
            let e = ints.energy(plus, 1, 0, Part::Full);
            let f = ints.flux_density(plus, 1, 0, Part::Full);
            assert!(f > 0.0 && f <= e);
        }
    }

    #[test]
    fn functional_at_unit_thickness_is_a_plain_sum() {
        let spec = GridSpec::new(6.0, 1.0, 1.0, 16, 8, 8);
        let sp = Spectral::new(&spec).unwrap();
        let p = InitialParams {
            family: InitialFamily::Tube,
            ..InitialParams::default()
        };
        let s = make_initial(&sp, &p).unwrap();
        let rep = EnergyReport::new(&sp, &s, 4);
        let terms = functional_terms(&rep, 1.0, 4);
        assert!(terms.iter().all(|t| t.factor == 1.0));
        let plain: f64 = terms.iter().map(|t| t.energy).sum();
        assert_eq!(total_energy_functional(&rep, 1.0, 4), plain);
        // (0..=4 field) 15 + (0..=3 vertical) 4 + (0..=4 d3) 15 per sign
        assert_eq!(terms.len(), 2 * (15 + 4 + 15));
    }

    #[test]
    fn mean_projection_identities() {
        let delta = 0.4;
        let sp = sp(2.0, delta, 8, 8);
        let g = &sp.grid;
        let c = ScalarField::from_fn(g, Parity::Even, |_, _, _| 2.5);
        assert!(mean_project(g, &c).values.iter().all(|&v| (v - 2.5).abs() < 1e-15));

        let odd = ScalarField::from_fn(g, Parity::Odd, |x, _, z| (x * 0.5).cos() * (PI * z / (2.0 * delta)).sin());
        assert!(mean_project(g, &odd).max_abs() < 1e-16);

        // the trapezoid value of the mean of x₃² is δ²/3 + Δz²/6
        let sq = ScalarField::from_fn(g, Parity::Even, |_, _, z| z * z);
        let dz = g.spec.dz();
        let expect = delta * delta / 3.0 + dz * dz / 6.0;
        assert!(mean_project(g, &sq).values.iter().all(|&v| (v - expect).abs() < 1e-15));

        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let s = random_state(&sp, 1.0, &mut rng);
        let f = &s.zp.c[0];
        let m = mean_project(g, f);
        let lifted = crate::fields::lift(&g.spec, &m, Parity::Even);
        let mm = mean_project(g, &lifted);
        let scale = m.max_abs();
        assert!(m.axpy(-1.0, &mm).max_abs() <= 1e-12 * scale);
        let rest = f - &lifted;
        assert!(mean_project(g, &rest).max_abs() <= 1e-12 * f.max_abs());
        // vertical derivative of a wall-vanishing field
        let d3 = sp.derivative(&s.zp.c[2], 2);
        assert!(mean_project(g, &d3).max_abs() <= 1e-12 * d3.max_abs());
    }

    #[test]
    fn decomposition() {
        let spec = GridSpec::new(6.0, 1.0, 0.3, 16, 8, 8);
        let sp = Spectral::new(&spec).unwrap();
        let g = &sp.grid;
        let sheet = make_initial(
            &sp,
            &InitialParams {
                family: InitialFamily::Sheet,
                ..InitialParams::default()
            },
        )
        .unwrap();
        let d = decompose(g, &sheet);
        assert!(d.w[0].max_abs() <= 1e-15 * sheet.max_abs());
        assert!(d.w[1].max_abs() <= 1e-15 * sheet.max_abs());

        let tube = make_initial(
            &sp,
            &InitialParams {
                family: InitialFamily::Tube,
                ..InitialParams::default()
            },
        )
        .unwrap();
        let d = decompose(g, &tube);
        let scale = tube.max_abs();
        for s in 0..2 {
            for c in 0..2 {
                assert!(d.zbar[s][c].max_abs() <= 1e-14 * scale);
            }
            let z = if s == 0 { &tube.zp } else { &tube.zm };
            assert!((&d.w[s] - z).max_abs() <= 1e-14 * scale);
            assert_eq!(d.w[s].parities(), VECTOR_PARITY);
        }
        // the horizontal mean is divergence-free
        let sp2 = Spectral2::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let s = random_state(&sp, 1.0, &mut rng);
        let d = decompose(g, &s);
        for bar in &d.zbar {
            let div = sp2.derivative(&bar[0], 0).axpy(1.0, &sp2.derivative(&bar[1], 1));
            let scale = sp2.derivative(&bar[0], 0).max_abs().max(sp2.derivative(&bar[1], 1).max_abs());
            assert!(div.max_abs() <= 1e-10 * scale);
            for w in &d.w {
                for c in 0..2 {
                    assert!(mean_project(g, &w.c[c]).max_abs() <= 1e-12 * s.max_abs());
                }
            }
        }
        let back = d.reassemble(g, s.t);
        let ulp = f64::EPSILON * s.max_abs();
        assert!((&back.zp - &s.zp).max_abs() <= ulp && (&back.zm - &s.zm).max_abs() <= ulp);
    }

    #[test]
    fn horizontal_energies() {
        let delta: f64 = 0.3;
        let spec = GridSpec::new(6.0, 1.0, delta, 16, 8, 8);
        let sp = Spectral::new(&spec).unwrap();
        let sp2 = Spectral2::new(&spec).unwrap();
        let g = &sp.grid;
        let zero = [Field2::zeros(16, 8), Field2::zeros(16, 8)];
        assert_eq!(horizontal_energy(&sp2, &zero, true, 2, 0.3), 0.0);

        let sheet = make_initial(
            &sp,
            &InitialParams {
                family: InitialFamily::Sheet,
                ..InitialParams::default()
            },
        )
        .unwrap();
        let d = decompose(g, &sheet);
        for k in 0..3 {
            let slab = weighted_energy(&sp, &sheet, false, k, 0, Part::Horizontal);
            let flat = horizontal_energy(&sp2, &d.zbar[1], false, k, sheet.t);
            assert!((slab - 2.0 * delta * flat).abs() <= 1e-12 * slab);
            let per = slice_energies(&sp2, &[&sheet.zm.c[0], &sheet.zm.c[1]], false, k, sheet.t);
            assert!((per.sup - flat).abs() <= 1e-12 * flat);
        }

        // nodal oracle for a two-mode horizontal field
        let t = 0.9;
        let f = |x: f64, y: f64, a: [usize; 2]| {
            mode_derivative(1.3, [PI / 6.0, 2.0 * PI, 0.0], 0.2, 0.0, [a[0], a[1], 0], [x, y, 0.0])
                + mode_derivative(-0.4, [PI / 2.0, PI, 0.0], 1.1, 0.0, [a[0], a[1], 0], [x, y, 0.0])
        };
        let field = Field2::from_fn(g, |x, y| f(x, y, [0, 0]));
        for k in 0..4 {
            let got = horizontal_energy(&sp2, std::slice::from_ref(&field), true, k, t);
            let mut oracle = 0.0;
            for &x in &g.x1 {
                let (w, _) = weights_at(true, x, t, spec.sigma);
                for &y in &g.x2 {
                    for a in multi_indices(k) {
                        oracle += w * f(x, y, a).powi(2);
                    }
                }
            }
            oracle *= spec.dx() * spec.dy();
            assert!((got - oracle).abs() <= 1e-12 * oracle, "{k}: {got} {oracle}");
        }
    }

    #[test]
    fn surface_flux_of_nothing_is_nothing() {
        let sp = sp(2.0, 0.5, 8, 8);
        let snaps: Vec<_> = (0..3)
            .map(|n| ElsasserState {
                t: 0.1 * n as f64,
                ..ElsasserState::zeros(sp.spec())
            })
            .collect();
        let r = flux_surface_identity_check(&sp, &snaps, true, [0; 3]).unwrap();
        assert_eq!((r.direct, r.surface, r.rel_diff), (0.0, 0.0, 0.0));
        assert!(flux_surface_identity_check(&sp, &snaps[..1], true, [0; 3]).is_err());
    }
}
