//! Rescaling between the slab of half-height `δ` and the unit slab.
//!
//! `z^h_(δ)(x_h, x₃) = z^h(x_h, δx₃)` and `z³_(δ)(x_h, x₃) = δ⁻¹ z³(x_h, δx₃)`.
//! Both slabs carry the same number of vertical nodes, so the map is a
//! relabelling of coordinates plus a division of the vertical component and
//! every energy identity below holds to rounding.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{functional_terms, DerivativeIntegrals, EnergyReport, Part, TermKind};
use crate::error::{Error, Result};
use crate::fields::ElsasserState;
use crate::grid::GridSpec;
use crate::scalar::{rel_diff, Real};
use crate::spectral::Spectral;

/// A state expressed on the unit slab together with its original thickness.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaledState<T> {
    pub state: ElsasserState<T>,
    /// Grid of the unit slab.
    pub spec: GridSpec<T>,
    pub delta: T,
}

/// The unit-slab grid matching a slab grid node for node.
pub fn unit_spec<T: Real>(spec: &GridSpec<T>) -> GridSpec<T> {
    spec.clone().with_delta(T::one())
}

fn check_shape<T: Real>(state: &ElsasserState<T>, spec: &GridSpec<T>) -> Result<()> {
    let ok = state
        .zp
        .c
        .iter()
        .chain(&state.zm.c)
        .all(|f| f.matches(spec));
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("state does not live on the given grid".into()))
    }
}

fn scale_vertical<T: Real>(state: &ElsasserState<T>, factor: T) -> ElsasserState<T> {
    let mut out = state.clone();
    out.zp.c[2] = out.zp.c[2].scale(factor);
    out.zm.c[2] = out.zm.c[2].scale(factor);
    out
}

pub fn rescale_to_unit<T: Real>(state: &ElsasserState<T>, spec: &GridSpec<T>) -> Result<RescaledState<T>> {
    check_shape(state, spec)?;
    let delta = spec.delta;
    let mut out = state.clone();
    for f in [&mut out.zp.c[2], &mut out.zm.c[2]] {
        *f = f.map(|v| v / delta);
    }
    Ok(RescaledState {
        state: out,
        spec: unit_spec(spec),
        delta,
    })
}

/// Inverse of [`rescale_to_unit`].
pub fn rescale_from_unit<T: Real>(r: &RescaledState<T>) -> Result<(ElsasserState<T>, GridSpec<T>)> {
    check_shape(&r.state, &r.spec)?;
    if r.spec.delta != T::one() {
        return Err(Error::ShapeMismatch("rescaled state must live on the unit slab".into()));
    }
    Ok((scale_vertical(&r.state, r.delta), r.spec.clone().with_delta(r.delta)))
}

/// Which identity a check refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityKind {
    HorizontalEnergy,
    VerticalEnergy,
    HorizontalFlux,
    VerticalFlux,
}

/// One comparison `unit = δ^p · slab`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck<T> {
    pub plus: bool,
    pub kind: IdentityKind,
    pub k: usize,
    pub l: usize,
    /// Value on the unit slab.
    pub unit: T,
    /// Value on the thin slab.
    pub slab: T,
    /// Predicted `unit / slab`.
    pub ratio: T,
    pub rel_err: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport<T> {
    pub delta: T,
    pub max_order: usize,
    pub checks: Vec<IdentityCheck<T>>,
    pub max_rel_err: T,
    /// `E^(k,l)(z³_(δ))` against `δ^{2l−3} E^(k,l−1)(∇_h·z^h)`; this one
    /// holds only up to the divergence residual.
    pub divergence_form_rel_err: T,
}

/// Power of `δ` relating the unit-slab value to the slab value.
fn predicted_power(vertical: bool, l: usize) -> i32 {
    let l = l as i32;
    match (vertical, l) {
        (false, _) => 2 * l - 1,
        (true, 0) => -3,
        (true, _) => 2 * l - 3,
    }
}

/// Compare weighted energies and flux densities of a slab state with those of
/// its rescaled image for all `k + l ≤ max_order`.
pub fn verify_norm_identities<T: Real>(
    state: &ElsasserState<T>,
    spec: &GridSpec<T>,
    max_order: usize,
) -> Result<ScalingReport<T>> {
    let delta = spec.delta;
    let r = rescale_to_unit(state, spec)?;
    let sp = Spectral::new(spec)?;
    let sp1 = Spectral::new(&r.spec)?;
    let slab = DerivativeIntegrals::new(&sp, state, max_order);
    let unit = DerivativeIntegrals::new(&sp1, &r.state, max_order);
    let mut checks = vec![];
    for plus in [true, false] {
        for total in 0..=max_order {
            for l in 0..=total {
                let k = total - l;
                for (kind, part, flux) in [
                    (IdentityKind::HorizontalEnergy, Part::Horizontal, false),
                    (IdentityKind::VerticalEnergy, Part::Vertical, false),
                    (IdentityKind::HorizontalFlux, Part::Horizontal, true),
                    (IdentityKind::VerticalFlux, Part::Vertical, true),
                ] {
                    let pick = |ints: &DerivativeIntegrals<T>| {
                        if flux {
                            ints.flux_density(plus, k, l, part)
                        } else {
                            ints.energy(plus, k, l, part)
                        }
                    };
                    let (u, s) = (pick(&unit), pick(&slab));
                    let ratio = delta.powi(predicted_power(part == Part::Vertical, l));
                    checks.push(IdentityCheck {
                        plus,
                        kind,
                        k,
                        l,
                        unit: u,
                        slab: s,
                        ratio,
                        rel_err: rel_diff(u, ratio * s),
                    });
                }
            }
        }
    }
    let max_rel_err = checks.iter().fold(T::zero(), |m, c| m.max(c.rel_err));

    // the vertical energies with l ≥ 1 in divergence form
    let mut div_err = T::zero();
    for plus in [true, false] {
        let z = state.field(plus);
        let div = &sp.derivative(&z.c[0], 0) + &sp.derivative(&z.c[1], 1);
        let mut as_state = ElsasserState::zeros(spec);
        as_state.t = state.t;
        as_state.zp.c[0] = div;
        let div_ints = DerivativeIntegrals::new(&sp, &as_state, max_order.saturating_sub(1));
        for total in 1..=max_order {
            for l in 1..=total {
                let k = total - l;
                let lhs = unit.energy(plus, k, l, Part::Vertical);
                let rhs = delta.powi(2 * l as i32 - 3) * div_ints.energy(true, k, l - 1, Part::Full);
                div_err = div_err.max(rel_diff(lhs, rhs));
            }
        }
    }
    Ok(ScalingReport {
        delta,
        max_order,
        checks,
        max_rel_err,
        divergence_form_rel_err: div_err,
    })
}

/// One term of the thickness-weighted total energy next to its unit-slab
/// expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermComparison<T> {
    pub plus: bool,
    pub kind: TermKind,
    pub k: usize,
    pub l: usize,
    pub slab: T,
    pub unit: T,
    pub rel_err: T,
}

/// Express each term of the slab functional through energies of the
/// rescaled state:
///
/// * `δ^{2l−1} E^(k,l)(z)` ↔ `E^(k,l)(z^h_(δ)) + δ² E^(k,l)(z³_(δ))`,
/// * `δ^{−3} E^(k,0)(z³)` ↔ `E^(k,0)(z³_(δ))`,
/// * `δ^{2l−1} E^(k,l)(∂₃z)` ↔ `δ^{−2} E^(k,l+1)(z^h_(δ)) + E^(k,l+1)(z³_(δ))`.
pub fn compare_functional<T: Real>(
    state: &ElsasserState<T>,
    spec: &GridSpec<T>,
    top: usize,
) -> Result<Vec<TermComparison<T>>> {
    let delta = spec.delta;
    let r = rescale_to_unit(state, spec)?;
    let sp = Spectral::new(spec)?;
    let sp1 = Spectral::new(&r.spec)?;
    let (_, _, n_d3) = crate::diagnostics::functional_orders(top);
    let order = top.max(n_d3);
    let report = EnergyReport::new(&sp, state, order);
    let unit = EnergyReport::new(&sp1, &r.state, order + 1);
    let d2 = delta * delta;
    Ok(functional_terms(&report, delta, top)
        .into_iter()
        .map(|t| {
            let (p, k, l) = (t.plus, t.k, t.l);
            let u = match t.kind {
                TermKind::Field => unit.get(p, k, l, Part::Horizontal) + d2 * unit.get(p, k, l, Part::Vertical),
                TermKind::Vertical => unit.get(p, k, 0, Part::Vertical),
                TermKind::D3 => {
                    unit.get(p, k, l + 1, Part::Horizontal) / d2 + unit.get(p, k, l + 1, Part::Vertical)
                }
            };
            TermComparison {
                plus: p,
                kind: t.kind,
                k,
                l,
                slab: t.value(),
                unit: u,
                rel_err: rel_diff(t.value(), u),
            }
        })
        .collect())
}
