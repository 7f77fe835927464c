//! Random smooth fields shared by unit tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::fields::{project_divfree, ElsasserState, VectorField, VECTOR_PARITY};
use crate::grid::{Parity, ScalarField};
use crate::spectral::Spectral;

/// Smooth random field with the prescribed parity: a few random Fourier
/// modes of the extended box.
pub(crate) fn random_field(sp: &Spectral<f64>, parity: Parity, rng: &mut ChaCha8Rng) -> ScalarField<f64> {
    let s = sp.spec().clone();
    let modes: Vec<(f64, f64, f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0..3) as f64,
                rng.gen_range(0..3) as f64,
                rng.gen_range(0..3) as f64,
                rng.gen_range(0.0..6.28),
                rng.gen_range(0.0..6.28),
            )
        })
        .collect();
    ScalarField::from_fn(&sp.grid, parity, |x, y, z| {
        modes
            .iter()
            .map(|&(a, n1, n2, n3, p1, p2)| {
                let vert = match parity {
                    Parity::Even => (n3 * std::f64::consts::PI * (z + s.delta) / (2.0 * s.delta)).cos(),
                    Parity::Odd => ((n3 + 1.0) * std::f64::consts::PI * (z + s.delta) / (2.0 * s.delta)).sin(),
                };
                a * (n1 * std::f64::consts::PI * x / s.lx + p1).cos() * (n2 * std::f64::consts::PI * y / s.ly + p2).cos() * vert
            })
            .sum()
    })
}

pub(crate) fn random_vector(sp: &Spectral<f64>, rng: &mut ChaCha8Rng) -> VectorField<f64> {
    VectorField {
        c: VECTOR_PARITY.map(|p| random_field(sp, p, rng)),
    }
}


/// Divergence-free random pair scaled to sup-norm `amp`.
pub(crate) fn random_state(sp: &Spectral<f64>, amp: f64, rng: &mut ChaCha8Rng) -> ElsasserState<f64> {
    let mut make = || {
        let z = project_divfree(sp, &random_vector(sp, rng));
        let m = z.max_abs();
        z.scale(amp / m)
    };
    let zp = make();
    let zm = make();
    ElsasserState { zp, zm, t: 0.0 }
}
