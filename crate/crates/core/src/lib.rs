//! Pseudo-spectral incompressible ideal MHD in a thin slab.
//!
//! The solver works in Elsässer variables `z± = v ± b ∓ e₁` around a unit
//! horizontal background field. Slip walls at `x₃ = ±δ` are handled by
//! continuing every field evenly or oddly across the walls, which turns the
//! slab into a periodic box. On top of the solver sit weighted energy and flux
//! diagnostics, the vertical mean projection, the `δ`-rescaling, an image-series
//! Green's function for the pressure, a 2D limit solver and a command line
//! harness for runs and thickness sweeps.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod harness;
pub mod integrator;
pub mod mhd2d;
pub mod pressure;
pub mod scalar;
pub mod scaling;
pub mod snapshot;
pub mod special;
pub mod spectral;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision instantiations of the generic types.
pub mod f64s {
    pub type GridSpec = crate::grid::GridSpec<f64>;
    pub type ScalarField = crate::grid::ScalarField<f64>;
    pub type VectorField = crate::fields::VectorField<f64>;
    pub type State = crate::fields::ElsasserState<f64>;
    pub type State2D = crate::mhd2d::State2D<f64>;
    pub type InitialParams = crate::fields::InitialParams<f64>;
    pub type Spectral = crate::spectral::Spectral<f64>;
    pub type Spectral2 = crate::spectral::Spectral2<f64>;
    pub type StepperConfig = crate::integrator::StepperConfig<f64>;
    pub type Integrator = crate::integrator::Integrator<f64>;
    pub type Integrator2D = crate::mhd2d::Integrator2D<f64>;
    pub type Trajectory = crate::integrator::Trajectory<f64>;
    pub type Trajectory2D = crate::mhd2d::Trajectory2D<f64>;
    pub type EnergyReport = crate::diagnostics::EnergyReport<f64>;
}
pub use f64s::*;
