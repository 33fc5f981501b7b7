//! Gauge-invariant Wigner transport on a discrete momentum lattice.
//!
//! The crate is organised bottom-up:
//!
//! - [`phasespace`]: physical constants, the bounded domain with its momentum
//!   lattice (`ΔP = 2πħ/L`), field representations and gauge fixtures.
//! - [`transform`]: the discrete Weyl–Stratonovich transform, its inverse,
//!   gauge changes of density matrices and the discrete Wigner potential.
//! - [`kernels`]: finite-window Fourier kernels of sampled fields, the
//!   closed-form coefficients for linear fields and the term-magnitude report.
//! - [`solvers`]: the finite-coherence and long-coherence evolution models,
//!   the Fredholm resolvent iteration and the signed-particle Monte Carlo
//!   estimator.
//!
//! All quantities are SI internally.

pub mod error;
pub mod kernels;
pub mod phasespace;
pub mod quadrature;
pub mod solvers;
pub mod transform;

pub use error::{Result, WignerError};
pub use phasespace::{
    make_grid, AxisSpec, GaugeFunction, GaugeSpec, LinearEMField, PhaseSpaceGrid,
    PhysicalConstants, SampledEMField,
};
pub use transform::{DensityMatrix, GaussianPacket, WignerPotentialTable, WignerState};
