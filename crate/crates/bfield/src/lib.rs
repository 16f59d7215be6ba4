//! Pseudo-spectral toolkit for verifying potential-vorticity transport
//! identities in triply-periodic flow.
//!
//! The library provides, in rough dependency order:
//!
//! - [`grid`], [`fft`], [`field`], [`ops`]: exact spectral calculus on a
//!   cubic periodic lattice with 2/3-rule dealiasing;
//! - [`flow`]: right-hand-side tendencies for ideal rotating-buoyant flow,
//!   stratified viscous flow, and compressible flow with an ideal-gas law;
//! - [`pv`]: incompressible potential-vorticity diagnostics — q, the
//!   B-field, the pseudo-velocity that turns the viscous PV balance into a
//!   continuity law, and instantaneous residual checks of the associated
//!   stretching-and-folding transport identities;
//! - [`compressible`]: both vorticity-density projections, their current
//!   densities, quasi-conservation laws, conserved families, the
//!   impermeability relation, and the compressible B-equation residual;
//! - [`timestep`], [`surface`]: RK4 evolution of the stratified system,
//!   Lagrangian marker surfaces, and the surface-flux balance check;
//! - [`snapshot`], [`config`]: binary field snapshots and flat key-value
//!   run configuration shared with the CLI.
//!
//! All residual checks operate in the instantaneous regime: time
//! derivatives of derived quantities are assembled by the chain rule from
//! model tendencies, never by finite differencing in time.

pub mod catalog;
pub mod compressible;
pub mod config;

pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod grid;

pub mod manufactured;
pub mod mask;
pub mod ops;
pub mod pv;
pub mod random;
pub mod residual;
pub mod sample;
pub mod snapshot;

pub mod surface;
pub mod timestep;
pub mod tolerances;

pub use error::{Error, Result};
pub use field::{ScalarField, SymTensorField, VectorField};
pub use grid::Grid;
