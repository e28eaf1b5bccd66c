//! Spectral Galerkin core for the damped-driven nonlinear Schrödinger
//! equation on the flat torus `T^d = [0, 2π)^d`.
//!
//! The crate is `no_std` (it needs `alloc`). FFTs are injected through
//! [`fft::FftPlanner`]; [`fft::NaiveDft`] is a slow reference backend.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::len_without_is_empty, clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dissipation;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod grid;
pub mod lattice;
pub mod measure;
pub mod stats;
pub mod stochastic;

pub use dissipation::DissipationParams;
pub use error::{Error, Result};
pub use fft::{Direction, FftKernel, FftPlanner, NaiveDft};
pub use field::SpectralField;
pub use flow::{FlowConfig, LwpParams, NonlinearSubstep, Propagator, Scheme};
pub use grid::{PhysicalGrid, Transform};
pub use lattice::Lattice;
