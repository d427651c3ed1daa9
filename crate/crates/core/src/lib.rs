//! Evolution systems for the linearized Navier–Stokes problem around a rotating,
//! translating obstacle in ℝ^d (d = 2, 3), realized on a periodic truncation of
//! the whole space, together with a Kato/Picard solver for mild solutions of
//! the nonlinear system and a harness that checks the smoothing estimates.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, scenario
//! parsing and the command-line front end live in the `rotflow` crate.
//!
//! Layout:
//!
//! * [`linalg`], [`expm`], [`quadrature`], [`spline`]: small dense algebra and
//!   one-dimensional numerics.
//! * [`propagator`]: `U(t,s)`, the drift `g(t,s)` and covariance `Q(t,s)` for a
//!   commuting matrix family.
//! * [`fft`], [`field`]: periodic grids, fields, spectral calculus, resampling.
//! * [`ou_kernel`]: the scalar Ornstein–Uhlenbeck evolution `G(t,s)` and its
//!   oracles.
//! * [`vector_evolution`]: `W(t,s)`, `V(t,s)`, the Leray projection and the
//!   generator `B(t)`.
//! * [`kato`]: Picard iteration for the Duhamel equation.
//! * [`verify`]: rate fits and bound checks.
//! * [`initial`]: analytic initial-data families.

#![no_std]

extern crate alloc;

pub mod error;
pub mod expm;
pub mod fft;
pub mod field;
pub mod initial;
pub mod kato;
pub mod linalg;
pub mod ou_kernel;
pub mod propagator;
pub mod quadrature;
pub mod spline;
pub mod vector_evolution;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Grid, ScalarField, Spectrum, VectorField};
pub use linalg::{Matrix, Vector};
pub use propagator::{
    MatrixFunSpec, Problem, PropagatorBundle, QuadParams, SolverParams, TimeProfile,
    VectorFunSpec,
};
