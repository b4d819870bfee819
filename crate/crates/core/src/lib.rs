//! Minimizers of attractive-repulsive interaction energies
//! `E(mu) = int int g(|x - y|) dmu(x) dmu(y)` over probability measures:
//! radial kernels and their hypothesis checks, discrete measures, energy
//! assembly, a simplex solver, and diagnostics of minimizer regularity.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

// `!(x > 0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod measures;
pub mod quadrature;
pub mod real;
pub mod solver;

pub use error::{Error, Result};
pub use real::Real;

pub type Kernel = kernels::RadialKernel<f64>;
pub type Particles = measures::ParticleMeasure<f64>;
pub type Shells = measures::RadialMeasure<f64>;
pub type AnyMeasure = measures::Measure<f64>;
pub type Gram = energy::GramMatrix<f64>;
pub type Report = diagnostics::DiagnosticReport<f64>;
