//! Spectra of dynamically-defined operator families on `Z^d` and
//! quantitative continuity of the spectrum map with respect to the
//! underlying dynamics.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the command line
//! front end uses.

pub mod approx;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod group;
pub mod haus;
pub mod kernel;
pub mod linalg;
pub mod operator;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use group::{LatticeGroup, NormKind, Site};
pub use scalar::Real;

pub type GrowthConstants64 = group::GrowthConstants<f64>;
pub type TorusPoint64 = dynamics::TorusPoint<f64>;
pub type BandSet64 = spectrum::BandSet<f64>;
pub type HausdorffResult64 = haus::HausdorffResult<f64>;
pub type KernelNorms64 = kernel::KernelNorms<f64>;
pub type FiniteSection64<P> = operator::FiniteSection<f64, P>;
pub type ScalingSeries64 = approx::ScalingSeries<f64>;
pub type HolderFit64 = approx::HolderFit<f64>;
pub type BoundReport64 = estimates::BoundReport<f64>;
pub type AmoKernel64 = kernel::AmoKernel<f64>;
pub type FibonacciKernel64 = kernel::LocalKernel<f64>;
