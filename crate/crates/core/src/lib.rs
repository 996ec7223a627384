//! Quantum-channel Hilbert-Schmidt norm identities and Haar-sphere matrix
//! integrals.
//!
//! The crate provides, over any scalar `T: Scalar` (`f32` or `f64`):
//!
//! - dense complex linear algebra on tensor powers ([`tensor`]): Kronecker
//!   products, partial traces, permutation operators, symmetric projectors;
//! - Kraus-form channels ([`channels`]): CPTP validation, Choi matrices,
//!   complementary channels, channel norms and the named channel families;
//! - Haar-measure sampling and moment integrals ([`haar`]): seeded Monte
//!   Carlo estimators with per-entry standard errors next to exact
//!   closed-form evaluators, and twirl fitting;
//! - executable verifiers for the norm-range theorems, the purity-preserving
//!   classification and the broadcasting identity ([`theorems`]);
//! - JSON interchange for matrices, channels and verification reports
//!   ([`io`], [`report`]).
//!
//! The `f64` aliases below are what the CLI and the JSON formats use.

pub mod error;
pub mod scalar;

pub mod matrix;

pub mod eig;
pub mod tensor;

pub mod channels;
pub mod haar;
pub mod theorems;

pub mod io;
pub mod report;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use scalar::Scalar;

/// Complex scalar used by the JSON formats and the CLI.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix over `f64`.
pub type CMatrix = ComplexMatrix<f64>;
/// Kraus channel over `f64`.
pub type CChannel = channels::KrausChannel<f64>;
/// Choi matrix over `f64`.
pub type CChoi = channels::ChoiMatrix<f64>;
/// Monte Carlo estimate over `f64`.
pub type CEstimate = haar::McEstimate<f64>;

/// Single-precision variants.
pub type C32 = num_complex::Complex<f32>;
pub type CMatrix32 = ComplexMatrix<f32>;
