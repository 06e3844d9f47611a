//! Nonlinear covariance shrinkage and adaptive matched filtering.
//!
//! The crate is `no_std` and only needs an allocator. It covers
//!
//! - dense Hermitian linear algebra over the real and complex fields
//!   ([`linalg`]),
//! - population covariances with a prescribed limiting spectrum
//!   ([`population`]) and the training / test data drawn from them
//!   ([`sampling`]),
//! - covariance estimators in eigen-shrinkage form, including the
//!   Ledoit-Wolf analytical nonlinear shrinkage ([`estimators`]),
//! - the adaptive matched filter and its analytic and Monte Carlo operating
//!   characteristics ([`detector`]).
//!
//! All randomness is derived from explicit 64-bit seeds ([`rng`]).

#![no_std]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod detector;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod population;
pub mod rng;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, EigenSystem, Field, HermitianMatrix};
pub use num_complex::Complex64;
