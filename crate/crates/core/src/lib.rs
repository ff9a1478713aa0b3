//! Estimation of a distribution function from observations blurred by
//! additive noise of known law.
//!
//! Two families of estimators live here:
//!
//! * the Fourier-inversion estimator ([`fourier`]) together with a
//!   Lepski-type data-driven choice of its cut-off frequency ([`lepski`]);
//! * minimax affine estimators for a binned version of the problem
//!   ([`discretize`], [`affine`]), defined through a convex program whose
//!   optimal value certifies the risk.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the Monte
//! Carlo harness and the command line live in the `deconv-cdf` crate.
#![no_std]

extern crate alloc;

pub mod affine;
pub mod discretize;
pub mod error;
pub mod fourier;
pub mod lepski;
pub mod linalg;
pub mod lp;
pub mod noise;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
