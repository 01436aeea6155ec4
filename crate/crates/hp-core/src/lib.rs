//! Cost function, parametrix kernels and reference densities for the
//! Kolmogorov operator of geometric Brownian motion and its time integral.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod key_inequalities;
pub mod numerics;
pub mod parametrix;
pub mod pricing;
pub mod reference_densities;
pub mod scalar_kernels;

pub use error::{Error, Result};
