//! Numerical core for the asymptotic expansion of the weighted power
//! variation built from second-order differences of a scalar SDE driven by
//! fractional Brownian motion with Hurst index `H > 1/2`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computations:
//!
//! * [`kernel`]: fBm covariance, step-function inner products and the
//!   second-difference correlation `rho_hat`.
//! * [`combinatorics`]: moment constants, product-formula coefficients, index
//!   sets and the limit constants `C_G` and `C_tau`.
//! * [`wick`]: brute-force Gaussian calculus used as an exact oracle.
//! * [`sde`]: coefficient models and the left-point Euler scheme.
//! * [`variation`]: second differences, `S_n`, `S_inf` and `Z_n`.
//! * [`expansion`]: the corrected density `p_n` and its CDF.
//! * [`exponent`]: the weighted-graph exponent calculus.
//!
//! Sampling, Monte Carlo drivers, file formats and the command line live in
//! the `pvexp` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod combinatorics;
mod error;
pub mod expansion;
pub mod exponent;
pub mod kernel;
pub mod linalg;
pub mod sde;
pub mod variation;
pub mod wick;

pub use error::{Error, Result};
pub use kernel::HurstParam;
