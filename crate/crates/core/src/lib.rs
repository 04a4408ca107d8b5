//! Short-maturity option pricing under the Barndorff-Nielsen and Shephard
//! stochastic volatility model.
//!
//! The crate provides Black-Scholes building blocks, the Lévy measures of the
//! IG-OU and Gamma-OU variance drivers, exact-conditional Monte Carlo, a Fourier
//! reference pricer and closed-form short-maturity approximations that add a
//! jump correction to the Black-Scholes price.

pub mod approx;
pub mod blackscholes;
pub mod error;
pub mod experiments;
pub mod levy;
pub mod model;
pub mod normal;
pub mod quadrature;
pub mod reference;

pub use error::{Error, Result};
