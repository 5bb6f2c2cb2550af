//! Numerical verification toolkit for uniform L^p lower bounds on functions
//! satisfying Δu ≥ 1 or Hu ≥ 1.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] integration regions, ball systems and radius functions;
//! * [`fields`] scalar fields with exact derivatives and the differential operators;
//! * [`quadrature`] Monte Carlo / Gauss integration, level-set measures and p-means;
//! * [`averages`] ball and heatball averages, derivative formulas, mean value checks;
//! * [`constants`] every named constant together with its cross-check;
//! * [`counterexamples`] comb sets, the Hessian-determinant family, dimension lifting;
//! * [`verify`] theorem-level suites built from the pieces above;
//! * [`cli`] the `lpbound` command-line front end.

pub mod averages;
pub mod cli;
pub mod constants;
pub mod counterexamples;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
