//! Numerical laboratory for the thin-film equation
//! `u_t = -div(u grad Lap u) - div(u grad u^m)` in `R^d`, `d >= 3`,
//! restricted to radial solutions.
//!
//! - [`params`]: critical exponents and regime tags.
//! - [`radial`]: grids, profiles and quadrature diagnostics.
//! - [`steady`]: free-boundary steady states by shooting.
//! - [`variational`]: GNS quotient, optimal constant and threshold quantities.
//! - [`dynamics`]: conservative implicit time stepping and outcome detection.

pub mod banded;
pub mod dynamics;
pub mod error;
pub mod params;
pub mod radial;
pub mod steady;
pub mod variational;

pub use error::{Error, Result};
pub use params::{classify_regime, scaling_exponents, Exponent, ModelParams, Regime, RegimeReport};
pub use radial::{Diagnostics, RadialGrid, RadialProfile};
