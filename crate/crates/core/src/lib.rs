//! Finite-dimensional laboratory for the defocusing nonlinear Schrödinger
//! equation on the torus: Galerkin truncations, the damped and forced
//! (fluctuation-dissipation) dynamics, stationary measures built by time
//! averaging, and the statistics used to probe their inviscid limits.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: mode basis, spectral fields, norms and the collocation grid.
//! * [`dynamics`]: deterministic truncated flows, Picard solver and studies.
//! * [`stochastic`]: noise, growth functions, the OU convolution and SDE stepping.
//! * [`measure`]: empirical measures and the experiments built on them.
//! * [`density`]: laws of the conserved quantities.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod measure;
pub mod spectral;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
