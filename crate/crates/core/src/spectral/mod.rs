//! Spectral representation on the torus `T^d = (R/2πZ)^d`.

mod basis;
mod config;
mod field;
mod grid;
pub mod snapshot;

pub use basis::{ModeBasis, Wavevector};
pub use config::{Scheme, SimConfig};
pub use field::{critical_exponent, gauge_transform, GaugeDirection, SpectralField};
pub use grid::{required_points, Collocation, DEFAULT_OVERSAMPLING};
