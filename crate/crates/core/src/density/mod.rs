//! Laws of the conserved quantities under sampled measures.
//!
//! [`distribution_of`] builds histograms and kernel estimates of `M_*μ` and
//! `E_*μ` and flags atoms; [`quadratic_variation`] gives the noise-driven
//! variance of `M` and `E`; [`Resolvent`] evaluates `Φ_λ` with its ODE
//! residual; the remaining entry points probe stationarity and small balls.

mod distribution;
mod generator;
mod resolvent;
mod smallball;
mod variation;

pub use distribution::{
    detect_atoms, distribution_from_values, distribution_of, kde, silverman_bandwidth, Atom, DensityBound, Histogram,
    ObservableDistribution, ObservableTag, ATOM_THRESHOLD,
};
pub use generator::{stationarity_generator_check, GeneratorOptions, GeneratorReport};
pub use resolvent::{gauss_legendre, residual_table, resolvent_phi, Bump, Profile, Resolvent, ResidualRow};
pub use smallball::{small_ball_probe, SmallBallReport, SmallBallStatus};
pub use variation::{quadratic_variation, Conserved, EnergyForm};
