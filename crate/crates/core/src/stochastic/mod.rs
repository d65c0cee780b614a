//! Fluctuation-dissipation dynamics.

mod balance;
mod cutoff;
mod dissipation;
mod growth;
mod noise;
mod ou;
mod sde;

pub use balance::{
    ito_energy_balance, ito_mass_balance, sde_ensemble, EnergyBalanceReport, EnsembleSpec, MassBalanceReport,
    MIN_BALANCE_RUNS,
};
pub use cutoff::{check_derivative_bound, chi_r, derivative_constant, unit_cutoff, CutoffCheck};
pub use dissipation::{Damping, EnergyDissipation, MassDissipation, RhoArgument, Weight};
pub use growth::{GrowthKind, GrowthPair, LOG_SATURATION};
pub use noise::{noise_increment, power_law_full_sum, NoiseSpec, RngStream};
pub use ou::{
    integrated_variance, ou_exact_step, ou_moment_check, ou_second_moment, ou_sup_ratio, OuMomentReport, OuMomentRow,
    SupRatioReport,
};
pub use sde::{run_path, SdeCounters, SdeStepper, Taming};
