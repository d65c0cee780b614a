//! Deterministic truncated NLS flows.

mod picard;
mod stepper;
mod studies;
mod trajectory;

pub use picard::{local_existence_time, picard_local_solve, PicardCertificate, PicardOptions};
pub use stepper::{linear_factors, NonlinearSubstep, StepFailure, Stepper, BLOWUP_THRESHOLD};
pub(crate) use stepper::check;
pub use studies::{
    galerkin_convergence_study, growth_tracker, linfty_integral, power_law_data, ConvergenceOptions,
    ConvergenceReport, ConvergenceRow, GrowthReport,
};
pub use trajectory::{exact_plane_wave, integrate_deterministic, Diagnostics, IntegratorOptions, Trajectory};
