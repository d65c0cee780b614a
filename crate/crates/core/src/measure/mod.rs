//! Empirical measures built from fluctuation-dissipation samples, and the
//! studies run on them.

mod coupling;
mod empirical;
mod invariance;
mod sampling;
mod sigma;

pub use coupling::{coupling_study, CouplingOptions, CouplingReport, CouplingRow};
pub use empirical::{EmpiricalMeasure, Provenance, RestrictionComparison};
pub use invariance::{invariance_test, InvarianceReport, Observable, ObservableDistance};
pub use sampling::{
    blocked_mean_ci, cumulative_measure, inviscid_sweep, krylov_bogoliubov_sample, large_data_profile,
    scaled_measure_run, stationary_report, Experiment, SamplingPlan, ScaledRun, StationaryReport, SweepReport,
    SweepRow, TailPoint,
};
pub use sigma::{
    sigma_ensemble, sigma_membership, sigma_profile, SigmaCertificate, SigmaEnsembleReport, SigmaOptions,
    SigmaProfile,
};
