//! Payloads of the JSON reports written by the subcommands and read by `plot`.

use serde::{Deserialize, Serialize};
use snls_core::density::{Atom, DensityBound, Histogram, ObservableTag};
use snls_core::dynamics::GrowthReport;
use snls_core::measure::SweepReport;
use snls_core::stats::Interval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthData {
    pub times: Vec<f64>,
    pub growth: GrowthReport,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Relative L² error against the exact solution, when one exists.
    pub exact_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityLaw {
    pub tag: ObservableTag,
    pub samples: usize,
    pub bandwidth: f64,
    pub atoms: Vec<Atom>,
    pub histogram: Histogram,
    pub bound: DensityBound,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityData {
    pub measure_id: String,
    pub laws: Vec<DensityLaw>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub lambda: f64,
    pub lambda_n: f64,
    pub factor: f64,
    pub measure_id: String,
    pub mass_dissipation: Interval,
    pub large_data: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleData {
    pub rows: Vec<ScaleRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepData {
    pub report: SweepReport,
    pub invariance_t: f64,
    /// Largest KS distance per α, empty when the trend was skipped.
    pub ks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeComponent {
    pub lambda: f64,
    pub weight: f64,
    pub measure_id: String,
    pub mean_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeData {
    pub measure_id: String,
    pub components: Vec<CumulativeComponent>,
    pub mean_mass: f64,
    /// `Σ w_n Ê_n M` over the renormalised weights.
    pub mixed_mean_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}
