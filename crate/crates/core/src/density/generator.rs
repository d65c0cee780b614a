use serde::{Deserialize, Serialize};

use super::resolvent::{Profile, Resolvent};
use super::variation::Conserved;
use crate::error::{invalid, Error, Result};
use crate::spectral::SpectralField;
use crate::stats::{bootstrap_mean_ci, linear_fit, mean, std_error, Interval};
use crate::stochastic::{sde_ensemble, EnsembleSpec, SdeStepper};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    pub functional: Conserved,
    pub lambda: f64,
    pub chains: usize,
    /// Time discarded before the window opens.
    pub burn_in: f64,
    pub window: f64,
    /// Observation spacing in time.
    pub stride: f64,
    pub level: f64,
    pub first_stream: u64,
    /// Mean-mass drift between window halves, in standard errors, that flags
    /// non-stationary input.
    pub drift_z: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            functional: Conserved::Mass,
            lambda: 1.0,
            chains: 100,
            burn_in: 40.0,
            window: 10.0,
            stride: 0.1,
            level: 0.95,
            first_stream: 1 << 20,
            drift_z: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub functional: Conserved,
    pub lambda: f64,
    pub chains: usize,
    pub window: f64,
    /// Chain-averaged slope of `t ↦ Φ_λ(F(u(t)))` over the window.
    pub derivative: Interval,
    /// `Ê Φ_λ(F)` over the window.
    pub mean_phi: f64,
    /// Mean of `M` over the second half of the window minus the first half.
    pub mass_drift: f64,
    pub mass_drift_se: f64,
    pub pass: bool,
}

/// Stationarity surrogate for the resolvent balance: under a stationary law
/// `d/dt Ê Φ_λ(F(u(t)))` vanishes.
pub fn stationarity_generator_check<P, I>(
    proto: &SdeStepper,
    dt: f64,
    seed: u64,
    opts: &GeneratorOptions,
    g: &P,
    initial: I,
) -> Result<GeneratorReport>
where
    P: Profile + ?Sized,
    I: Fn(usize) -> SpectralField + Sync,
{
    if opts.chains < 2 || !(opts.window > 0.0) || !(opts.stride > 0.0) || !(opts.burn_in >= 0.0) {
        return Err(invalid("need at least two chains, a positive window and stride, and nonnegative burn-in"));
    }
    let stride = ((opts.stride / dt).round() as usize).max(1);
    let skip = (opts.burn_in / dt / stride as f64).ceil() as usize;
    let count = ((opts.window / dt) / stride as f64).round() as usize + 1;
    if count < 4 {
        return Err(invalid("window holds fewer than four observations"));
    }
    let phi = Resolvent::new(g, opts.lambda, 64, 16)?;
    let p = proto.p();
    let spec = EnsembleSpec {
        runs: opts.chains,
        dt,
        steps: (skip + count - 1) * stride,
        stride,
        seed,
        first_stream: opts.first_stream,
    };
    let which = opts.functional;
    let paths = sde_ensemble(proto, &spec, initial, |u, st| {
        let f = match which {
            Conserved::Mass => u.mass(),
            Conserved::Energy => st.collocation().energy(u, p),
        };
        (u.mass(), f)
    })?;

    let times: Vec<f64> = (0..count).map(|k| (k * stride) as f64 * dt).collect();
    let mut slopes = Vec::with_capacity(opts.chains);
    let mut drifts = Vec::with_capacity(opts.chains);
    let mut phis = Vec::new();
    for path in &paths {
        let window = &path[skip..];
        let values: Vec<f64> = window.iter().map(|(_, f)| phi.value(*f)).collect();
        slopes.push(linear_fit(&times, &values).slope);
        phis.extend_from_slice(&values);
        let half = count / 2;
        let first = mean(&window[..half].iter().map(|w| w.0).collect::<Vec<_>>());
        let second = mean(&window[count - half..].iter().map(|w| w.0).collect::<Vec<_>>());
        drifts.push(second - first);
    }
    let mass_drift = mean(&drifts);
    let mass_drift_se = std_error(&drifts);
    let mean_mass = mean(&paths.iter().flat_map(|p| p[skip..].iter().map(|w| w.0)).collect::<Vec<_>>());
    if mass_drift.abs() > opts.drift_z * mass_drift_se && mass_drift.abs() > 0.02 * mean_mass {
        return Err(Error::NonStationary(format!(
            "mean mass moves by {mass_drift:.4} ({:.1} standard errors) across the window",
            mass_drift / mass_drift_se
        )));
    }
    let derivative = bootstrap_mean_ci(&slopes, opts.level, 2000, seed ^ 0x9e37);
    Ok(GeneratorReport {
        functional: which,
        lambda: opts.lambda,
        chains: opts.chains,
        window: opts.window,
        pass: derivative.contains(0.0),
        derivative,
        mean_phi: mean(&phis),
        mass_drift,
        mass_drift_se,
    })
}
