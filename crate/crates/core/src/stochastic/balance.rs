use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::RngStream;
use super::sde::{run_path, SdeStepper};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use crate::stats::{bootstrap_mean_ci, mean, Interval};

/// Layout of an ensemble of independent SDE paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub runs: usize,
    pub dt: f64,
    pub steps: usize,
    /// Observe every `stride` steps (and at step 0).
    pub stride: usize,
    pub seed: u64,
    /// Stream index of run 0; run `i` uses `first_stream + i`.
    pub first_stream: u64,
}

/// Run independent paths in parallel; `observe` sees every recorded state.
/// Results are ordered by run index, independent of the thread schedule.
pub fn sde_ensemble<T, I, O>(proto: &SdeStepper, spec: &EnsembleSpec, initial: I, observe: O) -> Result<Vec<Vec<T>>>
where
    T: Send,
    I: Fn(usize) -> SpectralField + Sync,
    O: Fn(&SpectralField, &mut SdeStepper) -> T + Sync,
{
    (0..spec.runs)
        .into_par_iter()
        .map(|i| {
            let mut stepper = proto.clone();
            let mut rng = RngStream::new(spec.seed, spec.first_stream + i as u64);
            let mut out = Vec::with_capacity(spec.steps / spec.stride.max(1) + 1);
            run_path(&mut stepper, &initial(i), spec.dt, spec.steps, spec.stride, &mut rng, |_, u, st| {
                out.push(observe(u, st))
            })?;
            Ok(out)
        })
        .collect()
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[values.len() - 1]))
}

pub const MIN_BALANCE_RUNS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBalanceReport {
    pub t: f64,
    pub runs: usize,
    pub mean_mass_t: f64,
    pub mean_mass_0: f64,
    /// `α ∫_0^t Ê𝓜`
    pub dissipation: f64,
    /// `α A_{0,N} t / 2`
    pub forcing: f64,
    pub residual: Interval,
    pub pass: bool,
}

/// `r(t) = Ê M(u(t)) + α∫Ê𝓜 - Ê M(u_0) - α A_{0,N} t/2` with a 99% bootstrap interval.
pub fn ito_mass_balance<I>(proto: &SdeStepper, spec: &EnsembleSpec, initial: I) -> Result<MassBalanceReport>
where
    I: Fn(usize) -> SpectralField + Sync,
{
    if spec.runs < MIN_BALANCE_RUNS {
        return Err(Error::TooFewRuns { got: spec.runs, need: MIN_BALANCE_RUNS });
    }
    let damping = *proto.damping();
    let paths = sde_ensemble(proto, spec, initial, |u, _| (u.mass(), damping.mass(u).value))?;
    let alpha = proto.alpha();
    let h = spec.dt * spec.stride as f64;
    let t = spec.dt * spec.steps as f64;
    let forcing = alpha * proto.noise().a_sigma(proto.basis(), 0.0) * t / 2.0;
    let mut m0 = Vec::new();
    let mut mt = Vec::new();
    let mut diss = Vec::new();
    let residuals: Vec<f64> = paths
        .iter()
        .map(|p| {
            let rate: Vec<f64> = p.iter().map(|x| x.1).collect();
            let d = alpha * trapezoid(&rate, h);
            let (first, last) = (p[0].0, p[p.len() - 1].0);
            m0.push(first);
            mt.push(last);
            diss.push(d);
            last + d - first - forcing
        })
        .collect();
    let residual = bootstrap_mean_ci(&residuals, 0.99, 4000, spec.seed ^ 0x5eed);
    Ok(MassBalanceReport {
        t,
        runs: spec.runs,
        mean_mass_t: mean(&mt),
        mean_mass_0: mean(&m0),
        dissipation: mean(&diss),
        forcing,
        pass: residual.contains(0.0),
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalanceReport {
    pub t: f64,
    pub runs: usize,
    pub mean_energy_t: f64,
    pub mean_energy_0: f64,
    /// `α ∫ Ê𝓔`
    pub dissipation: f64,
    /// Exact Itô drift `(α/2)∫[A_1 + A_0 + ((p+1)/2) A_0 (2π)^{-d} ‖u‖_{L^{p-1}}^{p-1}]`.
    pub exact_forcing: f64,
    /// Simplified bound `(α/2)(A_1 t + A_0 (2π)^{-d} ∫‖u‖_{L^{p-1}}^{p-1})`.
    pub bound_forcing: f64,
    /// LHS minus RHS of the exact identity.
    pub exact_residual: Interval,
    /// LHS minus RHS of the simplified inequality; negative when it holds.
    pub bound_margin: Interval,
    pub exact_pass: bool,
    pub bound_holds: bool,
}

pub fn ito_energy_balance<I>(proto: &SdeStepper, spec: &EnsembleSpec, initial: I) -> Result<EnergyBalanceReport>
where
    I: Fn(usize) -> SpectralField + Sync,
{
    if spec.runs < MIN_BALANCE_RUNS {
        return Err(Error::TooFewRuns { got: spec.runs, need: MIN_BALANCE_RUNS });
    }
    let damping = *proto.damping();
    let p = proto.p();
    let paths = sde_ensemble(proto, spec, initial, |u, st| {
        let grid = st.collocation();
        let e = grid.energy(u, p);
        let de = damping.energy(u, grid, p).value;
        let l = grid.lp_integral(u, p - 1.0);
        (e, de, l)
    })?;
    let basis = proto.basis().clone();
    let alpha = proto.alpha();
    let a0 = proto.noise().a_sigma(&basis, 0.0);
    let a1 = proto.noise().a_sigma(&basis, 1.0);
    let vol = (2.0 * std::f64::consts::PI).powi(basis.dim() as i32);
    let h = spec.dt * spec.stride as f64;
    let t = spec.dt * spec.steps as f64;
    let mut sums = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut exact = Vec::new();
    let mut bounded = Vec::new();
    for path in &paths {
        let de: Vec<f64> = path.iter().map(|x| x.1).collect();
        let l: Vec<f64> = path.iter().map(|x| x.2).collect();
        let dissipation = alpha * trapezoid(&de, h);
        let lint = trapezoid(&l, h);
        let exact_forcing = 0.5 * alpha * ((a1 + a0) * t + 0.5 * (p + 1.0) * a0 / vol * lint);
        let bound_forcing = 0.5 * alpha * (a1 * t + a0 / vol * lint);
        let (e0, et) = (path[0].0, path[path.len() - 1].0);
        exact.push(et + dissipation - e0 - exact_forcing);
        bounded.push(et + dissipation - e0 - bound_forcing);
        for (v, x) in sums.iter_mut().zip([et, e0, dissipation, exact_forcing, bound_forcing]) {
            v.push(x);
        }
    }
    let exact_residual = bootstrap_mean_ci(&exact, 0.99, 4000, spec.seed ^ 0xe1);
    let bound_margin = bootstrap_mean_ci(&bounded, 0.99, 4000, spec.seed ^ 0xe2);
    Ok(EnergyBalanceReport {
        t,
        runs: spec.runs,
        mean_energy_t: mean(&sums[0]),
        mean_energy_0: mean(&sums[1]),
        dissipation: mean(&sums[2]),
        exact_forcing: mean(&sums[3]),
        bound_forcing: mean(&sums[4]),
        exact_pass: exact_residual.contains(0.0),
        bound_holds: bound_margin.lower <= 0.0,
        exact_residual,
        bound_margin,
    })
}
