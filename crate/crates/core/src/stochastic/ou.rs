use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{NoiseSpec, RngStream};
use crate::error::{invalid, Result};
use crate::spectral::{ModeBasis, SpectralField};
use crate::stats::{bootstrap_ci, Interval};

/// Per-channel variance of `∫_0^h e^{μ(h-τ)} √α a dβ(τ)` for `Re μ = -γ`.
pub fn integrated_variance(alpha: f64, a: f64, gamma: f64, h: f64) -> f64 {
    if gamma == 0.0 {
        alpha * a * a * h
    } else {
        -alpha * a * a * (-2.0 * gamma * h).exp_m1() / (2.0 * gamma)
    }
}

/// Exact step of `dz = [-i(1+λ) - α(1+λ)^{s-1}]z dt + √α a (dβ¹ + i dβ²)`.
pub fn ou_exact_step(z: &mut SpectralField, dt: f64, alpha: f64, s: f64, spec: &NoiseSpec, rng: &mut RngStream) -> Result<()> {
    let basis = z.basis().clone();
    spec.check_basis(&basis)?;
    for ((c, l), &a) in z.coeffs_mut().iter_mut().zip(basis.eigenvalues()).zip(spec.amplitudes()) {
        let gamma = alpha * (1.0 + l).powf(s - 1.0);
        let decay = if dt.is_infinite() { Complex64::new(0.0, 0.0) } else { Complex64::new(-gamma * dt, -(1.0 + l) * dt).exp() };
        let sd = integrated_variance(alpha, a, gamma, dt).sqrt();
        let noise = Complex64::new(rng.normal(), rng.normal()) * sd;
        *c = decay * *c + noise;
    }
    Ok(())
}

/// `E|z_k(t)|²` from `z(0) = 0`: `a²(1+λ)^{1-s}(1 - e^{-2α(1+λ)^{s-1} t})`.
pub fn ou_second_moment(a: f64, lambda: f64, alpha: f64, s: f64, t: f64) -> f64 {
    let gamma = alpha * (1.0 + lambda).powf(s - 1.0);
    -a * a * (1.0 + lambda).powf(1.0 - s) * (-2.0 * gamma * t).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuMomentRow {
    pub mode: usize,
    pub t: f64,
    pub empirical: f64,
    pub exact: f64,
    pub std_error: f64,
    /// `(empirical - exact) / std_error`
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuMomentReport {
    pub paths: usize,
    pub rows: Vec<OuMomentRow>,
    pub max_abs_z: f64,
}

impl OuMomentReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.max_abs_z <= sigmas
    }
}

/// Monte-Carlo `E|z_m(t)|²` from `z(0) = 0` against the closed form, for each
/// mode and each time in the increasing list `times`. A time of `f64::INFINITY`
/// compares against the stationary value `a²(1+λ)^{1-s}` using a draw from
/// the stationary law.
pub fn ou_moment_check(
    basis: &Arc<ModeBasis>,
    spec: &NoiseSpec,
    alpha: f64,
    s: f64,
    times: &[f64],
    paths: usize,
    seed: u64,
) -> Result<OuMomentReport> {
    if !(alpha > 0.0) || paths < 2 {
        return Err(invalid("need alpha > 0 and at least two paths"));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times must be positive and strictly increasing"));
    }
    spec.check_basis(basis)?;
    let samples: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut z = SpectralField::zeros(basis.clone());
            let mut out = Vec::with_capacity(times.len() * basis.len());
            let mut now = 0.0;
            for &t in times {
                // an infinite step is the exact stationary draw
                ou_exact_step(&mut z, t - now, alpha, s, spec, &mut rng)?;
                now = t;
                out.extend(z.coeffs().iter().map(|c| c.norm_sqr()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n = paths as f64;
    let mut rows = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        for (m, l) in basis.eigenvalues().enumerate() {
            let col = k * basis.len() + m;
            let mean = samples.iter().map(|r| r[col]).sum::<f64>() / n;
            let var = samples.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let std_error = (var / n).sqrt();
            let a = spec.amplitudes()[m];
            let exact = if t.is_infinite() { a * a * (1.0 + l).powf(1.0 - s) } else { ou_second_moment(a, l, alpha, s, t) };
            let z = if std_error > 0.0 { (mean - exact) / std_error } else if mean == exact { 0.0 } else { f64::INFINITY };
            rows.push(OuMomentRow { mode: m, t, empirical: mean, exact, std_error, z });
        }
    }
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0f64, |m, z| if z.is_nan() || m.is_nan() { f64::NAN } else { m.max(z) });
    Ok(OuMomentReport { paths, rows, max_abs_z })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupRatioReport {
    pub t: f64,
    pub paths: usize,
    /// `Ê sup_{k dt ≤ t} ‖z‖²`
    pub mean_sup: f64,
    pub mean_terminal: f64,
    /// Ratio of the two means with a 95% bootstrap interval.
    pub ratio: Interval,
}

/// Compare the running supremum of `‖z‖²` on a grid of spacing `dt` with its
/// terminal value.
pub fn ou_sup_ratio(
    basis: &Arc<ModeBasis>,
    spec: &NoiseSpec,
    alpha: f64,
    s: f64,
    t: f64,
    dt: f64,
    paths: usize,
    seed: u64,
) -> Result<SupRatioReport> {
    if !(alpha > 0.0) || !(t > 0.0) || !(dt > 0.0) || paths < 2 {
        return Err(invalid("need alpha, t, dt > 0 and at least two paths"));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let pairs: Vec<(f64, f64)> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut z = SpectralField::zeros(basis.clone());
            let mut sup: f64 = 0.0;
            for _ in 0..steps {
                ou_exact_step(&mut z, h, alpha, s, spec, &mut rng)?;
                sup = sup.max(z.norm_sq());
            }
            Ok((sup, z.norm_sq()))
        })
        .collect::<Result<_>>()?;
    let ratio_of = |idx: &[usize]| {
        let (a, b) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + pairs[i].0, b + pairs[i].1));
        a / b
    };
    let all: Vec<usize> = (0..paths).collect();
    let estimate = ratio_of(&all);
    let ratio = bootstrap_ci(paths, 0.95, 2000, seed ^ 0x5eed, ratio_of, estimate);
    let n = paths as f64;
    Ok(SupRatioReport {
        t,
        paths,
        mean_sup: pairs.iter().map(|p| p.0).sum::<f64>() / n,
        mean_terminal: pairs.iter().map(|p| p.1).sum::<f64>() / n,
        ratio,
    })
}
