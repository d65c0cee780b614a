use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::empirical::EmpiricalMeasure;
use crate::dynamics::{IntegratorOptions, Stepper};
use crate::error::{invalid, Result};
use crate::spectral::SpectralField;
use crate::stats::{poisson_log_linear, PoissonFit};
use crate::stochastic::{GrowthKind, GrowthPair};

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaOptions {
    pub r: f64,
    pub j_max: u32,
    pub growth: GrowthPair,
    /// `T_j = safety·ξ(i+j)^{1-p}`
    pub safety: f64,
    /// Levels `i` evaluated from one flow per candidate.
    pub levels: Vec<u32>,
    pub flow: IntegratorOptions,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        Self {
            r: 1.0,
            j_max: 4,
            growth: GrowthPair::new(GrowthKind::identity()),
            safety: 1.0 / 128.0,
            levels: (1..=5).collect(),
            flow: IntegratorOptions::default(),
        }
    }
}

/// Running maxima of `‖φ_N^t u_0‖_r` along one flow, enough to decide
/// membership at every requested level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaProfile {
    pub r: f64,
    /// `max_{t ≤ e^j} ‖u(t)‖_r` for `j = 1..=j_max`; infinite past a blow-up.
    pub maxima: Vec<f64>,
    pub levels: Vec<u32>,
    /// `sup_t ‖u(t)‖_r / ξ(1 + i + ln(1+t))` for each level.
    pub envelope: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaCertificate {
    pub i: u32,
    pub r: f64,
    pub j_max: u32,
    pub cutoff: usize,
    pub growth: String,
    pub member: bool,
    /// `max_j max_{t ≤ e^j} ‖u(t)‖_r / ξ(i+j)`
    pub worst_ratio: f64,
    pub failed_at: Option<u32>,
    pub periods: Vec<f64>,
    /// Growth bound ratio; certified ≤ 2 on `[0, e^{j_max}]` for members.
    pub envelope_ratio: f64,
    pub failure: Option<String>,
}

pub fn sigma_profile(u0: &SpectralField, opts: &SigmaOptions) -> Result<SigmaProfile> {
    if opts.j_max == 0 || opts.j_max > 5 {
        return Err(invalid("j_max must lie in 1..=5"));
    }
    let f = &opts.flow;
    let mut stepper = Stepper::new(u0.basis().clone(), f.p, f.shift, f.scheme, f.oversampling)?;
    let weights: Vec<f64> = u0.basis().eigenvalues().map(|l| (1.0 + l).powf(opts.r)).collect();
    let norm = |u: &[num_complex::Complex64]| {
        u.iter().zip(&weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>().sqrt()
    };
    let horizon = f64::from(opts.j_max).exp();
    let steps = (horizon / f.dt).ceil() as usize;
    let mut u = u0.coeffs().to_vec();
    let mut maxima = vec![0.0f64; opts.j_max as usize];
    let mut envelope = vec![0.0f64; opts.levels.len()];
    let mut failure = None;
    let observe = |t: f64, n: f64, maxima: &mut [f64], envelope: &mut [f64]| {
        for (j, m) in maxima.iter_mut().enumerate() {
            if t <= ((j + 1) as f64).exp() + 1e-12 {
                *m = m.max(n);
            }
        }
        for (e, &i) in envelope.iter_mut().zip(&opts.levels) {
            *e = e.max(n / opts.growth.xi(1.0 + f64::from(i) + t.ln_1p()));
        }
    };
    observe(0.0, norm(&u), &mut maxima, &mut envelope);
    for step in 1..=steps {
        let t = step as f64 * f.dt;
        if let Err(e) = stepper.step(&mut u, f.dt) {
            for (j, m) in maxima.iter_mut().enumerate() {
                if t <= ((j + 1) as f64).exp() + f.dt {
                    *m = f64::INFINITY;
                }
            }
            envelope.iter_mut().for_each(|e| *e = f64::INFINITY);
            failure = Some(format!("blow-up at t = {t}: {e}"));
            break;
        }
        observe(t, norm(&u), &mut maxima, &mut envelope);
    }
    Ok(SigmaProfile { r: opts.r, maxima, levels: opts.levels.clone(), envelope, failure })
}

impl SigmaProfile {
    pub fn certificate(&self, level: usize, opts: &SigmaOptions, cutoff: usize) -> SigmaCertificate {
        let i = self.levels[level];
        let p = opts.flow.p;
        let mut worst: f64 = 0.0;
        let mut failed_at = None;
        let mut periods = Vec::new();
        for (j, m) in self.maxima.iter().enumerate() {
            let j = j as u32 + 1;
            let bound = opts.growth.xi(f64::from(i + j));
            periods.push(opts.safety * bound.powf(1.0 - p));
            let ratio = m / bound;
            worst = worst.max(ratio);
            if !(ratio <= 1.0) && failed_at.is_none() {
                failed_at = Some(j);
            }
        }
        SigmaCertificate {
            i,
            r: self.r,
            j_max: self.maxima.len() as u32,
            cutoff,
            growth: opts.growth.kind.name(),
            member: failed_at.is_none(),
            worst_ratio: worst,
            failed_at,
            periods,
            envelope_ratio: self.envelope[level],
            failure: self.failure.clone(),
        }
    }
}

/// Membership of `u_0` in `Σ^i` truncated at `j_max`.
pub fn sigma_membership(u0: &SpectralField, i: u32, opts: &SigmaOptions) -> Result<SigmaCertificate> {
    let opts = SigmaOptions { levels: vec![i], ..opts.clone() };
    let profile = sigma_profile(u0, &opts)?;
    Ok(profile.certificate(0, &opts, u0.basis().cutoff()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEnsembleReport {
    pub measure_id: String,
    pub samples: usize,
    pub levels: Vec<u32>,
    pub rejected: Vec<u64>,
    /// Weighted rejected mass per level.
    pub rejected_fraction: Vec<f64>,
    /// Log-linear Poisson fit of the rejection counts against `i`.
    pub fit: Option<PoissonFit>,
    /// Largest envelope ratio among admitted members, per level.
    pub admitted_envelope: Vec<f64>,
    pub envelope_ok: bool,
    /// Membership at `i` implies membership at every larger level.
    pub monotone: bool,
}

impl SigmaEnsembleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,rejected,fraction,admitted_envelope\n");
        for k in 0..self.levels.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.levels[k], self.rejected[k], self.rejected_fraction[k], self.admitted_envelope[k]
            ));
        }
        out
    }
}

/// Certify every snapshot of `m` at all levels and fit the rejection decay.
pub fn sigma_ensemble(m: &EmpiricalMeasure, opts: &SigmaOptions) -> Result<SigmaEnsembleReport> {
    if opts.levels.is_empty() || opts.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("levels must be strictly increasing"));
    }
    let profiles: Vec<SigmaProfile> = m.fields().par_iter().map(|u| sigma_profile(u, opts)).collect::<Result<_>>()?;
    let cutoff = m.basis().cutoff();
    let nl = opts.levels.len();
    let mut rejected = vec![0u64; nl];
    let mut fraction = vec![0.0; nl];
    let mut admitted_envelope = vec![0.0f64; nl];
    let mut monotone = true;
    for (prof, w) in profiles.iter().zip(m.weights()) {
        let certs: Vec<SigmaCertificate> = (0..nl).map(|k| prof.certificate(k, opts, cutoff)).collect();
        for (k, c) in certs.iter().enumerate() {
            if c.member {
                admitted_envelope[k] = admitted_envelope[k].max(c.envelope_ratio);
            } else {
                rejected[k] += 1;
                fraction[k] += w;
            }
        }
        if certs.windows(2).any(|c| c[0].member && !c[1].member) {
            monotone = false;
        }
    }
    let x: Vec<f64> = opts.levels.iter().map(|&i| f64::from(i)).collect();
    let exposure = vec![m.len() as f64; nl];
    let fit = poisson_log_linear(&x, &rejected, &exposure);
    Ok(SigmaEnsembleReport {
        measure_id: m.measure_id(),
        samples: m.len(),
        levels: opts.levels.clone(),
        rejected,
        rejected_fraction: fraction,
        fit,
        envelope_ok: admitted_envelope.iter().all(|&e| e <= 2.0),
        admitted_envelope,
        monotone,
    })
}
