use serde::{Deserialize, Serialize};

use super::picard::local_existence_time;
use super::trajectory::{integrate_deterministic, IntegratorOptions, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::spectral::{ModeBasis, Scheme, SpectralField};
use crate::stats::linear_fit;
use crate::stochastic::GrowthPair;
use std::sync::Arc;

/// Cumulative trapezoid of `‖u(τ)‖_∞^{p-1}` at each sample time.
pub fn linfty_integral(traj: &Trajectory, p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(traj.len());
    let mut acc = 0.0;
    for i in 0..traj.len() {
        if i > 0 {
            let h = traj.times[i] - traj.times[i - 1];
            let a = traj.diagnostics[i - 1].sup.powf(p - 1.0);
            let b = traj.diagnostics[i].sup.powf(p - 1.0);
            acc += 0.5 * h * (a + b);
        }
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub i: f64,
    pub r: f64,
    /// `sup_t ‖u(t)‖_r / ξ(1 + i + ln(1+t))`
    pub ratio: f64,
    pub within_bound: bool,
    pub envelope: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Compare `‖u(t)‖_r` with the envelope `ξ(1 + i + ln(1+t))`.
pub fn growth_tracker(traj: &Trajectory, r: f64, xi: &GrowthPair, i: f64) -> GrowthReport {
    let norms: Vec<f64> = traj.snapshots.iter().map(|u| u.sobolev_norm(r)).collect();
    let envelope: Vec<f64> = traj.times.iter().map(|&t| xi.xi(1.0 + i + t.ln_1p())).collect();
    let ratio = norms.iter().zip(&envelope).map(|(n, e)| n / e).fold(0.0, f64::max);
    GrowthReport { i, r, ratio, within_bound: ratio <= 2.0, envelope, norms }
}

/// Coefficients `(1+λ)^{-decay/2}`, rescaled so that `‖u‖_s = norm`.
pub fn power_law_data(basis: &Arc<ModeBasis>, decay: f64, s: f64, norm: f64) -> SpectralField {
    let c = basis
        .eigenvalues()
        .map(|l| num_complex::Complex64::new((1.0 + l).powf(-decay / 2.0), 0.0))
        .collect();
    let u = SpectralField::from_coeffs(basis.clone(), c).unwrap();
    let n = u.sobolev_norm(s);
    u.scaled(norm / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOptions {
    pub p: f64,
    pub s: f64,
    pub r: f64,
    pub dt: f64,
    pub horizon: f64,
    pub cutoffs: Vec<usize>,
    /// Samples in time at which errors are measured.
    pub samples: usize,
    /// Reference step is `dt / reference_refinement`.
    pub reference_refinement: usize,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cutoff: usize,
    pub modes: usize,
    pub top_eigenvalue: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub reference_cutoff: usize,
    /// Slope of `ln error` against `ln(1 + λ_N)`.
    pub slope: f64,
    pub expected_slope: f64,
    pub relative_slope_error: f64,
    /// Errors nonincreasing in N up to 10%.
    pub monotone: bool,
}

/// Sup-in-time `H^r` distance between the reference flow of `u0` and the
/// truncated flows of `P_N u0`. The basis of `u0` is the reference.
pub fn galerkin_convergence_study(u0: &SpectralField, opts: &ConvergenceOptions) -> Result<ConvergenceReport> {
    if !(opts.r < opts.s) {
        return Err(invalid("convergence study needs r < s"));
    }
    if opts.cutoffs.is_empty() || opts.samples == 0 {
        return Err(invalid("need cutoffs and samples"));
    }
    let limit = local_existence_time(u0.sobolev_norm(opts.s), opts.p, 1.0);
    if opts.horizon > limit * (1.0 + 1e-12) {
        return Err(Error::HorizonTooLarge { requested: opts.horizon, limit });
    }
    let steps = (opts.horizon / opts.dt).round() as usize;
    if steps % opts.samples != 0 {
        return Err(invalid("samples must divide the step count"));
    }
    let stride = steps / opts.samples;
    let base = IntegratorOptions {
        p: opts.p,
        dt: opts.dt,
        horizon: opts.horizon,
        scheme: opts.scheme,
        stride,
        sigmas: vec![],
        ..Default::default()
    };
    let reference = integrate_deterministic(
        u0,
        &IntegratorOptions {
            dt: opts.dt / opts.reference_refinement as f64,
            stride: stride * opts.reference_refinement,
            ..base.clone()
        },
    )?;
    let ref_basis = u0.basis();
    let mut rows = Vec::new();
    for &n in &opts.cutoffs {
        let basis = Arc::new(ModeBasis::new(ref_basis.dim(), n, ref_basis.full_shell())?);
        if !ref_basis.extends(&basis) {
            return Err(invalid(format!("cutoff {n} exceeds the reference basis")));
        }
        let start = u0.restrict_to(basis.clone())?;
        let traj = integrate_deterministic(&start, &base)?;
        let error = traj
            .snapshots
            .iter()
            .zip(&reference.snapshots)
            .map(|(a, e)| a.embed(ref_basis.clone()).and_then(|a| a.sub(e)).map(|d| d.sobolev_norm(opts.r)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow { cutoff: n, modes: basis.len(), top_eigenvalue: basis.top_eigenvalue(), error });
    }
    let x: Vec<f64> = rows.iter().map(|r| (1.0 + r.top_eigenvalue).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
    let slope = if rows.len() > 1 { linear_fit(&x, &y).slope } else { f64::NAN };
    let expected = (opts.r - opts.s) / 2.0;
    let monotone = rows.windows(2).all(|w| w[1].error <= 1.1 * w[0].error);
    Ok(ConvergenceReport {
        reference_cutoff: ref_basis.cutoff(),
        rows,
        slope,
        expected_slope: expected,
        relative_slope_error: ((slope - expected) / expected).abs(),
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{exact_plane_wave, Diagnostics};
    use crate::stochastic::GrowthKind;
    use num_complex::Complex64;

    fn constant_norm_trajectory(c: f64) -> Trajectory {
        let b = Arc::new(ModeBasis::new(1, 2, true).unwrap());
        let mut t = Trajectory::new(vec![]);
        for k in 0..5 {
            let u = SpectralField::single_mode(b.clone(), 0, Complex64::new(c, 0.0));
            let d = Diagnostics { mass: 0.0, energy: 0.0, norms: vec![], sup: c };
            t.push(k as f64, u, d);
        }
        t
    }

    #[test]
    fn linfty_integral_cases() {
        let zero = constant_norm_trajectory(0.0);
        assert!(linfty_integral(&zero, 7.0).iter().all(|&v| v == 0.0));
        let b = Arc::new(ModeBasis::new(1, 8, true).unwrap());
        let c = Complex64::new(0.5, 0.0);
        let u0 = exact_plane_wave(&b, [2, 0, 0], c, 7.0, 1.0, 0.0).unwrap();
        let opts = IntegratorOptions { horizon: 0.5, dt: 1e-3, stride: 50, ..Default::default() };
        let traj = integrate_deterministic(&u0, &opts).unwrap();
        let integral = linfty_integral(&traj, 7.0);
        for (t, v) in traj.times.iter().zip(&integral) {
            assert!((v - 0.5f64.powi(6) * t).abs() < 1e-12);
        }
    }

    #[test]
    fn growth_ratio_for_constant_norm() {
        let g = GrowthPair::new(GrowthKind::identity());
        let traj = constant_norm_trajectory(3.0);
        let rep = growth_tracker(&traj, 0.0, &g, 2.0);
        // ‖u‖_0 = 3 for a unit-weight zero mode; ξ is smallest at t = 0
        assert!((rep.ratio - 3.0 / 3.0).abs() < 1e-12);
        assert!(rep.within_bound);
        assert_eq!(growth_tracker(&constant_norm_trajectory(0.0), 1.0, &g, 1.0).ratio, 0.0);
    }

    #[test]
    fn data_inside_smallest_space_converges_to_machine_precision() {
        // small amplitude: nonlinear transfer to modes above N_min stays below round-off
        let reference = Arc::new(ModeBasis::new(1, 32, true).unwrap());
        let small = Arc::new(ModeBasis::new(1, 4, true).unwrap());
        let u0 = power_law_data(&small, 3.0, 2.0, 1e-3).embed(reference).unwrap();
        let opts = ConvergenceOptions {
            p: 7.0,
            s: 2.0,
            r: 1.0,
            dt: 1.0 / 128.0 / 32.0,
            horizon: 1.0 / 128.0,
            cutoffs: vec![4, 8, 16],
            samples: 4,
            reference_refinement: 10,
            scheme: Scheme::StrangSplitting,
        };
        let rep = galerkin_convergence_study(&u0, &opts).unwrap();
        for row in &rep.rows {
            // only the time discretisation separates run and reference
            assert!(row.error < 1e-15, "{row:?}");
        }
    }
}
