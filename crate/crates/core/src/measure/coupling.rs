use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::Experiment;
use crate::error::{invalid, Error, Result};
use crate::spectral::SpectralField;
use crate::stats::{bootstrap_mean_ci, Interval};
use crate::stochastic::{noise_increment, ou_exact_step, RngStream, SdeStepper};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingOptions {
    pub alphas: Vec<f64>,
    pub t: f64,
    /// Initial data are drawn with `‖u_0‖_s ≤ ball`.
    pub ball: f64,
    /// The event `S_r`: the forcing path and the stochastic convolution stay
    /// below `r_cut·√α·t`.
    pub r_cut: f64,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub alpha: f64,
    /// `Ê[‖φ_N^t u_0 - u_α(t)‖·1_{S_r}]`
    pub error: Interval,
    pub event_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub t: f64,
    pub ball: f64,
    pub r_cut: f64,
    pub runs: usize,
    pub rows: Vec<CouplingRow>,
    /// Errors shrink along the (decreasing) α list.
    pub monotone: bool,
}

fn initial(exp: &Experiment, basis: &std::sync::Arc<crate::spectral::ModeBasis>, ball: f64, seed: u64, run: usize) -> SpectralField {
    let mut rng = RngStream::new(seed ^ 0xc0de, run as u64);
    let coeffs: Vec<Complex64> = basis
        .eigenvalues()
        .map(|l| Complex64::new(rng.normal(), rng.normal()) * (1.0 + l).powf(-(exp.config.s + 1.0) / 2.0))
        .collect();
    let u = SpectralField::from_coeffs(basis.clone(), coeffs).unwrap();
    let radius = ball * rand::Rng::gen::<f64>(rng.rng());
    let n = u.sobolev_norm(exp.config.s);
    u.scaled(radius / n)
}

/// Compare the viscous path `u_α` with the truncated flow from the same data,
/// each run reusing one noise stream across all α.
pub fn coupling_study(exp: &Experiment, opts: &CouplingOptions) -> Result<CouplingReport> {
    if opts.runs == 0 || !(opts.t > 0.0) || opts.alphas.iter().any(|a| !(*a >= 0.0)) {
        return Err(invalid("coupling needs runs > 0, t > 0 and nonnegative alphas"));
    }
    let basis = exp.basis()?;
    let noise = exp.noise(&basis);
    let cfg = &exp.config;
    let steps = (opts.t / cfg.dt).round() as usize;
    let make = |alpha: f64| {
        SdeStepper::new(basis.clone(), cfg.p, alpha, exp.damping(), noise.clone(), cfg.scheme, cfg.oversampling)
    };
    let flow = make(0.0)?;
    let starts: Vec<SpectralField> = (0..opts.runs).map(|i| initial(exp, &basis, opts.ball, opts.seed, i)).collect();

    let finals: Vec<Vec<Complex64>> = starts
        .par_iter()
        .map(|u0| {
            let mut st = flow.clone();
            let mut rng = RngStream::new(opts.seed, 0);
            let mut u = u0.coeffs().to_vec();
            for n in 1..=steps {
                st.step(&mut u, cfg.dt, &mut rng)
                    .map_err(|e| Error::BlowUp { time: n as f64 * cfg.dt, reason: e.to_string() })?;
            }
            Ok(u)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &alpha in &opts.alphas {
        let proto = make(alpha)?;
        let threshold = opts.r_cut * alpha.sqrt() * opts.t;
        let samples: Vec<(f64, bool)> = starts
            .par_iter()
            .zip(&finals)
            .enumerate()
            .map(|(i, (u0, reference))| {
                let mut st = proto.clone();
                let mut rng = RngStream::new(opts.seed, i as u64);
                // shadow streams replay the same normals
                let mut eta_rng = rng.clone();
                let mut z_rng = rng.clone();
                let mut eta = SpectralField::zeros(basis.clone());
                let mut z = SpectralField::zeros(basis.clone());
                let mut inside = true;
                let mut u = u0.coeffs().to_vec();
                for n in 1..=steps {
                    st.step(&mut u, cfg.dt, &mut rng)
                        .map_err(|e| Error::BlowUp { time: n as f64 * cfg.dt, reason: e.to_string() })?;
                    if alpha > 0.0 {
                        let d = noise_increment(&basis, &noise, cfg.dt, &mut eta_rng)?;
                        eta.axpy(Complex64::new(1.0, 0.0), &d)?;
                        ou_exact_step(&mut z, cfg.dt, alpha, cfg.s, &noise, &mut z_rng)?;
                        inside &= alpha.sqrt() * eta.norm() <= threshold && z.norm() <= threshold;
                    }
                }
                let err = u.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                Ok((if inside { err } else { 0.0 }, inside))
            })
            .collect::<Result<_>>()?;
        let errs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let error = bootstrap_mean_ci(&errs, 0.95, 2000, opts.seed ^ alpha.to_bits());
        let event_fraction = samples.iter().filter(|s| s.1).count() as f64 / samples.len() as f64;
        rows.push(CouplingRow { alpha, error, event_fraction });
    }
    let monotone = rows.windows(2).all(|w| (w[1].alpha < w[0].alpha) == (w[1].error.estimate < w[0].error.estimate));
    Ok(CouplingReport { t: opts.t, ball: opts.ball, r_cut: opts.r_cut, runs: opts.runs, rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp() -> Experiment {
        let mut e = Experiment::reference();
        e.config.cutoff = 4;
        e.config.dt = 1e-3;
        e
    }

    #[test]
    fn zero_viscosity_couples_exactly() {
        let o = CouplingOptions { alphas: vec![0.0], t: 0.2, ball: 1.0, r_cut: 10.0, runs: 4, seed: 5 };
        let r = coupling_study(&exp(), &o).unwrap();
        assert_eq!(r.rows[0].error.estimate, 0.0);
    }

    #[test]
    fn pure_damping_matches_the_linear_comparison() {
        // a ≡ 0 and tiny data: u_α(t) = e^{-α((1+λ)^{s-1} + w) t} φ^t u0 with w ≈ 1
        let mut e = exp();
        e.noise_scale = 0.0;
        let basis = e.basis().unwrap();
        assert!(e.noise(&basis).is_zero());
        let t = 0.3;
        for alpha in [0.1, 0.05] {
            let o = CouplingOptions { alphas: vec![alpha], t, ball: 1e-6, r_cut: 1.0, runs: 3, seed: 2 };
            let r = coupling_study(&e, &o).unwrap();
            let predicted: f64 = (0..3)
                .map(|i| {
                    let u0 = initial(&e, &basis, 1e-6, 2, i);
                    u0.coeffs()
                        .iter()
                        .zip(basis.eigenvalues())
                        .map(|(c, l)| {
                            let g = alpha * ((1.0 + l).powf(e.config.s - 1.0) + 1.0);
                            ((-g * t).exp_m1().abs() * c.norm()).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .sum::<f64>()
                / 3.0;
            let got = r.rows[0].error.estimate;
            assert!((got / predicted - 1.0).abs() < 1e-4, "alpha={alpha}: {got} vs {predicted}");
        }
    }

    #[test]
    fn error_shrinks_with_viscosity() {
        let o = CouplingOptions { alphas: vec![0.4, 0.1, 0.025], t: 0.5, ball: 1.0, r_cut: 20.0, runs: 40, seed: 9 };
        let r = coupling_study(&exp(), &o).unwrap();
        assert!(r.monotone, "{:?}", r.rows);
    }
}
