use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::trajectory::{Diagnostics, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::spectral::{Collocation, SpectralField};

/// `T = 1/(2^7 R^{p-1} c)`.
pub fn local_existence_time(r: f64, p: f64, c: f64) -> f64 {
    1.0 / (128.0 * r.powf(p - 1.0) * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub p: f64,
    pub s: f64,
    pub horizon: f64,
    /// Time subintervals of the Duhamel quadrature.
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Constant `c ≥ 1` of the local time.
    pub c: f64,
    pub oversampling: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            p: 7.0,
            s: 2.0,
            horizon: 1.0 / 128.0,
            intervals: 512,
            tol: 1e-13,
            max_iter: 50,
            c: 1.0,
            oversampling: crate::spectral::DEFAULT_OVERSAMPLING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardCertificate {
    /// `sup_t ‖w^{k+1} - w^k‖_s` per iterate.
    pub distances: Vec<f64>,
    /// Successive distance ratios, restricted to iterates above round-off.
    pub ratios: Vec<f64>,
    pub initial_norm: f64,
    pub sup_norm: f64,
    /// `sup_t ‖u(t)‖_s ≤ 2‖P_N u_0‖_s`
    pub bound_holds: bool,
    pub iterations: usize,
}

impl PicardCertificate {
    pub fn worst_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Fixed point of the Duhamel map in the interaction picture,
/// `w(t) = u_0 - i ∫_0^t S(-τ) P_N(|S(τ)w|^{p-1} S(τ)w) dτ`,
/// with cumulative trapezoidal quadrature on a uniform time grid.
pub fn picard_local_solve(u0: &SpectralField, opts: &PicardOptions) -> Result<(Trajectory, PicardCertificate)> {
    if !(opts.tol > 0.0) || opts.intervals == 0 {
        return Err(invalid("tol must be positive and intervals nonzero"));
    }
    let basis = u0.basis().clone();
    let r = u0.sobolev_norm(opts.s);
    if r > 0.0 {
        let limit = local_existence_time(r, opts.p, opts.c);
        if opts.horizon > limit * (1.0 + 1e-12) {
            return Err(Error::HorizonTooLarge { requested: opts.horizon, limit });
        }
    }
    let mut grid = Collocation::new(basis.clone(), opts.oversampling)?;
    let n = basis.len();
    let nodes = opts.intervals + 1;
    let h = opts.horizon / opts.intervals as f64;
    let times: Vec<f64> = (0..nodes).map(|j| j as f64 * h).collect();
    let weights: Vec<f64> = basis.eigenvalues().map(|l| (1.0 + l).powf(opts.s)).collect();
    let phases: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| basis.eigenvalues().map(|l| Complex64::from_polar(1.0, -t * (1.0 + l))).collect())
        .collect();

    let mut w: Vec<Vec<Complex64>> = vec![u0.coeffs().to_vec(); nodes];
    let mut next = w.clone();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut f = vec![vec![Complex64::new(0.0, 0.0); n]; nodes];
    let scale = r.max(f64::MIN_POSITIVE);
    let mut distances = Vec::new();
    let mut converged = r == 0.0;
    while !converged && distances.len() < opts.max_iter {
        for j in 0..nodes {
            for i in 0..n {
                v[i] = phases[j][i] * w[j][i];
            }
            grid.nonlinearity_into(&v, opts.p, &mut f[j]);
            for i in 0..n {
                // -i S(-t) N
                let g = f[j][i] * phases[j][i].conj();
                f[j][i] = Complex64::new(g.im, -g.re);
            }
        }
        next[0].copy_from_slice(u0.coeffs());
        let mut dist: f64 = 0.0;
        for j in 1..nodes {
            for i in 0..n {
                next[j][i] = next[j - 1][i] + 0.5 * h * (f[j - 1][i] + f[j][i]);
            }
            let d2: f64 = (0..n).map(|i| weights[i] * (next[j][i] - w[j][i]).norm_sqr()).sum();
            dist = dist.max(d2.sqrt());
        }
        std::mem::swap(&mut w, &mut next);
        distances.push(dist);
        if !dist.is_finite() || (distances.len() > 3 && dist > 2.0 * distances[distances.len() - 4]) {
            return Err(Error::NonContraction { distances });
        }
        converged = dist <= opts.tol * scale;
    }
    if !converged {
        return Err(Error::NonContraction { distances });
    }

    let floor = 1e3 * f64::EPSILON * scale;
    let ratios = distances
        .windows(2)
        .filter(|d| d[0] > floor && d[1] > floor)
        .map(|d| d[1] / d[0])
        .collect();

    let mut traj = Trajectory::new(vec![opts.s]);
    let mut sup_norm: f64 = 0.0;
    for j in 0..nodes {
        let c = (0..n).map(|i| phases[j][i] * w[j][i]).collect();
        let u = SpectralField::from_coeffs(basis.clone(), c)?;
        let d = Diagnostics::measure(&mut grid, &u, opts.p, &[opts.s]);
        sup_norm = sup_norm.max(d.norms[0]);
        traj.push(times[j], u, d);
    }
    let cert = PicardCertificate {
        iterations: distances.len(),
        distances,
        ratios,
        initial_norm: r,
        sup_norm,
        bound_holds: sup_norm <= 2.0 * r,
    };
    Ok((traj, cert))
}
