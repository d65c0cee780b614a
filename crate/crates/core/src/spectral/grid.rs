use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::basis::ModeBasis;
use super::field::SpectralField;
use crate::error::{Error, Result};

pub const DEFAULT_OVERSAMPLING: f64 = 2.0;

/// Physical collocation grid of `M^d` points with FFT transforms to and from
/// the spectral coefficients of a basis.
///
/// Holds scratch buffers, so every worker owns its own instance.
pub struct Collocation {
    basis: Arc<ModeBasis>,
    points: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    slots: Vec<usize>,
    grid: Vec<Complex64>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
    to_physical: f64,
    to_spectral: f64,
    cell: f64,
}

impl Clone for Collocation {
    fn clone(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            points: self.points,
            fwd: self.fwd.clone(),
            inv: self.inv.clone(),
            slots: self.slots.clone(),
            grid: self.grid.clone(),
            line: self.line.clone(),
            scratch: self.scratch.clone(),
            to_physical: self.to_physical,
            to_spectral: self.to_spectral,
            cell: self.cell,
        }
    }
}

impl std::fmt::Debug for Collocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Collocation")
            .field("dim", &self.basis.dim())
            .field("points", &self.points)
            .finish()
    }
}

/// Points per axis needed to resolve `oversampling` times the mode span.
pub fn required_points(basis: &ModeBasis, oversampling: f64) -> usize {
    let span = 2 * basis.max_frequency() + 1;
    (oversampling * span as f64).ceil() as usize
}

impl Collocation {
    /// Grid with the smallest power-of-two size meeting the oversampling.
    pub fn new(basis: Arc<ModeBasis>, oversampling: f64) -> Result<Self> {
        if !(oversampling >= 1.0) {
            return Err(crate::error::invalid("oversampling factor must be >= 1"));
        }
        let points = required_points(&basis, oversampling).next_power_of_two();
        Self::with_points(basis, points, oversampling)
    }

    pub fn with_points(basis: Arc<ModeBasis>, points: usize, oversampling: f64) -> Result<Self> {
        let required = required_points(&basis, oversampling);
        if points < required {
            return Err(Error::GridTooSmall { points, required });
        }
        let dim = basis.dim();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(points);
        let inv = planner.plan_fft_inverse(points);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());

        let m = points as i64;
        let slots = basis
            .wavevectors()
            .iter()
            .map(|k| {
                k[..dim]
                    .iter()
                    .fold(0i64, |acc, &c| acc * m + (c as i64).rem_euclid(m)) as usize
            })
            .collect();
        let total = points.pow(dim as u32);
        let two_pi_d = (2.0 * PI).powi(dim as i32);
        Ok(Self {
            basis,
            points,
            fwd,
            inv,
            slots,
            grid: vec![Complex64::new(0.0, 0.0); total],
            line: vec![Complex64::new(0.0, 0.0); points],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            to_physical: two_pi_d.sqrt().recip(),
            to_spectral: two_pi_d.sqrt() / total as f64,
            cell: two_pi_d / total as f64,
        })
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Volume element `(2π/M)^d` of the trapezoidal rule.
    pub fn cell_volume(&self) -> f64 {
        self.cell
    }

    /// Physical values after the last [`Self::load`] or transform.
    pub fn grid(&self) -> &[Complex64] {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut [Complex64] {
        &mut self.grid
    }

    /// Evaluate the coefficients on the grid, `u(x_j) = (2π)^{-d/2} Σ u_k e^{ik·x_j}`.
    pub fn load(&mut self, coeffs: &[Complex64]) {
        self.grid.fill(Complex64::new(0.0, 0.0));
        for (&slot, &c) in self.slots.iter().zip(coeffs) {
            self.grid[slot] = c * self.to_physical;
        }
        self.transform(false);
    }

    /// Project the grid values onto the basis coefficients (destroys the grid).
    pub fn store(&mut self, out: &mut [Complex64]) {
        self.transform(true);
        for (o, &slot) in out.iter_mut().zip(&self.slots) {
            *o = self.grid[slot] * self.to_spectral;
        }
    }

    fn transform(&mut self, forward: bool) {
        let fft = if forward { &self.fwd } else { &self.inv };
        let m = self.points;
        let dim = self.basis.dim();
        // contiguous last axis: rustfft processes consecutive blocks in one call
        fft.process_with_scratch(&mut self.grid, &mut self.scratch);
        for axis in 0..dim - 1 {
            let stride = m.pow((dim - 1 - axis) as u32);
            let outer = self.grid.len() / (stride * m);
            for o in 0..outer {
                let base = o * stride * m;
                for i in 0..stride {
                    for j in 0..m {
                        self.line[j] = self.grid[base + j * stride + i];
                    }
                    fft.process_with_scratch(&mut self.line, &mut self.scratch);
                    for j in 0..m {
                        self.grid[base + j * stride + i] = self.line[j];
                    }
                }
            }
        }
    }

    /// `P_N(|u|^{p-1}u)` on raw coefficient slices.
    pub fn nonlinearity_into(&mut self, coeffs: &[Complex64], p: f64, out: &mut [Complex64]) {
        self.load(coeffs);
        apply_power(&mut self.grid, p);
        self.store(out);
    }

    pub fn nonlinearity(&mut self, u: &SpectralField, p: f64) -> SpectralField {
        let mut out = SpectralField::zeros(u.basis().clone());
        self.nonlinearity_into(u.coeffs(), p, out.coeffs_mut());
        out
    }

    /// `∫|u|^q dx` by the trapezoidal rule on the grid.
    pub fn lp_integral(&mut self, u: &SpectralField, q: f64) -> f64 {
        self.load(u.coeffs());
        self.cell * self.grid.iter().map(|v| v.norm_sqr().powf(q / 2.0)).sum::<f64>()
    }

    /// `‖u‖_{L^q}` for `q ∈ [2, ∞]`.
    pub fn lp_norm(&mut self, u: &SpectralField, q: f64) -> Result<f64> {
        if !(q >= 2.0) {
            return Err(crate::error::invalid("L^q norm requires q >= 2"));
        }
        if q.is_infinite() {
            return Ok(self.sup_norm(u));
        }
        Ok(self.lp_integral(u, q).powf(1.0 / q))
    }

    /// Maximum modulus over the grid points.
    pub fn sup_norm(&mut self, u: &SpectralField) -> f64 {
        self.load(u.coeffs());
        self.grid.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max).sqrt()
    }

    /// `E(u) = ½‖u‖² + ½‖∇u‖² + ‖u‖_{L^{p+1}}^{p+1}/(p+1)`.
    pub fn energy(&mut self, u: &SpectralField, p: f64) -> f64 {
        u.quadratic_energy() + self.lp_integral(u, p + 1.0) / (p + 1.0)
    }
}

/// In place `v ↦ |v|^{p-1} v`.
fn apply_power(values: &mut [Complex64], p: f64) {
    let half = (p - 1.0) / 2.0;
    if half.fract() == 0.0 && half.abs() < 64.0 {
        let n = half as i32;
        values.iter_mut().for_each(|v| *v *= v.norm_sqr().powi(n));
    } else {
        values.iter_mut().for_each(|v| {
            let r2 = v.norm_sqr();
            if r2 > 0.0 {
                *v *= r2.powf(half);
            }
        });
    }
}
