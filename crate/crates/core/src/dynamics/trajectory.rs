use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::stepper::Stepper;
use crate::error::{invalid, Error, Result};
use crate::spectral::{Collocation, ModeBasis, Scheme, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mass: f64,
    pub energy: f64,
    /// `‖u‖_σ` for each configured σ.
    pub norms: Vec<f64>,
    pub sup: f64,
}

impl Diagnostics {
    pub fn measure(grid: &mut Collocation, u: &SpectralField, p: f64, sigmas: &[f64]) -> Self {
        Self {
            mass: u.mass(),
            energy: grid.energy(u, p),
            norms: sigmas.iter().map(|&s| u.sobolev_norm(s)).collect(),
            sup: grid.sup_norm(u),
        }
    }
}

/// Sampled path of a flow together with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sigmas: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn new(sigmas: Vec<f64>) -> Self {
        Self { sigmas, times: Vec::new(), snapshots: Vec::new(), diagnostics: Vec::new() }
    }

    pub fn push(&mut self, t: f64, u: SpectralField, d: Diagnostics) {
        debug_assert!(self.times.last().map_or(true, |&last| t > last));
        self.times.push(t);
        self.snapshots.push(u);
        self.diagnostics.push(d);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&SpectralField> {
        self.snapshots.last()
    }

    pub fn basis(&self) -> Option<&Arc<ModeBasis>> {
        self.snapshots.first().map(|u| u.basis())
    }

    /// Largest relative mass deviation from the first sample.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.diagnostics.iter().map(|d| d.mass))
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.diagnostics.iter().map(|d| d.energy))
    }

    /// CSV with columns `t, M, E, norm_<σ>..., sup`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,M,E");
        for s in &self.sigmas {
            out.push_str(&format!(",norm_{s}"));
        }
        out.push_str(",sup\n");
        for (t, d) in self.times.iter().zip(&self.diagnostics) {
            out.push_str(&format!("{t:.17e},{:.17e},{:.17e}", d.mass, d.energy));
            for n in &d.norms {
                out.push_str(&format!(",{n:.17e}"));
            }
            out.push_str(&format!(",{:.17e}\n", d.sup));
        }
        out
    }
}

fn relative_drift(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = values.next() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    values.map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub p: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Record every `stride` steps (the final time is always recorded).
    pub stride: usize,
    pub sigmas: Vec<f64>,
    pub oversampling: f64,
    /// 1 for `∂_t v = i[(Δ-1)v - ...]`, 0 for the ungauged form.
    pub shift: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            p: 7.0,
            dt: 1e-3,
            horizon: 1.0,
            scheme: Scheme::StrangSplitting,
            stride: 1,
            sigmas: vec![1.0, 2.0],
            oversampling: crate::spectral::DEFAULT_OVERSAMPLING,
            shift: 1.0,
        }
    }
}

impl IntegratorOptions {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Integrate the truncated flow on the basis of `u0`.
pub fn integrate_deterministic(u0: &SpectralField, opts: &IntegratorOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || opts.stride == 0 {
        return Err(invalid("dt must be positive and stride nonzero"));
    }
    let mut stepper = Stepper::new(u0.basis().clone(), opts.p, opts.shift, opts.scheme, opts.oversampling)?;
    let mut traj = Trajectory::new(opts.sigmas.clone());
    let mut u: Vec<Complex64> = u0.coeffs().to_vec();
    let record = |traj: &mut Trajectory, stepper: &mut Stepper, t: f64, u: &[Complex64]| {
        let f = SpectralField::from_coeffs(u0.basis().clone(), u.to_vec()).unwrap();
        let d = Diagnostics::measure(stepper.grid_mut(), &f, opts.p, &opts.sigmas);
        traj.push(t, f, d);
    };
    record(&mut traj, &mut stepper, 0.0, &u);
    let steps = opts.steps();
    for n in 1..=steps {
        let t = n as f64 * opts.dt;
        if let Err(e) = stepper.step(&mut u, opts.dt) {
            return Err(Error::BlowUp { time: t, reason: e.to_string() });
        }
        if n % opts.stride == 0 || n == steps {
            record(&mut traj, &mut stepper, t, &u);
        }
    }
    Ok(traj)
}

/// Coefficients of the plane wave `c·exp(i(k·x - ωt))`, `ω = shift + |k|² + |c|^{p-1}`.
pub fn exact_plane_wave(basis: &Arc<ModeBasis>, k: [i32; 3], c: Complex64, p: f64, shift: f64, t: f64) -> Result<SpectralField> {
    let idx = basis
        .index_of(&k)
        .ok_or_else(|| invalid(format!("wavevector {k:?} not in basis")))?;
    let omega = shift + basis.eigenvalue(idx) + c.norm().powf(p - 1.0);
    let vol = (2.0 * std::f64::consts::PI).powi(basis.dim() as i32).sqrt();
    Ok(SpectralField::single_mode(
        basis.clone(),
        idx,
        c * vol * Complex64::from_polar(1.0, -omega * t),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gauge_transform, GaugeDirection};

    fn smooth(b: &Arc<ModeBasis>, amp: f64) -> SpectralField {
        let c = (0..b.len())
            .map(|i| {
                let t = i as f64;
                Complex64::new((2.1 * t).cos(), (1.3 * t + 0.4).sin()) * amp / (1.0 + b.eigenvalue(i)).powi(2)
            })
            .collect();
        SpectralField::from_coeffs(b.clone(), c).unwrap()
    }

    #[test]
    fn zero_initial_data_gives_zero_trajectory() {
        let b = Arc::new(ModeBasis::new(1, 8, true).unwrap());
        let opts = IntegratorOptions { horizon: 0.1, dt: 1e-2, ..Default::default() };
        let traj = integrate_deterministic(&SpectralField::zeros(b), &opts).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.snapshots.iter().all(|u| u.norm() == 0.0));
        assert_eq!(traj.mass_drift(), 0.0);
    }

    #[test]
    fn plane_wave_short_run_both_schemes() {
        let b = Arc::new(ModeBasis::new(1, 8, true).unwrap());
        let c = Complex64::new(0.5, 0.0);
        let u0 = exact_plane_wave(&b, [2, 0, 0], c, 7.0, 1.0, 0.0).unwrap();
        for scheme in [Scheme::StrangSplitting, Scheme::ExponentialRk] {
            let opts = IntegratorOptions { horizon: 0.1, dt: 1e-3, scheme, stride: 100, ..Default::default() };
            let traj = integrate_deterministic(&u0, &opts).unwrap();
            let exact = exact_plane_wave(&b, [2, 0, 0], c, 7.0, 1.0, 0.1).unwrap();
            let err = traj.last().unwrap().sub(&exact).unwrap().norm() / exact.norm();
            assert!(err < 1e-9, "{scheme:?}: {err}");
        }
    }

    #[test]
    fn gauged_and_ungauged_forms_agree() {
        let b = Arc::new(ModeBasis::new(1, 12, true).unwrap());
        let u0 = smooth(&b, 1.0);
        let base = IntegratorOptions { p: 5.0, horizon: 0.5, dt: 1e-3, stride: 50, ..Default::default() };
        let v = integrate_deterministic(&u0, &base).unwrap();
        let u = integrate_deterministic(&u0, &IntegratorOptions { shift: 0.0, ..base }).unwrap();
        for ((t, vs), us) in v.times.iter().zip(&v.snapshots).zip(&u.snapshots) {
            let mapped = gauge_transform(us, *t, GaugeDirection::Forward);
            assert!(mapped.sub(vs).unwrap().norm() < 1e-10 * u0.norm(), "t={t}");
        }
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let b = Arc::new(ModeBasis::new(1, 4, true).unwrap());
        let opts = IntegratorOptions { horizon: 0.02, dt: 1e-2, ..Default::default() };
        let traj = integrate_deterministic(&smooth(&b, 0.3), &opts).unwrap();
        let csv = traj.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,M,E,norm_1,norm_2,sup\n"));
    }
}
