use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dissipation::Damping;
use super::noise::{NoiseSpec, RngStream};
use super::ou::integrated_variance;
use crate::dynamics::{StepFailure, Stepper};
use crate::error::{invalid, Error, Result};
use crate::spectral::{ModeBasis, Scheme, SimConfig, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Taming {
    /// A step is rejected when `‖u_new‖ > factor·max(‖u‖, noise scale)`.
    pub growth_factor: f64,
    pub max_halvings: u32,
}

impl Default for Taming {
    fn default() -> Self {
        Self { growth_factor: 10.0, max_halvings: 8 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdeCounters {
    pub steps: u64,
    /// Steps that needed at least one halving.
    pub tamed: u64,
    /// Steps whose damping weight hit the saturation cap.
    pub saturated: u64,
}

/// Splitting integrator for
/// `du = i[(Δ-1)u - P_N(|u|^{p-1}u)]dt - α[(1-Δ)^{s-1} + e^{ρ(‖u‖_{s-})}]u dt + √α dη_N`.
///
/// Within a step the weight `e^{ρ}` is frozen at its initial value; the
/// damped linear part is exact, the forcing is added with the exact
/// integrated variance of the damped linear flow.
#[derive(Debug, Clone)]
pub struct SdeStepper {
    inner: Stepper,
    noise: NoiseSpec,
    damping: Damping,
    alpha: f64,
    taming: Taming,
    viscosity: Vec<f64>,
    decay: Vec<f64>,
    scratch: Vec<Complex64>,
    draws: Vec<Complex64>,
    halved: bool,
    pub counters: SdeCounters,
}

impl SdeStepper {
    pub fn new(basis: Arc<ModeBasis>, p: f64, alpha: f64, damping: Damping, noise: NoiseSpec, scheme: Scheme, oversampling: f64) -> Result<Self> {
        noise.check_basis(&basis)?;
        if !(alpha >= 0.0) {
            return Err(invalid("alpha must be nonnegative"));
        }
        let n = basis.len();
        let viscosity = basis.eigenvalues().map(|l| (1.0 + l).powf(damping.s - 1.0)).collect();
        Ok(Self {
            inner: Stepper::new(basis, p, 1.0, scheme, oversampling)?,
            noise,
            damping,
            alpha,
            taming: Taming::default(),
            viscosity,
            decay: vec![0.0; n],
            scratch: vec![Complex64::new(0.0, 0.0); n],
            draws: vec![Complex64::new(0.0, 0.0); n],
            halved: false,
            counters: SdeCounters::default(),
        })
    }

    pub fn from_config(cfg: &SimConfig, damping: Damping, noise: NoiseSpec) -> Result<Self> {
        cfg.validate()?;
        Self::new(cfg.basis()?, cfg.p, cfg.alpha, damping, noise, cfg.scheme, cfg.oversampling)
    }

    pub fn with_taming(mut self, taming: Taming) -> Self {
        self.taming = taming;
        self
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        self.inner.basis()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn damping(&self) -> &Damping {
        &self.damping
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn p(&self) -> f64 {
        self.inner.p()
    }

    pub fn collocation(&mut self) -> &mut crate::spectral::Collocation {
        self.inner.grid_mut()
    }

    fn freeze(&mut self, u: &[Complex64]) -> bool {
        let field = SpectralField::from_coeffs(self.inner.basis().clone(), u.to_vec()).unwrap();
        let w = self.damping.weight(&field);
        for (d, v) in self.decay.iter_mut().zip(&self.viscosity) {
            *d = self.alpha * (v + w.value);
        }
        self.inner.set_decay(&self.decay);
        w.saturated
    }

    fn deterministic(&mut self, u: &mut [Complex64], h: f64, bound: f64, depth: u32) -> std::result::Result<(), StepFailure> {
        if depth > 0 {
            self.freeze(u);
        }
        // nested calls find the buffer taken and allocate their own
        let mut backup = std::mem::take(&mut self.scratch);
        backup.clear();
        backup.extend_from_slice(u);
        let ok = self.inner.step(u, h).is_ok()
            && u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() <= bound;
        let r = if ok {
            Ok(())
        } else if depth >= self.taming.max_halvings {
            Err(StepFailure::NoConvergence)
        } else {
            self.halved = true;
            u.copy_from_slice(&backup);
            self.deterministic(u, 0.5 * h, bound, depth + 1)
                .and_then(|_| self.deterministic(u, 0.5 * h, bound, depth + 1))
        };
        self.scratch = backup;
        r
    }

    /// One step of size `dt` in place. Consumes exactly two normals per mode.
    pub fn step(&mut self, u: &mut [Complex64], dt: f64, rng: &mut RngStream) -> std::result::Result<(), StepFailure> {
        self.counters.steps += 1;
        for d in self.draws.iter_mut() {
            let re = rng.normal();
            *d = Complex64::new(re, rng.normal());
        }
        if self.freeze(u) {
            self.counters.saturated += 1;
        }
        // variances use the weight frozen at the step start
        let mut noise_sq = 0.0;
        let noisy = self.alpha > 0.0 && !self.noise.is_zero();
        if noisy {
            for ((d, &a), &g) in self.draws.iter_mut().zip(self.noise.amplitudes()).zip(&self.decay) {
                let var = integrated_variance(self.alpha, a, g, dt);
                noise_sq += 2.0 * var;
                *d *= var.sqrt();
            }
        }
        let n0 = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let bound = self.taming.growth_factor * n0.max(noise_sq.sqrt()).max(f64::MIN_POSITIVE);
        self.halved = false;
        self.deterministic(u, dt, bound, 0)?;
        if self.halved {
            self.counters.tamed += 1;
        }
        if noisy {
            u.iter_mut().zip(&self.draws).for_each(|(c, d)| *c += d);
        }
        crate::dynamics::check(u)
    }
}

/// Integrate from `u0` and hand every `stride`-th state to `observe`.
pub fn run_path<F>(stepper: &mut SdeStepper, u0: &SpectralField, dt: f64, steps: usize, stride: usize, rng: &mut RngStream, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &SpectralField, &mut SdeStepper),
{
    let basis = stepper.basis().clone();
    let mut u = u0.coeffs().to_vec();
    let mut field = u0.clone();
    observe(0, &field, stepper);
    for n in 1..=steps {
        if let Err(e) = stepper.step(&mut u, dt, rng) {
            return Err(Error::BlowUp { time: n as f64 * dt, reason: e.to_string() });
        }
        if stride > 0 && n % stride == 0 {
            field = SpectralField::from_coeffs(basis.clone(), u.clone())?;
            observe(n, &field, stepper);
        }
    }
    Ok(())
}
