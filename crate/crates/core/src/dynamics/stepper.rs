use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{Collocation, ModeBasis, Scheme};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the nonlinear part `v' = -i P_N(|v|^{p-1}v)` is advanced inside a
/// Strang step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearSubstep {
    /// Implicit midpoint rule, seeded by the pointwise rotation. Conserves
    /// `‖v‖` up to the fixed-point tolerance.
    #[default]
    Midpoint,
    /// Exact pointwise phase rotation on the grid followed by projection.
    Rotation,
}

/// Per-mode factors `exp(h·μ_k)` with `μ_k = -decay_k - i(shift + λ_k)`.
///
/// Shared by the deterministic and stochastic steppers so that switching
/// damping off reproduces the deterministic factors bit for bit.
pub fn linear_factors(basis: &ModeBasis, shift: f64, decay: &[f64], h: f64, out: &mut Vec<Complex64>) {
    out.clear();
    out.extend(
        basis
            .eigenvalues()
            .zip(decay)
            .map(|(l, &g)| Complex64::new(-g * h, -(shift + l) * h).exp()),
    );
}

pub(crate) fn apply_factors(u: &mut [Complex64], f: &[Complex64]) {
    u.iter_mut().zip(f).for_each(|(a, b)| *a *= b);
}

fn norm(u: &[Complex64]) -> f64 {
    u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Why a step could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    NotFinite,
    Diverged(f64),
    NoConvergence,
}

impl std::fmt::Display for StepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepFailure::NotFinite => write!(f, "non-finite coefficients"),
            StepFailure::Diverged(n) => write!(f, "norm {n:.3e} above the blow-up threshold"),
            StepFailure::NoConvergence => write!(f, "nonlinear substep did not converge"),
        }
    }
}

pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// Advances the truncated equation `∂_t v = i[(Δ - shift)v - P_N(|v|^{p-1}v)]`
/// with optional linear damping folded into the exponential factors.
#[derive(Debug, Clone)]
pub struct Stepper {
    basis: Arc<ModeBasis>,
    grid: Collocation,
    p: f64,
    shift: f64,
    scheme: Scheme,
    substep: NonlinearSubstep,
    tol: f64,
    max_iter: usize,
    decay: Vec<f64>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    cached_h: f64,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
    k: [Vec<Complex64>; 4],
    iterations: usize,
}

impl Stepper {
    pub fn new(basis: Arc<ModeBasis>, p: f64, shift: f64, scheme: Scheme, oversampling: f64) -> Result<Self> {
        let grid = Collocation::new(basis.clone(), oversampling)?;
        let n = basis.len();
        Ok(Self {
            basis,
            grid,
            p,
            shift,
            scheme,
            substep: NonlinearSubstep::Midpoint,
            tol: 1e-13,
            max_iter: 40,
            decay: vec![0.0; n],
            half: Vec::new(),
            full: Vec::new(),
            cached_h: f64::NAN,
            a: vec![ZERO; n],
            b: vec![ZERO; n],
            c: vec![ZERO; n],
            k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            iterations: 0,
        })
    }

    pub fn with_substep(mut self, substep: NonlinearSubstep) -> Self {
        self.substep = substep;
        self
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Fixed-point sweeps spent in nonlinear substeps so far.
    pub fn fixed_point_iterations(&self) -> usize {
        self.iterations
    }

    pub fn grid_mut(&mut self) -> &mut Collocation {
        &mut self.grid
    }

    /// Replace the per-mode damping rates (zero by default).
    pub fn set_decay(&mut self, decay: &[f64]) {
        self.decay.copy_from_slice(decay);
        self.cached_h = f64::NAN;
    }

    fn prepare(&mut self, h: f64) {
        if self.cached_h != h {
            linear_factors(&self.basis, self.shift, &self.decay, 0.5 * h, &mut self.half);
            linear_factors(&self.basis, self.shift, &self.decay, h, &mut self.full);
            self.cached_h = h;
        }
    }

    /// One step of size `h` in place.
    pub fn step(&mut self, u: &mut [Complex64], h: f64) -> std::result::Result<(), StepFailure> {
        self.prepare(h);
        match self.scheme {
            Scheme::StrangSplitting => {
                apply_factors(u, &self.half);
                self.nonlinear_substep(u, h)?;
                apply_factors(u, &self.half);
            }
            Scheme::ExponentialRk => self.lawson_rk4(u, h),
        }
        check(u)
    }

    /// `F(v) = -i P_N(|v|^{p-1}v)` into `out`.
    fn rhs(grid: &mut Collocation, p: f64, v: &[Complex64], out: &mut [Complex64]) {
        grid.nonlinearity_into(v, p, out);
        out.iter_mut().for_each(|c| *c = Complex64::new(c.im, -c.re));
    }

    /// Advance `v' = -i P_N(|v|^{p-1}v)` over `h`.
    pub fn nonlinear_substep(&mut self, u: &mut [Complex64], h: f64) -> std::result::Result<(), StepFailure> {
        // seed: pointwise rotation, exact for the unprojected equation
        self.grid.load(u);
        let half = (self.p - 1.0) / 2.0;
        self.grid.grid_mut().iter_mut().for_each(|v| {
            let phase = -h * v.norm_sqr().powf(half);
            *v *= Complex64::from_polar(1.0, phase);
        });
        self.grid.store(&mut self.a);
        if self.substep == NonlinearSubstep::Rotation {
            u.copy_from_slice(&self.a);
            return Ok(());
        }
        // midpoint m solves m = u - (ih/2) P_N(|m|^{p-1}m); the new state is 2m - u
        let mut m = std::mem::take(&mut self.b);
        m.iter_mut()
            .zip(u.iter().zip(&self.a))
            .for_each(|(m, (x, y))| *m = 0.5 * (x + y));
        let scale = norm(u).max(f64::MIN_POSITIVE);
        let mut converged = false;
        for it in 0..self.max_iter {
            self.iterations += 1;
            Self::rhs(&mut self.grid, self.p, &m, &mut self.c);
            let mut diff = 0.0;
            for ((mi, &ui), &fi) in m.iter_mut().zip(u.iter()).zip(&self.c) {
                let next = ui + 0.5 * h * fi;
                diff += (next - *mi).norm_sqr();
                *mi = next;
            }
            if !diff.is_finite() {
                break;
            }
            if diff.sqrt() <= self.tol * scale {
                converged = true;
                break;
            }
            if it > 4 && diff.sqrt() > 10.0 * scale {
                break;
            }
        }
        if converged {
            u.iter_mut().zip(&m).for_each(|(x, mi)| *x = 2.0 * mi - *x);
        }
        self.b = m;
        if converged {
            Ok(())
        } else {
            Err(StepFailure::NoConvergence)
        }
    }

    fn lawson_rk4(&mut self, u: &mut [Complex64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let (e1, e2) = (&self.half, &self.full);
        let tmp = &mut self.a;
        Self::rhs(&mut self.grid, self.p, u, k1);
        for i in 0..u.len() {
            tmp[i] = e1[i] * (u[i] + 0.5 * h * k1[i]);
        }
        Self::rhs(&mut self.grid, self.p, tmp, k2);
        for i in 0..u.len() {
            tmp[i] = e1[i] * u[i] + 0.5 * h * k2[i];
        }
        Self::rhs(&mut self.grid, self.p, tmp, k3);
        for i in 0..u.len() {
            tmp[i] = e2[i] * u[i] + h * e1[i] * k3[i];
        }
        Self::rhs(&mut self.grid, self.p, tmp, k4);
        for i in 0..u.len() {
            u[i] = e2[i] * u[i]
                + h / 6.0 * (e2[i] * k1[i] + 2.0 * e1[i] * (k2[i] + k3[i]) + k4[i]);
        }
    }
}

pub(crate) fn check(u: &[Complex64]) -> std::result::Result<(), StepFailure> {
    let n = norm(u);
    if !n.is_finite() {
        Err(StepFailure::NotFinite)
    } else if n > BLOWUP_THRESHOLD {
        Err(StepFailure::Diverged(n))
    } else {
        Ok(())
    }
}
