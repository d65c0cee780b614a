use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::basis::ModeBasis;
use crate::error::{invalid, Result};

/// Time stepping scheme for the deterministic and stochastic flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    StrangSplitting,
    ExponentialRk,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::StrangSplitting => "strang-splitting",
            Scheme::ExponentialRk => "exponential-rk",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strang-splitting" | "strang" => Ok(Scheme::StrangSplitting),
            "exponential-rk" | "lawson" => Ok(Scheme::ExponentialRk),
            other => Err(invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub cutoff: usize,
    pub full_shell: bool,
    pub p: f64,
    pub s: f64,
    /// `s- = s - eps`
    pub eps: f64,
    pub alpha: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub oversampling: f64,
    pub scheme: Scheme,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            cutoff: 8,
            full_shell: true,
            p: 7.0,
            s: 2.0,
            eps: 0.25,
            alpha: 0.5,
            dt: 1e-3,
            horizon: 1.0,
            seed: 0,
            oversampling: super::grid::DEFAULT_OVERSAMPLING,
            scheme: Scheme::StrangSplitting,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(crate::Error::UnsupportedDimension(self.dim));
        }
        if self.cutoff < 1 {
            return Err(invalid("N must be at least 1"));
        }
        if !(self.p >= 3.0) {
            return Err(invalid(format!("p = {} must be >= 3", self.p)));
        }
        if !(self.s >= 2.0) {
            return Err(invalid(format!("s = {} must be >= 2", self.s)));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(invalid(format!("eps = {} must lie in (0, 1/2)", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha = {} must lie in (0, 1]", self.alpha)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt must be positive"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(invalid("horizon must be nonnegative"));
        }
        if !(self.oversampling >= 1.0) {
            return Err(invalid("oversampling must be >= 1"));
        }
        Ok(())
    }

    pub fn s_minus(&self) -> f64 {
        self.s - self.eps
    }

    pub fn basis(&self) -> Result<Arc<ModeBasis>> {
        Ok(Arc::new(ModeBasis::new(self.dim, self.cutoff, self.full_shell)?))
    }

    /// Number of steps of size `dt` covering `horizon`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}
