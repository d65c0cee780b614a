use serde::{Deserialize, Serialize};

use super::growth::GrowthPair;
use crate::spectral::{Collocation, SpectralField};

/// Argument of ρ in the damping weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoArgument {
    /// `e^{ρ(‖u‖_{s-})}`
    #[default]
    Norm,
    /// `e^{ρ(‖u‖²_{s-})}`
    NormSquared,
}

/// Damping and dissipation functionals of the weighted viscosity
/// `(1-Δ)^{s-1} + e^{ρ(‖u‖_{s-})}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub s: f64,
    pub eps: f64,
    pub growth: GrowthPair,
    pub argument: RhoArgument,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub value: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassDissipation {
    pub value: f64,
    pub weight: Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDissipation {
    pub value: f64,
    /// `‖u‖_s²`
    pub sobolev: f64,
    /// `(P_N(|u|^{p-1}u), (1-Δ)^{s-1}u)`
    pub cross: f64,
    /// `‖u‖_1² + ‖u‖_{L^{p+1}}^{p+1}`
    pub weighted: f64,
    pub weight: Weight,
    /// `‖u‖_{s-}^{p+1}`, the scale of the cross-term bound.
    pub low_norm_power: f64,
}

impl EnergyDissipation {
    /// `‖u‖_s² + w·(‖u‖_1² + ‖u‖_{L^{p+1}}^{p+1}) - C_s ‖u‖_{s-}^{p+1}`.
    pub fn lower_bound(&self, c_s: f64) -> f64 {
        self.sobolev + self.weight.value * self.weighted - c_s * self.low_norm_power
    }
}

impl Damping {
    pub fn s_minus(&self) -> f64 {
        self.s - self.eps
    }

    pub fn weight(&self, u: &SpectralField) -> Weight {
        let n = u.sobolev_norm(self.s_minus());
        let x = match self.argument {
            RhoArgument::Norm => n,
            RhoArgument::NormSquared => n * n,
        };
        let (value, saturated) = self.growth.damping_weight(x);
        Weight { value, saturated }
    }

    /// `𝓜(u) = ‖u‖²_{s-1} + w‖u‖²`.
    pub fn mass(&self, u: &SpectralField) -> MassDissipation {
        let weight = self.weight(u);
        MassDissipation {
            value: u.sobolev_norm_sq(self.s - 1.0) + weight.value * u.norm_sq(),
            weight,
        }
    }

    /// `𝓔(u) = ‖u‖_s² + (N(u), (1-Δ)^{s-1}u) + w(‖u‖_1² + ‖u‖_{L^{p+1}}^{p+1})`.
    pub fn energy(&self, u: &SpectralField, grid: &mut Collocation, p: f64) -> EnergyDissipation {
        let weight = self.weight(u);
        let n = grid.nonlinearity(u, p);
        let basis = u.basis();
        let cross: f64 = n
            .coeffs()
            .iter()
            .zip(u.coeffs())
            .zip(basis.eigenvalues())
            .map(|((a, b), l)| (1.0 + l).powf(self.s - 1.0) * (a * b.conj()).re)
            .sum();
        let sobolev = u.sobolev_norm_sq(self.s);
        let weighted = u.sobolev_norm_sq(1.0) + grid.lp_integral(u, p + 1.0);
        EnergyDissipation {
            value: sobolev + cross + weight.value * weighted,
            sobolev,
            cross,
            weighted,
            weight,
            low_norm_power: u.sobolev_norm(self.s_minus()).powf(p + 1.0),
        }
    }
}
