use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{Collocation, SpectralField};
use crate::stochastic::NoiseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conserved {
    Mass,
    Energy,
}

/// Which derivative of `E` enters `Q_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyForm {
    /// `E'(u) = -Δu + u + |u|^{p-1}u`
    #[default]
    Gradient,
    /// Drops the `+u` term.
    WithoutMass,
}

/// `Q_F(u) = Σ_m a_m² (F'(u; e_m)² + F'(u; i e_m)²)`.
///
/// For a mode coefficient `g_m` of `F'(u)` the two real channels contribute
/// `(Re g_m)² + (Im g_m)²`.
pub fn quadratic_variation(
    u: &SpectralField,
    which: Conserved,
    noise: &NoiseSpec,
    grid: &mut Collocation,
    p: f64,
    form: EnergyForm,
) -> Result<f64> {
    noise.check_basis(u.basis())?;
    let a = noise.amplitudes();
    match which {
        Conserved::Mass => Ok(u.coeffs().iter().zip(a).map(|(c, a)| a * a * c.norm_sqr()).sum()),
        Conserved::Energy => {
            let mut g = vec![Complex64::new(0.0, 0.0); u.coeffs().len()];
            grid.nonlinearity_into(u.coeffs(), p, &mut g);
            let shift = match form {
                EnergyForm::Gradient => 1.0,
                EnergyForm::WithoutMass => 0.0,
            };
            Ok(g.iter()
                .zip(u.coeffs())
                .zip(u.basis().eigenvalues())
                .zip(a)
                .map(|(((n, c), l), a)| a * a * (n + c * (l + shift)).norm_sqr())
                .sum())
        }
    }
}
