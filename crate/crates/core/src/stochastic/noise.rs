use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral::{ModeBasis, SpectralField};

/// Counter-based random stream keyed by `(seed, index)`.
///
/// Every work item owns its stream, so results do not depend on how items
/// are scheduled across threads.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Position in the underlying keystream, in 32-bit words.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Per-mode noise amplitudes `a_k ≥ 0`, each complex mode forced by two
/// independent real Brownian channels of equal amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    amplitudes: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(invalid("noise amplitudes must be finite and nonnegative"));
        }
        Ok(Self { amplitudes })
    }

    pub fn zero(basis: &ModeBasis) -> Self {
        Self { amplitudes: vec![0.0; basis.len()] }
    }

    /// `a_k = scale·(1 + λ_k)^{-(s+1)/2}`.
    pub fn power_law(basis: &ModeBasis, s: f64, scale: f64) -> Self {
        Self {
            amplitudes: basis.eigenvalues().map(|l| scale * (1.0 + l).powf(-(s + 1.0) / 2.0)).collect(),
        }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|&a| a == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * factor).collect() }
    }

    pub fn check_basis(&self, basis: &ModeBasis) -> Result<()> {
        if self.amplitudes.len() != basis.len() {
            return Err(invalid(format!(
                "noise has {} amplitudes, basis has {} modes",
                self.amplitudes.len(),
                basis.len()
            )));
        }
        Ok(())
    }

    /// `A_{σ,N} = Σ over real channels a_k² λ_k^σ = 2 Σ_k a_k² λ_k^σ`, with `0^0 = 1`.
    pub fn a_sigma(&self, basis: &ModeBasis, sigma: f64) -> f64 {
        self.a_sigma_upto(basis, sigma, basis.len())
    }

    /// `A_{σ,n}` over the first `len` modes.
    pub fn a_sigma_upto(&self, basis: &ModeBasis, sigma: f64, len: usize) -> f64 {
        2.0 * self.amplitudes[..len]
            .iter()
            .zip(basis.eigenvalues())
            .map(|(a, l)| a * a * lambda_pow(l, sigma))
            .sum::<f64>()
    }
}

fn lambda_pow(l: f64, sigma: f64) -> f64 {
    if sigma == 0.0 { 1.0 } else { l.powf(sigma) }
}

/// Full lattice sum `A_σ` for the spectrum `a_k² = scale²(1+|k|²)^{-(s+1)}`:
/// exact sum over `|k| ≤ R` plus the radial integral of the tail.
pub fn power_law_full_sum(dim: usize, s: f64, scale: f64, sigma: f64) -> Result<f64> {
    let q = dim as f64 + 2.0 * sigma - 2.0 * (s + 1.0);
    if q >= 0.0 {
        return Err(invalid("lattice sum diverges for this sigma"));
    }
    let r: i32 = match dim {
        1 => 4096,
        2 => 256,
        _ => 48,
    };
    let r2 = (r * r) as f64;
    let term = |n2: f64| (1.0 + n2).powf(-(s + 1.0)) * lambda_pow(n2, sigma);
    let mut sum = 0.0;
    let range = -r..=r;
    match dim {
        1 => {
            for a in range {
                sum += term((a * a) as f64);
            }
        }
        2 => {
            for a in range.clone() {
                for b in range.clone() {
                    let n2 = (a * a + b * b) as f64;
                    if n2 <= r2 {
                        sum += term(n2);
                    }
                }
            }
        }
        _ => {
            for a in range.clone() {
                for b in range.clone() {
                    for c in range.clone() {
                        let n2 = (a * a + b * b + c * c) as f64;
                        if n2 <= r2 {
                            sum += term(n2);
                        }
                    }
                }
            }
        }
    }
    let surface = match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    let tail = surface * (r as f64).powf(q) / (-q);
    Ok(2.0 * scale * scale * (sum + tail))
}

/// Brownian increment over `dt`: mode `k` receives `a_k √dt (ξ₁ + iξ₂)`.
pub fn noise_increment(basis: &Arc<ModeBasis>, spec: &NoiseSpec, dt: f64, rng: &mut RngStream) -> Result<SpectralField> {
    spec.check_basis(basis)?;
    let sq = dt.sqrt();
    let coeffs = spec
        .amplitudes
        .iter()
        .map(|&a| {
            let re = rng.normal();
            let im = rng.normal();
            Complex64::new(re, im) * (a * sq)
        })
        .collect();
    SpectralField::from_coeffs(basis.clone(), coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<f64> = (0..10).map(|_| a.normal()).collect();
        let xb: Vec<f64> = (0..10).map(|_| b.normal()).collect();
        let xc: Vec<f64> = (0..10).map(|_| c.normal()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert!(a.counter() > 0);
    }

    #[test]
    fn zero_spectrum_gives_zero_increment() {
        let b = Arc::new(ModeBasis::new(2, 10, true).unwrap());
        let mut rng = RngStream::new(1, 0);
        let inc = noise_increment(&b, &NoiseSpec::zero(&b), 0.1, &mut rng).unwrap();
        assert_eq!(inc.norm(), 0.0);
    }

    #[test]
    fn increment_variance_matches() {
        let b = Arc::new(ModeBasis::new(1, 4, true).unwrap());
        let spec = NoiseSpec::power_law(&b, 2.0, 1.0);
        let dt = 0.01;
        let mut rng = RngStream::new(11, 0);
        let draws = 100_000;
        let mut per_mode = vec![Vec::with_capacity(draws); b.len()];
        let mut total = Vec::with_capacity(draws);
        for _ in 0..draws {
            let inc = noise_increment(&b, &spec, dt, &mut rng).unwrap();
            for (m, c) in inc.coeffs().iter().enumerate() {
                per_mode[m].push(c.norm_sqr());
            }
            total.push(inc.norm_sq());
        }
        for (m, x) in per_mode.iter().enumerate() {
            let expect = 2.0 * spec.amplitudes()[m].powi(2) * dt;
            let sigma = (variance(x) / draws as f64).sqrt();
            assert!((mean(x) - expect).abs() < 3.0 * sigma, "mode {m}");
        }
        let expect = spec.a_sigma(&b, 0.0) * dt;
        assert!((mean(&total) - expect).abs() < 3.0 * (variance(&total) / draws as f64).sqrt());
    }

    #[test]
    fn partial_sums_increase_to_the_full_sum() {
        for (d, sigma) in [(1, 0.0), (1, 1.0), (2, 1.0), (3, 0.0), (3, 1.0)] {
            let b = ModeBasis::new(d, 400, true).unwrap();
            let spec = NoiseSpec::power_law(&b, 2.0, 1.0);
            let full = power_law_full_sum(d, 2.0, 1.0, sigma).unwrap();
            let mut prev = 0.0;
            for n in [1, 5, 20, 80, 400] {
                let a = spec.a_sigma_upto(&b, sigma, b.truncation_len(n));
                assert!(a >= prev && a <= full, "d={d} sigma={sigma} n={n}");
                prev = a;
            }
        }
    }

    #[test]
    fn doubling_amplitudes_quadruples_a_sigma() {
        let b = ModeBasis::new(1, 8, true).unwrap();
        let spec = NoiseSpec::power_law(&b, 2.0, 1.0);
        let a0 = spec.a_sigma(&b, 0.0);
        assert!((spec.scaled(2.0).a_sigma(&b, 0.0) - 4.0 * a0).abs() < 1e-14);
    }
}
