use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::basis::ModeBasis;
use crate::error::{Error, Result};

/// Complex Fourier coefficients of `u` in the basis `(2π)^{-d/2} e^{ik·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    basis: Arc<ModeBasis>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(basis: Arc<ModeBasis>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); basis.len()];
        Self { basis, coeffs }
    }

    pub fn from_coeffs(basis: Arc<ModeBasis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Format(format!(
                "{} coefficients for a basis of {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    /// Field whose coefficient on mode `index` is `value`, zero elsewhere.
    pub fn single_mode(basis: Arc<ModeBasis>, index: usize, value: Complex64) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[index] = value;
        f
    }

    /// Coefficient on `k = 0` of the physical constant function `c`.
    pub fn constant(basis: Arc<ModeBasis>, c: Complex64) -> Self {
        let scale = (2.0 * PI).powf(basis.dim() as f64 / 2.0);
        Self::single_mode(basis, 0, c * scale)
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn same_basis(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis
    }

    fn check(&self, other: &SpectralField) -> Result<()> {
        if self.same_basis(other) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// `P_n u`: zero every coefficient past the truncation of index `n`.
    pub fn project(&self, n: usize) -> SpectralField {
        let keep = self.basis.truncation_len(n);
        let mut out = self.clone();
        out.coeffs[keep..].fill(Complex64::new(0.0, 0.0));
        out
    }

    /// Squared `H^σ` norm, `Σ (1+λ_m)^σ |u_m|^2`.
    pub fn sobolev_norm_sq(&self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return self.norm_sq();
        }
        self.coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, l)| (1.0 + l).powf(sigma) * c.norm_sqr())
            .sum()
    }

    pub fn sobolev_norm(&self, sigma: f64) -> f64 {
        self.sobolev_norm_sq(sigma).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `L^2` norm (Parseval).
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Real inner product `Re ∫ u v̄`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }

    /// `M(u) = ½‖u‖²`.
    pub fn mass(&self) -> f64 {
        0.5 * self.norm_sq()
    }

    /// Quadratic part of the energy, `½‖u‖² + ½‖∇u‖²`.
    pub fn quadratic_energy(&self) -> f64 {
        0.5 * self.sobolev_norm_sq(1.0)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.coeffs.iter_mut().for_each(|c| *c *= factor);
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &SpectralField) -> Result<()> {
        self.check(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Embed into a larger basis sharing this basis as a prefix, padding with zeros.
    pub fn embed(&self, target: Arc<ModeBasis>) -> Result<SpectralField> {
        if !target.extends(&self.basis) {
            return Err(Error::BasisMismatch);
        }
        let mut out = SpectralField::zeros(target);
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(out)
    }

    /// Restrict to a smaller basis that is a prefix of this one.
    pub fn restrict_to(&self, target: Arc<ModeBasis>) -> Result<SpectralField> {
        if !self.basis.extends(&target) {
            return Err(Error::BasisMismatch);
        }
        let n = target.len();
        Ok(SpectralField {
            coeffs: self.coeffs[..n].to_vec(),
            basis: target,
        })
    }

    /// Coefficient-wise phase `e^{-it(1+λ_m)}`, the group `S(t)`.
    pub fn propagate(&self, t: f64) -> SpectralField {
        self.propagate_shifted(t, 1.0)
    }

    /// `e^{-it(shift+λ_m)}`; `shift = 0` is the ungauged equation.
    pub fn propagate_shifted(&self, t: f64, shift: f64) -> SpectralField {
        let mut out = self.clone();
        for (c, l) in out.coeffs.iter_mut().zip(self.basis.eigenvalues()) {
            *c *= Complex64::from_polar(1.0, -t * (shift + l));
        }
        out
    }
}

/// Gauge map between `∂_t u = i(Δu - |u|^{p-1}u)` and its shifted form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeDirection {
    /// `v = e^{-it} u`
    Forward,
    /// `u = e^{it} v`
    Inverse,
}

pub fn gauge_transform(u: &SpectralField, t: f64, direction: GaugeDirection) -> SpectralField {
    let phase = match direction {
        GaugeDirection::Forward => -t,
        GaugeDirection::Inverse => t,
    };
    let mut out = u.clone();
    out.scale(Complex64::from_polar(1.0, phase));
    out
}

/// Scaling-critical regularity `d/2 - 2/(p-1)`.
pub fn critical_exponent(p: f64, d: usize) -> Result<f64> {
    if p <= 1.0 {
        return Err(crate::error::invalid("critical exponent needs p > 1"));
    }
    Ok(d as f64 / 2.0 - 2.0 / (p - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis(d: usize, n: usize) -> Arc<ModeBasis> {
        Arc::new(ModeBasis::new(d, n, true).unwrap())
    }

    fn field_from(b: &Arc<ModeBasis>, raw: &[(f64, f64)]) -> SpectralField {
        let coeffs = (0..b.len())
            .map(|i| {
                let (re, im) = raw[i % raw.len()];
                Complex64::new(re, im) / (1.0 + b.eigenvalue(i))
            })
            .collect();
        SpectralField::from_coeffs(b.clone(), coeffs).unwrap()
    }

    #[test]
    fn zero_mode_norm_is_one_for_every_sigma() {
        let b = basis(3, 10);
        let u = SpectralField::single_mode(b, 0, Complex64::new(1.0, 0.0));
        for s in [-2.0, 0.0, 0.5, 3.0] {
            assert_eq!(u.sobolev_norm(s), 1.0);
        }
    }

    #[test]
    fn unit_shell_mode_h2_norm() {
        let b = basis(1, 4);
        let u = SpectralField::single_mode(b, 1, Complex64::new(1.0, 0.0));
        assert!((u.sobolev_norm(2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn projection_keeps_first_shells() {
        let b = basis(1, 10);
        let ones = vec![Complex64::new(1.0, 0.0); b.len()];
        let u = SpectralField::from_coeffs(b.clone(), ones).unwrap();
        let p = u.project(1);
        let kept: Vec<f64> = p.coeffs().iter().map(|c| c.re).collect();
        assert_eq!(&kept[..3], &[1.0, 1.0, 1.0]);
        assert!(kept[3..].iter().all(|&c| c == 0.0));
        let zero_mode = SpectralField::single_mode(b, 0, Complex64::new(2.0, 1.0));
        assert_eq!(zero_mode.project(3), zero_mode);
    }

    #[test]
    fn orthogonal_modes_have_zero_inner_product() {
        let b = basis(2, 6);
        let u = SpectralField::single_mode(b.clone(), 1, Complex64::new(1.0, 2.0));
        let v = SpectralField::single_mode(b, 3, Complex64::new(-1.0, 0.5));
        assert_eq!(u.inner(&v).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_mismatched_bases() {
        let u = SpectralField::zeros(basis(1, 4));
        let v = SpectralField::zeros(basis(2, 4));
        assert!(matches!(u.inner(&v), Err(Error::BasisMismatch)));
    }

    #[test]
    fn constant_one_has_half_torus_volume_mass() {
        for d in 1..=3 {
            let u = SpectralField::constant(basis(d, 2), Complex64::new(1.0, 0.0));
            let expect = 0.5 * (2.0 * PI).powi(d as i32);
            assert!((u.mass() - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn critical_exponent_values() {
        assert!((critical_exponent(5.0, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((critical_exponent(7.0, 3).unwrap() - 7.0 / 6.0).abs() < 1e-15);
        assert!((critical_exponent(3.0, 3).unwrap() - 0.5).abs() < 1e-15);
        assert!(critical_exponent(1.0, 3).is_err());
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let b = basis(2, 12);
        let u = field_from(&b, &[(0.3, -0.2), (1.0, 0.4)]);
        assert_eq!(u.propagate(0.0), u);
    }

    #[test]
    fn gauge_at_zero_is_identity() {
        let b = basis(1, 8);
        let u = field_from(&b, &[(0.3, -0.2)]);
        assert_eq!(gauge_transform(&u, 0.0, GaugeDirection::Forward), u);
    }

    proptest! {
        #[test]
        fn inner_with_i_u_vanishes(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20)) {
            let b = basis(2, 20);
            let u = field_from(&b, &raw);
            let mut iu = u.clone();
            iu.scale(Complex64::new(0.0, 1.0));
            prop_assert!(u.inner(&iu).unwrap().abs() < 1e-15);
            prop_assert!((u.inner(&u).unwrap() - u.norm_sq()).abs() < 1e-14);
        }

        #[test]
        fn projection_is_idempotent_and_contracting(
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
            n in 1usize..30,
            sigma in -2.0f64..4.0,
        ) {
            let b = basis(3, 40);
            let u = field_from(&b, &raw);
            let p = u.project(n);
            prop_assert_eq!(p.project(n), p.clone());
            prop_assert!(p.sobolev_norm(sigma) <= u.sobolev_norm(sigma) * (1.0 + 1e-15));
        }

        #[test]
        fn embedding_inequality(
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
            s in -1.0f64..3.0,
            gap in 0.0f64..2.0,
        ) {
            let u = field_from(&basis(1, 30), &raw);
            prop_assert!(u.sobolev_norm(s) <= u.sobolev_norm(s + gap) * (1.0 + 1e-15));
        }

        #[test]
        fn propagator_is_an_isometric_group(
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
            t in -50.0f64..50.0,
            sigma in -1.0f64..3.0,
        ) {
            let u = field_from(&basis(2, 25), &raw);
            let v = u.propagate(t);
            let rel = (v.sobolev_norm(sigma) - u.sobolev_norm(sigma)).abs() / u.sobolev_norm(sigma).max(1e-300);
            prop_assert!(rel < 1e-12);
            let back = v.propagate(-t);
            for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
                prop_assert!((a - b).norm() < 1e-14);
            }
        }

        #[test]
        fn gauge_preserves_norms(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..10), t in -10.0f64..10.0) {
            let u = field_from(&basis(1, 10), &raw);
            let g = gauge_transform(&u, t, GaugeDirection::Forward);
            prop_assert!((g.sobolev_norm(1.5) - u.sobolev_norm(1.5)).abs() < 1e-14);
            let back = gauge_transform(&g, t, GaugeDirection::Inverse);
            for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
                prop_assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
