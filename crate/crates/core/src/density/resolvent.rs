use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smooth nonnegative function with compact support and a known derivative.
pub trait Profile: Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Interval outside which the function vanishes identically.
    fn support(&self) -> (f64, f64);
}

/// `height·exp(-1/(1-r²))` with `r = (x - center)/radius`, zero for `|r| ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    pub height: f64,
}

impl Bump {
    pub fn new(center: f64, radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0) || !(height >= 0.0) {
            return Err(invalid("bump needs radius > 0 and height >= 0"));
        }
        Ok(Self { center, radius, height })
    }
}

impl Profile for Bump {
    fn value(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.radius;
        if r.abs() >= 1.0 {
            0.0
        } else {
            self.height * (-1.0 / (1.0 - r * r)).exp()
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.radius;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - r * r;
        self.value(x) * (-2.0 * r / (q * q)) / self.radius
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `Φ_λ(x) = (2λ)^{-1/2} ∫ g(y) e^{-|x-y|√(2λ)} dy`, the bounded solution of
/// `½Φ'' + g = λΦ`.
///
/// The integral is split at `x` so each piece has a smooth integrand, then
/// evaluated by composite Gauss–Legendre quadrature.
pub struct Resolvent<'a, P: Profile + ?Sized> {
    g: &'a P,
    lambda: f64,
    kappa: f64,
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a, P: Profile + ?Sized> Resolvent<'a, P> {
    pub fn new(g: &'a P, lambda: f64, panels: usize, order: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda must be positive"));
        }
        if panels == 0 || order == 0 {
            return Err(invalid("quadrature needs panels > 0 and order > 0"));
        }
        let (a, b) = g.support();
        if !(b > a) {
            return Err(invalid("profile support must be a nonempty interval"));
        }
        let (nodes, weights) = gauss_legendre(order);
        Ok(Self { g, lambda, kappa: (2.0 * lambda).sqrt(), panels, nodes, weights })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `∫_lo^hi f(y) e^{-κ|x-y|} s(y) dy` with `s = sgn(x-y)` when `signed`.
    fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64, x: f64, signed: bool) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let h = (hi - lo) / self.panels as f64;
        let mut sum = 0.0;
        for k in 0..self.panels {
            let mid = lo + (k as f64 + 0.5) * h;
            for (t, w) in self.nodes.iter().zip(&self.weights) {
                let y = mid + 0.5 * h * t;
                let sign = if signed && y > x { -1.0 } else { 1.0 };
                sum += w * f(y) * sign * (-self.kappa * (x - y).abs()).exp();
            }
        }
        0.5 * h * sum
    }

    fn split<F: Fn(f64) -> f64 + Copy>(&self, f: F, x: f64, signed: bool) -> f64 {
        let (a, b) = self.g.support();
        let c = x.clamp(a, b);
        self.integrate(f, a, c, x, signed) + self.integrate(f, c, b, x, signed)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.split(|y| self.g.value(y), x, false) / self.kappa
    }

    /// `Φ' = (2λ)^{-1/2} ∫ g(y) ∂_x e^{-κ|x-y|} dy`
    pub fn derivative(&self, x: f64) -> f64 {
        -self.split(|y| self.g.value(y), x, true)
    }

    /// `Φ'' = (2λ)^{-1/2} ∫ g'(y) ∂_x e^{-κ|x-y|} dy`, one derivative moved onto `g`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        -self.split(|y| self.g.derivative(y), x, true)
    }

    /// `½Φ''(x) + g(x) - λΦ(x)`
    pub fn residual_at(&self, x: f64) -> f64 {
        0.5 * self.second_derivative(x) + self.g.value(x) - self.lambda * self.value(x)
    }

    /// `max |½Φ'' + g - λΦ| / sup g` over `points` nodes spanning the support
    /// widened by its own length on each side.
    pub fn relative_residual(&self, points: usize) -> f64 {
        let (a, b) = self.g.support();
        let len = b - a;
        let (lo, hi) = (a - len, b + len);
        let xs: Vec<f64> = (0..=points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect();
        let gmax = xs.iter().map(|&x| self.g.value(x)).fold(0.0, f64::max);
        if gmax == 0.0 {
            return 0.0;
        }
        xs.iter().map(|&x| self.residual_at(x).abs()).fold(0.0, f64::max) / gmax
    }
}

/// Build `Φ_λ` and reject it when the ODE residual exceeds `tol`.
pub fn resolvent_phi<P: Profile + ?Sized>(g: &P, lambda: f64, tol: f64) -> Result<Resolvent<'_, P>> {
    let r = Resolvent::new(g, lambda, 64, 16)?;
    let res = r.relative_residual(400);
    if !(res <= tol) {
        return Err(Error::ResidualCheck(format!("Φ_λ residual {res:.3e} exceeds {tol:.1e} at λ = {lambda}")));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub lambda: f64,
    pub residual: f64,
}

pub fn residual_table<P: Profile + ?Sized>(g: &P, lambdas: &[f64], panels: usize, order: usize) -> Result<Vec<ResidualRow>> {
    lambdas
        .iter()
        .map(|&lambda| Ok(ResidualRow { lambda, residual: Resolvent::new(g, lambda, panels, order)?.relative_residual(400) }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Zero;
    impl Profile for Zero {
        fn value(&self, _: f64) -> f64 {
            0.0
        }
        fn derivative(&self, _: f64) -> f64 {
            0.0
        }
        fn support(&self) -> (f64, f64) {
            (-1.0, 1.0)
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let r = Resolvent::new(&Zero, 1.0, 8, 8).unwrap();
        for x in [-3.0, 0.0, 0.4, 5.0] {
            assert_eq!(r.value(x), 0.0);
            assert_eq!(r.second_derivative(x), 0.0);
        }
        assert_eq!(r.relative_residual(50), 0.0);
    }

    #[test]
    fn bump_derivative_matches_differences() {
        let g = Bump::new(0.3, 0.8, 2.0).unwrap();
        for x in [-0.3, 0.0, 0.2, 0.6, 0.9] {
            let h = 1e-6;
            let fd = (g.value(x + h) - g.value(x - h)) / (2.0 * h);
            assert!((fd - g.derivative(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn derivative_matches_differences_of_the_value() {
        let g = Bump::new(0.0, 1.0, 1.0).unwrap();
        let r = Resolvent::new(&g, 1.0, 64, 16).unwrap();
        for x in [-1.5, -0.4, 0.1, 0.7, 2.0] {
            let h = 1e-5;
            let fd = (r.value(x + h) - r.value(x - h)) / (2.0 * h);
            assert!((fd - r.derivative(x)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn ode_residual_is_quadrature_small() {
        let g = Bump::new(0.0, 1.0, 1.0).unwrap();
        for lambda in [0.1, 1.0, 10.0] {
            let r = resolvent_phi(&g, lambda, 1e-6).unwrap();
            assert!(r.relative_residual(400) < 1e-10);
        }
    }

    #[test]
    fn coarse_quadrature_is_rejected() {
        let g = Bump::new(0.0, 1.0, 1.0).unwrap();
        let coarse = Resolvent::new(&g, 10.0, 1, 2).unwrap();
        assert!(coarse.relative_residual(400) > 1e-6);
    }

    #[test]
    fn lambda_phi_vanishes_as_lambda_shrinks() {
        let g = Bump::new(0.0, 1.0, 1.0).unwrap();
        let seq: Vec<f64> = [1.0, 0.1, 0.01]
            .iter()
            .map(|&l| l * Resolvent::new(&g, l, 64, 16).unwrap().value(0.25))
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        // λΦ_λ(x) ≈ √(λ/2) ∫g for small λ
        let mass: f64 = {
            let r = Resolvent::new(&g, 1e-12, 64, 16).unwrap();
            r.value(0.0) * (2e-12f64).sqrt()
        };
        assert!((seq[2] / ((0.005f64).sqrt() * mass) - 1.0).abs() < 0.2);
    }
}
