//! Smooth cutoff `χ_R`: equal to 1 on `[0, R]`, 0 on `[2R, ∞)`.

use serde::{Deserialize, Serialize};

fn psi(y: f64) -> [f64; 3] {
    if y <= 0.0 {
        return [0.0; 3];
    }
    let p = (-1.0 / y).exp();
    let y2 = y * y;
    [p, p / y2, p * (1.0 - 2.0 * y) / (y2 * y2)]
}

/// `χ, χ', χ''` of the unit cutoff at `x`.
pub fn unit_cutoff(x: f64) -> [f64; 3] {
    if x <= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    if x >= 2.0 {
        return [0.0; 3];
    }
    let [a, pa1, pa2] = psi(2.0 - x);
    let (a1, a2) = (-pa1, pa2);
    let [b, b1, b2] = psi(x - 1.0);
    let s = a + b;
    let s1 = a1 + b1;
    let num1 = a1 * b - a * b1;
    let num2 = a2 * b - a * b2;
    [a / s, num1 / (s * s), num2 / (s * s) - 2.0 * num1 * s1 / (s * s * s)]
}

/// `χ_R(x)` and its first two derivatives.
pub fn chi_r(x: f64, r: f64) -> [f64; 3] {
    let [c0, c1, c2] = unit_cutoff(x / r);
    [c0, c1 / r, c2 / (r * r)]
}

/// `C_m = sup |χ^{(m)}|` of the unit cutoff, by a dense scan of `[1, 2]`.
pub fn derivative_constant(m: usize) -> f64 {
    let n = 200_000;
    (0..=n)
        .map(|i| unit_cutoff(1.0 + i as f64 / n as f64)[m].abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffCheck {
    pub r: f64,
    pub order: usize,
    pub constant: f64,
    /// `max |χ_R^{(m)}| R^m / C_m` over the grid; at most 1 when the bound holds.
    pub scaled_max: f64,
    /// `max |χ_R^{(m)}| R^m`, to compare with the constant-one bound.
    pub raw_max: f64,
    /// Largest gap between the closed-form derivative and central differences.
    pub finite_difference_error: f64,
    pub holds: bool,
}

/// Check `|χ_R^{(m)}| ≤ C_m R^{-m}` on a grid of `[0, 3R]` and validate
/// the derivative formulas against central differences.
pub fn check_derivative_bound(r: f64, order: usize, points: usize) -> CutoffCheck {
    assert!(order == 1 || order == 2);
    let constant = derivative_constant(order);
    let h = 1e-4 * r;
    let mut raw_max: f64 = 0.0;
    let mut fd_err: f64 = 0.0;
    for i in 0..=points {
        let x = 3.0 * r * i as f64 / points as f64;
        let d = chi_r(x, r);
        raw_max = raw_max.max(d[order].abs() * r.powi(order as i32));
        if x > h {
            let [p, _, _] = chi_r(x + h, r);
            let [q, _, _] = chi_r(x - h, r);
            let fd = if order == 1 { (p - q) / (2.0 * h) } else { (p - 2.0 * d[0] + q) / (h * h) };
            let scale = constant * r.powi(-(order as i32));
            fd_err = fd_err.max((fd - d[order]).abs() / scale);
        }
    }
    CutoffCheck {
        r,
        order,
        constant,
        scaled_max: raw_max / constant,
        raw_max,
        finite_difference_error: fd_err,
        holds: raw_max <= constant * (1.0 + 1e-9),
    }
}
