use serde::{Deserialize, Serialize};

/// Largest exponent kept before `e^{ρ}` is saturated.
pub const LOG_SATURATION: f64 = 700.0;

/// Increasing concave growth function ξ with closed-form inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "slope", rename_all = "kebab-case")]
pub enum GrowthKind {
    /// `ξ(x) = ln(1 + x)`
    Log1p,
    /// `ξ(x) = ln(1 + ln(1 + x))`
    LogLog1p,
    /// `ξ(x) = slope·x`
    Linear(f64),
}

impl GrowthKind {
    pub fn identity() -> Self {
        GrowthKind::Linear(1.0)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log1p" => Some(GrowthKind::Log1p),
            "loglog1p" => Some(GrowthKind::LogLog1p),
            "identity" => Some(GrowthKind::identity()),
            _ => s
                .strip_prefix("linear:")
                .and_then(|v| v.parse().ok())
                .filter(|a: &f64| *a > 0.0)
                .map(GrowthKind::Linear),
        }
    }

    pub fn name(&self) -> String {
        match self {
            GrowthKind::Log1p => "log1p".into(),
            GrowthKind::LogLog1p => "loglog1p".into(),
            GrowthKind::Linear(a) if *a == 1.0 => "identity".into(),
            GrowthKind::Linear(a) => format!("linear:{a:?}"),
        }
    }
}

/// The pair (ξ, ρ = 3ξ^{-1}) driving the damping weight `e^{ρ(‖u‖)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPair {
    pub kind: GrowthKind,
}

impl GrowthPair {
    pub fn new(kind: GrowthKind) -> Self {
        Self { kind }
    }

    pub fn xi(&self, x: f64) -> f64 {
        match self.kind {
            GrowthKind::Log1p => x.ln_1p(),
            GrowthKind::LogLog1p => x.ln_1p().ln_1p(),
            GrowthKind::Linear(a) => a * x,
        }
    }

    pub fn xi_inv(&self, y: f64) -> f64 {
        match self.kind {
            GrowthKind::Log1p => y.exp_m1(),
            GrowthKind::LogLog1p => y.exp_m1().exp_m1(),
            GrowthKind::Linear(a) => y / a,
        }
    }

    pub fn rho(&self, x: f64) -> f64 {
        3.0 * self.xi_inv(x)
    }

    /// `e^{ρ(x)}` with saturation at `e^{700}`; the flag reports saturation.
    pub fn damping_weight(&self, x: f64) -> (f64, bool) {
        let r = self.rho(x);
        if r > LOG_SATURATION || r.is_nan() {
            (LOG_SATURATION.exp(), true)
        } else {
            (r.exp(), false)
        }
    }

    /// `C(ρ, p) = sup_{x ≥ 0} x^p e^{-ρ(x)}`.
    pub fn c_rho(&self, p: f64) -> f64 {
        self.log_c_rho(p).exp()
    }

    /// `ln C(ρ, p)`, found by golden-section search in `ln x` where the
    /// objective `p·y - ρ(e^y)` is concave.
    pub fn log_c_rho(&self, p: f64) -> f64 {
        let g = |y: f64| {
            let r = self.rho(y.exp());
            if r.is_finite() { p * y - r } else { f64::NEG_INFINITY }
        };
        let (mut a, mut b) = (-60.0f64, 60.0f64);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..200 {
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d);
            }
        }
        g(0.5 * (a + b)).max(gc).max(gd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KINDS: [GrowthKind; 4] = [
        GrowthKind::Log1p,
        GrowthKind::LogLog1p,
        GrowthKind::Linear(1.0),
        GrowthKind::Linear(4.0),
    ];

    #[test]
    fn inverse_roundtrip_on_grid() {
        for kind in KINDS {
            let g = GrowthPair::new(kind);
            for i in 0..200 {
                let y = 0.05 * i as f64;
                if !g.xi_inv(y).is_finite() {
                    continue;
                }
                let back = g.xi(g.xi_inv(y));
                assert!((back - y).abs() <= 1e-10 * y.max(1.0), "{kind:?} y={y} back={back}");
            }
        }
    }

    #[test]
    fn c_rho_dominates_powers() {
        for kind in KINDS {
            let g = GrowthPair::new(kind);
            for p in [3.0, 5.0, 7.0] {
                let lc = g.log_c_rho(p);
                for i in -60..=60 {
                    let x = 10f64.powf(i as f64 / 10.0);
                    assert!(lc + g.rho(x) >= p * x.ln() - 1e-9 * (p * x.ln()).abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn c_rho_closed_form_for_identity() {
        // sup x^p e^{-3x} is attained at x = p/3
        let g = GrowthPair::new(GrowthKind::identity());
        let p: f64 = 7.0;
        let expect = (p / 3.0).powf(p) * (-p).exp();
        assert!((g.c_rho(p) / expect - 1.0).abs() < 1e-10);
    }

    #[test]
    fn weight_saturates() {
        let g = GrowthPair::new(GrowthKind::Log1p);
        assert_eq!(g.damping_weight(0.0), (1.0, false));
        let (w, sat) = g.damping_weight(20.0);
        assert!(sat && w == 700f64.exp());
    }

    #[test]
    fn names_parse_back() {
        for kind in KINDS {
            assert_eq!(GrowthKind::parse(&kind.name()), Some(kind));
        }
        assert_eq!(GrowthKind::parse("linear:-1"), None);
    }

    proptest! {
        #[test]
        fn xi_is_concave_and_increasing(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            for kind in KINDS {
                let g = GrowthPair::new(kind);
                let mid = g.xi(0.5 * (a + b));
                prop_assert!(mid >= 0.5 * (g.xi(a) + g.xi(b)) - 1e-12);
                if a < b {
                    prop_assert!(g.xi(a) <= g.xi(b));
                }
            }
        }
    }
}
