use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::empirical::EmpiricalMeasure;
use crate::dynamics::{integrate_deterministic, IntegratorOptions};
use crate::error::{invalid, Result};
use crate::spectral::{Collocation, SpectralField};
use crate::stats::{ks_weighted, weighted_mean};

/// Scalar functional compared before and after the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "kebab-case")]
pub enum Observable {
    Mass,
    Energy,
    Sobolev(f64),
    /// Real part of the coefficient at a basis index.
    Re(usize),
    Im(usize),
}

impl Observable {
    /// M, E, ‖u‖_1, ‖u‖_r and the low-mode coefficients of modes 0 and 1.
    pub fn default_set(r: f64) -> Vec<Observable> {
        use Observable::*;
        vec![Mass, Energy, Sobolev(1.0), Sobolev(r), Re(0), Im(0), Re(1), Im(1)]
    }

    pub fn name(&self) -> String {
        match self {
            Observable::Mass => "M".into(),
            Observable::Energy => "E".into(),
            Observable::Sobolev(r) => format!("H{r}"),
            Observable::Re(i) => format!("re{i}"),
            Observable::Im(i) => format!("im{i}"),
        }
    }

    pub fn parse(s: &str) -> Option<Observable> {
        match s {
            "M" | "mass" => Some(Observable::Mass),
            "E" | "energy" => Some(Observable::Energy),
            _ => {
                if let Some(r) = s.strip_prefix('H') {
                    r.parse().ok().map(Observable::Sobolev)
                } else if let Some(i) = s.strip_prefix("re") {
                    i.parse().ok().map(Observable::Re)
                } else if let Some(i) = s.strip_prefix("im") {
                    i.parse().ok().map(Observable::Im)
                } else {
                    None
                }
            }
        }
    }

    pub fn evaluate(&self, u: &SpectralField, grid: &mut Collocation, p: f64) -> f64 {
        match *self {
            Observable::Mass => u.mass(),
            Observable::Energy => grid.energy(u, p),
            Observable::Sobolev(r) => u.sobolev_norm(r),
            Observable::Re(i) => u.coeffs()[i].re,
            Observable::Im(i) => u.coeffs()[i].im,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableDistance {
    pub name: String,
    pub ks: f64,
    pub p_value: f64,
    pub mean_pre: f64,
    pub mean_post: f64,
    pub var_pre: f64,
    pub var_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub measure_id: String,
    pub t: f64,
    pub samples: usize,
    pub rows: Vec<ObservableDistance>,
    /// Largest KS statistic over the observables.
    pub distance: f64,
    /// Per-observable level after the Bonferroni correction of 0.01.
    pub level: f64,
    pub pass: bool,
}

/// Push every snapshot through `φ_N^t` and compare observable marginals.
pub fn invariance_test(m: &EmpiricalMeasure, t: f64, flow: &IntegratorOptions, observables: &[Observable]) -> Result<InvarianceReport> {
    if !(t >= 0.0) {
        return Err(invalid("t must be nonnegative"));
    }
    if observables.is_empty() {
        return Err(invalid("no observables"));
    }
    let basis = m.basis().clone();
    if observables.iter().any(|o| matches!(o, Observable::Re(i) | Observable::Im(i) if *i >= basis.len())) {
        return Err(invalid("observable mode index outside the basis"));
    }
    let opts = IntegratorOptions { horizon: t, stride: usize::MAX, sigmas: Vec::new(), ..flow.clone() };
    let pushed: Vec<SpectralField> = m
        .fields()
        .par_iter()
        .map(|u| {
            if t == 0.0 {
                return Ok(u.clone());
            }
            let traj = integrate_deterministic(u, &opts)?;
            Ok(traj.last().expect("trajectory records the final time").clone())
        })
        .collect::<Result<_>>()?;

    let grid = Collocation::new(basis, flow.oversampling)?;
    let p = flow.p;
    let eval = |fields: &[SpectralField]| -> Vec<Vec<f64>> {
        fields
            .par_iter()
            .map_init(|| grid.clone(), |g, u| observables.iter().map(|o| o.evaluate(u, g, p)).collect())
            .collect()
    };
    let pre = eval(m.fields());
    let post = eval(&pushed);
    let w = m.weights();
    let level = 0.01 / observables.len() as f64;
    let rows: Vec<ObservableDistance> = observables
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let a: Vec<f64> = pre.iter().map(|r| r[k]).collect();
            let b: Vec<f64> = post.iter().map(|r| r[k]).collect();
            let ks = ks_weighted(&a, w, &b, w);
            let (ma, mb) = (weighted_mean(&a, w), weighted_mean(&b, w));
            let var = |x: &[f64], mu: f64| x.iter().zip(w).map(|(v, w)| w * (v - mu).powi(2)).sum::<f64>();
            ObservableDistance {
                name: o.name(),
                ks: ks.statistic,
                p_value: ks.p_value,
                mean_pre: ma,
                mean_post: mb,
                var_pre: var(&a, ma),
                var_post: var(&b, mb),
            }
        })
        .collect();
    let distance = rows.iter().map(|r| r.ks).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.p_value > level);
    Ok(InvarianceReport { measure_id: m.measure_id(), t, samples: m.len(), rows, distance, level, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Provenance;
    use crate::spectral::ModeBasis;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn cloud() -> EmpiricalMeasure {
        let b = Arc::new(ModeBasis::new(1, 4, true).unwrap());
        let fields = (0..40)
            .map(|i| {
                let c = (0..b.len())
                    .map(|k| Complex64::from_polar(0.3 / (1.0 + k as f64), 0.7 * (i * (k + 1)) as f64))
                    .collect();
                SpectralField::from_coeffs(b.clone(), c).unwrap()
            })
            .collect();
        EmpiricalMeasure::uniform(fields, vec![0; 40], Provenance::default()).unwrap()
    }

    #[test]
    fn zero_time_gives_zero_distance() {
        let r = invariance_test(&cloud(), 0.0, &IntegratorOptions::default(), &Observable::default_set(2.0)).unwrap();
        assert!(r.rows.iter().all(|d| d.ks == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn dirac_at_zero_is_invariant() {
        let b = Arc::new(ModeBasis::new(1, 4, true).unwrap());
        let m = EmpiricalMeasure::dirac_zero(b, Provenance::default());
        let r = invariance_test(&m, 1.0, &IntegratorOptions::default(), &Observable::default_set(2.0)).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn conserved_quantities_do_not_move() {
        let opts = IntegratorOptions { dt: 1e-3, ..Default::default() };
        let r = invariance_test(&cloud(), 0.5, &opts, &[Observable::Mass, Observable::Energy]).unwrap();
        for row in &r.rows {
            assert!((row.mean_pre - row.mean_post).abs() < 1e-8 * row.mean_pre.abs(), "{row:?}");
        }
    }

    #[test]
    fn observable_names_roundtrip() {
        for o in Observable::default_set(1.75) {
            assert_eq!(Observable::parse(&o.name()), Some(o));
        }
    }
}
