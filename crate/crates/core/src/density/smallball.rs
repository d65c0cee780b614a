use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measure::EmpiricalMeasure;
use crate::stats::fit_through_origin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallBallStatus {
    /// Every probability lies under `C·δ·(1 + slack)`.
    Dominated,
    Exceeded,
    /// No snapshot falls in any ball; nothing to fit.
    Inconclusive,
    /// The measure sits at the origin, so every ball has probability one.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallReport {
    pub measure_id: String,
    pub deltas: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Least-squares slope through the origin.
    pub slope: f64,
    pub slack: f64,
    /// `max_δ P(δ) / (Cδ)`
    pub worst_ratio: f64,
    pub status: SmallBallStatus,
}

impl SmallBallReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,probability,envelope\n");
        for (d, p) in self.deltas.iter().zip(&self.probabilities) {
            out.push_str(&format!("{d},{p},{}\n", self.slope * d));
        }
        out
    }
}

/// `μ(‖u‖ < δ)` on a strictly increasing grid of radii, with a linear envelope.
pub fn small_ball_probe(m: &EmpiricalMeasure, deltas: &[f64], slack: f64) -> Result<SmallBallReport> {
    if deltas.is_empty() || deltas[0] <= 0.0 || deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must be positive and strictly increasing"));
    }
    if !(slack >= 0.0) {
        return Err(invalid("slack must be nonnegative"));
    }
    let norms = m.values(|u| u.norm());
    let probabilities: Vec<f64> = deltas
        .iter()
        .map(|&d| norms.iter().zip(m.weights()).filter(|(n, _)| **n < d).fold(0.0, |acc, (_, w)| acc + w))
        .collect();
    let slope = fit_through_origin(deltas, &probabilities);
    let worst_ratio = if slope > 0.0 {
        deltas.iter().zip(&probabilities).map(|(d, p)| p / (slope * d)).fold(0.0, f64::max)
    } else {
        0.0
    };
    let status = if norms.iter().all(|n| *n == 0.0) {
        SmallBallStatus::Degenerate
    } else if probabilities.iter().all(|p| *p == 0.0) {
        SmallBallStatus::Inconclusive
    } else if worst_ratio <= 1.0 + slack {
        SmallBallStatus::Dominated
    } else {
        SmallBallStatus::Exceeded
    };
    Ok(SmallBallReport { measure_id: m.measure_id(), deltas: deltas.to_vec(), probabilities, slope, slack, worst_ratio, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Provenance;
    use crate::spectral::{ModeBasis, SpectralField};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn ring(radii: &[f64]) -> EmpiricalMeasure {
        let b = Arc::new(ModeBasis::new(1, 2, true).unwrap());
        let fields = radii.iter().map(|&r| SpectralField::single_mode(b.clone(), 1, Complex64::new(r, 0.0))).collect();
        EmpiricalMeasure::uniform(fields, vec![0; radii.len()], Provenance::default()).unwrap()
    }

    #[test]
    fn large_radius_has_probability_one() {
        let r = small_ball_probe(&ring(&[0.2, 0.5, 0.9]), &[0.1, 1.0], 1.0).unwrap();
        assert_eq!(r.probabilities[1], 1.0);
    }

    #[test]
    fn dirac_is_flagged_degenerate() {
        let b = Arc::new(ModeBasis::new(1, 2, true).unwrap());
        let m = EmpiricalMeasure::dirac_zero(b, Provenance::default());
        let r = small_ball_probe(&m, &[0.01, 0.1, 1.0], 1.0).unwrap();
        assert!(r.probabilities.iter().all(|p| *p == 1.0));
        assert_eq!(r.status, SmallBallStatus::Degenerate);
    }

    #[test]
    fn empty_balls_are_inconclusive() {
        let r = small_ball_probe(&ring(&[5.0, 6.0]), &[0.1, 1.0], 1.0).unwrap();
        assert_eq!(r.status, SmallBallStatus::Inconclusive);
    }

    #[test]
    fn uniform_radii_are_linearly_dominated() {
        let radii: Vec<f64> = (0..1000).map(|i| (f64::from(i) + 0.5) / 1000.0).collect();
        let r = small_ball_probe(&ring(&radii), &[0.05, 0.1, 0.2, 0.5, 1.0], 0.05).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-2);
        assert_eq!(r.status, SmallBallStatus::Dominated);
    }

    #[test]
    fn a_concentrated_atom_breaks_linearity() {
        let mut radii = vec![1e-4; 300];
        radii.extend((0..700).map(|i| 0.5 + f64::from(i) / 1400.0));
        let r = small_ball_probe(&ring(&radii), &[0.01, 0.1, 1.0], 1.0).unwrap();
        assert_eq!(r.status, SmallBallStatus::Exceeded);
    }
}
