use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measure::EmpiricalMeasure;
use crate::spectral::{Collocation, SpectralField};
use crate::stats::quantile_sorted;

/// Mass above which a repeated value is reported as an atom.
pub const ATOM_THRESHOLD: f64 = 1e-3;

/// The conserved functional whose law is analysed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableTag {
    Mass,
    Energy,
    Custom(String),
}

impl ObservableTag {
    pub fn name(&self) -> &str {
        match self {
            ObservableTag::Mass => "M",
            ObservableTag::Energy => "E",
            ObservableTag::Custom(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    /// Equal-width bins on `[lo, hi]`; values outside are clamped into the end bins.
    pub fn uniform(values: &[f64], weights: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("histogram needs bins > 0 and a finite range lo < hi"));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * width }).collect();
        let mut masses = vec![0.0; bins];
        for (&v, &w) in values.iter().zip(weights) {
            let k = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            masses[k] += w;
        }
        let total: f64 = masses.iter().sum();
        if total > 0.0 {
            masses.iter_mut().for_each(|m| *m /= total);
        }
        Ok(Self { edges, masses })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    /// Largest `mass/width` over bins lying entirely above `a`.
    pub fn max_density_above(&self, a: f64) -> f64 {
        (0..self.bins()).filter(|&k| self.edges[k] >= a).map(|k| self.masses[k] / self.width(k)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableDistribution {
    pub tag: ObservableTag,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub histogram: Histogram,
    /// Silverman bandwidth; zero when the sample has no spread.
    pub bandwidth: f64,
    pub atoms: Vec<Atom>,
}

/// Evaluate `M` or `E` on every snapshot and build the law of the result.
pub fn distribution_of(m: &EmpiricalMeasure, tag: ObservableTag, p: f64, oversampling: f64) -> Result<ObservableDistribution> {
    let values: Vec<f64> = match tag {
        ObservableTag::Mass => m.fields().par_iter().map(SpectralField::mass).collect(),
        ObservableTag::Energy => {
            let grid = Collocation::new(m.basis().clone(), oversampling)?;
            m.fields().par_iter().map_init(|| grid.clone(), |g, u| g.energy(u, p)).collect()
        }
        ObservableTag::Custom(_) => return Err(invalid("custom observables go through distribution_from_values")),
    };
    distribution_from_values(tag, values, m.weights().to_vec())
}

pub fn distribution_from_values(tag: ObservableTag, values: Vec<f64>, weights: Vec<f64>) -> Result<ObservableDistribution> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(invalid("need one weight per value and at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite observable value"));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let bins = ((values.len() as f64).sqrt().ceil() as usize).max(1);
    let histogram = Histogram::uniform(&values, &weights, lo, hi, bins)?;
    let bandwidth = silverman_bandwidth(&values, &weights);
    let atoms = detect_atoms(&values, &weights);
    Ok(ObservableDistribution { tag, values, weights, histogram, bandwidth, atoms })
}

fn effective_size(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    total * total / weights.iter().map(|w| w * w).sum::<f64>()
}

/// `0.9·min(σ, IQR/1.34)·n_eff^{-1/5}`.
pub fn silverman_bandwidth(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let sd = (values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * effective_size(weights).powf(-0.2)
}

/// Clusters of equal values (relative tolerance 1e-12) carrying more than
/// [`ATOM_THRESHOLD`] of the mass. A single value counts only when it is the
/// whole law or outweighs twice the median snapshot.
pub fn detect_atoms(values: &[f64], weights: &[f64]) -> Vec<Atom> {
    let total: f64 = weights.iter().sum();
    let mut sorted_w = weights.to_vec();
    sorted_w.sort_by(f64::total_cmp);
    let typical = quantile_sorted(&sorted_w, 0.5) / total;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut atoms = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let x0 = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && (values[order[end]] - x0).abs() <= 1e-12 * x0.abs().max(1e-300) + f64::MIN_POSITIVE {
            end += 1;
        }
        let mass = order[start..end].iter().map(|&i| weights[i]).sum::<f64>() / total;
        let count = end - start;
        if (count >= 2 || count == order.len() || mass >= 2.0 * typical) && mass > ATOM_THRESHOLD {
            atoms.push(Atom { location: x0, mass, count });
        }
        start = end;
    }
    atoms
}

/// Weighted Gaussian kernel density at `x`.
pub fn kde(values: &[f64], weights: &[f64], bandwidth: f64, x: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let norm = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt() * total);
    norm * values.iter().zip(weights).map(|(v, w)| w * (-0.5 * ((x - v) / bandwidth).powi(2)).exp()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBound {
    pub a: f64,
    /// `(bins, max mass/width above a)` at each refinement level.
    pub histogram: Vec<(usize, f64)>,
    /// Successive ratios of the histogram bound.
    pub refinement_ratios: Vec<f64>,
    /// KDE supremum above `a` at bandwidth ×½, ×1, ×2.
    pub kde: [f64; 3],
    /// Histogram mass after each refinement, minus one.
    pub mass_defects: Vec<f64>,
}

impl DensityBound {
    /// The bound is stable when no refinement raises it by more than `factor`.
    pub fn stable(&self, factor: f64) -> bool {
        self.refinement_ratios.iter().all(|r| *r <= factor)
    }
}

impl ObservableDistribution {
    pub fn has_atom_near(&self, x: f64, tol: f64) -> bool {
        self.atoms.iter().any(|a| (a.location - x).abs() <= tol)
    }

    /// Refinement study of `sup_{x > a}` of the density. Histograms with
    /// `bins·2^k` bins (`k < levels`) cover `[max(a, min), q_{0.99}]` and carry
    /// mass relative to the whole law; the KDE bound is taken over the same window.
    pub fn density_bound(&self, a: f64, bins: usize, levels: usize) -> Result<DensityBound> {
        if bins == 0 || levels == 0 {
            return Err(invalid("need bins > 0 and levels > 0"));
        }
        let lo = self.histogram.edges[0];
        let hi = *self.histogram.edges.last().unwrap();
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let start = a.max(lo);
        let end = quantile_sorted(&sorted, 0.99);
        let total: f64 = self.weights.iter().sum();
        let mut histogram = Vec::new();
        let mut mass_defects = Vec::new();
        for k in 0..levels {
            let b = bins << k;
            mass_defects.push(Histogram::uniform(&self.values, &self.weights, lo, hi, b)?.total() - 1.0);
            if !(end > start) {
                histogram.push((b, 0.0));
                continue;
            }
            let width = (end - start) / b as f64;
            let mut masses = vec![0.0; b];
            for (&v, &w) in self.values.iter().zip(&self.weights) {
                if v >= start && v < end {
                    masses[(((v - start) / width) as usize).min(b - 1)] += w / total;
                }
            }
            histogram.push((b, masses.iter().fold(0.0, |m: f64, x| m.max(x / width))));
        }
        let refinement_ratios = histogram.windows(2).map(|w| if w[0].1 > 0.0 { w[1].1 / w[0].1 } else { 1.0 }).collect();
        let mut kde_bound = [0.0; 3];
        if self.bandwidth > 0.0 && end > start {
            let points = 512;
            for (slot, f) in kde_bound.iter_mut().zip([0.5, 1.0, 2.0]) {
                let h = self.bandwidth * f;
                *slot = (0..=points)
                    .map(|i| kde(&self.values, &self.weights, h, start + (end - start) * i as f64 / points as f64))
                    .fold(0.0, f64::max);
            }
        }
        Ok(DensityBound { a, histogram, refinement_ratios, kde: kde_bound, mass_defects })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,mass,density\n");
        for k in 0..self.histogram.bins() {
            let h = &self.histogram;
            out.push_str(&format!("{},{},{},{}\n", h.edges[k], h.edges[k + 1], h.masses[k], h.masses[k] / h.width(k)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Provenance;
    use crate::spectral::ModeBasis;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn dirac_gives_a_unit_atom_at_zero() {
        let b = Arc::new(ModeBasis::new(1, 4, true).unwrap());
        let m = EmpiricalMeasure::dirac_zero(b, Provenance::default());
        for tag in [ObservableTag::Mass, ObservableTag::Energy] {
            let d = distribution_of(&m, tag, 7.0, 2.0).unwrap();
            assert_eq!(d.atoms.len(), 1);
            assert_eq!(d.atoms[0].location, 0.0);
            assert_eq!(d.atoms[0].mass, 1.0);
            assert_eq!(d.bandwidth, 0.0);
        }
    }

    #[test]
    fn distinct_values_are_not_atoms() {
        let v: Vec<f64> = (0..100).map(|i| f64::from(i) * 0.01).collect();
        assert!(detect_atoms(&v, &[1.0; 100]).is_empty());
        let mut v2 = v.clone();
        v2[7] = v2[3];
        let atoms = detect_atoms(&v2, &[1.0; 100]);
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].count, 2);
        assert!((atoms[0].mass - 0.02).abs() < 1e-15);
        let mut w = vec![1.0; 100];
        w[50] = 30.0;
        let heavy = detect_atoms(&v, &w);
        assert_eq!(heavy.len(), 1);
        assert_eq!(heavy[0].location, v[50]);
    }

    #[test]
    fn kde_integrates_to_one() {
        let v = [0.1, 0.4, 0.45, 1.3];
        let w = [1.0, 2.0, 1.0, 0.5];
        let h = 0.2;
        let n = 20_000;
        let (a, b) = (-2.0, 3.5);
        let dx = (b - a) / n as f64;
        let integral: f64 = (0..n).map(|i| kde(&v, &w, h, a + (i as f64 + 0.5) * dx)).sum::<f64>() * dx;
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn silverman_matches_the_textbook_rule() {
        let v: Vec<f64> = (0..1000).map(|i| f64::from(i) / 999.0).collect();
        let w = vec![1.0; 1000];
        let sd = (v.iter().map(|x| (x - 0.5).powi(2)).sum::<f64>() / 1000.0).sqrt();
        // uniform: IQR/1.34 = 0.373 > σ = 0.289
        let expect = 0.9 * sd * 1000f64.powf(-0.2);
        assert!((silverman_bandwidth(&v, &w) - expect).abs() < 1e-12);
    }

    #[test]
    fn density_bound_of_a_uniform_sample_is_near_one() {
        let v: Vec<f64> = (0..4000).map(|i| (f64::from(i) + 0.5) / 4000.0).collect();
        let d = distribution_from_values(ObservableTag::Custom("u".into()), v, vec![1.0; 4000]).unwrap();
        let b = d.density_bound(0.2, 10, 4).unwrap();
        for (_, c) in &b.histogram {
            assert!((c - 1.0).abs() < 0.05, "{b:?}");
        }
        assert!(b.stable(1.05));
    }

    proptest! {
        #[test]
        fn histogram_mass_survives_refinement(
            values in proptest::collection::vec(-5.0f64..5.0, 2..200),
            bins in 1usize..40,
        ) {
            let w: Vec<f64> = values.iter().enumerate().map(|(i, _)| 1.0 + (i % 3) as f64).collect();
            let d = distribution_from_values(ObservableTag::Custom("x".into()), values, w).unwrap();
            prop_assert!((d.histogram.total() - 1.0).abs() < 1e-12);
            prop_assert!(d.histogram.edges.windows(2).all(|e| e[1] > e[0]));
            let b = d.density_bound(f64::NEG_INFINITY, bins, 5).unwrap();
            for defect in b.mass_defects {
                prop_assert!(defect.abs() < 1e-12);
            }
            // halving a bin can at most double its density
            for r in b.refinement_ratios {
                prop_assert!(r <= 2.0 + 1e-12);
            }
        }
    }
}
