use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::spectral::snapshot::{SnapshotHeader, SnapshotPack};
use crate::spectral::{ModeBasis, SpectralField};
use crate::stochastic::RngStream;

/// Everything needed to regenerate a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub alpha: f64,
    pub dim: usize,
    pub cutoff: usize,
    pub full_shell: bool,
    pub p: f64,
    pub s: f64,
    pub eps: f64,
    pub dt: f64,
    pub scheme: String,
    pub oversampling: f64,
    pub burn_in: f64,
    pub stride: f64,
    pub noise_scale: f64,
    pub growth: String,
    pub rho_argument: String,
    pub seeds: Vec<u64>,
    pub first_stream: u64,
    pub chains: usize,
    pub samples_per_chain: usize,
    /// Operations applied after sampling, oldest first.
    pub operations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictionComparison {
    pub kept_mass: f64,
    pub mean: f64,
    pub restricted_mean: f64,
    pub gap: f64,
    /// `(1 - μ(Σ))·f_sup`, which bounds `gap`.
    pub bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Weighted ensemble of snapshots on one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    fields: Vec<SpectralField>,
    weights: Vec<f64>,
    /// Chain (or component) of each snapshot, used for blocked resampling.
    groups: Vec<usize>,
    pub provenance: Provenance,
}

impl EmpiricalMeasure {
    pub fn uniform(fields: Vec<SpectralField>, groups: Vec<usize>, provenance: Provenance) -> Result<Self> {
        let n = fields.len();
        Self::weighted(fields, vec![1.0 / n as f64; n], groups, provenance)
    }

    pub fn weighted(fields: Vec<SpectralField>, weights: Vec<f64>, groups: Vec<usize>, provenance: Provenance) -> Result<Self> {
        if fields.is_empty() {
            return Err(invalid("a measure needs at least one snapshot"));
        }
        if weights.len() != fields.len() || groups.len() != fields.len() {
            return Err(invalid("weights, groups and snapshots must have equal length"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
        let basis = fields[0].basis().clone();
        if fields.iter().any(|f| f.basis() != &basis && **f.basis() != *basis) {
            return Err(Error::BasisMismatch);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("weights sum to zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { fields, weights, groups, provenance })
    }

    /// Point mass at zero.
    pub fn dirac_zero(basis: Arc<ModeBasis>, provenance: Provenance) -> Self {
        Self::uniform(vec![SpectralField::zeros(basis)], vec![0], provenance).unwrap()
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        self.fields[0].basis()
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn expectation<F: FnMut(&SpectralField) -> f64>(&self, mut f: F) -> f64 {
        self.fields.iter().zip(&self.weights).map(|(u, w)| w * f(u)).sum()
    }

    pub fn values<F: FnMut(&SpectralField) -> f64>(&self, f: F) -> Vec<f64> {
        self.fields.iter().map(f).collect()
    }

    /// Conditional measure `μ(· ∩ A)/μ(A)`.
    pub fn restrict<P: FnMut(&SpectralField) -> bool>(&self, mut keep: P, label: &str) -> Result<Self> {
        let mut fields = Vec::new();
        let mut weights = Vec::new();
        let mut groups = Vec::new();
        for ((u, &w), &g) in self.fields.iter().zip(&self.weights).zip(&self.groups) {
            if keep(u) && w > 0.0 {
                fields.push(u.clone());
                weights.push(w);
                groups.push(g);
            }
        }
        if fields.is_empty() {
            return Err(Error::EmptyRestriction);
        }
        let mut prov = self.provenance.clone();
        prov.operations.push(format!("restrict:{label}"));
        Self::weighted(fields, weights, groups, prov)
    }

    /// Compare `Ê f` with its restriction to `{keep}` for `0 ≤ f ≤ f_sup`:
    /// `μ(Σ)Ê_Σ f ≥ Ê f - (1-μ(Σ))f_sup` and `Ê_Σ f ≤ Ê f/μ(Σ)`.
    pub fn compare_restriction<P, F>(&self, keep: P, mut f: F, f_sup: f64) -> Result<RestrictionComparison>
    where
        P: FnMut(&SpectralField) -> bool,
        F: FnMut(&SpectralField) -> f64,
    {
        let values = self.values(&mut f);
        if values.iter().any(|v| !(*v >= 0.0 && *v <= f_sup)) {
            return Err(invalid("test observable must take values in [0, f_sup]"));
        }
        let kept: Vec<bool> = self.fields.iter().map(keep).collect();
        let kept_mass: f64 = self.weights.iter().zip(&kept).filter(|(_, k)| **k).map(|(w, _)| w).sum();
        if kept_mass <= 0.0 {
            return Err(Error::EmptyRestriction);
        }
        let mean: f64 = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let restricted_mean = values
            .iter()
            .zip(&self.weights)
            .zip(&kept)
            .filter(|(_, k)| **k)
            .map(|((v, w), _)| v * w)
            .sum::<f64>()
            / kept_mass;
        let slack = 1e-12;
        let bound = (1.0 - kept_mass) * f_sup;
        Ok(RestrictionComparison {
            kept_mass,
            mean,
            restricted_mean,
            gap: (mean - restricted_mean).abs(),
            bound,
            lower_ok: kept_mass * restricted_mean >= mean - bound - slack,
            upper_ok: restricted_mean <= mean / kept_mass + slack,
        })
    }

    /// Mass kept by a predicate.
    pub fn probability<P: FnMut(&SpectralField) -> bool>(&self, mut event: P) -> f64 {
        self.fields.iter().zip(&self.weights).filter(|(u, _)| event(u)).map(|(_, w)| w).sum()
    }

    /// `Σ c_i μ_i` with the coefficients renormalised; components become groups.
    pub fn mixture(parts: &[(f64, &EmpiricalMeasure)], label: &str) -> Result<Self> {
        let total: f64 = parts.iter().map(|(c, _)| c).sum();
        if parts.is_empty() || !(total > 0.0) {
            return Err(invalid("mixture needs positive coefficients"));
        }
        let mut fields = Vec::new();
        let mut weights = Vec::new();
        let mut groups = Vec::new();
        for (k, (c, m)) in parts.iter().enumerate() {
            for (u, w) in m.fields.iter().zip(&m.weights) {
                fields.push(u.clone());
                weights.push(c / total * w);
                groups.push(k);
            }
        }
        let mut prov = parts[0].1.provenance.clone();
        prov.operations.push(format!("mixture:{label}:{}", parts.len()));
        Self::weighted(fields, weights, groups, prov)
    }

    /// Draw `n` snapshots with replacement according to the weights.
    pub fn resample(&self, n: usize, rng: &mut RngStream) -> Vec<&SpectralField> {
        let cdf: Vec<f64> = self
            .weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        (0..n)
            .map(|_| {
                let x: f64 = rng.rng().gen::<f64>() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= x).min(self.len() - 1);
                &self.fields[i]
            })
            .collect()
    }

    pub fn to_pack(&self) -> SnapshotPack {
        let b = self.basis();
        SnapshotPack {
            header: SnapshotHeader {
                dim: b.dim(),
                cutoff: b.cutoff(),
                p: self.provenance.p,
                s: self.provenance.s,
                eps: self.provenance.eps,
            },
            weights: self.weights.clone(),
            fields: self.fields.clone(),
        }
    }

    pub fn from_pack(pack: SnapshotPack, provenance: Provenance) -> Result<Self> {
        let n = pack.fields.len();
        Self::weighted(pack.fields, pack.weights, (0..n).collect(), provenance)
    }

    /// Manifest JSON: provenance, counts and basic observable summaries.
    pub fn manifest(&self) -> serde_json::Value {
        let mass = self.expectation(|u| u.mass());
        serde_json::json!({
            "provenance": self.provenance,
            "count": self.len(),
            "modes": self.basis().len(),
            "full_shell": self.basis().full_shell(),
            "mean_mass": mass,
            "pack_sha256": self.pack_digest(),
        })
    }

    pub fn pack_digest(&self) -> String {
        let mut buf = Vec::new();
        self.to_pack().write(&mut buf).expect("in-memory write");
        hex::encode(Sha256::digest(&buf))
    }

    /// Hash of the manifest, used to cross-reference reports.
    pub fn measure_id(&self) -> String {
        let text = serde_json::to_string(&self.manifest()).expect("manifest serialises");
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}
