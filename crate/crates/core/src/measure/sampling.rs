use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::empirical::{EmpiricalMeasure, Provenance};
use crate::error::{invalid, Error, Result};
use crate::spectral::{Collocation, ModeBasis, SimConfig, SpectralField};
use crate::stats::{bootstrap_ci, linear_fit, Interval};
use crate::stochastic::{
    chi_r, power_law_full_sum, sde_ensemble, Damping, EnsembleSpec, GrowthKind, GrowthPair, NoiseSpec,
    RhoArgument, SdeStepper,
};

/// Model, damping and forcing of one sampling experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub config: SimConfig,
    pub growth: GrowthKind,
    pub argument: RhoArgument,
    /// Prefactor of the power-law spectrum `a_k = scale·(1+λ_k)^{-(s+1)/2}`.
    pub noise_scale: f64,
}

impl Experiment {
    /// d=1, N=8, p=7, s=2, α=0.5, dt=1e-3, ξ(x)=10x, noise scale 3.
    pub fn reference() -> Self {
        Self {
            config: SimConfig { seed: 1, ..SimConfig::default() },
            growth: GrowthKind::Linear(10.0),
            argument: RhoArgument::Norm,
            noise_scale: 3.0,
        }
    }

    pub fn basis(&self) -> Result<Arc<ModeBasis>> {
        self.config.validate()?;
        self.config.basis()
    }

    pub fn damping(&self) -> Damping {
        Damping {
            s: self.config.s,
            eps: self.config.eps,
            growth: GrowthPair::new(self.growth),
            argument: self.argument,
        }
    }

    pub fn noise(&self, basis: &ModeBasis) -> NoiseSpec {
        NoiseSpec::power_law(basis, self.config.s, self.noise_scale)
    }

    pub fn stepper(&self) -> Result<SdeStepper> {
        let basis = self.basis()?;
        let noise = self.noise(&basis);
        SdeStepper::from_config(&self.config, self.damping(), noise)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut e = self.clone();
        e.config.alpha = alpha;
        e
    }

    /// `A_0` of the untruncated spectrum.
    pub fn full_a0(&self) -> Result<f64> {
        power_law_full_sum(self.config.dim, self.config.s, self.noise_scale, 0.0)
    }

    pub fn provenance(&self, plan: &SamplingPlan) -> Provenance {
        let c = &self.config;
        Provenance {
            alpha: c.alpha,
            dim: c.dim,
            cutoff: c.cutoff,
            full_shell: c.full_shell,
            p: c.p,
            s: c.s,
            eps: c.eps,
            dt: c.dt,
            scheme: c.scheme.name().to_string(),
            oversampling: c.oversampling,
            burn_in: plan.burn_in,
            stride: plan.stride,
            noise_scale: self.noise_scale,
            growth: self.growth.name(),
            rho_argument: match self.argument {
                RhoArgument::Norm => "norm".into(),
                RhoArgument::NormSquared => "norm-squared".into(),
            },
            seeds: vec![c.seed],
            first_stream: plan.first_stream,
            chains: plan.chains,
            samples_per_chain: plan.samples_per_chain,
            operations: Vec::new(),
        }
    }

    /// Inverse of [`Experiment::provenance`] for freshly sampled measures.
    pub fn from_provenance(p: &Provenance) -> Result<(Self, SamplingPlan)> {
        let growth = GrowthKind::parse(&p.growth).ok_or_else(|| invalid(format!("unknown growth `{}`", p.growth)))?;
        let argument = match p.rho_argument.as_str() {
            "norm" => RhoArgument::Norm,
            "norm-squared" => RhoArgument::NormSquared,
            other => return Err(invalid(format!("unknown rho argument `{other}`"))),
        };
        let seed = match p.seeds.as_slice() {
            [s] => *s,
            _ => return Err(invalid("provenance must name exactly one seed")),
        };
        let config = SimConfig {
            dim: p.dim,
            cutoff: p.cutoff,
            full_shell: p.full_shell,
            p: p.p,
            s: p.s,
            eps: p.eps,
            alpha: p.alpha,
            dt: p.dt,
            horizon: 0.0,
            seed,
            oversampling: p.oversampling,
            scheme: p.scheme.parse()?,
        };
        let plan = SamplingPlan {
            chains: p.chains,
            samples_per_chain: p.samples_per_chain,
            burn_in: p.burn_in,
            stride: p.stride,
            first_stream: p.first_stream,
        };
        Ok((Self { config, growth, argument, noise_scale: p.noise_scale }, plan))
    }
}

/// Chains, burn-in and sampling stride (time units) of a Krylov–Bogoliubov run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub chains: usize,
    pub samples_per_chain: usize,
    pub burn_in: f64,
    pub stride: f64,
    /// Chain `c` draws from RNG stream `first_stream + c`.
    pub first_stream: u64,
}

impl SamplingPlan {
    /// Burn-in `10/α`, stride `1/α`.
    pub fn for_alpha(alpha: f64, chains: usize, samples_per_chain: usize) -> Self {
        Self { chains, samples_per_chain, burn_in: 10.0 / alpha, stride: 1.0 / alpha, first_stream: 0 }
    }

    pub fn with_burn_in_factor(mut self, alpha: f64, factor: f64) -> Self {
        self.burn_in = factor / alpha;
        self
    }

    fn layout(&self, dt: f64) -> Result<(usize, usize, usize)> {
        if self.chains == 0 || self.samples_per_chain == 0 {
            return Err(invalid("need at least one chain and one sample"));
        }
        if !(self.burn_in > 0.0) || !(self.stride > 0.0) {
            return Err(invalid("burn-in and stride must be positive"));
        }
        let stride = ((self.stride / dt).round() as usize).max(1);
        let skip = ((self.burn_in / dt) / stride as f64).ceil().max(1.0) as usize;
        let steps = (skip + self.samples_per_chain - 1) * stride;
        Ok((stride, skip, steps))
    }

    /// SDE steps needed, summed over chains.
    pub fn total_steps(&self, dt: f64) -> Result<u64> {
        let (_, _, steps) = self.layout(dt)?;
        Ok(steps as u64 * self.chains as u64)
    }
}

/// Time-sampled SDE chains started at 0, snapshots after burn-in every stride.
pub fn krylov_bogoliubov_sample(exp: &Experiment, plan: &SamplingPlan) -> Result<EmpiricalMeasure> {
    let stepper = exp.stepper()?;
    let basis = stepper.basis().clone();
    let (stride, skip, steps) = plan.layout(exp.config.dt)?;
    let spec = EnsembleSpec {
        runs: plan.chains,
        dt: exp.config.dt,
        steps,
        stride,
        seed: exp.config.seed,
        first_stream: plan.first_stream,
    };
    let paths = sde_ensemble(&stepper, &spec, |_| SpectralField::zeros(basis.clone()), |u, _| u.clone())?;
    let mut fields = Vec::with_capacity(plan.chains * plan.samples_per_chain);
    let mut groups = Vec::with_capacity(fields.capacity());
    for (c, path) in paths.into_iter().enumerate() {
        for u in path.into_iter().skip(skip) {
            fields.push(u);
            groups.push(c);
        }
    }
    EmpiricalMeasure::uniform(fields, groups, exp.provenance(plan))
}

/// Weighted mean of `values` with a percentile bootstrap over groups (chains).
/// Falls back to resampling single snapshots when there is only one group.
pub fn blocked_mean_ci(values: &[f64], weights: &[f64], groups: &[usize], level: f64, resamples: usize, seed: u64) -> Interval {
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let blocks: Vec<(f64, f64)> = if ids.len() < 2 {
        values.iter().zip(weights).map(|(v, w)| (w * v, *w)).collect()
    } else {
        let mut acc = vec![(0.0, 0.0); ids.len()];
        for ((v, w), g) in values.iter().zip(weights).zip(groups) {
            let k = ids.binary_search(g).unwrap();
            acc[k].0 += w * v;
            acc[k].1 += w;
        }
        acc
    };
    let ratio = |idx: &[usize]| {
        let (a, b) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + blocks[i].0, b + blocks[i].1));
        a / b
    };
    let all: Vec<usize> = (0..blocks.len()).collect();
    let estimate = ratio(&all);
    bootstrap_ci(blocks.len(), level, resamples, seed, ratio, estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub measure_id: String,
    pub samples: usize,
    /// Ê𝓜 with a 99% interval blocked by chain.
    pub mass_dissipation: Interval,
    /// `A_{0,N}/2`
    pub mass_target: f64,
    pub relative_error: f64,
    pub energy_dissipation: f64,
    /// `½[A_1 + A_0 + ((p+1)/2)A_0(2π)^{-d} Ê‖u‖_{L^{p-1}}^{p-1}]`
    pub energy_target: f64,
    /// Ê e^{ρ(‖u‖_{s-})}
    pub exp_moment: f64,
    pub tail: Vec<TailPoint>,
    /// Log-log slope of the positive part of the tail curve.
    pub tail_slope: f64,
    pub tail_decreasing: bool,
}

struct SnapshotStats {
    mass_diss: f64,
    energy_diss: f64,
    weight: f64,
    lp: f64,
    norm_sq: f64,
}

pub fn stationary_report(m: &EmpiricalMeasure, exp: &Experiment, radii: &[f64]) -> Result<StationaryReport> {
    let basis = m.basis().clone();
    let noise = exp.noise(&basis);
    let damping = exp.damping();
    let p = exp.config.p;
    let grid = Collocation::new(basis.clone(), exp.config.oversampling)?;
    let stats: Vec<SnapshotStats> = m
        .fields()
        .par_iter()
        .map_init(
            || grid.clone(),
            |g, u| {
                let md = damping.mass(u);
                SnapshotStats {
                    mass_diss: md.value,
                    energy_diss: damping.energy(u, g, p).value,
                    weight: md.weight.value,
                    lp: g.lp_integral(u, p - 1.0),
                    norm_sq: u.norm_sq(),
                }
            },
        )
        .collect();
    let w = m.weights();
    let avg = |f: &dyn Fn(&SnapshotStats) -> f64| stats.iter().zip(w).map(|(s, w)| w * f(s)).sum::<f64>();

    let mass: Vec<f64> = stats.iter().map(|s| s.mass_diss).collect();
    let mass_dissipation = blocked_mean_ci(&mass, w, m.groups(), 0.99, 4000, 0x5ca1e);
    let a0 = noise.a_sigma(&basis, 0.0);
    let a1 = noise.a_sigma(&basis, 1.0);
    let vol = (2.0 * std::f64::consts::PI).powi(basis.dim() as i32);
    let mass_target = a0 / 2.0;
    let energy_target = 0.5 * (a1 + a0 + 0.5 * (p + 1.0) * a0 / vol * avg(&|s| s.lp));

    let tail: Vec<TailPoint> = radii
        .iter()
        .map(|&r| TailPoint { radius: r, value: avg(&|s| s.mass_diss * (1.0 - chi_r(s.norm_sq, r)[0])) })
        .collect();
    let positive: Vec<&TailPoint> = tail.iter().filter(|t| t.value > 0.0).collect();
    let tail_slope = if positive.len() >= 2 {
        let x: Vec<f64> = positive.iter().map(|t| t.radius.ln()).collect();
        let y: Vec<f64> = positive.iter().map(|t| t.value.ln()).collect();
        linear_fit(&x, &y).slope
    } else {
        f64::NAN
    };
    let tail_decreasing = tail.windows(2).all(|p| p[1].value <= p[0].value);

    Ok(StationaryReport {
        measure_id: m.measure_id(),
        samples: m.len(),
        relative_error: if mass_target > 0.0 {
            (mass_dissipation.estimate - mass_target).abs() / mass_target
        } else {
            mass_dissipation.estimate.abs()
        },
        mass_dissipation,
        mass_target,
        energy_dissipation: avg(&|s| s.energy_diss),
        energy_target,
        exp_moment: avg(&|s| s.weight),
        tail,
        tail_slope,
        tail_decreasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub burn_in: f64,
    pub measure_id: String,
    pub mass_dissipation: Interval,
    pub mass_target: f64,
    pub relative_error: f64,
    pub mean_mass: f64,
    pub mean_energy: f64,
    pub mean_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Adjacent α never change M, E or ‖u‖_{s-} by more than a factor 10.
    pub continuous: bool,
    /// Every Ê𝓜 within 10% of `A_{0,N}/2`.
    pub pinned: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,burn_in,measure_id,EM,EM_lo,EM_hi,target,rel_err,mean_M,mean_E,mean_norm\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.alpha,
                r.burn_in,
                r.measure_id,
                r.mass_dissipation.estimate,
                r.mass_dissipation.lower,
                r.mass_dissipation.upper,
                r.mass_target,
                r.relative_error,
                r.mean_mass,
                r.mean_energy,
                r.mean_norm
            ));
        }
        out
    }
}

/// Sample `μ_{α,N}` for decreasing α with burn-in `burn_factor/α` and stride `1/α`.
pub fn inviscid_sweep(
    exp: &Experiment,
    alphas: &[f64],
    chains: usize,
    samples_per_chain: usize,
    burn_factor: f64,
    budget_steps: Option<u64>,
) -> Result<(SweepReport, Vec<EmpiricalMeasure>)> {
    if alphas.is_empty() || alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("alphas must be strictly decreasing"));
    }
    let plans: Vec<(Experiment, SamplingPlan)> = alphas
        .iter()
        .map(|&a| {
            let plan = SamplingPlan::for_alpha(a, chains, samples_per_chain).with_burn_in_factor(a, burn_factor);
            (exp.with_alpha(a), plan)
        })
        .collect();
    let mut needed = 0u64;
    for (e, plan) in &plans {
        needed += plan.total_steps(e.config.dt)?;
    }
    if let Some(budget) = budget_steps {
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
    }
    let mut rows = Vec::new();
    let mut measures = Vec::new();
    for (e, plan) in &plans {
        let m = krylov_bogoliubov_sample(e, plan)?;
        let report = stationary_report(&m, e, &[])?;
        let mut grid = Collocation::new(m.basis().clone(), e.config.oversampling)?;
        let p = e.config.p;
        let sm = e.config.s_minus();
        rows.push(SweepRow {
            alpha: e.config.alpha,
            burn_in: plan.burn_in,
            measure_id: report.measure_id,
            mass_dissipation: report.mass_dissipation,
            mass_target: report.mass_target,
            relative_error: report.relative_error,
            mean_mass: m.expectation(|u| u.mass()),
            mean_energy: m.expectation(|u| grid.energy(u, p)),
            mean_norm: m.expectation(|u| u.sobolev_norm(sm)),
        });
        measures.push(m);
    }
    let ratio_ok = |a: f64, b: f64| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        hi <= 10.0 * lo
    };
    let continuous = rows.windows(2).all(|w| {
        ratio_ok(w[0].mean_mass, w[1].mean_mass)
            && ratio_ok(w[0].mean_energy, w[1].mean_energy)
            && ratio_ok(w[0].mean_norm, w[1].mean_norm)
    });
    let pinned = rows.iter().all(|r| r.relative_error <= 0.1);
    Ok((SweepReport { rows, continuous, pinned }, measures))
}

/// Fraction of snapshots with `‖u‖_s ≥ n` for `n = 1, 2, ...` until it vanishes.
pub fn large_data_profile(m: &EmpiricalMeasure, s: f64) -> Vec<(u32, f64)> {
    let norms = m.values(|u| u.sobolev_norm(s));
    let mut out = Vec::new();
    for n in 1u32.. {
        let frac: f64 = norms.iter().zip(m.weights()).filter(|(x, _)| **x >= f64::from(n)).map(|(_, w)| w).sum();
        if frac <= 0.0 {
            break;
        }
        out.push((n, frac));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRun {
    pub lambda: f64,
    /// Factor applied to every amplitude, `√(Λ/A_0)`.
    pub factor: f64,
    pub measure: EmpiricalMeasure,
    pub mass_dissipation: Interval,
    /// `Λ_N = Λ·A_{0,N}/A_0`, the truncated forcing after rescaling.
    pub lambda_n: f64,
    pub large_data: Vec<(u32, f64)>,
}

impl ScaledRun {
    /// Largest `n` with a positive fraction of `‖u‖_s ≥ n`.
    pub fn large_data_threshold(&self) -> u32 {
        self.large_data.last().map_or(0, |(n, _)| *n)
    }
}

/// Resample with `a_k → a_k√(Λ/A_0)`, `A_0` the untruncated forcing.
pub fn scaled_measure_run(exp: &Experiment, plan: &SamplingPlan, lambda: f64) -> Result<ScaledRun> {
    if !(lambda > 0.0) {
        return Err(invalid("Λ must be positive"));
    }
    let a0 = exp.full_a0()?;
    if !(a0 > 0.0) {
        return Err(invalid("base forcing vanishes"));
    }
    let factor = (lambda / a0).sqrt();
    let mut scaled = exp.clone();
    scaled.noise_scale *= factor;
    let mut measure = krylov_bogoliubov_sample(&scaled, plan)?;
    measure.provenance.operations.push(format!("scale:{lambda:?}"));
    let basis = measure.basis().clone();
    let damping = scaled.damping();
    let values = measure.values(|u| damping.mass(u).value);
    let mass_dissipation = blocked_mean_ci(&values, measure.weights(), measure.groups(), 0.99, 4000, 0x5ca1e);
    let lambda_n = lambda * exp.noise(&basis).a_sigma(&basis, 0.0) / a0;
    let large_data = large_data_profile(&measure, exp.config.s);
    Ok(ScaledRun { lambda, factor, measure, mass_dissipation, lambda_n, large_data })
}

/// `μ* = Σ_n 2^{-n} μ^n` over the first `max_n` measures, renormalised.
pub fn cumulative_measure(measures: &[EmpiricalMeasure], max_n: usize) -> Result<EmpiricalMeasure> {
    if max_n == 0 || max_n > measures.len() {
        return Err(invalid(format!("max_n must lie in 1..={}", measures.len())));
    }
    let parts: Vec<(f64, &EmpiricalMeasure)> = measures[..max_n]
        .iter()
        .enumerate()
        .map(|(k, m)| (0.5f64.powi(k as i32 + 1), m))
        .collect();
    EmpiricalMeasure::mixture(&parts, "cumulative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;
    use crate::stochastic::RngStream;
    use num_complex::Complex64;

    fn small() -> Experiment {
        let mut e = Experiment::reference();
        e.config.cutoff = 4;
        e.config.dt = 2e-3;
        e
    }

    fn plan() -> SamplingPlan {
        SamplingPlan { chains: 3, samples_per_chain: 4, burn_in: 1.0, stride: 0.5, first_stream: 0 }
    }

    #[test]
    fn zero_forcing_collapses_to_dirac() {
        let mut e = small();
        e.noise_scale = 0.0;
        let m = krylov_bogoliubov_sample(&e, &plan()).unwrap();
        assert!(m.fields().iter().all(|u| u.norm() == 0.0));
        let r = stationary_report(&m, &e, &[1.0, 2.0]).unwrap();
        assert_eq!(r.mass_dissipation.estimate, 0.0);
        assert!(r.exp_moment >= 1.0);
    }

    #[test]
    fn layout_and_groups() {
        let m = krylov_bogoliubov_sample(&small(), &plan()).unwrap();
        assert_eq!(m.len(), 12);
        assert_eq!(m.groups(), &[0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        let r = stationary_report(&m, &small(), &[1.0, 2.0, 4.0]).unwrap();
        assert!(r.exp_moment >= 1.0);
        assert!(r.tail_decreasing);
    }

    #[test]
    fn provenance_regenerates_the_measure() {
        let e = small();
        let m = krylov_bogoliubov_sample(&e, &plan()).unwrap();
        let (e2, p2) = Experiment::from_provenance(&m.provenance).unwrap();
        let again = krylov_bogoliubov_sample(&e2, &p2).unwrap();
        assert_eq!(again.pack_digest(), m.pack_digest());
        assert_eq!(again.measure_id(), m.measure_id());
    }

    #[test]
    fn unit_scaling_is_the_base_measure() {
        let e = small();
        let a0 = e.full_a0().unwrap();
        let run = scaled_measure_run(&e, &plan(), a0).unwrap();
        assert_eq!(run.factor, 1.0);
        let base = krylov_bogoliubov_sample(&e, &plan()).unwrap();
        assert_eq!(run.measure.pack_digest(), base.pack_digest());
    }

    #[test]
    fn cumulative_weights() {
        let b = Arc::new(ModeBasis::new(1, 2, true).unwrap());
        let one = |c: f64| {
            EmpiricalMeasure::uniform(
                vec![SpectralField::constant(b.clone(), Complex64::new(c, 0.0))],
                vec![0],
                Provenance::default(),
            )
            .unwrap()
        };
        let ms = vec![one(1.0), one(2.0), one(3.0)];
        let single = cumulative_measure(&ms, 1).unwrap();
        assert_eq!(single.weights(), &[1.0]);
        let two = cumulative_measure(&ms, 2).unwrap();
        assert!((two.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((two.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(cumulative_measure(&ms, 4).is_err());
    }

    #[test]
    fn resampling_the_cumulative_measure_recovers_component_means() {
        let b = Arc::new(ModeBasis::new(1, 2, true).unwrap());
        let comp = |c: f64| {
            let fields = (0..50)
                .map(|i| SpectralField::constant(b.clone(), Complex64::new(c + 0.01 * i as f64, 0.0)))
                .collect();
            EmpiricalMeasure::uniform(fields, vec![0; 50], Provenance::default()).unwrap()
        };
        let ms = vec![comp(1.0), comp(5.0)];
        let mix = cumulative_measure(&ms, 2).unwrap();
        let exact = mix.expectation(|u| u.coeffs()[0].re);
        let mut rng = RngStream::new(3, 0);
        let draws: Vec<f64> = mix.resample(40_000, &mut rng).iter().map(|u| u.coeffs()[0].re).collect();
        let from_components = 2.0 / 3.0 * ms[0].expectation(|u| u.coeffs()[0].re)
            + 1.0 / 3.0 * ms[1].expectation(|u| u.coeffs()[0].re);
        assert!((exact - from_components).abs() < 1e-12);
        assert!((mean(&draws) - exact).abs() < 0.05);
    }

    #[test]
    fn sweep_rejects_increasing_alphas() {
        assert!(inviscid_sweep(&small(), &[0.1, 0.5], 2, 2, 10.0, None).is_err());
        assert!(matches!(
            inviscid_sweep(&small(), &[0.5, 0.25], 2, 2, 10.0, Some(10)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn degenerate_sweep_is_all_dirac() {
        let mut e = small();
        e.noise_scale = 0.0;
        let (report, measures) = inviscid_sweep(&e, &[0.5, 0.25], 2, 2, 2.0, None).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(measures.iter().all(|m| m.fields().iter().all(|u| u.norm() == 0.0)));
    }

    #[test]
    fn blocked_interval_brackets_the_mean() {
        let v: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
        let w = vec![1.0 / 40.0; 40];
        let g: Vec<usize> = (0..40).map(|i| i / 10).collect();
        let ci = blocked_mean_ci(&v, &w, &g, 0.95, 500, 1);
        assert!((ci.estimate - mean(&v)).abs() < 1e-12);
        assert!(ci.lower <= ci.estimate && ci.estimate <= ci.upper);
    }
}
