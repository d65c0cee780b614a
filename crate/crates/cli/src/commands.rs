use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::Value;
use snls_core::density::*;
use snls_core::dynamics::*;
use snls_core::measure::*;
use snls_core::spectral::snapshot::{write_snapshot, SnapshotHeader, SnapshotPack};
use snls_core::spectral::ModeBasis;
use snls_core::spectral::SpectralField;
use snls_core::stats::{linear_fit, quantile_sorted};
use snls_core::stochastic::*;

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{resolve_manifest, sha256_hex, Artifacts, FileDigest, Predicate};
use crate::reports::*;

/// State shared by one run: configuration, the artifact writer and what the
/// manifest will record.
pub struct Run<'a> {
    pub cfg: &'a Config,
    pub input: Option<&'a Path>,
    pub art: Artifacts,
    pub inputs: Vec<FileDigest>,
    pub steps: u64,
    pub predicates: Vec<Predicate>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a Config, input: Option<&'a Path>, art: Artifacts) -> Self {
        Self { cfg, input, art, inputs: Vec::new(), steps: 0, predicates: Vec::new() }
    }

    fn exp(&self) -> Result<Experiment, CliError> {
        Ok(self.cfg.experiment()?)
    }

    fn flow(&self) -> IntegratorOptions {
        let m = &self.cfg.model;
        IntegratorOptions {
            p: m.p,
            dt: m.dt,
            scheme: m.scheme.parse().unwrap_or_default(),
            oversampling: m.oversampling,
            ..Default::default()
        }
    }

    fn check(&mut self, p: Predicate) {
        self.predicates.push(p);
    }

    fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let data = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.inputs.push(FileDigest::of(path.display().to_string(), &data));
        Ok(data)
    }

    /// Pack plus a JSON descriptor `{pack, measure, manifest}` naming it.
    fn write_measure(&mut self, stem: &str, m: &EmpiricalMeasure) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        m.to_pack().write(&mut bytes)?;
        let pack = format!("{stem}.pack");
        self.art.binary(&pack, &bytes)?;
        self.art.json(&format!("{stem}.json"), serde_json::json!({ "pack": pack, "measure": m.manifest() }))
    }

    /// Measure from `--input`, or a fresh Krylov–Bogoliubov sample.
    fn measure(&mut self) -> Result<EmpiricalMeasure, CliError> {
        match self.input {
            Some(path) => self.load_measure(path),
            None => {
                let (exp, plan) = (self.exp()?, self.cfg.plan());
                self.steps += plan.total_steps(exp.config.dt)?;
                let m = krylov_bogoliubov_sample(&exp, &plan)?;
                self.write_measure("measure", &m)?;
                Ok(m)
            }
        }
    }

    fn load_measure(&mut self, path: &Path) -> Result<EmpiricalMeasure, CliError> {
        let bad = |msg: &str| CliError::Input(format!("{}: {msg}", path.display()));
        let text = self.read_input(path)?;
        let desc: Value = serde_json::from_slice(&text).map_err(|e| bad(&e.to_string()))?;
        let manifest = desc.get("manifest").and_then(Value::as_str).ok_or_else(|| bad("missing `manifest`"))?;
        resolve_manifest(path, manifest)?;
        let pack_name = desc.get("pack").and_then(Value::as_str).ok_or_else(|| bad("missing `pack`"))?;
        let measure = desc.get("measure").ok_or_else(|| bad("missing `measure`"))?;
        let provenance: Provenance =
            serde_json::from_value(measure.get("provenance").cloned().unwrap_or(Value::Null)).map_err(|e| bad(&e.to_string()))?;
        let expected = measure.get("pack_sha256").and_then(Value::as_str).ok_or_else(|| bad("missing `pack_sha256`"))?;
        let pack_path = path.parent().unwrap_or(Path::new(".")).join(pack_name);
        let bytes = self.read_input(&pack_path)?;
        if sha256_hex(&bytes) != expected {
            return Err(bad("pack digest does not match its descriptor"));
        }
        let pack = SnapshotPack::read(bytes.as_slice())?;
        Ok(EmpiricalMeasure::from_pack(pack, provenance)?)
    }
}

pub fn simulate(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let exp = run.exp()?;
    let c = &exp.config;
    let sim = &cfg.simulate;
    let basis = c.basis()?;
    let (u0, exact) = match sim.initial.as_str() {
        "plane-wave" => {
            let k = [sim.mode, 0, 0];
            let amp = Complex64::new(sim.amplitude, 0.0);
            let u0 = exact_plane_wave(&basis, k, amp, c.p, 1.0, 0.0)?;
            (u0, Some(exact_plane_wave(&basis, k, amp, c.p, 1.0, sim.horizon)?))
        }
        "power-law" => (power_law_data(&basis, sim.decay, c.s, sim.norm), None),
        other => return Err(CliError::Config(format!("unknown simulate.initial `{other}`"))),
    };
    let opts = IntegratorOptions {
        p: c.p,
        dt: c.dt,
        horizon: sim.horizon,
        scheme: c.scheme,
        stride: sim.stride.max(1),
        sigmas: vec![sim.r, c.s],
        oversampling: c.oversampling,
        shift: 1.0,
    };
    run.steps = opts.steps() as u64;
    let traj = integrate_deterministic(&u0, &opts)?;
    let growth = growth_tracker(&traj, sim.r, &GrowthPair::new(exp.growth), sim.level);
    let last = traj.last().expect("trajectory records t = 0");
    let exact_error = match exact {
        Some(e) => Some(last.sub(&e)?.norm() / e.norm()),
        None => None,
    };
    let data = GrowthData {
        times: traj.times.clone(),
        growth,
        mass_drift: traj.mass_drift(),
        energy_drift: traj.energy_drift(),
        exact_error,
    };
    run.check(Predicate::holds("growth within 2ξ envelope", data.growth.within_bound));
    if let Some(e) = exact_error {
        run.check(Predicate::at_most("plane-wave relative L2 error", e, 1e-6));
    }
    run.art.csv("trajectory.csv", &traj.to_csv())?;
    run.art.report("growth.json", "growth", &data)?;
    let header = SnapshotHeader { dim: c.dim, cutoff: c.cutoff, p: c.p, s: c.s, eps: c.eps };
    let mut snap = Vec::new();
    write_snapshot(&mut snap, &header, last)?;
    run.art.binary("final.snap", &snap)
}

pub fn sde(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let exp = run.exp()?;
    let st = exp.stepper()?;
    let b = st.basis().clone();
    let o = &cfg.sde;
    let steps = (o.horizon / exp.config.dt).round() as usize;
    let spec = EnsembleSpec { runs: o.runs, dt: exp.config.dt, steps, stride: 1, seed: exp.config.seed, first_stream: 0 };
    let zero = |_| SpectralField::zeros(b.clone());
    let mass = ito_mass_balance(&st, &spec, zero)?;
    run.steps = (steps * o.runs) as u64;
    run.check(Predicate::holds("mass balance CI contains 0", mass.pass));
    let energy = if o.energy {
        let e = ito_energy_balance(&st, &spec, zero)?;
        run.steps *= 2;
        run.check(Predicate::holds("energy balance CI contains 0", e.exact_pass));
        Some(e)
    } else {
        None
    };
    run.art.report("sde.json", "sde", &serde_json::json!({ "mass": mass, "energy": energy }))
}

pub fn sample(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let exp = run.exp()?;
    let m = run.measure()?;
    let rep = stationary_report(&m, &exp, &cfg.sampling.tail_radii)?;
    run.check(Predicate::at_most("relative error of Ê𝓜 vs A_0/2", rep.relative_error, 0.10));
    if rep.tail.len() >= 2 {
        run.check(Predicate::holds("tail decreasing", rep.tail_decreasing));
        run.check(Predicate::at_most("tail log-log slope", rep.tail_slope, -0.8));
    }
    let mut csv = String::from("radius,tail\n");
    for t in &rep.tail {
        csv.push_str(&format!("{},{}\n", t.radius, t.value));
    }
    run.art.csv("tail.csv", &csv)?;
    run.art.report("stationary.json", "stationary", &rep)
}

pub fn sweep(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let exp = run.exp()?;
    let (s, sw) = (&cfg.sampling, &cfg.sweep);
    let (report, measures) = inviscid_sweep(&exp, &sw.alphas, s.chains, s.samples_per_chain, s.burn_factor, sw.budget_steps)?;
    for &a in &sw.alphas {
        let plan = SamplingPlan::for_alpha(a, s.chains, s.samples_per_chain).with_burn_in_factor(a, s.burn_factor);
        run.steps += plan.total_steps(exp.config.dt)?;
    }
    for m in &measures {
        run.write_measure(&format!("measure-a{}", m.provenance.alpha), m)?;
    }
    run.check(Predicate::holds("observables continuous in α", report.continuous));
    run.check(Predicate::holds("Ê𝓜 pinned to A_0/2", report.pinned));
    let mut ks = Vec::new();
    if sw.invariance_t > 0.0 {
        let observables = Observable::default_set(exp.config.s);
        let flow = run.flow();
        for m in &measures {
            ks.push(invariance_test(m, sw.invariance_t, &flow, &observables)?.distance);
        }
        let mut csv = String::from("alpha,max_ks\n");
        for (r, d) in report.rows.iter().zip(&ks) {
            csv.push_str(&format!("{},{}\n", r.alpha, d));
        }
        run.art.csv("invariance-trend.csv", &csv)?;
        run.check(Predicate::holds("KS distance decreasing in α", ks.windows(2).all(|w| w[1] < w[0])));
    }
    run.art.csv("sweep.csv", &report.to_csv())?;
    run.art.report("sweep.json", "sweep", &SweepData { report, invariance_t: sw.invariance_t, ks })
}

pub fn invariance(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let m = run.measure()?;
    let o = &cfg.invariance;
    let observables = if o.observables.is_empty() {
        Observable::default_set(cfg.model.s)
    } else {
        o.observables
            .iter()
            .map(|n| Observable::parse(n).ok_or_else(|| CliError::Config(format!("unknown observable `{n}`"))))
            .collect::<Result<_, _>>()?
    };
    let rep = invariance_test(&m, o.t, &run.flow(), &observables)?;
    run.steps += (m.len() as f64 * o.t / cfg.model.dt).round() as u64;
    run.check(Predicate::holds("no observable rejected", rep.pass));
    run.art.report("invariance.json", "invariance", &rep)
}

pub fn sigma(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let m = run.measure()?;
    let o = &cfg.sigma;
    let opts = SigmaOptions {
        r: o.r,
        j_max: o.j_max,
        growth: GrowthPair::new(cfg.sigma_growth()?),
        safety: o.safety,
        levels: o.levels.clone(),
        flow: run.flow(),
    };
    let rep = sigma_ensemble(&m, &opts)?;
    run.check(Predicate::at_most("Poisson slope of rejections", rep.fit.map_or(f64::NAN, |f| f.slope), -1.5));
    run.check(Predicate::holds("admitted envelope ratios ≤ 2", rep.envelope_ok));
    run.art.csv("sigma.csv", &rep.to_csv())?;
    run.art.report("sigma.json", "sigma", &rep)
}

pub fn coupling(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let exp = run.exp()?;
    let c = &cfg.coupling;
    let opts = CouplingOptions { alphas: c.alphas.clone(), t: c.t, ball: c.ball, r_cut: c.r_cut, runs: c.runs, seed: exp.config.seed };
    let rep = coupling_study(&exp, &opts)?;
    run.steps = ((c.alphas.len() + 1) * c.runs) as u64 * (c.t / exp.config.dt).round() as u64;
    run.check(Predicate::holds("coupling error shrinks with α", rep.monotone));
    let mut csv = String::from("alpha,error,error_lo,error_hi,event_fraction\n");
    for r in &rep.rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.alpha, r.error.estimate, r.error.lower, r.error.upper, r.event_fraction));
    }
    run.art.csv("coupling.csv", &csv)?;
    run.art.report("coupling.json", "coupling", &rep)
}

pub fn density(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let m = run.measure()?;
    let (model, o) = (&cfg.model, &cfg.density);
    let mut laws = Vec::new();
    for tag in [ObservableTag::Mass, ObservableTag::Energy] {
        let dist = distribution_of(&m, tag, model.p, model.oversampling)?;
        let mut sorted = dist.values.clone();
        sorted.sort_by(f64::total_cmp);
        let a = quantile_sorted(&sorted, o.a_quantile);
        let bound = dist.density_bound(a, o.bins, o.levels)?;
        let name = dist.tag.name().to_string();
        run.art.csv(&format!("density-{name}.csv"), &dist.to_csv())?;
        laws.push(DensityLaw {
            stable: bound.stable(o.stability),
            tag: dist.tag,
            samples: dist.values.len(),
            bandwidth: dist.bandwidth,
            atoms: dist.atoms,
            histogram: dist.histogram,
            bound,
        });
    }
    for law in &laws {
        let name = law.tag.name();
        run.check(Predicate::at_most(&format!("atoms in the law of {name}"), law.atoms.len() as f64, 0.0));
        run.check(Predicate::holds(&format!("density bound of {name} stable under refinement"), law.stable));
    }
    run.art.report("density.json", "density", &DensityData { measure_id: m.measure_id(), laws })
}

pub fn smallball(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let m = run.measure()?;
    let o = &cfg.smallball;
    let rep = small_ball_probe(&m, &o.deltas, o.slack)?;
    run.check(Predicate::holds("small balls dominated by Cδ", rep.status == SmallBallStatus::Dominated));
    run.art.csv("smallball.csv", &rep.to_csv())?;
    run.art.report("smallball.json", "smallball", &rep)
}

fn scaled_runs(run: &mut Run, lambdas: &[f64]) -> Result<Vec<ScaledRun>, CliError> {
    let cfg = run.cfg;
    let (exp, plan) = (run.exp()?, cfg.plan());
    let mut out = Vec::new();
    for &l in lambdas {
        run.steps += plan.total_steps(exp.config.dt)?;
        out.push(scaled_measure_run(&exp, &plan, l)?);
    }
    Ok(out)
}

pub fn scale(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let runs = scaled_runs(run, &cfg.scale.lambdas)?;
    let x: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
    let y: Vec<f64> = runs.iter().map(|r| r.mass_dissipation.estimate).collect();
    let fit = linear_fit(&x, &y);
    let mut rows = Vec::new();
    let mut csv = String::from("lambda,lambda_n,EM,EM_lo,EM_hi,large_data_threshold\n");
    for r in &runs {
        run.write_measure(&format!("measure-L{}", r.lambda), &r.measure)?;
        let em = r.mass_dissipation;
        csv.push_str(&format!("{},{},{},{},{},{}\n", r.lambda, r.lambda_n, em.estimate, em.lower, em.upper, r.large_data_threshold()));
        rows.push(ScaleRow {
            lambda: r.lambda,
            lambda_n: r.lambda_n,
            factor: r.factor,
            measure_id: r.measure.measure_id(),
            mass_dissipation: em,
            large_data: r.large_data.clone(),
        });
    }
    if runs.len() >= 3 {
        run.check(Predicate::at_least("R² of Ê𝓜 against Λ", fit.r_squared, 0.99));
    }
    let large = runs.iter().all(|r| r.large_data.first().is_some_and(|(_, f)| *f > 0.0));
    run.check(Predicate::holds("positive mass on ‖u‖_s ≥ 1 at every Λ", large));
    run.art.csv("scale.csv", &csv)?;
    run.art.report("scale.json", "scale", &ScaleData { rows, slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared })
}

pub fn cumulative(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let n = cfg.cumulative.max_n;
    if n == 0 {
        return Err(CliError::Config("cumulative.max_n must be at least 1".into()));
    }
    let lambdas: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    let runs = scaled_runs(run, &lambdas)?;
    let measures: Vec<EmpiricalMeasure> = runs.into_iter().map(|r| r.measure).collect();
    let mu = cumulative_measure(&measures, n)?;
    let raw: Vec<f64> = (1..=n).map(|k| 0.5f64.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    let components: Vec<CumulativeComponent> = measures
        .iter()
        .zip(&lambdas)
        .zip(&raw)
        .map(|((m, &lambda), w)| CumulativeComponent {
            lambda,
            weight: w / total,
            measure_id: m.measure_id(),
            mean_mass: m.expectation(|u| u.mass()),
        })
        .collect();
    let mixed_mean_mass = components.iter().map(|c| c.weight * c.mean_mass).sum::<f64>();
    let mean_mass = mu.expectation(|u| u.mass());
    run.check(Predicate::at_most(
        "mixture mean mass consistency",
        (mean_mass - mixed_mean_mass).abs() / mixed_mean_mass.abs().max(f64::MIN_POSITIVE),
        1e-10,
    ));
    run.write_measure("measure-cumulative", &mu)?;
    run.art.report("cumulative.json", "cumulative", &CumulativeData { measure_id: mu.measure_id(), components, mean_mass, mixed_mean_mass })
}

pub fn convergence(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let (model, o) = (&cfg.model, &cfg.convergence);
    let reference = Arc::new(ModeBasis::new(model.dim, o.reference_cutoff, model.full_shell)?);
    let u0 = power_law_data(&reference, o.decay, model.s, o.norm);
    let opts = ConvergenceOptions {
        p: model.p,
        s: model.s,
        r: o.r,
        dt: o.dt,
        horizon: o.horizon,
        cutoffs: o.cutoffs.clone(),
        samples: o.samples,
        reference_refinement: o.reference_refinement,
        scheme: model.scheme.parse()?,
    };
    let rep = galerkin_convergence_study(&u0, &opts)?;
    run.steps = ((o.horizon / o.dt).round() as u64) * (o.cutoffs.len() as u64 + o.reference_refinement as u64);
    run.check(Predicate::at_most("relative slope deviation", rep.relative_slope_error, 0.25));
    let mut csv = String::from("cutoff,modes,top_eigenvalue,error\n");
    for r in &rep.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.cutoff, r.modes, r.top_eigenvalue, r.error));
    }
    run.art.csv("convergence.csv", &csv)?;
    run.art.report("convergence.json", "convergence", &rep)
}

/// Closed-form self-tests, independent of the configuration.
pub fn oracle(run: &mut Run) -> Result<(), CliError> {
    let mut rows: Vec<OracleRow> = Vec::new();
    let mut push = |name: &str, value: f64, limit: f64| {
        let pass = value <= limit;
        rows.push(OracleRow { name: name.into(), value, limit, pass });
    };

    let b = Arc::new(ModeBasis::new(1, 8, true)?);
    let (p, c, k) = (7.0, Complex64::new(0.5, 0.0), [2, 0, 0]);
    let u0 = exact_plane_wave(&b, k, c, p, 1.0, 0.0)?;
    let opts = IntegratorOptions { p, dt: 1e-4, horizon: 1.0, stride: usize::MAX, sigmas: vec![], ..Default::default() };
    let traj = integrate_deterministic(&u0, &opts)?;
    let exact = exact_plane_wave(&b, k, c, p, 1.0, 1.0)?;
    push("plane wave relative L2 error", traj.last().expect("final state").sub(&exact)?.norm() / exact.norm(), 1e-6);

    let mut rng = RngStream::new(11, 0);
    let coeffs = b.eigenvalues().map(|l| Complex64::new(rng.normal(), rng.normal()) * (1.0 + l).powf(-1.5)).collect();
    let u = SpectralField::from_coeffs(b.clone(), coeffs)?;
    let opts = IntegratorOptions { p, dt: 1e-3, horizon: 0.5, stride: 50, sigmas: vec![], ..Default::default() };
    push("mass drift of the truncated flow", integrate_deterministic(&u, &opts)?.mass_drift(), 1e-10);

    let u = u.scaled(1.0 / u.sobolev_norm(2.0));
    let (_, cert) = picard_local_solve(&u, &PicardOptions { horizon: local_existence_time(1.0, p, 1.0), ..Default::default() })?;
    push("Picard iterate contraction ratio", cert.worst_ratio(), 0.5);

    let noise = NoiseSpec::power_law(&b, 2.0, 3.0);
    let ou = ou_moment_check(&b, &noise, 0.5, 2.0, &[1.0, f64::INFINITY], 4000, 21)?;
    push("OU second moments, max |z|", ou.max_abs_z, 4.0);

    let (x, w) = gauss_legendre(8);
    let poly = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum::<f64>();
    push("Gauss-Legendre exactness, degree 14", (poly - 2.0 / 15.0).abs(), 1e-13);

    let g = Bump::new(0.0, 1.0, 1.0)?;
    let worst = residual_table(&g, &[0.1, 1.0, 10.0], 64, 16)?.iter().map(|r| r.residual).fold(0.0, f64::max);
    push("resolvent ODE relative residual", worst, 1e-6);

    for r in &rows {
        run.check(Predicate::at_most(&r.name, r.value, r.limit));
    }
    run.art.report("oracle.json", "oracle", &rows)
}
