//! End-to-end acceptance suite. Every test prints one `criterion N: PASS|FAIL`
//! line with the measured quantities, then asserts.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use num_complex::Complex64;
use snls_core::density::*;
use snls_core::dynamics::*;
use snls_core::measure::*;
use snls_core::spectral::*;
use snls_core::stats::linear_fit;
use snls_core::stochastic::*;

fn report(n: u32, pass: bool, detail: String, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n:>2}: {verdict}  {detail}  ({:.1}s)", started.elapsed().as_secs_f64());
}

fn reference_plan() -> SamplingPlan {
    SamplingPlan::for_alpha(0.5, 40, 100).with_burn_in_factor(0.5, 20.0)
}

fn reference_measure() -> &'static EmpiricalMeasure {
    static M: OnceLock<EmpiricalMeasure> = OnceLock::new();
    M.get_or_init(|| krylov_bogoliubov_sample(&Experiment::reference(), &reference_plan()).unwrap())
}

fn reference_report() -> &'static StationaryReport {
    static R: OnceLock<StationaryReport> = OnceLock::new();
    R.get_or_init(|| stationary_report(reference_measure(), &Experiment::reference(), &[1.0, 2.0, 4.0, 8.0]).unwrap())
}

#[test]
fn criterion_01_plane_wave() {
    let started = Instant::now();
    let b = Arc::new(ModeBasis::new(1, 8, true).unwrap());
    let (p, c, k) = (7.0, Complex64::new(0.5, 0.0), [2, 0, 0]);
    let u0 = exact_plane_wave(&b, k, c, p, 1.0, 0.0).unwrap();
    let opts = IntegratorOptions { p, dt: 1e-4, horizon: 1.0, stride: usize::MAX, sigmas: vec![], ..Default::default() };
    let traj = integrate_deterministic(&u0, &opts).unwrap();
    let exact = exact_plane_wave(&b, k, c, p, 1.0, 1.0).unwrap();
    let err = traj.last().unwrap().sub(&exact).unwrap().norm() / exact.norm();
    let pass = err <= 1e-6;
    report(1, pass, format!("relative L2 error {err:.3e} (≤ 1e-6)"), started);
    assert!(pass);
}

#[test]
fn criterion_02_picard_contraction() {
    let started = Instant::now();
    let b = Arc::new(ModeBasis::new(1, 16, true).unwrap());
    let mut worst: f64 = 0.0;
    let mut bound = true;
    for seed in 0..5 {
        let mut rng = RngStream::new(seed, 0);
        let c = b.eigenvalues().map(|l| Complex64::new(rng.normal(), rng.normal()) * (1.0 + l).powf(-1.5)).collect();
        let u = SpectralField::from_coeffs(b.clone(), c).unwrap();
        let u0 = u.scaled(1.0 / u.sobolev_norm(2.0));
        let opts = PicardOptions { horizon: local_existence_time(1.0, 7.0, 1.0), ..Default::default() };
        let (_, cert) = picard_local_solve(&u0, &opts).unwrap();
        worst = worst.max(cert.worst_ratio());
        bound &= cert.bound_holds;
    }
    let pass = worst <= 0.5 && bound;
    report(2, pass, format!("worst iterate ratio {worst:.3e} (≤ 0.5), sup ‖u‖_s ≤ 2‖u0‖_s: {bound}"), started);
    assert!(pass);
}

#[test]
fn criterion_03_galerkin_rate() {
    let started = Instant::now();
    let reference = Arc::new(ModeBasis::new(1, 256, true).unwrap());
    // |u_k|² ~ (1+k²)^{-2.6}: in H^s for s < 2.1
    let u0 = power_law_data(&reference, 2.6, 2.0, 1.0);
    let opts = ConvergenceOptions {
        p: 7.0,
        s: 2.0,
        r: 1.0,
        dt: 1.0 / 128.0 / 64.0,
        horizon: 1.0 / 128.0,
        cutoffs: vec![8, 16, 32, 64],
        samples: 8,
        reference_refinement: 4,
        scheme: Scheme::StrangSplitting,
    };
    let rep = galerkin_convergence_study(&u0, &opts).unwrap();
    let pass = rep.relative_slope_error <= 0.25;
    report(
        3,
        pass,
        format!("slope {:.4} vs {:.2}, relative deviation {:.3} (≤ 0.25)", rep.slope, rep.expected_slope, rep.relative_slope_error),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_04_ou_moments() {
    let started = Instant::now();
    let exp = Experiment::reference();
    let b = exp.basis().unwrap();
    let noise = exp.noise(&b);
    let alpha = exp.config.alpha;
    let r = ou_moment_check(&b, &noise, alpha, exp.config.s, &[1.0 / (2.0 * alpha), f64::INFINITY], 10_000, 4).unwrap();
    let pass = r.within(3.0);
    report(4, pass, format!("{} mode/time pairs, max |z| = {:.2} (≤ 3)", r.rows.len(), r.max_abs_z), started);
    assert!(pass);
}

#[test]
fn criterion_05_ito_mass_balance() {
    let started = Instant::now();
    let exp = Experiment::reference();
    let st = exp.stepper().unwrap();
    let b = st.basis().clone();
    let spec = EnsembleSpec { runs: 500, dt: 1e-3, steps: 1000, stride: 1, seed: 5, first_stream: 0 };
    let r = ito_mass_balance(&st, &spec, |_| SpectralField::zeros(b.clone())).unwrap();
    report(
        5,
        r.pass,
        format!(
            "residual {:.3e}, 99% CI [{:.3e}, {:.3e}] over {} paths",
            r.residual.estimate, r.residual.lower, r.residual.upper, r.runs
        ),
        started,
    );
    assert!(r.pass);
}

#[test]
fn criterion_06_stationary_identity() {
    let started = Instant::now();
    let r = reference_report();
    let pass = r.relative_error <= 0.10;
    report(
        6,
        pass,
        format!(
            "Ê𝓜 = {:.4} [{:.4}, {:.4}], A0/2 = {:.4}, relative error {:.3} (≤ 0.10)",
            r.mass_dissipation.estimate, r.mass_dissipation.lower, r.mass_dissipation.upper, r.mass_target, r.relative_error
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_07_tail_bound() {
    let started = Instant::now();
    let r = reference_report();
    let pass = r.tail_decreasing && r.tail_slope <= -0.8;
    let values: Vec<String> = r.tail.iter().map(|t| format!("{:.3e}", t.value)).collect();
    report(7, pass, format!("tail at R=1,2,4,8: [{}], slope {:.3} (≤ -0.8)", values.join(", "), r.tail_slope), started);
    assert!(pass);
}

#[test]
fn criterion_08_invariance_trend() {
    let started = Instant::now();
    let exp = Experiment::reference();
    let (_, measures) = inviscid_sweep(&exp, &[0.5, 0.25, 0.1], 40, 100, 20.0, None).unwrap();
    let flow = IntegratorOptions { p: exp.config.p, dt: exp.config.dt, ..Default::default() };
    let observables = Observable::default_set(exp.config.s);
    let distances: Vec<f64> = measures.iter().map(|m| invariance_test(m, 1.0, &flow, &observables).unwrap().distance).collect();
    let pass = distances.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = distances.iter().map(|d| format!("{d:.4}")).collect();
    report(8, pass, format!("max KS at α = 0.5, 0.25, 0.1: [{}], decreasing", shown.join(", ")), started);
    assert!(pass);
}

#[test]
fn criterion_09_sigma_ensemble() {
    let started = Instant::now();
    let mut exp = Experiment::reference();
    exp.growth = GrowthKind::Linear(3.0);
    exp.noise_scale = 20.0;
    let plan = SamplingPlan::for_alpha(0.5, 50, 30).with_burn_in_factor(0.5, 20.0);
    let m = krylov_bogoliubov_sample(&exp, &plan).unwrap();
    let opts = SigmaOptions {
        r: 1.0,
        j_max: 3,
        growth: GrowthPair::new(exp.growth),
        flow: IntegratorOptions { p: exp.config.p, dt: exp.config.dt, ..Default::default() },
        ..Default::default()
    };
    let r = sigma_ensemble(&m, &opts).unwrap();
    let slope = r.fit.map_or(f64::NAN, |f| f.slope);
    let pass = slope <= -1.5 && r.envelope_ok;
    report(
        9,
        pass,
        format!(
            "rejections {:?} of {}, fitted slope {slope:.3} (≤ -1.5), max admitted envelope {:.3} (≤ 2)",
            r.rejected,
            r.samples,
            r.admitted_envelope.iter().cloned().fold(0.0, f64::max)
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_10_resolvent_ode() {
    let started = Instant::now();
    let g = Bump::new(0.0, 1.0, 1.0).unwrap();
    let rows = residual_table(&g, &[0.1, 1.0, 10.0], 64, 16).unwrap();
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let pass = worst <= 1e-6;
    report(10, pass, format!("max relative residual {worst:.3e} over λ = 0.1, 1, 10 (≤ 1e-6)"), started);
    assert!(pass);
}

#[test]
fn criterion_11_small_ball() {
    let started = Instant::now();
    let deltas = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    let r = small_ball_probe(reference_measure(), &deltas, 1.0).unwrap();
    let pass = r.status == SmallBallStatus::Dominated;
    let shown: Vec<String> = r.probabilities.iter().map(|p| format!("{p:.5}")).collect();
    report(
        11,
        pass,
        format!("P(‖u‖<δ) = [{}], C = {:.4}, worst ratio {:.3} (≤ 2)", shown.join(", "), r.slope, r.worst_ratio),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_12_measure_scaling() {
    let started = Instant::now();
    let exp = Experiment::reference();
    let plan = reference_plan();
    let runs: Vec<ScaledRun> = [1.0, 2.0, 4.0].iter().map(|&l| scaled_measure_run(&exp, &plan, l).unwrap()).collect();
    let x: Vec<f64> = runs.iter().map(|r| r.lambda).collect();
    let y: Vec<f64> = runs.iter().map(|r| r.mass_dissipation.estimate).collect();
    let fit = linear_fit(&x, &y);
    let thresholds: Vec<u32> = runs.iter().map(ScaledRun::large_data_threshold).collect();
    let large = runs.iter().all(|r| r.large_data.first().is_some_and(|(_, f)| *f > 0.0));
    let pass = fit.r_squared >= 0.99 && large;
    let ratios: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.mass_dissipation.estimate / (r.lambda_n / 2.0))).collect();
    report(
        12,
        pass,
        format!(
            "Ê𝓜 = {y:.4?}, R² = {:.4} (≥ 0.99), Ê𝓜/(Λ_N/2) = [{}], largest n with μ(‖u‖_s ≥ n) > 0: {thresholds:?}",
            fit.r_squared,
            ratios.join(", ")
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_13_determinism() {
    let started = Instant::now();
    let m = reference_measure();
    let (exp, plan) = Experiment::from_provenance(&m.provenance).unwrap();
    let again = krylov_bogoliubov_sample(&exp, &plan).unwrap();
    let bytes = |m: &EmpiricalMeasure| {
        let mut out = Vec::new();
        m.to_pack().write(&mut out).unwrap();
        out
    };
    let pass = bytes(m) == bytes(&again) && m.pack_digest() == again.pack_digest();
    report(13, pass, format!("pack digest {} reproduced from provenance: {pass}", m.pack_digest()), started);
    assert!(pass);
}
