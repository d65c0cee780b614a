use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use snls_core::measure::Experiment;
use snls_core::spectral::{ModeBasis, Scheme, SpectralField};
use snls_core::stochastic::*;

fn basis() -> Arc<ModeBasis> {
    Arc::new(ModeBasis::new(1, 6, true).unwrap())
}

#[test]
fn running_supremum_obeys_the_doob_factor() {
    let b = basis();
    let noise = NoiseSpec::power_law(&b, 2.0, 1.0);
    let r = ou_sup_ratio(&b, &noise, 0.5, 2.0, 0.5, 1e-2, 10_000, 3).unwrap();
    assert!(r.ratio.estimate >= 1.0, "{r:?}");
    assert!(r.ratio.upper <= 4.0, "{r:?}");
    assert!(r.mean_sup >= r.mean_terminal);
}

#[test]
fn short_time_moments_match_the_closed_form() {
    let b = basis();
    let noise = NoiseSpec::power_law(&b, 2.0, 3.0);
    let r = ou_moment_check(&b, &noise, 0.25, 2.0, &[0.1, 1.0, f64::INFINITY], 4000, 11).unwrap();
    assert_eq!(r.rows.len(), 3 * b.len());
    assert!(r.within(4.0), "max |z| = {}", r.max_abs_z);
}

#[test]
fn moment_check_rejects_bad_times() {
    let b = basis();
    let noise = NoiseSpec::zero(&b);
    assert!(ou_moment_check(&b, &noise, 0.5, 2.0, &[1.0, 0.5], 10, 0).is_err());
    assert!(ou_moment_check(&b, &noise, 0.0, 2.0, &[1.0], 10, 0).is_err());
}

#[test]
fn mass_balance_closes_on_the_reference_model() {
    let exp = Experiment::reference();
    let b = exp.basis().unwrap();
    let st = SdeStepper::new(b.clone(), exp.config.p, exp.config.alpha, exp.damping(), exp.noise(&b), Scheme::StrangSplitting, 2.0)
        .unwrap();
    let spec = EnsembleSpec { runs: 200, dt: 1e-3, steps: 200, stride: 1, seed: 5, first_stream: 0 };
    let start = |_| {
        let c = (0..b.len()).map(|i| Complex64::new(0.3, -0.1) / (1.0 + b.eigenvalue(i))).collect();
        SpectralField::from_coeffs(b.clone(), c).unwrap()
    };
    let r = ito_mass_balance(&st, &spec, start).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.forcing > 0.0 && r.dissipation > 0.0);
}

#[test]
fn ensembles_do_not_depend_on_the_thread_count() {
    let b = basis();
    let noise = NoiseSpec::power_law(&b, 2.0, 1.0);
    let damping = Damping { s: 2.0, eps: 0.25, growth: GrowthPair::new(GrowthKind::Log1p), argument: RhoArgument::Norm };
    let st = SdeStepper::new(b.clone(), 3.0, 0.5, damping, noise, Scheme::StrangSplitting, 2.0).unwrap();
    let spec = EnsembleSpec { runs: 8, dt: 1e-3, steps: 50, stride: 10, seed: 9, first_stream: 0 };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sde_ensemble(&st, &spec, |_| SpectralField::zeros(b.clone()), |u, _| u.mass()).unwrap())
    };
    let one = run(1);
    assert_eq!(one.len(), 8);
    assert!(one.iter().all(|p| p.len() == 6));
    assert_eq!(one, run(3));
}

#[test]
fn cutoff_derivative_bounds_hold() {
    for r in [0.5, 1.0, 4.0] {
        for order in [1, 2] {
            let c = check_derivative_bound(r, order, 20_000);
            assert!(c.holds, "{c:?}");
            assert!(c.finite_difference_error < 1e-3, "{c:?}");
        }
    }
}

proptest! {
    #[test]
    fn cutoff_is_a_monotone_partition(x in 0.0f64..10.0, r in 0.1f64..5.0) {
        let [c, d, _] = chi_r(x, r);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(d <= 1e-15);
        if x <= r { prop_assert_eq!(c, 1.0); }
        if x >= 2.0 * r { prop_assert_eq!(c, 0.0); }
    }

    #[test]
    fn growth_inverse_round_trips(y in 0.0f64..50.0) {
        for kind in [GrowthKind::Log1p, GrowthKind::Linear(3.0)] {
            let g = GrowthPair::new(kind);
            let x = g.xi_inv(y);
            prop_assert!((g.xi(x) - y).abs() <= 1e-9 * (1.0 + y));
        }
    }

    #[test]
    fn variance_increment_is_positive_and_bounded(a in 0.01f64..5.0, gamma in 0.0f64..20.0, h in 1e-4f64..1.0) {
        let v = integrated_variance(0.5, a, gamma, h);
        prop_assert!(v > 0.0);
        prop_assert!(v <= 0.5 * a * a * h * (1.0 + 1e-12));
    }
}
