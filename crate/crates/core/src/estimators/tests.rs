use super::*;
use crate::amplifiers::{prepare_meters, simulate_output_moments};
use crate::fock::{partial_trace, quadrature_ops};

const TRIALS: usize = 100_000;

fn fock(dim: usize, n: usize) -> State {
    make_state(FockSpace::new(dim).unwrap(), StateKind::Fock { n }).unwrap()
}

fn coherent(dim: usize, re: f64) -> State {
    make_state(FockSpace::new(dim).unwrap(), StateKind::Coherent { re, im: 0.0 }).unwrap()
}

fn vn_plan(input: State, g: f64, eta: f64, trials: usize, seed: u64) -> TrialPlan {
    let f = number_op(FockSpace::new(input.dim()).unwrap());
    TrialPlan::nonlinear(
        AmplifierSpec::VonNeumann { f, g },
        input,
        DetectorSpec::homodyne(eta).unwrap(),
        trials,
        seed,
    )
}

fn lin_plan(input: State, g: f64, trials: usize, seed: u64) -> TrialPlan {
    TrialPlan::linear(g, input, DetectorSpec::heterodyne(1.0).unwrap(), trials, seed)
}

#[test]
fn number_eigenstate_through_nonlinear_amp() {
    let r = run_nonlinear_estimation(&vn_plan(fock(12, 2), 3.0, 1.0, TRIALS, 42)).unwrap();
    assert_eq!(r.analytic_mean, 2.0);
    assert!((r.analytic_variance - 1.0 / 36.0).abs() < 1e-15);
    assert!(r.within(3.0), "{r:?}");
}

#[test]
fn coherent_input_through_nonlinear_amp() {
    let r = run_nonlinear_estimation(&vn_plan(coherent(30, SQRT_2), 2.0, 1.0, TRIALS, 42)).unwrap();
    assert!((r.analytic_variance - (2.0 + 1.0 / 16.0)).abs() < 1e-9);
    assert!(r.within(3.0), "{r:?}");
}

#[test]
fn large_gain_approaches_projective_variance() {
    let r = run_nonlinear_estimation(&vn_plan(fock(12, 2), 50.0, 1.0, TRIALS, 42)).unwrap();
    assert!(r.variance < 1e-3);
}

#[test]
fn two_mode_amplifier_gives_the_same_records() {
    let input = coherent(20, 1.0);
    let f = number_op(FockSpace::new(20).unwrap());
    let det = DetectorSpec::homodyne(0.8).unwrap();
    let a = TrialPlan::nonlinear(AmplifierSpec::TwoModeNormal { f: f.clone(), g: 1.5 }, input.clone(), det, 500, 1);
    let b = TrialPlan::nonlinear(AmplifierSpec::VonNeumann { f, g: 1.5 }, input, det, 500, 1);
    assert_eq!(sample_records(&a).unwrap(), sample_records(&b).unwrap());
}

#[test]
fn linear_number_estimator_examples() {
    for (input, var) in [(fock(12, 2), 3.0), (coherent(30, SQRT_2), 5.0), (fock(8, 0), 1.0)] {
        let r = run_linear_number_estimation(&lin_plan(input, 2.0, TRIALS, 42)).unwrap();
        assert!((r.analytic_variance - var).abs() < 1e-9, "{}", r.analytic_variance);
        assert!(r.within(3.0), "{r:?}");
    }
}

#[test]
fn record_power_identity() {
    for g in [1.0, 1.5] {
        let p = heterodyne_record_power(&lin_plan(coherent(30, SQRT_2), g, TRIALS, 42)).unwrap();
        assert!((p.analytic - 3.0 * g * g).abs() < 1e-9);
        assert!((p.mean - p.analytic).abs() < 3.0 * p.standard_error, "{p:?}");
    }
}

#[test]
fn smeared_detectors_match_their_formulas() {
    let r = run_nonlinear_estimation(&vn_plan(coherent(20, 1.0), 1.0, 0.5, TRIALS, 42)).unwrap();
    assert!(r.within(3.0), "{r:?}");
    let mut p = lin_plan(coherent(20, 1.0), 1.5, TRIALS, 42);
    p.detector = DetectorSpec::heterodyne(0.6).unwrap();
    let r = run_linear_number_estimation(&p).unwrap();
    assert!(r.within(3.0), "{r:?}");
}

#[test]
fn squeezed_meter_lowers_the_variance() {
    let r = 0.8;
    let plan = vn_plan(fock(12, 1), 1.0, 1.0, TRIALS, 42).with_meter(StateKind::SqueezedVacuum { r, phi: 0.0 });
    let rep = run_nonlinear_estimation(&plan).unwrap();
    assert!((rep.analytic_variance - (-2.0 * r).exp() / 4.0).abs() < 1e-12);
    assert!(rep.analytic_basis.starts_with("derived"));
    assert!(rep.within(3.0), "{rep:?}");
}

#[test]
fn records_match_the_evolved_meter_marginal() {
    let input = coherent(16, 0.8);
    let f = number_op(FockSpace::new(16).unwrap());
    for meter in [
        StateKind::SqueezedVacuum { r: 0.5, phi: 0.0 },
        StateKind::Fock { n: 1 },
        StateKind::Coherent { re: 0.5, im: 0.0 },
    ] {
        let spec = AmplifierSpec::VonNeumann { f: f.clone(), g: 1.2 };
        let meters = prepare_meters(&spec, &[meter]).unwrap();
        let mom = simulate_output_moments(&spec, &input, &meters).unwrap();
        let plan = TrialPlan::nonlinear(spec, input.clone(), DetectorSpec::homodyne(1.0).unwrap(), TRIALS, 42)
            .with_meter(meter);
        let y: Vec<f64> = sample_records(&plan).unwrap().iter().map(|z| z.re).collect();
        let st = sample_stats(&y);
        assert!((st.mean - mom.quad_means.0).abs() < 3.0 * st.se_mean, "{meter:?}");
        assert!((st.variance - mom.quad_noises.0).abs() < 3.0 * st.se_variance, "{meter:?}");
    }
}

#[test]
fn gaussian_meter_variances_match_the_prepared_states() {
    let s = FockSpace::new(60).unwrap();
    let (x, _) = quadrature_ops(s);
    for kind in [
        StateKind::SqueezedVacuum { r: 0.6, phi: 0.7 },
        StateKind::SqueezedVacuum { r: 0.4, phi: 0.0 },
        StateKind::GaussianMeter { epsilon: 0.6 },
        StateKind::Coherent { re: 0.3, im: 1.0 },
    ] {
        let (_, m, v) = MeterDraw::new(kind).unwrap();
        let st = make_state(s, kind).unwrap();
        assert!((variance(&st, &x).unwrap() - v).abs() < 1e-9, "{kind:?}");
        assert!((crate::fock::expectation(&st, &x).unwrap().re - m).abs() < 1e-9, "{kind:?}");
    }
}

/// Output Husimi density of the full two-mode evolution against the
/// stretched input density used by the sampler.
#[test]
fn linear_shortcut_matches_the_unitary() {
    let husimi = |st: &State, b: C64| {
        let comps = st.components().unwrap();
        let coh = crate::fock::coherent_coefficients(b, st.dim());
        comps
            .iter()
            .map(|(w, v)| w * coh.iter().zip(v).map(|(c, x)| c.conj() * x).sum::<C64>().norm_sqr())
            .sum::<f64>()
            / std::f64::consts::PI
    };
    for (input, g) in [(fock(10, 2), 1.5), (coherent(16, 0.7), 1.2)] {
        let meter = fock(input.dim(), 0);
        let spec = AmplifierSpec::Linear { g };
        let out = crate::amplifiers::simulate_output_state(&spec, &input, &[meter]).unwrap();
        let a = partial_trace(&out, &[0]).unwrap();
        for b in [C64::new(0.0, 0.0), C64::new(1.2, -0.4), C64::new(-0.8, 2.0)] {
            let want = husimi(&input, b / g) / (g * g);
            assert!((husimi(&a, b) - want).abs() < 1e-10, "{g} {b}");
        }
    }
}

#[test]
fn comparison_examples() {
    let c = compare_schemes(&coherent(20, 1.0), 1.0, 1.0, TRIALS, 42).unwrap();
    assert!((c.nonlinear.analytic_variance - 1.25).abs() < 1e-9);
    assert!((c.linear.analytic_variance - 3.0).abs() < 1e-9);
    assert!(c.improvement && c.analytic_improvement);

    let c = compare_schemes(&fock(8, 0), 0.4, 1.0, TRIALS, 42).unwrap();
    assert!((c.nonlinear.analytic_variance - 1.5625).abs() < 1e-12);
    assert_eq!(c.linear.gain, 1.0);
    assert!((c.linear.analytic_variance - 1.0).abs() < 1e-12);
    assert!(!c.improvement && !c.analytic_improvement);

    let c = compare_schemes(&fock(8, 3), 10.0, 1.0, 20_000, 42).unwrap();
    assert!((c.nonlinear.analytic_variance - 0.0025).abs() < 1e-15);
    assert!(c.linear.variance >= 1.0 && c.improvement);
}

#[test]
fn unbiased_across_seeds() {
    let mut ok = 0;
    for seed in 0..20 {
        let r = run_nonlinear_estimation(&vn_plan(coherent(20, 1.0), 1.0, 1.0, 4000, seed)).unwrap();
        ok += (r.z_scores.mean.abs() < 3.0) as usize;
    }
    assert!(ok * 100 >= 99 * 20, "{ok}/20");
}

#[test]
fn streams_do_not_depend_on_thread_count() {
    let plan = lin_plan(coherent(20, 1.0), 1.3, 3000, 9);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| sample_estimates(&plan).unwrap());
    let b = four.install(|| sample_estimates(&plan).unwrap());
    assert_eq!(a, b);
    let mut other = plan.clone();
    other.seed = 10;
    assert_ne!(a, sample_estimates(&other).unwrap());
}

#[test]
fn snr_values() {
    assert_eq!(snr_report(2, 3.0, 0.0), 12.0);
    assert_eq!(snr_report(0, 3.0, 1.0), 0.0);
    assert!((snr_report(1, 2.0, 1.0) - 4.0 * std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn snr_from_simulated_moments() {
    for (n, g, r) in [(2usize, 1.5, 0.0), (1, 2.0, 0.5)] {
        let input = fock(8, n);
        let f = number_op(FockSpace::new(8).unwrap());
        let spec = AmplifierSpec::VonNeumann { f, g };
        let meters = prepare_meters(&spec, &[StateKind::SqueezedVacuum { r, phi: 0.0 }]).unwrap();
        let m = simulate_output_moments(&spec, &input, &meters).unwrap();
        let snr = m.quad_means.0 / m.quad_noises.0.sqrt();
        assert!((snr - snr_report(n, g, r)).abs() < 1e-6, "{snr}");
    }
}

#[test]
fn plan_validation() {
    let p = vn_plan(fock(6, 1), 1.0, 1.0, 0, 1);
    assert!(matches!(p.validate(), Err(Error::InvalidParameter { ref name, .. }) if name == "trials"));
    assert!(matches!(lin_plan(fock(6, 1), 0.5, 10, 1).validate(), Err(Error::GainOutOfRange(_))));
    let mut p = lin_plan(fock(6, 1), 1.5, 10, 1);
    p.detector = DetectorSpec::homodyne(1.0).unwrap();
    assert!(p.validate().is_err());
    let a = crate::fock::annihilation_op(FockSpace::new(6).unwrap());
    let p = TrialPlan::nonlinear(
        AmplifierSpec::TwoModeNormal { f: a, g: 1.0 },
        fock(6, 1),
        DetectorSpec::homodyne(1.0).unwrap(),
        10,
        1,
    );
    assert!(p.validate().is_err());
}
