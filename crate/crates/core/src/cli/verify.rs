//! The invariant matrix behind `nlamp verify`.

use std::f64::consts::{E, SQRT_2};

use rand::Rng;
use serde::Serialize;

use super::commands::{input_state, meter_states};
use super::config::RunConfig;
use crate::amplifiers::{
    guarded_columns, predict_output_moments, quadratic_signal_op, simulate_output_moments, single_mode_operators,
    two_mode_unitary, two_mode_unitary_dense, two_mode_unitary_factored, AmplifierSpec, SignalFunction,
};
use crate::error::Result;
use crate::estimators::{
    heterodyne_record_power, run_linear_number_estimation, run_nonlinear_estimation, snr_report, TrialPlan,
};
use crate::fock::{
    annihilation_op, creation_op, cv_swap, guarded_levels, make_state, normal_decompose, number_op, partial_trace,
    quadrature_ops, tensor_states, FockSpace, Operator, StateKind, C64,
};
use crate::measurement::{
    effective_povm_closed_form, effective_povm_numeric, heterodyne_element, homodyne_element, own_region_weights,
    sample_outcome, trial_rng, ClosedFormModel, DecisionRegions, DetectorSpec, GridSpec,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

fn below(name: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        name: name.into(),
        value,
        bound,
        pass: value.is_finite() && value < bound,
    }
}

fn flag(name: impl Into<String>, ok: bool) -> Check {
    Check {
        name: name.into(),
        value: if ok { 1.0 } else { 0.0 },
        bound: 1.0,
        pass: ok,
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Checks tied to the configured amplifier, one set per gain.
fn config_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let input = input_state(cfg)?;
    out.push(below("input state normalized", (input.populations().iter().sum::<f64>() - 1.0).abs(), 1e-12));
    for g in cfg.gain_list() {
        let spec = cfg.amplifier.build(cfg.dim, g)?;
        if let Some(f) = spec.signal_op() {
            let d = normal_decompose(f, None)?;
            let scale = f.max_abs().max(1.0);
            out.push(below(format!("g={g}: spectral reconstruction"), d.residual / scale, 1e-10));
            out.push(below(format!("g={g}: eigenvectors orthonormal"), d.orthonormality_residual(), 1e-10));
        }
        let meters = meter_states(cfg, &spec)?;
        let sim = simulate_output_moments(&spec, &input, &meters)?;
        let pred = predict_output_moments(&spec, &input, &meters)?;
        out.push(below(format!("g={g}: output mean matches prediction"), (sim.mean_out - pred.mean_out).norm(), 1e-6));
        out.push(below(
            format!("g={g}: added noise matches prediction"),
            (sim.added_noise - pred.added_noise).abs(),
            1e-6,
        ));
    }
    Ok(out)
}

fn ladder_checks() -> Result<Vec<Check>> {
    let s = FockSpace::new(16)?;
    let keep: Vec<usize> = guarded_levels(16).collect();
    let a = annihilation_op(s);
    let id = Operator::identity(vec![16]);
    let comm = a.commutator(&creation_op(s))?;
    let (x, p) = quadrature_ops(s);
    let xp = x.commutator(&p)?.scale(C64::new(0.0, -1.0));
    let swap = cv_swap(&[4, 4], 0, 1)?;
    let s12 = FockSpace::new(12)?;
    let u = make_state(s12, StateKind::Fock { n: 1 })?;
    let v = make_state(s12, StateKind::coherent(c(0.4)))?;
    let prod = tensor_states(&[&u, &v])?;
    let back = partial_trace(&prod, &[1])?;
    Ok(vec![
        below("[a, a†] = 1 on guarded levels", comm.restricted_distance(&id, &keep)?, 1e-12),
        below("[x, p] = i on guarded levels", xp.restricted_distance(&id, &keep)?, 1e-12),
        below("CV swap squares to identity", swap.mul(&swap)?.distance(&Operator::identity(vec![4, 4]))?, 1e-14),
        below("partial trace recovers the factor", 1.0 - back.overlap(&v)?, 1e-12),
    ])
}

fn amplifier_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let s8 = FockSpace::new(8)?;
    let n8 = number_op(s8);
    for g in [0.5, 2.0] {
        let spec = AmplifierSpec::TwoModeNormal { f: n8.clone(), g };
        let meters = prepare_vacuum(&spec)?;
        let m = simulate_output_moments(&spec, &make_state(s8, StateKind::Fock { n: 2 })?, &meters)?;
        out.push(below(format!("two-mode added noise 1/2 at g={g}"), (m.added_noise - 0.5).abs(), 1e-6));
    }
    let s20 = FockSpace::new(20)?;
    for g in [1.5, 2.0] {
        let spec = AmplifierSpec::Linear { g };
        let vac = make_state(s20, StateKind::vacuum())?;
        let m = simulate_output_moments(&spec, &make_state(s20, StateKind::Fock { n: 1 })?, &[vac])?;
        out.push(below(
            format!("linear added noise (g²−1)/2 at g={g}"),
            (m.added_noise - (g * g - 1.0) / 2.0).abs(),
            1e-6,
        ));
        out.push(flag(format!("nonlinear 1/2 below linear at g={g}"), 0.5 < m.added_noise));
    }
    let f6 = number_op(FockSpace::new(6)?);
    let dense = two_mode_unitary_dense(&f6, 1.0, 30)?;
    let fact = two_mode_unitary_factored(&f6, 1.0, 30)?;
    let cols = guarded_columns(&two_mode_unitary(&f6, 1.0, 30)?, 1e-9);
    out.push(below("Zassenhaus factorization on guarded columns", dense.column_distance(&fact, &cols)?, 1e-8));
    let x2 = SignalFunction::Polynomial(vec![0.0, 0.0, 1.0]);
    let ops = single_mode_operators(&x2, 1.0, 0.5, 32)?;
    let keep: Vec<usize> = guarded_levels(32).collect();
    let comm = ops.a_out.commutator(&ops.a_out.adjoint())?;
    out.push(below(
        "single-mode output commutator",
        comm.restricted_distance(&Operator::identity(vec![32]), &keep)?,
        1e-7,
    ));
    let st = make_state(FockSpace::new(32)?, StateKind::coherent(c(0.6)))?;
    let m = crate::amplifiers::single_mode_output_moments(&x2, 1.0, 0.5, &st)?;
    out.push(below("single-mode ⟨x_out⟩ = e^r⟨x_in⟩", (m.quad_means.0 - 0.5f64.exp() * SQRT_2 * 0.6).abs(), 1e-6));
    Ok(out)
}

fn prepare_vacuum(spec: &AmplifierSpec) -> Result<Vec<crate::fock::State>> {
    crate::amplifiers::prepare_meters(spec, &vec![StateKind::vacuum(); spec.meter_count()])
}

fn normality_checks() -> Result<Vec<Check>> {
    let s = FockSpace::new(12)?;
    let q = |a: f64, b: f64, g: f64, d: f64| quadratic_signal_op(s, c(a), c(b), c(g), c(d));
    let mut out = vec![
        flag("x²-type quadratic is normal", q(0.5, 1.0, 0.5, 0.5).is_normal),
        flag("p²-type quadratic is normal", q(-0.5, 1.0, -0.5, 0.5).is_normal),
        flag("a² alone is not normal", !q(1.0, 0.0, 0.0, 0.0).is_normal),
        flag("a² + a†a is not normal", !q(1.0, 1.0, 0.0, 0.0).is_normal),
    ];
    let keep: Vec<usize> = guarded_levels(12).collect();
    let mut rng = trial_rng(2024, 0);
    let mut agree = 0;
    for k in 0..50 {
        let mut z = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (alpha, beta, delta) = (z(), z(), z());
        let gamma = if k % 2 == 0 { alpha.conj() * beta / beta.conj() } else { z() };
        let sig = quadratic_signal_op(s, alpha, beta, gamma, delta);
        let comm = sig.op.commutator(&sig.op.adjoint())?;
        let brute = comm.restricted_max_abs(&keep) < 1e-9;
        agree += (brute == sig.is_normal) as usize;
    }
    out.push(below("normality gate disagreements with brute force (of 50)", (50 - agree) as f64, 0.5));
    Ok(out)
}

fn measurement_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let s = FockSpace::new(10)?;
    let beta = C64::new(0.7, 0.2);
    let s2 = 0.5;
    let m = heterodyne_element(beta, s2, s)?;
    let want = (-beta.norm_sqr() / (1.0 + s2)).exp() / (std::f64::consts::PI * (1.0 + s2));
    out.push(below("heterodyne vacuum entry", (m.get(0, 0).re - want).abs(), 1e-14));

    let s12 = FockSpace::new(12)?;
    let h = 0.02;
    let mut acc = Operator::zeros(vec![12]);
    for k in -600..=600 {
        acc = acc.add(&homodyne_element(k as f64 * h, 0.1, s12)?.scale(c(h)))?;
    }
    out.push(below("homodyne elements integrate to I", acc.distance(&Operator::identity(vec![12]))?, 1e-4));

    let d4 = normal_decompose(&number_op(FockSpace::new(4)?), None)?;
    let grid = GridSpec::default();
    let cf = effective_povm_closed_form(&d4, 1.0, 0.0, ClosedFormModel::Heterodyne, &grid)?;
    out.push(below("closed-form POVM resolves I", cf.identity_residual(), 1e-12));
    let spec = AmplifierSpec::TwoModeNormal {
        f: number_op(FockSpace::new(4)?),
        g: 1.0,
    };
    let num = effective_povm_numeric(&spec, &prepare_vacuum(&spec)?, &DetectorSpec::heterodyne(1.0)?, &grid)?;
    out.push(below("numeric POVM matches closed form", num.max_deviation(&cf)?, 1e-5));
    out.push(below("numeric POVM elements are PSD", -num.min_eigenvalue()?, 1e-12));

    let mut prev = vec![0.0; 4];
    let mut increasing = true;
    for g in [1.0, 2.0, 4.0, 8.0] {
        let p = effective_povm_closed_form(&d4, g, 1.0, ClosedFormModel::Heterodyne, &grid)?;
        let w = own_region_weights(&p, &DecisionRegions::from_povm(&p))?;
        increasing &= w.iter().zip(&prev).all(|(a, b)| a > b);
        prev = w;
    }
    out.push(flag("own-region weights increase with gain", increasing));
    let vac = make_state(FockSpace::new(8)?, StateKind::vacuum())?;
    let det = DetectorSpec::heterodyne(0.8)?;
    out.push(flag(
        "seeded samples repeat",
        sample_outcome(&vac, &det, 5)? == sample_outcome(&vac, &det, 5)?,
    ));
    Ok(out)
}

fn estimator_checks() -> Result<Vec<Check>> {
    let trials = 20_000;
    let fock2 = make_state(FockSpace::new(12)?, StateKind::Fock { n: 2 })?;
    let coh = make_state(FockSpace::new(20)?, StateKind::coherent(c(1.0)))?;
    let nl = TrialPlan::nonlinear(
        AmplifierSpec::VonNeumann {
            f: number_op(FockSpace::new(12)?),
            g: 3.0,
        },
        fock2,
        DetectorSpec::homodyne(1.0)?,
        trials,
        42,
    );
    let r = run_nonlinear_estimation(&nl)?;
    let lin = TrialPlan::linear(1.5, coh, DetectorSpec::heterodyne(1.0)?, trials, 42);
    let l = run_linear_number_estimation(&lin)?;
    let p = heterodyne_record_power(&lin)?;
    Ok(vec![
        below("f̂ variance z-score", r.z_scores.variance.abs(), 3.0),
        below("n̂ variance z-score", l.z_scores.variance.abs(), 3.0),
        below("E|α|² z-score", ((p.mean - p.analytic) / p.standard_error).abs(), 3.0),
        below("SNR 2e^r g n", (snr_report(1, 2.0, 1.0) - 4.0 * E).abs(), 1e-12),
    ])
}

/// Runs every check. The config contributes checks for its own amplifier.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut out = config_checks(cfg)?;
    out.extend(ladder_checks()?);
    out.extend(amplifier_checks()?);
    out.extend(normality_checks()?);
    out.extend(measurement_checks()?);
    out.extend(estimator_checks()?);
    Ok(out)
}
