//! Seeded Monte Carlo estimators on top of amplified detector records.
//!
//! Two estimators are provided. The nonlinear one reads the meter position
//! after a von Neumann or two-mode amplifier with Hermitian `f` and reports
//! `f̂ = y/(√2 g)`. The linear one heterodynes a phase-preserving amplifier
//! output and reports `n̂ = |α|²/g² − 1`. Every trial draws from its own
//! `(seed, index)` stream, so runs are reproducible under any thread count.

mod compare;
mod stats;

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplifiers::AmplifierSpec;
use crate::error::{invalid, Error, Result};
use crate::fock::{make_state, mode_moments, number_op, variance, FockSpace, State, StateKind, C64};
use crate::measurement::{trial_rng, DetectorKind, DetectorSpec, OutcomeSampler};

pub use compare::{compare_schemes, ComparisonReport};
pub use stats::{sample_stats, SampleStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `n̂ = |α|²/g² − 1` after the linear amplifier.
    NHatLinear,
    /// `f̂ = y/(√2 g)` after a nonlinear amplifier.
    FHatNonlinear,
}

/// One seeded estimation experiment.
#[derive(Clone, Debug)]
pub struct TrialPlan {
    pub amplifier: AmplifierSpec,
    pub input: State,
    /// Meter preparation for the nonlinear estimator. Ignored by the linear
    /// one, whose internal mode is always the vacuum.
    pub meter: StateKind,
    pub detector: DetectorSpec,
    pub trials: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
}

impl TrialPlan {
    /// Nonlinear plan with a vacuum meter.
    pub fn nonlinear(amplifier: AmplifierSpec, input: State, detector: DetectorSpec, trials: usize, seed: u64) -> Self {
        Self {
            amplifier,
            input,
            meter: StateKind::vacuum(),
            detector,
            trials,
            seed,
            estimator: EstimatorKind::FHatNonlinear,
        }
    }

    pub fn linear(g: f64, input: State, detector: DetectorSpec, trials: usize, seed: u64) -> Self {
        Self {
            amplifier: AmplifierSpec::Linear { g },
            input,
            meter: StateKind::vacuum(),
            detector,
            trials,
            seed,
            estimator: EstimatorKind::NHatLinear,
        }
    }

    pub fn with_meter(mut self, meter: StateKind) -> Self {
        self.meter = meter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "at least one trial is required"));
        }
        self.detector.validate()?;
        self.amplifier.validate()?;
        if self.input.dims().len() != 1 {
            return Err(invalid("input", "estimators take a single-mode input"));
        }
        match (self.estimator, &self.amplifier) {
            (EstimatorKind::NHatLinear, AmplifierSpec::Linear { .. }) => {
                if self.detector.kind != DetectorKind::Heterodyne {
                    return Err(invalid("detector", "the photon-number estimator needs heterodyne detection"));
                }
            }
            (EstimatorKind::FHatNonlinear, AmplifierSpec::VonNeumann { f, g } | AmplifierSpec::TwoModeNormal { f, g }) => {
                if *g <= 0.0 {
                    return Err(Error::GainOutOfRange(*g));
                }
                let h = f.hermiticity_residual();
                if !(h < 1e-9 * f.max_abs().max(f64::MIN_POSITIVE)) {
                    return Err(Error::NotHermitian(h));
                }
                if f.dim() != self.input.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: f.dim(),
                        got: self.input.dim(),
                    });
                }
                if self.detector.kind != DetectorKind::Homodyne {
                    return Err(invalid("detector", "the f estimator reads the meter by homodyne detection"));
                }
            }
            (EstimatorKind::NHatLinear, _) => {
                return Err(invalid("amplifier", "the photon-number estimator runs on the linear amplifier"));
            }
            (EstimatorKind::FHatNonlinear, _) => {
                return Err(invalid(
                    "amplifier",
                    "the f estimator runs on the von Neumann or two-mode amplifier",
                ))
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StandardErrors {
    pub mean: f64,
    pub variance: f64,
}

/// Sample minus analytic, in standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZScores {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimator: EstimatorKind,
    pub amplifier: String,
    pub gain: f64,
    pub detector: DetectorSpec,
    /// Meter preparation for the nonlinear estimator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meter: Option<StateKind>,
    pub trials: usize,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub standard_error_of_each: StandardErrors,
    pub analytic_mean: f64,
    pub analytic_variance: f64,
    /// Where the analytic values come from.
    pub analytic_basis: String,
    pub z_scores: ZScores,
}

impl EstimateReport {
    /// Both sample moments within `k` standard errors of the analytic ones.
    pub fn within(&self, k: f64) -> bool {
        self.z_scores.mean.abs() < k && self.z_scores.variance.abs() < k
    }
}

fn z(sample: f64, analytic: f64, se: f64) -> f64 {
    let d = sample - analytic;
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(d)
    }
}

/// Exact `x` distribution of a Gaussian meter, else a grid sampler.
#[derive(Clone, Debug)]
enum MeterDraw {
    Gaussian(Normal<f64>),
    Grid(Box<OutcomeSampler>),
}

impl MeterDraw {
    fn new(kind: StateKind) -> Result<(Self, f64, f64)> {
        let gaussian = |m: f64, v: f64| Normal::new(m, v.sqrt()).map_err(|e| invalid("meter", e.to_string()));
        let (mean, var) = match kind {
            StateKind::Fock { n: 0 } => (0.0, 0.5),
            StateKind::Coherent { re, .. } => (SQRT_2 * re, 0.5),
            StateKind::SqueezedVacuum { r, phi } => {
                if !(r >= 0.0) || !r.is_finite() {
                    return Err(invalid("r", "squeezing must be finite and non-negative"));
                }
                (0.0, ((2.0 * r).cosh() - (2.0 * phi).cos() * (2.0 * r).sinh()) / 2.0)
            }
            StateKind::GaussianMeter { epsilon } => {
                if !(epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(invalid("epsilon", "meter width must be positive"));
                }
                (0.0, epsilon * epsilon / 2.0)
            }
            StateKind::Fock { n } => {
                let st = make_state(FockSpace::new(2 * n + 40)?, kind)?;
                let s = OutcomeSampler::new(&st, &DetectorSpec::homodyne(1.0)?)?;
                return Ok((MeterDraw::Grid(Box::new(s)), 0.0, n as f64 + 0.5));
            }
        };
        Ok((MeterDraw::Gaussian(gaussian(mean, var)?), mean, var))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MeterDraw::Gaussian(n) => n.sample(rng),
            MeterDraw::Grid(s) => s.sample_ideal(rng).re,
        }
    }
}

fn detector_noise(detector: &DetectorSpec) -> Option<Normal<f64>> {
    let s2 = detector.sigma2();
    (s2 > 0.0).then(|| Normal::new(0.0, (s2 / 2.0).sqrt()).expect("positive width"))
}

fn inverse_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|c| *c < u).min(cdf.len() - 1)
}

fn run_trials<T: Send>(trials: usize, seed: u64, draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..trials as u64)
        .into_par_iter()
        .map(|k| draw(&mut trial_rng(seed, k)))
        .collect()
}

struct NonlinearModel {
    /// `√2 g 𝔣_i` per eigen-branch.
    offsets: Vec<f64>,
    cdf: Vec<f64>,
    meter: MeterDraw,
    noise: Option<Normal<f64>>,
    scale: f64,
    analytic_mean: f64,
    analytic_variance: f64,
}

fn nonlinear_model(plan: &TrialPlan) -> Result<NonlinearModel> {
    plan.validate()?;
    if plan.estimator != EstimatorKind::FHatNonlinear {
        return Err(invalid("estimator", "plan is not a nonlinear-estimator plan"));
    }
    let g = plan.amplifier.gain();
    let f = plan.amplifier.signal_op().expect("validated");
    let d = plan.amplifier.decompose()?.expect("validated");
    let comps = plan.input.components()?;
    let probs: Vec<f64> = (0..d.dim())
        .map(|i| {
            let e = d.eigenvector(i);
            comps
                .iter()
                .map(|(w, v)| w * e.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr())
                .sum()
        })
        .collect();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let (meter, xm, vm) = MeterDraw::new(plan.meter)?;
    let scale = SQRT_2 * g;
    let mean_f = crate::fock::expectation(&plan.input, f)?.re;
    let var_f = variance(&plan.input, f)?;
    let s2 = plan.detector.sigma2();
    Ok(NonlinearModel {
        offsets: d.eigenvalues.iter().map(|z| scale * z.re).collect(),
        cdf,
        meter,
        noise: detector_noise(&plan.detector),
        scale,
        analytic_mean: mean_f + xm / scale,
        analytic_variance: var_f + (vm + s2 / 2.0) / (scale * scale),
    })
}

fn nonlinear_records(m: &NonlinearModel, trials: usize, seed: u64) -> Vec<f64> {
    run_trials(trials, seed, |rng| {
        let i = inverse_cdf(&m.cdf, rng);
        let mut y = m.offsets[i] + m.meter.draw(rng);
        if let Some(n) = &m.noise {
            y += n.sample(rng);
        }
        y
    })
}

struct LinearModel {
    husimi: OutcomeSampler,
    noise: Option<Normal<f64>>,
    g: f64,
    analytic_mean: f64,
    analytic_variance: f64,
}

fn linear_model(plan: &TrialPlan) -> Result<LinearModel> {
    plan.validate()?;
    if plan.estimator != EstimatorKind::NHatLinear {
        return Err(invalid("estimator", "plan is not a linear-estimator plan"));
    }
    let g = plan.amplifier.gain();
    let husimi = OutcomeSampler::new(&plan.input, &DetectorSpec::heterodyne(1.0)?)?;
    let n = mode_moments(&plan.input, 0)?.n;
    let var_n = variance(&plan.input, &number_op(FockSpace::new(plan.input.dim())?))?;
    let s = plan.detector.sigma2() / (g * g);
    Ok(LinearModel {
        husimi,
        noise: detector_noise(&plan.detector),
        g,
        analytic_mean: n + s,
        analytic_variance: var_n + n + 1.0 + s * s + 2.0 * s * (n + 1.0),
    })
}

fn linear_records(m: &LinearModel, trials: usize, seed: u64) -> Vec<C64> {
    run_trials(trials, seed, |rng| {
        let mut a = m.husimi.sample_ideal(rng) * m.g;
        if let Some(n) = &m.noise {
            a += C64::new(n.sample(rng), n.sample(rng));
        }
        a
    })
}

/// Raw detector records of a plan: the meter reading `y` for the nonlinear
/// estimator, the heterodyne outcome `α` for the linear one.
///
/// The nonlinear amplifier is block diagonal in the eigenbasis of `f`, so a
/// record is drawn by picking eigen-branch `i` with probability `⟨e_i|ρ|e_i⟩`
/// and adding `√2 g 𝔣_i` to a reading of the unshifted meter. For the linear
/// amplifier with a vacuum internal mode the output Husimi density is the
/// input one stretched by `g`, so `α = g α_Q` with `α_Q` drawn from the input.
pub fn sample_records(plan: &TrialPlan) -> Result<Vec<C64>> {
    match plan.estimator {
        EstimatorKind::FHatNonlinear => {
            let m = nonlinear_model(plan)?;
            Ok(nonlinear_records(&m, plan.trials, plan.seed)
                .into_iter()
                .map(|y| C64::new(y, 0.0))
                .collect())
        }
        EstimatorKind::NHatLinear => {
            let m = linear_model(plan)?;
            Ok(linear_records(&m, plan.trials, plan.seed))
        }
    }
}

/// Per-trial estimates in trial order.
pub fn sample_estimates(plan: &TrialPlan) -> Result<Vec<f64>> {
    match plan.estimator {
        EstimatorKind::FHatNonlinear => {
            let m = nonlinear_model(plan)?;
            Ok(nonlinear_records(&m, plan.trials, plan.seed)
                .into_iter()
                .map(|y| y / m.scale)
                .collect())
        }
        EstimatorKind::NHatLinear => {
            let m = linear_model(plan)?;
            let g2 = m.g * m.g;
            Ok(linear_records(&m, plan.trials, plan.seed)
                .into_iter()
                .map(|a| a.norm_sqr() / g2 - 1.0)
                .collect())
        }
    }
}

fn report(plan: &TrialPlan, values: &[f64], analytic_mean: f64, analytic_variance: f64, basis: String) -> EstimateReport {
    let st = sample_stats(values);
    EstimateReport {
        estimator: plan.estimator,
        amplifier: plan.amplifier.name().to_string(),
        gain: plan.amplifier.gain(),
        detector: plan.detector,
        meter: (plan.estimator == EstimatorKind::FHatNonlinear).then_some(plan.meter),
        trials: plan.trials,
        seed: plan.seed,
        mean: st.mean,
        variance: st.variance,
        standard_error_of_each: StandardErrors {
            mean: st.se_mean,
            variance: st.se_variance,
        },
        analytic_mean,
        analytic_variance,
        analytic_basis: basis,
        z_scores: ZScores {
            mean: z(st.mean, analytic_mean, st.se_mean),
            variance: z(st.variance, analytic_variance, st.se_variance),
        },
    }
}

/// Estimates `⟨f⟩` from the meter position, against
/// `Var[f] + (Var[x_m] + σ²/2)/(2g²)`, which is `Var[f] + 1/(4g²)` for a
/// vacuum meter and an ideal detector.
pub fn run_nonlinear_estimation(plan: &TrialPlan) -> Result<EstimateReport> {
    let m = nonlinear_model(plan)?;
    let values: Vec<f64> = nonlinear_records(&m, plan.trials, plan.seed)
        .into_iter()
        .map(|y| y / m.scale)
        .collect();
    let basis = if plan.meter == StateKind::vacuum() {
        "Var[f] + 1/(4g²) plus detector smearing σ²/(4g²)".to_string()
    } else {
        format!(
            "derived for meter {:?}: Var[f] + (Var[x_m] + σ²/2)/(2g²), mean shifted by ⟨x_m⟩/(√2 g)",
            plan.meter
        )
    };
    Ok(report(plan, &values, m.analytic_mean, m.analytic_variance, basis))
}

/// Estimates `⟨a†a⟩` from heterodyne records of the linear amplifier output,
/// against `Var[a†a] + ⟨a†a⟩ + 1` (plus smearing terms in `s = σ²/g²`).
pub fn run_linear_number_estimation(plan: &TrialPlan) -> Result<EstimateReport> {
    let m = linear_model(plan)?;
    let g2 = m.g * m.g;
    let values: Vec<f64> = linear_records(&m, plan.trials, plan.seed)
        .into_iter()
        .map(|a| a.norm_sqr() / g2 - 1.0)
        .collect();
    let basis = "Var[a†a] + ⟨a†a⟩ + 1 + s² + 2s(⟨a†a⟩ + 1), s = σ²/g²".to_string();
    Ok(report(plan, &values, m.analytic_mean, m.analytic_variance, basis))
}

pub fn run_estimation(plan: &TrialPlan) -> Result<EstimateReport> {
    match plan.estimator {
        EstimatorKind::FHatNonlinear => run_nonlinear_estimation(plan),
        EstimatorKind::NHatLinear => run_linear_number_estimation(plan),
    }
}

/// Sampled `E[|α|²]` of the linear amplifier's heterodyne record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecordPower {
    pub mean: f64,
    pub standard_error: f64,
    /// `g²⟨a†a⟩ + g² + σ²`
    pub analytic: f64,
}

pub fn heterodyne_record_power(plan: &TrialPlan) -> Result<RecordPower> {
    let m = linear_model(plan)?;
    let p: Vec<f64> = linear_records(&m, plan.trials, plan.seed)
        .into_iter()
        .map(|a| a.norm_sqr())
        .collect();
    let st = sample_stats(&p);
    let n = mode_moments(&plan.input, 0)?.n;
    Ok(RecordPower {
        mean: st.mean,
        standard_error: st.se_mean,
        analytic: m.g * m.g * (n + 1.0) + plan.detector.sigma2(),
    })
}

/// `⟨x_out⟩/√⟨(Δx_out)²⟩` for a Fock input `n` read through an `r`-squeezed
/// meter: `√2 g n` over `e^{−r}/√2`.
pub fn snr_report(n: usize, g: f64, r: f64) -> f64 {
    2.0 * r.exp() * g * n as f64
}

#[cfg(test)]
mod tests;
