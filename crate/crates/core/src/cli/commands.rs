use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{AmplifierConfig, CommandName, PovmRoute, RunConfig};
use crate::amplifiers::{prepare_meters, simulate_output_moments, AmplifierSpec};
use crate::error::{invalid, Error, Result};
use crate::estimators::{compare_schemes, run_estimation, ComparisonReport, EstimateReport, EstimatorKind, TrialPlan};
use crate::fock::{make_state, FockSpace, State, StateKind};
use crate::measurement::{
    effective_povm_closed_form, effective_povm_numeric, own_region_weights, ClosedFormModel, DecisionRegions,
    DetectorKind, DetectorSpec, PovmGrid,
};
use crate::table::sci;

pub(crate) fn input_state(cfg: &RunConfig) -> Result<State> {
    make_state(FockSpace::new(cfg.dim)?, cfg.input)
}

pub(crate) fn meter_states(cfg: &RunConfig, spec: &AmplifierSpec) -> Result<Vec<State>> {
    let kinds = cfg.meter_kinds();
    match (&cfg.meter_dims, spec) {
        (Some(dims), _) => dims
            .iter()
            .zip(&kinds)
            .map(|(&d, &k)| make_state(FockSpace::new(d)?, k))
            .collect(),
        (None, AmplifierSpec::Linear { .. }) => kinds.iter().map(|&k| make_state(FockSpace::new(cfg.dim)?, k)).collect(),
        (None, _) => prepare_meters(spec, &kinds),
    }
}

/// One row of the noise sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub g: f64,
    pub variant: String,
    /// `⟨x_out⟩`
    pub signal_mean: f64,
    pub total_noise: f64,
    pub added_noise: f64,
}

pub fn noise_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let input = input_state(cfg)?;
    cfg.gain_list()
        .par_iter()
        .map(|&g| {
            let spec = cfg.amplifier.build(cfg.dim, g)?;
            let meters = meter_states(cfg, &spec)?;
            let m = simulate_output_moments(&spec, &input, &meters)?;
            Ok(SweepRow {
                g,
                variant: spec.name().to_string(),
                signal_mean: m.quad_means.0,
                total_noise: m.signal_noise + m.added_noise,
                added_noise: m.added_noise,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "g,variant,signal_mean,total_noise,added_noise")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            sci(r.g),
            r.variant,
            sci(r.signal_mean),
            sci(r.total_noise),
            sci(r.added_noise)
        )?;
    }
    Ok(())
}

fn meter_epsilon(k: StateKind) -> Result<f64> {
    match k {
        StateKind::Fock { n: 0 } => Ok(1.0),
        StateKind::GaussianMeter { epsilon } => Ok(epsilon),
        StateKind::SqueezedVacuum { r, phi } if phi == 0.0 => Ok((-r).exp()),
        other => Err(Error::Config(format!(
            "closed-form POVM needs an x-squeezed Gaussian meter, got {other:?}; use \"povm_route\": \"numeric\""
        ))),
    }
}

fn closed_form_model(cfg: &RunConfig, det: &DetectorSpec) -> Result<ClosedFormModel> {
    let meters = cfg.meter_kinds();
    match (&cfg.amplifier, det.kind) {
        (AmplifierConfig::TwoModeNormal { .. }, DetectorKind::Heterodyne) => {
            if meters[0] != StateKind::vacuum() {
                return Err(Error::Config(
                    "closed-form heterodyne POVM needs a vacuum meter; use \"povm_route\": \"numeric\"".into(),
                ));
            }
            Ok(ClosedFormModel::Heterodyne)
        }
        (AmplifierConfig::TwoModeNormal { .. } | AmplifierConfig::VonNeumann { .. }, DetectorKind::Homodyne) => {
            Ok(ClosedFormModel::Homodyne {
                epsilon: meter_epsilon(meters[0])?,
            })
        }
        (AmplifierConfig::ThreeMode { .. }, DetectorKind::Homodyne) => {
            let (e1, e2) = (meter_epsilon(meters[0])?, meter_epsilon(meters[1])?);
            if (e1 - e2).abs() > 1e-12 {
                return Err(Error::Config("closed-form three-mode POVM needs equal meter widths".into()));
            }
            Ok(ClosedFormModel::ThreeMode { epsilon: e1 })
        }
        (AmplifierConfig::VonNeumann { .. } | AmplifierConfig::ThreeMode { .. }, DetectorKind::Heterodyne) => {
            Err(invalid("detector.kind", "this amplifier is read out by homodyne detection"))
        }
        _ => Err(invalid("amplifier.variant", "no effective POVM for this amplifier")),
    }
}

pub fn povm_at(cfg: &RunConfig, g: f64) -> Result<PovmGrid> {
    let det = cfg.detector_for(CommandName::Povm);
    let spec = cfg.amplifier.build(cfg.dim, g)?;
    match cfg.povm_route {
        PovmRoute::ClosedForm => {
            let model = closed_form_model(cfg, &det)?;
            let d = spec.decompose()?.ok_or_else(|| invalid("amplifier.variant", "no signal operator"))?;
            effective_povm_closed_form(&d, g, det.sigma2(), model, &cfg.grid)
        }
        PovmRoute::Numeric => {
            let meters = meter_states(cfg, &spec)?;
            effective_povm_numeric(&spec, &meters, &det, &cfg.grid)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmSummary {
    pub g: f64,
    pub csv: String,
    pub points: usize,
    /// Record exponent width `w`.
    pub width: f64,
    pub identity_residual: f64,
    pub max_off_diagonal: f64,
    pub min_eigenvalue: f64,
    pub regions: usize,
    pub own_region_weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PovmReport {
    pub config: RunConfig,
    pub gains: Vec<PovmSummary>,
    /// Every own-region weight grows from each gain to the next larger one.
    pub weights_increase_with_gain: bool,
}

pub fn csv_name(g: f64) -> String {
    format!("povm_g{g}.csv")
}

/// Effective POVMs for every gain, with their CSV bodies.
pub fn povm_summaries(cfg: &RunConfig) -> Result<(Vec<PovmSummary>, Vec<Vec<u8>>)> {
    let mut out = Vec::new();
    let mut files = Vec::new();
    for g in cfg.gain_list() {
        let p = povm_at(cfg, g)?;
        let regions = DecisionRegions::from_povm(&p);
        let weights = own_region_weights(&p, &regions)?;
        let mut buf = Vec::new();
        p.write_csv(&mut buf)?;
        files.push(buf);
        out.push(PovmSummary {
            g,
            csv: csv_name(g),
            points: p.len(),
            width: p.width,
            identity_residual: p.identity_residual(),
            max_off_diagonal: p.max_off_diagonal(),
            min_eigenvalue: p.min_eigenvalue()?,
            regions: regions.len(),
            own_region_weights: weights,
        });
    }
    Ok((out, files))
}

pub fn weights_increase(summaries: &[PovmSummary]) -> bool {
    let mut order: Vec<&PovmSummary> = summaries.iter().collect();
    order.sort_by(|a, b| a.g.total_cmp(&b.g));
    order.windows(2).all(|w| {
        w[0].own_region_weights
            .iter()
            .zip(&w[1].own_region_weights)
            .all(|(a, b)| b > a)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub config: RunConfig,
    pub reports: Vec<EstimateReport>,
}

pub fn estimate(cfg: &RunConfig) -> Result<Vec<EstimateReport>> {
    let input = input_state(cfg)?;
    let det = cfg.detector_for(CommandName::Estimate);
    let estimator = match cfg.amplifier {
        AmplifierConfig::Linear { .. } => EstimatorKind::NHatLinear,
        AmplifierConfig::TwoModeNormal { .. } | AmplifierConfig::VonNeumann { .. } => EstimatorKind::FHatNonlinear,
        _ => return Err(invalid("amplifier.variant", "no estimator for this amplifier")),
    };
    let meter = cfg.meter_kinds().first().copied().unwrap_or_else(StateKind::vacuum);
    cfg.gain_list()
        .into_iter()
        .map(|g| {
            let plan = TrialPlan {
                amplifier: cfg.amplifier.build(cfg.dim, g)?,
                input: input.clone(),
                meter,
                detector: det,
                trials: cfg.trials,
                seed: cfg.seed,
                estimator,
            };
            run_estimation(&plan)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareOutput {
    pub config: RunConfig,
    pub comparisons: Vec<ComparisonReport>,
}

pub fn compare(cfg: &RunConfig) -> Result<Vec<ComparisonReport>> {
    let input = input_state(cfg)?;
    let eta = cfg.detector_for(CommandName::Compare).efficiency;
    cfg.gain_list()
        .into_iter()
        .map(|g| compare_schemes(&input, g, eta, cfg.trials, cfg.seed))
        .collect()
}
