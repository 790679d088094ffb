use serde::Serialize;

use super::{run_linear_number_estimation, run_nonlinear_estimation, EstimateReport, TrialPlan};
use crate::amplifiers::AmplifierSpec;
use crate::error::Result;
use crate::fock::{mode_moments, number_op, FockSpace, State};
use crate::measurement::DetectorSpec;

/// Side-by-side photon-number estimation with both schemes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub gain: f64,
    pub efficiency: f64,
    pub nonlinear: EstimateReport,
    pub linear: EstimateReport,
    /// Sampled `Var_nonlinear < Var_linear`.
    pub improvement: bool,
    /// `1/(4g²) < ⟨a†a⟩ + 1`, the ideal-detector crossover.
    pub analytic_improvement: bool,
    /// `1/(4g²)`
    pub nonlinear_excess: f64,
    /// `⟨a†a⟩ + 1`
    pub linear_excess: f64,
}

/// Runs `f = a†a` through the von Neumann amplifier with a vacuum meter and
/// homodyne detection, and through the linear amplifier with heterodyne
/// detection, both at efficiency `eta`.
///
/// The linear amplifier cannot go below unit gain, so its arm runs at
/// `max(g, 1)`.
pub fn compare_schemes(input: &State, g: f64, eta: f64, trials: usize, seed: u64) -> Result<ComparisonReport> {
    let space = FockSpace::new(input.dim())?;
    let f = number_op(space);
    let nl = TrialPlan::nonlinear(
        AmplifierSpec::VonNeumann { f, g },
        input.clone(),
        DetectorSpec::homodyne(eta)?,
        trials,
        seed,
    );
    let lin = TrialPlan::linear(g.max(1.0), input.clone(), DetectorSpec::heterodyne(eta)?, trials, seed);
    let nonlinear = run_nonlinear_estimation(&nl)?;
    let linear = run_linear_number_estimation(&lin)?;
    let n = mode_moments(input, 0)?.n;
    let nonlinear_excess = 1.0 / (4.0 * g * g);
    let linear_excess = n + 1.0;
    Ok(ComparisonReport {
        gain: g,
        efficiency: eta,
        improvement: nonlinear.variance < linear.variance,
        analytic_improvement: nonlinear_excess < linear_excess,
        nonlinear,
        linear,
        nonlinear_excess,
        linear_excess,
    })
}
