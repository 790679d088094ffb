//! Detector elements, effective POVMs on the signal mode, decision regions
//! and outcome sampling.
//!
//! Heterodyne outcomes live on the complex plane and homodyne outcomes on the
//! real line; grids and records store them divided by the gain (see
//! [`PovmGrid`]).

mod detector;
mod povm;
mod regions;
mod sampling;

pub use detector::{
    heterodyne_element, homodyne_element, DetectorKind, DetectorSpec, HOMODYNE_STEP, HOMODYNE_WINDOW,
};
pub use povm::{
    effective_povm_closed_form, effective_povm_numeric, ClosedFormModel, GaussianRecords, GridSpec,
    OutcomeKind, PovmElements, PovmGrid,
};
pub use regions::{coarse_grain, own_region_weights, region_masses, DecisionRegions};
pub use sampling::{sample_outcome, trial_rng, OutcomeSampler, SAMPLER_STEP};
