//! Amplifier unitaries and their input-output moments.
//!
//! The nonlinear amplifiers all couple a normal signal operator `f` to
//! displacements of one or two meter modes. Diagonalizing `f` turns each of
//! them into a block-diagonal [`BlockUnitary`], which acts on kets without ever
//! forming the composite matrix. Dense routes built from the full generator are
//! kept for cross-checks at small dimensions.

mod kernel;
mod linear;
mod moments;
mod single_mode;
mod spec;
mod unitary;

pub use kernel::{quadrature_kernel, QuadratureKernel};
pub use linear::{evolve_linear, LinearEvolution, MAX_LINEAR_DIM};
pub(crate) use moments::{block_unitary, occupancy_check};
pub use moments::{
    auto_meter_dims, predict_output_moments, prepare_meters, simulate_output_moments,
    simulate_output_state, MomentReport,
};
pub use single_mode::{
    function_of_x, single_mode_operators, single_mode_output_moments, single_mode_unitary,
    SingleModeOps,
};
pub use spec::{quadratic_signal_op, AmplifierSpec, QuadraticSignal, SignalFunction};
pub use unitary::{
    auto_meter_dim, displaced_tail, guarded_columns, linear_amp_unitary, real_imag_parts,
    three_mode_unitary, three_mode_unitary_direct, three_mode_unitary_factored, two_mode_unitary,
    two_mode_unitary_dense, two_mode_unitary_factored, von_neumann_unitary,
    von_neumann_unitary_dense, BlockUnitary, DENSE_LIMIT,
};
