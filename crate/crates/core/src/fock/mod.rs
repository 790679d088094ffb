//! Truncated Fock-space linear algebra.
//!
//! Conventions are fixed crate-wide: ℏ = 1, `x = (a + a†)/√2`,
//! `p = -i(a - a†)/√2`, so `[x, p] = i` away from the cutoff and the vacuum
//! has `⟨x²⟩ = 1/2`.
//!
//! Ladder operators on a truncation of dimension `N` violate `[a, a†] = 1`
//! only in the top row, so physical identities are asserted on the
//! *guarded* subspace that drops the top `⌈N/4⌉` levels (see [`guarded_levels`]).

mod composite;
mod hermite;
mod moments;
mod operator;
mod space;
mod spectral;
mod state;

pub use composite::{cv_swap, embed, partial_trace, tensor_ops, tensor_states};
pub use hermite::{hermite_functions, quadrature_amplitudes, quadrature_density};
pub use moments::{expectation, mode_moments, symmetrized_moment, variance, ModeMoments};
pub use operator::{Operator, C64};
pub use space::{
    annihilation_op, creation_op, guarded_levels, guarded_projector, number_op, quadrature_ops,
    FockSpace,
};
pub use spectral::{
    hermitian_eigen, normal_decompose, unitary_from_generator, HermitianEigen,
    SpectralDecomposition, CLUSTER_TOLERANCE,
};
#[cfg(test)]
pub(crate) use state::coherent_coefficients;
pub use state::{make_state, prepare_state, Preparation, State, StateData, StateKind};
