//! Exact diagonalization of the trapped Bose gas in a truncated one-body
//! eigenbasis, with reduced density matrices and derived diagnostics.
//!
//! The one-body operator here is `h = −Δ + V` without vector potential, so
//! all modes and matrix elements are real.

mod analysis;
mod counting;
mod fock;
mod hamiltonian;
mod modes;
mod tensor;

pub use analysis::{
    gse2_error_terms, hartree_in_span, hermitian_eigenvalues, moments, operator_constant,
    two_body_energy, LowerBoundTerms, Moments, OperatorForm, SpanHartree,
};
pub use counting::{count_modes_below, radial_levels};
pub use fock::{
    binomial, one_body_density, partial_trace, reduced_density, symmetric_dimension,
    two_body_density, FockBasis, SymmetricState,
};
pub use hamiltonian::{
    assemble_hamiltonian, ground_state, perturbed_ground_energy, GroundState, SparseHamiltonian,
    DIMENSION_CAP,
};
pub use modes::{one_body_modes, one_body_modes_with, EigenOptions, ModeBasis};
pub use tensor::{two_body_tensor, two_body_tensor_sampled, TwoBodyTensor};
