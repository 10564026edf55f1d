//! Variational numerics for the 2D cubic NLS functional and its bosonic
//! many-body origin: spectral grids, NLS/Hartree energies, the Townes
//! profile and Gagliardo–Nirenberg constant, small exact diagonalizations,
//! de Finetti measures and the exponent bootstrap.

pub mod definetti;
pub mod error;
pub mod exponents;
pub mod field;
pub mod functionals;
pub mod manybody;
pub mod minimize;

pub use error::{Error, Result};
