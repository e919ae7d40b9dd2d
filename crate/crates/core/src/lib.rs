//! Polarization-tensor analysis of spin density matrices.
//!
//! The crate decomposes operators on spin systems into irreducible
//! polarization tensors, rotates them with Wigner matrices, simulates and
//! inverts rotation tomography, detects and undoes single-site Pauli errors
//! from tomographic coefficients, builds NMR-style spin Hamiltonians and
//! evaluates multipole expansions of point-source distributions.

pub mod angular;
pub mod density;
pub mod error;
pub mod exec;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod multipole;
pub mod quadrature;
pub mod tensor;
pub mod tomography;

pub use angular::{EulerAngles, Projection, SpinValue};
pub use density::{BasisKind, CoeffKey, CoeffTable, DensityMatrix, StateVector};
pub use error::{Error, Result};
pub use exec::Exec;
pub use linalg::CMatrix;
pub use tensor::{CoupledLabel, TensorIndex};
pub use num_complex::Complex64;
