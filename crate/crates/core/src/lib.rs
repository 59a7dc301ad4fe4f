//! Exact diagonalization of small fermionic models with local spin analysis.
//!
//! The crate builds determinant bases, assembles Hamiltonians and spin
//! operators, diagonalizes them, and decomposes eigenstates into joint local
//! spin sectors of two orbital fragments (a metal centre and its ligands).
//! Ligand-field spectra of dⁿ ions and Heisenberg exchange fits live next to
//! the model Hamiltonians that use them.

pub mod analysis;
pub mod cispace;
pub mod eigensolve;
pub mod error;
pub mod fockspace;
pub mod io;
pub mod ligandfield;
pub mod models;
pub mod secondq;
pub mod sparse;
pub mod spinproj;
pub mod units;

pub use error::{Error, Result};
pub use fockspace::{apply_excitation, Determinant, SectorBasis, SectorSpec, Spin};
pub use secondq::{Fragment, IntegralSet};
pub use sparse::{OperatorMatrix, SparseMatrix};
pub use units::{to_cm1, to_hartree, HARTREE_TO_CM1};
