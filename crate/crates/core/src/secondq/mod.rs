//! Second-quantized operators as sparse matrices in a determinant basis.

mod hamiltonian;
mod integrals;
mod spin;

pub use hamiltonian::{build_excitation, build_hamiltonian, build_hamiltonian_by_composition};
pub use integrals::{permutations, Fragment, IntegralSet};
pub use spin::{build_local_s2, build_spin_dot, build_total_s2, local_number, local_sz, raising};
