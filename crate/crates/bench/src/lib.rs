//! Fixtures shared by the benches.

use spinmer_core::models::{build_spinmerism, spinmerism_sector, ReflectionBlock, SpinmerismParams};
use spinmer_core::{IntegralSet, SectorBasis};

/// Default spinmerism integrals with the full 2Sz = 0 sector (1225 determinants).
pub fn spinmerism_full() -> (IntegralSet, SectorBasis) {
    let ints = build_spinmerism(&SpinmerismParams::default()).unwrap();
    (ints, SectorBasis::build(spinmerism_sector(0).unwrap()).unwrap())
}

/// The odd-x block of the 2Sz = 2 sector used by the sweeps.
pub fn spinmerism_sweep_block() -> (IntegralSet, SectorBasis) {
    let ints = build_spinmerism(&SpinmerismParams::default()).unwrap();
    (ints, ReflectionBlock::E_XZ.basis(spinmerism_sector(2).unwrap()).unwrap())
}
