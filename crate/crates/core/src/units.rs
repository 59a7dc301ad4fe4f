//! Energy units. Everything internal is hartree; reports are cm⁻¹.

/// cm⁻¹ per hartree.
pub const HARTREE_TO_CM1: f64 = 219_474.631_363_2;

#[inline]
pub fn to_cm1(hartree: f64) -> f64 {
    hartree * HARTREE_TO_CM1
}

#[inline]
pub fn to_hartree(cm1: f64) -> f64 {
    cm1 / HARTREE_TO_CM1
}
