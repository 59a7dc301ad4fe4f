//! Total and fragment-local spin operators, assembled from ladder matrices.

use crate::error::Result;
use crate::fockspace::{SectorBasis, SectorSpec, Spin};
use crate::sparse::{OperatorMatrix, SparseMatrix};

use super::Fragment;

/// `Ŝ⁺_A = Σ_{p∈A} a†_{p↑} a_{p↓}` as a `target × source` matrix.
///
/// Images outside `target` are dropped, so `target` should be the full
/// raised sector unless the caller knows better.
pub fn raising(source: &SectorBasis, target: &SectorBasis, orbitals: &[usize]) -> SparseMatrix {
    let mut t = Vec::new();
    for (col, det) in source.dets().iter().enumerate() {
        for &p in orbitals {
            let Some((mid, s1)) = det.annihilate(p, Spin::Down) else { continue };
            let Some((out, s2)) = mid.create(p, Spin::Up) else { continue };
            if let Some(row) = target.position(&out) {
                t.push((row, col, s1 * s2));
            }
        }
    }
    SparseMatrix::from_triplets(target.len(), source.len(), t)
}

fn full_basis(spec: Option<SectorSpec>) -> Result<Option<SectorBasis>> {
    spec.map(SectorBasis::build).transpose()
}

/// Diagonal of `Ŝz_A`.
pub fn local_sz(basis: &SectorBasis, frag: &Fragment) -> Vec<f64> {
    let m = frag.mask();
    basis
        .dets()
        .iter()
        .map(|d| 0.5 * ((d.alpha & m).count_ones() as f64 - (d.beta & m).count_ones() as f64))
        .collect()
}

/// Diagonal of the fragment particle-number operator.
pub fn local_number(basis: &SectorBasis, frag: &Fragment) -> Vec<usize> {
    let m = frag.mask();
    basis.dets().iter().map(|d| ((d.alpha & m).count_ones() + (d.beta & m).count_ones()) as usize).collect()
}

/// `Ŝ²_A = Ŝ⁻_A Ŝ⁺_A + Ŝz_A(Ŝz_A + 1)`; an empty fragment gives the zero matrix.
pub fn build_local_s2(basis: &SectorBasis, frag: &Fragment) -> Result<OperatorMatrix> {
    frag.validate(basis.norb())?;
    let n = basis.len();
    if frag.is_empty() {
        return OperatorMatrix::new(SparseMatrix::zeros(n, n));
    }
    let sz = local_sz(basis, frag);
    let diag = SparseMatrix::from_diagonal(&sz.iter().map(|m| m * (m + 1.0)).collect::<Vec<_>>());
    let flip = match full_basis(basis.spec().raised())? {
        Some(up) => {
            let l = raising(basis, &up, frag.orbitals());
            l.transpose().matmul(&l)
        }
        None => SparseMatrix::zeros(n, n),
    };
    OperatorMatrix::new(flip.add(&diag))
}

pub fn build_total_s2(basis: &SectorBasis) -> Result<OperatorMatrix> {
    build_local_s2(basis, &Fragment::new(0..basis.norb()))
}

/// `Ŝ_A·Ŝ_B = ½(Ŝ⁺_A Ŝ⁻_B + Ŝ⁻_A Ŝ⁺_B) + Ŝz_A Ŝz_B` for disjoint fragments.
pub fn build_spin_dot(basis: &SectorBasis, a: &Fragment, b: &Fragment) -> Result<OperatorMatrix> {
    a.validate(basis.norb())?;
    b.validate(basis.norb())?;
    if !a.is_disjoint(b) {
        return Err(crate::Error::Parameter("spin coupling needs disjoint fragments".into()));
    }
    let n = basis.len();
    let za = local_sz(basis, a);
    let zb = local_sz(basis, b);
    let zz = SparseMatrix::from_diagonal(&za.iter().zip(&zb).map(|(x, y)| x * y).collect::<Vec<_>>());
    let flips = match full_basis(basis.spec().lowered())? {
        Some(down) => {
            // rows of `basis`, columns of the lowered sector
            let la = raising(&down, basis, a.orbitals());
            let lb = raising(&down, basis, b.orbitals());
            let x = la.matmul(&lb.transpose());
            x.add(&x.transpose()).scale(0.5)
        }
        None => SparseMatrix::zeros(n, n),
    };
    OperatorMatrix::new(flips.add(&zz))
}
