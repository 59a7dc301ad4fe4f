//! Hamiltonian and excitation-operator matrices in a determinant basis.

use crate::error::{Error, Result};
use crate::fockspace::{apply_excitation, Determinant, SectorBasis, Spin};
use crate::sparse::{OperatorMatrix, SparseMatrix};

use super::IntegralSet;

fn check_dims(basis: &SectorBasis, ints: &IntegralSet) -> Result<()> {
    if ints.norb() != basis.norb() {
        return Err(Error::Dimension { expected: basis.norb(), found: ints.norb() });
    }
    Ok(())
}

fn occupied(bits: u32, norb: usize) -> impl Iterator<Item = usize> {
    (0..norb).filter(move |&p| bits >> p & 1 == 1)
}

fn diagonal_energy(det: &Determinant, ints: &IntegralSet, norb: usize) -> f64 {
    let occ: Vec<(usize, Spin)> = Spin::BOTH
        .iter()
        .flat_map(|&s| occupied(det.channel(s), norb).map(move |p| (p, s)))
        .collect();
    let mut e = ints.core_energy;
    for (k, &(i, si)) in occ.iter().enumerate() {
        e += ints.h(i, i);
        for &(j, sj) in &occ[k + 1..] {
            e += ints.g(i, i, j, j);
            if si == sj {
                e -= ints.g(i, j, j, i);
            }
        }
    }
    e
}

/// Hamiltonian matrix from the Slater–Condon rules.
///
/// Every element `⟨target|H|source⟩` is generated from its source
/// determinant; symmetry is checked, not imposed.
pub fn build_hamiltonian(basis: &SectorBasis, ints: &IntegralSet) -> Result<OperatorMatrix> {
    check_dims(basis, ints)?;
    let n = basis.norb();
    let mut t = Vec::new();
    for (col, det) in basis.dets().iter().enumerate() {
        t.push((col, col, diagonal_energy(det, ints, n)));

        let occ: Vec<(usize, Spin)> = Spin::BOTH
            .iter()
            .flat_map(|&s| occupied(det.channel(s), n).map(move |p| (p, s)))
            .collect();

        // singles
        for &spin in &Spin::BOTH {
            let bits = det.channel(spin);
            for i in occupied(bits, n) {
                for a in (0..n).filter(|&a| bits >> a & 1 == 0) {
                    let Some((target, sign)) = apply_excitation(det, a, i, spin) else { continue };
                    let Some(row) = basis.position(&target) else { continue };
                    let mut v = ints.h(a, i);
                    for &(j, sj) in &occ {
                        if (j, sj) == (i, spin) {
                            continue;
                        }
                        v += ints.g(a, i, j, j);
                        if sj == spin {
                            v -= ints.g(a, j, j, i);
                        }
                    }
                    if v != 0.0 {
                        t.push((row, col, sign * v));
                    }
                }
            }
        }

        // same-spin doubles
        for &spin in &Spin::BOTH {
            let bits = det.channel(spin);
            let occ_s: Vec<usize> = occupied(bits, n).collect();
            let vir_s: Vec<usize> = (0..n).filter(|&a| bits >> a & 1 == 0).collect();
            for (x, &i) in occ_s.iter().enumerate() {
                for &j in &occ_s[x + 1..] {
                    for (y, &a) in vir_s.iter().enumerate() {
                        for &b in &vir_s[y + 1..] {
                            let v = ints.g(a, i, b, j) - ints.g(a, j, b, i);
                            if v == 0.0 {
                                continue;
                            }
                            push_double(basis, det, (a, i, spin), (b, j, spin), v, col, &mut t);
                        }
                    }
                }
            }
        }

        // opposite-spin doubles
        let occ_a: Vec<usize> = occupied(det.alpha, n).collect();
        let occ_b: Vec<usize> = occupied(det.beta, n).collect();
        let vir_a: Vec<usize> = (0..n).filter(|&a| det.alpha >> a & 1 == 0).collect();
        let vir_b: Vec<usize> = (0..n).filter(|&a| det.beta >> a & 1 == 0).collect();
        for &i in &occ_a {
            for &a in &vir_a {
                for &j in &occ_b {
                    for &b in &vir_b {
                        let v = ints.g(a, i, b, j);
                        if v == 0.0 {
                            continue;
                        }
                        push_double(basis, det, (a, i, Spin::Up), (b, j, Spin::Down), v, col, &mut t);
                    }
                }
            }
        }
    }
    OperatorMatrix::new(SparseMatrix::from_triplets(basis.len(), basis.len(), t))
}

fn push_double(
    basis: &SectorBasis,
    det: &Determinant,
    (a, i, si): (usize, usize, Spin),
    (b, j, sj): (usize, usize, Spin),
    value: f64,
    col: usize,
    out: &mut Vec<(usize, usize, f64)>,
) {
    // sign of a†_a a_i a†_b a_j |det⟩
    let Some((mid, s1)) = apply_excitation(det, b, j, sj) else { return };
    let Some((target, s2)) = apply_excitation(&mid, a, i, si) else { return };
    if let Some(row) = basis.position(&target) {
        out.push((row, col, s1 * s2 * value));
    }
}

/// Hamiltonian assembled by applying the operator string
/// `core + Σ k_ps E_ps + ½ Σ (pq|rs) E_pq E_rs`, with
/// `k_ps = h_ps − ½ Σ_q (pq|qs)`, determinant by determinant.
///
/// Independent of the Slater–Condon route; used to cross-check it.
pub fn build_hamiltonian_by_composition(basis: &SectorBasis, ints: &IntegralSet) -> Result<OperatorMatrix> {
    check_dims(basis, ints)?;
    let n = basis.norb();
    let mut k = vec![0.0; n * n];
    for p in 0..n {
        for s in 0..n {
            k[p * n + s] = ints.h(p, s) - 0.5 * (0..n).map(|q| ints.g(p, q, q, s)).sum::<f64>();
        }
    }
    let mut t = Vec::new();
    for (col, det) in basis.dets().iter().enumerate() {
        if ints.core_energy != 0.0 {
            t.push((col, col, ints.core_energy));
        }
        for &spin in &Spin::BOTH {
            for p in 0..n {
                for s in 0..n {
                    let c = k[p * n + s];
                    if c == 0.0 {
                        continue;
                    }
                    if let Some((target, sign)) = apply_excitation(det, p, s, spin) {
                        if let Some(row) = basis.position(&target) {
                            t.push((row, col, c * sign));
                        }
                    }
                }
            }
        }
        for &tau in &Spin::BOTH {
            for r in 0..n {
                for s in 0..n {
                    let Some((mid, s1)) = apply_excitation(det, r, s, tau) else { continue };
                    for &sigma in &Spin::BOTH {
                        for p in 0..n {
                            for q in 0..n {
                                let c = ints.g(p, q, r, s);
                                if c == 0.0 {
                                    continue;
                                }
                                let Some((target, s2)) = apply_excitation(&mid, p, q, sigma) else { continue };
                                if let Some(row) = basis.position(&target) {
                                    t.push((row, col, 0.5 * c * s1 * s2));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    OperatorMatrix::new(SparseMatrix::from_triplets(basis.len(), basis.len(), t))
}

/// Spin-summed excitation operator `E_pq = Σ_σ a†_{pσ} a_{qσ}`.
///
/// Not symmetric for `p ≠ q` (its transpose is `E_qp`), hence a plain
/// sparse matrix.
pub fn build_excitation(basis: &SectorBasis, p: usize, q: usize) -> Result<SparseMatrix> {
    if p >= basis.norb() || q >= basis.norb() {
        return Err(Error::Parameter(format!("orbital pair ({p}, {q}) outside norb = {}", basis.norb())));
    }
    let mut t = Vec::new();
    for (col, det) in basis.dets().iter().enumerate() {
        for spin in Spin::BOTH {
            if let Some((target, sign)) = apply_excitation(det, p, q, spin) {
                if let Some(row) = basis.position(&target) {
                    t.push((row, col, sign));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(basis.len(), basis.len(), t))
}
