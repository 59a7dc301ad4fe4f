//! Eigenpairs of symmetric operator matrices and their spin labels.
//!
//! Small problems go through a dense symmetric eigensolver. Larger ones use
//! Lanczos with full reorthogonalization, locking one converged eigenpair
//! per run so that degenerate eigenvalues are recovered with their full
//! multiplicity.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::OperatorMatrix;

/// Dimension up to which [`diagonalize`] uses the dense path.
pub const DENSE_LIMIT: usize = 4000;
/// Default energy tolerance (hartree) for treating levels as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Default tolerance on `⟨Ŝ²⟩ − S(S+1)`.
pub const SPIN_TOL: f64 = 1e-6;
/// Residual contract: `‖Hv − λv‖ < RESIDUAL_TOL · max(1, |λ|)`.
pub const RESIDUAL_TOL: f64 = 1e-9;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinLabel {
    /// 2S
    pub twice_s: u32,
    /// 2Sz of the sector the state lives in
    pub twice_sz: i32,
    /// Measured `⟨Ŝ²⟩`.
    pub s2: f64,
}

impl SpinLabel {
    pub fn multiplicity(&self) -> u32 {
        self.twice_s + 1
    }

    pub fn s(&self) -> f64 {
        self.twice_s as f64 / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// One orthonormal column per eigenvalue.
    pub eigenvectors: DMatrix<f64>,
    pub labels: Vec<Option<SpinLabel>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    pub fn multiplicity(&self, i: usize) -> Option<u32> {
        self.labels[i].map(|l| l.multiplicity())
    }

    /// Largest relative residual `‖Hv − λv‖ / max(1, |λ|)` over all pairs.
    pub fn max_residual(&self, op: &OperatorMatrix) -> f64 {
        (0..self.len())
            .map(|i| {
                let v = self.vector(i);
                let hv = op.matvec(&v);
                let lam = self.eigenvalues[i];
                let r = hv.iter().zip(&v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
                r / lam.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `VᵀV` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let k = g.nrows();
        (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

/// Fixes the overall sign of each column so that its largest-magnitude
/// component (first on ties) is positive.
fn normalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() + 1e-12 {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// `k` lowest eigenpairs (all when `k` is `None`), dense below
/// [`DENSE_LIMIT`] and Lanczos above.
pub fn diagonalize(op: &OperatorMatrix, k: Option<usize>) -> Result<Spectrum> {
    let k = k.unwrap_or(op.dim()).min(op.dim());
    if op.dim() <= DENSE_LIMIT || k * 4 > op.dim() {
        diagonalize_dense(op, Some(k))
    } else {
        diagonalize_lanczos(op, k, &LanczosOptions::default())
    }
}

pub fn diagonalize_dense(op: &OperatorMatrix, k: Option<usize>) -> Result<Spectrum> {
    diagonalize_dense_matrix(op.to_dense(), k, Some(op))
}

/// Dense symmetric eigenproblem on an explicit matrix.
/// nalgebra's implicit QR occasionally stops with off-diagonal remnants near
/// 1e-9 relative. When that happens the projected matrix `VᵀAV` is cleaned up
/// with cyclic Jacobi sweeps, which converge quadratically from there.
fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut v = eig.eigenvectors;
    let av = &m * &v;
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for c in 0..n {
        let lambda = eig.eigenvalues[c];
        for r in 0..n {
            worst = worst.max((av[(r, c)] - lambda * v[(r, c)]).abs());
        }
    }
    if worst <= 1e-13 * scale {
        return (eig.eigenvalues.iter().copied().collect(), v);
    }
    let mut b = v.transpose() * av;
    b = (&b + b.transpose()) * 0.5;
    jacobi_sweeps(&mut b, &mut v, scale);
    ((0..n).map(|i| b[(i, i)]).collect(), v)
}

fn jacobi_sweeps(b: &mut DMatrix<f64>, v: &mut DMatrix<f64>, scale: f64) {
    let n = b.nrows();
    let floor = f64::EPSILON * scale;
    for _ in 0..30 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let bpq = b[(p, q)];
                if bpq.abs() <= floor {
                    continue;
                }
                rotated = true;
                let theta = (b[(q, q)] - b[(p, p)]) / (2.0 * bpq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (x, y) = (b[(r, p)], b[(r, q)]);
                    b[(r, p)] = c * x - s * y;
                    b[(r, q)] = s * x + c * y;
                }
                for r in 0..n {
                    let (x, y) = (b[(p, r)], b[(q, r)]);
                    b[(p, r)] = c * x - s * y;
                    b[(q, r)] = s * x + c * y;
                }
                b[(p, q)] = 0.0;
                b[(q, p)] = 0.0;
                for r in 0..v.nrows() {
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = c * x - s * y;
                    v[(r, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

pub fn diagonalize_dense_matrix(m: DMatrix<f64>, k: Option<usize>, check: Option<&OperatorMatrix>) -> Result<Spectrum> {
    let n = m.nrows();
    let k = k.unwrap_or(n).min(n);
    let (values, vectors) = symmetric_eigen(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(k);
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = DMatrix::from_fn(n, k, |r, c| vectors[(r, order[c])]);
    normalize_signs(&mut eigenvectors);
    let spectrum = Spectrum { eigenvalues, eigenvectors, labels: vec![None; k] };
    if let Some(op) = check {
        let residual = spectrum.max_residual(op);
        if residual > RESIDUAL_TOL {
            return Err(Error::NoConvergence { iterations: 0, residual });
        }
    }
    Ok(spectrum)
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Krylov steps per run before an explicit restart.
    pub max_steps: usize,
    /// Restarts allowed per eigenpair.
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_steps: 300, max_restarts: 20, seed: LANCZOS_SEED }
    }
}

fn dot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b)
}

fn orthogonalize(w: &mut DVector<f64>, against: &[DVector<f64>]) {
    // twice is enough
    for _ in 0..2 {
        for v in against {
            let c = dot(w, v);
            w.axpy(-c, v, 1.0);
        }
    }
}

/// Lowest eigenpair of `op` restricted to the complement of `locked`.
fn lowest_in_complement(
    op: &OperatorMatrix,
    locked: &[DVector<f64>],
    start: DVector<f64>,
    max_steps: usize,
) -> (f64, DVector<f64>, f64) {
    let n = op.dim();
    let mut q = start;
    orthogonalize(&mut q, locked);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_steps + 1);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let steps = max_steps.min(n - locked.len());
    let mut ritz = (0.0, q.clone());
    for j in 0..steps {
        basis.push(q.clone());
        let mut w = DVector::from_vec(op.matvec(q.as_slice()));
        let a = dot(&w, &q);
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let b = w.norm();
        let m = alpha.len();
        let check = j + 1 == steps || b < 1e-12 || m % 8 == 0;
        if check {
            let t = DMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let lo = (0..m).min_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).unwrap();
            let theta = eig.eigenvalues[lo];
            let s = eig.eigenvectors.column(lo);
            let estimate = (b * s[m - 1]).abs();
            let mut v = DVector::zeros(n);
            for (i, bv) in basis.iter().enumerate() {
                v.axpy(s[i], bv, 1.0);
            }
            orthogonalize(&mut v, locked);
            v /= v.norm();
            ritz = (theta, v);
            if estimate < 1e-3 * RESIDUAL_TOL * theta.abs().max(1.0) || b < 1e-12 {
                break;
            }
        }
        if b < 1e-12 {
            break;
        }
        beta.push(b);
        q = w / b;
    }
    let (theta, v) = ritz;
    let hv = DVector::from_vec(op.matvec(v.as_slice()));
    let residual = (hv - &v * theta).norm() / theta.abs().max(1.0);
    (theta, v, residual)
}

/// `k` lowest eigenpairs by Lanczos with full reorthogonalization and locking.
///
/// The start vectors come from a fixed seed, so results are reproducible.
pub fn diagonalize_lanczos(op: &OperatorMatrix, k: usize, opts: &LanczosOptions) -> Result<Spectrum> {
    let n = op.dim();
    let k = k.min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut values: Vec<f64> = Vec::with_capacity(k);
    let mut iterations = 0usize;
    for _ in 0..k {
        let mut start = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
        let mut best = f64::INFINITY;
        let mut found = None;
        for _ in 0..=opts.max_restarts {
            let (theta, v, residual) = lowest_in_complement(op, &locked, start, opts.max_steps);
            iterations += opts.max_steps;
            best = best.min(residual);
            if residual < RESIDUAL_TOL * 1e-1 {
                found = Some((theta, v));
                break;
            }
            start = v;
        }
        match found {
            Some((theta, v)) => {
                values.push(theta);
                locked.push(v);
            }
            None => return Err(Error::NoConvergence { iterations, residual: best }),
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = DMatrix::from_fn(n, k, |r, c| locked[order[c]][r]);
    normalize_signs(&mut eigenvectors);
    Ok(Spectrum { eigenvalues, eigenvectors, labels: vec![None; k] })
}

/// Maximal runs of ascending `values` whose consecutive gaps are below `tol`.
pub fn group_degenerate(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= tol {
            if i > start {
                groups.push(start..i);
            }
            start = i;
        }
    }
    groups
}

/// Nearest admissible 2S for a measured `⟨Ŝ²⟩`, respecting the parity of 2Sz.
pub fn nearest_twice_s(s2: f64, twice_sz: i32) -> u32 {
    let s = (-1.0 + (1.0 + 4.0 * s2.max(0.0)).sqrt()) / 2.0;
    let raw = (2.0 * s).round() as i64;
    let parity = twice_sz.rem_euclid(2) as i64;
    let candidates = [raw - 1, raw, raw + 1];
    let pick = candidates
        .into_iter()
        .filter(|c| *c >= 0 && c.rem_euclid(2) == parity)
        .min_by(|a, b| {
            let ea = (s2 - (*a as f64 / 2.0) * (*a as f64 / 2.0 + 1.0)).abs();
            let eb = (s2 - (*b as f64 / 2.0) * (*b as f64 / 2.0 + 1.0)).abs();
            ea.total_cmp(&eb)
        })
        .unwrap_or(0);
    pick as u32
}

fn s_times_s1(twice_s: u32) -> f64 {
    let s = twice_s as f64 / 2.0;
    s * (s + 1.0)
}

/// Labels every eigenvector with its total spin.
///
/// Degenerate groups whose members are spin-contaminated are rotated into
/// eigenvectors of `Ŝ²` before labeling; the energies are untouched.
pub fn assign_spin(spectrum: &Spectrum, s2: &OperatorMatrix, twice_sz: i32, tol: f64, degeneracy_tol: f64) -> Result<Spectrum> {
    if s2.dim() != spectrum.eigenvectors.nrows() {
        return Err(Error::Dimension { expected: spectrum.eigenvectors.nrows(), found: s2.dim() });
    }
    let mut out = spectrum.clone();
    for group in group_degenerate(&spectrum.eigenvalues, degeneracy_tol) {
        let cols = out.eigenvectors.columns(group.start, group.len()).into_owned();
        let s2v = s2.matrix().mul_dense(&cols);
        let m = cols.transpose() * &s2v;
        let contaminated = (0..group.len()).any(|i| {
            let x = m[(i, i)];
            (x - s_times_s1(nearest_twice_s(x, twice_sz))).abs() > tol
        });
        let rotated = if contaminated {
            let eig = SymmetricEigen::new(m.clone());
            let mut order: Vec<usize> = (0..group.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let w = DMatrix::from_fn(group.len(), group.len(), |r, c| eig.eigenvectors[(r, order[c])]);
            let mut v = cols * w;
            normalize_signs(&mut v);
            out.eigenvectors.columns_mut(group.start, group.len()).copy_from(&v);
            v
        } else {
            cols
        };
        for (offset, i) in group.clone().enumerate() {
            let col: Vec<f64> = rotated.column(offset).iter().copied().collect();
            let x = s2.expectation(&col);
            let twice_s = nearest_twice_s(x, twice_sz);
            if (x - s_times_s1(twice_s)).abs() > tol || (twice_s as i32) < twice_sz.abs() {
                return Err(Error::SpinLabel { value: x, tol });
            }
            out.labels[i] = Some(SpinLabel { twice_s, twice_sz, s2: x });
        }
    }
    Ok(out)
}
