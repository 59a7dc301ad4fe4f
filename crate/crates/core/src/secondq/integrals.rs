use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of a spin-free electronic Hamiltonian, in hartree.
///
/// Two-body values use chemists' notation `(pq|rs)` and are stored densely
/// with all eight permutational copies kept in sync by the setters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralSet {
    norb: usize,
    pub core_energy: f64,
    h: Vec<f64>,
    g: Vec<f64>,
}

/// The eight index orderings equivalent to `(pq|rs)` for real orbitals,
/// without repeats.
pub fn permutations(p: usize, q: usize, r: usize, s: usize) -> BTreeSet<(usize, usize, usize, usize)> {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
    .into_iter()
    .collect()
}

impl IntegralSet {
    pub fn zeros(norb: usize) -> Self {
        Self { norb, core_energy: 0.0, h: vec![0.0; norb * norb], g: vec![0.0; norb.pow(4)] }
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    #[inline]
    fn g_index(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.norb + q) * self.norb + r) * self.norb + s
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.norb + q]
    }

    #[inline]
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g[self.g_index(p, q, r, s)]
    }

    /// Sets `h(p,q)` and `h(q,p)`.
    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        let n = self.norb;
        self.h[p * n + q] = value;
        self.h[q * n + p] = value;
    }

    pub fn add_h(&mut self, p: usize, q: usize, value: f64) {
        let v = self.h(p, q) + value;
        self.set_h(p, q, v);
    }

    /// Sets `(pq|rs)` and its permutational copies.
    pub fn set_g(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        for (a, b, c, d) in permutations(p, q, r, s) {
            let k = self.g_index(a, b, c, d);
            self.g[k] = value;
        }
    }

    pub fn add_g(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let v = self.g(p, q, r, s) + value;
        self.set_g(p, q, r, s, v);
    }

    /// Checks finiteness and the permutational symmetries.
    pub fn validate(&self) -> Result<()> {
        if !self.core_energy.is_finite() || self.h.iter().chain(&self.g).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("integral set contains non-finite values".into()));
        }
        let n = self.norb;
        for p in 0..n {
            for q in 0..n {
                if self.h(p, q) != self.h(q, p) {
                    return Err(Error::Parameter(format!("h({p},{q}) != h({q},{p})")));
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g(p, q, r, s);
                        if permutations(p, q, r, s).into_iter().any(|(a, b, c, d)| self.g(a, b, c, d) != v) {
                            return Err(Error::Parameter(format!("({p}{q}|{r}{s}) breaks 8-fold symmetry")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Integrals expressed in a rotated orbital basis `φ'_i = Σ_p U[p,i] φ_p`.
    pub fn rotated(&self, u: &nalgebra::DMatrix<f64>) -> Self {
        let n = self.norb;
        assert_eq!((u.nrows(), u.ncols()), (n, n));
        let mut out = Self::zeros(n);
        out.core_energy = self.core_energy;
        let hm = nalgebra::DMatrix::from_fn(n, n, |p, q| self.h(p, q));
        let hr = u.transpose() * hm * u;
        for i in 0..n {
            for j in 0..n {
                out.h[i * n + j] = hr[(i, j)];
            }
        }
        // four successive one-index transforms
        let mut t = self.g.clone();
        for axis in 0..4 {
            let mut next = vec![0.0; t.len()];
            for idx in 0..t.len() {
                let mut digits = [idx / (n * n * n), (idx / (n * n)) % n, (idx / n) % n, idx % n];
                let target = digits[axis];
                let mut acc = 0.0;
                for k in 0..n {
                    digits[axis] = k;
                    let src = ((digits[0] * n + digits[1]) * n + digits[2]) * n + digits[3];
                    acc += u[(k, target)] * t[src];
                }
                next[idx] = acc;
            }
            t = next;
        }
        out.g = t;
        out
    }
}

/// A set of spatial orbitals treated as one local unit (a metal centre, a ligand pair).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fragment {
    orbitals: Vec<usize>,
}

impl Fragment {
    pub fn new(orbitals: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = orbitals.into_iter().collect();
        Self { orbitals: set.into_iter().collect() }
    }

    pub fn orbitals(&self) -> &[usize] {
        &self.orbitals
    }

    pub fn is_empty(&self) -> bool {
        self.orbitals.is_empty()
    }

    pub fn mask(&self) -> u32 {
        self.orbitals.iter().fold(0, |m, &p| m | (1 << p))
    }

    pub fn validate(&self, norb: usize) -> Result<()> {
        match self.orbitals.iter().find(|&&p| p >= norb) {
            Some(p) => Err(Error::Parameter(format!("fragment orbital {p} outside norb = {norb}"))),
            None => Ok(()),
        }
    }

    pub fn is_disjoint(&self, other: &Fragment) -> bool {
        self.mask() & other.mask() == 0
    }
}
