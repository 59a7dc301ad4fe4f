//! Local spin projectors and joint (S_A, S_B) decomposition of eigenstates.
//!
//! `Ŝ²_A` conserves the fragment's own up and down electron counts, so it is
//! diagonalized block by block over those counts. Each local spin sector keeps
//! its orthonormal eigenvectors per block; a projector is never formed unless
//! asked for. The block structure also carries the fragment particle number,
//! which is what the charge-transfer split is keyed on.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{diagonalize_dense_matrix, nearest_twice_s, Spectrum};
use crate::error::{Error, Result};
use crate::fockspace::SectorBasis;
use crate::secondq::{build_local_s2, Fragment};
use crate::units::HARTREE_TO_CM1;

/// Eigenvalues of `Ŝ²_A` must sit this close to some s(s+1).
pub const PROJECTOR_TOL: f64 = 1e-6;
/// Weights smaller than this are written as exact zeros in tables.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Block {
    n_local: usize,
    rows: Vec<usize>,
    vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SpinSector {
    pub twice_s: u32,
    blocks: Vec<Block>,
}

impl SpinSector {
    pub fn s(&self) -> f64 {
        self.twice_s as f64 / 2.0
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.vectors.ncols()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SpinProjectorSet {
    fragment: Fragment,
    dim: usize,
    sectors: Vec<SpinSector>,
}

impl SpinProjectorSet {
    pub fn fragment(&self) -> &Fragment {
        &self.fragment
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sectors in ascending local spin.
    pub fn sectors(&self) -> &[SpinSector] {
        &self.sectors
    }

    pub fn twice_spins(&self) -> Vec<u32> {
        self.sectors.iter().map(|s| s.twice_s).collect()
    }

    fn sector(&self, twice_s: u32) -> Option<&SpinSector> {
        self.sectors.iter().find(|s| s.twice_s == twice_s)
    }

    /// Dense `P_s`; meant for tests and small bases.
    pub fn projector(&self, twice_s: u32) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.dim, self.dim);
        if let Some(sector) = self.sector(twice_s) {
            for b in &sector.blocks {
                let local = &b.vectors * b.vectors.transpose();
                for (i, &r) in b.rows.iter().enumerate() {
                    for (j, &c) in b.rows.iter().enumerate() {
                        p[(r, c)] = local[(i, j)];
                    }
                }
            }
        }
        p
    }

    pub fn apply(&self, twice_s: u32, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        let Some(sector) = self.sector(twice_s) else { return out };
        for b in &sector.blocks {
            let coeffs = block_coefficients(b, x);
            for (i, &r) in b.rows.iter().enumerate() {
                out[r] = b.vectors.row(i).dot(&coeffs);
            }
        }
        out
    }

    /// `‖P_s x‖²` split by fragment particle number.
    pub fn weight_by_number(&self, twice_s: u32, x: &[f64]) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        if let Some(sector) = self.sector(twice_s) {
            for b in &sector.blocks {
                *out.entry(b.n_local).or_insert(0.0) += block_coefficients(b, x).norm_squared();
            }
        }
        out
    }
}

fn block_coefficients(b: &Block, x: &[f64]) -> nalgebra::RowDVector<f64> {
    let local = nalgebra::DVector::from_iterator(b.rows.len(), b.rows.iter().map(|&r| x[r]));
    (b.vectors.transpose() * local).transpose()
}

pub fn build_projectors(basis: &SectorBasis, frag: &Fragment) -> Result<SpinProjectorSet> {
    let s2 = build_local_s2(basis, frag)?;
    let mask = frag.mask();
    let mut blocks: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, d) in basis.dets().iter().enumerate() {
        blocks.entry(((d.alpha & mask).count_ones(), (d.beta & mask).count_ones())).or_default().push(i);
    }
    let mut sectors: BTreeMap<u32, Vec<Block>> = BTreeMap::new();
    for ((na, nb), rows) in blocks {
        let local = s2.matrix().submatrix(&rows).to_dense();
        let eig = diagonalize_dense_matrix(local, None, None)?;
        let twice_sz = na as i32 - nb as i32;
        let labels = eig
            .eigenvalues
            .iter()
            .map(|&x| {
                let twice_s = nearest_twice_s(x, twice_sz);
                let exact = (twice_s as f64) * (twice_s as f64 + 2.0) / 4.0;
                if (x - exact).abs() > PROJECTOR_TOL {
                    Err(Error::Projector { value: x, tol: PROJECTOR_TOL })
                } else {
                    Ok(twice_s)
                }
            })
            .collect::<Result<Vec<u32>>>()?;
        let mut start = 0;
        while start < labels.len() {
            let mut end = start;
            while end < labels.len() && labels[end] == labels[start] {
                end += 1;
            }
            let vectors = eig.eigenvectors.columns(start, end - start).into_owned();
            let n_local = (na + nb) as usize;
            sectors.entry(labels[start]).or_default().push(Block { n_local, rows: rows.clone(), vectors });
            start = end;
        }
    }
    Ok(SpinProjectorSet {
        fragment: frag.clone(),
        dim: basis.len(),
        sectors: sectors.into_iter().map(|(twice_s, blocks)| SpinSector { twice_s, blocks }).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointWeight {
    pub twice_sa: u32,
    pub twice_sb: u32,
    /// Electrons on fragment A.
    pub n_a: usize,
    pub weight: f64,
}

/// `‖P_{S_A} P_{S_B} ψ‖²` for every pair of local spins, split by the particle
/// number on fragment A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDecomposition {
    pub entries: Vec<JointWeight>,
}

impl JointDecomposition {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Summed over fragment particle numbers.
    pub fn weight(&self, twice_sa: u32, twice_sb: u32) -> f64 {
        self.entries.iter().filter(|e| e.twice_sa == twice_sa && e.twice_sb == twice_sb).map(|e| e.weight).sum()
    }

    pub fn weight_with_number(&self, twice_sa: u32, twice_sb: u32, n_a: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.twice_sa == twice_sa && e.twice_sb == twice_sb && e.n_a == n_a)
            .map(|e| e.weight)
            .sum()
    }

    /// Marginal over fragment A's local spin.
    pub fn weight_a(&self, twice_sa: u32) -> f64 {
        self.entries.iter().filter(|e| e.twice_sa == twice_sa).map(|e| e.weight).sum()
    }

    pub fn number_distribution(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.n_a).or_insert(0.0) += e.weight;
        }
        out
    }

    /// Weight of every component whose fragment-A particle count is not `nominal`.
    pub fn ct_weight(&self, nominal: usize) -> f64 {
        self.entries.iter().filter(|e| e.n_a != nominal).map(|e| e.weight).sum()
    }
}

pub fn joint_decompose(state: &[f64], a: &SpinProjectorSet, b: &SpinProjectorSet) -> Result<JointDecomposition> {
    if !a.fragment.is_disjoint(&b.fragment) {
        return Err(Error::Parameter("fragments overlap".into()));
    }
    if a.dim != state.len() || b.dim != state.len() {
        return Err(Error::Dimension { expected: a.dim, found: state.len() });
    }
    let norm = state.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("state norm {norm} is not 1")));
    }
    let mut entries = Vec::new();
    for sb in &b.sectors {
        let projected = b.apply(sb.twice_s, state);
        for sa in &a.sectors {
            for (n_a, weight) in a.weight_by_number(sa.twice_s, &projected) {
                entries.push(JointWeight { twice_sa: sa.twice_s, twice_sb: sb.twice_s, n_a, weight });
            }
        }
    }
    entries.sort_by_key(|e| (e.twice_sa, e.twice_sb, e.n_a));
    Ok(JointDecomposition { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    /// Relative to the lowest state of the spectrum.
    pub energy_cm1: f64,
    pub multiplicity: Option<u32>,
    /// One entry per `(2S_A, 2S_B)` column of the table.
    pub weights: Vec<f64>,
    pub ct_weight: f64,
    pub number_distribution: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionTable {
    /// Column keys `(2S_A, 2S_B)`, in ascending order.
    pub columns: Vec<(u32, u32)>,
    pub nominal_n_a: usize,
    pub rows: Vec<ProjectionRow>,
}

fn floor(w: f64) -> f64 {
    if w.abs() < WEIGHT_FLOOR {
        0.0
    } else {
        w
    }
}

impl ProjectionTable {
    pub fn build(spectrum: &Spectrum, a: &SpinProjectorSet, b: &SpinProjectorSet, nominal_n_a: usize) -> Result<Self> {
        let columns: Vec<(u32, u32)> =
            a.twice_spins().into_iter().flat_map(|sa| b.twice_spins().into_iter().map(move |sb| (sa, sb))).collect();
        let ground = spectrum.eigenvalues.first().copied().unwrap_or(0.0);
        let mut rows = Vec::with_capacity(spectrum.len());
        for i in 0..spectrum.len() {
            let d = joint_decompose(&spectrum.vector(i), a, b)?;
            rows.push(ProjectionRow {
                energy_cm1: (spectrum.eigenvalues[i] - ground) * HARTREE_TO_CM1,
                multiplicity: spectrum.multiplicity(i),
                weights: columns.iter().map(|&(sa, sb)| floor(d.weight(sa, sb))).collect(),
                ct_weight: floor(d.ct_weight(nominal_n_a)),
                number_distribution: d.number_distribution().into_iter().map(|(n, w)| (n, floor(w))).collect(),
            });
        }
        Ok(Self { columns, nominal_n_a, rows })
    }
}

/// Amplitudes of `|S M⟩` in the product basis `|S_A m_A⟩|S_B m_B⟩`, keyed by
/// `(2m_A, 2m_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub twice_sa: u32,
    pub twice_sb: u32,
    pub twice_s: u32,
    pub twice_m: i32,
    pub amplitudes: BTreeMap<(i32, i32), f64>,
}

impl CoupledState {
    pub fn weights(&self) -> BTreeMap<(i32, i32), f64> {
        self.amplitudes.iter().map(|(&k, &c)| (k, c * c)).collect()
    }

    /// Joint local-spin weights; all of the mass sits on `(S_A, S_B)`.
    pub fn joint_weights(&self) -> BTreeMap<(u32, u32), f64> {
        BTreeMap::from([((self.twice_sa, self.twice_sb), self.amplitudes.values().map(|c| c * c).sum())])
    }
}

/// `J₋|j m⟩` coefficient in twice-units.
fn lowering_factor(twice_j: i32, twice_m: i32) -> f64 {
    (((twice_j * (twice_j + 2) - twice_m * (twice_m - 2)) as f64) / 4.0).sqrt()
}

/// Coupled two-spin state built by ladder descent from the stretched state.
///
/// Each `|S S⟩` below the stretched one is the vector of the `M = S` subspace
/// orthogonal to all `|S' S⟩` with `S' > S`, with the Condon–Shortley phase
/// (positive amplitude at `m_A = S_A`). It is then lowered to the requested `M`.
pub fn coupled_weights_oracle(twice_sa: u32, twice_sb: u32, twice_s: u32, twice_m: i32) -> Result<CoupledState> {
    let (ja, jb, j) = (twice_sa as i32, twice_sb as i32, twice_s as i32);
    if j < (ja - jb).abs() || j > ja + jb || (ja + jb - j) % 2 != 0 {
        return Err(Error::Parameter(format!("triangle rule fails for 2S_A={ja}, 2S_B={jb}, 2S={j}")));
    }
    if twice_m.abs() > j || (j - twice_m) % 2 != 0 {
        return Err(Error::Parameter(format!("2M={twice_m} is not a projection of 2S={j}")));
    }
    type Vector = BTreeMap<(i32, i32), f64>;
    let lower = |v: &Vector| -> Vector {
        let mut out = Vector::new();
        for (&(ma, mb), &c) in v {
            if ma > -ja {
                *out.entry((ma - 2, mb)).or_insert(0.0) += c * lowering_factor(ja, ma);
            }
            if mb > -jb {
                *out.entry((ma, mb - 2)).or_insert(0.0) += c * lowering_factor(jb, mb);
            }
        }
        let norm = out.values().map(|c| c * c).sum::<f64>().sqrt();
        out.values_mut().for_each(|c| *c /= norm);
        out
    };
    let dot = |a: &Vector, b: &Vector| a.iter().map(|(k, x)| x * b.get(k).copied().unwrap_or(0.0)).sum::<f64>();
    // Multiplets found so far, each kept at its current M.
    let mut multiplets: Vec<Vector> = vec![Vector::from([((ja, jb), 1.0)])];
    let mut top = ja + jb;
    while top > j {
        let m = top - 2;
        for v in multiplets.iter_mut() {
            *v = lower(v);
        }
        let mut keys = Vec::new();
        let mut ma = ja;
        while ma >= -ja {
            let mb = m - ma;
            if mb.abs() <= jb && (jb - mb) % 2 == 0 {
                keys.push((ma, mb));
            }
            ma -= 2;
        }
        // The new multiplet spans the one direction of this M subspace left over
        // by the higher ones; the product vector with the largest remainder is
        // the best-conditioned seed.
        let mut fresh = Vector::new();
        let mut best = 0.0;
        for &k in &keys {
            let mut v: Vector = keys.iter().map(|&q| (q, if q == k { 1.0 } else { 0.0 })).collect();
            for _ in 0..2 {
                for u in &multiplets {
                    let overlap = dot(&v, u);
                    for (q, x) in u {
                        *v.get_mut(q).unwrap() -= overlap * x;
                    }
                }
            }
            let norm = v.values().map(|c| c * c).sum::<f64>().sqrt();
            if norm > best {
                best = norm;
                fresh = v;
            }
        }
        let lead = fresh.iter().max_by_key(|(k, _)| k.0).map(|(_, c)| *c).unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        fresh.values_mut().for_each(|c| *c *= sign / best);
        multiplets.push(fresh);
        top = m;
    }
    let mut state = multiplets.pop().unwrap();
    let mut m = j;
    while m > twice_m {
        state = lower(&state);
        m -= 2;
    }
    state.retain(|_, c| c.abs() > 1e-15);
    Ok(CoupledState { twice_sa, twice_sb, twice_s, twice_m, amplitudes: state })
}
