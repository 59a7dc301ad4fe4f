//! Model Hamiltonians: a d⁶ ion between two radical ligands, the two-site
//! Heisenberg dimer, and the Hubbard dimer.
//!
//! The seven-orbital model keeps the d shell of [`crate::ligandfield`] on
//! orbitals 0–4 and adds one singly occupied ligand orbital on each of 5 and
//! 6. Ligand 5 hops into dz², ligand 6 into dx²−y².

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::analysis::{detect_avoided_crossing, CrossingReport, CurveSample, CurveSeries};
use crate::eigensolve::{
    assign_spin, diagonalize, diagonalize_lanczos, LanczosOptions, Spectrum, DEGENERACY_TOL, SPIN_TOL,
};
use crate::error::{Error, Result};
use crate::fockspace::{Determinant, SectorBasis, SectorSpec};
use crate::ligandfield::{crystal_field_oh, d_coulomb_integrals, RacahParameters};
use crate::secondq::{build_hamiltonian, build_total_s2, Fragment, IntegralSet};
use crate::spinproj::{build_projectors, joint_decompose, JointDecomposition};
use crate::units::{to_cm1, to_hartree};

pub const SPINMERISM_NORB: usize = 7;
pub const SPINMERISM_NELEC: usize = 8;
pub const LIGAND_ORBITALS: [usize; 2] = [5, 6];
/// (ligand, e_g partner) pairs carrying the hopping.
pub const SIGMA_PAIRS: [(usize, usize); 2] = [(5, 0), (6, 1)];

/// On-site repulsion that pushes the ionic states of the Heisenberg dimer
/// out of the way, in cm⁻¹.
pub const HEISENBERG_U_CM1: f64 = 1.0e6;

/// Parameters of the metal + two-radical model, all energies in cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinmerismParams {
    pub rp: RacahParameters,
    pub dq: f64,
    pub eps_l: f64,
    pub u_l: f64,
    pub t_ml: f64,
    pub k_ml: f64,
    pub k_ll: f64,
}

impl Default for SpinmerismParams {
    fn default() -> Self {
        Self {
            rp: RacahParameters::fe2(),
            dq: DEFAULT_DQ,
            eps_l: 8000.0,
            u_l: 60000.0,
            t_ml: DEFAULT_T_ML,
            k_ml: DEFAULT_K_ML,
            k_ll: DEFAULT_K_LL,
        }
    }
}

const DEFAULT_DQ: f64 = 1850.0;
const DEFAULT_T_ML: f64 = 2500.0;
const DEFAULT_K_ML: f64 = 500.0;
const DEFAULT_K_LL: f64 = 60.0;

impl SpinmerismParams {
    pub fn validate(&self) -> Result<()> {
        self.rp.validate()?;
        let values = [self.dq, self.eps_l, self.u_l, self.t_ml, self.k_ml, self.k_ll];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("spinmerism parameters must be finite".into()));
        }
        if self.u_l < 0.0 {
            return Err(Error::Parameter(format!("U_L must be non-negative, got {}", self.u_l)));
        }
        Ok(())
    }

    /// The decoupled limit: no hopping and no metal–ligand exchange.
    pub fn decoupled(mut self) -> Self {
        self.t_ml = 0.0;
        self.k_ml = 0.0;
        self
    }

    pub fn get(&self, p: SweepParameter) -> f64 {
        match p {
            SweepParameter::Dq => self.dq,
            SweepParameter::KMl => self.k_ml,
            SweepParameter::TMl => self.t_ml,
            SweepParameter::EpsL => self.eps_l,
        }
    }

    pub fn with(mut self, p: SweepParameter, value: f64) -> Self {
        match p {
            SweepParameter::Dq => self.dq = value,
            SweepParameter::KMl => self.k_ml = value,
            SweepParameter::TMl => self.t_ml = value,
            SweepParameter::EpsL => self.eps_l = value,
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "Dq")]
    Dq,
    #[serde(rename = "K_ML")]
    KMl,
    #[serde(rename = "t_ML")]
    TMl,
    #[serde(rename = "eps_L")]
    EpsL,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Dq => "Dq",
            SweepParameter::KMl => "K_ML",
            SweepParameter::TMl => "t_ML",
            SweepParameter::EpsL => "eps_L",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Dq" => Ok(SweepParameter::Dq),
            "K_ML" => Ok(SweepParameter::KMl),
            "t_ML" => Ok(SweepParameter::TMl),
            "eps_L" => Ok(SweepParameter::EpsL),
            _ => Err(Error::Parameter(format!("cannot sweep '{s}' (expected Dq, K_ML, t_ML or eps_L)"))),
        }
    }
}

pub fn metal_fragment() -> Fragment {
    Fragment::new(0..5)
}

pub fn ligand_fragment() -> Fragment {
    Fragment::new(LIGAND_ORBITALS)
}

/// Sector of the seven-orbital model with the given 2Sz.
pub fn spinmerism_sector(twice_sz: i32) -> Result<SectorSpec> {
    let n = SPINMERISM_NELEC as i32;
    if twice_sz.abs() > n || (n - twice_sz) % 2 != 0 {
        return Err(Error::Parameter(format!("2Sz = {twice_sz} is impossible for {n} electrons")));
    }
    SectorSpec::new(SPINMERISM_NORB, ((n + twice_sz) / 2) as usize, ((n - twice_sz) / 2) as usize)
}

/// Integrals of the metal + two-radical model, in hartree.
pub fn build_spinmerism(params: &SpinmerismParams) -> Result<IntegralSet> {
    params.validate()?;
    let d = d_coulomb_integrals(&params.rp);
    let cf = crystal_field_oh(params.dq);
    let mut ints = IntegralSet::zeros(SPINMERISM_NORB);
    for p in 0..5 {
        ints.set_h(p, p, cf.h(p, p));
        for q in 0..5 {
            for r in 0..5 {
                for s in 0..5 {
                    ints.set_g(p, q, r, s, d.g(p, q, r, s));
                }
            }
        }
    }
    for l in LIGAND_ORBITALS {
        ints.set_h(l, l, to_hartree(params.eps_l));
        ints.set_g(l, l, l, l, to_hartree(params.u_l));
        for p in 0..5 {
            ints.set_g(p, l, l, p, to_hartree(params.k_ml));
        }
    }
    for (l, p) in SIGMA_PAIRS {
        ints.set_h(l, p, to_hartree(params.t_ml));
    }
    ints.set_g(5, 6, 6, 5, to_hartree(params.k_ll));
    Ok(ints)
}

/// Parity block under the two mirror planes x → −x and y → −y.
///
/// Both mirrors map every orbital of the model to ± itself (dxy and dxz are
/// odd under x → −x, dxy and dyz under y → −y), so each determinant has a
/// definite parity and the Hamiltonian and all spin operators are block
/// diagonal. One component of every orbital triplet lands in each block,
/// which lifts the orbital degeneracy that otherwise hides avoided crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionBlock {
    pub odd_x: bool,
    pub odd_y: bool,
}

impl ReflectionBlock {
    /// The block holding the dxz-doubly-occupied component of ⁵T₂ (a
    /// component of the tetragonal E pair, where S_Fe = 1 and S_Fe = 2
    /// quintets can mix).
    pub const E_XZ: ReflectionBlock = ReflectionBlock { odd_x: true, odd_y: false };

    pub fn contains(&self, det: &Determinant) -> bool {
        let odd = |mask: u32| ((det.alpha & mask).count_ones() + (det.beta & mask).count_ones()) % 2 == 1;
        odd(0b01100) == self.odd_x && odd(0b10100) == self.odd_y
    }

    pub fn basis(&self, spec: SectorSpec) -> Result<SectorBasis> {
        let full = SectorBasis::build(spec)?;
        SectorBasis::from_dets(spec, full.dets().iter().copied().filter(|d| self.contains(d)).collect())
    }
}

impl Default for ReflectionBlock {
    fn default() -> Self {
        Self::E_XZ
    }
}

/// Diagonalized model with local spin decompositions of every eigenstate.
#[derive(Debug, Clone)]
pub struct SpinmerismSolution {
    pub basis: SectorBasis,
    pub spectrum: Spectrum,
    /// Metal (orbitals 0–4) versus ligands (5, 6).
    pub decompositions: Vec<JointDecomposition>,
}

/// Solves the model in one Sz sector, optionally restricted to a reflection
/// block. `k` limits the number of eigenpairs (all by default).
pub fn solve_spinmerism(
    params: &SpinmerismParams,
    twice_sz: i32,
    block: Option<ReflectionBlock>,
    k: Option<usize>,
) -> Result<SpinmerismSolution> {
    let spec = spinmerism_sector(twice_sz)?;
    let basis = match block {
        Some(b) => b.basis(spec)?,
        None => SectorBasis::build(spec)?,
    };
    let h = build_hamiltonian(&basis, &build_spinmerism(params)?)?;
    let s2 = build_total_s2(&basis)?;
    let spectrum = assign_spin(&diagonalize(&h, k)?, &s2, twice_sz, SPIN_TOL, DEGENERACY_TOL)?;
    let metal = build_projectors(&basis, &metal_fragment())?;
    let ligands = build_projectors(&basis, &ligand_fragment())?;
    let decompositions =
        (0..spectrum.len()).map(|i| joint_decompose(&spectrum.vector(i), &metal, &ligands)).collect::<Result<_>>()?;
    Ok(SpinmerismSolution { basis, spectrum, decompositions })
}

/// Lowest eigenvalue of the model over all spins (the Sz = 0 sector), in hartree.
pub fn spinmerism_ground_energy(params: &SpinmerismParams) -> Result<f64> {
    let basis = SectorBasis::build(spinmerism_sector(0)?)?;
    let h = build_hamiltonian(&basis, &build_spinmerism(params)?)?;
    Ok(diagonalize_lanczos(&h, 1, &LanczosOptions::default())?.eigenvalues[0])
}

/// Labels of the metal local-spin marginals used as curve character.
pub const S_FE_LABELS: [&str; 6] = ["S_Fe=0", "S_Fe=1/2", "S_Fe=1", "S_Fe=3/2", "S_Fe=2", "S_Fe=5/2"];

/// One of the two lowest S = 2 states at a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuintetState {
    /// Relative to the ground state of the whole model at this point, cm⁻¹.
    pub energy_cm1: f64,
    pub decomposition: JointDecomposition,
}

impl QuintetState {
    /// Metal local-spin marginals indexed by 2S_Fe, as in [`S_FE_LABELS`].
    pub fn s_fe_weights(&self) -> Vec<f64> {
        (0..S_FE_LABELS.len() as u32).map(|ts| self.decomposition.weight_a(ts)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Absolute ground energy, cm⁻¹.
    pub ground_cm1: f64,
    pub states: [QuintetState; 2],
    /// Third-lowest S = 2 energy of the block relative to the ground state,
    /// used to flag crossings with a state outside the tracked pair.
    pub next_cm1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinmerismSweep {
    pub parameter: SweepParameter,
    pub base: SpinmerismParams,
    pub block: ReflectionBlock,
    pub points: Vec<SweepPoint>,
    pub crossing: CrossingReport,
}

impl SpinmerismSweep {
    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.states[1].energy_cm1 - p.states[0].energy_cm1).collect()
    }

    /// Steps `i → i+1` across which state identities may change: inside the
    /// dominance window of the reported crossing, or next to an interior
    /// minimum of the gap between the second and third quintet.
    pub fn flagged_steps(&self) -> Vec<usize> {
        let n = self.points.len();
        let mut flagged = std::collections::BTreeSet::new();
        if let Some(w) = &self.crossing.weight_exchange {
            for i in 0..n.saturating_sub(1) {
                if self.points[i + 1].value > w.side_params[0] && self.points[i].value < w.side_params[1] {
                    flagged.insert(i);
                }
            }
        }
        let upper: Vec<Option<f64>> = self.points.iter().map(|p| p.next_cm1.map(|e| e - p.states[1].energy_cm1)).collect();
        for i in 1..n.saturating_sub(1) {
            if let (Some(a), Some(b), Some(c)) = (upper[i - 1], upper[i], upper[i + 1]) {
                if b <= a && b <= c {
                    flagged.insert(i - 1);
                    flagged.insert(i);
                }
            }
        }
        flagged.into_iter().collect()
    }
}

/// The lowest S = 2 states of a reflection block (at least two), absolute
/// energies in cm⁻¹.
fn lowest_quintets(params: &SpinmerismParams, block: ReflectionBlock, count: usize) -> Result<Vec<(f64, JointDecomposition)>> {
    let sol = solve_spinmerism(params, 4, Some(block), None)?;
    let found: Vec<_> = (0..sol.spectrum.len())
        .filter(|&i| sol.spectrum.labels[i].map(|l| l.twice_s) == Some(4))
        .take(count)
        .map(|i| (to_cm1(sol.spectrum.eigenvalues[i]), sol.decompositions[i].clone()))
        .collect();
    if found.len() < 2 {
        return Err(Error::Sweep(format!("fewer than two S = 2 states in block {block:?} at {params:?}")));
    }
    Ok(found)
}

fn marginals(d: &JointDecomposition) -> Vec<f64> {
    (0..S_FE_LABELS.len() as u32).map(|ts| d.weight_a(ts)).collect()
}

/// Follows the two lowest S_total = 2 states of one reflection block across
/// `values` of one parameter and locates their closest approach.
pub fn sweep_spinmerism(
    params: &SpinmerismParams,
    vary: SweepParameter,
    values: &[f64],
    block: ReflectionBlock,
    gap_tol: f64,
) -> Result<SpinmerismSweep> {
    params.validate()?;
    if values.len() < 3 {
        return Err(Error::Sweep("a sweep needs at least three points".into()));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Sweep("sweep values must be strictly increasing".into()));
    }
    let points = values
        .par_iter()
        .map(|&x| {
            let p = params.with(vary, x);
            let ground = to_cm1(spinmerism_ground_energy(&p)?);
            let mut q = lowest_quintets(&p, block, 3)?.into_iter();
            let mut state = || q.next().map(|(e, d)| QuintetState { energy_cm1: e - ground, decomposition: d });
            let states = [state().unwrap(), state().unwrap()];
            Ok(SweepPoint { value: x, ground_cm1: ground, states, next_cm1: state().map(|s| s.energy_cm1) })
        })
        .collect::<Result<Vec<_>>>()?;
    let series = |k: usize, label: &str| CurveSeries {
        label: label.into(),
        params: values.to_vec(),
        samples: points
            .iter()
            .map(|p| CurveSample { energy: p.states[k].energy_cm1, weights: p.states[k].s_fe_weights() })
            .collect(),
    };
    let mut resolve = |x: f64| -> Result<[CurveSample; 2]> {
        let q = lowest_quintets(&params.with(vary, x), block, 2)?;
        let sample = |k: usize| CurveSample { energy: q[k].0, weights: marginals(&q[k].1) };
        Ok([sample(0), sample(1)])
    };
    let crossing = detect_avoided_crossing(&series(0, "Q1"), &series(1, "Q2"), gap_tol, Some(&mut resolve))?;
    Ok(SpinmerismSweep { parameter: vary, base: *params, block, points, crossing })
}

/// Two orbitals with direct exchange `K = J` and no hopping, in hartree.
///
/// At half filling the neutral singlet and triplet are split by exactly 2J;
/// the ionic states sit near [`HEISENBERG_U_CM1`].
pub fn build_heisenberg_dimer(j_cm1: f64) -> IntegralSet {
    let mut ints = IntegralSet::zeros(2);
    let u = to_hartree(HEISENBERG_U_CM1);
    ints.set_g(0, 0, 0, 0, u);
    ints.set_g(1, 1, 1, 1, u);
    ints.set_g(0, 1, 1, 0, to_hartree(j_cm1));
    ints
}

/// Two-site Hubbard model in hartree: hopping `-t`, on-site `U`.
pub fn build_hubbard_dimer(u: f64, t: f64) -> IntegralSet {
    let mut ints = IntegralSet::zeros(2);
    ints.set_h(0, 1, -t);
    ints.set_g(0, 0, 0, 0, u);
    ints.set_g(1, 1, 1, 1, u);
    ints
}

/// Exchange constant of `H = −2J Σ ŝᵢ·ŝⱼ` fitted to a spin-labelled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergFit {
    #[serde(rename = "J_cm1")]
    pub j: f64,
    /// Energy of the S = 0 reference (Landé pattern `c − J·S(S+1)`), cm⁻¹.
    pub offset_cm1: f64,
    /// Largest deviation of the fitted levels from the spectrum, cm⁻¹.
    pub residual_cm1: f64,
    pub levels_used: usize,
}

/// Fits the Landé interval rule `E(S) = c − J·S(S+1)` to the lowest level of
/// every spin present in the spectrum.
///
/// With exactly a singlet and a triplet this is `J = (E_S − E_T)/2` with zero
/// residual.
pub fn fit_heisenberg(spectrum: &Spectrum) -> Result<HeisenbergFit> {
    let mut lowest: std::collections::BTreeMap<u32, f64> = Default::default();
    for (i, e) in spectrum.eigenvalues.iter().enumerate() {
        let Some(label) = spectrum.labels[i] else {
            return Err(Error::Parameter(format!("eigenvalue {i} has no spin label")));
        };
        let slot = lowest.entry(label.twice_s).or_insert(*e);
        *slot = slot.min(*e);
    }
    if !lowest.contains_key(&0) || !lowest.contains_key(&2) {
        return Err(Error::Parameter("Heisenberg fit needs at least one singlet and one triplet".into()));
    }
    // least squares on (1, −S(S+1))
    let pts: Vec<(f64, f64)> = lowest
        .iter()
        .map(|(&ts, &e)| {
            let s = ts as f64 / 2.0;
            (s * (s + 1.0), to_cm1(e))
        })
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let offset = my - slope * mx;
    let residual = pts.iter().map(|(x, y)| (offset + slope * x - y).abs()).fold(0.0, f64::max);
    let residual = if pts.len() == 2 { 0.0 } else { residual };
    Ok(HeisenbergFit { j: -slope, offset_cm1: offset, residual_cm1: residual, levels_used: pts.len() })
}
