//! dⁿ ligand-field spectra in an octahedral field.
//!
//! Coulomb integrals among the five real d orbitals come from Slater radial
//! parameters and l=2 Gaunt coefficients, the latter evaluated from exact 3j
//! symbols. Orbital order is dz², dx²−y², dxy, dxz, dyz throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{assign_spin, diagonalize, DEGENERACY_TOL, SPIN_TOL};
use crate::error::{Error, Result};
use crate::fockspace::{SectorBasis, SectorSpec};
use crate::secondq::{build_hamiltonian, build_total_s2, IntegralSet};
use crate::units::{to_hartree, HARTREE_TO_CM1};

pub const D_ORBITAL_NAMES: [&str; 5] = ["dz2", "dx2-y2", "dxy", "dxz", "dyz"];
pub const EG: [usize; 2] = [0, 1];
pub const T2G: [usize; 3] = [2, 3, 4];

/// Racah parameters in cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RacahParameters {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "A", default)]
    pub a: f64,
}

impl RacahParameters {
    pub fn new(b: f64, c: f64, a: f64) -> Result<Self> {
        let rp = Self { b, c, a };
        rp.validate()?;
        Ok(rp)
    }

    /// Free-ion-like Fe²⁺ values: B = 917 cm⁻¹, C = 4.5 B.
    pub fn fe2() -> Self {
        Self { b: 917.0, c: 4.5 * 917.0, a: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.c > 0.0 && self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::Parameter(format!("Racah parameters need B > 0 and C > 0, got B={} C={}", self.b, self.c)));
        }
        Ok(())
    }

    /// Slater integrals `[F⁰, F², F⁴]` in cm⁻¹.
    pub fn slater(&self) -> [f64; 3] {
        let f4 = self.c / 35.0;
        let f2 = self.b + 5.0 * f4;
        let f0 = self.a + 49.0 * f4;
        [f0, 49.0 * f2, 441.0 * f4]
    }
}

fn factorial(n: i64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Wigner 3j symbol for integer angular momenta, by Racah's formula.
pub fn wigner_3j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || j3 < (j1 - j2).abs() || j3 > j1 + j2 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let triangle = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) * factorial(-j1 + j2 + j3) / factorial(j1 + j2 + j3 + 1);
    let norm = factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j3 + m3)
        * factorial(j3 - m3);
    let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let d = factorial(k)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - m1 - k)
            * factorial(j2 + m2 - k)
            * factorial(j3 - j2 + m1 + k)
            * factorial(j3 - j1 - m2 + k);
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } / d;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * (triangle * norm).sqrt() * sum
}

/// `c^k(2m, 2m')`, the d-shell Gaunt coefficient.
pub fn gaunt_d(k: i64, m: i64, mp: i64) -> f64 {
    let phase = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * 5.0 * wigner_3j(2, k, 2, 0, 0, 0) * wigner_3j(2, k, 2, -m, m - mp, mp)
}

/// Columns give the real d orbitals in the complex `|m⟩` basis (rows m = −2..2).
fn real_d_transform() -> DMatrix<Complex64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    let mut u = DMatrix::from_element(5, 5, Complex64::new(0.0, 0.0));
    let row = |m: i64| (m + 2) as usize;
    u[(row(0), 0)] = re(1.0);
    u[(row(2), 1)] = re(r);
    u[(row(-2), 1)] = re(r);
    u[(row(2), 2)] = im(-r);
    u[(row(-2), 2)] = im(r);
    u[(row(1), 3)] = re(-r);
    u[(row(-1), 3)] = re(r);
    u[(row(1), 4)] = im(r);
    u[(row(-1), 4)] = im(r);
    u
}

/// Chemists' `(ab|cd)` among complex d functions, in cm⁻¹.
fn complex_coulomb(rp: &RacahParameters) -> Vec<f64> {
    let f = rp.slater();
    let mut g = vec![0.0; 625];
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * 5 + b) * 5 + c) * 5 + d;
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..5 {
                for d in 0..5 {
                    let m = |i: usize| i as i64 - 2;
                    if m(a) + m(c) != m(b) + m(d) {
                        continue;
                    }
                    // (ab|cd) = ⟨ac|bd⟩ = Σ_k c^k(a,b) c^k(d,c) F^k
                    g[idx(a, b, c, d)] = (0..3)
                        .map(|i| {
                            let k = 2 * i as i64;
                            gaunt_d(k, m(a), m(b)) * gaunt_d(k, m(d), m(c)) * f[i]
                        })
                        .sum();
                }
            }
        }
    }
    g
}

/// Electron repulsion among the five real d orbitals, in hartree.
pub fn d_coulomb_integrals(rp: &RacahParameters) -> IntegralSet {
    let gc = complex_coulomb(rp);
    let u = real_d_transform();
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * 5 + b) * 5 + c) * 5 + d;
    let mut ints = IntegralSet::zeros(5);
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..5 {
                for l in 0..5 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..5 {
                        let ua = u[(a, i)].conj();
                        if ua.norm() == 0.0 {
                            continue;
                        }
                        for b in 0..5 {
                            let ub = u[(b, j)];
                            if ub.norm() == 0.0 {
                                continue;
                            }
                            for c in 0..5 {
                                let uc = u[(c, k)].conj();
                                if uc.norm() == 0.0 {
                                    continue;
                                }
                                for d in 0..5 {
                                    let v = gc[idx(a, b, c, d)];
                                    if v != 0.0 {
                                        acc += ua * ub * uc * u[(d, l)] * v;
                                    }
                                }
                            }
                        }
                    }
                    let scale = (rp.c + rp.b + rp.a.abs()).max(1.0);
                    debug_assert!(acc.im.abs() < 1e-9 * scale);
                    let value = if acc.re.abs() < 1e-12 * scale { 0.0 } else { acc.re };
                    ints.set_g(i, j, k, l, to_hartree(value));
                }
            }
        }
    }
    ints
}

/// Octahedral splitting: +6Dq on e_g, −4Dq on t₂g, in hartree.
pub fn crystal_field_oh(dq: f64) -> IntegralSet {
    let mut ints = IntegralSet::zeros(5);
    for p in EG {
        ints.set_h(p, p, to_hartree(6.0 * dq));
    }
    for p in T2G {
        ints.set_h(p, p, to_hartree(-4.0 * dq));
    }
    ints
}

/// Five-orbital Hamiltonian: Coulomb plus crystal field.
pub fn ligand_field_integrals(rp: &RacahParameters, dq: f64) -> IntegralSet {
    let mut ints = d_coulomb_integrals(rp);
    let cf = crystal_field_oh(dq);
    for p in 0..5 {
        ints.set_h(p, p, cf.h(p, p));
    }
    ints
}

/// One degenerate spin multiplet at a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSTerm {
    /// Relative to the lowest term at this point.
    pub energy_cm1: f64,
    pub energy_over_b: f64,
    /// 2S+1.
    pub multiplicity: u32,
    /// Orbital degeneracy; the full degeneracy is this times 2S+1.
    pub orbital_degeneracy: usize,
    /// Index into [`TSCurve::tracks`].
    pub track: usize,
}

impl TSTerm {
    pub fn degeneracy(&self) -> usize {
        self.orbital_degeneracy * self.multiplicity as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSPoint {
    pub dq_over_b: f64,
    /// Ascending in energy; the first is the ground term at 0.
    pub terms: Vec<TSTerm>,
}

impl TSPoint {
    pub fn ground(&self) -> &TSTerm {
        &self.terms[0]
    }

    pub fn lowest(&self, multiplicity: u32) -> Option<&TSTerm> {
        self.terms.iter().find(|t| t.multiplicity == multiplicity)
    }
}

/// A curve followed across sweep points by spin, orbital degeneracy and
/// eigenvector overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSTrack {
    pub label: String,
    pub multiplicity: u32,
    pub orbital_degeneracy: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    /// The ground term changes spin.
    SpinCrossover,
    /// Two excited terms of different spin cross.
    Excited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub kind: CrossingKind,
    pub dq_over_b: f64,
    /// Spin multiplicities of the lower curve before and after the crossing.
    pub multiplicities: (u32, u32),
    /// d(E/B)/d(Dq/B) of the two lowest terms of those multiplicities, in
    /// absolute (not re-zeroed) energies.
    pub slopes: (f64, f64),
    /// The bracketing interval did not show a clean single sign change.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSCurve {
    pub n_electrons: usize,
    pub racah: RacahParameters,
    pub points: Vec<TSPoint>,
    pub tracks: Vec<TSTrack>,
    pub crossings: Vec<Crossing>,
}

impl TSCurve {
    /// E/B per track; `None` where a track does not exist at a point.
    pub fn track_series(&self, track: usize) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|p| p.terms.iter().find(|t| t.track == track).map(|t| t.energy_over_b))
            .collect()
    }
}

struct RawTerm {
    energy: f64,
    twice_s: u32,
    vectors: DMatrix<f64>,
}

fn sector_for(n: usize) -> Result<SectorSpec> {
    if !(1..=9).contains(&n) {
        return Err(Error::Parameter(format!("d-electron count must be in 1..=9, got {n}")));
    }
    SectorSpec::new(5, n.div_ceil(2), n / 2)
}

/// Spin multiplets of dⁿ at one crystal-field value, ascending, hartree.
fn solve_terms(n: usize, rp: &RacahParameters, dq: f64) -> Result<Vec<RawTerm>> {
    let spec = sector_for(n)?;
    let basis = SectorBasis::build(spec)?;
    let h = build_hamiltonian(&basis, &ligand_field_integrals(rp, dq))?;
    let s2 = build_total_s2(&basis)?;
    let spectrum = assign_spin(&diagonalize(&h, None)?, &s2, spec.twice_sz(), SPIN_TOL, DEGENERACY_TOL)?;
    let mut terms = Vec::new();
    for group in crate::eigensolve::group_degenerate(&spectrum.eigenvalues, DEGENERACY_TOL) {
        let mut spins: Vec<u32> = group.clone().map(|i| spectrum.labels[i].unwrap().twice_s).collect();
        spins.sort_unstable();
        spins.dedup();
        for twice_s in spins {
            let members: Vec<usize> = group.clone().filter(|&i| spectrum.labels[i].unwrap().twice_s == twice_s).collect();
            let energy = members.iter().map(|&i| spectrum.eigenvalues[i]).sum::<f64>() / members.len() as f64;
            let vectors = DMatrix::from_fn(basis.len(), members.len(), |r, c| spectrum.eigenvectors[(r, members[c])]);
            terms.push(RawTerm { energy, twice_s, vectors });
        }
    }
    terms.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.twice_s.cmp(&b.twice_s)));
    Ok(terms)
}

/// Lowest absolute energy (cm⁻¹) of multiplicity `mult` at `dq`.
fn lowest_energy(n: usize, rp: &RacahParameters, dq: f64, mult: u32) -> Result<Option<f64>> {
    Ok(solve_terms(n, rp, dq)?.into_iter().find(|t| t.twice_s + 1 == mult).map(|t| t.energy * HARTREE_TO_CM1))
}

fn symbol(orbital_degeneracy: usize, free_ion: bool) -> String {
    let table: &[(usize, &str)] = if free_ion {
        &[(1, "S"), (3, "P"), (5, "D"), (7, "F"), (9, "G"), (11, "H"), (13, "I")]
    } else {
        &[(1, "A"), (2, "E"), (3, "T")]
    };
    table
        .iter()
        .find(|(d, _)| *d == orbital_degeneracy)
        .map(|(_, s)| s.to_string())
        .unwrap_or_else(|| format!("X{orbital_degeneracy}"))
}

pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Tanabe–Sugano sweep of dⁿ over the given Dq/B grid.
pub fn tanabe_sugano(n: usize, rp: &RacahParameters, dq_over_b: &[f64]) -> Result<TSCurve> {
    rp.validate()?;
    sector_for(n)?;
    if dq_over_b.is_empty() {
        return Err(Error::Parameter("empty Dq/B range".into()));
    }
    if dq_over_b.iter().any(|x| !x.is_finite()) || dq_over_b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("Dq/B grid must be finite and strictly ascending".into()));
    }
    let solved: Vec<Vec<RawTerm>> =
        dq_over_b.par_iter().map(|&x| solve_terms(n, rp, x * rp.b)).collect::<Result<Vec<_>>>()?;

    let mut tracks: Vec<TSTrack> = Vec::new();
    let mut points: Vec<TSPoint> = Vec::with_capacity(solved.len());
    let mut previous: Option<(&[RawTerm], Vec<usize>)> = None;
    for (&x, raw) in dq_over_b.iter().zip(&solved) {
        let mut assigned: Vec<Option<usize>> = vec![None; raw.len()];
        if let Some((prev, prev_tracks)) = &previous {
            let mut pairs = Vec::new();
            for (i, t) in raw.iter().enumerate() {
                for (j, p) in prev.iter().enumerate() {
                    if p.twice_s == t.twice_s && p.vectors.ncols() == t.vectors.ncols() {
                        let overlap = (p.vectors.transpose() * &t.vectors).norm_squared() / t.vectors.ncols() as f64;
                        pairs.push((overlap, i, j));
                    }
                }
            }
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used = vec![false; prev.len()];
            for (overlap, i, j) in pairs {
                if overlap > 0.5 && assigned[i].is_none() && !used[j] {
                    assigned[i] = Some(prev_tracks[j]);
                    used[j] = true;
                }
            }
        }
        let ground = raw[0].energy;
        let mut terms = Vec::with_capacity(raw.len());
        let mut ids = Vec::with_capacity(raw.len());
        for (i, t) in raw.iter().enumerate() {
            let multiplicity = t.twice_s + 1;
            let orbital_degeneracy = t.vectors.ncols();
            let track = match assigned[i] {
                Some(k) => k,
                None => {
                    let stem = format!("{multiplicity}{}", symbol(orbital_degeneracy, x == 0.0));
                    let k = tracks.iter().filter(|tr| tr.label.split('#').next() == Some(stem.as_str())).count() + 1;
                    tracks.push(TSTrack { label: format!("{stem}#{k}"), multiplicity, orbital_degeneracy });
                    tracks.len() - 1
                }
            };
            ids.push(track);
            let energy_cm1 = (t.energy - ground) * HARTREE_TO_CM1;
            terms.push(TSTerm { energy_cm1, energy_over_b: energy_cm1 / rp.b, multiplicity, orbital_degeneracy, track });
        }
        points.push(TSPoint { dq_over_b: x, terms });
        previous = Some((raw.as_slice(), ids));
    }
    let mut curve = TSCurve { n_electrons: n, racah: *rp, points, tracks, crossings: Vec::new() };
    let mut crossings = find_crossings(&curve, CrossingTarget::Ground)?;
    for (a, b) in spin_pairs(&curve) {
        for c in find_crossings(&curve, CrossingTarget::Pair(a, b))? {
            if c.kind == CrossingKind::Excited {
                crossings.push(c);
            }
        }
    }
    crossings.sort_by(|a, b| a.dq_over_b.total_cmp(&b.dq_over_b));
    curve.crossings = crossings;
    Ok(curve)
}

/// Adjacent spin multiplicities present in the sweep (ΔS = 1 pairs).
fn spin_pairs(curve: &TSCurve) -> Vec<(u32, u32)> {
    let mut mults: Vec<u32> = curve.tracks.iter().map(|t| t.multiplicity).collect();
    mults.sort_unstable();
    mults.dedup();
    mults.windows(2).filter(|w| w[1] == w[0] + 2).map(|w| (w[0], w[1])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingTarget {
    /// Changes of the ground-term spin.
    Ground,
    /// Sign changes of E_lowest(a) − E_lowest(b), wherever they happen.
    Pair(u32, u32),
}

const BISECTION_STEPS: usize = 60;

/// Bisection-refined crossings on a computed sweep.
pub fn find_crossings(curve: &TSCurve, target: CrossingTarget) -> Result<Vec<Crossing>> {
    let n = curve.n_electrons;
    let rp = curve.racah;
    let mut out = Vec::new();
    for w in curve.points.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let (a, b) = match target {
            CrossingTarget::Ground => {
                let (ma, mb) = (lo.ground().multiplicity, hi.ground().multiplicity);
                if ma == mb {
                    continue;
                }
                (ma, mb)
            }
            CrossingTarget::Pair(a, b) => (a, b),
        };
        let gap = |p: &TSPoint| -> Option<f64> { Some(p.lowest(a)?.energy_cm1 - p.lowest(b)?.energy_cm1) };
        let (Some(g_lo), Some(g_hi)) = (gap(lo), gap(hi)) else { continue };
        if matches!(target, CrossingTarget::Pair(..)) && (g_lo < 0.0) == (g_hi < 0.0) && g_lo != 0.0 && g_hi != 0.0 {
            continue;
        }
        let f = |x: f64| -> Result<Option<f64>> {
            let ea = lowest_energy(n, &rp, x * rp.b, a)?;
            let eb = lowest_energy(n, &rp, x * rp.b, b)?;
            Ok(ea.zip(eb).map(|(ea, eb)| ea - eb))
        };
        let clean = (g_lo < 0.0) != (g_hi < 0.0) && g_lo != 0.0 && g_hi != 0.0;
        let (mut x0, mut x1) = (lo.dq_over_b, hi.dq_over_b);
        let mut f0 = g_lo;
        if clean {
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (x0 + x1);
                let Some(fm) = f(mid)? else { break };
                if (fm < 0.0) == (f0 < 0.0) {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
                if x1 - x0 <= 1e-13 * x1.abs().max(1.0) {
                    break;
                }
            }
        }
        let x = 0.5 * (x0 + x1);
        let h = 1e-5;
        let slope = |mult: u32| -> Result<f64> {
            let up = lowest_energy(n, &rp, (x + h) * rp.b, mult)?.unwrap_or(f64::NAN);
            let down = lowest_energy(n, &rp, (x - h) * rp.b, mult)?.unwrap_or(f64::NAN);
            Ok((up - down) / (2.0 * h * rp.b))
        };
        let (below, above) = if g_lo < 0.0 { (a, b) } else { (b, a) };
        let terms = solve_terms(n, &rp, x * rp.b)?;
        let ground_mult = terms[0].twice_s + 1;
        let kind = if ground_mult == a || ground_mult == b { CrossingKind::SpinCrossover } else { CrossingKind::Excited };
        let kind = if target == CrossingTarget::Ground { CrossingKind::SpinCrossover } else { kind };
        out.push(Crossing {
            kind,
            dq_over_b: x,
            multiplicities: (below, above),
            slopes: (slope(below)?, slope(above)?),
            flagged: !clean,
        });
    }
    Ok(out)
}
