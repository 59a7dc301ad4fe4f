//! Interpretation of swept spectra and CI ladders: exact versus avoided
//! crossings between two tracked states, and variational convergence along
//! the CAS → FCI hierarchy.

use serde::{Deserialize, Serialize};

use crate::cispace::{generate, CILevel, OrbitalPartition};
use crate::eigensolve::{assign_spin, diagonalize, DEGENERACY_TOL, SPIN_TOL};
use crate::error::{Error, Result};
use crate::fockspace::SectorSpec;
use crate::secondq::{build_hamiltonian, build_total_s2, IntegralSet};
use crate::units::to_cm1;

/// Gaps below this (cm⁻¹) count as an exact crossing.
pub const DEFAULT_GAP_TOL: f64 = 0.01;
/// Re-solves allowed while refining a crossing.
pub const REFINE_BUDGET: usize = 40;
/// Largest CI space for which [`ci_convergence`] runs the FCI rung.
pub const FCI_DIM_LIMIT: usize = 20000;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// One tracked state at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// cm⁻¹
    pub energy: f64,
    /// Character weights; their meaning is given by the series labels.
    pub weights: Vec<f64>,
}

/// A tracked state along a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub label: String,
    pub params: Vec<f64>,
    pub samples: Vec<CurveSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    ExactCrossing,
    AvoidedCrossing,
    NoCrossing,
}

/// Dominant character of both states away from and at the closest approach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightExchange {
    pub at_closest: [Vec<f64>; 2],
    /// Grid points where dominance is read: the nearest ones on either side
    /// of the closest approach where the gap is at least twice its grid
    /// minimum (or the ends of the grid).
    pub side_params: [f64; 2],
    /// Index of the largest weight of each state at `side_params[0]`.
    pub dominant_before: [usize; 2],
    /// Same at `side_params[1]`.
    pub dominant_after: [usize; 2],
    pub swapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub kind: GapKind,
    /// Parameter value of the smallest gap found.
    pub location: f64,
    /// cm⁻¹, never negative.
    pub min_gap: f64,
    pub states: [String; 2],
    pub weight_exchange: Option<WeightExchange>,
    pub resolves: usize,
}

fn argmax(w: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in w.iter().enumerate() {
        if *v > w[best] {
            best = i;
        }
    }
    best
}

/// Finds the closest approach of two tracked states.
///
/// The grid minimum of the gap is refined by golden-section search on
/// re-solved points when `resolve` is given, finishing with one
/// intersection of the two gap flanks, which pins down a true crossing far
/// below the bracket width. A minimum at either end of the grid is reported
/// as [`GapKind::NoCrossing`].
pub fn detect_avoided_crossing(
    a: &CurveSeries,
    b: &CurveSeries,
    gap_tol: f64,
    mut resolve: Option<&mut dyn FnMut(f64) -> Result<[CurveSample; 2]>>,
) -> Result<CrossingReport> {
    let n = a.params.len();
    if n == 0 || a.samples.len() != n || b.samples.len() != n || b.params.len() != n {
        return Err(Error::Sweep("series must be non-empty and have one sample per grid point".into()));
    }
    if a.params != b.params {
        return Err(Error::Sweep("series do not share a parameter grid".into()));
    }
    if !(gap_tol >= 0.0) {
        return Err(Error::Parameter(format!("gap tolerance must be non-negative, got {gap_tol}")));
    }
    let gaps: Vec<f64> = (0..n).map(|i| (a.samples[i].energy - b.samples[i].energy).abs()).collect();
    let mut imin = 0;
    for i in 1..n {
        if gaps[i] < gaps[imin] {
            imin = i;
        }
    }
    let states = [a.label.clone(), b.label.clone()];
    if imin == 0 || imin == n - 1 {
        return Ok(CrossingReport {
            kind: GapKind::NoCrossing,
            location: a.params[imin],
            min_gap: gaps[imin],
            states,
            weight_exchange: None,
            resolves: 0,
        });
    }

    let mut best = (a.params[imin], gaps[imin], [a.samples[imin].weights.clone(), b.samples[imin].weights.clone()]);
    let mut resolves = 0;
    if let Some(f) = resolve.as_deref_mut() {
        let mut points: Vec<(f64, f64)> =
            vec![(a.params[imin - 1], gaps[imin - 1]), (a.params[imin], gaps[imin]), (a.params[imin + 1], gaps[imin + 1])];
        let mut eval = |x: f64, best: &mut (f64, f64, [Vec<f64>; 2]), points: &mut Vec<(f64, f64)>| -> Result<f64> {
            let [sa, sb] = f(x)?;
            let g = (sa.energy - sb.energy).abs();
            points.push((x, g));
            if g < best.1 {
                *best = (x, g, [sa.weights, sb.weights]);
            }
            Ok(g)
        };
        let (mut lo, mut hi) = (a.params[imin - 1], a.params[imin + 1]);
        let golden_budget = REFINE_BUDGET - 2;
        let mut c = hi - INV_PHI * (hi - lo);
        let mut d = lo + INV_PHI * (hi - lo);
        let mut fc = eval(c, &mut best, &mut points)?;
        let mut fd = eval(d, &mut best, &mut points)?;
        resolves += 2;
        while resolves < golden_budget && best.1 > 0.0 {
            if fc <= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - INV_PHI * (hi - lo);
                fc = eval(c, &mut best, &mut points)?;
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + INV_PHI * (hi - lo);
                fd = eval(d, &mut best, &mut points)?;
            }
            resolves += 1;
        }
        if best.1 > 0.0 {
            if let Some(x) = flank_intersection(&points, best.0) {
                eval(x, &mut best, &mut points)?;
                resolves += 1;
            }
        }
    }

    let (location, min_gap, at_closest) = best;
    let kind = if min_gap < gap_tol { GapKind::ExactCrossing } else { GapKind::AvoidedCrossing };
    // sides: nearest grid points where the gap has at least doubled
    let threshold = 2.0 * gaps[imin];
    let left = (0..imin).rev().find(|&i| gaps[i] >= threshold).unwrap_or(0);
    let right = (imin + 1..n).find(|&i| gaps[i] >= threshold).unwrap_or(n - 1);
    let dominant_before = [argmax(&a.samples[left].weights), argmax(&b.samples[left].weights)];
    let dominant_after = [argmax(&a.samples[right].weights), argmax(&b.samples[right].weights)];
    let swapped = dominant_before[0] == dominant_after[1]
        && dominant_before[1] == dominant_after[0]
        && dominant_before[0] != dominant_before[1];
    let weight_exchange = WeightExchange {
        at_closest,
        side_params: [a.params[left], a.params[right]],
        dominant_before,
        dominant_after,
        swapped,
    };
    Ok(CrossingReport {
        kind,
        location,
        min_gap,
        states,
        weight_exchange: Some(weight_exchange),
        resolves,
    })
}

/// Where the straight lines through the two nearest evaluated points on each
/// side of `center` meet, if they form a V.
fn flank_intersection(points: &[(f64, f64)], center: f64) -> Option<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    pts.dedup_by(|p, q| p.0 == q.0);
    let k = pts.iter().position(|p| p.0 == center)?;
    let mut candidates = Vec::new();
    // the vertex lies either just left or just right of the best point
    for split in [k, k + 1] {
        if split < 2 || split + 2 > pts.len() {
            continue;
        }
        let (l1, l2) = (pts[split - 2], pts[split - 1]);
        let (r1, r2) = (pts[split], pts[split + 1]);
        let sl = (l2.1 - l1.1) / (l2.0 - l1.0);
        let sr = (r2.1 - r1.1) / (r2.0 - r1.0);
        if !(sl < 0.0 && sr > 0.0) {
            continue;
        }
        let x = (r1.1 - l2.1 + sl * l2.0 - sr * r1.0) / (sl - sr);
        if x > l2.0 && x < r1.0 {
            let predicted = l2.1 + sl * (x - l2.0);
            candidates.push((predicted.abs(), x));
        }
    }
    candidates.into_iter().min_by(|p, q| p.0.total_cmp(&q.0)).map(|c| c.1)
}

/// One rung of the CI ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub level: CILevel,
    pub dimension: usize,
    /// hartree
    pub ground_energy: f64,
    /// `E(lowest triplet) − E(lowest singlet)` in cm⁻¹, when both exist.
    pub singlet_triplet_gap_cm1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub partition: OrbitalPartition,
    pub sector: SectorSpec,
    pub levels: Vec<ConvergenceLevel>,
}

impl ConvergenceReport {
    /// True when ground energies never rise along the ladder (within `tol`).
    pub fn is_variational(&self, tol: f64) -> bool {
        self.levels.windows(2).all(|w| w[1].ground_energy <= w[0].ground_energy + tol)
    }
}

/// Ground energies, dimensions and the singlet–triplet gap along
/// CAS → CAS+S → DDC2 → DDCI → FCI. FCI is skipped above [`FCI_DIM_LIMIT`].
pub fn ci_convergence(ints: &IntegralSet, part: &OrbitalPartition, sector: SectorSpec) -> Result<ConvergenceReport> {
    let mut levels = Vec::new();
    for level in CILevel::LADDER {
        if level == CILevel::Fci && sector.full_dimension() > FCI_DIM_LIMIT {
            continue;
        }
        let space = generate(part, level, sector)?;
        let h = build_hamiltonian(&space.basis, ints)?;
        let s2 = build_total_s2(&space.basis)?;
        let spectrum = assign_spin(&diagonalize(&h, None)?, &s2, sector.twice_sz(), SPIN_TOL, DEGENERACY_TOL)?;
        let lowest = |twice_s: u32| {
            (0..spectrum.len())
                .find(|&i| spectrum.labels[i].map(|l| l.twice_s) == Some(twice_s))
                .map(|i| spectrum.eigenvalues[i])
        };
        let gap = match (lowest(0), lowest(2)) {
            (Some(s), Some(t)) => Some(to_cm1(t - s)),
            _ => None,
        };
        levels.push(ConvergenceLevel {
            level,
            dimension: space.dim(),
            ground_energy: spectrum.eigenvalues[0],
            singlet_triplet_gap_cm1: gap,
        });
    }
    Ok(ConvergenceReport { partition: part.clone(), sector, levels })
}
