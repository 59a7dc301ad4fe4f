//! Determinant bases for fixed particle-number and Sz sectors.
//!
//! Spin orbitals are ordered with every up orbital (ascending spatial index)
//! before every down orbital. All fermionic signs in the crate follow from
//! that single ordering.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of spatial orbitals (one machine word per spin channel).
pub const MAX_ORBITALS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

/// Occupation of spin orbitals, one bit-set per spin channel.
///
/// The derived ordering is lexicographic on `(alpha, beta)` as unsigned
/// integers, which is the basis ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Determinant {
    pub alpha: u32,
    pub beta: u32,
}

#[inline]
fn below(orb: usize) -> u32 {
    // bits strictly below `orb`
    if orb >= 32 {
        u32::MAX
    } else {
        (1u32 << orb) - 1
    }
}

#[inline]
fn sign_of(count: u32) -> f64 {
    if count & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Determinant {
    pub fn new(alpha: u32, beta: u32) -> Self {
        Self { alpha, beta }
    }

    /// Builds a determinant from lists of occupied spatial orbitals.
    pub fn from_occupations(alpha: &[usize], beta: &[usize]) -> Self {
        let fold = |orbs: &[usize]| orbs.iter().fold(0u32, |acc, &o| acc | (1 << o));
        Self::new(fold(alpha), fold(beta))
    }

    #[inline]
    pub fn channel(&self, spin: Spin) -> u32 {
        match spin {
            Spin::Up => self.alpha,
            Spin::Down => self.beta,
        }
    }

    #[inline]
    fn channel_mut(&mut self, spin: Spin) -> &mut u32 {
        match spin {
            Spin::Up => &mut self.alpha,
            Spin::Down => &mut self.beta,
        }
    }

    #[inline]
    pub fn is_occupied(&self, orb: usize, spin: Spin) -> bool {
        self.channel(spin) >> orb & 1 == 1
    }

    #[inline]
    pub fn n_alpha(&self) -> u32 {
        self.alpha.count_ones()
    }

    #[inline]
    pub fn n_beta(&self) -> u32 {
        self.beta.count_ones()
    }

    #[inline]
    pub fn n_electrons(&self) -> u32 {
        self.n_alpha() + self.n_beta()
    }

    /// Occupation (0, 1 or 2) of a spatial orbital.
    #[inline]
    pub fn occupation(&self, orb: usize) -> u32 {
        (self.alpha >> orb & 1) + (self.beta >> orb & 1)
    }

    /// Number of occupied spin orbitals that precede `(orb, spin)` in the
    /// global ordering.
    #[inline]
    fn preceding(&self, orb: usize, spin: Spin) -> u32 {
        match spin {
            Spin::Up => (self.alpha & below(orb)).count_ones(),
            Spin::Down => self.alpha.count_ones() + (self.beta & below(orb)).count_ones(),
        }
    }

    /// `a_{orb,spin}` acting on the determinant.
    pub fn annihilate(&self, orb: usize, spin: Spin) -> Option<(Determinant, f64)> {
        if !self.is_occupied(orb, spin) {
            return None;
        }
        let sign = sign_of(self.preceding(orb, spin));
        let mut out = *self;
        *out.channel_mut(spin) &= !(1 << orb);
        Some((out, sign))
    }

    /// `a†_{orb,spin}` acting on the determinant.
    pub fn create(&self, orb: usize, spin: Spin) -> Option<(Determinant, f64)> {
        if self.is_occupied(orb, spin) {
            return None;
        }
        let sign = sign_of(self.preceding(orb, spin));
        let mut out = *self;
        *out.channel_mut(spin) |= 1 << orb;
        Some((out, sign))
    }

    /// Occupation string, one character per spatial orbital: `0`, `u`, `d` or `2`.
    pub fn occupation_string(&self, norb: usize) -> String {
        (0..norb)
            .map(|p| match (self.is_occupied(p, Spin::Up), self.is_occupied(p, Spin::Down)) {
                (false, false) => '0',
                (true, false) => 'u',
                (false, true) => 'd',
                (true, true) => '2',
            })
            .collect()
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|a={:b}, b={:b}>", self.alpha, self.beta)
    }
}

/// Applies `a†_{p,spin} a_{q,spin}` to `det`.
///
/// Returns `None` when the result vanishes. The sign is the parity of the
/// occupied spin orbitals passed over between the annihilation and creation
/// positions.
pub fn apply_excitation(det: &Determinant, p: usize, q: usize, spin: Spin) -> Option<(Determinant, f64)> {
    if p == q {
        return det.is_occupied(q, spin).then_some((*det, 1.0));
    }
    let (mid, s1) = det.annihilate(q, spin)?;
    let (out, s2) = mid.create(p, spin)?;
    Some((out, s1 * s2))
}

/// Particle-number and Sz sector of `norb` spatial orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorSpec {
    pub norb: usize,
    pub nalpha: usize,
    pub nbeta: usize,
}

impl SectorSpec {
    pub fn new(norb: usize, nalpha: usize, nbeta: usize) -> Result<Self> {
        let spec = Self { norb, nalpha, nbeta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.norb == 0 || self.norb > MAX_ORBITALS {
            return Err(Error::Parameter(format!(
                "norb = {} outside 1..={MAX_ORBITALS}",
                self.norb
            )));
        }
        if self.nalpha > self.norb || self.nbeta > self.norb {
            return Err(Error::Parameter(format!(
                "electron counts (nalpha = {}, nbeta = {}) exceed norb = {}",
                self.nalpha, self.nbeta, self.norb
            )));
        }
        Ok(())
    }

    pub fn n_electrons(&self) -> usize {
        self.nalpha + self.nbeta
    }

    /// 2·Sz.
    pub fn twice_sz(&self) -> i32 {
        self.nalpha as i32 - self.nbeta as i32
    }

    /// Sector reached by moving one electron from the down to the up channel.
    pub fn raised(&self) -> Option<SectorSpec> {
        (self.nbeta > 0 && self.nalpha < self.norb).then(|| SectorSpec {
            norb: self.norb,
            nalpha: self.nalpha + 1,
            nbeta: self.nbeta - 1,
        })
    }

    /// Sector reached by moving one electron from the up to the down channel.
    pub fn lowered(&self) -> Option<SectorSpec> {
        (self.nalpha > 0 && self.nbeta < self.norb).then(|| SectorSpec {
            norb: self.norb,
            nalpha: self.nalpha - 1,
            nbeta: self.nbeta + 1,
        })
    }

    /// Size of the unrestricted sector, C(norb, nalpha)·C(norb, nbeta).
    pub fn full_dimension(&self) -> usize {
        binomial(self.norb, self.nalpha) * binomial(self.norb, self.nbeta)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `norb`-bit strings with `count` set bits, in increasing integer order.
pub fn bit_strings(norb: usize, count: usize) -> Vec<u32> {
    if count > norb {
        return Vec::new();
    }
    if count == 0 {
        return vec![0];
    }
    let limit: u64 = 1u64 << norb;
    let mut out = Vec::with_capacity(binomial(norb, count));
    let mut v: u64 = (1u64 << count) - 1;
    while v < limit {
        out.push(v as u32);
        // Gosper's hack: next integer with the same popcount
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Ordered, duplicate-free determinant list of a sector with a reverse index.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    spec: SectorSpec,
    dets: Vec<Determinant>,
    index: HashMap<Determinant, usize>,
}

impl SectorBasis {
    /// Every determinant of the sector.
    pub fn build(spec: SectorSpec) -> Result<Self> {
        spec.validate()?;
        let alphas = bit_strings(spec.norb, spec.nalpha);
        let betas = bit_strings(spec.norb, spec.nbeta);
        let mut dets = Vec::with_capacity(alphas.len() * betas.len());
        for &a in &alphas {
            for &b in &betas {
                dets.push(Determinant::new(a, b));
            }
        }
        Ok(Self::from_sorted(spec, dets))
    }

    /// A restricted basis holding only `dets`. Order and duplicates in the
    /// input do not matter.
    pub fn from_dets(spec: SectorSpec, mut dets: Vec<Determinant>) -> Result<Self> {
        spec.validate()?;
        let mask = if spec.norb == 32 { u32::MAX } else { (1u32 << spec.norb) - 1 };
        for d in &dets {
            if d.alpha & !mask != 0 || d.beta & !mask != 0 {
                return Err(Error::Parameter(format!("{d} has orbitals beyond norb = {}", spec.norb)));
            }
            if d.n_alpha() as usize != spec.nalpha || d.n_beta() as usize != spec.nbeta {
                return Err(Error::Parameter(format!("{d} does not belong to sector {spec:?}")));
            }
        }
        dets.sort_unstable();
        dets.dedup();
        Ok(Self::from_sorted(spec, dets))
    }

    fn from_sorted(spec: SectorSpec, dets: Vec<Determinant>) -> Self {
        let index = dets.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        Self { spec, dets, index }
    }

    pub fn spec(&self) -> SectorSpec {
        self.spec
    }

    pub fn norb(&self) -> usize {
        self.spec.norb
    }

    pub fn dets(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn position(&self, det: &Determinant) -> Option<usize> {
        self.index.get(det).copied()
    }

    pub fn get(&self, i: usize) -> Determinant {
        self.dets[i]
    }
}
