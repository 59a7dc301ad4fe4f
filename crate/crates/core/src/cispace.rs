//! Truncated CI spaces built from an inactive/active/virtual partition.
//!
//! A determinant's excitation class counts holes in the inactive block and
//! particles in the virtual block. Each CI level admits a fixed set of classes,
//! and the space is the sector restricted to admitted determinants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{Determinant, SectorBasis, SectorSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitalPartition {
    inactive: Vec<usize>,
    active: Vec<usize>,
    #[serde(rename = "virtual")]
    virtuals: Vec<usize>,
}

impl OrbitalPartition {
    pub fn new(inactive: Vec<usize>, active: Vec<usize>, virtuals: Vec<usize>, norb: usize) -> Result<Self> {
        let mut seen = vec![false; norb];
        for &p in inactive.iter().chain(&active).chain(&virtuals) {
            if p >= norb {
                return Err(Error::Parameter(format!("orbital {p} outside [0, {norb})")));
            }
            if seen[p] {
                return Err(Error::Parameter(format!("orbital {p} appears in two blocks")));
            }
            seen[p] = true;
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::Parameter(format!("orbital {p} is not assigned to any block")));
        }
        let sorted = |mut v: Vec<usize>| {
            v.sort_unstable();
            v
        };
        Ok(Self { inactive: sorted(inactive), active: sorted(active), virtuals: sorted(virtuals) })
    }

    /// Consecutive blocks: the first `n_inactive` orbitals, then active, then virtual.
    pub fn contiguous(n_inactive: usize, n_active: usize, n_virtual: usize) -> Self {
        let a = n_inactive + n_active;
        Self {
            inactive: (0..n_inactive).collect(),
            active: (n_inactive..a).collect(),
            virtuals: (a..a + n_virtual).collect(),
        }
    }

    pub fn inactive(&self) -> &[usize] {
        &self.inactive
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn virtuals(&self) -> &[usize] {
        &self.virtuals
    }

    pub fn norb(&self) -> usize {
        self.inactive.len() + self.active.len() + self.virtuals.len()
    }

    fn mask(orbitals: &[usize]) -> u32 {
        orbitals.iter().fold(0, |m, &p| m | (1 << p))
    }

    /// The partition is degenerate when every truncation level equals CAS.
    pub fn is_degenerate(&self) -> bool {
        self.inactive.is_empty() && self.virtuals.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExcitationClass {
    pub holes: u32,
    pub particles: u32,
}

impl ExcitationClass {
    pub fn new(holes: u32, particles: u32) -> Self {
        Self { holes, particles }
    }

    /// False for classes beyond two holes or two particles; only FCI admits those.
    pub fn in_hierarchy(&self) -> bool {
        self.holes <= 2 && self.particles <= 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CILevel {
    #[serde(rename = "CAS")]
    Cas,
    #[serde(rename = "CAS_S")]
    CasS,
    #[serde(rename = "DDC2")]
    Ddc2,
    #[serde(rename = "DDCI")]
    Ddci,
    #[serde(rename = "FCI")]
    Fci,
}

impl CILevel {
    pub const LADDER: [CILevel; 5] = [CILevel::Cas, CILevel::CasS, CILevel::Ddc2, CILevel::Ddci, CILevel::Fci];

    pub fn name(&self) -> &'static str {
        match self {
            CILevel::Cas => "CAS",
            CILevel::CasS => "CAS_S",
            CILevel::Ddc2 => "DDC2",
            CILevel::Ddci => "DDCI",
            CILevel::Fci => "FCI",
        }
    }

    pub fn admits(&self, class: ExcitationClass) -> bool {
        let (h, p) = (class.holes, class.particles);
        match self {
            CILevel::Fci => true,
            CILevel::Cas => h == 0 && p == 0,
            CILevel::CasS => h + p <= 1 || (h == 1 && p == 1),
            // Both two-hole and two-particle classes join, but not the mixed doubles.
            CILevel::Ddc2 => CILevel::CasS.admits(class) || (h, p) == (2, 0) || (h, p) == (0, 2),
            CILevel::Ddci => class.in_hierarchy() && (h, p) != (2, 2),
        }
    }
}

impl std::str::FromStr for CILevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CILevel::LADDER
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown CI level '{s}'")))
    }
}

pub fn classify(det: &Determinant, part: &OrbitalPartition) -> ExcitationClass {
    let inactive = OrbitalPartition::mask(&part.inactive);
    let virtuals = OrbitalPartition::mask(&part.virtuals);
    let count = |m: u32| (det.alpha & m).count_ones() + (det.beta & m).count_ones();
    ExcitationClass { holes: 2 * part.inactive.len() as u32 - count(inactive), particles: count(virtuals) }
}

#[derive(Debug, Clone)]
pub struct CISpace {
    pub partition: OrbitalPartition,
    pub level: CILevel,
    pub basis: SectorBasis,
}

impl CISpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

pub fn generate(part: &OrbitalPartition, level: CILevel, spec: SectorSpec) -> Result<CISpace> {
    spec.validate()?;
    if part.norb() != spec.norb {
        return Err(Error::Parameter(format!("partition covers {} orbitals, sector has {}", part.norb(), spec.norb)));
    }
    let n = spec.n_electrons();
    let core = 2 * part.inactive.len();
    let cap = core + 2 * part.active.len();
    if n < core || n > cap {
        return Err(Error::Parameter(format!(
            "{n} electrons cannot form a reference with {} inactive and {} active orbitals",
            part.inactive.len(),
            part.active.len()
        )));
    }
    let full = SectorBasis::build(spec)?;
    if level == CILevel::Fci {
        return Ok(CISpace { partition: part.clone(), level, basis: full });
    }
    let dets = full.dets().iter().copied().filter(|d| level.admits(classify(d, part))).collect();
    let basis = SectorBasis::from_dets(spec, dets)?;
    Ok(CISpace { partition: part.clone(), level, basis })
}
