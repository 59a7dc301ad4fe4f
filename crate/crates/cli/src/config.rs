//! TOML run configuration. Every table rejects unknown keys; the resolved
//! configuration (defaults filled in) is echoed into each report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use spinmer_core::eigensolve::DEGENERACY_TOL;
use spinmer_core::ligandfield::RacahParameters;
use spinmer_core::models::{ReflectionBlock, SpinmerismParams, SweepParameter};
use spinmer_core::HARTREE_TO_CM1;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragments: Option<FragmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spinmerism: Option<SpinmerismParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<TsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

/// Where the Hamiltonian comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Metal + two ligand orbitals; parameters in `[spinmerism]`.
    Spinmerism {
        #[serde(default)]
        twice_sz: i32,
        #[serde(default)]
        block: BlockChoice,
    },
    /// Integrals from a file; a relative path is taken from the config's directory.
    Fcidump {
        path: PathBuf,
        /// Defaults to the file's MS2.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        twice_sz: Option<i32>,
    },
    /// Two-site Hubbard model at half filling, energies in cm⁻¹.
    Hubbard {
        u_cm1: f64,
        t_cm1: f64,
        #[serde(default)]
        twice_sz: i32,
    },
    /// Two orbitals coupled by direct exchange J only.
    Heisenberg { j_cm1: f64 },
}

/// Reflection-parity block of the spinmerism model, or the whole sector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockChoice {
    #[default]
    Full,
    Even,
    OddX,
    OddY,
    OddXy,
}

impl BlockChoice {
    pub fn block(self) -> Option<ReflectionBlock> {
        let b = |odd_x, odd_y| Some(ReflectionBlock { odd_x, odd_y });
        match self {
            BlockChoice::Full => None,
            BlockChoice::Even => b(false, false),
            BlockChoice::OddX => b(true, false),
            BlockChoice::OddY => b(false, true),
            BlockChoice::OddXy => b(true, true),
        }
    }
}

/// Two disjoint orbital sets (0-based) for local spin analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentConfig {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// Electron count of fragment A without charge transfer.
    pub nominal_a: usize,
    #[serde(default = "default_a_name")]
    pub a_name: String,
    #[serde(default = "default_b_name")]
    pub b_name: String,
}

fn default_a_name() -> String {
    "A".into()
}

fn default_b_name() -> String {
    "B".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsConfig {
    pub n_electrons: usize,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub dq_over_b_min: f64,
    pub dq_over_b_max: f64,
    pub points: usize,
}

impl Default for TsConfig {
    fn default() -> Self {
        let rp = RacahParameters::fe2();
        Self { n_electrons: 6, b: rp.b, c: rp.c, dq_over_b_min: 0.0, dq_over_b_max: 4.0, points: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub block: BlockChoice,
    pub gap_tol_cm1: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Dq,
            start: 2000.0,
            stop: 2400.0,
            points: 60,
            block: BlockChoice::OddX,
            gap_tol_cm1: spinmer_core::analysis::DEFAULT_GAP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Number of lowest eigenpairs; all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nroots: Option<usize>,
    /// Energies closer than this form one degenerate group when spin labels
    /// are assigned.
    pub tol_degeneracy_cm1: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { nroots: None, tol_degeneracy_cm1: DEGENERACY_TOL * HARTREE_TO_CM1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Also report absolute energies in hartree.
    pub absolute_energies: bool,
}

/// Parses config text; errors carry the line of the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let msg = e.message().replace('\n', " ");
        CliError::Config(match line {
            Some(l) => format!("line {l}: {msg}"),
            None => msg,
        })
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    pub fn system(&self) -> Result<&SystemConfig, CliError> {
        self.system.as_ref().ok_or_else(|| CliError::Config("missing key 'system.model'".into()))
    }
}
