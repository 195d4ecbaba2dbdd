//! The run configuration: a JSON file, overridden field by field from flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use lowner::coulomb::CurveSpec;
use lowner::loewner::{ClosedForm, DrivingData};
use lowner::reduction::{Control, RFunction};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Faber,
    Grunsky,
    Loewner,
    Hodograph,
    BuildLax,
    Verify,
    Coulomb,
    Golden,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Faber => "faber",
            Subcommand::Grunsky => "grunsky",
            Subcommand::Loewner => "loewner",
            Subcommand::Hodograph => "hodograph",
            Subcommand::BuildLax => "build-lax",
            Subcommand::Verify => "verify",
            Subcommand::Coulomb => "coulomb",
            Subcommand::Golden => "golden",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum SourceConfig {
    /// One of the closed-form examples.
    Closed(ClosedForm),
    /// Integrate the Loewner equation; maps are stored on `grid`.
    Integrated { driving: DrivingData, grid: GridConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TimesConfig {
    Dkp {
        x: f64,
        #[serde(default, deserialize_with = "indexed")]
        t: BTreeMap<u32, f64>,
    },
    Dtoda {
        t0: f64,
        /// `t_n` as `[re, im]`.
        #[serde(default, deserialize_with = "indexed")]
        t: BTreeMap<i32, [f64; 2]>,
    },
}

// Internally tagged enums buffer their content, after which serde no longer turns
// the JSON string keys into integers on its own.
fn indexed<'de, D, K, V>(d: D) -> Result<BTreeMap<K, V>, D::Error>
where
    D: serde::Deserializer<'de>,
    K: std::str::FromStr + Ord,
    V: Deserialize<'de>,
{
    BTreeMap::<String, V>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse()
                .map(|k| (k, v))
                .map_err(|_| serde::de::Error::custom(format!("invalid time index {k:?}")))
        })
        .collect()
}

mod defaults {
    pub fn depth() -> i32 {
        lowner::DEFAULT_DEPTH
    }
    pub fn rk4_step() -> f64 {
        lowner::loewner::DEFAULT_STEP
    }
    pub fn fd_step() -> f64 {
        lowner::verify::DEFAULT_FD_STEP
    }
    pub fn lax_tol() -> f64 {
        lowner::verify::DEFAULT_LAX_TOL
    }
    pub fn hydro_tol() -> f64 {
        lowner::verify::DEFAULT_HYDRO_TOL
    }
    pub fn flow_tol() -> f64 {
        lowner::verify::DEFAULT_FLOW_TOL
    }
    pub fn loewner_tol() -> f64 {
        1e-6
    }
    pub fn symmetry_tol() -> f64 {
        1e-10
    }
    pub fn half_width() -> usize {
        lowner::faber_grunsky::DEFAULT_HALF_WIDTH
    }
    pub fn n_max() -> usize {
        8
    }
}

/// Numerical parameters; every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    /// Series truncation depth.
    #[serde(default = "defaults::depth")]
    pub depth: i32,
    #[serde(default = "defaults::rk4_step")]
    pub rk4_step: f64,
    /// Relative finite-difference step.
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
    #[serde(default = "defaults::lax_tol")]
    pub lax_tol: f64,
    #[serde(default = "defaults::hydro_tol")]
    pub hydro_tol: f64,
    #[serde(default = "defaults::flow_tol")]
    pub flow_tol: f64,
    /// Integrated vs closed-form coefficient tolerance.
    #[serde(default = "defaults::loewner_tol")]
    pub loewner_tol: f64,
    /// Grunsky symmetry tolerance.
    #[serde(default = "defaults::symmetry_tol")]
    pub symmetry_tol: f64,
    /// Grunsky table half-width.
    #[serde(default = "defaults::half_width")]
    pub half_width: usize,
    /// Highest Faber index reported.
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Lax equations to check; defaults to the active times (and 1).
    #[serde(default)]
    pub lax: Option<Vec<i32>>,
    /// Hydrodynamic equations to check; defaults to the active times.
    #[serde(default)]
    pub hydro: Option<Vec<i32>>,
    /// Largest index in the flow-symmetry triples; 0 skips the check.
    #[serde(default)]
    pub flow_max_index: Option<i32>,
    #[serde(default)]
    pub control: Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoulombConfig {
    #[serde(default = "real_line")]
    pub curve: CurveSpec,
    pub n: usize,
    /// `t0 = hbar N`.
    pub t0: f64,
    /// Couplings `t_n`, `n >= 1`, as `[re, im]`.
    pub t: BTreeMap<i32, [f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "max_iters")]
    pub max_iters: usize,
    #[serde(default = "relax_tol")]
    pub tol: f64,
}

fn real_line() -> CurveSpec {
    CurveSpec::RealLine {}
}

fn max_iters() -> usize {
    lowner::coulomb::RelaxOptions::default().max_iters
}

fn relax_tol() -> f64 {
    lowner::coulomb::RelaxOptions::default().tol
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<u32>,
    #[serde(default)]
    pub subcommand: Option<Subcommand>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub times: Option<TimesConfig>,
    #[serde(default)]
    pub r: RFunction,
    #[serde(default)]
    pub bracket: Option<[f64; 2]>,
    /// Evaluation point for `faber` and `grunsky`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub coulomb: Option<CoulombConfig>,
    /// Closed-form example id for `golden`; all four when absent.
    #[serde(default)]
    pub example: Option<String>,
    #[serde(default)]
    pub output: OutputConfig,
}
