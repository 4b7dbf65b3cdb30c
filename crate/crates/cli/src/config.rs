//! JSON run configurations, one shape per command.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use relosc::classify::WindowPolicy;
use relosc::coeffs::{FamilyDocument, Interval};
use relosc::kneser::KneserMode;
use relosc::spectra::{Bc, GridMap};

use crate::CliError;

/// Numeric settings shared by every command. Command-line flags override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub margin: Option<f64>,
    /// Full window policy; defaults to `x0 = a + 1`, ratio 2, K = 12.
    pub policy: Option<WindowPolicy>,
    /// Extend the default policy until the last window point reaches this x.
    pub x_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub equation: FamilyDocument,
    pub lambda: f64,
    #[serde(default)]
    pub theta_a: f64,
    pub x_end: f64,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReloscConfig {
    pub equation0: FamilyDocument,
    pub lambda0: f64,
    #[serde(default)]
    pub theta0: f64,
    pub equation1: FamilyDocument,
    pub lambda1: f64,
    #[serde(default)]
    pub theta1: f64,
    pub x_end: f64,
    /// Points at which the relative count is reported.
    #[serde(default)]
    pub samples: Vec<f64>,
    /// When set, each sample is also counted by the dense Wronskian oracle.
    pub dense_grid: Option<usize>,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Side {
    pub equation: FamilyDocument,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub equation: FamilyDocument,
    pub lambda: f64,
    /// Classify relative to this equation (it plays the role of `tau_0 - lambda_0`).
    pub reference: Option<Side>,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailGrid {
    pub x_start: Option<f64>,
    #[serde(default = "default_windows")]
    pub windows: usize,
    #[serde(default = "default_per_window")]
    pub per_window: usize,
}

fn default_windows() -> usize {
    40
}

fn default_per_window() -> usize {
    8
}

impl Default for TailGrid {
    fn default() -> Self {
        TailGrid { x_start: None, windows: default_windows(), per_window: default_per_window() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KneserSource {
    /// `delta_tilde` of the equation on log scale `n`.
    Equation { equation: FamilyDocument, n: u32 },
    /// A synthetic constant.
    Constant { value: f64, interval: Interval },
    /// Precomputed `(x, value)` pairs.
    Samples { samples: Vec<(f64, f64)>, interval: Interval },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KneserConfig {
    pub source: KneserSource,
    #[serde(default = "default_mode")]
    pub mode: KneserMode,
    pub ell_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub tail: TailGrid,
    #[serde(default)]
    pub settings: Settings,
}

fn default_mode() -> KneserMode {
    KneserMode::Pointwise
}

fn dirichlet() -> Bc {
    Bc::Dirichlet
}

fn default_grid_n() -> usize {
    4000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigencountConfig {
    pub equation: FamilyDocument,
    pub truncations: Vec<f64>,
    pub lambdas: Vec<f64>,
    #[serde(default = "dirichlet")]
    pub bc_left: Bc,
    #[serde(default = "dirichlet")]
    pub bc_right: Bc,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    pub map: Option<GridMap>,
    /// Run the accumulation study (Dirichlet ends, lambdas below the essential spectrum).
    #[serde(default)]
    pub study: bool,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub equation0: FamilyDocument,
    pub equation1: FamilyDocument,
    #[serde(default)]
    pub tail: TailGrid,
    /// `(lambda, mu)` for a gap comparison; defaults to `(bottom - 2, bottom - 1)`.
    pub gap: Option<(f64, f64)>,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    #[serde(default)]
    pub settings: Settings,
}

/// A parsed configuration together with the hash of its canonical form.
pub struct Loaded<T> {
    pub config: T,
    pub sha256: String,
}

/// Reads and parses `path`; parse failures carry line and column.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<Loaded<T>, CliError> {
    let located = |e: serde_json::Error| CliError::Config {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(text).map_err(located)?;
    // Re-parse from text (not from the value) so field errors keep their location.
    let config = serde_json::from_str(text).map_err(located)?;
    Ok(Loaded { config, sha256: canonical_hash(&value) })
}

/// SHA-256 of the JSON with object keys sorted and no whitespace.
pub fn canonical_hash(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key, so this is canonical.
    let canonical = serde_json::to_string(value).expect("values serialize");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
