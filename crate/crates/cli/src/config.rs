use std::path::Path;

use prophet_core::simkit::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MESH: usize = 200_000;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_501;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Table1,
    Table2,
    FigureData,
    Cr,
    CrMixture,
    Bvp,
    Grid,
    Ode,
    Simulate,
    Static,
    Worstcase,
    Reduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum FigureKind {
    CrLb,
    StaticHeatmap,
    OdeTraj,
    CrAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Quantile thresholds from the single-selection partition.
    Alg1,
    /// Quantile thresholds from the multi-layer grid.
    Alg2,
    /// Expected-demand static threshold `F⁻¹(1 - l/n)`.
    Static,
    /// Optimal dynamic program.
    Bdp,
}

/// Fully resolved invocation; embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub which: Option<FigureKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_mesh")]
    pub mesh: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<ModelSpec>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_mesh() -> usize {
    DEFAULT_MESH
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            which: None,
            ell: None,
            k: None,
            n: None,
            q: None,
            alpha: None,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
            mesh: DEFAULT_MESH,
            policy: None,
            dist: None,
            format: Format::Csv,
            out: None,
        }
    }

    /// Accepts a bare configuration or a JSON output record carrying one under `"config"`.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config JSON: {e}")))?;
        let inner = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") => {
                map.remove("config").expect("checked")
            }
            other => other,
        };
        let cfg: RunConfig =
            serde_json::from_value(inner).map_err(|e| CliError::Validation(format!("config JSON: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn parse(data: &[u8]) -> Result<Self, CliError> {
        let text = std::str::from_utf8(data).map_err(|e| CliError::Validation(format!("config is not UTF-8: {e}")))?;
        Self::from_json(text)
    }

    /// Parameter ranges that hold for every command.
    pub fn check(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Validation(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.mesh < 4 {
            return Err(CliError::Validation(format!("--mesh must be at least 4, got {}", self.mesh)));
        }
        if self.trials == 0 {
            return Err(CliError::Validation("--trials must be positive".into()));
        }
        if let Some(q) = self.q {
            if !(q > 0.0 && q < 1.0) {
                return Err(CliError::Validation(format!("--q must lie in (0, 1), got {q}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..=0.5).contains(&a) {
                return Err(CliError::Validation(format!("--alpha must lie in [0, 1/2], got {a}")));
            }
        }
        if self.ell == Some(0) || self.k == Some(0) || self.n == Some(0) {
            return Err(CliError::Validation("--ell, --k and --n must be positive".into()));
        }
        if self.command == Command::FigureData && self.which.is_none() {
            return Err(CliError::Validation("figure-data needs a figure kind".into()));
        }
        Ok(())
    }
}

/// Parses `--dist`: inline JSON, or `@path` naming a JSON file.
pub fn parse_dist_arg(arg: &str) -> Result<ModelSpec, CliError> {
    parse_dist_arg_with(arg, |p| std::fs::read_to_string(p))
}

/// [`parse_dist_arg`] with a caller-supplied file reader.
pub fn parse_dist_arg_with<R>(arg: &str, read: R) -> Result<ModelSpec, CliError>
where
    R: FnOnce(&Path) -> std::io::Result<String>,
{
    let arg = arg.trim();
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            read(Path::new(path)).map_err(|e| CliError::Validation(format!("cannot read --dist file {path}: {e}")))?
        }
        None => arg.to_string(),
    };
    let spec: ModelSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("--dist JSON: {e}")))?;
    prophet_core::simkit::DistributionModel::from_spec(&spec).map_err(CliError::from)?;
    Ok(spec)
}
