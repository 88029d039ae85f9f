//! Sectioned configuration files. Every section and every key is optional here;
//! command-line flags are merged on top and the commands decide what is required.

use std::path::{Path, PathBuf};

use inls_core::scenarios::{Family, Hypothesis};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "INLS_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "inls-out";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub data: Option<DataSection>,
    pub target: Option<TargetSection>,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub virial: VirialSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub verbosity: Option<u8>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub d: Option<usize>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r_max: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub family: Family,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub phase: Option<f64>,
    pub file: Option<PathBuf>,
    pub e_target: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub hypothesis: Hypothesis,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// Initial data in the columnar field format.
    pub input: Option<PathBuf>,
    pub dt0: Option<f64>,
    pub t_max: Option<f64>,
    pub cfl_safety: Option<f64>,
    pub blowup_gradient_factor: Option<f64>,
    pub mass_drift_tol: Option<f64>,
    pub record_every: Option<usize>,
    pub checkpoint_every: Option<usize>,
    /// Virial weights: `quadratic`, `radial:<R>` or `1d`.
    pub weights: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirialSection {
    /// Directory written by `evolve` with checkpoints.
    pub trajectory: Option<PathBuf>,
    pub weights: Option<Vec<String>>,
    pub tol_first: Option<f64>,
    pub tol_second: Option<f64>,
    pub eps: Option<f64>,
    pub bound_slack: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub amplitude: Option<Vec<f64>>,
    pub width: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
}

impl FileConfig {
    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.output.dir);
        fix(&mut cfg.evolve.input);
        fix(&mut cfg.virial.trajectory);
        if let Some(data) = cfg.data.as_mut() {
            fix(&mut data.file);
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// Overlays a command-line value; flags win over the file.
pub fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// Output directory: flag, config file, environment, then `./inls-out`.
pub fn output_dir(flag: Option<PathBuf>, file: &OutputSection) -> PathBuf {
    flag.or_else(|| file.dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}
