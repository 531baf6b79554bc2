//! Run configuration, read from a single JSON file.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use vvrkbs::measure::AtomicVectorMeasure;
use vvrkbs::operator_learning::{BaseFunctional, BranchCoefficients};
use vvrkbs::solver::{Loss, MeasurementOp, PenaltyMode, SolverOptions};
use vvrkbs::{DualPairSpec, FeatureMap, Norm};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub feature: Option<FeatureMap>,
    pub space: SpaceConfig,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub loss: Loss,
    #[serde(default)]
    pub measurement: MeasurementOp,
    #[serde(default)]
    pub hyper: Option<HyperConfig>,
    #[serde(default)]
    pub deeponet: Option<DeepOnetConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub d: usize,
    pub norm: Norm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: f64,
    #[serde(default)]
    pub mode: PenaltyMode,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub refit: RefitConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefitConfig {
    #[serde(default = "default_refit_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_refit_tol")]
    pub tol: f64,
}

impl Default for RefitConfig {
    fn default() -> Self {
        Self {
            max_iter: default_refit_max_iter(),
            tol: default_refit_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub grid_per_dim: usize,
    #[serde(default = "default_oracle_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_oracle_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub phi: FeatureMap,
    pub psi: FeatureMap,
    pub functionals: Vec<BaseFunctional>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepOnetConfig {
    pub phi: FeatureMap,
    pub psi: FeatureMap,
    /// Primal-side basis measures over `Θ`, all sharing `psi`.
    pub basis: Vec<AtomicVectorMeasure>,
    /// One list of `(a, w)` pairs per basis function.
    pub coeffs: Vec<BranchCoefficients>,
}

fn default_max_atoms() -> usize {
    SolverOptions::default().max_atoms
}

fn default_restarts() -> usize {
    SolverOptions::default().restarts
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_refit_max_iter() -> usize {
    SolverOptions::default().refit_max_iter
}

fn default_refit_tol() -> f64 {
    SolverOptions::default().refit_tol
}

fn default_oracle_max_iter() -> usize {
    200_000
}

fn default_oracle_tol() -> f64 {
    1e-10
}

/// A parsed config together with the SHA-256 of its raw bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub digest: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        let config: Config = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Data(format!("malformed config {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        Ok(LoadedConfig { config, digest })
    }

    pub fn spec(&self) -> Result<DualPairSpec, CliError> {
        Ok(DualPairSpec::new(self.space.d, self.space.norm)?)
    }

    pub fn feature(&self) -> Result<&FeatureMap, CliError> {
        self.feature.as_ref().ok_or_else(|| CliError::Data("config is missing 'feature'".into()))
    }

    pub fn solver(&self) -> Result<&SolverConfig, CliError> {
        self.solver.as_ref().ok_or_else(|| CliError::Data("config is missing 'solver'".into()))
    }

    pub fn oracle(&self) -> Result<&OracleConfig, CliError> {
        self.oracle.as_ref().ok_or_else(|| CliError::Data("config is missing 'oracle'".into()))
    }

    pub fn hyper(&self) -> Result<&HyperConfig, CliError> {
        self.hyper.as_ref().ok_or_else(|| CliError::Data("config is missing 'hyper'".into()))
    }

    pub fn deeponet(&self) -> Result<&DeepOnetConfig, CliError> {
        self.deeponet.as_ref().ok_or_else(|| CliError::Data("config is missing 'deeponet'".into()))
    }
}

impl SolverConfig {
    /// Solver options, with `seed` overriding the configured seed.
    pub fn options(&self, seed: Option<u64>) -> Result<SolverOptions, CliError> {
        let opts = SolverOptions {
            max_atoms: self.max_atoms,
            restarts: self.restarts,
            tol: self.tol,
            refit_max_iter: self.refit.max_iter,
            refit_tol: self.refit.tol,
            seed: seed.unwrap_or(self.seed),
            mode: self.mode,
        };
        opts.validate()?;
        Ok(opts)
    }
}
