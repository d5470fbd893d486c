use std::path::{Path, PathBuf};

use multicurve_core::calibration::CalibrationConfig;
use multicurve_core::{
    CapletContract, FactorSpec, FraContract, ModelParams, QuadratureConfig, SimConfig,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run needs, read from one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub bond: BondBlock,
    #[serde(default)]
    pub fras: Vec<FraContract>,
    #[serde(default)]
    pub caplets: Vec<CapletContract>,
    #[serde(default)]
    pub simulation: SimConfig,
    #[serde(default)]
    pub paths: PathsBlock,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub calibration: CalibrationBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondBlock {
    pub maturities: Vec<f64>,
}

impl Default for BondBlock {
    fn default() -> Self {
        Self {
            maturities: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

/// Horizon and extra grid points of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsBlock {
    pub horizon: f64,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

impl Default for PathsBlock {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationBlock {
    /// Quotes to fit. Without it, quotes are generated from `model`.
    pub quote_file: Option<PathBuf>,
    pub maturities: Vec<f64>,
    pub tenors: Vec<f64>,
    pub noise_sd: f64,
    pub quote_seed: u64,
    /// Starting point; defaults to `model`.
    pub initial_guess: Option<ModelParams>,
    pub optimizer: CalibrationConfig,
}

impl Default for CalibrationBlock {
    fn default() -> Self {
        Self {
            quote_file: None,
            maturities: vec![0.5, 1.0, 2.0, 5.0],
            tenors: vec![0.25, 0.5],
            noise_sd: 0.0,
            quote_seed: 1,
            initial_guess: None,
            optimizer: CalibrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams {
                factor1: FactorSpec::gaussian(0.006, 0.3, 0.01, 0.004),
                factor2: FactorSpec::square_root(0.02, 0.5, 0.1, 0.03),
                factor3: FactorSpec::square_root(0.005, 0.8, 0.05, 0.004),
                kappa: 0.5,
            },
            bond: BondBlock::default(),
            fras: vec![
                FraContract {
                    maturity: 1.0,
                    delta: 0.5,
                    strike: 0.04,
                    notional: 1.0,
                },
                FraContract {
                    maturity: 2.0,
                    delta: 0.25,
                    strike: 0.04,
                    notional: 1.0,
                },
            ],
            caplets: vec![
                CapletContract {
                    maturity: 1.0,
                    delta: 0.5,
                    strike: 0.04,
                },
                CapletContract {
                    maturity: 2.0,
                    delta: 0.5,
                    strike: 0.05,
                },
            ],
            simulation: SimConfig::default(),
            paths: PathsBlock::default(),
            quadrature: QuadratureConfig::default(),
            calibration: CalibrationBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        for c in &self.fras {
            c.validate()?;
        }
        for c in &self.caplets {
            c.validate()?;
        }
        self.simulation.validate()?;
        if let Some(t) = self
            .bond
            .maturities
            .iter()
            .find(|t| !(**t >= 0.0 && t.is_finite()))
        {
            return Err(CliError::Config(format!("bond maturity {t} must be >= 0")));
        }
        if !(self.paths.horizon > 0.0 && self.paths.horizon.is_finite()) {
            return Err(CliError::Config(format!(
                "paths.horizon = {} must be > 0",
                self.paths.horizon
            )));
        }
        if let Some(g) = &self.calibration.initial_guess {
            g.validate()?;
        }
        Ok(())
    }
}
