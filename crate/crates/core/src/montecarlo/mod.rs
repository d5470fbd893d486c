//! Seeded simulation of the factors under Q and Monte Carlo estimators used as
//! independent oracles for the analytic formulas.
//!
//! Every path owns one ChaCha8 stream per factor, derived from the master seed
//! and the path index, and paths are reduced in fixed-size chunks in index
//! order. Results therefore do not depend on the number of threads.

mod estimators;
mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use estimators::{
    mc_adjustment_factor, mc_bond_price, mc_caplet, mc_caplets, mc_fra_legs, FraLegs,
};
pub use sim::{simulate, time_grid, NoncentralChiSquare, PathEngine, Snapshot, Welford};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact transitions: Gaussian for factor 1, noncentral chi-square for 2 and 3.
    Exact,
    /// Full-truncation Euler for all factors.
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps_per_year: usize,
    pub seed: u64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

fn default_scheme() -> Scheme {
    Scheme::Exact
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps_per_year: 64,
            seed: 42,
            scheme: Scheme::Exact,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::InvalidConfig("n_paths must be >= 1".into()));
        }
        if self.n_steps_per_year < 4 {
            return Err(Error::InvalidConfig(format!(
                "n_steps_per_year = {} must be >= 4",
                self.n_steps_per_year
            )));
        }
        Ok(())
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    /// Number of standard errors separating the estimate from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, value: f64, n_se: f64) -> bool {
        self.z_score(value) <= n_se
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            std_error: self.std_error * factor.abs(),
            ..*self
        }
    }
}

/// Simulated factor trajectories: `psiN[path][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub psi1: Vec<Vec<f64>>,
    pub psi2: Vec<Vec<f64>>,
    pub psi3: Vec<Vec<f64>>,
    pub seed: u64,
    pub scheme: Scheme,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.psi1.len()
    }

    /// Paths of factor `index` (0-based).
    pub fn factor(&self, index: usize) -> &[Vec<f64>] {
        match index {
            0 => &self.psi1,
            1 => &self.psi2,
            2 => &self.psi3,
            _ => panic!("factor index {index} out of range"),
        }
    }

    /// CSV dump of one factor: a `time` header row, then one path per row.
    pub fn to_csv(&self, index: usize) -> String {
        let mut out = String::from("time");
        for t in &self.times {
            out.push(',');
            out.push_str(&format!("{t:.16e}"));
        }
        out.push('\n');
        for (p, path) in self.factor(index).iter().enumerate() {
            out.push_str(&p.to_string());
            for x in path {
                out.push(',');
                out.push_str(&format!("{x:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}
