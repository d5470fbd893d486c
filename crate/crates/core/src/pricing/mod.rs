//! FRA fair rates, the adjustment-factor decomposition and caplet pricing.

mod caplet;
mod fra;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use caplet::{caplet_price, forward_mgf, mgf_ratio, CapletPrice, ForwardMgf, MIN_DAMPING};
pub use fra::{
    adjustment_factor, correlation_exponent, correlation_exponential, decompose, fair_rate_risky,
    fair_rate_risky_from_single, fair_rate_single, fra_price, nu_bar, nu_single_curve,
    rate_from_nu, NuBarMethod,
};

/// Forward rate agreement on the LIBOR fixing at `maturity` for `[T, T+Δ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FraContract {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub strike: f64,
    #[serde(default = "unit")]
    pub notional: f64,
}

fn unit() -> f64 {
    1.0
}

impl FraContract {
    pub fn new(maturity: f64, delta: f64, strike: f64, notional: f64) -> Result<Self> {
        let c = Self {
            maturity,
            delta,
            strike,
            notional,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::InvalidContract(format!(
                "FRA reset T = {} must be > 0",
                self.maturity
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidContract(format!(
                "FRA tenor = {} must be > 0",
                self.delta
            )));
        }
        if !(self.notional > 0.0 && self.notional.is_finite()) {
            return Err(Error::InvalidContract(format!(
                "notional = {} must be > 0",
                self.notional
            )));
        }
        if !self.strike.is_finite() {
            return Err(Error::InvalidContract("strike is not finite".into()));
        }
        Ok(())
    }
}

/// Caplet on L̄(T;T,T+Δ) with strike K, per unit notional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapletContract {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub strike: f64,
}

impl CapletContract {
    pub fn new(maturity: f64, delta: f64, strike: f64) -> Result<Self> {
        let c = Self {
            maturity,
            delta,
            strike,
        };
        c.validate()?;
        Ok(c)
    }

    /// K̃ = 1 + ΔK
    pub fn k_tilde(&self) -> f64 {
        1.0 + self.delta * self.strike
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::InvalidContract(format!(
                "caplet reset T = {} must be > 0",
                self.maturity
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidContract(format!(
                "caplet tenor = {} must be > 0",
                self.delta
            )));
        }
        if !self.strike.is_finite() {
            return Err(Error::InvalidContract("strike is not finite".into()));
        }
        Ok(())
    }
}

/// Result of the single-curve to two-curve decomposition at one (t, T, Δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FraDecomposition {
    /// ν = p(t,T)/p(t,T+Δ)
    pub nu_single: f64,
    /// Ad = E^Q[p(T,T+Δ)/p̄(T,T+Δ) | F_t]
    pub adjustment: f64,
    pub corr_exponential: f64,
    /// ν · Ad · corr_exponential
    pub nu_bar: f64,
    pub k_single: f64,
    pub k_risky: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    GaussLegendre,
    Simpson,
}

/// Settings of the Fourier inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Damping R (real part of the integration line), > 1.
    #[serde(rename = "R")]
    pub damping: f64,
    /// Bisect R toward 1 when the MGF is not finite at R.
    pub adapt_damping: bool,
    /// Cap on the truncation point of the v-integral.
    pub v_max: f64,
    /// Initial node count; doubled until converged.
    pub n_points: usize,
    pub max_points: usize,
    pub scheme: QuadratureScheme,
    /// Relative change between doublings accepted as converged.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            damping: 1.5,
            adapt_damping: true,
            v_max: 2000.0,
            n_points: 64,
            max_points: 1 << 15,
            scheme: QuadratureScheme::GaussLegendre,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 1.0) {
            return Err(Error::StripViolation { r: self.damping });
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "v_max = {} must be > 0",
                self.v_max
            )));
        }
        if self.n_points < 16 {
            return Err(Error::InvalidConfig(format!(
                "n_points = {} must be >= 16",
                self.n_points
            )));
        }
        if self.max_points < 2 * self.n_points {
            return Err(Error::InvalidConfig(
                "max_points must allow at least one doubling".into(),
            ));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_tilde_exact() {
        let c = CapletContract::new(1.0, 0.5, 0.03).unwrap();
        assert_eq!(c.k_tilde(), 1.0 + 0.5 * 0.03);
    }

    #[test]
    fn contract_validation() {
        assert!(FraContract::new(0.0, 0.5, 0.01, 1.0).is_err());
        assert!(FraContract::new(1.0, 0.0, 0.01, 1.0).is_err());
        assert!(FraContract::new(1.0, 0.5, 0.01, -1.0).is_err());
        assert!(CapletContract::new(1.0, -0.5, 0.01).is_err());
    }

    #[test]
    fn quadrature_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let q = QuadratureConfig {
            n_points: 8,
            ..Default::default()
        };
        assert!(matches!(q.validate(), Err(Error::InvalidConfig(_))));
        let q = QuadratureConfig {
            damping: 1.0,
            ..Default::default()
        };
        assert!(matches!(q.validate(), Err(Error::StripViolation { .. })));
    }
}
