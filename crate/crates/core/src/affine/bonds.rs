use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::{FactorState, ModelParams};
use super::riccati::{check_interval, AffineTransform, FactorCoeffs, RiccatiSolver};
use crate::error::{Error, Result};

/// Which discount curve a bond belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// OIS bond, discounting at r.
    RiskFree,
    /// Fictitious LIBOR bond, discounting at r + s.
    Risky,
}

/// Bond price coefficients: p(t,T) = exp(A − B·Ψ_t). `b[2]` is zero for the
/// risk-free curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondCoeffs {
    pub curve: Curve,
    pub a: f64,
    pub b: [f64; 3],
}

impl BondCoeffs {
    pub fn log_price(&self, psi: [f64; 3]) -> f64 {
        self.a - self.b[0] * psi[0] - self.b[1] * psi[1] - self.b[2] * psi[2]
    }

    pub fn price(&self, psi: [f64; 3]) -> f64 {
        self.log_price(psi).exp()
    }
}

/// Coefficients of p(T,T+Δ)/p̄(T,T+Δ) = exp(−Ã − κB̃¹Ψ¹_T + B̄³Ψ³_T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCoeffs {
    /// Ã = Ā(T,T+Δ) − A(T,T+Δ)
    pub a_tilde: f64,
    /// B̃¹ = B¹(T,T+Δ)
    pub b1_tilde: f64,
    /// B̄³(T,T+Δ)
    pub b3_bar: f64,
    pub kappa: f64,
}

impl RatioCoeffs {
    pub fn log_ratio(&self, psi1: f64, psi3: f64) -> f64 {
        -self.a_tilde - self.kappa * self.b1_tilde * psi1 + self.b3_bar * psi3
    }

    pub fn ratio(&self, psi1: f64, psi3: f64) -> f64 {
        self.log_ratio(psi1, psi3).exp()
    }
}

/// Validated model parameters together with the solver used for every
/// transform computed from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineModel {
    params: ModelParams,
    solver: RiccatiSolver,
}

impl AffineModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        Ok(Self {
            params: params.validate()?,
            solver: RiccatiSolver::default(),
        })
    }

    pub fn with_solver(mut self, solver: RiccatiSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn solver(&self) -> &RiccatiSolver {
        &self.solver
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa
    }

    /// Running weights on (Ψ¹, Ψ², Ψ³) of the discount rate of `curve`.
    pub fn discount_weights(&self, curve: Curve) -> [f64; 3] {
        match curve {
            Curve::RiskFree => [-1.0, 1.0, 0.0],
            Curve::Risky => [self.params.kappa - 1.0, 1.0, 1.0],
        }
    }

    /// E[exp(−∫_t^T q·Ψ du − w·Ψ_T) | F_t] in exponential-affine form.
    pub fn solve_riccati(
        &self,
        q: [f64; 3],
        w: [Complex64; 3],
        t: f64,
        maturity: f64,
    ) -> Result<AffineTransform> {
        self.solver.solve(&self.params, q, w, t, maturity)
    }

    /// Single-factor building block of [`solve_riccati`](Self::solve_riccati);
    /// `factor` is 0-based.
    pub fn factor_transform(
        &self,
        factor: usize,
        q: f64,
        w: Complex64,
        t: f64,
        maturity: f64,
    ) -> Result<FactorCoeffs> {
        if factor > 2 {
            return Err(Error::InvalidParams(format!(
                "factor index {factor} out of range"
            )));
        }
        self.solver
            .factor_transform(factor, self.params.factor(factor), q, w, t, maturity)
    }

    pub fn bond_coeffs(&self, curve: Curve, t: f64, maturity: f64) -> Result<BondCoeffs> {
        let zero = Complex64::new(0.0, 0.0);
        let tr = self.solve_riccati(self.discount_weights(curve), [zero; 3], t, maturity)?;
        if !tr.is_real() {
            return Err(Error::NonFinite(
                "bond coefficients picked up an imaginary part".into(),
            ));
        }
        Ok(BondCoeffs {
            curve,
            a: tr.alpha.re,
            b: [tr.beta[0].re, tr.beta[1].re, tr.beta[2].re],
        })
    }

    /// (A, B¹, B²) of the OIS bond.
    pub fn riskfree_bond_coeffs(&self, t: f64, maturity: f64) -> Result<BondCoeffs> {
        self.bond_coeffs(Curve::RiskFree, t, maturity)
    }

    /// (Ā, B̄¹, B̄², B̄³) of the risky bond.
    pub fn risky_bond_coeffs(&self, t: f64, maturity: f64) -> Result<BondCoeffs> {
        self.bond_coeffs(Curve::Risky, t, maturity)
    }

    pub fn bond_price(&self, curve: Curve, state: &FactorState, maturity: f64) -> Result<f64> {
        check_interval(state.t, maturity)?;
        let coeffs = self.bond_coeffs(curve, state.t, maturity)?;
        finite(coeffs.price(state.psi()), "bond price")
    }

    /// Coefficients of p(T,T+Δ)/p̄(T,T+Δ) as a function of Ψ_T.
    pub fn bond_ratio_coeffs(&self, maturity: f64, delta: f64) -> Result<RatioCoeffs> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidContract(format!(
                "tenor must be >= 0, got {delta}"
            )));
        }
        let end = maturity + delta;
        let riskfree = self.riskfree_bond_coeffs(maturity, end)?;
        let risky = self.risky_bond_coeffs(maturity, end)?;
        Ok(RatioCoeffs {
            a_tilde: risky.a - riskfree.a,
            b1_tilde: riskfree.b[0],
            b3_bar: risky.b[2],
            kappa: self.params.kappa,
        })
    }
}

pub(crate) fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
