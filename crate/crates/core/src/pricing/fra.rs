//! Single-curve and two-curve FRA quantities.
//!
//! The two-curve expectation ν̄ = E^{T+Δ}[1/p̄(T,T+Δ) | F_t] is available by two
//! routes: directly, as one exponential-affine transform after moving to the
//! spot measure, and through the decomposition
//!
//! ```text
//! ν̄ = ν · Ad · exp[κσ₁²/(2b₁³)(1 − e^{−b₁Δ})(1 − e^{−b₁(T−t)})²]
//! ```
//!
//! with ν = p(t,T)/p(t,T+Δ) and Ad = E^Q[p(T,T+Δ)/p̄(T,T+Δ) | F_t].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FraContract, FraDecomposition};
use crate::affine::{check_interval, finite, AffineModel, Curve, FactorState};
use crate::error::{Error, Result};

/// How ν̄ is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuBarMethod {
    /// ν · Ad · correlation exponential.
    Decomposition,
    /// Single transform under Q.
    Direct,
}

fn check_tenor(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidContract(format!(
            "tenor must be >= 0, got {delta}"
        )));
    }
    Ok(())
}

fn check_positive_tenor(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidContract(format!(
            "tenor must be > 0, got {delta}"
        )));
    }
    Ok(())
}

/// ν_{t,T} = p(t,T)/p(t,T+Δ).
pub fn nu_single_curve(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
) -> Result<f64> {
    check_interval(state.t, maturity)?;
    check_tenor(delta)?;
    if delta == 0.0 {
        return Ok(1.0);
    }
    let start = model.riskfree_bond_coeffs(state.t, maturity)?;
    let end = model.riskfree_bond_coeffs(state.t, maturity + delta)?;
    let psi = state.psi();
    finite((start.log_price(psi) - end.log_price(psi)).exp(), "nu")
}

/// K_t = (ν − 1)/Δ.
pub fn fair_rate_single(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
) -> Result<f64> {
    check_positive_tenor(delta)?;
    Ok(rate_from_nu(
        nu_single_curve(model, state, maturity, delta)?,
        delta,
    ))
}

/// (ν − 1)/Δ
pub fn rate_from_nu(nu: f64, delta: f64) -> f64 {
    (nu - 1.0) / delta
}

/// Ad_t^{T,Δ} = E^Q[p(T,T+Δ)/p̄(T,T+Δ) | F_t].
pub fn adjustment_factor(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
) -> Result<f64> {
    check_interval(state.t, maturity)?;
    check_tenor(delta)?;
    let ratio = model.bond_ratio_coeffs(maturity, delta)?;
    let (a3, b3) = model.factor_transform(2, 0.0, real(-ratio.b3_bar), state.t, maturity)?;
    let (a1, b1) = model.factor_transform(
        0,
        0.0,
        real(ratio.kappa * ratio.b1_tilde),
        state.t,
        maturity,
    )?;
    let exponent = -ratio.a_tilde + (a3.re - b3.re * state.psi3) + (a1.re - b1.re * state.psi1);
    finite(exponent.exp(), "adjustment factor")
}

/// κσ₁²/(2b₁³)(1 − e^{−b₁Δ})(1 − e^{−b₁(T−t)})²
pub fn correlation_exponent(model: &AffineModel, t: f64, maturity: f64, delta: f64) -> Result<f64> {
    check_interval(t, maturity)?;
    check_tenor(delta)?;
    let p = model.params();
    let (b, sigma) = (p.factor1.b, p.factor1.sigma);
    let horizon = -(-b * (maturity - t)).exp_m1();
    let tenor = -(-b * delta).exp_m1();
    Ok(p.kappa * sigma * sigma / (2.0 * b.powi(3)) * tenor * horizon * horizon)
}

/// exp of [`correlation_exponent`].
pub fn correlation_exponential(
    model: &AffineModel,
    t: f64,
    maturity: f64,
    delta: f64,
) -> Result<f64> {
    Ok(correlation_exponent(model, t, maturity, delta)?.exp())
}

/// ν̄_{t,T} = E^{T+Δ}[1/p̄(T,T+Δ) | F_t].
pub fn nu_bar(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
    method: NuBarMethod,
) -> Result<f64> {
    match method {
        NuBarMethod::Decomposition => Ok(decompose(model, state, maturity, delta)?.nu_bar),
        NuBarMethod::Direct => nu_bar_direct(model, state, maturity, delta),
    }
}

/// ν̄ = e^{−Ã}·E^Q[e^{B̄³Ψ³_T}|F_t]·F_t / p(t,T+Δ), where
/// F_t = E^Q[e^{−∫_t^T r du} e^{−κB̃¹Ψ¹_T} | F_t].
fn nu_bar_direct(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
) -> Result<f64> {
    check_interval(state.t, maturity)?;
    check_tenor(delta)?;
    let ratio = model.bond_ratio_coeffs(maturity, delta)?;
    let (a3, b3) = model.factor_transform(2, 0.0, real(-ratio.b3_bar), state.t, maturity)?;
    let (a1, b1) = model.factor_transform(
        0,
        -1.0,
        real(ratio.kappa * ratio.b1_tilde),
        state.t,
        maturity,
    )?;
    let (a2, b2) = model.factor_transform(1, 1.0, real(0.0), state.t, maturity)?;
    let log_f = (a1.re - b1.re * state.psi1) + (a2.re - b2.re * state.psi2);
    let end = model.riskfree_bond_coeffs(state.t, maturity + delta)?;
    let exponent =
        -ratio.a_tilde + (a3.re - b3.re * state.psi3) + log_f - end.log_price(state.psi());
    finite(exponent.exp(), "nu_bar")
}

/// All quantities of the single-curve to two-curve decomposition.
pub fn decompose(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
) -> Result<FraDecomposition> {
    check_positive_tenor(delta)?;
    let nu_single = nu_single_curve(model, state, maturity, delta)?;
    let adjustment = adjustment_factor(model, state, maturity, delta)?;
    let corr_exponential = correlation_exponential(model, state.t, maturity, delta)?;
    let nu_bar = nu_single * adjustment * corr_exponential;
    Ok(FraDecomposition {
        nu_single,
        adjustment,
        corr_exponential,
        nu_bar,
        k_single: rate_from_nu(nu_single, delta),
        k_risky: rate_from_nu(nu_bar, delta),
    })
}

/// K̄_t = (ν̄ − 1)/Δ with ν̄ from the direct transform.
pub fn fair_rate_risky(
    model: &AffineModel,
    state: &FactorState,
    maturity: f64,
    delta: f64,
) -> Result<f64> {
    check_positive_tenor(delta)?;
    Ok(rate_from_nu(
        nu_bar_direct(model, state, maturity, delta)?,
        delta,
    ))
}

/// K̄_t = (K_t + 1/Δ)·Ad·(correlation exponential) − 1/Δ.
pub fn fair_rate_risky_from_single(
    k_single: f64,
    adjustment: f64,
    corr_exponential: f64,
    delta: f64,
) -> f64 {
    (k_single + 1.0 / delta) * adjustment * corr_exponential - 1.0 / delta
}

/// N·p(t,T+Δ)·(ν̄ − (1 + ΔK)).
pub fn fra_price(model: &AffineModel, state: &FactorState, contract: &FraContract) -> Result<f64> {
    contract.validate()?;
    let nu_bar = nu_bar_direct(model, state, contract.maturity, contract.delta)?;
    let end = model.bond_price(Curve::RiskFree, state, contract.maturity + contract.delta)?;
    Ok(contract.notional * end * (nu_bar - (1.0 + contract.delta * contract.strike)))
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
