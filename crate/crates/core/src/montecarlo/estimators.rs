use serde::{Deserialize, Serialize};

use super::sim::PathEngine;
use super::{McEstimate, SimConfig};
use crate::affine::{AffineModel, Curve};
use crate::error::Result;
use crate::pricing::{CapletContract, FraContract};

/// E^Q[exp(−∫_0^T rate du)] with the rate of `curve`, trapezoidal on the path grid.
pub fn mc_bond_price(
    model: &AffineModel,
    curve: Curve,
    maturity: f64,
    config: &SimConfig,
) -> Result<McEstimate> {
    config.validate()?;
    if maturity == 0.0 {
        return Ok(McEstimate {
            mean: 1.0,
            std_error: 0.0,
            n_paths: config.n_paths,
        });
    }
    let weights = model.discount_weights(curve);
    let engine = PathEngine::new(model.params(), config, maturity, &[maturity])?;
    let est = engine.estimate(1, |snaps, out| {
        out[0] = (-snaps[0].weighted_integral(weights)).exp();
    });
    Ok(est[0])
}

/// E^Q[p(T,T+Δ)/p̄(T,T+Δ)] with the ratio evaluated from the simulated Ψ_T.
pub fn mc_adjustment_factor(
    model: &AffineModel,
    maturity: f64,
    delta: f64,
    config: &SimConfig,
) -> Result<McEstimate> {
    config.validate()?;
    let ratio = model.bond_ratio_coeffs(maturity, delta)?;
    if maturity == 0.0 {
        let s = model.params().initial_state();
        return Ok(McEstimate {
            mean: ratio.ratio(s.psi1, s.psi3),
            std_error: 0.0,
            n_paths: config.n_paths,
        });
    }
    let engine = PathEngine::new(model.params(), config, maturity, &[maturity])?;
    let est = engine.estimate(1, |snaps, out| {
        out[0] = ratio.ratio(snaps[0].psi[0], snaps[0].psi[2]);
    });
    Ok(est[0])
}

/// ν̄ and FRA value estimated together from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FraLegs {
    pub nu_bar: McEstimate,
    pub value: McEstimate,
}

/// ν̄_{0,T} = E^Q[e^{−∫_0^T r} p(T,T+Δ)/p̄(T,T+Δ)] / p(0,T+Δ) and the FRA value
/// N·E^Q[e^{−∫_0^T r} p(T,T+Δ)(1/p̄(T,T+Δ) − (1+ΔK))].
pub fn mc_fra_legs(
    model: &AffineModel,
    contract: &FraContract,
    config: &SimConfig,
) -> Result<FraLegs> {
    contract.validate()?;
    config.validate()?;
    let (t, delta) = (contract.maturity, contract.delta);
    let riskfree = model.riskfree_bond_coeffs(t, t + delta)?;
    let risky = model.risky_bond_coeffs(t, t + delta)?;
    let end = model.bond_price(Curve::RiskFree, &model.params().initial_state(), t + delta)?;
    let weights = model.discount_weights(Curve::RiskFree);
    let k_tilde = 1.0 + delta * contract.strike;
    let engine = PathEngine::new(model.params(), config, t, &[t])?;
    let est = engine.estimate(2, |snaps, out| {
        let s = &snaps[0];
        let discounted = (-s.weighted_integral(weights) + riskfree.log_price(s.psi)).exp();
        let inv_risky = (-risky.log_price(s.psi)).exp();
        out[0] = discounted * inv_risky;
        out[1] = discounted * (inv_risky - k_tilde);
    });
    Ok(FraLegs {
        nu_bar: est[0].scaled(1.0 / end),
        value: est[1].scaled(contract.notional),
    })
}

/// Caplet price per unit notional: E^Q[e^{−∫_0^T r} p(T,T+Δ)(1/p̄(T,T+Δ) − K̃)⁺].
pub fn mc_caplet(
    model: &AffineModel,
    contract: &CapletContract,
    config: &SimConfig,
) -> Result<McEstimate> {
    Ok(mc_caplets(model, std::slice::from_ref(contract), config)?[0])
}

/// Prices several caplets on one set of paths (simulated to the latest reset).
pub fn mc_caplets(
    model: &AffineModel,
    contracts: &[CapletContract],
    config: &SimConfig,
) -> Result<Vec<McEstimate>> {
    config.validate()?;
    if contracts.is_empty() {
        return Ok(Vec::new());
    }
    let mut resets: Vec<f64> = Vec::new();
    let mut legs = Vec::with_capacity(contracts.len());
    for c in contracts {
        c.validate()?;
        let slot = match resets.iter().position(|&t| t == c.maturity) {
            Some(i) => i,
            None => {
                resets.push(c.maturity);
                resets.len() - 1
            }
        };
        let riskfree = model.riskfree_bond_coeffs(c.maturity, c.maturity + c.delta)?;
        let risky = model.risky_bond_coeffs(c.maturity, c.maturity + c.delta)?;
        legs.push((slot, riskfree, risky, c.k_tilde()));
    }
    let horizon = resets.iter().copied().fold(0.0, f64::max);
    let weights = model.discount_weights(Curve::RiskFree);
    let engine = PathEngine::new(model.params(), config, horizon, &resets)?;
    Ok(engine.estimate(legs.len(), |snaps, out| {
        for (o, (slot, riskfree, risky, k_tilde)) in out.iter_mut().zip(&legs) {
            let s = &snaps[*slot];
            let discounted = (-s.weighted_integral(weights) + riskfree.log_price(s.psi)).exp();
            let inv_risky = (-risky.log_price(s.psi)).exp();
            *o = discounted * (inv_risky - k_tilde).max(0.0);
        }
    }))
}
