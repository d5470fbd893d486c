//! Caplet pricing by Fourier inversion of the forward-measure MGF of
//! X = −log p̄(T,T+Δ).
//!
//! Under Q^{T+Δ}, M̄(z) = E^{T+Δ}[e^{zX}] is computed under Q as
//! E^Q[e^{−∫r} p(T,T+Δ) e^{zX} | F_t] / p(t,T+Δ), which stays exponential-affine.
//! The caplet then is
//!
//! ```text
//! Capl = p(t,T+Δ)/(2π) ∫ K̃^{1−z} M̄(z) / (z(z−1)) dv,   z = R + iv,  R > 1.
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fra::{nu_bar, NuBarMethod};
use super::{CapletContract, QuadratureConfig, QuadratureScheme};
use crate::affine::{check_interval, AffineModel, BondCoeffs, Curve, FactorState};
use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss_legendre, composite_simpson, graded};

/// Lowest damping accepted when bisecting R down towards 1.
pub const MIN_DAMPING: f64 = 1.0 + 1e-3;

/// Forward-measure MGF of X = −log p̄(T,T+Δ) (or of −log p(T,T+Δ) when
/// built on the risk-free curve), conditional on a fixed state.
#[derive(Debug, Clone)]
pub struct ForwardMgf<'a> {
    model: &'a AffineModel,
    state: FactorState,
    maturity: f64,
    riskfree: BondCoeffs,
    underlying: BondCoeffs,
    log_end: f64,
}

impl<'a> ForwardMgf<'a> {
    pub fn new(
        model: &'a AffineModel,
        state: &FactorState,
        maturity: f64,
        delta: f64,
        curve: Curve,
    ) -> Result<Self> {
        check_interval(state.t, maturity)?;
        if !(delta > 0.0) {
            return Err(Error::InvalidContract(format!(
                "tenor must be > 0, got {delta}"
            )));
        }
        let riskfree = model.riskfree_bond_coeffs(maturity, maturity + delta)?;
        let underlying = model.bond_coeffs(curve, maturity, maturity + delta)?;
        let log_end = model
            .riskfree_bond_coeffs(state.t, maturity + delta)?
            .log_price(state.psi());
        Ok(Self {
            model,
            state: *state,
            maturity,
            riskfree,
            underlying,
            log_end,
        })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let rf = &self.riskfree;
        let un = &self.underlying;
        let w = [
            rf.b[0] - z * un.b[0],
            rf.b[1] - z * un.b[1],
            rf.b[2] - z * un.b[2],
        ];
        let tr = self.model.solve_riccati(
            self.model.discount_weights(Curve::RiskFree),
            w,
            self.state.t,
            self.maturity,
        )?;
        let exponent = rf.a - z * un.a + tr.exponent(self.state.psi()) - self.log_end;
        let value = exponent.exp();
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::NonFinite(format!("MGF at z = {z}")));
        }
        Ok(value)
    }
}

/// M̄_X^{T+Δ}(z) for X = −log p̄(T,T+Δ).
pub fn forward_mgf(
    model: &AffineModel,
    z: Complex64,
    maturity: f64,
    delta: f64,
    state: &FactorState,
) -> Result<Complex64> {
    ForwardMgf::new(model, state, maturity, delta, Curve::Risky)?.eval(z)
}

/// M̄(z)/M(z), where M is the MGF of −log p(T,T+Δ) under the same measure.
/// Reported as a diagnostic only.
pub fn mgf_ratio(
    model: &AffineModel,
    z: Complex64,
    maturity: f64,
    delta: f64,
    state: &FactorState,
) -> Result<Complex64> {
    let risky = forward_mgf(model, z, maturity, delta, state)?;
    let riskfree = ForwardMgf::new(model, state, maturity, delta, Curve::RiskFree)?.eval(z)?;
    Ok(risky / riskfree)
}

/// Caplet price per unit notional with the numerical settings that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapletPrice {
    pub price: f64,
    /// Damping actually used; `None` when priced by parity (K̃ ≤ 0).
    pub damping: Option<f64>,
    pub v_max: Option<f64>,
    pub n_points: Option<usize>,
}

/// Caplet with payoff Δ(L̄(T;T,T+Δ) − K)⁺ paid at T+Δ, valued at `state`.
pub fn caplet_price(
    model: &AffineModel,
    contract: &CapletContract,
    state: &FactorState,
    quad: &QuadratureConfig,
) -> Result<CapletPrice> {
    contract.validate()?;
    quad.validate()?;
    let (maturity, delta) = (contract.maturity, contract.delta);
    let k_tilde = contract.k_tilde();
    if k_tilde <= 0.0 {
        // (1/p̄ − K̃)⁺ = 1/p̄ − K̃ because 1/p̄ > 0.
        let end = model.bond_price(Curve::RiskFree, state, maturity + delta)?;
        let nb = nu_bar(model, state, maturity, delta, NuBarMethod::Direct)?;
        return Ok(CapletPrice {
            price: end * (nb - k_tilde),
            damping: None,
            v_max: None,
            n_points: None,
        });
    }

    let mgf = ForwardMgf::new(model, state, maturity, delta, Curve::Risky)?;
    let damping = select_damping(&mgf, quad)?;
    let log_k = k_tilde.ln();
    let integrand = |v: f64| -> Result<Complex64> {
        let z = Complex64::new(damping, v);
        let m = mgf.eval(z).map_err(|e| strip_error(e, damping))?;
        Ok(((1.0 - z) * log_k).exp() * m / (z * (z - 1.0)))
    };

    let v_max = truncation(&integrand, quad.v_max)?;
    let integrate = |n: usize| -> Result<(f64, f64)> {
        let nodes = match quad.scheme {
            QuadratureScheme::GaussLegendre => graded(v_max, n, composite_gauss_legendre),
            QuadratureScheme::Simpson => graded(v_max, n, composite_simpson),
        };
        let values: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|&(v, w)| integrand(v).map(|f| (w * f.re, (w * f.re).abs())))
            .collect::<Result<_>>()?;
        Ok(values
            .iter()
            .fold((0.0, 0.0), |(s, l1), (x, a)| (s + x, l1 + a)))
    };

    let mut n = quad.n_points;
    let (mut previous, _) = integrate(n)?;
    loop {
        let next_n = 2 * n;
        if next_n > quad.max_points {
            return Err(Error::QuadratureNotConverged {
                n_points: n,
                change: f64::NAN,
            });
        }
        let (current, l1) = integrate(next_n)?;
        let change = (current - previous).abs();
        let tolerance = (quad.rel_tol * current.abs()).max(ROUNDOFF_FLOOR * l1);
        if change <= tolerance {
            let end = mgf.log_end.exp();
            let price = end * current / std::f64::consts::PI;
            return Ok(CapletPrice {
                price: price.max(0.0),
                damping: Some(damping),
                v_max: Some(v_max),
                n_points: Some(next_n),
            });
        }
        if next_n * 2 > quad.max_points {
            return Err(Error::QuadratureNotConverged {
                n_points: next_n,
                change,
            });
        }
        previous = current;
        n = next_n;
    }
}

/// Relative (to Σ|w f|) accuracy below which cancellation noise dominates.
const ROUNDOFF_FLOOR: f64 = 1e-13;

fn strip_error(e: Error, damping: f64) -> Error {
    match e {
        Error::RiccatiExplosion { .. } | Error::NonFinite(_) => {
            Error::StripViolation { r: damping }
        }
        other => other,
    }
}

/// Probes MGF finiteness at R; bisects toward 1 when allowed.
fn select_damping(mgf: &ForwardMgf<'_>, quad: &QuadratureConfig) -> Result<f64> {
    let mut r = quad.damping;
    if !(r > 1.0) {
        return Err(Error::StripViolation { r });
    }
    loop {
        match mgf.eval(Complex64::new(r, 0.0)) {
            Ok(_) => return Ok(r),
            Err(Error::RiccatiExplosion { .. }) | Err(Error::NonFinite(_)) => {
                if !quad.adapt_damping {
                    return Err(Error::StripViolation { r });
                }
                let next = 0.5 * (1.0 + r);
                if next < MIN_DAMPING {
                    return Err(Error::StripViolation { r: next });
                }
                r = next;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Smallest power-of-two multiple of 1 at which the integrand modulus drops
/// below 1e-12 of its value at v = 0, capped at `cap`.
fn truncation<F>(integrand: &F, cap: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let reference = integrand(0.0)?.norm();
    let mut v = 1.0_f64.min(cap);
    while v < cap {
        if integrand(v)?.norm() < 1e-12 * reference {
            return Ok(v);
        }
        v = (2.0 * v).min(cap);
    }
    Ok(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{FactorSpec, ModelParams};

    fn model(kappa: f64) -> AffineModel {
        AffineModel::new(ModelParams {
            factor1: FactorSpec::gaussian(0.01, 0.5, 0.01, 0.004),
            factor2: FactorSpec::square_root(0.02, 0.5, 0.1, 0.03),
            factor3: FactorSpec::square_root(0.005, 0.8, 0.05, 0.004),
            kappa,
        })
        .unwrap()
    }

    #[test]
    fn mgf_normalization_and_bridge() {
        let m = model(0.4);
        let s = m.params().initial_state();
        let one = forward_mgf(&m, Complex64::new(0.0, 0.0), 1.0, 0.5, &s).unwrap();
        assert!((one - 1.0).norm() < 1e-10);
        let at1 = forward_mgf(&m, Complex64::new(1.0, 0.0), 1.0, 0.5, &s).unwrap();
        let nb = nu_bar(&m, &s, 1.0, 0.5, NuBarMethod::Direct).unwrap();
        assert!((at1.re - nb).abs() / nb < 1e-8 && at1.im == 0.0);
    }

    #[test]
    fn mgf_conjugate_symmetry() {
        let m = model(0.4);
        let s = m.params().initial_state();
        let z = Complex64::new(1.5, 37.0);
        let a = forward_mgf(&m, z, 1.0, 0.5, &s).unwrap();
        let b = forward_mgf(&m, z.conj(), 1.0, 0.5, &s).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn parity_below_zero_k_tilde() {
        let m = model(0.4);
        let s = m.params().initial_state();
        let c = CapletContract::new(1.0, 0.5, -2.0 / 0.5).unwrap();
        let p = caplet_price(&m, &c, &s, &QuadratureConfig::default()).unwrap();
        assert!(p.damping.is_none());
        let end = m.bond_price(Curve::RiskFree, &s, 1.5).unwrap();
        let nb = nu_bar(&m, &s, 1.0, 0.5, NuBarMethod::Direct).unwrap();
        assert!((p.price - end * (nb + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn forced_bad_damping_is_a_strip_violation() {
        let m = model(0.4);
        let s = m.params().initial_state();
        let c = CapletContract::new(1.0, 0.5, 0.03).unwrap();
        let quad = QuadratureConfig {
            damping: 0.8,
            ..QuadratureConfig::default()
        };
        assert!(matches!(
            caplet_price(&m, &c, &s, &quad),
            Err(Error::StripViolation { .. })
        ));
        // Far outside the finiteness strip of factor 3.
        let quad = QuadratureConfig {
            damping: 5e3,
            adapt_damping: false,
            ..QuadratureConfig::default()
        };
        assert!(matches!(
            caplet_price(&m, &c, &s, &quad),
            Err(Error::StripViolation { .. })
        ));
    }

    #[test]
    fn damping_bisects_into_strip() {
        let m = model(0.4);
        let s = m.params().initial_state();
        let c = CapletContract::new(1.0, 0.5, 0.03).unwrap();
        let quad = QuadratureConfig {
            damping: 5e3,
            ..QuadratureConfig::default()
        };
        let p = caplet_price(&m, &c, &s, &quad).unwrap();
        let r = p.damping.unwrap();
        assert!(r > 1.0 && r < 5e3);
    }

    #[test]
    fn caplet_decreasing_in_strike() {
        let m = model(0.4);
        let s = m.params().initial_state();
        let quad = QuadratureConfig::default();
        let mut last = f64::INFINITY;
        for k in [-0.01, 0.0, 0.01, 0.02, 0.03, 0.04, 0.06, 0.1, 0.5] {
            let c = CapletContract::new(1.0, 0.5, k).unwrap();
            let p = caplet_price(&m, &c, &s, &quad).unwrap().price;
            assert!(p >= 0.0 && p <= last + 1e-12, "K = {k}: {p} after {last}");
            last = p;
        }
        assert!(last < 1e-10);
    }
}
