use multicurve_core::affine::{AffineModel, Curve, FactorSpec, FactorState, ModelParams};
use multicurve_core::pricing::{
    adjustment_factor, caplet_price, correlation_exponent, correlation_exponential, decompose,
    fair_rate_risky, fair_rate_risky_from_single, fair_rate_single, forward_mgf, fra_price, nu_bar,
    nu_single_curve, CapletContract, FraContract, NuBarMethod, QuadratureConfig,
};
use multicurve_core::quadrature::composite_gauss_legendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(kappa: f64) -> ModelParams {
    ModelParams {
        factor1: FactorSpec::gaussian(0.006, 0.3, 0.01, 0.004),
        factor2: FactorSpec::square_root(0.02, 0.5, 0.1, 0.03),
        factor3: FactorSpec::square_root(0.005, 0.8, 0.05, 0.004),
        kappa,
    }
}

const MATURITIES: [f64; 3] = [0.5, 1.0, 2.0];
const TENORS: [f64; 3] = [0.25, 0.5, 1.0];
const KAPPAS: [f64; 4] = [-0.5, 0.0, 0.5, 1.0];

fn random_states(seed: u64) -> Vec<FactorState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2)
        .map(|_| {
            FactorState::new(
                0.0,
                rng.gen_range(-0.02..0.03),
                rng.gen_range(0.0..0.08),
                rng.gen_range(0.0..0.03),
            )
        })
        .collect()
}

#[test]
fn direct_and_decomposed_nu_bar_agree() {
    for (i, &kappa) in KAPPAS.iter().enumerate() {
        let model = AffineModel::new(params(kappa)).unwrap();
        for state in random_states(i as u64) {
            for t in MATURITIES {
                for d in TENORS {
                    let direct = nu_bar(&model, &state, t, d, NuBarMethod::Direct).unwrap();
                    let split = nu_bar(&model, &state, t, d, NuBarMethod::Decomposition).unwrap();
                    assert!(
                        ((direct - split) / direct).abs() < 1e-8,
                        "k={kappa} T={t} d={d}"
                    );
                }
            }
        }
    }
}

#[test]
fn two_expressions_for_risky_rate_agree() {
    for &kappa in &KAPPAS {
        let model = AffineModel::new(params(kappa)).unwrap();
        let state = model.params().initial_state();
        for t in MATURITIES {
            for d in TENORS {
                let k = fair_rate_single(&model, &state, t, d).unwrap();
                let ad = adjustment_factor(&model, &state, t, d).unwrap();
                let corr = correlation_exponential(&model, 0.0, t, d).unwrap();
                let via_single = fair_rate_risky_from_single(k, ad, corr, d);
                let direct = fair_rate_risky(&model, &state, t, d).unwrap();
                assert!(
                    ((via_single - direct) / direct).abs() < 1e-10,
                    "k={kappa} T={t} d={d}"
                );
            }
        }
    }
}

/// B̃¹ ∫_0^T B¹(u,T) e^{−b¹(T−u)} du with both B's from the Riccati solver.
fn exponent_by_quadrature(model: &AffineModel, maturity: f64, delta: f64) -> f64 {
    let b1 = model.params().factor1.b;
    let b_tilde = model.bond_ratio_coeffs(maturity, delta).unwrap().b1_tilde;
    let integral: f64 = composite_gauss_legendre(0.0, maturity, 64)
        .into_iter()
        .map(|(u, w)| {
            let b_u = model.riskfree_bond_coeffs(u, maturity).unwrap().b[0];
            w * b_u * (-b1 * (maturity - u)).exp()
        })
        .sum();
    b_tilde * integral
}

#[test]
fn correlation_exponent_matches_quadrature() {
    for &kappa in &KAPPAS {
        let model = AffineModel::new(params(kappa)).unwrap();
        let sigma = model.params().factor1.sigma;
        for t in MATURITIES {
            for d in TENORS {
                let quad = kappa * sigma * sigma * exponent_by_quadrature(&model, t, d);
                let closed = correlation_exponent(&model, 0.0, t, d).unwrap();
                assert!((quad - closed).abs() < 1e-12, "k={kappa} T={t} d={d}");
                if kappa != 0.0 {
                    let scaled = closed / (kappa * sigma * sigma);
                    assert!((scaled - quad / (kappa * sigma * sigma)).abs() < 1e-12);
                }
            }
        }
    }
    // κ = 1, σ¹ = 0.01, b¹ = 0.5, Δ = 0.5, T − t = 1.
    let mut p = params(1.0);
    p.factor1.b = 0.5;
    let model = AffineModel::new(p).unwrap();
    let closed = correlation_exponent(&model, 0.0, 1.0, 0.5).unwrap() / 1e-4;
    let b: f64 = 0.5;
    let by_hand = (1.0 - (-b * 0.5).exp()) * (1.0 - (-b).exp()).powi(2) / (2.0 * b.powi(3));
    assert!((closed - by_hand).abs() < 1e-12);
    assert!((exponent_by_quadrature(&model, 1.0, 0.5) - by_hand).abs() < 1e-12);
}

#[test]
fn independent_spread_orders_rates() {
    let model = AffineModel::new(params(0.0)).unwrap();
    for state in random_states(9) {
        for t in MATURITIES {
            for d in TENORS {
                let parts = decompose(&model, &state, t, d).unwrap();
                assert_eq!(parts.corr_exponential, 1.0);
                assert!(parts.adjustment >= 1.0);
                assert!(parts.nu_bar >= parts.nu_single);
                assert!(parts.k_risky >= parts.k_single);
            }
        }
    }
}

#[test]
fn mgf_normalization_and_bridge() {
    let combos = [(0.5, 0.25), (1.0, 0.5), (2.0, 1.0)];
    for &kappa in &KAPPAS {
        let model = AffineModel::new(params(kappa)).unwrap();
        let state = model.params().initial_state();
        for (t, d) in combos {
            let m0 = forward_mgf(&model, Complex64::new(0.0, 0.0), t, d, &state).unwrap();
            let m1 = forward_mgf(&model, Complex64::new(1.0, 0.0), t, d, &state).unwrap();
            let nb = nu_bar(&model, &state, t, d, NuBarMethod::Direct).unwrap();
            assert!((m0 - 1.0).norm() < 1e-10);
            assert!((m1.re / nb - 1.0).abs() < 1e-8 && m1.im.abs() < 1e-12);
        }
    }
}

#[test]
fn caplet_strip_invariance_and_parity() {
    let model = AffineModel::new(params(0.5)).unwrap();
    let state = model.params().initial_state();
    let (t, d) = (1.0, 0.5);
    let nb = nu_bar(&model, &state, t, d, NuBarMethod::Direct).unwrap();
    let end = model.bond_price(Curve::RiskFree, &state, t + d).unwrap();
    let atm = (nb - 1.0) / d;
    let price_at = |strike: f64, damping: f64| {
        let c = CapletContract::new(t, d, strike).unwrap();
        let q = QuadratureConfig {
            damping,
            adapt_damping: false,
            ..Default::default()
        };
        caplet_price(&model, &c, &state, &q).unwrap().price
    };
    let (lo, hi) = (price_at(atm, 1.25), price_at(atm, 1.75));
    assert!(((lo - hi) / hi).abs() < 1e-6);

    // For K̃ well below any attainable 1/p̄ the payoff is linear, so the
    // Fourier price must match the forward value of the floating leg.
    let k_tilde = 0.5;
    let strike = (k_tilde - 1.0) / d;
    let fourier = price_at(strike, 1.5);
    let parity = end * (nb - k_tilde);
    assert!(
        ((fourier - parity) / parity).abs() < 1e-6,
        "{fourier} vs {parity}"
    );

    let at_zero = price_at(-1.0 / d, 1.5);
    let fra = FraContract::new(t, d, -1.0 / d, 1.0).unwrap();
    let fra_value = fra_price(&model, &state, &fra).unwrap();
    assert!(((at_zero - fra_value) / fra_value).abs() < 1e-12);
}

#[test]
fn caplets_nonnegative_and_nonincreasing_in_strike() {
    let model = AffineModel::new(params(0.5)).unwrap();
    let state = model.params().initial_state();
    let prices: Vec<f64> = [-0.01, 0.0, 0.01, 0.02, 0.03, 0.05, 0.1]
        .iter()
        .map(|&k| {
            let c = CapletContract::new(2.0, 0.5, k).unwrap();
            caplet_price(&model, &c, &state, &QuadratureConfig::default())
                .unwrap()
                .price
        })
        .collect();
    assert!(prices.iter().all(|p| *p >= 0.0));
    assert!(prices.windows(2).all(|w| w[1] <= w[0]), "{prices:?}");
}

#[test]
fn single_curve_nu_is_bond_ratio() {
    let model = AffineModel::new(params(0.5)).unwrap();
    let state = model.params().initial_state();
    let p = |t| model.bond_price(Curve::RiskFree, &state, t).unwrap();
    let nu = nu_single_curve(&model, &state, 1.0, 0.5).unwrap();
    assert!((nu - p(1.0) / p(1.5)).abs() < 1e-15);
}
