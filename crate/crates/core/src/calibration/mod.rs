//! Synthetic quotes and two-stage least-squares calibration.
//!
//! Stage one fits factors 1 and 2 (and their initial values) to OIS discount
//! factors. Stage two holds those fixed and fits factor 3 and κ to the
//! two-curve FRA rates, with the single-curve rates implied by stage one.
//!
//! Each stage starts a short simplex search from the guess and from jittered
//! copies of it, then polishes every candidate with Levenberg–Marquardt and
//! keeps the best.

mod least_squares;
mod quotes;
mod simplex;

pub use least_squares::LevenbergMarquardt;
pub use quotes::{generate_quotes, FraQuote, QuoteSet, ZcbQuote};
pub use simplex::{Minimum, NelderMead};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineModel, ModelParams, KAPPA_LIMIT};
use crate::error::{Error, Result};
use crate::pricing::{
    adjustment_factor, correlation_exponential, fair_rate_risky_from_single, fair_rate_single,
};

/// Minimum number of discount factors for the risk-free stage.
pub const MIN_ZCB_QUOTES: usize = 6;
/// Minimum number of FRA pairs for the spread stage.
pub const MIN_FRA_PAIRS: usize = 5;

/// Weights of the three residual groups in [`objective`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub zcb: f64,
    pub fra_single: f64,
    pub fra_risky: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            zcb: 1.0,
            fra_single: 1.0,
            fra_risky: 1.0,
        }
    }
}

impl ObjectiveWeights {
    fn riskfree() -> Self {
        Self {
            zcb: 1.0,
            fra_single: 0.0,
            fra_risky: 0.0,
        }
    }
}

/// Per-quote model-minus-market residuals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// log p_model − log p_quote for each zcb quote.
    pub zcb: Vec<f64>,
    pub fra_single: Vec<f64>,
    pub fra_risky: Vec<f64>,
}

impl Residuals {
    pub fn max_abs(&self) -> f64 {
        self.zcb
            .iter()
            .chain(&self.fra_single)
            .chain(&self.fra_risky)
            .fold(0.0, |m, r| m.max(r.abs()))
    }

    fn weighted_sum(&self, w: &ObjectiveWeights) -> f64 {
        let ss = |v: &[f64]| v.iter().map(|r| r * r).sum::<f64>();
        w.zcb * ss(&self.zcb)
            + w.fra_single * ss(&self.fra_single)
            + w.fra_risky * ss(&self.fra_risky)
    }
}

/// Residuals of `params` against every quote. Groups with zero weight are
/// skipped.
pub fn residuals(
    params: &ModelParams,
    quotes: &QuoteSet,
    weights: &ObjectiveWeights,
) -> Result<Residuals> {
    let model = AffineModel::new(*params)?;
    let state = params.initial_state();
    let mut out = Residuals::default();
    if weights.zcb != 0.0 {
        for q in &quotes.zcb_quotes {
            let log_p = model
                .riskfree_bond_coeffs(0.0, q.maturity)?
                .log_price(state.psi());
            out.zcb.push(log_p - q.price.ln());
        }
    }
    if weights.fra_single != 0.0 || weights.fra_risky != 0.0 {
        for f in &quotes.fra_pairs {
            let k = fair_rate_single(&model, &state, f.maturity, f.delta)?;
            if weights.fra_single != 0.0 {
                out.fra_single.push(k - f.k_single);
            }
            if weights.fra_risky != 0.0 {
                let ad = adjustment_factor(&model, &state, f.maturity, f.delta)?;
                let corr = correlation_exponential(&model, 0.0, f.maturity, f.delta)?;
                let k_bar = fair_rate_risky_from_single(k, ad, corr, f.delta);
                out.fra_risky.push(k_bar - f.k_risky);
            }
        }
    }
    Ok(out)
}

/// Weighted sum of squared residuals: log-prices for discount factors,
/// absolute rate differences for FRA legs. Any pricing or validation error
/// gives +∞.
pub fn objective(params: &ModelParams, quotes: &QuoteSet, weights: &ObjectiveWeights) -> f64 {
    match residuals(params, quotes, weights) {
        Ok(r) => {
            let v = r.weighted_sum(weights);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Optimizer settings shared by both stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Number of starting points: the guess plus jittered copies.
    pub starts: usize,
    /// Relative jitter of the extra starting points.
    pub jitter: f64,
    pub seed: u64,
    /// Simplex iterations per start.
    pub simplex_iterations: usize,
    /// Levenberg–Marquardt iterations per start.
    pub polish_iterations: usize,
    /// A stage stops early once its objective falls below this.
    pub target: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            starts: 3,
            jitter: 0.2,
            seed: 7,
            simplex_iterations: 300,
            polish_iterations: 400,
            target: 1e-22,
        }
    }
}

/// Summary of one optimizer stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: String,
    pub objective: f64,
    /// Square root of the stage objective.
    pub residual_norm: f64,
    pub max_abs_residual: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Index of the starting point that produced the kept fit.
    pub best_start: usize,
    pub converged: bool,
}

/// Per-FRA diagnostics at the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FraDiagnostic {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub k_single: f64,
    pub k_risky: f64,
    pub adjustment: f64,
    pub corr_exponential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params_hat: ModelParams,
    /// Objective of `params_hat` against all quotes with unit weights.
    pub objective_value: f64,
    pub stage_diagnostics: Vec<StageDiagnostics>,
    pub converged: bool,
    /// False when all FRA quotes share one reset date.
    pub kappa_identifiable: bool,
    pub max_zcb_log_residual: f64,
    pub max_fra_residual: f64,
    pub fra_diagnostics: Vec<FraDiagnostic>,
}

/// Output of [`calibrate_riskfree`]: `params` carries fitted factors 1 and 2;
/// factor 3 and κ are copied from the guess.
#[derive(Debug, Clone, PartialEq)]
pub struct StageFit {
    pub params: ModelParams,
    pub diagnostics: StageDiagnostics,
    pub history: Vec<f64>,
}

/// Fit of the spread stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadFit {
    pub params: ModelParams,
    pub diagnostics: StageDiagnostics,
    pub history: Vec<f64>,
    pub kappa_identifiable: bool,
}

const A_BOUNDS: (f64, f64) = (1e-6, 1.0);
const B_BOUNDS: (f64, f64) = (1e-3, 5.0);
const SIGMA_BOUNDS: (f64, f64) = (1e-6, 1.0);

fn clamp(x: &mut f64, (lo, hi): (f64, f64)) {
    *x = if x.is_nan() { lo } else { x.clamp(lo, hi) };
}

/// Enforces a ≥ σ²/2 by shrinking σ.
fn feller(a: f64, sigma: &mut f64) {
    if 0.5 * *sigma * *sigma > a {
        *sigma = (2.0 * a).sqrt() * (1.0 - 1e-12);
    }
}

/// x = [a¹, b¹, σ¹, a², b², σ², ψ¹₀, ψ²₀]
fn project_riskfree(x: &mut [f64]) {
    clamp(&mut x[0], A_BOUNDS);
    clamp(&mut x[1], B_BOUNDS);
    clamp(&mut x[2], SIGMA_BOUNDS);
    clamp(&mut x[3], A_BOUNDS);
    clamp(&mut x[4], B_BOUNDS);
    clamp(&mut x[5], SIGMA_BOUNDS);
    clamp(&mut x[6], (-1.0, 1.0));
    clamp(&mut x[7], (0.0, 1.0));
    let a2 = x[3];
    feller(a2, &mut x[5]);
}

fn riskfree_vector(p: &ModelParams) -> Vec<f64> {
    let (f1, f2) = (p.factor1, p.factor2);
    vec![f1.a, f1.b, f1.sigma, f2.a, f2.b, f2.sigma, f1.psi0, f2.psi0]
}

fn apply_riskfree(base: &ModelParams, x: &[f64]) -> ModelParams {
    let mut p = *base;
    p.factor1.a = x[0];
    p.factor1.b = x[1];
    p.factor1.sigma = x[2];
    p.factor2.a = x[3];
    p.factor2.b = x[4];
    p.factor2.sigma = x[5];
    p.factor1.psi0 = x[6];
    p.factor2.psi0 = x[7];
    p
}

/// x = [a³, b³, σ³, ψ³₀, κ]
fn project_spread(x: &mut [f64]) {
    clamp(&mut x[0], A_BOUNDS);
    clamp(&mut x[1], B_BOUNDS);
    clamp(&mut x[2], SIGMA_BOUNDS);
    clamp(&mut x[3], (0.0, 1.0));
    clamp(&mut x[4], (-KAPPA_LIMIT, KAPPA_LIMIT));
    let a3 = x[0];
    feller(a3, &mut x[2]);
}

fn spread_vector(p: &ModelParams) -> Vec<f64> {
    let f3 = p.factor3;
    vec![f3.a, f3.b, f3.sigma, f3.psi0, p.kappa]
}

fn apply_spread(base: &ModelParams, x: &[f64]) -> ModelParams {
    let mut p = *base;
    p.factor3.a = x[0];
    p.factor3.b = x[1];
    p.factor3.sigma = x[2];
    p.factor3.psi0 = x[3];
    p.kappa = x[4];
    p
}

struct StageRun {
    result: Minimum,
    start: usize,
}

/// Simplex then Levenberg–Marquardt from `x0` and from jittered copies of it,
/// keeping the lowest sum of squares. `history` joins both phases.
fn multistart<R, P>(
    config: &CalibrationConfig,
    x0: &[f64],
    scale: &[f64],
    project: P,
    residual: R,
) -> StageRun
where
    R: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
    P: Fn(&mut [f64]) + Sync + Copy,
{
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut starts = vec![x0.to_vec()];
    for _ in 1..config.starts.max(1) {
        let mut x: Vec<f64> = x0
            .iter()
            .zip(scale)
            .map(|(&v, &s)| v + config.jitter * v.abs().max(s) * rng.gen_range(-1.0..1.0))
            .collect();
        project(&mut x);
        starts.push(x);
    }
    let sum_sq = |x: &[f64]| match residual(x) {
        Some(r) => r.iter().map(|e| e * e).sum::<f64>(),
        None => f64::INFINITY,
    };
    let nm = NelderMead {
        max_iterations: config.simplex_iterations,
        target: config.target,
        ..Default::default()
    };
    let lm = LevenbergMarquardt {
        max_iterations: config.polish_iterations,
        target: config.target,
        ..Default::default()
    };
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|x| {
            let coarse = nm.minimize(sum_sq, x, scale, project);
            let fine = lm.minimize(&residual, &coarse.x, scale, project);
            let mut history = coarse.history;
            history.extend(fine.history);
            let (x, value, converged) = if fine.value <= coarse.value {
                (fine.x, fine.value, fine.converged)
            } else {
                (coarse.x, coarse.value, coarse.converged)
            };
            Minimum {
                x,
                value,
                iterations: coarse.iterations + fine.iterations,
                evaluations: coarse.evaluations + fine.evaluations,
                history,
                converged: converged || fine.converged,
            }
        })
        .collect();
    let (start, result) = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    StageRun { result, start }
}

fn stage_converged(run: &Minimum) -> bool {
    run.value.is_finite() && run.converged
}

/// Least-squares fit of factors 1 and 2 to the discount factors.
pub fn calibrate_riskfree(
    quotes: &QuoteSet,
    initial_guess: &ModelParams,
    config: &CalibrationConfig,
) -> Result<StageFit> {
    quotes.validate()?;
    if quotes.zcb_quotes.len() < MIN_ZCB_QUOTES {
        return Err(Error::InsufficientData(format!(
            "risk-free stage needs at least {MIN_ZCB_QUOTES} zcb quotes, got {}",
            quotes.zcb_quotes.len()
        )));
    }
    let base = *initial_guess;
    let weights = ObjectiveWeights::riskfree();
    let f = |x: &[f64]| {
        residuals(&apply_riskfree(&base, x), quotes, &weights)
            .ok()
            .map(|r| r.zcb)
    };
    let mut x0 = riskfree_vector(initial_guess);
    project_riskfree(&mut x0);
    let scale = [1e-3, 0.1, 1e-3, 1e-3, 0.1, 1e-2, 1e-3, 1e-3];
    let run = multistart(config, &x0, &scale, project_riskfree, f);
    let params = apply_riskfree(&base, &run.result.x).validate()?;
    let res = residuals(&params, quotes, &weights)?;
    let diagnostics = StageDiagnostics {
        stage: "riskfree".into(),
        objective: run.result.value,
        residual_norm: run.result.value.sqrt(),
        max_abs_residual: res.max_abs(),
        iterations: run.result.iterations,
        evaluations: run.result.evaluations,
        best_start: run.start,
        converged: stage_converged(&run.result),
    };
    if !diagnostics.converged {
        return Err(Error::NotConverged(format!(
            "risk-free stage stopped after {} iterations at objective {:e}",
            diagnostics.iterations, diagnostics.objective
        )));
    }
    Ok(StageFit {
        params,
        diagnostics,
        history: run.result.history,
    })
}

/// Least-squares fit of factor 3 and κ to the two-curve FRA rates, holding
/// factors 1 and 2 at `riskfree_params`.
pub fn calibrate_spread(
    quotes: &QuoteSet,
    riskfree_params: &ModelParams,
    initial_guess: &ModelParams,
    config: &CalibrationConfig,
) -> Result<SpreadFit> {
    quotes.validate()?;
    if quotes.fra_pairs.len() < MIN_FRA_PAIRS {
        return Err(Error::InsufficientData(format!(
            "spread stage needs at least {MIN_FRA_PAIRS} FRA pairs, got {}",
            quotes.fra_pairs.len()
        )));
    }
    let mut base = *riskfree_params;
    base.factor3 = initial_guess.factor3;
    base.kappa = initial_guess.kappa;

    // K_0 depends only on factors 1 and 2, so it is computed once.
    let rf_model = AffineModel::new(*riskfree_params)?;
    let rf_state = riskfree_params.initial_state();
    let k_model: Vec<f64> = quotes
        .fra_pairs
        .iter()
        .map(|q| fair_rate_single(&rf_model, &rf_state, q.maturity, q.delta))
        .collect::<Result<_>>()?;
    let spread_residuals = |p: &ModelParams| -> Result<Vec<f64>> {
        let model = AffineModel::new(*p)?;
        let state = p.initial_state();
        quotes
            .fra_pairs
            .iter()
            .zip(&k_model)
            .map(|(q, &k)| {
                let ad = adjustment_factor(&model, &state, q.maturity, q.delta)?;
                let corr = correlation_exponential(&model, 0.0, q.maturity, q.delta)?;
                Ok(fair_rate_risky_from_single(k, ad, corr, q.delta) - q.k_risky)
            })
            .collect()
    };
    let f = |x: &[f64]| spread_residuals(&apply_spread(&base, x)).ok();

    let mut x0 = spread_vector(&base);
    project_spread(&mut x0);
    let scale = [1e-3, 0.1, 1e-2, 1e-3, 0.1];
    let run = multistart(config, &x0, &scale, project_spread, f);
    let params = apply_spread(&base, &run.result.x).validate()?;
    let res = spread_residuals(&params)?;
    let diagnostics = StageDiagnostics {
        stage: "spread".into(),
        objective: run.result.value,
        residual_norm: run.result.value.sqrt(),
        max_abs_residual: res.iter().fold(0.0, |m, r| m.max(r.abs())),
        iterations: run.result.iterations,
        evaluations: run.result.evaluations,
        best_start: run.start,
        converged: stage_converged(&run.result),
    };
    if !diagnostics.converged {
        return Err(Error::NotConverged(format!(
            "spread stage stopped after {} iterations at objective {:e}",
            diagnostics.iterations, diagnostics.objective
        )));
    }
    Ok(SpreadFit {
        params,
        diagnostics,
        history: run.result.history,
        kappa_identifiable: quotes.fra_maturity_count() > 1,
    })
}

fn project_joint(x: &mut [f64]) {
    let (riskfree, spread) = x.split_at_mut(8);
    project_riskfree(riskfree);
    project_spread(spread);
}

/// Levenberg–Marquardt on all thirteen parameters against every quote,
/// started from the staged fit. Factor 1 enters the adjustment factor, so the
/// spread stage alone cannot correct what the discount curve left loose.
pub fn refine_jointly(
    quotes: &QuoteSet,
    start: &ModelParams,
    config: &CalibrationConfig,
) -> Result<StageFit> {
    let all = ObjectiveWeights::default();
    let unpack = |x: &[f64]| apply_spread(&apply_riskfree(start, &x[..8]), &x[8..]);
    let residual = |x: &[f64]| {
        let r = residuals(&unpack(x), quotes, &all).ok()?;
        Some([r.zcb, r.fra_single, r.fra_risky].concat())
    };
    let mut x0 = riskfree_vector(start);
    x0.extend(spread_vector(start));
    project_joint(&mut x0);
    let scale = [
        1e-3, 0.1, 1e-3, 1e-3, 0.1, 1e-2, 1e-3, 1e-3, 1e-3, 0.1, 1e-2, 1e-3, 0.1,
    ];
    let lm = LevenbergMarquardt {
        max_iterations: config.polish_iterations,
        target: config.target,
        ..Default::default()
    };
    let run = lm.minimize(residual, &x0, &scale, project_joint);
    let params = unpack(&run.x).validate()?;
    let diagnostics = StageDiagnostics {
        stage: "joint".into(),
        objective: run.value,
        residual_norm: run.value.sqrt(),
        max_abs_residual: residuals(&params, quotes, &all)?.max_abs(),
        iterations: run.iterations,
        evaluations: run.evaluations,
        best_start: 0,
        converged: stage_converged(&run),
    };
    Ok(StageFit {
        params,
        diagnostics,
        history: run.history,
    })
}

/// Both stages in sequence, followed by a report at the fitted parameters.
pub fn calibrate(
    quotes: &QuoteSet,
    initial_guess: &ModelParams,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    let riskfree = calibrate_riskfree(quotes, initial_guess, config)?;
    let spread = calibrate_spread(quotes, &riskfree.params, initial_guess, config)?;
    let mut stage_diagnostics = vec![riskfree.diagnostics, spread.diagnostics];
    let mut params_hat = spread.params;

    let all = ObjectiveWeights::default();
    if objective(&params_hat, quotes, &all) > config.target {
        let joint = refine_jointly(quotes, &params_hat, config)?;
        if joint.diagnostics.objective < objective(&params_hat, quotes, &all) {
            params_hat = joint.params;
        }
        stage_diagnostics.push(joint.diagnostics);
    }
    let res = residuals(&params_hat, quotes, &all)?;
    let model = AffineModel::new(params_hat)?;
    let state = params_hat.initial_state();
    let fra_diagnostics = quotes
        .fra_pairs
        .iter()
        .map(|q| {
            let k_single = fair_rate_single(&model, &state, q.maturity, q.delta)?;
            let adjustment = adjustment_factor(&model, &state, q.maturity, q.delta)?;
            let corr_exponential = correlation_exponential(&model, 0.0, q.maturity, q.delta)?;
            Ok(FraDiagnostic {
                maturity: q.maturity,
                delta: q.delta,
                k_single,
                k_risky: fair_rate_risky_from_single(
                    k_single,
                    adjustment,
                    corr_exponential,
                    q.delta,
                ),
                adjustment,
                corr_exponential,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_fra_residual = res
        .fra_single
        .iter()
        .chain(&res.fra_risky)
        .fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(CalibrationResult {
        params_hat,
        objective_value: res.weighted_sum(&all),
        converged: stage_diagnostics.iter().all(|d| d.converged),
        stage_diagnostics,
        kappa_identifiable: spread.kappa_identifiable,
        max_zcb_log_residual: res.zcb.iter().fold(0.0, |m, r| m.max(r.abs())),
        max_fra_residual,
        fra_diagnostics,
    })
}

impl CalibrationResult {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}
