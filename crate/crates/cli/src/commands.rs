use std::path::Path;

use multicurve_core::calibration::{calibrate, generate_quotes};
use multicurve_core::montecarlo::{
    mc_adjustment_factor, mc_bond_price, mc_caplets, mc_fra_legs, simulate,
};
use multicurve_core::pricing::{caplet_price, decompose, fra_price, nu_bar, NuBarMethod};
use multicurve_core::{
    AffineModel, CalibrationResult, Curve, FraContract, McEstimate, QuoteSet, Scheme,
};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::output::{csv, json, Artifact, Cell};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BondRow {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub p: f64,
    pub p_bar: f64,
    /// −log(p̄/p)/T, and the instantaneous spread at T = 0.
    pub spread: f64,
}

/// Discount factors of both curves at each maturity.
pub fn cmd_bond(config: &RunConfig, maturities: &[f64]) -> Result<Vec<BondRow>, CliError> {
    let model = AffineModel::new(config.model)?;
    let state = config.model.initial_state();
    maturities
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("maturity {t} must be >= 0")));
            }
            let p = model.bond_price(Curve::RiskFree, &state, t)?;
            let p_bar = model.bond_price(Curve::Risky, &state, t)?;
            let spread = if t > 0.0 {
                -(p_bar / p).ln() / t
            } else {
                state.spread(config.model.kappa)
            };
            Ok(BondRow {
                maturity: t,
                p,
                p_bar,
                spread,
            })
        })
        .collect()
}

pub fn render_bond(rows: &[BondRow], format: Format) -> Artifact {
    match format {
        Format::Csv => Artifact::new(
            "bond.csv",
            csv(
                &["T", "p", "p_bar", "spread"],
                rows.iter().map(|r| {
                    vec![
                        r.maturity.into(),
                        r.p.into(),
                        r.p_bar.into(),
                        r.spread.into(),
                    ]
                }),
            ),
        ),
        Format::Json => Artifact::new("bond.json", json(rows)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FraRow {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub strike: f64,
    pub notional: f64,
    pub nu_single: f64,
    pub adjustment: f64,
    pub corr_exponential: f64,
    /// ν · Ad · corr_exponential
    pub nu_bar: f64,
    /// ν̄ from the transform of the risky ratio, independent of the product.
    pub nu_bar_direct: f64,
    pub k_single: f64,
    pub k_risky: f64,
    pub value: f64,
}

pub fn cmd_fra(config: &RunConfig) -> Result<Vec<FraRow>, CliError> {
    let model = AffineModel::new(config.model)?;
    let state = config.model.initial_state();
    config
        .fras
        .iter()
        .map(|c| {
            let d = decompose(&model, &state, c.maturity, c.delta)?;
            Ok(FraRow {
                maturity: c.maturity,
                delta: c.delta,
                strike: c.strike,
                notional: c.notional,
                nu_single: d.nu_single,
                adjustment: d.adjustment,
                corr_exponential: d.corr_exponential,
                nu_bar: d.nu_bar,
                nu_bar_direct: nu_bar(&model, &state, c.maturity, c.delta, NuBarMethod::Direct)?,
                k_single: d.k_single,
                k_risky: d.k_risky,
                value: fra_price(&model, &state, c)?,
            })
        })
        .collect()
}

pub fn render_fra(rows: &[FraRow], format: Format) -> Artifact {
    match format {
        Format::Csv => Artifact::new(
            "fra.csv",
            csv(
                &[
                    "T",
                    "delta",
                    "strike",
                    "notional",
                    "nu_single",
                    "adjustment",
                    "corr_exponential",
                    "nu_bar",
                    "nu_bar_direct",
                    "k_single",
                    "k_risky",
                    "value",
                ],
                rows.iter().map(|r| {
                    [
                        r.maturity,
                        r.delta,
                        r.strike,
                        r.notional,
                        r.nu_single,
                        r.adjustment,
                        r.corr_exponential,
                        r.nu_bar,
                        r.nu_bar_direct,
                        r.k_single,
                        r.k_risky,
                        r.value,
                    ]
                    .into_iter()
                    .map(Cell::from)
                    .collect()
                }),
            ),
        ),
        Format::Json => Artifact::new("fra.json", json(rows)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCheck {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// |price − mean| ≤ 3 SE
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapletRow {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub strike: f64,
    pub price: f64,
    /// Damping used; absent when priced by parity.
    #[serde(rename = "R")]
    pub damping: Option<f64>,
    pub v_max: Option<f64>,
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McCheck>,
}

pub fn cmd_caplet(config: &RunConfig, with_mc: bool) -> Result<Vec<CapletRow>, CliError> {
    let model = AffineModel::new(config.model)?;
    let state = config.model.initial_state();
    let mc = if with_mc {
        Some(mc_caplets(&model, &config.caplets, &config.simulation)?)
    } else {
        None
    };
    config
        .caplets
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = caplet_price(&model, c, &state, &config.quadrature)?;
            Ok(CapletRow {
                maturity: c.maturity,
                delta: c.delta,
                strike: c.strike,
                price: p.price,
                damping: p.damping,
                v_max: p.v_max,
                n_points: p.n_points,
                mc: mc.as_ref().map(|m| check(&m[i], p.price)),
            })
        })
        .collect()
}

fn check(est: &McEstimate, value: f64) -> McCheck {
    McCheck {
        mean: est.mean,
        std_error: est.std_error,
        n_paths: est.n_paths,
        pass: est.within(value, 3.0),
    }
}

pub fn render_caplet(rows: &[CapletRow], format: Format) -> Artifact {
    match format {
        Format::Csv => {
            let with_mc = rows.iter().any(|r| r.mc.is_some());
            let mut header = vec!["T", "delta", "strike", "price", "R", "v_max", "n_points"];
            if with_mc {
                header.extend(["mc_mean", "mc_se", "mc_check"]);
            }
            let body = rows.iter().map(|r| {
                let mut cells: Vec<Cell> = vec![
                    r.maturity.into(),
                    r.delta.into(),
                    r.strike.into(),
                    r.price.into(),
                    r.damping.into(),
                    r.v_max.into(),
                    r.n_points.into(),
                ];
                if let Some(m) = &r.mc {
                    cells.push(m.mean.into());
                    cells.push(m.std_error.into());
                    cells.push(if m.pass { "PASS" } else { "FAIL" }.into());
                }
                cells
            });
            Artifact::new("caplet.csv", csv(&header, body))
        }
        Format::Json => Artifact::new("caplet.json", json(rows)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondEstimate {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub p: f64,
    pub p_mc: McEstimate,
    pub p_bar: f64,
    pub p_bar_mc: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FraEstimate {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub adjustment: f64,
    pub adjustment_mc: McEstimate,
    pub nu_bar: f64,
    pub nu_bar_mc: McEstimate,
    pub value: f64,
    pub value_mc: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps_per_year: usize,
    pub scheme: Scheme,
    pub horizon: f64,
    pub bonds: Vec<BondEstimate>,
    pub fras: Vec<FraEstimate>,
}

/// Factor paths (one CSV per factor) and MC estimates next to their
/// analytic values.
pub fn cmd_simulate(config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let model = AffineModel::new(config.model)?;
    let state = config.model.initial_state();
    let sim = &config.simulation;
    let horizon = config.paths.horizon;
    let paths = simulate(&config.model, sim, horizon, &config.paths.checkpoints)?;

    let mut maturities: Vec<f64> = config
        .paths
        .checkpoints
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && *t <= horizon)
        .chain([horizon])
        .collect();
    maturities.sort_by(f64::total_cmp);
    maturities.dedup();
    let bonds = maturities
        .iter()
        .map(|&t| {
            Ok(BondEstimate {
                maturity: t,
                p: model.bond_price(Curve::RiskFree, &state, t)?,
                p_mc: mc_bond_price(&model, Curve::RiskFree, t, sim)?,
                p_bar: model.bond_price(Curve::Risky, &state, t)?,
                p_bar_mc: mc_bond_price(&model, Curve::Risky, t, sim)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let fras = config
        .fras
        .iter()
        .map(|c: &FraContract| {
            let legs = mc_fra_legs(&model, c, sim)?;
            let d = decompose(&model, &state, c.maturity, c.delta)?;
            Ok(FraEstimate {
                maturity: c.maturity,
                delta: c.delta,
                adjustment: d.adjustment,
                adjustment_mc: mc_adjustment_factor(&model, c.maturity, c.delta, sim)?,
                nu_bar: d.nu_bar,
                nu_bar_mc: legs.nu_bar,
                value: fra_price(&model, &state, c)?,
                value_mc: legs.value,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = SimulationReport {
        seed: sim.seed,
        n_paths: sim.n_paths,
        n_steps_per_year: sim.n_steps_per_year,
        scheme: sim.scheme,
        horizon,
        bonds,
        fras,
    };
    Ok(vec![
        Artifact::new("psi1.csv", paths.to_csv(0)),
        Artifact::new("psi2.csv", paths.to_csv(1)),
        Artifact::new("psi3.csv", paths.to_csv(2)),
        Artifact::new("estimates.json", json(&report)),
    ])
}

/// Outcome of `calibrate`: the fit and, when quotes were generated, the
/// quotes themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub result: CalibrationResult,
    pub quotes: QuoteSet,
    pub generated: bool,
}

impl CalibrationRun {
    /// Fitted κ minus the generating κ, when the quotes came from the model.
    pub fn kappa_error(&self, config: &RunConfig) -> Option<f64> {
        self.generated
            .then_some(self.result.params_hat.kappa - config.model.kappa)
    }

    pub fn artifacts(&self) -> Vec<Artifact> {
        let mut out = vec![Artifact::new(
            "calibration.json",
            format!("{}\n", self.result.to_json().expect("result serializes")),
        )];
        if self.generated {
            out.push(Artifact::new("quotes.csv", self.quotes.to_csv()));
        }
        out
    }
}

pub fn cmd_calibrate(
    config: &RunConfig,
    quote_file: Option<&Path>,
) -> Result<CalibrationRun, CliError> {
    let block = &config.calibration;
    let file = quote_file.or(block.quote_file.as_deref());
    let (quotes, generated) = match file {
        Some(path) => (read_quotes(path)?, false),
        None => (
            generate_quotes(
                &config.model,
                &block.maturities,
                &block.tenors,
                block.noise_sd,
                block.quote_seed,
            )?,
            true,
        ),
    };
    let guess = block.initial_guess.unwrap_or(config.model);
    let result = calibrate(&quotes, &guess, &block.optimizer)?;
    Ok(CalibrationRun {
        result,
        quotes,
        generated,
    })
}

fn read_quotes(path: &Path) -> Result<QuoteSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read quote file {}: {e}", path.display())))?;
    let quotes = if path.extension().is_some_and(|e| e == "json") {
        QuoteSet::from_json(&text)?
    } else {
        QuoteSet::from_csv(&text)?
    };
    Ok(quotes)
}
