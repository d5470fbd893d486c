use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::affine::{AffineModel, Curve, ModelParams};
use crate::error::{Error, Result};
use crate::pricing::{fair_rate_risky, fair_rate_single};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZcbQuote {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub price: f64,
}

/// Single-curve and two-curve fair FRA rates for one (T, Δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FraQuote {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub delta: f64,
    pub k_single: f64,
    pub k_risky: f64,
}

/// Observables at t = 0: OIS discount factors and FRA rate pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteSet {
    pub zcb_quotes: Vec<ZcbQuote>,
    pub fra_pairs: Vec<FraQuote>,
    #[serde(default)]
    pub noise_sd: Option<f64>,
}

impl QuoteSet {
    pub fn validate(&self) -> Result<()> {
        for q in &self.zcb_quotes {
            if !(q.price > 0.0 && q.price <= 1.5) {
                return Err(Error::InvalidConfig(format!(
                    "zcb price {} at T = {} outside (0, 1.5]",
                    q.price, q.maturity
                )));
            }
            if !(q.maturity > 0.0 && q.maturity.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "zcb maturity {} must be > 0",
                    q.maturity
                )));
            }
        }
        if self
            .zcb_quotes
            .windows(2)
            .any(|w| w[1].maturity <= w[0].maturity)
        {
            return Err(Error::InvalidConfig(
                "zcb maturities must be strictly increasing".into(),
            ));
        }
        for f in &self.fra_pairs {
            let ok = f.maturity > 0.0
                && f.delta > 0.0
                && f.k_single.is_finite()
                && f.k_risky.is_finite();
            if !ok {
                return Err(Error::InvalidConfig(format!("invalid FRA quote {f:?}")));
            }
        }
        Ok(())
    }

    /// Two CSV sections, `# zcb` and `# fra`, each with its own header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# zcb\nT,price\n");
        for q in &self.zcb_quotes {
            out.push_str(&format!("{:.16e},{:.16e}\n", q.maturity, q.price));
        }
        out.push_str("# fra\nT,delta,k_single,k_risky\n");
        for f in &self.fra_pairs {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                f.maturity, f.delta, f.k_single, f.k_risky
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Zcb,
            Fra,
        }
        let mut section = Section::None;
        let mut header = false;
        let mut set = QuoteSet {
            zcb_quotes: Vec::new(),
            fra_pairs: Vec::new(),
            noise_sd: None,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('#') {
                section = match name.trim() {
                    "zcb" => Section::Zcb,
                    "fra" => Section::Fra,
                    other => {
                        return Err(Error::Parse(format!(
                            "line {}: unknown section {other}",
                            lineno + 1
                        )))
                    }
                };
                header = true;
                continue;
            }
            if header {
                header = false;
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            match (&section, fields.as_slice()) {
                (Section::Zcb, [t, p]) => set.zcb_quotes.push(ZcbQuote {
                    maturity: *t,
                    price: *p,
                }),
                (Section::Fra, [t, d, k, kb]) => set.fra_pairs.push(FraQuote {
                    maturity: *t,
                    delta: *d,
                    k_single: *k,
                    k_risky: *kb,
                }),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: unexpected row {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        set.validate()?;
        Ok(set)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: QuoteSet = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    /// Number of distinct FRA reset dates.
    pub fn fra_maturity_count(&self) -> usize {
        let mut ts: Vec<f64> = self.fra_pairs.iter().map(|f| f.maturity).collect();
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup();
        ts.len()
    }
}

/// Synthetic quotes from `params` at t = 0. Discount factors are quoted for
/// every T and T+Δ. With `noise_sd > 0`, independent N(0, noise_sd²) noise is
/// added to zero yields and FRA rates, and prices are derived from the noisy
/// yields.
pub fn generate_quotes(
    params: &ModelParams,
    maturities: &[f64],
    tenors: &[f64],
    noise_sd: f64,
    seed: u64,
) -> Result<QuoteSet> {
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise_sd = {noise_sd} must be >= 0"
        )));
    }
    let model = AffineModel::new(*params)?;
    let state = params.initial_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sd.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut noise = || {
        if noise_sd > 0.0 {
            normal.sample(&mut rng)
        } else {
            0.0
        }
    };

    let mut zcb_times: Vec<f64> = maturities.to_vec();
    for &t in maturities {
        for &d in tenors {
            zcb_times.push(t + d);
        }
    }
    zcb_times.sort_by(|a, b| a.total_cmp(b));
    zcb_times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut zcb_quotes = Vec::with_capacity(zcb_times.len());
    for t in zcb_times {
        let price = model.bond_price(Curve::RiskFree, &state, t)?;
        let price = if noise_sd > 0.0 {
            (price.ln() - noise() * t).exp()
        } else {
            price
        };
        zcb_quotes.push(ZcbQuote { maturity: t, price });
    }
    let mut fra_pairs = Vec::new();
    for &t in maturities {
        for &d in tenors {
            let k_single = fair_rate_single(&model, &state, t, d)? + noise();
            let k_risky = fair_rate_risky(&model, &state, t, d)? + noise();
            fra_pairs.push(FraQuote {
                maturity: t,
                delta: d,
                k_single,
                k_risky,
            });
        }
    }
    let set = QuoteSet {
        zcb_quotes,
        fra_pairs,
        noise_sd: (noise_sd > 0.0).then_some(noise_sd),
    };
    set.validate()?;
    Ok(set)
}
