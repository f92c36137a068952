//! European option pricing by damped Fourier inversion and least-squares
//! calibration of (C, G, M) with Y held fixed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperexp::{CgmyParams, ExpMixtureFit};
use crate::levymodel::{DiffusionConfig, HyperExpLevyModel};
use crate::optim::{self, SimplexConfig};
use crate::quadrature::{self, QuadConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

impl std::str::FromStr for OptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionKind::Call),
            "put" | "p" => Ok(OptionKind::Put),
            other => Err(Error::Parse(format!("unknown option type '{other}'"))),
        }
    }
}

/// A European option quote.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    pub maturity: f64,
    pub price: f64,
    pub kind: OptionKind,
}

/// Spot, continuously compounded rate and dividend yield shared by a quote set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Market {
    pub spot: f64,
    pub rate: f64,
    pub dividend: f64,
}

impl Market {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot.is_finite() && self.spot > 0.0)
            || !self.rate.is_finite()
            || !self.dividend.is_finite()
        {
            return Err(Error::InvalidInput(format!("bad market data {self:?}")));
        }
        Ok(())
    }

    /// No-arbitrage price interval for a European option.
    pub fn bounds(&self, strike: f64, maturity: f64, kind: OptionKind) -> (f64, f64) {
        let fwd_spot = self.spot * (-self.dividend * maturity).exp();
        let pv_strike = strike * (-self.rate * maturity).exp();
        match kind {
            OptionKind::Call => ((fwd_spot - pv_strike).max(0.0), fwd_spot),
            OptionKind::Put => ((pv_strike - fwd_spot).max(0.0), pv_strike),
        }
    }
}

/// Parses CSV with header `strike,maturity,price,type`.
pub fn parse_quotes_csv(text: &str) -> Result<Vec<OptionQuote>> {
    #[derive(Deserialize)]
    struct Row {
        strike: f64,
        maturity: f64,
        price: f64,
        #[serde(rename = "type")]
        kind: String,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("quotes: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != ["strike", "maturity", "price", "type"] {
        return Err(Error::Parse(format!(
            "quotes header must be 'strike,maturity,price,type', got {headers:?}"
        )));
    }
    reader
        .deserialize::<Row>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| Error::Parse(format!("quotes row {}: {e}", i + 1)))?;
            Ok(OptionQuote {
                strike: r.strike,
                maturity: r.maturity,
                price: r.price,
                kind: r.kind.parse()?,
            })
        })
        .collect()
}

/// Fourier pricing settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    /// Damping exponent; `None` picks `min(1.5, (α_min - 1)/2)`.
    pub damping: Option<f64>,
    /// Absolute accuracy per unit spot.
    pub tolerance: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            damping: None,
            tolerance: 1e-11,
        }
    }
}

/// European option price under `model`, whose drift must already be risk
/// neutral for `(rate, dividend)`.
///
/// Calls use the Carr-Madan damped transform of the log-strike. Without a
/// diffusion the law of `X_T` has an atom at `μT` (no jumps), which is priced
/// separately so that the remaining integrand decays like `u^-3`.
pub fn european_price(
    model: &HyperExpLevyModel,
    market: &Market,
    strike: f64,
    maturity: f64,
    kind: OptionKind,
    cfg: &FourierConfig,
) -> Result<f64> {
    market.validate()?;
    if !(strike.is_finite() && strike > 0.0) || !(maturity.is_finite() && maturity > 0.0) {
        return Err(Error::InvalidInput(format!(
            "strike and maturity must be positive, got {strike}, {maturity}"
        )));
    }
    let limit = model.min_alpha() - 1.0;
    let damping = cfg.damping.unwrap_or_else(|| 1.5_f64.min(0.5 * limit));
    if !(damping > 0.0 && damping < limit) {
        return Err(Error::InvalidInput(format!(
            "damping {damping} outside (0, {limit})"
        )));
    }

    let t = maturity;
    let k = (strike / market.spot).ln();
    let atom = if model.sigma2 == 0.0 {
        (-(model.lambda_pos() + model.lambda_neg()) * t).exp()
    } else {
        0.0
    };
    let drift = model.mu * t;
    let integrand = |u: f64| -> f64 {
        let s = Complex64::new(damping + 1.0, u);
        let mut mgf = (t * model.kappa_unchecked(s)).exp();
        if atom > 0.0 {
            mgf -= atom * (s * drift).exp();
        }
        let denom = Complex64::new(
            damping * damping + damping - u * u,
            (2.0 * damping + 1.0) * u,
        );
        ((Complex64::new(0.0, -u * k)).exp() * mgf / denom).re
    };

    let quad = QuadConfig {
        abs_tol: cfg.tolerance,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let mut total = quadrature::integrate(integrand, 0.0, 1.0, &quad)?;
    let mut lo = 1.0;
    loop {
        let hi = 2.0 * lo;
        total += quadrature::integrate(integrand, lo, hi, &quad)?;
        // envelope of the remaining tail, assuming at worst u^-3 decay
        let envelope = {
            let s = Complex64::new(damping + 1.0, hi);
            let mut mgf = (t * model.kappa_unchecked(s)).exp();
            if atom > 0.0 {
                mgf -= atom * (s * drift).exp();
            }
            mgf.norm() / (hi * hi) * hi * 0.5
        };
        lo = hi;
        if envelope < cfg.tolerance || lo > 1e7 {
            if envelope >= cfg.tolerance {
                return Err(Error::Quadrature(format!(
                    "Fourier integral tail {envelope:.3e} above tolerance"
                )));
            }
            break;
        }
    }
    let discount = (-market.rate * t).exp();
    let continuous = discount * (-damping * k).exp() / PI * total;
    let atom_payoff = discount * atom * ((drift).exp() - strike / market.spot).max(0.0);
    let call = market.spot * (continuous + atom_payoff);
    let price = match kind {
        OptionKind::Call => call,
        OptionKind::Put => {
            call - market.spot * (-market.dividend * t).exp() + strike * (-market.rate * t).exp()
        }
    };
    if !price.is_finite() {
        return Err(Error::Quadrature("non-finite option price".into()));
    }
    Ok(price)
}

/// Calibration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Accepted maturities `[lo, hi]` in years.
    pub maturity_band: [f64; 2],
    pub diffusion: DiffusionConfig,
    pub fourier: FourierConfig,
    pub max_evaluations: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            maturity_band: [1.0, 2.0],
            diffusion: DiffusionConfig::default(),
            fourier: FourierConfig::default(),
            max_evaluations: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub params: CgmyParams,
    pub rmse: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Model minus quoted price, in quote order.
    pub residuals: Vec<f64>,
}

/// Model prices for `quotes` under the CGMY approximation with `params`.
pub fn model_prices(
    params: &CgmyParams,
    fit: &ExpMixtureFit,
    market: &Market,
    quotes: &[OptionQuote],
    cfg: &CalibrationConfig,
) -> Result<Vec<f64>> {
    let model =
        HyperExpLevyModel::assemble(params, fit, &cfg.diffusion, market.rate, market.dividend)?;
    quotes
        .par_iter()
        .map(|q| european_price(&model, market, q.strike, q.maturity, q.kind, &cfg.fourier))
        .collect()
}

/// Checks the quote set before calibration.
pub fn check_quotes(
    quotes: &[OptionQuote],
    market: &Market,
    cfg: &CalibrationConfig,
) -> Result<()> {
    market.validate()?;
    for (index, q) in quotes.iter().enumerate() {
        if !(q.strike.is_finite() && q.strike > 0.0 && q.maturity.is_finite() && q.maturity > 0.0) {
            return Err(Error::Arbitrage {
                index,
                reason: "strike and maturity must be positive".into(),
            });
        }
        let [lo, hi] = cfg.maturity_band;
        if q.maturity < lo || q.maturity > hi {
            return Err(Error::InvalidInput(format!(
                "quote {index}: maturity {} outside band [{lo}, {hi}]",
                q.maturity
            )));
        }
        let (low, high) = market.bounds(q.strike, q.maturity, q.kind);
        if !(q.price.is_finite() && q.price >= low && q.price <= high) {
            return Err(Error::Arbitrage {
                index,
                reason: format!("price {} outside [{low}, {high}]", q.price),
            });
        }
    }
    let mut distinct: Vec<(u64, u64, OptionKind)> = quotes
        .iter()
        .map(|q| (q.strike.to_bits(), q.maturity.to_bits(), q.kind))
        .collect();
    distinct.sort_by_key(|d| (d.0, d.1, d.2 == OptionKind::Put));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 distinct quotes for 3 parameters, got {}",
            distinct.len()
        )));
    }
    Ok(())
}

/// Fits (C, G, M) by minimizing the root mean square pricing error, with
/// `initial.y` held fixed. The search runs over `(ln C, ln G, ln(M - 1))`.
pub fn calibrate(
    quotes: &[OptionQuote],
    market: &Market,
    initial: &CgmyParams,
    fit: &ExpMixtureFit,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport> {
    check_quotes(quotes, market, cfg)?;
    initial.validate_risk_neutral()?;
    if initial.c <= 0.0 {
        return Err(Error::InvalidInput("initial C must be positive".into()));
    }
    let y = initial.y;
    let decode = |z: &[f64]| CgmyParams {
        c: z[0].exp(),
        g: z[1].exp(),
        m: 1.0 + z[2].exp(),
        y,
    };
    let rmse = |p: &CgmyParams| -> Result<(f64, Vec<f64>)> {
        let prices = model_prices(p, fit, market, quotes, cfg)?;
        let residuals: Vec<f64> = prices
            .iter()
            .zip(quotes)
            .map(|(m, q)| m - q.price)
            .collect();
        let mse = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
        Ok((mse.sqrt(), residuals))
    };
    let objective = |z: &[f64]| rmse(&decode(z)).map(|r| r.0).unwrap_or(f64::INFINITY);
    let start = [initial.c.ln(), initial.g.ln(), (initial.m - 1.0).ln()];
    let simplex = SimplexConfig {
        max_evaluations: cfg.max_evaluations,
        x_tolerance: 1e-9,
        f_tolerance: 1e-14,
        initial_step: 0.1,
        max_restarts: 10,
    };
    let res = optim::minimize(objective, &start, &simplex);
    if !res.converged {
        let best = decode(&res.point);
        return Err(Error::NotConverged {
            iterations: res.iterations,
            best_value: res.value,
            best_point: vec![best.c, best.g, best.m],
        });
    }
    let params = decode(&res.point);
    let (value, residuals) = rmse(&params)?;
    Ok(CalibrationReport {
        params,
        rmse: value,
        iterations: res.iterations,
        evaluations: res.evaluations,
        residuals,
    })
}
