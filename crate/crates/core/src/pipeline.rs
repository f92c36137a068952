//! Run configuration and the end-to-end pricing pipeline:
//! mixture fit, model assembly, passage curve, EDS rates.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::eds::{eds_rate, CouponFrequency, DiscountCurve, EdsContract};
use crate::error::{Error, Result, StageContext};
use crate::hyperexp::{
    fit_exponential_mixture, Abscissa, CgmyParams, ExpMixtureFit, FitConfig, FitGrid, PRESET_NODES,
    PRESET_STARTS,
};
use crate::inversion::{passage_curve, DayCount, EulerInversionParams, FirstPassageCurve};
use crate::levymodel::{fit_id, DiffusionConfig, HyperExpLevyModel, ModelDocument, Provenance};
use crate::mcoracle::SimConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// Use the preset node list instead of running the fitter.
    pub preset: bool,
    pub starts: Vec<f64>,
    pub grid: FitGrid,
    pub abscissa: Abscissa,
    pub terminal_spacing: Option<f64>,
    pub max_evaluations: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let cfg = FitConfig::default();
        FitSection {
            preset: true,
            starts: PRESET_STARTS.to_vec(),
            grid: cfg.grid,
            abscissa: cfg.abscissa,
            terminal_spacing: cfg.terminal_spacing,
            max_evaluations: cfg.max_evaluations,
        }
    }
}

impl FitSection {
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            grid: self.grid,
            abscissa: self.abscissa,
            terminal_spacing: self.terminal_spacing,
            max_evaluations: self.max_evaluations,
        }
    }

    /// The mixture for exponent `y`: preset nodes or a fresh fit.
    pub fn mixture(&self, y: f64) -> Result<ExpMixtureFit> {
        if self.preset {
            ExpMixtureFit::from_nodes(
                y,
                PRESET_NODES.to_vec(),
                self.terminal_spacing,
                &self.grid,
                self.abscissa,
            )
        } else {
            fit_exponential_mixture(y, &self.starts, &self.fit_config())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketSection {
    /// Continuously compounded rate, used for the drift and, without a curve
    /// file, for flat discounting.
    pub rate: f64,
    pub dividend: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        MarketSection {
            rate: 0.05,
            dividend: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractSection {
    pub barrier: f64,
    pub recovery: f64,
    pub maturities: Vec<f64>,
    pub coupon_frequency: CouponFrequency,
    /// Explicit coupon days; overrides `coupon_frequency` (single maturity only).
    pub coupon_days: Option<Vec<usize>>,
}

impl Default for ContractSection {
    fn default() -> Self {
        ContractSection {
            barrier: 0.3,
            recovery: 0.5,
            maturities: vec![1.0, 3.0, 5.0],
            coupon_frequency: CouponFrequency::Quarterly,
            coupon_days: None,
        }
    }
}

impl ContractSection {
    pub fn contracts(&self) -> Result<Vec<EdsContract>> {
        if self.maturities.is_empty() {
            return Err(Error::InvalidInput("no maturities configured".into()));
        }
        if let Some(days) = &self.coupon_days {
            if self.maturities.len() != 1 {
                return Err(Error::InvalidInput(
                    "explicit coupon days need exactly one maturity".into(),
                ));
            }
            let n = crate::eds::maturity_days(self.maturities[0])?;
            return Ok(vec![EdsContract::new(
                self.recovery,
                self.barrier,
                n,
                days.clone(),
            )?]);
        }
        self.maturities
            .iter()
            .map(|&t| {
                EdsContract::with_frequency(self.recovery, self.barrier, t, self.coupon_frequency)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DiscountSection {
    /// CSV file with header `day,discount`; flat `market.rate` when absent.
    pub curve_csv: Option<PathBuf>,
    pub allow_increasing: bool,
}

/// Every tunable of a pricing run. All fields default, unknown keys are
/// rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: CgmyParams,
    pub market: MarketSection,
    pub fit: FitSection,
    pub diffusion: DiffusionConfig,
    pub inversion: EulerInversionParams,
    /// How the passage density becomes a daily probability.
    pub day_count: DayCount,
    pub contract: ContractSection,
    pub discount: DiscountSection,
    pub simulation: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: CgmyParams {
                c: 0.5,
                g: 2.0,
                m: 10.0,
                y: 0.5,
            },
            market: MarketSection::default(),
            fit: FitSection::default(),
            diffusion: DiffusionConfig::default(),
            inversion: EulerInversionParams::default(),
            day_count: DayCount::Mixed,
            contract: ContractSection::default(),
            discount: DiscountSection::default(),
            simulation: SimConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML document; missing keys take their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate_risk_neutral()?;
        self.inversion.validate()?;
        self.simulation.validate()?;
        self.contract.contracts()?;
        if !(self.diffusion.cutoff.is_finite() && self.diffusion.cutoff > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad diffusion cutoff {}",
                self.diffusion.cutoff
            )));
        }
        if !(self.market.rate.is_finite() && self.market.dividend.is_finite()) {
            return Err(Error::InvalidInput("market rates must be finite".into()));
        }
        Ok(())
    }

    pub fn day_count(&self) -> DayCount {
        self.day_count
    }

    pub fn discount_curve(&self) -> Result<DiscountCurve> {
        match &self.discount.curve_csv {
            Some(path) => DiscountCurve::from_csv(
                &std::fs::read_to_string(path)?,
                self.discount.allow_increasing,
            ),
            None => DiscountCurve::flat(self.market.rate),
        }
    }

    /// Model assembled from the configured parameters and mixture.
    pub fn build_model(&self) -> Result<(ExpMixtureFit, HyperExpLevyModel)> {
        let fit = self.fit.mixture(self.params.y).stage("fit")?;
        let model = HyperExpLevyModel::assemble(
            &self.params,
            &fit,
            &self.diffusion,
            self.market.rate,
            self.market.dividend,
        )
        .stage("model")?;
        Ok((fit, model))
    }

    pub fn model_document(&self, fit: &ExpMixtureFit, model: &HyperExpLevyModel) -> ModelDocument {
        ModelDocument::new(
            model,
            Some(Provenance {
                params: self.params,
                fit_id: fit_id(fit),
                nodes: fit.nodes.clone(),
                diffusion: self.diffusion,
                rate: self.market.rate,
                dividend: self.market.dividend,
            }),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaturityRate {
    pub maturity_years: f64,
    pub rate: f64,
    pub rate_bp: f64,
    pub survival_at_maturity: f64,
}

/// Everything a pipeline run produces. The passage curve is not part of the
/// JSON report; it is written separately as CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub config: RunConfig,
    pub fit: FitSummary,
    pub model: ModelDocument,
    pub rates: Vec<MaturityRate>,
    pub monotonicity_repairs: usize,
    #[serde(skip)]
    pub curve: Option<FirstPassageCurve>,
}

/// Runs fit → model → passage curve → EDS rates for every maturity.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineResult> {
    config.validate().stage("config")?;
    let (fit, model) = config.build_model()?;
    let contracts = config.contract.contracts().stage("contract")?;
    let curve = config.discount_curve().stage("discount")?;
    let days = contracts.iter().map(|c| c.maturity_days).max().unwrap_or(1);
    let passage = passage_curve(
        &model,
        config.contract.barrier,
        days,
        &config.inversion,
        config.day_count(),
    )
    .stage("passage")?;
    let rates = contracts
        .iter()
        .map(|c| {
            let q = eds_rate(c, &curve, &passage)?;
            Ok(MaturityRate {
                maturity_years: c.maturity_years(),
                rate: q.rate,
                rate_bp: q.rate_bp,
                survival_at_maturity: q.survival_at_maturity,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("pricing")?;
    Ok(PipelineResult {
        config: config.clone(),
        fit: FitSummary {
            nodes: fit.nodes.clone(),
            weights: fit.weights.clone(),
            residual_norm: fit.residual_norm,
            iterations: fit.iterations,
        },
        model: config.model_document(&fit, &model),
        rates,
        monotonicity_repairs: passage.repairs,
        curve: Some(passage),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
        assert!(RunConfig::from_toml_str("[contract]\nbarier = 0.3").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg =
            RunConfig::from_toml_str("[contract]\nbarrier = 0.5\nmaturities = [2.0]\n").unwrap();
        assert_eq!(cfg.contract.barrier, 0.5);
        assert_eq!(
            RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let e = RunConfig::from_toml_str("[contract]\nbarrier = 1.5").unwrap_err();
        assert!(e.is_config_error());
        let e =
            RunConfig::from_toml_str("[params]\nc = 0.5\ng = 2.0\nm = 0.5\ny = 0.5").unwrap_err();
        assert!(e.is_config_error());
    }

    #[test]
    fn full_recovery_prices_at_zero() {
        let cfg =
            RunConfig::from_toml_str("[contract]\nrecovery = 1.0\nmaturities = [0.25]\n").unwrap();
        let res = run_pipeline(&cfg).unwrap();
        assert_eq!(res.rates[0].rate, 0.0);
    }
}
