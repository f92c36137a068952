//! The approximating Lévy process: hyperexponential jumps on both sides, a
//! Brownian component standing in for the small jumps the mixture misses, and
//! a risk-neutral drift.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperexp::{build_two_sided_density, CgmyParams, DensityTerms, ExpMixtureFit, ExpTerm};
use crate::quadrature::{self, QuadConfig};

/// Small-jump diffusion correction settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionConfig {
    pub enabled: bool,
    /// Truncation level ε in log-price units.
    pub cutoff: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            enabled: true,
            cutoff: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperExpLevyModel {
    /// Up-jump terms `a_i e^{-α_i x}`.
    pub pos_terms: Vec<ExpTerm>,
    /// Down-jump terms `b_j e^{-β_j |x|}`.
    pub neg_terms: Vec<ExpTerm>,
    pub sigma2: f64,
    pub mu: f64,
}

impl HyperExpLevyModel {
    pub fn new(
        pos_terms: Vec<ExpTerm>,
        neg_terms: Vec<ExpTerm>,
        sigma2: f64,
        mu: f64,
    ) -> Result<Self> {
        let m = HyperExpLevyModel {
            pos_terms,
            neg_terms,
            sigma2,
            mu,
        };
        m.validate()?;
        Ok(m)
    }

    /// Pure Brownian motion with drift.
    pub fn brownian(mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), sigma2, mu)
    }

    pub fn validate(&self) -> Result<()> {
        for (side, terms) in [("positive", &self.pos_terms), ("negative", &self.neg_terms)] {
            for t in terms.iter() {
                if !(t.rate.is_finite() && t.rate > 0.0 && t.weight.is_finite() && t.weight >= 0.0)
                {
                    return Err(Error::InvalidInput(format!("bad {side} jump term {t:?}")));
                }
            }
            let mut rates: Vec<f64> = terms.iter().map(|t| t.rate).collect();
            rates.sort_by(f64::total_cmp);
            if rates.windows(2).any(|w| w[1] - w[0] <= 1e-12 * w[1]) {
                return Err(Error::InvalidInput(format!(
                    "{side} jump rates must be distinct"
                )));
            }
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma2 must be >= 0, got {}",
                self.sigma2
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidInput("drift must be finite".into()));
        }
        Ok(())
    }

    /// `λ₊ = Σ a_i/α_i`.
    pub fn lambda_pos(&self) -> f64 {
        self.pos_terms.iter().map(|t| t.weight / t.rate).sum()
    }

    /// `λ₋ = Σ b_j/β_j`.
    pub fn lambda_neg(&self) -> f64 {
        self.neg_terms.iter().map(|t| t.weight / t.rate).sum()
    }

    /// Mixture probabilities `π_i⁺`; empty when there are no up-jumps.
    pub fn probs_pos(&self) -> Vec<f64> {
        probs(&self.pos_terms)
    }

    pub fn probs_neg(&self) -> Vec<f64> {
        probs(&self.neg_terms)
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.pos_terms.iter().map(|t| t.rate)
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        self.neg_terms.iter().map(|t| t.rate)
    }

    pub fn min_alpha(&self) -> f64 {
        self.alphas().fold(f64::INFINITY, f64::min)
    }

    pub fn min_beta(&self) -> f64 {
        self.betas().fold(f64::INFINITY, f64::min)
    }

    fn check_pole(&self, s: Complex64) -> Result<()> {
        let scale = 1e-14;
        for a in self.alphas() {
            if (s - a).norm() <= scale * a {
                return Err(Error::Pole(Complex64::new(a, 0.0)));
            }
        }
        for b in self.betas() {
            if (s + b).norm() <= scale * b {
                return Err(Error::Pole(Complex64::new(-b, 0.0)));
            }
        }
        Ok(())
    }

    /// Jump part of the exponent: `λ₊Σπ⁺(α/(α-s) - 1) + λ₋Σπ⁻(β/(β+s) - 1)`.
    fn jump_exponent(&self, s: Complex64) -> Complex64 {
        let up: Complex64 = self
            .pos_terms
            .iter()
            .map(|t| t.weight / t.rate * s / (t.rate - s))
            .sum();
        let down: Complex64 = self
            .neg_terms
            .iter()
            .map(|t| t.weight / t.rate * s / (t.rate + s))
            .sum();
        up - down
    }

    /// `κ(s) = log E[e^{sX_1}]`.
    pub fn characteristic_exponent(&self, s: Complex64) -> Result<Complex64> {
        self.check_pole(s)?;
        Ok(self.kappa_unchecked(s))
    }

    /// `κ(s)` without the pole check, for hot loops where `s` is known safe.
    pub fn kappa_unchecked(&self, s: Complex64) -> Complex64 {
        self.mu * s + 0.5 * self.sigma2 * s * s + self.jump_exponent(s)
    }

    /// `κ'(s)`.
    pub fn kappa_derivative(&self, s: Complex64) -> Complex64 {
        let up: Complex64 = self
            .pos_terms
            .iter()
            .map(|t| t.weight / ((t.rate - s) * (t.rate - s)))
            .sum();
        let down: Complex64 = self
            .neg_terms
            .iter()
            .map(|t| t.weight / ((t.rate + s) * (t.rate + s)))
            .sum();
        self.mu + self.sigma2 * s + up - down
    }

    pub fn kappa_real(&self, s: f64) -> Result<f64> {
        Ok(self.characteristic_exponent(Complex64::new(s, 0.0))?.re)
    }

    /// Model of `-X`: sides swapped, drift negated.
    pub fn reflect(&self) -> Self {
        HyperExpLevyModel {
            pos_terms: self.neg_terms.clone(),
            neg_terms: self.pos_terms.clone(),
            sigma2: self.sigma2,
            mu: -self.mu,
        }
    }

    /// Assembles the approximation of a CGMY process with risk-neutral drift.
    pub fn assemble(
        params: &CgmyParams,
        fit: &ExpMixtureFit,
        diffusion: &DiffusionConfig,
        rate: f64,
        dividend: f64,
    ) -> Result<Self> {
        let density = build_two_sided_density(fit, params)?;
        let sigma2 = if diffusion.enabled {
            small_jump_variance(params, &density, diffusion)?
        } else {
            0.0
        };
        let mut model = HyperExpLevyModel::new(density.pos, density.neg, sigma2, 0.0)?;
        model.mu = risk_neutral_drift(&model, rate, dividend)?;
        Ok(model)
    }
}

fn probs(terms: &[ExpTerm]) -> Vec<f64> {
    let lambda: f64 = terms.iter().map(|t| t.weight / t.rate).sum();
    if lambda <= 0.0 {
        return Vec::new();
    }
    terms.iter().map(|t| t.weight / (lambda * t.rate)).collect()
}

/// Variance `∫_{-ε}^{ε} x² k̃(x) dx` of the residual kernel
/// `k̃ = (CGMY density - mixture)` restricted to `(-ε, ε)`.
///
/// Each side is integrated after the change of variables `x = ε v^p` with
/// `p = 1/(2-Y)`, which turns the `x^(1-Y)` behaviour at the origin into a
/// constant.
pub fn small_jump_variance(
    params: &CgmyParams,
    density: &DensityTerms,
    cfg: &DiffusionConfig,
) -> Result<f64> {
    params.validate()?;
    let eps = cfg.cutoff;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cutoff must be positive, got {eps}"
        )));
    }
    if params.c == 0.0 {
        return Ok(0.0);
    }
    let y = params.y;
    let p = 1.0 / (2.0 - y);
    let side = |temper: f64, terms: &[ExpTerm]| -> Result<f64> {
        let f = |v: f64| {
            let x = eps * v.powf(p);
            let cgmy = params.c * p * eps.powf(2.0 - y) * (-temper * x).exp();
            let mix: f64 = terms.iter().map(|t| t.weight * (-t.rate * x).exp()).sum();
            cgmy - x * x * mix * eps * p * v.powf(p - 1.0)
        };
        quadrature::integrate(f, 0.0, 1.0, &QuadConfig::default())
    };
    let sigma2 = side(params.m, &density.pos)? + side(params.g, &density.neg)?;
    if sigma2 < 0.0 {
        return Err(Error::NegativeVariance {
            sigma2,
            cutoff: eps,
        });
    }
    Ok(sigma2)
}

/// Drift making `κ(1) = r - q`.
pub fn risk_neutral_drift(model: &HyperExpLevyModel, rate: f64, dividend: f64) -> Result<f64> {
    if let Some(a) = model.alphas().find(|&a| a <= 1.0) {
        return Err(Error::MomentExplodes { rate: a });
    }
    let jumps = model.jump_exponent(Complex64::new(1.0, 0.0)).re;
    Ok(rate - dividend - 0.5 * model.sigma2 - jumps)
}

/// Where a model came from, so a run can be reproduced from the file alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub params: CgmyParams,
    pub fit_id: String,
    pub nodes: Vec<f64>,
    pub diffusion: DiffusionConfig,
    pub rate: f64,
    pub dividend: f64,
}

/// On-disk representation of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub pos_terms: Vec<ExpTerm>,
    pub neg_terms: Vec<ExpTerm>,
    pub sigma2: f64,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ModelDocument {
    pub fn new(model: &HyperExpLevyModel, provenance: Option<Provenance>) -> Self {
        ModelDocument {
            pos_terms: model.pos_terms.clone(),
            neg_terms: model.neg_terms.clone(),
            sigma2: model.sigma2,
            mu: model.mu,
            provenance,
        }
    }

    pub fn model(&self) -> Result<HyperExpLevyModel> {
        HyperExpLevyModel::new(
            self.pos_terms.clone(),
            self.neg_terms.clone(),
            self.sigma2,
            self.mu,
        )
    }

    /// Parses and validates a JSON model document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
        doc.model()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }
}

/// Fit identifier for provenance records.
pub fn fit_id(fit: &ExpMixtureFit) -> String {
    let nodes: Vec<String> = fit.nodes.iter().map(|u| format!("{u}")).collect();
    format!("y={};nodes={}", fit.y, nodes.join(","))
}
