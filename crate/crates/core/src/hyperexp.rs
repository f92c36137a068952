//! Exponential-mixture approximation of the CGMY Lévy density.
//!
//! The power kernel `1/x^(1+Y)` is the Laplace transform of `u^Y/Γ(1+Y)`.
//! Discretizing that integral on nodes `u_1 < … < u_N` gives the mixture
//!
//! ```text
//! 1/x^(1+Y) ≈ Σ_{i<N} u_i^Y (u_{i+1} - u_i) e^(-u_i x) / Γ(1+Y)
//! ```
//!
//! whose nodes are chosen by least squares. Tempering by `e^(-Mx)` (up) and
//! `e^(-G|x|)` (down) then shifts every rate by `M` or `G`, producing the
//! two-sided hyperexponential Lévy density.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::optim::{self, SimplexConfig};

/// Risk-neutral CGMY parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgmyParams {
    pub c: f64,
    pub g: f64,
    pub m: f64,
    pub y: f64,
}

impl CgmyParams {
    pub fn new(c: f64, g: f64, m: f64, y: f64) -> Result<Self> {
        let p = CgmyParams { c, g, m, y };
        p.validate()?;
        Ok(p)
    }

    /// Checks the structural constraints. `C = 0` is accepted as the
    /// degenerate no-jump case.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.c, self.g, self.m, self.y]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput(format!(
                "non-finite CGMY parameters {self:?}"
            )));
        }
        if self.c < 0.0 || self.g <= 0.0 || self.m <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "CGMY parameters need C >= 0, G > 0, M > 0, got {self:?}"
            )));
        }
        if !(self.y > 0.0 && self.y < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Y must lie in (0, 1), got {}",
                self.y
            )));
        }
        Ok(())
    }

    /// Additional constraint for equity pricing: `E[e^{X_1}]` must be finite.
    pub fn validate_risk_neutral(&self) -> Result<()> {
        self.validate()?;
        if self.m <= 1.0 {
            return Err(Error::MomentExplodes { rate: self.m });
        }
        Ok(())
    }

    pub fn density(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.c * (-self.m * x).exp() / x.powf(1.0 + self.y)
        } else if x < 0.0 {
            self.c * (self.g * x).exp() / (-x).powf(1.0 + self.y)
        } else {
            f64::INFINITY
        }
    }
}

/// Where the power kernel is sampled when fitting.
///
/// `GridValue` uses the grid points themselves. `PointIndex` uses the
/// 1-based position of each grid point (1, 2, …, n), which is the abscissa
/// set that reproduces the reference Y = 0.5 node list from the reference
/// starting values; it is the default so that `fit` and the built-in preset
/// agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Abscissa {
    #[default]
    PointIndex,
    GridValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for FitGrid {
    fn default() -> Self {
        FitGrid {
            min: 0.25,
            max: 5.0,
            step: 0.025,
        }
    }
}

impl FitGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let ok = self.min.is_finite() && self.max.is_finite() && self.step.is_finite();
        if !ok || self.min <= 0.0 || self.step <= 0.0 || self.max < self.min {
            return Err(Error::InvalidInput(format!("bad fit grid {self:?}")));
        }
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::InvalidInput(format!(
                "fit grid too large ({count} points)"
            )));
        }
        Ok((0..count)
            .map(|i| self.min + i as f64 * self.step)
            .collect())
    }

    pub fn abscissae(&self, mode: Abscissa) -> Result<Vec<f64>> {
        let pts = self.points()?;
        Ok(match mode {
            Abscissa::GridValue => pts,
            Abscissa::PointIndex => (1..=pts.len()).map(|i| i as f64).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub grid: FitGrid,
    pub abscissa: Abscissa,
    /// Spacing used for a weight on the last node. `None` means the last node
    /// only closes the spacing of the one before it (N - 1 mixture terms).
    pub terminal_spacing: Option<f64>,
    pub max_evaluations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            grid: FitGrid::default(),
            abscissa: Abscissa::default(),
            terminal_spacing: None,
            max_evaluations: 200_000,
        }
    }
}

/// Reference Y = 0.5 node list.
pub const PRESET_NODES: [f64; 7] = [0.1940, 0.5982, 0.8434, 1.1399, 1.5308, 2.1211, 3.4055];
/// Reference starting values for the node search.
pub const PRESET_STARTS: [f64; 7] = [0.5, 2.0, 5.0, 10.0, 20.0, 40.0, 100.0];
pub const PRESET_Y: f64 = 0.5;

/// A fitted (or preset) mixture `Σ w_i e^(-u_i x)` approximating `x^-(1+Y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMixtureFit {
    pub y: f64,
    /// All nodes `u_1 < … < u_N`.
    pub nodes: Vec<f64>,
    /// Weights of the mixture terms; one per node in `rates()`.
    pub weights: Vec<f64>,
    pub terminal_spacing: Option<f64>,
    /// Abscissae at which the objective was evaluated.
    pub fit_grid: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Weights `u_i^Y (u_{i+1} - u_i) / Γ(1+Y)`.
pub fn mixture_weights(nodes: &[f64], y: f64, terminal_spacing: Option<f64>) -> Vec<f64> {
    let g = gamma(1.0 + y);
    let mut w: Vec<f64> = nodes
        .windows(2)
        .map(|p| p[0].powf(y) * (p[1] - p[0]) / g)
        .collect();
    if let (Some(h), Some(&last)) = (terminal_spacing, nodes.last()) {
        w.push(last.powf(y) * h / g);
    }
    w
}

fn mixture_value(rates: &[f64], weights: &[f64], x: f64) -> f64 {
    rates
        .iter()
        .zip(weights)
        .map(|(u, w)| w * (-u * x).exp())
        .sum()
}

/// Sum of squared errors between `x^-(1+Y)` and the mixture on `abscissae`.
pub fn mixture_objective(
    nodes: &[f64],
    y: f64,
    terminal_spacing: Option<f64>,
    abscissae: &[f64],
) -> f64 {
    let w = mixture_weights(nodes, y, terminal_spacing);
    abscissae
        .iter()
        .map(|&x| {
            let r = x.powf(-1.0 - y) - mixture_value(nodes, &w, x);
            r * r
        })
        .sum()
}

impl ExpMixtureFit {
    /// Builds a mixture from given nodes without optimizing.
    pub fn from_nodes(
        y: f64,
        nodes: Vec<f64>,
        terminal_spacing: Option<f64>,
        grid: &FitGrid,
        abscissa: Abscissa,
    ) -> Result<Self> {
        check_exponent(y)?;
        check_nodes(&nodes)?;
        let fit_grid = grid.abscissae(abscissa)?;
        let weights = mixture_weights(&nodes, y, terminal_spacing);
        let residual_norm = mixture_objective(&nodes, y, terminal_spacing, &fit_grid);
        Ok(ExpMixtureFit {
            y,
            nodes,
            weights,
            terminal_spacing,
            fit_grid,
            residual_norm,
            iterations: 0,
            evaluations: 0,
        })
    }

    /// The reference Y = 0.5 nodes on the default grid.
    pub fn preset() -> Self {
        Self::from_nodes(
            PRESET_Y,
            PRESET_NODES.to_vec(),
            None,
            &FitGrid::default(),
            Abscissa::PointIndex,
        )
        .expect("preset nodes are valid")
    }

    /// Rates carrying a mixture weight.
    pub fn rates(&self) -> &[f64] {
        &self.nodes[..self.weights.len()]
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        mixture_value(self.rates(), &self.weights, x)
    }

    /// Largest `|x^(1+Y) · mixture(x) - 1|` over the fit abscissae.
    pub fn max_relative_error(&self) -> f64 {
        self.max_relative_error_on(&self.fit_grid)
    }

    pub fn max_relative_error_on(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| (x.powf(1.0 + self.y) * self.evaluate(x) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_exponent(y: f64) -> Result<()> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::InvalidInput(format!(
            "Y must lie in (0, 1), got {y}"
        )));
    }
    Ok(())
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::InvalidInput("need at least two nodes".into()));
    }
    if nodes.iter().any(|u| !(u.is_finite() && *u > 0.0)) || nodes.windows(2).any(|p| p[1] <= p[0])
    {
        return Err(Error::NodeOrder(nodes.to_vec()));
    }
    Ok(())
}

/// Least-squares fit of the mixture nodes starting from `initial_nodes`.
///
/// The search runs over log-increments `log(u_1), log(u_2 - u_1), …`, so every
/// trial point is positive and strictly increasing.
pub fn fit_exponential_mixture(
    y: f64,
    initial_nodes: &[f64],
    cfg: &FitConfig,
) -> Result<ExpMixtureFit> {
    check_exponent(y)?;
    check_nodes(initial_nodes)?;
    if let Some(h) = cfg.terminal_spacing {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "terminal spacing must be positive, got {h}"
            )));
        }
    }
    let abscissae = cfg.grid.abscissae(cfg.abscissa)?;
    let to_nodes = |z: &[f64]| -> Vec<f64> {
        let mut acc = 0.0;
        z.iter()
            .map(|v| {
                acc += v.exp();
                acc
            })
            .collect()
    };
    let mut prev = 0.0;
    let start: Vec<f64> = initial_nodes
        .iter()
        .map(|&u| {
            let z = (u - prev).ln();
            prev = u;
            z
        })
        .collect();

    let objective =
        |z: &[f64]| mixture_objective(&to_nodes(z), y, cfg.terminal_spacing, &abscissae);
    let simplex = SimplexConfig {
        max_evaluations: cfg.max_evaluations,
        x_tolerance: 1e-8,
        f_tolerance: 1e-18,
        ..Default::default()
    };
    let result = optim::minimize(objective, &start, &simplex);
    let nodes = to_nodes(&result.point);
    if !result.converged {
        return Err(Error::NotConverged {
            iterations: result.iterations,
            best_value: result.value,
            best_point: nodes,
        });
    }
    check_nodes(&nodes)?;
    let weights = mixture_weights(&nodes, y, cfg.terminal_spacing);
    Ok(ExpMixtureFit {
        y,
        residual_norm: mixture_objective(&nodes, y, cfg.terminal_spacing, &abscissae),
        nodes,
        weights,
        terminal_spacing: cfg.terminal_spacing,
        fit_grid: abscissae,
        iterations: result.iterations,
        evaluations: result.evaluations,
    })
}

/// One exponential term `weight · e^(-rate·|x|)` of a one-sided Lévy density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpTerm {
    pub weight: f64,
    pub rate: f64,
}

/// Two-sided hyperexponential Lévy density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTerms {
    pub pos: Vec<ExpTerm>,
    pub neg: Vec<ExpTerm>,
}

impl DensityTerms {
    pub fn eval_pos(&self, x: f64) -> f64 {
        self.pos
            .iter()
            .map(|t| t.weight * (-t.rate * x).exp())
            .sum()
    }

    pub fn eval_neg(&self, x: f64) -> f64 {
        self.neg
            .iter()
            .map(|t| t.weight * (-t.rate * x.abs()).exp())
            .sum()
    }
}

/// Tempers the fitted mixture: weights `C·w_i`, rates `M + u_i` (up) and
/// `G + u_i` (down).
pub fn build_two_sided_density(fit: &ExpMixtureFit, params: &CgmyParams) -> Result<DensityTerms> {
    params.validate()?;
    if (fit.y - params.y).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "mixture was fitted for Y = {} but parameters have Y = {}",
            fit.y, params.y
        )));
    }
    let side = |shift: f64| -> Vec<ExpTerm> {
        fit.rates()
            .iter()
            .zip(&fit.weights)
            .map(|(u, w)| ExpTerm {
                weight: params.c * w,
                rate: shift + u,
            })
            .collect()
    };
    Ok(DensityTerms {
        pos: side(params.m),
        neg: side(params.g),
    })
}

/// Parses a comma-separated list of positive increasing rates.
pub fn parse_node_list(text: &str) -> Result<Vec<f64>> {
    let nodes = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad node {s:?}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    check_nodes(&nodes)
        .map_err(|_| Error::Parse(format!("nodes must be positive and increasing: {text:?}")))?;
    Ok(nodes)
}
