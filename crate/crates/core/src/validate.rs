//! Cross-checks between the transform pipeline, closed forms and Monte Carlo.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;
use crate::inversion::{passage_point, EulerInversionParams};
use crate::levymodel::HyperExpLevyModel;
use crate::mcoracle::{simulate_passage_multi, simulate_terminal, Estimate, SimConfig};
use crate::pipeline::RunConfig;
use crate::wienerhopf::{down_distance, RootSolver};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Allowed `|value - reference|`.
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            value,
            reference,
            tolerance,
            passed: (value - reference).abs() <= tolerance,
        }
    }

    fn from_estimate(name: impl Into<String>, est: &Estimate, reference: f64, slack: f64) -> Self {
        Self::new(name, est.mean, reference, 3.0 * est.std_error + slack)
    }
}

/// `P(min_{s≤t} X_s ≤ -x)` for `X_t = μt + σW_t`.
pub fn brownian_down_crossing(mu: f64, sigma2: f64, x: f64, t: f64) -> f64 {
    let n = Normal::standard();
    let sd = (sigma2 * t).sqrt();
    n.cdf((-x - mu * t) / sd) + (-2.0 * mu * x / sigma2).exp() * n.cdf((-x + mu * t) / sd)
}

/// `P(T ≤ t)` for the passage below fraction `b` of spot, by inversion.
pub fn passage_probability(
    model: &HyperExpLevyModel,
    b: f64,
    t: f64,
    params: &EulerInversionParams,
) -> Result<f64> {
    let solver = RootSolver::new(&model.reflect())?;
    Ok(passage_point(&solver, down_distance(b)?, t, params)?.0)
}

/// Closed-form, algebraic and Monte Carlo checks for the configured model.
pub fn run_checks(config: &RunConfig, sim: &SimConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let inv = config.inversion;

    let bm = HyperExpLevyModel::brownian(-0.05, 0.09)?;
    for (b, t) in [(0.7, 0.5), (0.7, 2.0), (0.4, 5.0)] {
        let value = passage_probability(&bm, b, t, &inv)?;
        let reference = brownian_down_crossing(-0.05, 0.09, down_distance(b)?, t);
        out.push(CheckResult::new(
            format!("brownian passage b={b} t={t}"),
            value,
            reference,
            1e-6,
        ));
    }

    let (_, model) = config.build_model()?;
    let growth = config.market.rate - config.market.dividend;
    out.push(CheckResult::new(
        "kappa(1) = r - q",
        model.kappa_real(1.0)?,
        growth,
        1e-12,
    ));

    let plus = RootSolver::new(&model)?;
    let minus = RootSolver::new(&model.reflect())?;
    let mut worst = 0.0_f64;
    for a in [Complex64::new(1.0, 0.0), Complex64::new(2.0, 3.0)] {
        let (fp, fm) = (plus.factor(a)?, minus.factor(a)?);
        for k in 0..=20 {
            let s = Complex64::new(0.0, -10.0 + k as f64);
            let lhs = fp.eval(s) * fm.eval(-s);
            let rhs = a / (a - model.kappa_unchecked(s));
            worst = worst.max((lhs - rhs).norm() / rhs.norm());
        }
    }
    out.push(CheckResult::new(
        "Wiener-Hopf product identity",
        worst,
        0.0,
        1e-8,
    ));

    let horizons: Vec<f64> = config.contract.maturities.clone();
    let estimates = simulate_passage_multi(&model, config.contract.barrier, &horizons, sim)?;
    for (t, est) in horizons.iter().zip(&estimates) {
        let analytic = passage_probability(&model, config.contract.barrier, *t, &inv)?;
        out.push(CheckResult::from_estimate(
            format!("MC passage b={} T={t}", config.contract.barrier),
            est,
            analytic,
            0.005,
        ));
    }

    let t = horizons.iter().copied().fold(1.0, f64::max);
    let xs = simulate_terminal(&model, t, sim)?;
    let growth_mc = Estimate::from_samples(&xs.iter().map(|x| x.exp()).collect::<Vec<_>>());
    out.push(CheckResult::from_estimate(
        format!("MC E[exp(X_T)] T={t}"),
        &growth_mc,
        (growth * t).exp(),
        0.0,
    ));
    Ok(out)
}
