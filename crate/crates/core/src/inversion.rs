//! Euler-summation Laplace inversion and the daily first-passage curve.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levymodel::HyperExpLevyModel;
use crate::wienerhopf::{down_distance, passage_from_factor, RootSolver};

/// Days per year on the contract grid.
pub const DAYS_PER_YEAR: f64 = 360.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerInversionParams {
    /// Discretization-error control; the aliasing error is about `e^{-A}`.
    pub a: f64,
    pub n_terms: usize,
    pub m_euler: usize,
}

impl Default for EulerInversionParams {
    fn default() -> Self {
        EulerInversionParams {
            a: 18.4,
            n_terms: 38,
            m_euler: 11,
        }
    }
}

impl EulerInversionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) || self.m_euler < 1 || self.n_terms <= self.m_euler
        {
            return Err(Error::InvalidInput(format!(
                "bad inversion parameters {self:?}"
            )));
        }
        Ok(())
    }

    /// Transform arguments `s_k = (A + 2kπi)/(2t)`, `k = 0..=n+m`.
    pub fn nodes(&self, t: f64) -> Vec<Complex64> {
        (0..=self.n_terms + self.m_euler)
            .map(|k| Complex64::new(self.a, 2.0 * std::f64::consts::PI * k as f64) / (2.0 * t))
            .collect()
    }

    /// Combines `Re F(s_k)` (in node order) into the Euler-averaged estimate.
    pub fn combine(&self, t: f64, real_parts: &[f64]) -> Result<f64> {
        let factor = (self.a / 2.0).exp() / t;
        let mut partial = 0.5 * real_parts[0];
        let mut sums = Vec::with_capacity(self.m_euler + 1);
        for (k, v) in real_parts.iter().enumerate().skip(1) {
            partial += if k % 2 == 0 { *v } else { -v };
            if k >= self.n_terms {
                sums.push(partial * factor);
            }
        }
        let m = self.m_euler;
        let mut binom = 1.0;
        let mut out = 0.0;
        for (j, s) in sums.iter().enumerate().take(m + 1) {
            out += binom * s;
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        out /= 2f64.powi(m as i32);
        if !out.is_finite() {
            return Err(Error::Inversion(t));
        }
        Ok(out)
    }
}

/// Inverts a Laplace transform at time `t > 0`.
pub fn invert<F>(transform: F, t: f64, params: &EulerInversionParams) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    params.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "inversion time must be positive, got {t}"
        )));
    }
    let values = params
        .nodes(t)
        .into_iter()
        .map(|s| transform(s).map(|v| v.re))
        .collect::<Result<Vec<f64>>>()?;
    params.combine(t, &values)
}

/// Scaling of the passage density into a daily probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DayCount {
    /// Days on a 360 grid, daily probability `f_n / 365`.
    #[default]
    Mixed,
    /// Daily probability `f_n / 360`.
    Consistent,
}

impl DayCount {
    pub fn days_per_density_year(&self) -> f64 {
        match self {
            DayCount::Mixed => 365.0,
            DayCount::Consistent => 360.0,
        }
    }
}

/// Survival probabilities and passage densities on the daily grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageCurve {
    pub barrier: f64,
    /// `survival[n - 1] = F̄_n` for day `n = 1..=N`.
    pub survival: Vec<f64>,
    /// Passage density per year, `f_n`.
    pub density: Vec<f64>,
    /// Daily passage probability `π_n`.
    pub daily_prob: Vec<f64>,
    pub day_count: DayCount,
    /// Number of days where a small upward ripple in survival was flattened.
    pub repairs: usize,
}

impl FirstPassageCurve {
    pub fn days(&self) -> usize {
        self.survival.len()
    }

    pub fn t_years(day: usize) -> f64 {
        day as f64 / DAYS_PER_YEAR
    }

    /// `F̄_n`, with `F̄_0 = 1`.
    pub fn survival_at(&self, day: usize) -> f64 {
        if day == 0 {
            1.0
        } else {
            self.survival[day - 1]
        }
    }

    pub fn prob_at(&self, day: usize) -> f64 {
        self.daily_prob[day - 1]
    }

    /// The curve restricted to the first `days` days.
    pub fn truncated(&self, days: usize) -> FirstPassageCurve {
        let d = days.min(self.days());
        FirstPassageCurve {
            barrier: self.barrier,
            survival: self.survival[..d].to_vec(),
            density: self.density[..d].to_vec(),
            daily_prob: self.daily_prob[..d].to_vec(),
            day_count: self.day_count,
            repairs: self.repairs,
        }
    }
}

/// Largest upward ripple in survival that is silently flattened.
pub const RIPPLE_TOLERANCE: f64 = 1e-6;

/// `P(T ≤ t)` and the passage density at time `t` for a down barrier at
/// fraction `barrier` of spot.
pub fn passage_point(
    solver: &RootSolver,
    distance: f64,
    t: f64,
    params: &EulerInversionParams,
) -> Result<(f64, f64)> {
    let nodes = params.nodes(t);
    let mut cdf = Vec::with_capacity(nodes.len());
    let mut dens = Vec::with_capacity(nodes.len());
    for s in nodes {
        let tr = passage_from_factor(&solver.factor(s)?, distance);
        cdf.push(tr.cdf.re);
        dens.push(tr.density.re);
    }
    Ok((params.combine(t, &cdf)?, params.combine(t, &dens)?))
}

/// Daily first-passage curve for the down barrier `barrier ∈ (0, 1)` over
/// days `1..=days` (day `n` is `t = n/360`).
pub fn passage_curve(
    model: &HyperExpLevyModel,
    barrier: f64,
    days: usize,
    params: &EulerInversionParams,
    day_count: DayCount,
) -> Result<FirstPassageCurve> {
    params.validate()?;
    if days == 0 {
        return Err(Error::InvalidInput(
            "passage curve needs at least one day".into(),
        ));
    }
    let distance = down_distance(barrier)?;
    let solver = RootSolver::new(&model.reflect())?;
    let raw = (1..=days)
        .into_par_iter()
        .map(|n| passage_point(&solver, distance, FirstPassageCurve::t_years(n), params))
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let mut survival = Vec::with_capacity(days);
    let mut density = Vec::with_capacity(days);
    let mut repairs = 0;
    let mut prev = 1.0_f64;
    for (i, (cdf, dens)) in raw.into_iter().enumerate() {
        let mut s = (1.0 - cdf).clamp(0.0, 1.0);
        if s > prev {
            let violation = s - prev;
            if violation > RIPPLE_TOLERANCE {
                return Err(Error::Monotonicity {
                    day: i + 1,
                    violation,
                });
            }
            s = prev;
            repairs += 1;
        }
        prev = s;
        survival.push(s);
        density.push(dens.max(0.0));
    }
    let per_day = day_count.days_per_density_year();
    let daily_prob = density.iter().map(|f| f / per_day).collect();
    Ok(FirstPassageCurve {
        barrier,
        survival,
        density,
        daily_prob,
        day_count,
        repairs,
    })
}
