//! Equity default swap: coupon schedule, discounting and the closed-form
//! par rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{FirstPassageCurve, DAYS_PER_YEAR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CouponFrequency {
    #[default]
    Quarterly,
    Semiannual,
    Annual,
}

impl CouponFrequency {
    pub fn period_days(&self) -> usize {
        match self {
            CouponFrequency::Quarterly => 90,
            CouponFrequency::Semiannual => 180,
            CouponFrequency::Annual => 360,
        }
    }
}

impl std::str::FromStr for CouponFrequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quarterly" | "4" => Ok(CouponFrequency::Quarterly),
            "semiannual" | "semi-annual" | "2" => Ok(CouponFrequency::Semiannual),
            "annual" | "1" => Ok(CouponFrequency::Annual),
            other => Err(Error::InvalidInput(format!(
                "unknown coupon frequency '{other}'"
            ))),
        }
    }
}

/// Contract terms per unit notional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdsContract {
    pub recovery: f64,
    /// Trigger level as a fraction of the initial stock price.
    pub barrier: f64,
    /// Maturity in days on the 360-day grid.
    pub maturity_days: usize,
    /// Coupon days `np_1 < … < np_NP ≤ N`.
    pub coupon_days: Vec<usize>,
}

/// Converts a maturity in years to whole days on the 360 grid.
pub fn maturity_days(years: f64) -> Result<usize> {
    let days = years * DAYS_PER_YEAR;
    if !(days.is_finite() && days >= 1.0) || (days - days.round()).abs() > 1e-9 * days.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "maturity {years} years is not a whole number of days"
        )));
    }
    Ok(days.round() as usize)
}

impl EdsContract {
    pub fn new(
        recovery: f64,
        barrier: f64,
        maturity_days: usize,
        coupon_days: Vec<usize>,
    ) -> Result<Self> {
        let c = EdsContract {
            recovery,
            barrier,
            maturity_days,
            coupon_days,
        };
        c.validate()?;
        Ok(c)
    }

    /// Regular schedule every `freq.period_days()` days; a short final
    /// period ends at maturity.
    pub fn with_frequency(
        recovery: f64,
        barrier: f64,
        maturity_years: f64,
        freq: CouponFrequency,
    ) -> Result<Self> {
        let n = maturity_days(maturity_years)?;
        let step = freq.period_days();
        let mut days: Vec<usize> = (1..).map(|j| j * step).take_while(|&d| d < n).collect();
        days.push(n);
        Self::new(recovery, barrier, n, days)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.recovery) {
            return Err(Error::InvalidInput(format!(
                "recovery {} outside [0, 1]",
                self.recovery
            )));
        }
        if !(self.barrier > 0.0 && self.barrier < 1.0) {
            return Err(Error::InvalidInput(format!(
                "barrier {} outside (0, 1)",
                self.barrier
            )));
        }
        if self.maturity_days == 0 {
            return Err(Error::InvalidInput(
                "maturity must be at least one day".into(),
            ));
        }
        if self.coupon_days.is_empty() {
            return Err(Error::InvalidInput("coupon schedule is empty".into()));
        }
        let mut prev = 0;
        for &d in &self.coupon_days {
            if d <= prev || d > self.maturity_days {
                return Err(Error::InvalidInput(format!(
                    "coupon days must increase within 1..={}, got {:?}",
                    self.maturity_days, self.coupon_days
                )));
            }
            prev = d;
        }
        Ok(())
    }

    pub fn maturity_years(&self) -> f64 {
        self.maturity_days as f64 / DAYS_PER_YEAR
    }
}

/// `ζ(n)`: days since the last coupon on or before day `n` (`np_0 = 0`).
pub fn accrual_days(n: usize, coupon_days: &[usize]) -> usize {
    let last = coupon_days
        .iter()
        .rev()
        .find(|&&d| d <= n)
        .copied()
        .unwrap_or(0);
    n - last
}

/// Discount factors on the day grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DiscountCurve {
    /// `B_n = exp(-r n / 360)`.
    Flat { rate: f64 },
    /// Knots `(day, B)` with constant forwards between them and beyond the
    /// last knot.
    Knots { days: Vec<f64>, discounts: Vec<f64> },
}

impl DiscountCurve {
    pub fn flat(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "rate must be finite, got {rate}"
            )));
        }
        Ok(DiscountCurve::Flat { rate })
    }

    /// Builds a knot curve. Increasing discount factors (negative forwards)
    /// are rejected unless `allow_increasing`.
    pub fn from_knots(mut knots: Vec<(f64, f64)>, allow_increasing: bool) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidInput("discount curve has no rows".into()));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prev = (0.0, 1.0);
        for &(d, b) in &knots {
            if !(d.is_finite() && d > prev.0) {
                return Err(Error::InvalidInput(format!(
                    "discount curve days must be positive and distinct, got {d}"
                )));
            }
            if !(b.is_finite() && b > 0.0) || (!allow_increasing && (b > 1.0 || b > prev.1)) {
                return Err(Error::InvalidInput(format!(
                    "discount factor {b} on day {d} is not admissible"
                )));
            }
            prev = (d, b);
        }
        let (days, discounts) = knots.into_iter().unzip();
        Ok(DiscountCurve::Knots { days, discounts })
    }

    /// Parses CSV with header `day,discount`.
    pub fn from_csv(text: &str, allow_increasing: bool) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            day: f64,
            discount: f64,
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(format!("discount curve: {e}")))?;
        if headers.iter().collect::<Vec<_>>() != ["day", "discount"] {
            return Err(Error::Parse(format!(
                "discount curve header must be 'day,discount', got {headers:?}"
            )));
        }
        let knots = reader
            .deserialize::<Row>()
            .map(|r| {
                r.map(|r| (r.day, r.discount))
                    .map_err(|e| Error::Parse(format!("discount curve: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_knots(knots, allow_increasing)
    }

    /// `B_n`, with `B_0 = 1`.
    pub fn factor(&self, day: f64) -> f64 {
        match self {
            DiscountCurve::Flat { rate } => (-rate * day / DAYS_PER_YEAR).exp(),
            DiscountCurve::Knots { days, discounts } => {
                if day <= 0.0 {
                    return 1.0;
                }
                let i = days.partition_point(|&d| d < day);
                let (d0, b0, d1, b1) = match i {
                    0 => (0.0, 1.0, days[0], discounts[0]),
                    i if i == days.len() => {
                        if i == 1 {
                            (0.0, 1.0, days[0], discounts[0])
                        } else {
                            (days[i - 2], discounts[i - 2], days[i - 1], discounts[i - 1])
                        }
                    }
                    i => (days[i - 1], discounts[i - 1], days[i], discounts[i]),
                };
                let w = (day - d0) / (d1 - d0);
                (b0.ln() + w * (b1.ln() - b0.ln())).exp()
            }
        }
    }
}

/// Par rate and the pieces it is assembled from, per unit notional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdsQuote {
    pub rate: f64,
    pub rate_bp: f64,
    /// Discounted protection payment, `(1-R) Σ B_n π_n`.
    pub protection_leg: f64,
    /// Coupon leg per unit rate (the denominator).
    pub premium_annuity: f64,
    pub survival_at_maturity: f64,
}

/// Solves the zero-value condition for the EDS rate:
///
/// `k = (1-R) Σ_n B_n π_n / [Σ_j (np_j - np_{j-1})/360 · B_{np_j} F̄_{np_j}
///      + Σ_n (n - ζ(n))/360 · B_n π_n]`.
pub fn eds_rate(
    contract: &EdsContract,
    curve: &DiscountCurve,
    passage: &FirstPassageCurve,
) -> Result<EdsQuote> {
    contract.validate()?;
    let n_days = contract.maturity_days;
    if passage.days() < n_days {
        return Err(Error::InvalidInput(format!(
            "passage curve covers {} days, contract needs {n_days}",
            passage.days()
        )));
    }
    let mut default_leg = 0.0;
    let mut accrual_leg = 0.0;
    for n in 1..=n_days {
        let bp = curve.factor(n as f64) * passage.prob_at(n);
        default_leg += bp;
        accrual_leg += (n - accrual_days(n, &contract.coupon_days)) as f64 / DAYS_PER_YEAR * bp;
    }
    let mut coupon_leg = 0.0;
    let mut prev = 0;
    for &d in &contract.coupon_days {
        coupon_leg +=
            (d - prev) as f64 / DAYS_PER_YEAR * curve.factor(d as f64) * passage.survival_at(d);
        prev = d;
    }
    let annuity = coupon_leg + accrual_leg;
    if !(annuity > 0.0 && annuity.is_finite()) {
        return Err(Error::Degenerate(format!(
            "premium annuity {annuity} is not positive"
        )));
    }
    let protection = (1.0 - contract.recovery) * default_leg;
    let rate = protection / annuity;
    Ok(EdsQuote {
        rate,
        rate_bp: rate * 1e4,
        protection_leg: protection,
        premium_annuity: annuity,
        survival_at_maturity: passage.survival_at(n_days),
    })
}

/// Expected value to the protection seller of a swap paying `rate`, summed
/// cash flow by cash flow: coupons while alive, the accrual credit and the
/// protection payment on the passage day.
pub fn expected_swap_value(
    contract: &EdsContract,
    curve: &DiscountCurve,
    passage: &FirstPassageCurve,
    rate: f64,
) -> f64 {
    let mut value = 0.0;
    let mut next_coupon = contract.coupon_days.iter().peekable();
    let mut last_coupon = 0;
    for n in 1..=contract.maturity_days {
        let b = curve.factor(n as f64);
        let pi = passage.prob_at(n);
        if next_coupon.peek() == Some(&&n) {
            value += rate * (n - last_coupon) as f64 / DAYS_PER_YEAR * b * passage.survival_at(n);
            last_coupon = n;
            next_coupon.next();
        }
        value += b * pi * (rate * last_coupon as f64 / DAYS_PER_YEAR - (1.0 - contract.recovery));
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::DayCount;

    fn curve_from(probs: Vec<f64>) -> FirstPassageCurve {
        let mut s = 1.0;
        let survival = probs
            .iter()
            .map(|p| {
                s -= p;
                s
            })
            .collect();
        FirstPassageCurve {
            barrier: 0.5,
            survival,
            density: probs.iter().map(|p| p * 360.0).collect(),
            daily_prob: probs,
            day_count: DayCount::Consistent,
            repairs: 0,
        }
    }

    #[test]
    fn accrual_examples() {
        let q: Vec<usize> = (1..=4).map(|j| 90 * j).collect();
        assert_eq!(accrual_days(100, &q), 10);
        assert_eq!(accrual_days(180, &q), 0);
        assert_eq!(accrual_days(1, &q), 1);
    }

    #[test]
    fn schedules() {
        let c = EdsContract::with_frequency(0.5, 0.3, 1.0, CouponFrequency::Quarterly).unwrap();
        assert_eq!(c.coupon_days, vec![90, 180, 270, 360]);
        let c = EdsContract::with_frequency(0.5, 0.3, 1.25, CouponFrequency::Semiannual).unwrap();
        assert_eq!(c.coupon_days, vec![180, 360, 450]);
        assert!(
            EdsContract::with_frequency(0.5, 0.3, 1.0 / 720.0, CouponFrequency::Annual).is_err()
        );
        assert!(EdsContract::new(0.5, 0.3, 360, vec![180, 90]).is_err());
        assert!(EdsContract::new(0.5, 1.3, 360, vec![360]).is_err());
    }

    #[test]
    fn no_risk_means_zero_rate() {
        let c = EdsContract::with_frequency(0.5, 0.3, 1.0, CouponFrequency::Quarterly).unwrap();
        let q = eds_rate(
            &c,
            &DiscountCurve::flat(0.05).unwrap(),
            &curve_from(vec![0.0; 360]),
        )
        .unwrap();
        assert_eq!(q.rate, 0.0);
    }

    #[test]
    fn certain_passage_on_day_one() {
        let c = EdsContract::new(0.4, 0.3, 1, vec![1]).unwrap();
        let curve = DiscountCurve::flat(0.05).unwrap();
        let q = eds_rate(&c, &curve, &curve_from(vec![1.0])).unwrap();
        assert!((q.rate - 360.0 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn swap_value_vanishes_at_par() {
        let probs: Vec<f64> = (1..=720)
            .map(|n| 1e-4 * (-(n as f64) / 500.0).exp())
            .collect();
        let passage = curve_from(probs);
        let c = EdsContract::with_frequency(0.3, 0.5, 2.0, CouponFrequency::Quarterly).unwrap();
        let curve = DiscountCurve::flat(0.03).unwrap();
        let q = eds_rate(&c, &curve, &passage).unwrap();
        assert!(expected_swap_value(&c, &curve, &passage, q.rate).abs() < 1e-14);
        assert!(expected_swap_value(&c, &curve, &passage, 2.0 * q.rate) > 0.0);
    }

    #[test]
    fn knot_curve_interpolates_forwards() {
        let curve = DiscountCurve::from_csv("day,discount\n360,0.95\n720,0.9\n", false).unwrap();
        assert_eq!(curve.factor(0.0), 1.0);
        assert!((curve.factor(360.0) - 0.95).abs() < 1e-15);
        assert!((curve.factor(180.0) - 0.95f64.sqrt()).abs() < 1e-15);
        let fwd = (0.9f64 / 0.95).ln();
        assert!((curve.factor(1080.0) - 0.9 * fwd.exp()).abs() < 1e-15);
        assert!(DiscountCurve::from_csv("day,discount\n360,0.95\n720,0.97\n", false).is_err());
        assert!(DiscountCurve::from_csv("day,discount\n360,0.95\n720,0.97\n", true).is_ok());
        assert!(DiscountCurve::from_csv("d,b\n1,1\n", false).is_err());
        assert!(DiscountCurve::from_csv("day,discount\nx,1\n", false).is_err());
    }
}
