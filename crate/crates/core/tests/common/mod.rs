//! Reference computations written independently of the library code paths.

#![allow(dead_code)]

use cgmy_eds::hyperexp::{CgmyParams, ExpTerm};
use cgmy_eds::levymodel::HyperExpLevyModel;
use cgmy_eds::Complex64;
use rand::Rng;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// κ(s) straight from the model fields.
pub fn kappa(m: &HyperExpLevyModel, s: Complex64) -> Complex64 {
    let mut k = m.mu * s + 0.5 * m.sigma2 * s * s;
    for t in &m.pos_terms {
        k += t.weight / t.rate * s / (t.rate - s);
    }
    for t in &m.neg_terms {
        k -= t.weight / t.rate * s / (t.rate + s);
    }
    k
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Reflection-principle probability that `μt + σW_t` reaches `-x` by `t`.
pub fn brownian_hit_below(mu: f64, sigma2: f64, x: f64, t: f64) -> f64 {
    let s = (sigma2 * t).sqrt();
    std_normal_cdf((-x - mu * t) / s)
        + (-2.0 * mu * x / sigma2).exp() * std_normal_cdf((-x + mu * t) / s)
}

pub fn black_scholes(spot: f64, k: f64, r: f64, q: f64, vol: f64, t: f64, call: bool) -> f64 {
    let sd = vol * t.sqrt();
    let d1 = ((spot / k).ln() + (r - q) * t) / sd + 0.5 * sd;
    let d2 = d1 - sd;
    let (df, dq) = ((-r * t).exp(), (-q * t).exp());
    if call {
        spot * dq * std_normal_cdf(d1) - k * df * std_normal_cdf(d2)
    } else {
        k * df * std_normal_cdf(-d2) - spot * dq * std_normal_cdf(-d1)
    }
}

/// Positive real roots of κ(s) = a for real a > 0 and σ² > 0, by bisection
/// between consecutive up-jump poles.
pub fn positive_real_roots(m: &HyperExpLevyModel, a: f64) -> Vec<f64> {
    let mut poles: Vec<f64> = m.pos_terms.iter().map(|t| t.rate).collect();
    poles.sort_by(f64::total_cmp);
    let f = |s: f64| kappa(m, c(s, 0.0)).re - a;
    let mut edges = vec![0.0];
    edges.extend(&poles);
    let mut hi = 2.0 * poles.last().copied().unwrap_or(0.0) + 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    edges.push(hi);
    edges
        .windows(2)
        .map(|w| {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// ∫_0^ε x² (C e^{-Tx} x^{-1-Y} - Σ w e^{-ux}) dx in closed form.
pub fn residual_variance_side(p: &CgmyParams, temper: f64, terms: &[ExpTerm], eps: f64) -> f64 {
    let s = 2.0 - p.y;
    let cgmy = p.c * temper.powf(-s) * gamma(s) * gamma_lr(s, temper * eps);
    let mix: f64 = terms
        .iter()
        .map(|t| {
            let z = t.rate * eps;
            t.weight * 2.0 / t.rate.powi(3) * (1.0 - (-z).exp() * (1.0 + z + 0.5 * z * z))
        })
        .sum();
    cgmy - mix
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite Gauss-Legendre over `[a, b]` split into `panels` pieces.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for j in 0..panels {
        let mid = a + (j as f64 + 0.5) * h;
        total += rule
            .iter()
            .map(|(x, w)| w * f(mid + 0.5 * h * x))
            .sum::<f64>()
            * 0.5
            * h;
    }
    total
}

/// Par rate from the survival curve `surv[n]` (`surv[0] = 1`) and daily
/// default probabilities `prob[n]`, flat rate `r`, coupon days `cd`.
pub fn eds_rate_reference(surv: &[f64], prob: &[f64], cd: &[usize], recovery: f64, r: f64) -> f64 {
    let n_max = *cd.last().unwrap();
    let disc = |n: usize| (-r * n as f64 / 360.0).exp();
    let protection: f64 = (1..=n_max).map(|n| disc(n) * prob[n]).sum::<f64>() * (1.0 - recovery);
    let mut coupons = 0.0;
    let mut prev = 0;
    for &d in cd {
        coupons += (d - prev) as f64 / 360.0 * disc(d) * surv[d];
        prev = d;
    }
    let mut accrued = 0.0;
    for (n, p) in prob.iter().enumerate().take(n_max + 1).skip(1) {
        let last = cd.iter().copied().filter(|&d| d <= n).max().unwrap_or(0);
        let zeta = n - last;
        accrued += (n - zeta) as f64 / 360.0 * disc(n) * p;
    }
    protection / (coupons + accrued)
}

/// A random valid model with a diffusion, 1-4 terms per side.
pub fn random_model(rng: &mut impl Rng) -> HyperExpLevyModel {
    let mut side = |lo: f64| -> Vec<ExpTerm> {
        let n = rng.random_range(1..=4);
        let mut rate = lo;
        (0..n)
            .map(|_| {
                rate += rng.random_range(0.3..6.0);
                ExpTerm {
                    weight: rng.random_range(0.05..3.0) * rate,
                    rate,
                }
            })
            .collect()
    };
    let pos = side(1.0);
    let neg = side(0.0);
    let sigma2 = rng.random_range(0.005..0.2);
    let mu = rng.random_range(-0.3..0.3);
    HyperExpLevyModel::new(pos, neg, sigma2, mu).unwrap()
}
