//! Plain Monte Carlo simulation of the approximating process, used as an
//! independent check on the transform pipeline.
//!
//! Paths are split into a fixed number of partitions. Partition `j` draws
//! from a ChaCha stream `j` under the configured seed, so results do not
//! depend on the thread count.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levymodel::HyperExpLevyModel;
use crate::wienerhopf::down_distance;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub paths: usize,
    pub seed: u64,
    /// Time step in years.
    pub dt: f64,
    /// Brownian-bridge crossing check between grid points.
    pub bridge: bool,
    pub partitions: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            paths: 100_000,
            seed: 20_240_601,
            dt: 1.0 / 3600.0,
            bridge: true,
            partitions: 64,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || self.partitions == 0 || !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad simulation config {self:?}"
            )));
        }
        Ok(())
    }

    /// `(stream, path count)` for every partition.
    fn partitions(&self) -> Vec<(u64, usize)> {
        let k = self.partitions.min(self.paths);
        (0..k)
            .map(|j| (j as u64, self.paths / k + usize::from(j < self.paths % k)))
            .collect()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            samples: xs.len(),
        }
    }

    fn binomial(hits: usize, n: usize) -> Estimate {
        let p = hits as f64 / n as f64;
        Estimate {
            mean: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
        }
    }

    /// `|mean - target| ≤ k·SE + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + slack
    }
}

/// Jump sampler: side by intensity, phase by mixture probability, size
/// exponential with the phase rate.
struct Jumps {
    lambda: f64,
    up_share: f64,
    up: Option<(WeightedIndex<f64>, Vec<f64>)>,
    down: Option<(WeightedIndex<f64>, Vec<f64>)>,
}

impl Jumps {
    fn new(model: &HyperExpLevyModel) -> Result<Self> {
        let side =
            |probs: Vec<f64>, rates: Vec<f64>| -> Result<Option<(WeightedIndex<f64>, Vec<f64>)>> {
                if probs.is_empty() {
                    return Ok(None);
                }
                let w = WeightedIndex::new(&probs)
                    .map_err(|e| Error::InvalidInput(format!("jump mixture: {e}")))?;
                Ok(Some((w, rates)))
            };
        let (lp, ln) = (model.lambda_pos(), model.lambda_neg());
        Ok(Jumps {
            lambda: lp + ln,
            up_share: if lp + ln > 0.0 { lp / (lp + ln) } else { 0.0 },
            up: side(model.probs_pos(), model.alphas().collect())?,
            down: side(model.probs_neg(), model.betas().collect())?,
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let up = rng.random::<f64>() < self.up_share;
        let (dist, rates, sign) = match (up, &self.up, &self.down) {
            (true, Some((d, r)), _) => (d, r, 1.0),
            (_, _, Some((d, r))) => (d, r, -1.0),
            (_, Some((d, r)), None) => (d, r, 1.0),
            (_, None, None) => return 0.0,
        };
        let size: f64 = rng.sample(Exp1);
        sign * size / rates[dist.sample(rng)]
    }
}

/// First passage time below `ln b` on `[0, horizon]`, or `None`.
fn passage_path<R: Rng>(
    rng: &mut R,
    model: &HyperExpLevyModel,
    jumps: &Jumps,
    level: f64,
    horizon: f64,
    cfg: &SimConfig,
) -> Option<f64> {
    let steps = (horizon / cfg.dt).ceil() as usize;
    let dt = horizon / steps as f64;
    let vol = (model.sigma2 * dt).sqrt();
    let drift = model.mu * dt;
    let bridge_scale = if cfg.bridge && model.sigma2 > 0.0 {
        -2.0 / (model.sigma2 * dt)
    } else {
        0.0
    };
    let mut x = 0.0;
    let mut next_jump = if jumps.lambda > 0.0 {
        rng.sample::<f64, _>(Exp1) / jumps.lambda
    } else {
        f64::INFINITY
    };
    for i in 1..=steps {
        let t = i as f64 * dt;
        let mut y = x + drift;
        if vol > 0.0 {
            y += vol * rng.sample::<f64, _>(StandardNormal);
        }
        if y <= level {
            return Some(t);
        }
        if bridge_scale != 0.0 {
            let p = (bridge_scale * (x - level) * (y - level)).exp();
            if p > 1e-16 && rng.random::<f64>() < p {
                return Some(t);
            }
        }
        while next_jump <= t {
            y += jumps.sample(rng);
            next_jump += rng.sample::<f64, _>(Exp1) / jumps.lambda;
        }
        if y <= level {
            return Some(t);
        }
        x = y;
    }
    None
}

/// First passage times of `paths` paths below fraction `b` of spot, within
/// `horizon` years (`None` if the barrier was not reached).
pub fn simulate_passage_times(
    model: &HyperExpLevyModel,
    b: f64,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    model.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let level = -down_distance(b)?;
    let jumps = Jumps::new(model)?;
    let chunks: Vec<Vec<Option<f64>>> = cfg
        .partitions()
        .into_par_iter()
        .map(|(stream, n)| {
            let mut rng = cfg.rng(stream);
            (0..n)
                .map(|_| passage_path(&mut rng, model, &jumps, level, horizon, cfg))
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Estimates `P(T ≤ t)` for each `t` in `horizons` from one set of paths.
pub fn simulate_passage_multi(
    model: &HyperExpLevyModel,
    b: f64,
    horizons: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<Estimate>> {
    let longest = horizons.iter().copied().fold(0.0, f64::max);
    let times = simulate_passage_times(model, b, longest, cfg)?;
    Ok(horizons
        .iter()
        .map(|&h| {
            let hits = times
                .iter()
                .filter(|t| matches!(t, Some(s) if *s <= h + 1e-12))
                .count();
            Estimate::binomial(hits, times.len())
        })
        .collect())
}

/// Estimate of `P(T ≤ horizon)` with its binomial standard error.
pub fn simulate_passage(
    model: &HyperExpLevyModel,
    b: f64,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<Estimate> {
    Ok(simulate_passage_multi(model, b, &[horizon], cfg)?[0])
}

/// Samples of `X_T`. The terminal law is drawn exactly (Poisson jump count,
/// one Gaussian), so `cfg.dt` and `cfg.bridge` are not used.
pub fn simulate_terminal(
    model: &HyperExpLevyModel,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    model.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let jumps = Jumps::new(model)?;
    let count = if jumps.lambda > 0.0 {
        Some(
            Poisson::new(jumps.lambda * horizon)
                .map_err(|e| Error::InvalidInput(format!("{e}")))?,
        )
    } else {
        None
    };
    let vol = (model.sigma2 * horizon).sqrt();
    let chunks: Vec<Vec<f64>> = cfg
        .partitions()
        .into_par_iter()
        .map(|(stream, n)| {
            let mut rng = cfg.rng(stream);
            (0..n)
                .map(|_| {
                    let mut x = model.mu * horizon + vol * rng.sample::<f64, _>(StandardNormal);
                    let k = count.map_or(0, |p| p.sample(&mut rng) as usize);
                    for _ in 0..k {
                        x += jumps.sample(&mut rng);
                    }
                    x
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(paths: usize) -> SimConfig {
        SimConfig {
            paths,
            dt: 1.0 / 360.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn deterministic_path() {
        let m = HyperExpLevyModel::brownian(-1.0, 0.0).unwrap();
        let b = (-0.5f64).exp();
        let cfg = small(10);
        assert_eq!(simulate_passage(&m, b, 1.0, &cfg).unwrap().mean, 1.0);
        assert_eq!(simulate_passage(&m, b, 0.4, &cfg).unwrap().mean, 0.0);
    }

    #[test]
    fn reproducible_for_a_seed() {
        let m = HyperExpLevyModel::brownian(0.0, 0.09).unwrap();
        let cfg = small(2000);
        let a = simulate_passage(&m, 0.8, 1.0, &cfg).unwrap();
        let b = simulate_passage(&m, 0.8, 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_passage(&m, 0.8, 1.0, &SimConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn terminal_variance() {
        let m = HyperExpLevyModel::brownian(0.01, 0.04).unwrap();
        let xs = simulate_terminal(&m, 2.0, &small(50_000)).unwrap();
        let est = Estimate::from_samples(&xs);
        assert!(est.agrees_with(0.02, 3.0, 0.0));
        let sq: Vec<f64> = xs.iter().map(|x| (x - 0.02).powi(2)).collect();
        assert!(Estimate::from_samples(&sq).agrees_with(0.08, 3.0, 0.0));
    }

    #[test]
    fn partition_sizes_cover_all_paths() {
        let cfg = SimConfig {
            paths: 1001,
            partitions: 64,
            ..SimConfig::default()
        };
        assert_eq!(cfg.partitions().iter().map(|p| p.1).sum::<usize>(), 1001);
        assert!(SimConfig { paths: 0, ..cfg }.validate().is_err());
    }
}
