//! Derivative-free Nelder-Mead minimizer with restarts.
//!
//! Used by the exponential-mixture fitter and the option calibrator. Both
//! optimize over unconstrained (log-transformed) coordinates, so the simplex
//! itself never has to deal with bounds.

#[derive(Clone, Debug)]
pub struct SimplexConfig {
    /// Budget of objective evaluations over all restarts.
    pub max_evaluations: usize,
    /// Convergence when the simplex diameter (max coordinate spread) is below this.
    pub x_tolerance: f64,
    /// Convergence when the spread of objective values is below this.
    pub f_tolerance: f64,
    /// Relative size of the initial simplex around the start point.
    pub initial_step: f64,
    /// Restarts are taken from the best vertex until a restart stops improving.
    pub max_restarts: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig {
            max_evaluations: 200_000,
            x_tolerance: 1e-10,
            f_tolerance: 1e-16,
            initial_step: 0.1,
            max_restarts: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `start`.
///
/// Uses the dimension-adaptive coefficients of Gao and Han, which behave
/// noticeably better than the classical ones beyond a handful of dimensions.
/// Non-finite objective values are treated as +inf.
pub fn minimize<F>(mut f: F, start: &[f64], cfg: &SimplexConfig) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut evals = 0usize;
    let mut iterations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best = start.to_vec();
    let mut best_val = eval(&best, &mut evals);
    if n == 0 {
        return SimplexResult {
            point: best,
            value: best_val,
            evaluations: evals,
            iterations,
            converged: true,
        };
    }

    let nf = n as f64;
    let (rho, chi, gamma, sigma) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut converged = false;
    for _restart in 0..=cfg.max_restarts {
        let start_val = best_val;
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut values: Vec<f64> = Vec::with_capacity(n + 1);
        simplex.push(best.clone());
        values.push(best_val);
        for i in 0..n {
            let mut v = best.clone();
            let step = if v[i].abs() > 1e-8 {
                cfg.initial_step * v[i].abs()
            } else {
                cfg.initial_step
            };
            v[i] += step;
            values.push(eval(&v, &mut evals));
            simplex.push(v);
        }

        let mut local_converged = false;
        while evals < cfg.max_evaluations {
            iterations += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let f_spread = values[n] - values[0];
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0_f64, f64::max);
            if x_spread <= cfg.x_tolerance
                && f_spread <= cfg.f_tolerance.max(values[0].abs() * 1e-12)
            {
                local_converged = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(rho);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = along(rho * chi);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
                continue;
            }
            let (xc, fc) = if fr < values[n] {
                let xc = along(rho * gamma);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-gamma);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            // shrink
            for i in 1..=n {
                let shrunk: Vec<f64> = simplex[0]
                    .iter()
                    .zip(&simplex[i])
                    .map(|(b, x)| b + sigma * (x - b))
                    .collect();
                values[i] = eval(&shrunk, &mut evals);
                simplex[i] = shrunk;
            }
        }

        let (imin, &vmin) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("simplex is nonempty");
        if vmin <= best_val {
            best_val = vmin;
            best = simplex[imin].clone();
        }
        if !local_converged {
            break;
        }
        // a restart that brings no improvement confirms the minimum
        if start_val - best_val <= cfg.f_tolerance.max(best_val.abs() * 1e-14) {
            converged = true;
            break;
        }
    }

    SimplexResult {
        point: best,
        value: best_val,
        evaluations: evals,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &SimplexConfig::default());
        assert!(r.converged);
        assert!((r.point[0] - 1.0).abs() < 1e-6, "{:?}", r.point);
        assert!((r.point[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_in_six_dimensions() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 + 1.0) * (v - i as f64).powi(2))
                .sum::<f64>()
        };
        let r = minimize(f, &[5.0; 6], &SimplexConfig::default());
        assert!(r.converged);
        for (i, v) in r.point.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = SimplexConfig {
            max_evaluations: 20,
            ..Default::default()
        };
        let r = minimize(f, &[-1.2, 1.0], &cfg);
        assert!(!r.converged);
        assert!(r.value.is_finite());
    }
}
