//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

/// Integrates `f` over `[a, b]` by global adaptive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut intervals = vec![(a, b, kronrod(&f, a, b))];
    loop {
        let (total, err): (f64, f64) = intervals
            .iter()
            .fold((0.0, 0.0), |(t, e), (_, _, (v, ev))| (t + v, e + ev));
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(total);
        }
        if intervals.len() >= cfg.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:.3e} after {} intervals on [{a}, {b}]",
                intervals.len()
            )));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| (x.1).2 .1.total_cmp(&(y.1).2 .1))
            .expect("nonempty");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, kronrod(&f, lo, mid)));
        intervals.push((mid, hi, kronrod(&f, mid, hi)));
    }
}
