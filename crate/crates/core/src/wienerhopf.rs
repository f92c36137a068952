//! Closed-form Wiener-Hopf factor of the hyperexponential model.
//!
//! For `Re(a) > 0` the upward factor is
//!
//! ```text
//! φ⁺_a(s) = E[e^{s M_{e(a)}}] = Π_i (1 - s/α_i) / Π_k (1 - s/ρ_k)
//! ```
//!
//! where `ρ_k` are the roots of `κ(s) = a` with positive real part. A partial
//! fraction expansion gives `P(M_{e(a)} > x) = Σ A_k e^{-ρ_k x}`, which is
//! also the Laplace transform `E[e^{-a T_x}]` of the first passage time over
//! `x`.
//!
//! Roots come from the companion matrix of `p(s) - a q(s)` with
//! `q(s) = Π(α_i - s) Π(β_j + s)` and `p = κ q`, and are then polished by
//! Aberth iteration on the rational form of `κ`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyperexp::ExpTerm;
use crate::levymodel::HyperExpLevyModel;
use crate::poly::Poly;

const ROOT_RESIDUAL_TOL: f64 = 1e-10;
const REPEATED_ROOT_TOL: f64 = 1e-10;
const CLASSIFY_GUARD: f64 = 1e-12;

/// Precomputed polynomial data for repeated root solves on one model.
#[derive(Clone, Debug)]
pub struct RootSolver {
    model: HyperExpLevyModel,
    p: Poly,
    q: Poly,
    scale: f64,
}

fn drop_empty(terms: &[ExpTerm]) -> Vec<ExpTerm> {
    terms.iter().copied().filter(|t| t.weight > 0.0).collect()
}

impl RootSolver {
    pub fn new(model: &HyperExpLevyModel) -> Result<Self> {
        model.validate()?;
        // zero-weight phases would put spurious roots on the poles
        let model = HyperExpLevyModel {
            pos_terms: drop_empty(&model.pos_terms),
            neg_terms: drop_empty(&model.neg_terms),
            sigma2: model.sigma2,
            mu: model.mu,
        };
        let factors_pos: Vec<Poly> = model.alphas().map(|a| Poly::linear(a, -1.0)).collect();
        let factors_neg: Vec<Poly> = model.betas().map(|b| Poly::linear(b, 1.0)).collect();
        let product = |skip_pos: Option<usize>, skip_neg: Option<usize>| -> Poly {
            let mut acc = Poly::one();
            for (i, f) in factors_pos.iter().enumerate() {
                if Some(i) != skip_pos {
                    acc = acc.mul(f);
                }
            }
            for (j, f) in factors_neg.iter().enumerate() {
                if Some(j) != skip_neg {
                    acc = acc.mul(f);
                }
            }
            acc
        };
        let q = product(None, None);
        let diffusion = Poly {
            coeffs: vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(model.mu, 0.0),
                Complex64::new(0.5 * model.sigma2, 0.0),
            ],
        };
        let mut p = q.mul(&diffusion);
        for (i, t) in model.pos_terms.iter().enumerate() {
            // (a/α) s/(α - s) · q
            let term = product(Some(i), None).mul(&Poly::linear(0.0, t.weight / t.rate));
            p = p.add(&term);
        }
        for (j, t) in model.neg_terms.iter().enumerate() {
            // -(b/β) s/(β + s) · q
            let term = product(None, Some(j)).mul(&Poly::linear(0.0, -t.weight / t.rate));
            p = p.add(&term);
        }
        let pole_scale = model.alphas().chain(model.betas()).fold(0.0_f64, f64::max);
        let scale = pole_scale.max(1.0);
        Ok(RootSolver { model, p, q, scale })
    }

    pub fn model(&self) -> &HyperExpLevyModel {
        &self.model
    }

    /// Number of phases `n` on the positive side.
    pub fn n_pos(&self) -> usize {
        self.model.pos_terms.len()
    }

    /// Expected count of roots of `κ(s) = a` in the right half-plane.
    pub fn expected_positive_roots(&self) -> usize {
        let n = self.n_pos();
        if self.model.sigma2 > 0.0 || self.model.mu > 0.0 {
            n + 1
        } else {
            n
        }
    }

    /// Expected total degree of `p - a q`.
    pub fn expected_degree(&self) -> usize {
        let nm = self.model.pos_terms.len() + self.model.neg_terms.len();
        if self.model.sigma2 > 0.0 {
            nm + 2
        } else if self.model.mu != 0.0 {
            nm + 1
        } else {
            nm
        }
    }

    /// Logarithmic derivative of `p - a q` at `s`, evaluated through the
    /// rational form: `κ'/(κ - a) + q'/q`.
    fn log_derivative(&self, s: Complex64, a: Complex64) -> Complex64 {
        let poles: Complex64 = self
            .model
            .alphas()
            .map(|al| 1.0 / (s - al))
            .chain(self.model.betas().map(|b| 1.0 / (s + b)))
            .sum();
        self.model.kappa_derivative(s) / (self.model.kappa_unchecked(s) - a) + poles
    }

    /// Simultaneous Newton refinement with implicit deflation (Aberth), so
    /// that two starting points cannot settle on the same root.
    fn polish(&self, mut z: Vec<Complex64>, a: Complex64) -> Vec<Complex64> {
        let n = z.len();
        let mut done = vec![false; n];
        for _ in 0..100 {
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let repel: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| 1.0 / (z[i] - z[j]))
                    .sum();
                let step = 1.0 / (self.log_derivative(z[i], a) - repel);
                if !step.is_finite() {
                    done[i] = true;
                    continue;
                }
                z[i] -= step;
                // quadratic convergence: once the step is this small the
                // next one is below rounding
                if step.norm() <= 1e-9 * z[i].norm().max(1e-300) {
                    done[i] = true;
                }
            }
            if done.iter().all(|d| *d) {
                break;
            }
        }
        z
    }

    /// All roots of `κ(s) = a`, sorted by real part.
    pub fn roots(&self, a: Complex64) -> Result<Vec<Complex64>> {
        if !a.is_finite() {
            return Err(Error::InvalidInput(format!(
                "transform argument {a} is not finite"
            )));
        }
        let target = self.p.add(&self.q.scale(-a)).trimmed();
        let degree = target.degree();
        if degree != self.expected_degree() {
            return Err(Error::Roots(format!(
                "polynomial degree {degree}, expected {}",
                self.expected_degree()
            )));
        }
        let raw = target.roots(self.scale)?;
        let mut roots = self.polish(raw, a);
        let scale = self.scale.max(a.norm().sqrt());
        for r in &roots {
            let res = (self.model.kappa_unchecked(*r) - a).norm();
            // next to a pole κ is so steep that a root correct to the last
            // few bits still leaves a large residual
            let rounding = 64.0 * f64::EPSILON * r.norm() * self.model.kappa_derivative(*r).norm();
            let bound = (ROOT_RESIDUAL_TOL * (1.0 + a.norm())).max(rounding);
            if res.is_nan() || res > bound {
                return Err(Error::Roots(format!("root {r} has residual {res:.3e}")));
            }
            let near_pole = self
                .model
                .alphas()
                .map(|al| (r - al).norm())
                .chain(self.model.betas().map(|b| (r + b).norm()))
                .any(|d| d <= 1e-14 * scale);
            if near_pole {
                return Err(Error::Roots(format!("root {r} coincides with a pole")));
            }
        }
        roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                if (roots[i] - roots[j]).norm() < REPEATED_ROOT_TOL * scale {
                    return Err(Error::RepeatedRoot(roots[i]));
                }
            }
        }
        Ok(roots)
    }

    /// Roots with positive real part, count-checked.
    pub fn positive_roots(&self, a: Complex64) -> Result<Vec<Complex64>> {
        let roots = self.roots(a)?;
        let scale = self.scale.max(a.norm().sqrt());
        if let Some(r) = roots.iter().find(|r| r.re.abs() < CLASSIFY_GUARD * scale) {
            return Err(Error::Roots(format!(
                "root {r} too close to the imaginary axis to classify"
            )));
        }
        let positive: Vec<Complex64> = roots.into_iter().filter(|r| r.re > 0.0).collect();
        let expected = self.expected_positive_roots();
        if positive.len() != expected {
            return Err(Error::RootCount {
                expected,
                found: positive.len(),
            });
        }
        Ok(positive)
    }

    pub fn factor(&self, a: Complex64) -> Result<WienerHopfFactor> {
        if a.re.is_nan() || a.re <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "transform argument needs Re(a) > 0, got {a}"
            )));
        }
        let rho = self.positive_roots(a)?;
        let alphas: Vec<f64> = self.model.alphas().collect();
        let coeffs: Vec<Complex64> = rho
            .iter()
            .enumerate()
            .map(|(i, &ri)| {
                let num = alphas
                    .iter()
                    .fold(Complex64::new(1.0, 0.0), |acc, &al| acc * (1.0 - ri / al));
                let den = rho
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(Complex64::new(1.0, 0.0), |acc, (_, &rj)| {
                        acc * (1.0 - ri / rj)
                    });
                num / den
            })
            .collect();
        let atom = if rho.len() > alphas.len() {
            Complex64::new(0.0, 0.0)
        } else {
            rho.iter()
                .zip(&alphas)
                .fold(Complex64::new(1.0, 0.0), |acc, (r, al)| acc * r / al)
        };
        let factor = WienerHopfFactor {
            a,
            rho,
            coeffs,
            atom,
            alphas,
        };
        debug_assert!(
            (factor.coeffs.iter().sum::<Complex64>() + factor.atom - 1.0).norm() < 1e-8,
            "partial fraction coefficients do not sum to one"
        );
        Ok(factor)
    }
}

/// `φ⁺_a` in partial-fraction form.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerHopfFactor {
    pub a: Complex64,
    /// Roots of `κ(s) = a` with positive real part.
    pub rho: Vec<Complex64>,
    /// Partial fraction coefficients `A_k⁺`.
    pub coeffs: Vec<Complex64>,
    /// `P(M_{e(a)} = 0)`.
    pub atom: Complex64,
    alphas: Vec<f64>,
}

impl WienerHopfFactor {
    /// Rational form `Π(1 - s/α_i) / Π(1 - s/ρ_k)`.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let num = self
            .alphas
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &al| acc * (1.0 - s / al));
        let den = self
            .rho
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &r| acc * (1.0 - s / r));
        num / den
    }

    /// Partial-fraction form `atom + Σ A_k (-ρ_k)/(s - ρ_k)`.
    pub fn eval_partial_fractions(&self, s: Complex64) -> Complex64 {
        self.atom
            + self
                .rho
                .iter()
                .zip(&self.coeffs)
                .map(|(r, c)| c * (-r) / (s - r))
                .sum::<Complex64>()
    }

    /// `P(M_{e(a)} > x) = Σ A_k e^{-ρ_k x}`, equal to `E[e^{-a T_x}]`.
    pub fn tail(&self, x: f64) -> Complex64 {
        self.rho
            .iter()
            .zip(&self.coeffs)
            .map(|(r, c)| c * (-r * x).exp())
            .sum()
    }
}

/// All roots of `κ(s) = a`.
pub fn kappa_roots(model: &HyperExpLevyModel, a: Complex64) -> Result<Vec<Complex64>> {
    RootSolver::new(model)?.roots(a)
}

pub fn wh_plus_factor(model: &HyperExpLevyModel, a: Complex64) -> Result<WienerHopfFactor> {
    RootSolver::new(model)?.factor(a)
}

/// Laplace transforms of the first passage time over `x > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassageTransform {
    /// Transform of `t ↦ P(T_x < t)`.
    pub cdf: Complex64,
    /// Transform of the passage density, `E[e^{-a T_x}]`.
    pub density: Complex64,
}

pub fn passage_from_factor(factor: &WienerHopfFactor, x: f64) -> PassageTransform {
    let density = factor.tail(x);
    PassageTransform {
        cdf: density / factor.a,
        density,
    }
}

fn check_level(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "barrier distance must be positive, got {x}"
        )));
    }
    Ok(())
}

pub fn first_passage_transform(
    model: &HyperExpLevyModel,
    x: f64,
    a: Complex64,
) -> Result<PassageTransform> {
    check_level(x)?;
    Ok(passage_from_factor(&wh_plus_factor(model, a)?, x))
}

/// Log-distance `-ln b` to a down barrier at fraction `b` of spot.
pub fn down_distance(b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidInput(format!(
            "barrier fraction must lie in (0, 1), got {b}"
        )));
    }
    Ok(-b.ln())
}

/// First passage of `X` below `ln b`, computed as `-X` passing above `-ln b`.
pub fn down_crossing_transform(
    model: &HyperExpLevyModel,
    b: f64,
    a: Complex64,
) -> Result<PassageTransform> {
    let x = down_distance(b)?;
    first_passage_transform(&model.reflect(), x, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperexp::{CgmyParams, ExpMixtureFit};
    use crate::levymodel::DiffusionConfig;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn stylized() -> HyperExpLevyModel {
        let p = CgmyParams::new(0.5, 2.0, 10.0, 0.5).unwrap();
        HyperExpLevyModel::assemble(
            &p,
            &ExpMixtureFit::preset(),
            &DiffusionConfig::default(),
            0.05,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn brownian_roots_are_quadratic_roots() {
        let m = HyperExpLevyModel::brownian(0.1, 0.04).unwrap();
        let a = 0.7;
        let roots = kappa_roots(&m, c(a, 0.0)).unwrap();
        let disc = (0.1f64 * 0.1 + 2.0 * 0.04 * a).sqrt();
        let expect = [(-0.1 - disc) / 0.04, (-0.1 + disc) / 0.04];
        assert_eq!(roots.len(), 2);
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).norm() < 1e-12 * e.abs());
        }
        let f = wh_plus_factor(&m, c(a, 0.0)).unwrap();
        assert_eq!(f.coeffs.len(), 1);
        assert!((f.coeffs[0] - 1.0).norm() < 1e-15);
        assert_eq!(f.atom, c(0.0, 0.0));
    }

    #[test]
    fn coefficients_sum_to_one_with_diffusion() {
        let m = stylized();
        for a in [c(1.0, 0.0), c(0.3, 5.0), c(20.0, -40.0)] {
            let f = wh_plus_factor(&m, a).unwrap();
            assert_eq!(f.rho.len(), 7);
            assert!((f.coeffs.iter().sum::<Complex64>() - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn atom_without_diffusion_and_negative_drift() {
        let mut m = stylized();
        m.sigma2 = 0.0;
        m.mu = -0.2;
        let f = wh_plus_factor(&m, c(1.0, 0.0)).unwrap();
        assert_eq!(f.rho.len(), 6);
        let expect: f64 = f
            .rho
            .iter()
            .zip(m.alphas())
            .map(|(r, a)| r.re / a)
            .product();
        assert!((f.atom.re - expect).abs() < 1e-14);
        assert!(f.atom.re > 0.0 && f.atom.re < 1.0);
        assert!((f.coeffs.iter().sum::<Complex64>() + f.atom - 1.0).norm() < 1e-10);
    }

    #[test]
    fn positive_drift_without_diffusion_has_no_atom() {
        let mut m = stylized();
        m.sigma2 = 0.0;
        m.mu = 0.2;
        let f = wh_plus_factor(&m, c(1.0, 0.0)).unwrap();
        assert_eq!(f.rho.len(), 7);
        assert_eq!(f.atom, c(0.0, 0.0));
    }

    #[test]
    fn passage_transform_limits() {
        let m = stylized();
        let a = c(1.0, 0.0);
        let near = first_passage_transform(&m, 1e-12, a).unwrap();
        assert!((near.density - 1.0).norm() < 1e-9);
        let far = first_passage_transform(&m, 200.0, a).unwrap();
        assert!(far.density.norm() < 1e-12);
        assert!(first_passage_transform(&m, 0.0, a).is_err());
    }

    #[test]
    fn down_crossing_is_reflected_up_crossing() {
        let m = stylized();
        let a = c(1.0, 0.0);
        let d = down_crossing_transform(&m, 0.3, a).unwrap();
        let u = first_passage_transform(&m.reflect(), (10.0f64 / 3.0).ln(), a).unwrap();
        assert!((d.density - u.density).norm() < 1e-15);
        assert!(down_crossing_transform(&m, 1.0, a).is_err());
        assert!(down_crossing_transform(&m, 0.0, a).is_err());
    }

    #[test]
    fn rejects_left_half_plane() {
        assert!(wh_plus_factor(&stylized(), c(-1.0, 0.0)).is_err());
    }
}
