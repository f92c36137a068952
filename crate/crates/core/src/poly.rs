//! Dense complex polynomials (ascending coefficients) and companion-matrix
//! root finding.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    /// `coeffs[k]` multiplies `s^k`.
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn constant(c: Complex64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// `c0 + c1 s`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Poly {
            coeffs: vec![Complex64::new(c0, 0.0), Complex64::new(c1, 0.0)],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly { coeffs: out }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or_default()
                    + other.coeffs.get(k).copied().unwrap_or_default()
            })
            .collect();
        Poly { coeffs }
    }

    pub fn scale(&self, c: Complex64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    /// Drops exactly-zero leading coefficients.
    pub fn trimmed(mut self) -> Poly {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            self.coeffs.pop();
        }
        self
    }

    /// All roots, from the eigenvalues of the companion matrix of the
    /// polynomial in the rescaled variable `z = s / scale`.
    pub fn roots(&self, scale: f64) -> Result<Vec<Complex64>> {
        let p = self.clone().trimmed();
        let n = p.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = p.coeffs[n];
        if lead.norm() == 0.0 || !lead.is_finite() {
            return Err(Error::Roots("degenerate leading coefficient".into()));
        }
        // monic in z: z^n + Σ c_k s^k/(lead scale^n) z^k... scaled per power
        let monic: Vec<Complex64> = (0..n)
            .map(|k| p.coeffs[k] / lead * scale.powi(k as i32 - n as i32))
            .collect();
        if monic.iter().any(|c| !c.is_finite()) {
            return Err(Error::Roots("non-finite coefficient".into()));
        }
        if n == 1 {
            return Ok(vec![-monic[0] * scale]);
        }
        let mut companion = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for (i, c) in monic.iter().enumerate() {
            companion[(i, n - 1)] = -c;
        }
        let schur =
            nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000).ok_or_else(|| {
                Error::Roots("companion eigenvalue iteration did not converge".into())
            })?;
        let (_, t) = schur.unpack();
        Ok((0..n).map(|i| t[(i, i)] * scale).collect())
    }
}
