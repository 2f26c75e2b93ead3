//! Compactly supported product-polynomial test functions on `[-1, 1]^d`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Univariate polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::new(vec![1.0]), |acc, _| acc.mul(self))
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let e = (k + 1) as i32;
                c * (b.powi(e) - a.powi(e)) / e as f64
            })
            .sum()
    }
}

/// `φ(x) = c ∏_k p(x_k)` on `[-1, 1]^d`, zero outside.
///
/// Partial derivatives are exact: each axis keeps the coefficient lists of
/// `p, p', p'', ...` so a mixed partial is a product of stored derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TestKernel {
    dim: usize,
    normalization: f64,
    /// `derivatives[m]` is the m-th derivative of the univariate factor.
    derivatives: Vec<Polynomial>,
    /// Number of derivative orders (starting at 0) that vanish at `±1`.
    boundary_order: usize,
    label: &'static str,
}

/// Highest total derivative order exposed; enough for a third-order
/// operator plus one spare order.
const MAX_ORDER: usize = 4;

impl TestKernel {
    fn from_factor(dim: usize, factor: Polynomial, label: &'static str) -> Self {
        let mass = factor.integrate(-1.0, 1.0);
        let normalization = mass.powi(dim as i32).recip();
        let mut derivatives = vec![factor];
        for m in 0..MAX_ORDER {
            let next = derivatives[m].derivative();
            derivatives.push(next);
        }
        let boundary_order = derivatives
            .iter()
            .take_while(|p| p.eval(1.0).abs() < 1e-12 && p.eval(-1.0).abs() < 1e-12)
            .count();
        Self {
            dim,
            normalization,
            derivatives,
            boundary_order,
            label,
        }
    }

    /// `φ(x₁, x₂) = c₂ (1 − x₁⁴)(1 − x₂⁴)` with `c₂ = 25/64`.
    pub fn quartic(dim: usize) -> Result<Self> {
        if dim != 2 {
            return Err(Error::UnsupportedDimension {
                got: dim,
                reason: "the quartic product kernel is defined for d = 2",
            });
        }
        Ok(Self::from_factor(
            dim,
            Polynomial::new(vec![1.0, 0.0, 0.0, 0.0, -1.0]),
            "quartic",
        ))
    }

    /// `φ(x) ∝ ∏ (1 − x_k²)^power`; the first `power` derivative orders vanish
    /// on the boundary, so the distributional and pointwise derivatives agree.
    pub fn bump(dim: usize, power: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension {
                got: dim,
                reason: "dimension must be positive",
            });
        }
        if power == 0 {
            return Err(Error::param("power", "must be at least 1"));
        }
        Ok(Self::from_factor(
            dim,
            Polynomial::new(vec![1.0, 0.0, -1.0]).pow(power),
            "bump",
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    /// Per-axis polynomial degree of `φ` on its support.
    pub fn degree(&self) -> usize {
        self.derivatives[0].degree()
    }

    pub fn max_order(&self) -> usize {
        MAX_ORDER
    }

    /// Count of derivative orders `0..k` that vanish on `∂[-1,1]^d`, capped at
    /// the number of stored orders.
    pub fn boundary_vanishing_orders(&self) -> usize {
        self.boundary_order
    }

    pub fn factor_derivative(&self, order: usize) -> &Polynomial {
        &self.derivatives[order]
    }

    pub fn in_support(x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= 1.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        if !Self::in_support(x) {
            return 0.0;
        }
        let p = &self.derivatives[0];
        x.iter()
            .fold(self.normalization, |acc, &xk| acc * p.eval(xk))
    }

    /// Mixed partial `∂^alpha φ(x)`; `alpha[k]` is the order along axis `k`.
    pub fn partial(&self, alpha: &[u8], x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if !Self::in_support(x) {
            return 0.0;
        }
        let mut v = self.normalization;
        for (k, &xk) in x.iter().enumerate() {
            let order = alpha.get(k).copied().unwrap_or(0) as usize;
            assert!(order <= MAX_ORDER, "derivative order {order} not exposed");
            v *= self.derivatives[order].eval(xk);
        }
        v
    }

    /// `∂_s φ(x)`.
    pub fn directional(&self, s: &[f64], x: &[f64]) -> f64 {
        let mut alpha = vec![0u8; self.dim];
        let mut total = 0.0;
        for k in 0..self.dim {
            if s[k] == 0.0 {
                continue;
            }
            alpha[k] = 1;
            total += s[k] * self.partial(&alpha, x);
            alpha[k] = 0;
        }
        total
    }

    /// Fourier transform `∫ e^{-iω·u} φ(u) du` of the univariate factor
    /// `p` (unnormalised), by composite Gauss–Legendre quadrature with the
    /// cell count growing with `|ω|`.
    pub fn factor_fourier(&self, omega: f64) -> Complex64 {
        let p = &self.derivatives[0];
        let cells = 1 + (omega.abs() / 40.0).ceil() as usize;
        let rule = GaussLegendre::new(32);
        let re = rule.integrate_box_composite(&[-1.0], &[1.0], cells, |u| {
            p.eval(u[0]) * (omega * u[0]).cos()
        });
        let im = -rule.integrate_box_composite(&[-1.0], &[1.0], cells, |u| {
            p.eval(u[0]) * (omega * u[0]).sin()
        });
        Complex64::new(re, im)
    }

    /// `ℱ(∂_s φ)(y) = i (s·y) ℱφ(y)`.
    pub fn directional_fourier(&self, s: &[f64], y: &[f64]) -> Complex64 {
        let mut ft = Complex64::new(self.normalization, 0.0);
        let mut sy = 0.0;
        for k in 0..self.dim {
            ft *= self.factor_fourier(y[k]);
            sy += s[k] * y[k];
        }
        Complex64::new(0.0, sy) * ft
    }
}
