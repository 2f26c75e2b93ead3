//! Test functions and deconvolution kernels `F_{s,t,h}`.
//!
//! `F_{s,t,h} = ℱ^{-1}(ℱ(∂_s φ_{t,h}) / conj(ℱ f_ε))` with
//! `φ_{t,h}(x) = h^{-d} φ((x − t)/h)`. For Laplace errors the quotient is a
//! polynomial in the frequency, so the kernel is the differential operator
//! `(1 − σ²/2 Δ) ∂_s` applied to `φ_{t,h}`; other error laws go through a
//! numerical inverse FFT.

mod error_model;
mod spectral;
mod test_function;
mod triple;

pub use error_model::{CharacteristicFn, DecayCheck, ErrorModel, SpectralConfig, SpectralError};
pub use spectral::{SpectralDiagnostics, SpectralKernel};
pub use test_function::{Polynomial, TestKernel};
pub use triple::Triple;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Dimensions handled by the stack-allocated closed-form evaluator.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone)]
pub struct DeconvKernel {
    triple: Triple,
    error: ErrorModel,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    ClosedForm(ClosedForm),
    Spectral(SpectralKernel),
}

#[derive(Debug, Clone)]
struct ClosedForm {
    kernel: TestKernel,
    sigma: f64,
    /// `h^{-d-1}` and `σ²/2 · h^{-d-3}`.
    first_order: f64,
    third_order: f64,
}

impl ClosedForm {
    fn new(kernel: TestKernel, sigma: f64, triple: &Triple) -> Self {
        let d = triple.dim() as i32;
        let h = triple.scale();
        Self {
            kernel,
            sigma,
            first_order: h.powi(-d - 1),
            third_order: 0.5 * sigma * sigma * h.powi(-d - 3),
        }
    }

    fn evaluate(&self, triple: &Triple, x: &[f64]) -> f64 {
        let d = triple.dim();
        let h = triple.scale();
        let t = triple.location();
        let s = triple.direction();
        // vals[k][m] = p^{(m)}(u_k)
        let mut vals = [[0.0f64; 4]; MAX_DIM];
        for k in 0..d {
            let u = (x[k] - t[k]) / h;
            if !(u.abs() <= 1.0) {
                return 0.0;
            }
            for (m, slot) in vals[k].iter_mut().enumerate() {
                *slot = self.kernel.factor_derivative(m).eval(u);
            }
        }
        let mut first = 0.0;
        let mut third = 0.0;
        for k in 0..d {
            if s[k] == 0.0 {
                continue;
            }
            let mut rest = 1.0;
            for (l, row) in vals.iter().enumerate().take(d) {
                if l != k {
                    rest *= row[0];
                }
            }
            first += s[k] * vals[k][1] * rest;
            if self.third_order != 0.0 {
                // ∂_k³ term plus ∂_l² ∂_k for l ≠ k.
                let mut lap = vals[k][3] * rest;
                for l in 0..d {
                    if l == k {
                        continue;
                    }
                    let mut others = 1.0;
                    for (m, row) in vals.iter().enumerate().take(d) {
                        if m != k && m != l {
                            others *= row[0];
                        }
                    }
                    lap += vals[k][1] * vals[l][2] * others;
                }
                third += s[k] * lap;
            }
        }
        self.kernel.normalization() * (self.first_order * first - self.third_order * third)
    }
}

impl DeconvKernel {
    /// Closed-form Laplace kernel `(∂_s − σ²/2 Σ_k ∂²_{e^k} ∂_s) φ_{t,h}`.
    pub fn laplace(kernel: &TestKernel, triple: &Triple, sigma: f64) -> Result<Self> {
        if kernel.dim() != triple.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: triple.dim(),
            });
        }
        if kernel.dim() > MAX_DIM {
            return Err(Error::UnsupportedDimension {
                got: kernel.dim(),
                reason: "closed-form evaluator supports at most 8 dimensions",
            });
        }
        let error = ErrorModel::laplace(sigma)?;
        Ok(Self {
            triple: triple.clone(),
            error,
            repr: Repr::ClosedForm(ClosedForm::new(kernel.clone(), sigma, triple)),
        })
    }

    /// Kernel obtained by numerical Fourier inversion with the error model's
    /// own grid settings.
    pub fn spectral(kernel: &TestKernel, triple: &Triple, error: &ErrorModel) -> Result<Self> {
        Self::spectral_with(kernel, triple, error, &error.spectral_config())
    }

    pub fn spectral_with(
        kernel: &TestKernel,
        triple: &Triple,
        error: &ErrorModel,
        config: &SpectralConfig,
    ) -> Result<Self> {
        let grid = SpectralKernel::build(kernel, triple, error, config)?;
        Ok(Self {
            triple: triple.clone(),
            error: error.clone(),
            repr: Repr::Spectral(grid),
        })
    }

    /// Closed form for Laplace errors, spectral inversion otherwise.
    pub fn for_model(kernel: &TestKernel, triple: &Triple, error: &ErrorModel) -> Result<Self> {
        match error {
            ErrorModel::Laplace { sigma } => Self::laplace(kernel, triple, *sigma),
            ErrorModel::Spectral(_) => Self::spectral(kernel, triple, error),
        }
    }

    pub fn triple(&self) -> &Triple {
        &self.triple
    }

    pub fn error_model(&self) -> &ErrorModel {
        &self.error
    }

    pub fn dim(&self) -> usize {
        self.triple.dim()
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::ClosedForm(_))
    }

    pub fn spectral_grid(&self) -> Option<&SpectralKernel> {
        match &self.repr {
            Repr::Spectral(g) => Some(g),
            Repr::ClosedForm(_) => None,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::ClosedForm(c) => c.evaluate(&self.triple, x),
            Repr::Spectral(g) => g.evaluate(&self.triple, x),
        }
    }

    /// Box outside which `evaluate` returns zero.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.repr {
            Repr::ClosedForm(_) => self.triple.support_box(),
            Repr::Spectral(g) => g.support_box(&self.triple),
        }
    }

    /// Per-axis degree of the polynomial pieces (closed form only).
    pub fn polynomial_degree(&self) -> Option<usize> {
        match &self.repr {
            Repr::ClosedForm(c) => Some(c.kernel.degree()),
            Repr::Spectral(_) => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match &self.repr {
            Repr::ClosedForm(c) => Some(c.sigma),
            Repr::Spectral(_) => None,
        }
    }

    /// `‖F‖_{L²}`.
    pub fn l2_norm(&self) -> Result<f64> {
        Ok(kernel_inner_product(self, self)?.sqrt())
    }
}

/// `∫ a(x) b(x) dx`.
///
/// Closed-form kernels are polynomials on their support boxes, so a single
/// Gauss–Legendre cell on the box intersection with
/// `⌈(deg_a + deg_b)/2⌉ + 1` nodes per axis is exact. Spectral kernels are
/// summed on the first kernel's grid.
pub fn kernel_inner_product(a: &DeconvKernel, b: &DeconvKernel) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    match (&a.repr, &b.repr) {
        (Repr::ClosedForm(ca), Repr::ClosedForm(cb)) => {
            let (alo, ahi) = a.support_box();
            let (blo, bhi) = b.support_box();
            let lo: Vec<f64> = alo.iter().zip(&blo).map(|(x, y)| x.max(*y)).collect();
            let hi: Vec<f64> = ahi.iter().zip(&bhi).map(|(x, y)| x.min(*y)).collect();
            if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
                return Ok(0.0);
            }
            let nodes = (ca.kernel.degree() + cb.kernel.degree()).div_ceil(2) + 1;
            let rule = GaussLegendre::new(nodes);
            Ok(rule.integrate_box(&lo, &hi, |x| a.evaluate(x) * b.evaluate(x)))
        }
        (Repr::Spectral(ga), Repr::Spectral(gb)) => {
            if !ga.shares_grid_with(gb)
                || a.triple.scale() != b.triple.scale()
                || a.error.label() != b.error.label()
            {
                return Err(Error::IncompatibleKernels(
                    "spectral kernels need the same scale, error model and grid".into(),
                ));
            }
            Ok(ga.inner_product(&a.triple, |x| b.evaluate(x)))
        }
        _ => Err(Error::IncompatibleKernels(
            "cannot mix closed-form and spectral kernels".into(),
        )),
    }
}
