use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CharacteristicFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Grid settings for kernels built by numerical Fourier inversion.
///
/// Frequencies are measured in the scaled coordinate `u = (x − t)/h`, so a
/// truncation of `truncation` corresponds to `|ξ| ≤ truncation / h` in the
/// original frequency variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub truncation: f64,
    /// Frequency nodes per axis inside `[-truncation, truncation)`.
    pub nodes: usize,
    /// Zero-padding factor; the spatial grid is `nodes * oversample` wide.
    pub oversample: usize,
    /// Largest accepted estimated relative error.
    pub tolerance: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            truncation: 40.0,
            nodes: 256,
            oversample: 8,
            tolerance: 1e-2,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            return Err(Error::param("truncation", "must be positive"));
        }
        if self.nodes < 8 || !self.nodes.is_multiple_of(2) {
            return Err(Error::param("nodes", "must be an even count of at least 8"));
        }
        if self.oversample == 0 {
            return Err(Error::param("oversample", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        Ok(())
    }

    /// Doubles truncation and node count, keeping the frequency spacing.
    pub fn refined(&self) -> Self {
        Self {
            truncation: 2.0 * self.truncation,
            nodes: 2 * self.nodes,
            ..*self
        }
    }
}

/// Known measurement-error law, described through its Fourier transform.
#[derive(Clone)]
pub enum ErrorModel {
    /// Symmetric multivariate Laplace, `ℱf_ε(y) = 1 / (1 + σ²‖y‖²/2)`.
    Laplace {
        sigma: f64,
    },
    Spectral(SpectralError),
}

#[derive(Clone)]
pub struct SpectralError {
    transform: CharacteristicFn,
    decay: f64,
    label: String,
    config: SpectralConfig,
}

impl SpectralError {
    pub fn new(label: impl Into<String>, decay: f64, transform: CharacteristicFn) -> Self {
        Self {
            transform,
            decay,
            label: label.into(),
            config: SpectralConfig::default(),
        }
    }

    pub fn with_config(mut self, config: SpectralConfig) -> Self {
        self.config = config;
        self
    }
}

impl fmt::Debug for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorModel::Laplace { sigma } => {
                f.debug_struct("Laplace").field("sigma", sigma).finish()
            }
            ErrorModel::Spectral(s) => f
                .debug_struct("Spectral")
                .field("label", &s.label)
                .field("decay", &s.decay)
                .field("config", &s.config)
                .finish(),
        }
    }
}

/// Outcome of the sampled two-sided decay check
/// `C_u (1+‖y‖²)^{-r/2} ≤ |ℱf_ε(y)| ≤ C_o (1+‖y‖²)^{-r/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    pub lower: f64,
    pub upper: f64,
}

impl DecayCheck {
    pub fn passes(&self, max_spread: f64) -> bool {
        self.lower > 0.0 && self.upper.is_finite() && self.upper / self.lower <= max_spread
    }
}

impl ErrorModel {
    pub fn laplace(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param(
                "sigma",
                format!("{sigma} must be finite and non-negative"),
            ));
        }
        Ok(ErrorModel::Laplace { sigma })
    }

    /// Generic ordinary-smooth error given by its Fourier transform.
    pub fn spectral(
        label: impl Into<String>,
        dim: usize,
        decay: f64,
        transform: CharacteristicFn,
    ) -> Result<Self> {
        let min_decay = if dim == 1 { 0.5 } else { 0.0 };
        if !(decay > min_decay && decay.is_finite()) {
            return Err(Error::param(
                "decay",
                format!("need r > {min_decay} in dimension {dim}, got {decay}"),
            ));
        }
        Ok(ErrorModel::Spectral(SpectralError::new(
            label, decay, transform,
        )))
    }

    /// The Laplace law expressed through the generic spectral variant, for
    /// cross-checking the numerical inversion against the closed form.
    pub fn laplace_as_spectral(sigma: f64) -> Result<Self> {
        Self::laplace(sigma)?;
        let s2 = sigma * sigma;
        Ok(ErrorModel::Spectral(SpectralError::new(
            format!("laplace-spectral({sigma})"),
            2.0,
            Arc::new(move |y: &[f64]| {
                let r2: f64 = y.iter().map(|v| v * v).sum();
                Complex64::new(1.0 / (1.0 + 0.5 * s2 * r2), 0.0)
            }),
        )))
    }

    pub fn with_spectral_config(self, config: SpectralConfig) -> Self {
        match self {
            ErrorModel::Spectral(s) => ErrorModel::Spectral(s.with_config(config)),
            other => other,
        }
    }

    pub fn fourier_transform(&self, y: &[f64]) -> Complex64 {
        match self {
            ErrorModel::Laplace { sigma } => {
                let r2: f64 = y.iter().map(|v| v * v).sum();
                Complex64::new(1.0 / (1.0 + 0.5 * sigma * sigma * r2), 0.0)
            }
            ErrorModel::Spectral(s) => (s.transform)(y),
        }
    }

    /// Decay exponent `r` of the Fourier transform.
    pub fn decay(&self) -> f64 {
        match self {
            ErrorModel::Laplace { .. } => 2.0,
            ErrorModel::Spectral(s) => s.decay,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            ErrorModel::Laplace { sigma } => Some(*sigma),
            ErrorModel::Spectral(_) => None,
        }
    }

    pub fn spectral_config(&self) -> SpectralConfig {
        match self {
            ErrorModel::Laplace { .. } => SpectralConfig::default(),
            ErrorModel::Spectral(s) => s.config,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ErrorModel::Laplace { sigma } => format!("laplace(sigma={sigma})"),
            ErrorModel::Spectral(s) => s.label.clone(),
        }
    }

    /// Samples `|ℱf_ε(y)| (1+‖y‖²)^{r/2}` on radii `10^{-1} .. 10^{3}` along the
    /// axes and the diagonal; returns the extreme ratios.
    pub fn check_decay(&self, dim: usize) -> DecayCheck {
        let r = self.decay();
        let mut lower = f64::INFINITY;
        let mut upper = 0.0_f64;
        let mut dirs: Vec<Vec<f64>> = (0..dim)
            .map(|k| (0..dim).map(|l| if l == k { 1.0 } else { 0.0 }).collect())
            .collect();
        dirs.push(vec![1.0 / (dim as f64).sqrt(); dim]);
        for dir in &dirs {
            for step in 0..=40 {
                let radius = 10f64.powf(-1.0 + step as f64 * 0.1);
                let y: Vec<f64> = dir.iter().map(|v| v * radius).collect();
                let ratio =
                    self.fourier_transform(&y).norm() * (1.0 + radius * radius).powf(0.5 * r);
                lower = lower.min(ratio);
                upper = upper.max(ratio);
            }
        }
        DecayCheck { lower, upper }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn laplace_transform_matches_closed_form() {
        let e = ErrorModel::laplace(0.5).unwrap();
        for y in [[1.0, 0.0], [0.0, 2.0], [1.0, 1.0], [-3.0, 0.5]] {
            let want = 1.0 / (1.0 + 0.125 * (y[0] * y[0] + y[1] * y[1]));
            assert_relative_eq!(e.fourier_transform(&y).re, want, epsilon = 1e-15);
            assert_eq!(e.fourier_transform(&y).im, 0.0);
        }
    }

    #[test]
    fn laplace_passes_decay_check() {
        let check = ErrorModel::laplace(0.3).unwrap().check_decay(2);
        // ratio runs between 1 and 2/σ².
        assert!(check.passes(1e3), "{check:?}");
        assert_relative_eq!(check.upper, 2.0 / 0.09, max_relative = 0.01);
    }

    #[test]
    fn no_noise_fails_decay_check() {
        // σ = 0 has a flat transform, not a decaying one.
        let check = ErrorModel::laplace(0.0).unwrap().check_decay(2);
        assert!(!check.passes(1e4));
    }

    #[test]
    fn spectral_requires_decay_above_half_in_1d() {
        let cf: CharacteristicFn = Arc::new(|_| Complex64::new(1.0, 0.0));
        assert!(ErrorModel::spectral("x", 1, 0.4, cf.clone()).is_err());
        assert!(ErrorModel::spectral("x", 2, 0.4, cf).is_ok());
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(ErrorModel::laplace(-0.1).is_err());
    }
}
