use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

/// One test configuration: direction `s`, location `t`, scale `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    direction: Vec<f64>,
    location: Vec<f64>,
    scale: f64,
}

impl Triple {
    pub fn new(direction: Vec<f64>, location: Vec<f64>, scale: f64) -> Result<Self> {
        if direction.is_empty() {
            return Err(Error::param("direction", "empty vector"));
        }
        if direction.len() != location.len() {
            return Err(Error::DimensionMismatch {
                expected: direction.len(),
                got: location.len(),
            });
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(Error::param("direction", format!("norm {norm} is not 1")));
        }
        if location.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("location", "non-finite coordinate"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param(
                "scale",
                format!("{scale} is not a positive finite number"),
            ));
        }
        Ok(Self {
            direction,
            location,
            scale,
        })
    }

    /// Normalises `direction` before validating.
    pub fn normalized(direction: Vec<f64>, location: Vec<f64>, scale: f64) -> Result<Self> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::param("direction", "zero or non-finite vector"));
        }
        Self::new(
            direction.iter().map(|v| v / norm).collect(),
            location,
            scale,
        )
    }

    /// Planar triple with direction `(cos θ, sin θ)`.
    pub fn planar(angle: f64, location: [f64; 2], scale: f64) -> Result<Self> {
        Self::normalized(vec![angle.cos(), angle.sin()], location.to_vec(), scale)
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `(−s, t, h)`.
    pub fn negated(&self) -> Self {
        Self {
            direction: self.direction.iter().map(|v| -v).collect(),
            location: self.location.clone(),
            scale: self.scale,
        }
    }

    /// Same direction and scale at a new location.
    pub fn moved_to(&self, location: Vec<f64>) -> Result<Self> {
        Self::new(self.direction.clone(), location, self.scale)
    }

    /// The cube `[t − h, t + h]^d` on which the compactly supported kernels live.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.location.iter().map(|t| t - self.scale).collect();
        let hi = self.location.iter().map(|t| t + self.scale).collect();
        (lo, hi)
    }
}
