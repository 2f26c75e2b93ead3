//! Run configuration: a TOML file with nested sections, overridable by flags.

use std::path::PathBuf;

use msdeconv::estimator::{Sample, DEFAULT_DENSITY_FLOOR};
use msdeconv::inference::{
    build_grid, planar_directions, AnnulusConfig, Candidates, GridScale, TestSetup, TripleGrid,
};
use msdeconv::kernel::{ErrorModel, TestKernel};
use msdeconv::limit::{DEFAULT_CALIBRATION_REPS, DEFAULT_KAPPA_REPS};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: f64,
    /// Multiplier applied to every critical value, as found by `calibrate`.
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub modes: ModesConfig,
    pub calibration: CalibrationSection,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            alpha: 0.05,
            gamma: 1.0,
            input: None,
            output_dir: None,
            threads: None,
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            modes: ModesConfig::default(),
            calibration: CalibrationSection::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Quartic,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kernel: KernelChoice,
    pub bump_power: u32,
    pub sigma: f64,
    /// Build kernels by numerical Fourier inversion instead of the closed form.
    pub spectral: bool,
    pub kappa_reps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    pub density_floor: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::Quartic,
            bump_power: 6,
            sigma: 0.075,
            spectral: false,
            kappa_reps: DEFAULT_KAPPA_REPS,
            bandwidth: None,
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Directions {
    /// Equally spaced planar directions starting at angle 0.
    Count(usize),
    List(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Lower corner; the 10% sample quantiles when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    /// Upper corner; the 90% sample quantiles when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    pub scales: Vec<ScaleConfig>,
    pub directions: Directions,
    pub symmetric: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: None,
            hi: None,
            scales: vec![ScaleConfig {
                h: 0.5,
                width: None,
            }],
            directions: Directions::Count(8),
            symmetric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    /// Candidate points; every grid location when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<f64>>>,
    pub c: f64,
    /// Lower annulus multiplier; `2√d` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    pub angle_tolerance_deg: f64,
    pub threshold_c: f64,
}

impl Default for ModesConfig {
    fn default() -> Self {
        let a = AnnulusConfig::default();
        Self {
            candidates: None,
            c: a.c,
            lower: a.lower,
            angle_tolerance_deg: a.angle_tolerance_deg,
            threshold_c: msdeconv::inference::DEFAULT_THRESHOLD_C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationRule {
    /// Any two-sided rejection anywhere on the grid.
    AnyRejection,
    /// All triples of the first candidate's annulus reject.
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub reps: usize,
    /// Widening of the grid's support hull for the flat null.
    pub margin: f64,
    pub rule: CalibrationRule,
    /// Null sample size; the input size when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            reps: DEFAULT_CALIBRATION_REPS,
            margin: 1.0,
            rule: CalibrationRule::AnyRejection,
            n: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SignalChoice {
    Normal,
    Square,
    Bimodal,
    BimodalAsymmetric,
    Trimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub signal: SignalChoice,
    pub n: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            signal: SignalChoice::Trimodal,
            n: 2000,
        }
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {reason}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid("gamma", "must lie in (0, 1]"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be positive"));
        }
        let m = &self.model;
        if !(m.sigma >= 0.0 && m.sigma.is_finite()) {
            return Err(invalid(
                "model.sigma",
                "must be a finite non-negative number",
            ));
        }
        if m.kappa_reps < 100 {
            return Err(invalid(
                "model.kappa_reps",
                "needs at least 100 replications",
            ));
        }
        if m.bandwidth.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
            return Err(invalid("model.bandwidth", "must be positive"));
        }
        if !(m.density_floor > 0.0) {
            return Err(invalid("model.density_floor", "must be positive"));
        }
        if m.kernel == KernelChoice::Bump && m.bump_power < 2 {
            return Err(invalid("model.bump_power", "must be at least 2"));
        }
        let g = &self.grid;
        if g.scales.is_empty() {
            return Err(invalid("grid.scales", "no scales given"));
        }
        if let Some(s) = g.scales.iter().find(|s| !(s.h > 0.0 && s.h.is_finite())) {
            return Err(invalid(
                "grid.scales",
                format!("scale {} is not positive", s.h),
            ));
        }
        if g.scales.iter().any(|s| s.width.is_some_and(|w| !(w > 0.0))) {
            return Err(invalid("grid.scales", "widths must be positive"));
        }
        match &g.directions {
            Directions::Count(0) => return Err(invalid("grid.directions", "no directions given")),
            Directions::List(l) if l.is_empty() => {
                return Err(invalid("grid.directions", "no directions given"))
            }
            _ => {}
        }
        if let (Some(lo), Some(hi)) = (&g.lo, &g.hi) {
            if lo.len() != hi.len() || lo.is_empty() {
                return Err(invalid(
                    "grid.lo",
                    "lo and hi must have the same non-zero length",
                ));
            }
            if lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Err(invalid(
                    "grid.hi",
                    "every upper bound must be at least the lower bound",
                ));
            }
        }
        let md = &self.modes;
        if !(md.c > 0.0) {
            return Err(invalid("modes.c", "must be positive"));
        }
        if !(md.angle_tolerance_deg >= 0.0 && md.angle_tolerance_deg <= 180.0) {
            return Err(invalid("modes.angle_tolerance_deg", "must lie in [0, 180]"));
        }
        if !(md.threshold_c > 0.0) {
            return Err(invalid("modes.threshold_c", "must be positive"));
        }
        let c = &self.calibration;
        if c.reps < 500 {
            return Err(invalid(
                "calibration.reps",
                "needs at least 500 replications",
            ));
        }
        if !(c.margin >= 0.0) {
            return Err(invalid("calibration.margin", "must be non-negative"));
        }
        if c.n == Some(0) {
            return Err(invalid("calibration.n", "must be positive"));
        }
        if self.simulate.n == 0 {
            return Err(invalid("simulate.n", "must be positive"));
        }
        Ok(())
    }

    pub fn error_model(&self) -> Result<ErrorModel, CliError> {
        let e = if self.model.spectral {
            ErrorModel::laplace_as_spectral(self.model.sigma)
        } else {
            ErrorModel::laplace(self.model.sigma)
        };
        e.map_err(|e| invalid("model.sigma", e))
    }

    pub fn test_kernel(&self, dim: usize) -> Result<TestKernel, CliError> {
        match self.model.kernel {
            KernelChoice::Quartic => TestKernel::quartic(dim),
            KernelChoice::Bump => TestKernel::bump(dim, self.model.bump_power),
        }
        .map_err(|e| invalid("model.kernel", e))
    }

    pub fn setup(&self, dim: usize) -> Result<TestSetup, CliError> {
        let mut setup = TestSetup::new(self.test_kernel(dim)?, self.error_model()?)
            .alpha(self.alpha)
            .seed(self.seed)
            .kappa_reps(self.model.kappa_reps);
        setup.bandwidth = self.model.bandwidth;
        setup.density_floor = self.model.density_floor;
        Ok(setup)
    }

    pub fn annulus(&self) -> AnnulusConfig {
        AnnulusConfig {
            c: self.modes.c,
            lower: self.modes.lower,
            angle_tolerance_deg: self.modes.angle_tolerance_deg,
        }
    }

    pub fn candidates(&self) -> Candidates {
        match &self.modes.candidates {
            Some(p) => Candidates::Points(p.clone()),
            None => Candidates::Auto,
        }
    }

    /// Grid bounds, filling absent corners from the sample.
    pub fn bounds(&self, sample: Option<&Sample>) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let fill = |q: f64| -> Result<Vec<f64>, CliError> {
            let s = sample.ok_or_else(|| {
                invalid(
                    "grid.lo",
                    "grid bounds are needed when no input data is given",
                )
            })?;
            Ok((0..s.dim())
                .map(|k| quantile(s.rows().map(|r| r[k]).collect(), q))
                .collect())
        };
        let lo = match &self.grid.lo {
            Some(v) => v.clone(),
            None => fill(0.1)?,
        };
        let hi = match &self.grid.hi {
            Some(v) => v.clone(),
            None => fill(0.9)?,
        };
        if lo.len() != hi.len() {
            return Err(invalid("grid.hi", "lo and hi differ in length"));
        }
        Ok((lo, hi))
    }

    pub fn grid(&self, sample: Option<&Sample>, n: usize) -> Result<TripleGrid, CliError> {
        let (lo, hi) = self.bounds(sample)?;
        if let Some(s) = sample {
            if s.dim() != lo.len() {
                return Err(invalid(
                    "grid.lo",
                    format!(
                        "grid has dimension {} but the data has {} columns",
                        lo.len(),
                        s.dim()
                    ),
                ));
            }
        }
        let directions = match &self.grid.directions {
            Directions::Count(k) => {
                if lo.len() != 2 {
                    return Err(invalid(
                        "grid.directions",
                        "a direction count needs planar data; list the directions",
                    ));
                }
                planar_directions(*k)
            }
            Directions::List(l) => l.clone(),
        };
        let scales: Vec<GridScale> = self
            .grid
            .scales
            .iter()
            .map(|s| match s.width {
                Some(width) => GridScale { h: s.h, width },
                None => GridScale::new(s.h),
            })
            .collect();
        build_grid(&lo, &hi, &scales, &directions, self.grid.symmetric, n)
            .map_err(|e| invalid("grid", e))
    }
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}
