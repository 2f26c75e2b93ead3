//! Gaussian limit of the normalised statistics, the multiscale quantile and
//! its calibration.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::{weights, Sample, Weights};
use crate::kernel::{kernel_inner_product, DeconvKernel, Triple};
use crate::rng::{map_indexed, stream, StreamRng};

pub const EIGEN_FLOOR: f64 = 1e-10;
pub const DEFAULT_KAPPA_REPS: usize = 1000;
pub const DEFAULT_CALIBRATION_REPS: usize = 2000;

/// Joint law of `(X̃_j)_j`: unit-variance Gaussians with the kernels'
/// correlation, shifted and scaled by the per-scale weights.
#[derive(Debug, Clone)]
pub struct LimitModel {
    triples: Vec<Triple>,
    correlation: DMatrix<f64>,
    weights: Vec<Weights>,
    factor: DMatrix<f64>,
    smallest_eigenvalue: f64,
}

impl LimitModel {
    pub fn new(kernels: &[DeconvKernel]) -> Result<Self> {
        let p = kernels.len();
        if p == 0 {
            return Err(Error::DegenerateModel("no triples".into()));
        }
        let norms = map_indexed(p, |j| kernels[j].l2_norm());
        let norms: Vec<f64> = norms.into_iter().collect::<Result<_>>()?;
        if let Some(j) = norms.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::DegenerateModel(format!(
                "kernel {j} has norm {}",
                norms[j]
            )));
        }
        let rows = map_indexed(p, |j| -> Result<Vec<f64>> {
            (j + 1..p)
                .map(
                    |k| Ok(kernel_inner_product(&kernels[j], &kernels[k])? / (norms[j] * norms[k])),
                )
                .collect()
        });
        let mut correlation = DMatrix::identity(p, p);
        for (j, row) in rows.into_iter().enumerate() {
            for (off, c) in row?.into_iter().enumerate() {
                let k = j + 1 + off;
                correlation[(j, k)] = c;
                correlation[(k, j)] = c;
            }
        }
        let dim = kernels[0].dim();
        let triples: Vec<Triple> = kernels.iter().map(|k| k.triple().clone()).collect();
        let weights = triples.iter().map(|t| weights(t.scale(), dim)).collect();
        Self::from_parts(triples, correlation, weights)
    }

    /// Builds the model from a precomputed correlation matrix.
    pub fn from_parts(
        triples: Vec<Triple>,
        correlation: DMatrix<f64>,
        weights: Vec<Weights>,
    ) -> Result<Self> {
        let p = triples.len();
        if correlation.nrows() != p || correlation.ncols() != p || weights.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: correlation.nrows(),
            });
        }
        let eigen = SymmetricEigen::new(correlation.clone());
        let smallest_eigenvalue = eigen.eigenvalues.min();
        let floored = eigen.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
        let regularized =
            &eigen.eigenvectors * DMatrix::from_diagonal(&floored) * eigen.eigenvectors.transpose();
        let regularized = (&regularized + regularized.transpose()) * 0.5;
        let factor = Cholesky::new(regularized)
            .ok_or(Error::Factorization { floor: EIGEN_FLOOR })?
            .unpack();
        Ok(Self {
            triples,
            correlation,
            weights,
            factor,
            smallest_eigenvalue,
        })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn weights(&self) -> &[Weights] {
        &self.weights
    }

    /// Lower-triangular factor of the regularised correlation.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Smallest eigenvalue of the correlation before flooring.
    pub fn smallest_eigenvalue(&self) -> f64 {
        self.smallest_eigenvalue
    }

    /// `max_j w_j (|z_j| − w̃_j)` for one draw of `z`.
    pub fn draw_maximum(&self, rng: &mut StreamRng) -> f64 {
        let p = self.len();
        let g = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let z = &self.factor * g;
        z.iter()
            .zip(&self.weights)
            .map(|(zj, w)| w.w * (zj.abs() - w.w_tilde))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleQuantile {
    pub alpha: f64,
    pub kappa: f64,
    pub reps: usize,
    pub seed: u64,
    pub empirical_cdf_at_kappa: f64,
}

/// `κ_n(α)`: the `⌈(1 − α) reps⌉`-th order statistic of simulated maxima.
pub fn simulate_kappa(
    model: &LimitModel,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<MultiscaleQuantile> {
    let maxima = simulate_maxima(model, reps, seed)?;
    quantile_from_maxima(maxima, alpha, seed)
}

/// Simulated `max_j X̃_j`, one per replication, in replication order.
pub fn simulate_maxima(model: &LimitModel, reps: usize, seed: u64) -> Result<Vec<f64>> {
    if reps < 100 {
        return Err(Error::param("reps", format!("{reps} < 100")));
    }
    let maxima = map_indexed(reps, |i| model.draw_maximum(&mut stream(seed, i as u64)));
    if maxima.iter().any(|m| !m.is_finite()) {
        return Err(Error::DegenerateModel(
            "non-finite simulated maximum".into(),
        ));
    }
    Ok(maxima)
}

pub fn quantile_from_maxima(
    mut maxima: Vec<f64>,
    alpha: f64,
    seed: u64,
) -> Result<MultiscaleQuantile> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("{alpha} is not in (0, 1)")));
    }
    let reps = maxima.len();
    maxima.sort_by(f64::total_cmp);
    let rank = (((1.0 - alpha) * reps as f64).ceil() as usize).clamp(1, reps);
    let kappa = maxima[rank - 1];
    let below = maxima.partition_point(|m| *m <= kappa);
    Ok(MultiscaleQuantile {
        alpha,
        kappa,
        reps,
        seed,
        empirical_cdf_at_kappa: below as f64 / reps as f64,
    })
}

/// A test whose critical values are all multiplied by `γ`.
pub trait TestPipeline: Sync {
    /// The test on `sample` rejects at multiplier `γ` exactly when the
    /// returned margin exceeds `γ`.
    fn rejection_margin(&self, sample: &Sample) -> Result<f64>;
}

/// Draws synthetic datasets satisfying the null hypothesis.
pub trait NullSampler: Sync {
    fn draw(&self, rng: &mut StreamRng) -> Result<Sample>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// Accepted absolute deviation of the calibrated level from `alpha`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl CalibrationConfig {
    pub fn new(alpha: f64, reps: usize, seed: u64) -> Self {
        Self {
            alpha,
            reps,
            seed,
            tolerance: 0.005,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub gamma: f64,
    pub level: f64,
    pub uncalibrated_level: f64,
    pub reps: usize,
    pub seed: u64,
    /// `(γ, empirical level)` at every bisection step.
    pub level_curve: Vec<(f64, f64)>,
}

/// Rejection margins of the null datasets `0..reps`, each drawn from its
/// own stream so that every `γ` sees the same datasets.
pub fn null_margins<P: TestPipeline, S: NullSampler>(
    pipeline: &P,
    sampler: &S,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    map_indexed(reps, |i| {
        let mut rng = stream(seed, i as u64);
        let sample = sampler.draw(&mut rng)?;
        pipeline.rejection_margin(&sample)
    })
    .into_iter()
    .collect()
}

fn level_at(margins: &[f64], gamma: f64) -> f64 {
    margins.iter().filter(|m| **m > gamma).count() as f64 / margins.len() as f64
}

/// Bisects for `γ ∈ (0, 1]` such that the conjunction test with critical
/// values `γ κ^j` rejects a null dataset with probability `alpha`.
pub fn calibrate_quantiles<P: TestPipeline, S: NullSampler>(
    pipeline: &P,
    sampler: &S,
    config: &CalibrationConfig,
) -> Result<Calibration> {
    if config.reps < 500 {
        return Err(Error::param("reps", format!("{} < 500", config.reps)));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::param(
            "alpha",
            format!("{} is not in (0, 1)", config.alpha),
        ));
    }
    let margins = null_margins(pipeline, sampler, config.reps, config.seed)?;
    calibrate_from_margins(&margins, config)
}

pub fn calibrate_from_margins(margins: &[f64], config: &CalibrationConfig) -> Result<Calibration> {
    let target = config.alpha;
    let uncalibrated_level = level_at(margins, 1.0);
    let mut curve = vec![(1.0, uncalibrated_level)];
    let done = |level: f64| (level - target).abs() <= config.tolerance;
    let result = |gamma: f64, level: f64, curve: Vec<(f64, f64)>| Calibration {
        gamma,
        level,
        uncalibrated_level,
        reps: margins.len(),
        seed: config.seed,
        level_curve: curve,
    };
    if done(uncalibrated_level) {
        return Ok(result(1.0, uncalibrated_level, curve));
    }
    if uncalibrated_level > target {
        return Err(Error::Calibration {
            reason: format!(
                "level {uncalibrated_level} at gamma = 1 already exceeds alpha = {target}"
            ),
            level_curve: curve,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut prev_level = uncalibrated_level;
    let mut prev_gamma = 1.0;
    for _ in 0..config.max_iterations {
        let gamma = 0.5 * (lo + hi);
        let level = level_at(margins, gamma);
        curve.push((gamma, level));
        if (gamma < prev_gamma && level < prev_level) || (gamma > prev_gamma && level > prev_level)
        {
            return Err(Error::Calibration {
                reason: "empirical level is not monotone in gamma".into(),
                level_curve: curve,
            });
        }
        prev_level = level;
        prev_gamma = gamma;
        if done(level) {
            return Ok(result(gamma, level, curve));
        }
        if level < target {
            hi = gamma;
        } else {
            lo = gamma;
        }
    }
    Err(Error::Calibration {
        reason: format!(
            "no gamma in (0, 1] reaches level {target} within {}",
            config.tolerance
        ),
        level_curve: curve,
    })
}
