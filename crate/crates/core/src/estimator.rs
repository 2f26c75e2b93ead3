//! Test statistics, normalising constants, pilot density and critical values.

use std::io::Read;

use crate::error::{Error, Result};
use crate::kernel::{kernel_inner_product, DeconvKernel, TestKernel, Triple};
use crate::quadrature::GaussLegendre;

/// Observations `Y_1, ..., Y_n` in `ℝ^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    dim: usize,
}

impl Sample {
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::param(
                "observations",
                format!("{} values do not form rows of length {dim}", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "observations",
                format!("non-finite value in row {}", pos / dim + 1),
            ));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::from_flat(rows.concat(), dim)
    }

    /// Reads one observation per line, `dim` comma-separated columns, with an
    /// optional header and `#` comment lines.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut dim = 0usize;
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(values) => {
                    if dim == 0 {
                        dim = values.len();
                    } else if values.len() != dim {
                        return Err(Error::Csv {
                            line,
                            message: format!("expected {dim} columns, found {}", values.len()),
                        });
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Csv {
                            line,
                            message: "non-finite value".into(),
                        });
                    }
                    data.extend(values);
                }
                Err(_) if data.is_empty() && dim == 0 && i == 0 => continue, // header row
                Err(e) => {
                    return Err(Error::Csv {
                        line,
                        message: format!("malformed number: {e}"),
                    })
                }
            }
        }
        if data.is_empty() {
            return Err(Error::Csv {
                line: 0,
                message: "no observations".into(),
            });
        }
        Self::from_flat(data, dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn concat(&self, other: &Sample) -> Result<Sample> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Sample {
            data,
            dim: self.dim,
        })
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Per-axis sample standard deviation (denominator `n − 1`).
    pub fn std_dev(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut ss = vec![0.0; self.dim];
        for r in self.rows() {
            for k in 0..self.dim {
                let dv = r[k] - mean[k];
                ss[k] += dv * dv;
            }
        }
        let denom = (self.len().max(2) - 1) as f64;
        ss.iter().map(|v| (v / denom).sqrt()).collect()
    }
}

/// `T^n_{s,t,h} = n^{-1} Σ_i F_{s,t,h}(Y_i)`.
pub fn test_statistic(sample: &Sample, kernel: &DeconvKernel) -> Result<f64> {
    if sample.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: sample.dim(),
        });
    }
    let (lo, hi) = kernel.support_box();
    let sum: f64 = sample
        .rows()
        .filter(|r| {
            r.iter()
                .zip(lo.iter().zip(&hi))
                .all(|(v, (l, h))| v >= l && v <= h)
        })
        .map(|r| kernel.evaluate(r))
        .sum();
    Ok(sum / sample.len() as f64)
}

/// `∫ f(x) ∂_s φ_{t,h}(x) dx`, the population value of `T` for signal
/// density `f`, by composite Gauss–Legendre quadrature on the support box.
pub fn expected_statistic_oracle<F: Fn(&[f64]) -> f64>(
    f: F,
    kernel: &TestKernel,
    triple: &Triple,
) -> f64 {
    let h = triple.scale();
    let t = triple.location();
    let s = triple.direction();
    let d = triple.dim();
    let amp = h.powi(-(d as i32) - 1);
    let (lo, hi) = triple.support_box();
    let rule = GaussLegendre::new(16);
    let mut u = vec![0.0; d];
    rule.integrate_box_composite(&lo, &hi, 4, |x| {
        for k in 0..d {
            u[k] = (x[k] - t[k]) / h;
        }
        f(x) * amp * kernel.directional(s, &u)
    })
}

/// `V = h^{d/2 + r + 1} ‖F‖_{L²}`.
pub fn compute_v(kernel: &DeconvKernel) -> Result<f64> {
    let h = kernel.triple().scale();
    let d = kernel.dim() as f64;
    let r = kernel.error_model().decay();
    let norm = kernel_inner_product(kernel, kernel)?.sqrt();
    Ok(h.powf(0.5 * d + r + 1.0) * norm)
}

/// Scale weights `w(h) = √log(e h^{-d}) / log log(e^e h^{-d})` and
/// `w̃(h) = √(2 log h^{-d})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub w: f64,
    pub w_tilde: f64,
}

pub fn weights(h: f64, d: usize) -> Weights {
    let log_inv = d as f64 * (1.0 / h).ln();
    let w = (1.0 + log_inv).sqrt() / (std::f64::consts::E + log_inv).ln();
    let w_tilde = (2.0 * log_inv).max(0.0).sqrt();
    Weights { w, w_tilde }
}

/// Product biweight kernel density estimate clamped below at `floor`.
#[derive(Debug, Clone)]
pub struct PilotDensity {
    /// Observations sorted by their first coordinate.
    sorted: Vec<f64>,
    dim: usize,
    bandwidths: Vec<f64>,
    floor: f64,
    norm: f64,
}

pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-4;

impl PilotDensity {
    pub fn new(sample: &Sample, bandwidths: Vec<f64>, floor: f64) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::param(
                "sample",
                "pilot density needs at least two observations",
            ));
        }
        if bandwidths.len() != sample.dim() {
            return Err(Error::DimensionMismatch {
                expected: sample.dim(),
                got: bandwidths.len(),
            });
        }
        if let Some(b) = bandwidths.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::param("bandwidth", format!("{b} is not positive")));
        }
        if !(floor > 0.0) {
            return Err(Error::param("floor", "must be positive"));
        }
        let d = sample.dim();
        let mut rows: Vec<&[f64]> = sample.rows().collect();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let sorted = rows.concat();
        let norm = 1.0 / (sample.len() as f64 * bandwidths.iter().product::<f64>());
        Ok(Self {
            sorted,
            dim: d,
            bandwidths,
            floor,
            norm,
        })
    }

    /// Bandwidth `n^{-1/6}` times the per-axis standard deviation.
    pub fn default_bandwidths(sample: &Sample) -> Vec<f64> {
        let factor = (sample.len() as f64).powf(-1.0 / 6.0);
        sample
            .std_dev()
            .into_iter()
            .map(|sd| if sd > 0.0 { factor * sd } else { factor })
            .collect()
    }

    pub fn with_defaults(sample: &Sample) -> Result<Self> {
        Self::new(
            sample,
            Self::default_bandwidths(sample),
            DEFAULT_DENSITY_FLOOR,
        )
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Unclamped estimate.
    pub fn raw(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let n = self.sorted.len() / d;
        let b0 = self.bandwidths[0];
        let start = partition_point(n, |i| self.sorted[i * d] < x[0] - b0);
        let mut total = 0.0;
        for i in start..n {
            let row = &self.sorted[i * d..(i + 1) * d];
            if row[0] > x[0] + b0 {
                break;
            }
            let mut k = 1.0;
            for j in 0..d {
                let u = (x[j] - row[j]) / self.bandwidths[j];
                if u.abs() >= 1.0 {
                    k = 0.0;
                    break;
                }
                let a = 1.0 - u * u;
                k *= 0.9375 * a * a;
            }
            total += k;
        }
        total * self.norm
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.raw(x).max(self.floor)
    }
}

fn partition_point<P: Fn(usize) -> bool>(n: usize, pred: P) -> usize {
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn pilot_density(sample: &Sample, bandwidth: f64, floor: f64) -> Result<PilotDensity> {
    PilotDensity::new(sample, vec![bandwidth; sample.dim()], floor)
}

/// Everything the per-triple critical value depends on besides `κ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalInputs {
    pub g_hat: f64,
    pub v: f64,
    pub h: f64,
    pub dim: usize,
    pub decay: f64,
}

/// `κ^j = √ĝ(t) V n^{-1/2} h^{-d/2-r-1} (κ_n / w(h) + w̃(h))`.
pub fn critical_value(inputs: &CriticalInputs, kappa_n: f64, n: usize) -> f64 {
    let Weights { w, w_tilde } = weights(inputs.h, inputs.dim);
    let amp = inputs.g_hat.sqrt() * inputs.v / (n as f64).sqrt()
        * inputs
            .h
            .powf(-(0.5 * inputs.dim as f64) - inputs.decay - 1.0);
    amp * (kappa_n / w + w_tilde)
}

/// Per-triple record of a test run.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleStatistics {
    pub triple: Triple,
    pub statistic: f64,
    pub v: f64,
    pub g_hat: f64,
    pub weights: Weights,
    pub critical: f64,
}

impl TripleStatistics {
    pub fn critical_inputs(&self, decay: f64) -> CriticalInputs {
        CriticalInputs {
            g_hat: self.g_hat,
            v: self.v,
            h: self.triple.scale(),
            dim: self.triple.dim(),
            decay,
        }
    }
}
