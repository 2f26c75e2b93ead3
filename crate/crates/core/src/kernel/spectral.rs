//! Deconvolution kernels by numerical Fourier inversion.
//!
//! In the scaled variable `u = (x − t)/h`,
//! `F(x) = h^{-d-1} G(u)` with
//! `G(u) = (2π)^{-d} ∫ e^{iy·u} ℱ(∂_s φ)(y) / conj(ℱf_ε(y/h)) dy`.
//! The integrand is sampled on `nodes^d` frequencies inside
//! `[-R, R)^d`, zero-padded by `oversample`, and inverted with one FFT per
//! axis line. Queries are answered by multilinear interpolation.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ErrorModel, SpectralConfig, TestKernel, Triple};
use crate::error::{Error, Result};

/// Size guard for the padded grid.
const MAX_GRID_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDiagnostics {
    /// Share of `∫|integrand|` carried by the outermost tenth of the frequency box.
    pub truncation: f64,
    /// Largest `|G|` on the outer rim of the periodic cell, relative to `max |G|`.
    pub periodisation: f64,
}

impl SpectralDiagnostics {
    pub fn estimated_error(&self) -> f64 {
        self.truncation + self.periodisation
    }
}

#[derive(Debug, Clone)]
pub struct SpectralKernel {
    dim: usize,
    /// Points per axis of the spatial grid.
    size: usize,
    /// Spatial step in `u`.
    step: f64,
    /// `G` on the grid, axis 0 fastest; node `m` sits at `u = (m − size/2)·step`.
    values: Vec<f64>,
    config: SpectralConfig,
    diagnostics: SpectralDiagnostics,
}

impl SpectralKernel {
    pub(crate) fn build(
        kernel: &TestKernel,
        triple: &Triple,
        error: &ErrorModel,
        config: &SpectralConfig,
    ) -> Result<Self> {
        config.validate()?;
        let d = triple.dim();
        if kernel.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: d,
            });
        }
        let n = config.nodes;
        let m = n * config.oversample;
        let total = m
            .checked_pow(d as u32)
            .filter(|&t| t <= MAX_GRID_POINTS)
            .ok_or(Error::UnsupportedDimension {
                got: d,
                reason: "spectral grid too large for this dimension; lower nodes or oversample",
            })?;
        let h = triple.scale();
        let s = triple.direction();
        let dy = 2.0 * config.truncation / n as f64;
        let du = 2.0 * std::f64::consts::PI / (m as f64 * dy);

        // Per-axis factor transforms at the signed frequency indices.
        let signed: Vec<i64> = (0..n as i64).map(|j| j - n as i64 / 2).collect();
        let factor: Vec<Complex64> = signed
            .iter()
            .map(|&j| kernel.factor_fourier(j as f64 * dy))
            .collect();

        let mut grid = vec![Complex64::new(0.0, 0.0); total];
        let mut idx = vec![0usize; d];
        let mut y = vec![0.0; d];
        let mut y_over_h = vec![0.0; d];
        let mut l1_total = 0.0;
        let mut l1_rim = 0.0;
        let rim = (0.9 * (n / 2) as f64).floor() as i64;
        loop {
            let mut ft = Complex64::new(kernel.normalization(), 0.0);
            let mut sy = 0.0;
            let mut flat = 0usize;
            let mut stride = 1usize;
            let mut on_rim = false;
            for k in 0..d {
                let j = signed[idx[k]];
                y[k] = j as f64 * dy;
                y_over_h[k] = y[k] / h;
                ft *= factor[idx[k]];
                sy += s[k] * y[k];
                flat += (j.rem_euclid(m as i64) as usize) * stride;
                stride *= m;
                on_rim |= j.abs() >= rim;
            }
            let num = Complex64::new(0.0, sy) * ft;
            let den = error.fourier_transform(&y_over_h).conj();
            let val = if den.norm() > 0.0 {
                num / den
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mag = val.norm();
            l1_total += mag;
            if on_rim {
                l1_rim += mag;
            }
            grid[flat] = val;
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    break;
                }
            }
            if k == d {
                break;
            }
        }

        inverse_fft_nd(&mut grid, m, d);

        // (2π)^{-d} dy^d, then shift so node m/2 is u = 0.
        let scale = (dy / (2.0 * std::f64::consts::PI)).powi(d as i32);
        let mut values = vec![0.0; total];
        let mut max_abs = 0.0_f64;
        for (flat, slot) in values.iter_mut().enumerate() {
            let mut src = 0usize;
            let mut rem = flat;
            let mut stride = 1usize;
            for _ in 0..d {
                let c = rem % m;
                rem /= m;
                src += ((c + m - m / 2) % m) * stride;
                stride *= m;
            }
            *slot = grid[src].re * scale;
            max_abs = max_abs.max(slot.abs());
        }

        let rim_width = (m / 20).max(1);
        let mut rim_max = 0.0_f64;
        for (flat, v) in values.iter().enumerate() {
            let mut rem = flat;
            let mut on_edge = false;
            for _ in 0..d {
                let c = rem % m;
                rem /= m;
                on_edge |= c < rim_width || c >= m - rim_width;
            }
            if on_edge {
                rim_max = rim_max.max(v.abs());
            }
        }

        let diagnostics = SpectralDiagnostics {
            truncation: if l1_total > 0.0 {
                l1_rim / l1_total
            } else {
                0.0
            },
            periodisation: if max_abs > 0.0 {
                rim_max / max_abs
            } else {
                0.0
            },
        };
        let estimated = diagnostics.estimated_error();
        if !(estimated <= config.tolerance) {
            return Err(Error::SpectralResolution {
                estimated,
                tolerance: config.tolerance,
                truncation: diagnostics.truncation,
                periodisation: diagnostics.periodisation,
            });
        }
        Ok(Self {
            dim: d,
            size: m,
            step: du,
            values,
            config: *config,
            diagnostics,
        })
    }

    pub fn diagnostics(&self) -> SpectralDiagnostics {
        self.diagnostics
    }

    pub fn config(&self) -> SpectralConfig {
        self.config
    }

    /// Spatial step in the scaled variable.
    pub fn step(&self) -> f64 {
        self.step
    }

    fn half_extent(&self) -> f64 {
        (self.size / 2) as f64 * self.step
    }

    pub(crate) fn shares_grid_with(&self, other: &Self) -> bool {
        self.dim == other.dim && self.size == other.size && self.step == other.step
    }

    pub(crate) fn support_box(&self, triple: &Triple) -> (Vec<f64>, Vec<f64>) {
        let r = self.half_extent() * triple.scale();
        let t = triple.location();
        (
            t.iter().map(|v| v - r).collect(),
            t.iter().map(|v| v + r).collect(),
        )
    }

    pub(crate) fn evaluate(&self, triple: &Triple, x: &[f64]) -> f64 {
        let h = triple.scale();
        let t = triple.location();
        let d = self.dim;
        let mut base = [0usize; super::MAX_DIM];
        let mut frac = [0.0f64; super::MAX_DIM];
        let last = (self.size - 1) as f64;
        for k in 0..d.min(super::MAX_DIM) {
            let pos = (x[k] - t[k]) / h / self.step + (self.size / 2) as f64;
            if !(pos >= 0.0 && pos <= last) {
                return 0.0;
            }
            let b = (pos.floor() as usize).min(self.size - 2);
            base[k] = b;
            frac[k] = pos - b as f64;
        }
        // Multilinear interpolation over the 2^d corners.
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            let mut stride = 1usize;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat += (base[k] + bit) * stride;
                stride *= self.size;
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        acc * h.powi(-(d as i32) - 1)
    }

    /// Rectangle-rule sum of `F(x) other(x)` over this kernel's grid nodes.
    pub(crate) fn inner_product<B: Fn(&[f64]) -> f64>(&self, triple: &Triple, other: B) -> f64 {
        let d = self.dim;
        let h = triple.scale();
        let t = triple.location();
        let amp = h.powi(-(d as i32) - 1);
        let cell = (h * self.step).powi(d as i32);
        let mut x = vec![0.0; d];
        let mut total = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let mut rem = flat;
            for k in 0..d {
                let c = rem % self.size;
                rem /= self.size;
                x[k] = t[k] + h * (c as f64 - (self.size / 2) as f64) * self.step;
            }
            total += amp * v * other(&x);
        }
        total * cell
    }
}

/// Unnormalised inverse DFT along every axis of an `m^d` array.
fn inverse_fft_nd(data: &mut [Complex64], m: usize, d: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(m);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let total = data.len();
    let mut stride = 1usize;
    for _ in 0..d {
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
        stride *= m;
    }
}
