//! Gauss–Legendre rules and tensor-product integration over axis-aligned boxes.
//!
//! An `m`-node rule integrates univariate polynomials of degree `2m - 1`
//! exactly, so products of the piecewise-polynomial kernels used in this
//! crate are integrated to rounding error once the node count covers half the
//! combined degree.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `m`-point rule on `[-1, 1]` by Newton iteration on `P_m`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            // Tricomi's initial guess for the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Smallest rule that is exact for polynomials of the given degree.
    pub fn exact_for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Tensor-product rule over the box `[lo, hi]` in `lo.len()` dimensions.
    pub fn integrate_box<F: FnMut(&[f64]) -> f64>(&self, lo: &[f64], hi: &[f64], f: F) -> f64 {
        self.integrate_box_composite(lo, hi, 1, f)
    }

    /// Tensor-product rule on a uniform `cells^d` subdivision of `[lo, hi]`.
    pub fn integrate_box_composite<F: FnMut(&[f64]) -> f64>(
        &self,
        lo: &[f64],
        hi: &[f64],
        cells: usize,
        mut f: F,
    ) -> f64 {
        assert_eq!(lo.len(), hi.len());
        let d = lo.len();
        if d == 0 || cells == 0 {
            return 0.0;
        }
        // One-dimensional abscissae and weights per axis, flattened over cells.
        let per_axis: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
            .map(|k| {
                let width = (hi[k] - lo[k]) / cells as f64;
                let half = 0.5 * width;
                let mut xs = Vec::with_capacity(cells * self.len());
                let mut ws = Vec::with_capacity(cells * self.len());
                for c in 0..cells {
                    let mid = lo[k] + (c as f64 + 0.5) * width;
                    for (x, w) in self.nodes.iter().zip(&self.weights) {
                        xs.push(mid + half * x);
                        ws.push(w * half);
                    }
                }
                (xs, ws)
            })
            .collect();
        let len = per_axis[0].0.len();
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        let mut total = 0.0;
        loop {
            let mut weight = 1.0;
            for k in 0..d {
                point[k] = per_axis[k].0[idx[k]];
                weight *= per_axis[k].1[idx[k]];
            }
            total += weight * f(&point);
            // Odometer increment.
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < len {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return total;
                }
            }
        }
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
