//! Bindings behind the static demo page in `www/`. The plain functions are
//! what the host tests exercise; the `#[wasm_bindgen]` wrappers only convert
//! errors for JavaScript.

use msdeconv::estimator::Sample;
use msdeconv::inference::{
    build_grid, monotonicity_map, planar_directions, Decision, GridScale, PreparedTest, TestSetup,
    TripleGrid,
};
use msdeconv::kernel::{DeconvKernel, ErrorModel, TestKernel, Triple};
use msdeconv::rng::{derive_seed, stream};
use msdeconv::simulate::{
    mode_layout, sample_scenario, square_null, symmetric_bimodal, trimodal, NormalLaw, Scenario,
    SignalLaw,
};
use msdeconv::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Limit draws per critical value; lower than the library default to keep
/// the page responsive.
pub const DEMO_KAPPA_REPS: usize = 400;

pub fn signal(name: &str) -> Result<SignalLaw> {
    match name {
        "normal" => Ok(SignalLaw::Normal(NormalLaw::standard(2))),
        "bimodal" => Ok(symmetric_bimodal()),
        "trimodal" => Ok(trimodal()),
        "flat" => Ok(square_null()),
        other => Err(invalid("signal", format!("unknown signal `{other}`"))),
    }
}

pub fn simulate(name: &str, n: usize, sigma: f64, seed: u64) -> Result<Sample> {
    let sc = Scenario::new(signal(name)?, ErrorModel::laplace(sigma)?, n)?;
    Ok(sample_scenario(
        &sc,
        &mut stream(derive_seed(seed, "demo"), 0),
    ))
}

fn setup(sigma: f64, seed: u64) -> Result<TestSetup> {
    Ok(
        TestSetup::new(TestKernel::quartic(2)?, ErrorModel::laplace(sigma)?)
            .seed(seed)
            .kappa_reps(DEMO_KAPPA_REPS),
    )
}

/// Deconvolution kernel of the triple `(s at angle, t = 0, h)` on a
/// `resolution x resolution` grid over its support, rows from top to bottom.
pub fn kernel_values(sigma: f64, h: f64, angle_deg: f64, resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err(invalid("resolution", "need at least 2 pixels per side"));
    }
    let triple = Triple::planar(angle_deg.to_radians(), [0.0, 0.0], h)?;
    let kernel = DeconvKernel::laplace(&TestKernel::quartic(2)?, &triple, sigma)?;
    let (lo, hi) = kernel.support_box();
    let step = |k: usize, a: f64, b: f64| a + (b - a) * (k as f64 + 0.5) / resolution as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        let y = step(resolution - 1 - row, lo[1], hi[1]);
        for col in 0..resolution {
            out.push(kernel.evaluate(&[step(col, lo[0], hi[0]), y]));
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct MapResult {
    pub svg: String,
    pub arrows: usize,
    pub triples: usize,
    pub kappa_n: f64,
}

/// Monotonicity map of a simulated sample over its central 80% box.
pub fn arrow_map(
    name: &str,
    n: usize,
    sigma: f64,
    h: f64,
    directions: usize,
    seed: u64,
) -> Result<MapResult> {
    let sample = simulate(name, n, sigma, seed)?;
    let quantile = |k: usize, q: f64| {
        let mut v: Vec<f64> = sample.rows().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        v[((v.len() - 1) as f64 * q).round() as usize]
    };
    let lo = [quantile(0, 0.1), quantile(1, 0.1)];
    let hi = [quantile(0, 0.9), quantile(1, 0.9)];
    let grid = build_grid(
        &lo,
        &hi,
        &[GridScale::new(h)],
        &planar_directions(directions),
        true,
        n,
    )?;
    let report = PreparedTest::new(grid, setup(sigma, seed)?)?.run(&sample)?;
    let map = monotonicity_map(&report)?;
    Ok(MapResult {
        svg: map.to_svg()?,
        arrows: map.arrows.len(),
        triples: report.entries.len(),
        kappa_n: report.kappa_n,
    })
}

#[derive(Debug, Serialize)]
pub struct TripleRow {
    pub location: Vec<f64>,
    pub direction: Vec<f64>,
    pub statistic: f64,
    pub critical: f64,
    pub decision: String,
}

#[derive(Debug, Serialize)]
pub struct ModeResult {
    pub candidate: [f64; 2],
    pub detected: bool,
    pub gamma: f64,
    pub rows: Vec<TripleRow>,
}

/// Four-triple mode test at `x0`: a mode is reported when the density
/// decreases away from `x0` in every direction.
pub fn mode_test(
    name: &str,
    n: usize,
    sigma: f64,
    x0: [f64; 2],
    h: f64,
    gamma: f64,
    seed: u64,
) -> Result<ModeResult> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", "must lie in (0, 1]"));
    }
    let sample = simulate(name, n, sigma, seed)?;
    let grid = TripleGrid::from_triples(mode_layout(&x0, h)?)?;
    let report = PreparedTest::new(grid, setup(sigma, seed)?)?.run_scaled(&sample, gamma)?;
    let rows: Vec<TripleRow> = report
        .entries
        .iter()
        .map(|e| TripleRow {
            location: e.triple.location().to_vec(),
            direction: e.triple.direction().to_vec(),
            statistic: e.statistic,
            critical: e.critical,
            decision: e.decision.as_str().to_string(),
        })
        .collect();
    Ok(ModeResult {
        candidate: x0,
        detected: report
            .entries
            .iter()
            .all(|e| e.decision == Decision::RejectDecr),
        gamma,
        rows,
    })
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn kernel_heatmap(
    sigma: f64,
    h: f64,
    angle_deg: f64,
    resolution: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    kernel_values(sigma, h, angle_deg, resolution).map_err(js)
}

/// JSON with `svg`, `arrows`, `triples` and `kappa_n`.
#[wasm_bindgen]
pub fn monotonicity_map_json(
    signal: &str,
    n: usize,
    sigma: f64,
    h: f64,
    directions: usize,
    seed: u64,
) -> std::result::Result<String, JsError> {
    let r = arrow_map(signal, n, sigma, h, directions, seed).map_err(js)?;
    serde_json::to_string(&r).map_err(js)
}

/// JSON with the candidate, the verdict and one row per triple.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn mode_test_json(
    signal: &str,
    n: usize,
    sigma: f64,
    x: f64,
    y: f64,
    h: f64,
    gamma: f64,
    seed: u64,
) -> std::result::Result<String, JsError> {
    let r = mode_test(signal, n, sigma, [x, y], h, gamma, seed).map_err(js)?;
    serde_json::to_string(&r).map_err(js)
}
