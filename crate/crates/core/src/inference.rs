//! Triple sets, simultaneous tests, mode detection and monotonicity maps.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::estimator::{
    compute_v, critical_value, test_statistic, weights, CriticalInputs, PilotDensity, Sample,
    TripleStatistics, DEFAULT_DENSITY_FLOOR,
};
use crate::kernel::{DeconvKernel, ErrorModel, TestKernel, Triple};
use crate::limit::{
    simulate_kappa, LimitModel, MultiscaleQuantile, TestPipeline, DEFAULT_KAPPA_REPS,
};
use crate::rng::map_indexed;

const SAME_DIRECTION: f64 = 1e-12;

/// One scale of a grid: kernels of scale `h` at locations spaced `width` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridScale {
    pub h: f64,
    pub width: f64,
}

impl GridScale {
    /// Location spacing equal to the scale.
    pub fn new(h: f64) -> Self {
        Self { h, width: h }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrid {
    triples: Vec<Triple>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    symmetric: bool,
    warnings: Vec<String>,
}

/// `count` equally spaced directions on the unit circle starting at angle 0.
pub fn planar_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            let (s, c) = a.sin_cos();
            vec![snap(c), snap(s)]
        })
        .collect()
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}

fn same_direction(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= SAME_DIRECTION)
}

fn negated(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn axis_points(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let count = ((hi - lo) / width + 1e-9).floor() as usize + 1;
    (0..count).map(|k| lo + k as f64 * width).collect()
}

/// Warnings for scales outside `n^{-1/d + ε} ≤ h ≤ 1 / (log n · log log n)`
/// and for more than `n²` triples.
pub fn scale_warnings(scales: &[f64], dim: usize, n: usize, triples: usize) -> Vec<String> {
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let nf = n as f64;
    let h_min = nf.powf(-1.0 / dim as f64 + 0.05);
    let h_max = 1.0 / (nf.ln() * nf.ln().ln());
    for &h in scales {
        if h < h_min {
            out.push(format!(
                "scale {h} is below n^(-1/d+0.05) = {h_min:.4} for n = {n}"
            ));
        }
        if h > h_max {
            out.push(format!(
                "scale {h} exceeds 1/(log n log log n) = {h_max:.4} for n = {n}; the Gaussian approximation is asymptotic"
            ));
        }
    }
    if triples as f64 > nf * nf {
        out.push(format!("{triples} triples exceed n^2 = {}", n * n));
    }
    out
}

impl TripleGrid {
    /// Explicit triple list, e.g. a hand-placed mode-test layout.
    pub fn from_triples(triples: Vec<Triple>) -> Result<Self> {
        let first = triples
            .first()
            .ok_or_else(|| Error::param("triples", "empty triple set"))?;
        let d = first.dim();
        if let Some(bad) = triples.iter().find(|t| t.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.dim(),
            });
        }
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for t in &triples {
            let (l, h) = t.support_box();
            for k in 0..d {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(h[k]);
            }
        }
        let symmetric = triples.iter().all(|t| {
            let neg = negated(t.direction());
            triples.iter().any(|u| {
                u.scale() == t.scale()
                    && u.location() == t.location()
                    && same_direction(u.direction(), &neg)
            })
        });
        Ok(Self {
            triples,
            lo,
            hi,
            symmetric,
            warnings: Vec::new(),
        })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Evaluation box; for explicit layouts, the hull of the support boxes.
    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn add_warnings(&mut self, warnings: impl IntoIterator<Item = String>) {
        self.warnings.extend(warnings);
    }

    /// Distinct locations in first-appearance order.
    pub fn locations(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for t in &self.triples {
            if !out.iter().any(|l| l.as_slice() == t.location()) {
                out.push(t.location().to_vec());
            }
        }
        out
    }

    /// Hull of all support boxes.
    pub fn support_hull(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for t in &self.triples {
            let (l, h) = t.support_box();
            for k in 0..d {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(h[k]);
            }
        }
        (lo, hi)
    }
}

/// Vertices of an equidistant grid per scale times every direction, ordered
/// by scale, then location (last axis fastest), then direction.
pub fn build_grid(
    lo: &[f64],
    hi: &[f64],
    scales: &[GridScale],
    directions: &[Vec<f64>],
    symmetric: bool,
    n: usize,
) -> Result<TripleGrid> {
    if scales.is_empty() {
        return Err(Error::param("scales", "no scales given"));
    }
    if directions.is_empty() {
        return Err(Error::param("directions", "no directions given"));
    }
    let d = lo.len();
    if d == 0 || hi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: hi.len(),
        });
    }
    if lo
        .iter()
        .zip(hi)
        .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
    {
        return Err(Error::param(
            "box",
            "each lower bound must not exceed its upper bound",
        ));
    }
    for s in scales {
        if !(s.h > 0.0 && s.h <= 1.0) {
            return Err(Error::param("scales", format!("{} is not in (0, 1]", s.h)));
        }
        if !(s.width > 0.0 && s.width.is_finite()) {
            return Err(Error::param(
                "width",
                format!("{} is not positive", s.width),
            ));
        }
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for s in directions {
        if s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.len(),
            });
        }
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "directions",
                format!("{s:?} is not a unit vector"),
            ));
        }
        if !dirs.iter().any(|u| same_direction(u, s)) {
            dirs.push(s.clone());
        }
    }
    if symmetric {
        let extra: Vec<Vec<f64>> = dirs
            .iter()
            .map(|s| negated(s))
            .filter(|neg| !dirs.iter().any(|u| same_direction(u, neg)))
            .collect();
        for e in extra {
            if !dirs.iter().any(|u| same_direction(u, &e)) {
                dirs.push(e);
            }
        }
    }
    let mut triples = Vec::new();
    for sc in scales {
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|k| axis_points(lo[k], hi[k], sc.width))
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let loc: Vec<f64> = (0..d).map(|k| axes[k][idx[k]]).collect();
            for s in &dirs {
                triples.push(Triple::new(s.clone(), loc.clone(), sc.h)?);
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    let sym = dirs
        .iter()
        .all(|s| dirs.iter().any(|u| same_direction(u, &negated(s))));
    let hs: Vec<f64> = scales.iter().map(|s| s.h).collect();
    let warnings = scale_warnings(&hs, d, n, triples.len());
    Ok(TripleGrid {
        triples,
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        symmetric: sym,
        warnings,
    })
}

/// Everything besides the data and the triples that a test run needs.
#[derive(Debug, Clone)]
pub struct TestSetup {
    pub kernel: TestKernel,
    pub error: ErrorModel,
    pub alpha: f64,
    pub kappa_reps: usize,
    pub seed: u64,
    /// Pilot bandwidth; `None` selects the per-axis default.
    pub bandwidth: Option<f64>,
    pub density_floor: f64,
}

impl TestSetup {
    pub fn new(kernel: TestKernel, error: ErrorModel) -> Self {
        Self {
            kernel,
            error,
            alpha: 0.05,
            kappa_reps: DEFAULT_KAPPA_REPS,
            seed: 0,
            bandwidth: None,
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kappa_reps(mut self, reps: usize) -> Self {
        self.kappa_reps = reps;
        self
    }

    pub fn pilot_density(&self, sample: &Sample) -> Result<PilotDensity> {
        let bw = match self.bandwidth {
            Some(b) => vec![b; sample.dim()],
            None => PilotDensity::default_bandwidths(sample),
        };
        PilotDensity::new(sample, bw, self.density_floor)
    }
}

/// Kernels, `V_j` and `κ_n(α)` for a fixed triple set; only `T_j` and
/// `ĝ_n` depend on the data.
#[derive(Debug, Clone)]
pub struct PreparedTest {
    grid: TripleGrid,
    setup: TestSetup,
    kernels: Vec<DeconvKernel>,
    v: Vec<f64>,
    model: LimitModel,
    quantile: MultiscaleQuantile,
}

impl PreparedTest {
    pub fn new(grid: TripleGrid, setup: TestSetup) -> Result<Self> {
        if !(setup.alpha > 0.0 && setup.alpha < 1.0) {
            return Err(Error::param(
                "alpha",
                format!("{} is not in (0, 1)", setup.alpha),
            ));
        }
        let kernels: Vec<DeconvKernel> = map_indexed(grid.len(), |j| {
            DeconvKernel::for_model(&setup.kernel, &grid.triples[j], &setup.error)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let v: Vec<f64> = map_indexed(kernels.len(), |j| compute_v(&kernels[j]))
            .into_iter()
            .collect::<Result<_>>()?;
        let model = LimitModel::new(&kernels)?;
        let quantile = simulate_kappa(&model, setup.alpha, setup.kappa_reps, setup.seed)?;
        Ok(Self {
            grid,
            setup,
            kernels,
            v,
            model,
            quantile,
        })
    }

    pub fn grid(&self) -> &TripleGrid {
        &self.grid
    }

    pub fn setup(&self) -> &TestSetup {
        &self.setup
    }

    pub fn kernels(&self) -> &[DeconvKernel] {
        &self.kernels
    }

    pub fn model(&self) -> &LimitModel {
        &self.model
    }

    pub fn quantile(&self) -> &MultiscaleQuantile {
        &self.quantile
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Per-triple statistics with uncalibrated critical values.
    pub fn statistics(&self, sample: &Sample) -> Result<Vec<TripleStatistics>> {
        if sample.dim() != self.grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                got: sample.dim(),
            });
        }
        let density = self.setup.pilot_density(sample)?;
        let decay = self.setup.error.decay();
        let n = sample.len();
        let kappa = self.quantile.kappa;
        let one = |j: usize| -> Result<TripleStatistics> {
            let tr = &self.grid.triples[j];
            let statistic = test_statistic(sample, &self.kernels[j])?;
            let g_hat = density.evaluate(tr.location());
            let inputs = CriticalInputs {
                g_hat,
                v: self.v[j],
                h: tr.scale(),
                dim: tr.dim(),
                decay,
            };
            Ok(TripleStatistics {
                triple: tr.clone(),
                statistic,
                v: self.v[j],
                g_hat,
                weights: weights(tr.scale(), tr.dim()),
                critical: critical_value(&inputs, kappa, n),
            })
        };
        let p = self.grid.len();
        let out = if p >= 64 {
            map_indexed(p, one)
        } else {
            (0..p).map(one).collect()
        };
        out.into_iter().collect()
    }

    pub fn run(&self, sample: &Sample) -> Result<DecisionReport> {
        self.run_scaled(sample, 1.0)
    }

    /// Decisions with every critical value multiplied by `gamma`.
    pub fn run_scaled(&self, sample: &Sample, gamma: f64) -> Result<DecisionReport> {
        let stats = self.statistics(sample)?;
        let entries = stats
            .into_iter()
            .map(|s| {
                let critical = gamma * s.critical;
                DecisionEntry {
                    decision: Decision::from_statistic(s.statistic, critical),
                    triple: s.triple,
                    statistic: s.statistic,
                    critical,
                    g_hat: s.g_hat,
                    v: s.v,
                }
            })
            .collect();
        Ok(DecisionReport {
            entries,
            alpha: self.setup.alpha,
            kappa_n: self.quantile.kappa,
            gamma,
            n: sample.len(),
            error_model: self.setup.error.label(),
            seed: self.setup.seed,
            symmetric: self.grid.symmetric,
        })
    }

    /// Largest `γ` at which `rule` still rejects on `sample`.
    pub fn rejection_margin(&self, sample: &Sample, rule: &RejectionRule) -> Result<f64> {
        Ok(rule.margin(&self.statistics(sample)?))
    }
}

fn group_margin<F: Fn(usize) -> f64>(group: &[usize], ratio: F) -> f64 {
    if group.is_empty() {
        return f64::NEG_INFINITY;
    }
    group
        .iter()
        .map(|&j| ratio(j))
        .fold(f64::INFINITY, f64::min)
}

/// Which event of a test run counts as a rejection during calibration.
#[derive(Debug, Clone, PartialEq)]
pub enum RejectionRule {
    /// Every listed triple rejects its decrease hypothesis (a mode test).
    AllDecrease(Vec<usize>),
    /// At least one of several mode tests detects its mode.
    AnyGroup(Vec<Vec<usize>>),
    /// Any triple rejects either hypothesis.
    AnyTwoSided,
}

impl RejectionRule {
    /// The rule rejects at multiplier `γ` exactly when this exceeds `γ`.
    pub fn margin(&self, stats: &[TripleStatistics]) -> f64 {
        let ratio = |j: usize| stats[j].statistic / stats[j].critical;
        match self {
            RejectionRule::AllDecrease(group) => group_margin(group, ratio),
            RejectionRule::AnyGroup(groups) => groups
                .iter()
                .map(|g| group_margin(g, ratio))
                .fold(f64::NEG_INFINITY, f64::max),
            RejectionRule::AnyTwoSided => (0..stats.len())
                .map(|j| ratio(j).abs())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// A prepared test together with the rejection event to calibrate.
pub struct CalibratedPipeline<'a> {
    pub test: &'a PreparedTest,
    pub rule: RejectionRule,
}

impl TestPipeline for CalibratedPipeline<'_> {
    fn rejection_margin(&self, sample: &Sample) -> Result<f64> {
        self.test.rejection_margin(sample, &self.rule)
    }
}

pub fn run_multiscale_test(
    sample: &Sample,
    grid: &TripleGrid,
    setup: &TestSetup,
) -> Result<DecisionReport> {
    PreparedTest::new(grid.clone(), setup.clone())?.run(sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// `T < −κ^j`: evidence that the density increases along `s`.
    RejectIncr,
    /// `T > κ^j`: evidence that the density decreases along `s`.
    RejectDecr,
    Retain,
}

impl Decision {
    pub fn from_statistic(statistic: f64, critical: f64) -> Self {
        if statistic < -critical {
            Decision::RejectIncr
        } else if statistic > critical {
            Decision::RejectDecr
        } else {
            Decision::Retain
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::RejectIncr => "reject_incr",
            Decision::RejectDecr => "reject_decr",
            Decision::Retain => "retain",
        }
    }

    pub fn is_rejection(self) -> bool {
        self != Decision::Retain
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionEntry {
    pub triple: Triple,
    pub statistic: f64,
    pub critical: f64,
    pub decision: Decision,
    pub g_hat: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionReport {
    pub entries: Vec<DecisionEntry>,
    pub alpha: f64,
    pub kappa_n: f64,
    /// Multiplier applied to every critical value; 1 when uncalibrated.
    pub gamma: f64,
    pub n: usize,
    pub error_model: String,
    pub seed: u64,
    pub symmetric: bool,
}

impl DecisionReport {
    pub fn rejections(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.decision.is_rejection())
            .count()
    }

    /// True when every stored decision follows from its stored `(T, κ^j)`.
    pub fn is_consistent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| Decision::from_statistic(e.statistic, e.critical) == e.decision)
    }

    /// Columns `t1..td, s1..sd, h, statistic, critical, decision`.
    pub fn to_csv(&self) -> Result<String> {
        let d = self.entries.first().map(|e| e.triple.dim()).unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=d).map(|k| format!("t{k}")).collect();
        header.extend((1..=d).map(|k| format!("s{k}")));
        header.extend(["h", "statistic", "critical", "decision"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for e in &self.entries {
            let mut row: Vec<String> = e.triple.location().iter().map(|v| v.to_string()).collect();
            row.extend(e.triple.direction().iter().map(|v| v.to_string()));
            row.push(e.triple.scale().to_string());
            row.push(e.statistic.to_string());
            row.push(e.critical.to_string());
            row.push(e.decision.as_str().to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        line: 0,
        message: e.to_string(),
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Csv {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Annulus `lower·h ≤ ‖x⁰ − t‖ ≤ c·h` and cone `angle(t − x⁰, s) ≤ tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusConfig {
    pub c: f64,
    /// Lower radius in units of `h`; `None` means `2√d`.
    pub lower: Option<f64>,
    pub angle_tolerance_deg: f64,
}

impl Default for AnnulusConfig {
    fn default() -> Self {
        Self {
            c: 5.0,
            lower: None,
            angle_tolerance_deg: 15.0,
        }
    }
}

impl AnnulusConfig {
    pub fn lower_multiplier(&self, dim: usize) -> f64 {
        self.lower.unwrap_or(2.0 * (dim as f64).sqrt())
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let lower = self.lower_multiplier(dim);
        if !(lower >= 0.0 && self.c > lower) {
            return Err(Error::param(
                "c",
                format!("{} must exceed the lower multiplier {lower}", self.c),
            ));
        }
        if !(self.angle_tolerance_deg > 0.0) {
            return Err(Error::param("angle_tolerance", "must be positive"));
        }
        Ok(())
    }

    pub fn admits(&self, x0: &[f64], triple: &Triple) -> bool {
        let h = triple.scale();
        let diff: Vec<f64> = triple
            .location()
            .iter()
            .zip(x0)
            .map(|(t, x)| t - x)
            .collect();
        let dist = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lower = self.lower_multiplier(triple.dim()) * h;
        let slack = 1e-12 * (1.0 + dist);
        if dist + slack < lower || dist > self.c * h + slack || dist == 0.0 {
            return false;
        }
        let cos = diff
            .iter()
            .zip(triple.direction())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / dist;
        let angle = cos.clamp(-1.0, 1.0).acos().to_degrees();
        angle <= self.angle_tolerance_deg + 1e-9
    }
}

/// Indices of grid triples pointing away from `x0` inside its annulus.
pub fn candidate_set(grid: &TripleGrid, x0: &[f64], annulus: &AnnulusConfig) -> Vec<usize> {
    grid.triples
        .iter()
        .enumerate()
        .filter(|(_, t)| t.dim() == x0.len() && annulus.admits(x0, t))
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Candidates {
    /// Every grid location.
    Auto,
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub candidate: Vec<f64>,
    /// Indices into the report's entries.
    pub triples: Vec<usize>,
    pub decisions: Vec<Decision>,
    pub detected: bool,
    pub reason: Option<String>,
    /// Distinct scales of the candidate set meeting the consistency threshold.
    pub scales_meeting_threshold: Vec<f64>,
}

/// `C (log n)^{1/(d+2r+4)} n^{-1/(d+2r+4)}`.
pub fn scale_threshold(c: f64, n: usize, dim: usize, decay: f64) -> f64 {
    let e = 1.0 / (dim as f64 + 2.0 * decay + 4.0);
    let nf = n as f64;
    c * nf.ln().powf(e) * nf.powf(-e)
}

pub const DEFAULT_THRESHOLD_C: f64 = 1.0;

pub fn modes_from_report(
    report: &DecisionReport,
    grid: &TripleGrid,
    candidates: &Candidates,
    annulus: &AnnulusConfig,
    decay: f64,
    threshold_c: f64,
) -> Result<Vec<ModeReport>> {
    annulus.validate(grid.dim())?;
    if report.entries.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: report.entries.len(),
        });
    }
    let points = match candidates {
        Candidates::Auto => grid.locations(),
        Candidates::Points(p) => p.clone(),
    };
    let threshold = scale_threshold(threshold_c, report.n, grid.dim(), decay);
    points
        .into_iter()
        .map(|x0| {
            if x0.len() != grid.dim() {
                return Err(Error::DimensionMismatch {
                    expected: grid.dim(),
                    got: x0.len(),
                });
            }
            let idx = candidate_set(grid, &x0, annulus);
            let decisions: Vec<Decision> =
                idx.iter().map(|&j| report.entries[j].decision).collect();
            let (detected, reason) = if idx.is_empty() {
                (false, Some("empty candidate set".to_string()))
            } else {
                (decisions.iter().all(|d| *d == Decision::RejectDecr), None)
            };
            let mut scales: Vec<f64> = idx
                .iter()
                .map(|&j| grid.triples[j].scale())
                .filter(|h| *h >= threshold)
                .collect();
            scales.sort_by(f64::total_cmp);
            scales.dedup();
            Ok(ModeReport {
                candidate: x0,
                triples: idx,
                decisions,
                detected,
                reason,
                scales_meeting_threshold: scales,
            })
        })
        .collect()
}

pub fn detect_modes(
    sample: &Sample,
    grid: &TripleGrid,
    setup: &TestSetup,
    candidates: &Candidates,
    annulus: &AnnulusConfig,
) -> Result<Vec<ModeReport>> {
    let report = run_multiscale_test(sample, grid, setup)?;
    modes_from_report(
        &report,
        grid,
        candidates,
        annulus,
        setup.error.decay(),
        DEFAULT_THRESHOLD_C,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub location: Vec<f64>,
    pub direction: Vec<f64>,
    pub scale: f64,
    pub statistic: f64,
    pub critical: f64,
}

/// Arrows along directions of significant increase.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowMap {
    pub arrows: Vec<Arrow>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// One arrow per rejected increase hypothesis.
pub fn monotonicity_map(report: &DecisionReport) -> Result<ArrowMap> {
    if !report.symmetric {
        return Err(Error::param(
            "grid",
            "monotonicity maps need a grid containing (-s, t, h) for every (s, t, h); rebuild it with the symmetric flag",
        ));
    }
    let d = report.entries.first().map(|e| e.triple.dim()).unwrap_or(2);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for e in &report.entries {
        for k in 0..d {
            lo[k] = lo[k].min(e.triple.location()[k]);
            hi[k] = hi[k].max(e.triple.location()[k]);
        }
    }
    if report.entries.is_empty() {
        lo = vec![0.0; d];
        hi = vec![1.0; d];
    }
    let arrows = report
        .entries
        .iter()
        .filter(|e| e.decision == Decision::RejectIncr)
        .map(|e| Arrow {
            location: e.triple.location().to_vec(),
            direction: e.triple.direction().to_vec(),
            scale: e.triple.scale(),
            statistic: e.statistic,
            critical: e.critical,
        })
        .collect();
    Ok(ArrowMap { arrows, lo, hi })
}

impl ArrowMap {
    pub fn to_csv(&self) -> Result<String> {
        let d = self.lo.len();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=d).map(|k| format!("t{k}")).collect();
        header.extend((1..=d).map(|k| format!("s{k}")));
        header.extend(["h", "statistic", "critical", "decision"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for a in &self.arrows {
            let mut row: Vec<String> = a.location.iter().map(|v| v.to_string()).collect();
            row.extend(a.direction.iter().map(|v| v.to_string()));
            row.push(a.scale.to_string());
            row.push(a.statistic.to_string());
            row.push(a.critical.to_string());
            row.push(Decision::RejectIncr.as_str().to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        finish_csv(w)
    }

    /// Planar SVG with axes, one arrow of length `0.3 h` per rejection.
    pub fn to_svg(&self) -> Result<String> {
        if self.lo.len() != 2 {
            return Err(Error::UnsupportedDimension {
                got: self.lo.len(),
                reason: "arrow maps are drawn in the plane",
            });
        }
        let size = 480.0;
        let margin = 48.0;
        let pad = 0.5;
        let (x0, x1) = (self.lo[0] - pad, self.hi[0] + pad);
        let (y0, y1) = (self.lo[1] - pad, self.hi[1] + pad);
        let scale = (size - 2.0 * margin) / (x1 - x0).max(y1 - y0);
        let px = |x: f64| margin + (x - x0) * scale;
        let py = |y: f64| size - margin - (y - y0) * scale;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        );
        s.push_str(
            r#"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="black"/></marker></defs>"#,
        );
        s.push('\n');
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>"#
        );
        let axis_y = size - margin;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="gray"/>"#,
            margin,
            size - margin
        );
        let _ = writeln!(
            s,
            r#"<line x1="{margin:.2}" y1="{:.2}" x2="{margin:.2}" y2="{axis_y:.2}" stroke="gray"/>"#,
            margin
        );
        for (k, v) in ticks(x0, x1).into_iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle" id="xt{k}">{v}</text>"#,
                px(v),
                axis_y + 14.0
            );
        }
        for (k, v) in ticks(y0, y1).into_iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end" id="yt{k}">{v}</text>"#,
                margin - 6.0,
                py(v) + 3.0
            );
        }
        for a in &self.arrows {
            let len = 0.3 * a.scale;
            let (bx, by) = (a.location[0], a.location[1]);
            let (ex, ey) = (bx + len * a.direction[0], by + len * a.direction[1]);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5" marker-end="url(#head)"/>"#,
                px(bx),
                py(by),
                px(ex),
                py(ey)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
    (a..=b).map(|v| v as f64).collect()
}
