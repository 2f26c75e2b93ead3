//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion is not met.

use std::process::ExitCode;
use std::time::Instant;

use msdeconv::estimator::{compute_v, expected_statistic_oracle, test_statistic};
use msdeconv::inference::{
    CalibratedPipeline, Decision, PreparedTest, RejectionRule, TestSetup, TripleGrid,
};
use msdeconv::kernel::{DeconvKernel, ErrorModel, TestKernel, Triple};
use msdeconv::limit::null_margins;
use msdeconv::rng::stream;
use msdeconv::simulate::{
    binomial_cell, map_grid, mode_layout, published, rejection_rate, reproduce_table,
    sample_laplace_noise, sample_scenario, trimodal, ModeExperiment, NormalLaw, Scenario,
    SignalLaw, TableOptions, TableResult, SIGMA,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn options(reps: usize) -> TableOptions {
    TableOptions {
        reps,
        ..TableOptions::default()
    }
}

fn cell(table: &TableResult, label: &str) -> (f64, f64, f64, bool) {
    let row = table
        .row(label)
        .unwrap_or_else(|| panic!("missing row {label}"));
    let reference = row.reference.unwrap_or(f64::NAN);
    let agrees = row.agrees(3.0, 0.0).unwrap_or(false);
    (row.estimate, row.se, reference, agrees)
}

fn quantiles() -> Outcome {
    let table = reproduce_table(1, &options(1000)).expect("table 1");
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, reference) in published::TABLE1 {
        let row = table.row(&format!("n={n} sqrt(n) kappa1")).expect("row");
        let ok = (row.estimate - reference).abs() <= 0.006;
        pass &= ok;
        parts.push(format!(
            "n={n}: {:.4} (se {:.4}) vs {reference}",
            row.estimate, row.se
        ));
    }
    outcome(pass, format!("{} [tolerance 0.006]", parts.join("; ")))
}

fn levels(table2: &TableResult) -> (Outcome, Outcome) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, ..) in published::TABLE2 {
        let (est, se, _, _) = cell(table2, &format!("n={n} level"));
        pass &= est <= 1.5;
        parts.push(format!("n={n}: {est:.2}% (se {se:.2})"));
    }
    let uncal = outcome(pass, format!("{} [bound 1.5%]", parts.join("; ")));

    let (est, _, _, _) = cell(table2, "n=1000 level (cal.)");
    let (_, se) = binomial_cell(0.05, 400);
    let cal = outcome(
        (est - 5.0).abs() <= 2.0 * se,
        format!("n=1000: {est:.2}% [5% ± {:.2}]", 2.0 * se),
    );
    (uncal, cal)
}

fn trend(table: &TableResult, labels: &[String], strict: bool) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut prev: Option<f64> = None;
    for label in labels {
        let (est, se, reference, agrees) = cell(table, label);
        pass &= agrees;
        if let Some(p) = prev {
            pass &= if strict { est > p } else { est <= p };
        }
        prev = Some(est);
        let mark = if agrees { "" } else { " !" };
        parts.push(format!(
            "{label}: {est:.2}% (se {se:.2}) vs {reference}{mark}"
        ));
    }
    let shape = if strict {
        "increasing"
    } else {
        "non-increasing"
    };
    outcome(
        pass,
        format!("{} [{shape}, each within 3 se]", parts.join("; ")),
    )
}

fn detection_at_4000() -> Outcome {
    let cell = ModeExperiment::standard(4000)
        .run(&options(200), "table2/n=4000")
        .expect("n=4000 cell");
    let (est, se) = binomial_cell(cell.calibrated_power, cell.reps);
    outcome(
        est >= 99.0,
        format!("n=4000: {est:.2}% (se {se:.2}) [bound 99%]"),
    )
}

fn misspecification() -> Outcome {
    let table = reproduce_table(7, &options(400)).expect("table 7");
    let (est, se, reference, agrees) = cell(&table, "n=1000 power (cal.)");
    let tol = table
        .row("n=1000 power (cal.)")
        .and_then(|r| r.tolerance(3.0, 0.0))
        .unwrap_or(0.0);
    outcome(
        agrees,
        format!("n=1000: {est:.2}% (se {se:.2}) vs {reference} [± {tol:.2}]"),
    )
}

fn degeneration() -> Outcome {
    let k = TestKernel::quartic(2).unwrap();
    let tr = Triple::new(vec![0.6, -0.8], vec![0.3, 1.1], 0.35).unwrap();
    let f = DeconvKernel::laplace(&k, &tr, 0.0).unwrap();
    let h = tr.scale();
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let u = [
            2.0 * ((i as f64 * 0.754_877_666_246_692_7) % 1.0) - 1.0,
            2.0 * ((i as f64 * 0.569_840_290_998_053_3) % 1.0) - 1.0,
        ];
        let x = [0.3 + h * u[0], 1.1 + h * u[1]];
        let want = h.powi(-3) * k.directional(tr.direction(), &u);
        worst = worst.max((f.evaluate(&x) - want).abs() / h.powi(-3));
    }
    outcome(
        worst <= 1e-12,
        format!("max deviation {worst:.2e} over 1000 points [1e-12]"),
    )
}

fn sup_relative(a: &DeconvKernel, b: &DeconvKernel) -> f64 {
    let (lo, hi) = a.triple().support_box();
    let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
    for i in 0..=40 {
        for j in 0..=40 {
            let x = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / 40.0,
                lo[1] + (hi[1] - lo[1]) * j as f64 / 40.0,
            ];
            diff = diff.max((a.evaluate(&x) - b.evaluate(&x)).abs());
            scale = scale.max(a.evaluate(&x).abs());
        }
    }
    diff / scale
}

fn spectral_agreement() -> Outcome {
    let bump = TestKernel::bump(2, 6).unwrap();
    let mut worst = 0.0_f64;
    for (sigma, h) in [(0.075, 0.5), (0.3, 0.4), (1.0, 0.3)] {
        let tr = Triple::new(vec![0.6, 0.8], vec![-0.2, 0.4], h).unwrap();
        let sp =
            DeconvKernel::spectral(&bump, &tr, &ErrorModel::laplace_as_spectral(sigma).unwrap())
                .unwrap();
        let cf = DeconvKernel::laplace(&bump, &tr, sigma).unwrap();
        worst = worst.max(sup_relative(&cf, &sp));
    }
    let quartic_tr = Triple::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.5).unwrap();
    let quartic = DeconvKernel::spectral(
        &TestKernel::quartic(2).unwrap(),
        &quartic_tr,
        &ErrorModel::laplace_as_spectral(SIGMA).unwrap(),
    );
    let note = match quartic {
        Ok(_) => "quartic accepted".to_string(),
        Err(e) => format!("quartic refused: {e}"),
    };
    outcome(
        worst < 1e-3,
        format!("bump kernel, sigma in {{0.075, 0.3, 1}}: {worst:.2e} [1e-3]; {note}"),
    )
}

fn scaled_norm_spread() -> Outcome {
    let k = TestKernel::quartic(2).unwrap();
    let spread = |sigma: f64| {
        let vs: Vec<f64> = [0.1, 0.2, 0.4]
            .iter()
            .map(|h| {
                let tr = Triple::new(vec![1.0, 0.0], vec![0.0, 0.0], *h).unwrap();
                compute_v(&DeconvKernel::laplace(&k, &tr, sigma).unwrap()).unwrap()
            })
            .collect();
        let (lo, hi) = vs
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(a, b), v| (a.min(*v), b.max(*v)));
        (vs, hi / lo)
    };
    let (vs, s) = spread(SIGMA);
    let (_, s1) = spread(1.0);
    outcome(
        s < 2.0,
        format!(
            "sigma=0.075: V = {:.5}, {:.5}, {:.5}, spread {s:.2} [< 2]; sigma=1 spread {s1:.3}",
            vs[0], vs[1], vs[2]
        ),
    )
}

fn unbiasedness() -> Outcome {
    let k = TestKernel::quartic(2).unwrap();
    let normal = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp() / std::f64::consts::TAU;
    let cases = [
        (
            "normal",
            SignalLaw::Normal(NormalLaw::standard(2)),
            Triple::planar(0.0, [1.0, 0.0], 0.5).unwrap(),
        ),
        (
            "uniform",
            SignalLaw::uniform(vec![-2.5, -2.5], vec![2.5, 2.5]).unwrap(),
            Triple::planar(0.7, [0.5, -0.5], 0.5).unwrap(),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k_idx, (name, law, tr)) in cases.into_iter().enumerate() {
        let oracle = match law {
            SignalLaw::Normal(_) => expected_statistic_oracle(normal, &k, &tr),
            _ => 0.0,
        };
        let sc = Scenario::new(law, ErrorModel::laplace(SIGMA).unwrap(), 1000).unwrap();
        let f = DeconvKernel::laplace(&k, &tr, SIGMA).unwrap();
        let ts: Vec<f64> = (0..200)
            .map(|i| {
                test_statistic(
                    &sample_scenario(&sc, &mut stream(900 + k_idx as u64, i)),
                    &f,
                )
                .unwrap()
            })
            .collect();
        let m = ts.len() as f64;
        let mean = ts.iter().sum::<f64>() / m;
        let se = (ts.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
        let ok = (mean - oracle).abs() <= 3.0 * se;
        pass &= ok;
        parts.push(format!(
            "{name}: mean {mean:.5} vs {oracle:.5} (se {se:.5})"
        ));
    }
    outcome(
        pass,
        format!(
            "{} [3 se, quartic, sigma=0.075, n=1000, 200 reps]",
            parts.join("; ")
        ),
    )
}

fn characteristic_function() -> Outcome {
    let (n, sigma) = (100_000usize, 0.5);
    let eps = sample_laplace_noise(sigma, n, 2, &mut stream(901, 0));
    let probes = [
        [1.0, 0.0],
        [0.0, 2.0],
        [1.0, 1.0],
        [-1.0, 0.5],
        [0.3, -0.3],
        [2.0, 2.0],
        [3.0, 0.0],
        [0.0, -0.7],
        [1.5, -2.5],
        [4.0, 1.0],
    ];
    let mut worst = 0.0_f64;
    for y in probes {
        let re = eps
            .chunks(2)
            .map(|e| (y[0] * e[0] + y[1] * e[1]).cos())
            .sum::<f64>()
            / n as f64;
        let im = eps
            .chunks(2)
            .map(|e| (y[0] * e[0] + y[1] * e[1]).sin())
            .sum::<f64>()
            / n as f64;
        let truth = 1.0 / (1.0 + sigma * sigma * (y[0] * y[0] + y[1] * y[1]) / 2.0);
        worst = worst.max((re - truth).abs()).max(im.abs());
    }
    let tol = 3.0 / (n as f64).sqrt();
    outcome(
        worst < tol,
        format!("max deviation {worst:.2e} at 10 probes [{tol:.2e}]"),
    )
}

fn setup() -> TestSetup {
    TestSetup::new(
        TestKernel::quartic(2).unwrap(),
        ErrorModel::laplace(SIGMA).unwrap(),
    )
}

fn duality() -> Outcome {
    let n = 4000;
    let test = PreparedTest::new(map_grid(n).unwrap(), setup()).unwrap();
    let sc = Scenario::new(trimodal(), ErrorModel::laplace(SIGMA).unwrap(), n).unwrap();
    let report = test
        .run(&sample_scenario(&sc, &mut stream(902, 0)))
        .unwrap();
    let mismatches = report
        .entries
        .iter()
        .filter(|e| {
            let m = report
                .entries
                .iter()
                .find(|o| o.triple == e.triple.negated());
            match m {
                Some(m) => {
                    (e.decision == Decision::RejectIncr) != (m.decision == Decision::RejectDecr)
                        || (e.decision == Decision::RejectDecr)
                            != (m.decision == Decision::RejectIncr)
                }
                None => true,
            }
        })
        .count();
    outcome(
        mismatches == 0,
        format!(
            "{} triples, {} rejections, {mismatches} mismatches",
            report.entries.len(),
            report.rejections()
        ),
    )
}

fn fwer() -> Outcome {
    let n = 1000;
    let reps = 2000;
    let grid = TripleGrid::from_triples(mode_layout(&[0.0, 0.0], 0.5).unwrap()).unwrap();
    let null = Scenario::flat_null(&grid, 1.0, ErrorModel::laplace(SIGMA).unwrap(), n).unwrap();
    let test = PreparedTest::new(grid, setup()).unwrap();
    let pipeline = CalibratedPipeline {
        test: &test,
        rule: RejectionRule::AnyTwoSided,
    };
    let margins = null_margins(&pipeline, &null, reps, 903).unwrap();
    let (rate, se) = binomial_cell(rejection_rate(&margins, 1.0), reps);
    let (_, se_alpha) = binomial_cell(0.05, reps);
    let bound = 5.0 + 2.0 * se.max(se_alpha);
    outcome(
        rate <= bound,
        format!("four-triple layout, n={n}, {reps} reps: {rate:.2}% (se {se:.2}) [<= {bound:.2}%]"),
    )
}

fn determinism() -> Outcome {
    let n = 1000;
    let run = || {
        let test = PreparedTest::new(map_grid(n).unwrap(), setup().seed(17)).unwrap();
        let sc = Scenario::new(trimodal(), ErrorModel::laplace(SIGMA).unwrap(), n).unwrap();
        let report = test
            .run(&sample_scenario(&sc, &mut stream(904, 3)))
            .unwrap();
        let table = reproduce_table(7, &options(100)).unwrap();
        let rows: Vec<String> = table
            .rows
            .iter()
            .map(|r| format!("{}:{:e}:{:e}", r.label, r.estimate, r.se))
            .collect();
        (report.to_csv().unwrap(), rows)
    };
    let (a, b) = (run(), run());
    outcome(
        a == b,
        format!("decision csv {} bytes, table 7 rows compared", a.0.len()),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut all = true;
    let mut line = |id: &str, what: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {id} {}: {what}: {}", status(o.pass), o.detail);
    };

    line("1", "quantile reproduction", quantiles());

    let table2 = reproduce_table(2, &options(400)).expect("table 2");
    let (uncal, cal) = levels(&table2);
    line("2", "uncalibrated level", uncal);
    line("3", "calibrated level", cal);

    let table4 = reproduce_table(4, &options(400)).expect("table 4");
    let labels: Vec<String> = published::TABLE4
        .iter()
        .map(|r| format!("h0={} power (cal.)", r.0))
        .collect();
    line("4a", "power across h0", trend(&table4, &labels, true));
    let table5 = reproduce_table(5, &options(400)).expect("table 5");
    let labels: Vec<String> = published::TABLE5
        .iter()
        .map(|r| format!("sigma={} power (cal.)", r.0))
        .collect();
    line("4b", "power across sigma", trend(&table5, &labels, false));

    line("5", "mode detection", detection_at_4000());
    line("6", "misspecification", misspecification());

    let properties = [
        ("zero-noise degeneration", degeneration()),
        ("spectral vs closed form", spectral_agreement()),
        ("scaled norm spread", scaled_norm_spread()),
        ("E(T) vs oracle", unbiasedness()),
        ("sampler characteristic function", characteristic_function()),
        ("direction-negation duality", duality()),
        ("FWER bound", fwer()),
        ("determinism", determinism()),
    ];
    let mut suite = true;
    for (what, o) in properties {
        suite &= o.pass;
        println!("  property {}: {what}: {}", status(o.pass), o.detail);
    }
    line(
        "7",
        "property suite",
        outcome(suite, "see property lines above"),
    );

    println!(
        "acceptance finished in {:.1}s",
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
