use std::fmt::Write as _;
use std::fs::File;

use msdeconv::estimator::Sample;
use msdeconv::inference::{
    candidate_set, modes_from_report, monotonicity_map, CalibratedPipeline, DecisionReport,
    PreparedTest, RejectionRule, TripleGrid,
};
use msdeconv::limit::{calibrate_quantiles, CalibrationConfig};
use msdeconv::rng::{derive_seed, stream};
use msdeconv::simulate::{
    asymmetric_bimodal, reproduce_table, sample_scenario, square_null, symmetric_bimodal, trimodal,
    NormalLaw, Scenario, SignalLaw, TableOptions,
};

use crate::config::{CalibrationRule, RunConfig, SignalChoice};
use crate::error::CliError;
use crate::output::{header, svg_header, OutputDir};

/// Lines for the terminal once a command succeeds.
pub type Summary = Vec<String>;

pub fn load_input(config: &RunConfig) -> Result<Sample, CliError> {
    let path = config.input.as_ref().ok_or_else(|| {
        CliError::Validation(
            "input: no data file given (use --input or `input` in the config)".into(),
        )
    })?;
    let file = File::open(path)
        .map_err(|e| CliError::Validation(format!("input: cannot read {}: {e}", path.display())))?;
    Sample::from_csv(file)
        .map_err(|e| CliError::Validation(format!("input {}: {e}", path.display())))
}

struct Prepared {
    sample: Sample,
    grid: TripleGrid,
    report: DecisionReport,
    notes: Vec<String>,
}

fn run_test(config: &RunConfig) -> Result<Prepared, CliError> {
    let sample = load_input(config)?;
    let grid = config.grid(Some(&sample), sample.len())?;
    let notes: Vec<String> = grid
        .warnings()
        .iter()
        .map(|w| format!("warning: {w}"))
        .collect();
    let test = PreparedTest::new(grid.clone(), config.setup(sample.dim())?)?;
    let report = test.run_scaled(&sample, config.gamma)?;
    Ok(Prepared {
        sample,
        grid,
        report,
        notes,
    })
}

fn quantile_csv(report: &DecisionReport, reps: usize) -> String {
    format!(
        "alpha,kappa_n,gamma,reps,seed,n,triples,rejections\n{},{},{},{},{},{},{},{}\n",
        report.alpha,
        report.kappa_n,
        report.gamma,
        reps,
        report.seed,
        report.n,
        report.entries.len(),
        report.rejections()
    )
}

pub fn cmd_test(config: &RunConfig, out: &OutputDir) -> Result<Summary, CliError> {
    let p = run_test(config)?;
    let head = header("test", config, &p.notes);
    let decisions = out.write("decisions.csv", &(head.clone() + &p.report.to_csv()?))?;
    out.write(
        "quantile.csv",
        &(head + &quantile_csv(&p.report, config.model.kappa_reps)),
    )?;
    let mut summary = p.notes;
    summary.push(format!(
        "{} triples, {} rejections (kappa_n = {:.4}, gamma = {}) on n = {}",
        p.report.entries.len(),
        p.report.rejections(),
        p.report.kappa_n,
        p.report.gamma,
        p.sample.len()
    ));
    summary.push(format!("wrote {}", decisions.display()));
    Ok(summary)
}

pub fn cmd_modes(config: &RunConfig, out: &OutputDir) -> Result<Summary, CliError> {
    let p = run_test(config)?;
    let decay = config.error_model()?.decay();
    let modes = modes_from_report(
        &p.report,
        &p.grid,
        &config.candidates(),
        &config.annulus(),
        decay,
        config.modes.threshold_c,
    )?;
    let d = p.grid.dim();
    let mut csv = String::new();
    for k in 1..=d {
        write!(csv, "x{k},").unwrap();
    }
    csv.push_str("detected,triples,triple_indices,scales_meeting_threshold,reason\n");
    for m in &modes {
        for v in &m.candidate {
            write!(csv, "{v},").unwrap();
        }
        let idx: Vec<String> = m.triples.iter().map(|j| j.to_string()).collect();
        let scales: Vec<String> = m
            .scales_meeting_threshold
            .iter()
            .map(|h| h.to_string())
            .collect();
        writeln!(
            csv,
            "{},{},{},{},{}",
            m.detected,
            m.triples.len(),
            idx.join(";"),
            scales.join(";"),
            m.reason.as_deref().unwrap_or("")
        )
        .unwrap();
    }
    let head = header("modes", config, &p.notes);
    let path = out.write("modes.csv", &(head.clone() + &csv))?;
    out.write("decisions.csv", &(head + &p.report.to_csv()?))?;
    let mut summary = p.notes;
    summary.push(format!(
        "{} of {} candidates detected as modes",
        modes.iter().filter(|m| m.detected).count(),
        modes.len()
    ));
    for m in modes.iter().filter(|m| m.detected) {
        summary.push(format!(
            "  mode at {:?} ({} triples)",
            m.candidate,
            m.triples.len()
        ));
    }
    summary.push(format!("wrote {}", path.display()));
    Ok(summary)
}

pub fn cmd_map(config: &RunConfig, out: &OutputDir) -> Result<Summary, CliError> {
    let p = run_test(config)?;
    let map = monotonicity_map(&p.report)?;
    let head = header("map", config, &p.notes);
    out.write("map.csv", &(head + &map.to_csv()?))?;
    let svg = out.write(
        "map.svg",
        &(svg_header("map", config, &p.notes) + &map.to_svg()?),
    )?;
    let mut summary = p.notes;
    summary.push(format!(
        "{} arrows from {} triples",
        map.arrows.len(),
        p.report.entries.len()
    ));
    summary.push(format!("wrote {}", svg.display()));
    Ok(summary)
}

pub fn cmd_calibrate(config: &RunConfig, out: &OutputDir) -> Result<Summary, CliError> {
    let sample = match &config.input {
        Some(_) => Some(load_input(config)?),
        None => None,
    };
    let n = config
        .calibration
        .n
        .or(sample.as_ref().map(Sample::len))
        .ok_or_else(|| {
            CliError::Validation("calibration.n: no sample size (set it or give --input)".into())
        })?;
    let grid = config.grid(sample.as_ref(), n)?;
    let dim = grid.dim();
    let rule = match config.calibration.rule {
        CalibrationRule::AnyRejection => RejectionRule::AnyTwoSided,
        CalibrationRule::Mode => {
            let x0 = config
                .modes
                .candidates
                .as_ref()
                .and_then(|c| c.first())
                .ok_or_else(|| {
                    CliError::Validation(
                        "modes.candidates: the mode rule needs a candidate point".into(),
                    )
                })?;
            let idx = candidate_set(&grid, x0, &config.annulus());
            if idx.is_empty() {
                return Err(CliError::Validation(format!(
                    "modes.candidates: no grid triple lies in the annulus around {x0:?}"
                )));
            }
            RejectionRule::AllDecrease(idx)
        }
    };
    let null = Scenario::flat_null(&grid, config.calibration.margin, config.error_model()?, n)?;
    let test = PreparedTest::new(grid, config.setup(dim)?)?;
    let pipeline = CalibratedPipeline { test: &test, rule };
    let cal_seed = derive_seed(config.seed, "calibrate");
    let cfg = CalibrationConfig::new(config.alpha, config.calibration.reps, cal_seed);
    let head = header("calibrate", config, &[format!("null sample size = {n}")]);
    let curve_csv = |curve: &[(f64, f64)]| {
        let mut s = String::from("gamma,level\n");
        for (g, l) in curve {
            writeln!(s, "{g},{l}").unwrap();
        }
        s
    };
    match calibrate_quantiles(&pipeline, &null, &cfg) {
        Ok(c) => {
            out.write(
                "level_curve.csv",
                &(head.clone() + &curve_csv(&c.level_curve)),
            )?;
            let path = out.write(
                "calibration.csv",
                &(head
                    + &format!(
                        "gamma,level,uncalibrated_level,reps,seed\n{},{},{},{},{}\n",
                        c.gamma, c.level, c.uncalibrated_level, c.reps, c.seed
                    )),
            )?;
            Ok(vec![
                format!(
                    "gamma = {:.4}: level {:.2}% (uncalibrated {:.2}%) over {} null datasets of size {n}",
                    c.gamma,
                    100.0 * c.level,
                    100.0 * c.uncalibrated_level,
                    c.reps
                ),
                format!("wrote {}", path.display()),
            ])
        }
        Err(msdeconv::Error::Calibration {
            reason,
            level_curve,
        }) => {
            out.write("level_curve.csv", &(head + &curve_csv(&level_curve)))?;
            Err(CliError::Runtime(format!("calibration failed: {reason}")))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_reproduce(
    config: &RunConfig,
    table: u8,
    reps: usize,
    out: &OutputDir,
) -> Result<Summary, CliError> {
    if !(1..=8).contains(&table) {
        return Err(CliError::Validation(format!(
            "table: {table} is not one of 1..=8"
        )));
    }
    let opts = TableOptions {
        reps,
        calibration_reps: config.calibration.reps,
        kappa_reps: config.model.kappa_reps,
        seed: config.seed,
    };
    let result = reproduce_table(table, &opts)?;
    let head = header(
        "reproduce",
        config,
        &[format!("table = {table}"), format!("reps = {reps}")],
    );
    let path = out.write(&format!("table{table}.csv"), &(head + &result.to_csv()?))?;
    let mut summary = vec![format!(
        "table {table}, {reps} replications, seed {}",
        config.seed
    )];
    for row in &result.rows {
        let verdict = match row.agrees(3.0, 0.005) {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "-",
        };
        let reference = row
            .reference
            .map(|r| format!("{r}"))
            .unwrap_or_else(|| "-".into());
        let mut line = format!(
            "  {:<32} {:>9.3} ± {:<7.3} published {:>6}  {verdict}",
            row.label, row.estimate, row.se, reference
        );
        if let Some(note) = &row.note {
            write!(line, "  ({note})").unwrap();
        }
        summary.push(line);
    }
    summary.push(format!(
        "wrote {} in {:.1}s",
        path.display(),
        result.wall_seconds
    ));
    Ok(summary)
}

pub fn signal_law(choice: SignalChoice) -> SignalLaw {
    match choice {
        SignalChoice::Normal => SignalLaw::Normal(NormalLaw::standard(2)),
        SignalChoice::Square => square_null(),
        SignalChoice::Bimodal => symmetric_bimodal(),
        SignalChoice::BimodalAsymmetric => asymmetric_bimodal(),
        SignalChoice::Trimodal => trimodal(),
    }
}

pub fn cmd_simulate(config: &RunConfig, out: &OutputDir) -> Result<Summary, CliError> {
    let sc = Scenario::new(
        signal_law(config.simulate.signal),
        config.error_model()?,
        config.simulate.n,
    )?;
    let sample = sample_scenario(&sc, &mut stream(derive_seed(config.seed, "simulate"), 0));
    let mut csv = String::new();
    let names: Vec<String> = (1..=sample.dim()).map(|k| format!("x{k}")).collect();
    csv.push_str(&names.join(","));
    csv.push('\n');
    for row in sample.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let path = out.write("sample.csv", &(header("simulate", config, &[]) + &csv))?;
    Ok(vec![format!(
        "{} observations written to {}",
        sample.len(),
        path.display()
    )])
}
