use msdeconv::estimator::Sample;
use msdeconv::inference::{
    build_grid, candidate_set, monotonicity_map, planar_directions, AnnulusConfig,
    CalibratedPipeline, Decision, GridScale, PreparedTest, RejectionRule, TestSetup, TripleGrid,
};
use msdeconv::kernel::{ErrorModel, TestKernel};
use msdeconv::limit::null_margins;
use msdeconv::rng::stream;
use msdeconv::simulate::{
    binomial_cell, map_grid, mode_layout, rejection_rate, sample_scenario, trimodal, Scenario,
    SignalLaw,
};

const SIGMA: f64 = 0.075;

fn setup() -> TestSetup {
    TestSetup::new(
        TestKernel::quartic(2).unwrap(),
        ErrorModel::laplace(SIGMA).unwrap(),
    )
}

fn trimodal_sample(n: usize, seed: u64) -> Sample {
    let sc = Scenario::new(trimodal(), ErrorModel::laplace(SIGMA).unwrap(), n).unwrap();
    sample_scenario(&sc, &mut stream(seed, 0))
}

fn mixture_gradient(law: &SignalLaw, x: &[f64]) -> [f64; 2] {
    match law {
        SignalLaw::Mixture {
            components,
            weights,
        } => {
            let mut g = [0.0; 2];
            for (c, w) in components.iter().zip(weights) {
                let SignalLaw::Normal(nl) = c else {
                    unreachable!()
                };
                let v = nl.covariance()[(0, 0)];
                let (dx, dy) = (x[0] - nl.mean()[0], x[1] - nl.mean()[1]);
                let dens = (-(dx * dx + dy * dy) / (2.0 * v)).exp() / (std::f64::consts::TAU * v);
                g[0] -= w * dens * dx / v;
                g[1] -= w * dens * dy / v;
            }
            g
        }
        _ => unreachable!(),
    }
}

#[test]
fn sample_far_from_every_support_rejects_nothing() {
    let n = 500;
    let grid = map_grid(n).unwrap();
    let test = PreparedTest::new(grid, setup()).unwrap();
    let far: Vec<f64> = (0..2 * n).map(|i| 50.0 + (i % 7) as f64).collect();
    let report = test.run(&Sample::from_flat(far, 2).unwrap()).unwrap();
    assert_eq!(report.rejections(), 0);
    assert!(report
        .entries
        .iter()
        .all(|e| e.statistic == 0.0 && e.decision == Decision::Retain));
}

#[test]
fn negated_directions_give_mirrored_decisions() {
    let n = 4000;
    let grid = map_grid(n).unwrap();
    assert!(grid.is_symmetric());
    let test = PreparedTest::new(grid, setup()).unwrap();
    let report = test.run(&trimodal_sample(n, 31)).unwrap();
    assert!(report.rejections() > 0);
    for e in &report.entries {
        let mirror = report
            .entries
            .iter()
            .find(|o| o.triple == e.triple.negated())
            .expect("symmetric grid holds the negated triple");
        assert_eq!(mirror.statistic, -e.statistic);
        assert_eq!(mirror.critical, e.critical);
        assert_eq!(
            e.decision == Decision::RejectIncr,
            mirror.decision == Decision::RejectDecr
        );
        assert_eq!(
            e.decision == Decision::RejectDecr,
            mirror.decision == Decision::RejectIncr
        );
    }
}

#[test]
fn stored_decisions_follow_from_stored_values() {
    let n = 2000;
    let test = PreparedTest::new(map_grid(n).unwrap(), setup()).unwrap();
    for gamma in [1.0, 0.3, 0.05] {
        let report = test.run_scaled(&trimodal_sample(n, 32), gamma).unwrap();
        assert!(report.is_consistent());
        for e in &report.entries {
            assert_eq!(
                e.decision,
                Decision::from_statistic(e.statistic, e.critical)
            );
        }
    }
}

#[test]
fn larger_alpha_rejects_a_superset() {
    let n = 2000;
    let sample = trimodal_sample(n, 33);
    let strict = PreparedTest::new(map_grid(n).unwrap(), setup().alpha(0.05).seed(9)).unwrap();
    let loose = PreparedTest::new(map_grid(n).unwrap(), setup().alpha(0.10).seed(9)).unwrap();
    let a = strict.run(&sample).unwrap();
    let b = loose.run(&sample).unwrap();
    assert!(b.kappa_n <= a.kappa_n);
    for (x, y) in a.entries.iter().zip(&b.entries) {
        if x.decision.is_rejection() {
            assert_eq!(x.decision, y.decision);
        }
    }
    assert!(b.rejections() >= a.rejections());
}

#[test]
fn candidate_set_matches_brute_force_predicates() {
    let h = 0.1;
    let grid = build_grid(
        &[-0.5, -0.5],
        &[1.5, 1.5],
        &[GridScale::new(h)],
        &planar_directions(16),
        true,
        1000,
    )
    .unwrap();
    let x0 = [0.5, 0.5];
    let annulus = AnnulusConfig::default();
    let chosen = candidate_set(&grid, &x0, &annulus);
    assert!(!chosen.is_empty());
    let (lower, upper) = (2.0 * 2f64.sqrt() * h, 5.0 * h);
    for (j, t) in grid.triples().iter().enumerate() {
        let (dx, dy) = (t.location()[0] - x0[0], t.location()[1] - x0[1]);
        let dist = dx.hypot(dy);
        let s = t.direction();
        let mut gap = (s[1].atan2(s[0]) - dy.atan2(dx)).abs();
        gap = gap.min(std::f64::consts::TAU - gap);
        let ok = dist >= lower - 1e-9 && dist <= upper + 1e-9 && gap.to_degrees() <= 15.0 + 1e-6;
        assert_eq!(
            chosen.contains(&j),
            ok,
            "triple {j}: dist {dist}, angle {}",
            gap.to_degrees()
        );
    }
}

#[test]
fn trimodal_map_points_toward_the_modes() {
    let n = 4000;
    let law = trimodal();
    let test = PreparedTest::new(map_grid(n).unwrap(), setup().seed(5)).unwrap();
    let report = test.run(&trimodal_sample(n, 34)).unwrap();
    let map = monotonicity_map(&report).unwrap();
    assert!(map.arrows.len() >= 8, "{} arrows", map.arrows.len());

    for mode in [[-0.5, -0.5], [1.5, -0.5], [0.5, 1.5]] {
        let toward = map.arrows.iter().any(|a| {
            let (dx, dy) = (mode[0] - a.location[0], mode[1] - a.location[1]);
            dx.hypot(dy) <= 1.0 && dx * a.direction[0] + dy * a.direction[1] > 0.0
        });
        assert!(toward, "no arrow points toward {mode:?}");
    }
    let uphill = map
        .arrows
        .iter()
        .filter(|a| {
            let g = mixture_gradient(&law, &a.location);
            g[0] * a.direction[0] + g[1] * a.direction[1] > 0.0
        })
        .count();
    assert!(
        uphill as f64 >= 0.9 * map.arrows.len() as f64,
        "{uphill} of {}",
        map.arrows.len()
    );
}

fn layout_false_rejection_rate(n: usize, reps: usize) -> f64 {
    let grid = TripleGrid::from_triples(mode_layout(&[0.0, 0.0], 0.5).unwrap()).unwrap();
    let null = Scenario::flat_null(&grid, 1.0, ErrorModel::laplace(SIGMA).unwrap(), n).unwrap();
    let test = PreparedTest::new(grid, setup()).unwrap();
    let pipeline = CalibratedPipeline {
        test: &test,
        rule: RejectionRule::AnyTwoSided,
    };
    let margins = null_margins(&pipeline, &null, reps, 35).unwrap();
    rejection_rate(&margins, 1.0)
}

#[test]
fn flat_null_false_rejection_rate_approaches_alpha() {
    let reps = 2000;
    let small = layout_false_rejection_rate(500, reps);
    let large = layout_false_rejection_rate(4000, reps);
    let (pct, _) = binomial_cell(large, reps);
    let (_, se) = binomial_cell(0.05, reps);
    assert!(small > large, "{small} vs {large}");
    assert!((pct - 5.0).abs() <= 3.0 * se, "{pct}%");
}
