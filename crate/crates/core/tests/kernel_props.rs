use approx::assert_relative_eq;
use msdeconv::estimator::compute_v;
use msdeconv::kernel::{kernel_inner_product, DeconvKernel, ErrorModel, TestKernel, Triple};
use proptest::prelude::*;

fn quartic() -> TestKernel {
    TestKernel::quartic(2).unwrap()
}

fn triple_strategy() -> impl Strategy<Value = Triple> {
    (
        0.0..std::f64::consts::TAU,
        -3.0..3.0f64,
        -3.0..3.0f64,
        0.05..1.0f64,
    )
        .prop_map(|(a, x, y, h)| Triple::planar(a, [x, y], h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vanishes_outside_support_box(tr in triple_strategy(), sigma in 0.0..1.0f64, off in 1.0001..5.0f64, ang in 0.0..std::f64::consts::TAU) {
        let f = DeconvKernel::laplace(&quartic(), &tr, sigma).unwrap();
        let h = tr.scale();
        // a point whose sup-distance to t exceeds h
        let (c, s) = (ang.cos(), ang.sin());
        let m = c.abs().max(s.abs());
        let x = [tr.location()[0] + off * h * c / m, tr.location()[1] + off * h * s / m];
        prop_assert_eq!(f.evaluate(&x), 0.0);
    }

    #[test]
    fn no_noise_is_scaled_directional_derivative(tr in triple_strategy(), u in prop::collection::vec(-1.0..1.0f64, 2)) {
        let k = quartic();
        let f = DeconvKernel::laplace(&k, &tr, 0.0).unwrap();
        let h = tr.scale();
        let x = [tr.location()[0] + h * u[0], tr.location()[1] + h * u[1]];
        let want = h.powi(-3) * k.directional(tr.direction(), &u);
        prop_assert!((f.evaluate(&x) - want).abs() <= 1e-12 * (1.0 + want.abs()) * h.powi(-3));
    }

    #[test]
    fn negating_direction_negates_kernel(tr in triple_strategy(), sigma in 0.0..1.0f64, u in prop::collection::vec(-1.2..1.2f64, 2)) {
        let k = quartic();
        let f = DeconvKernel::laplace(&k, &tr, sigma).unwrap();
        let g = DeconvKernel::laplace(&k, &tr.negated(), sigma).unwrap();
        let x = [tr.location()[0] + tr.scale() * u[0], tr.location()[1] + tr.scale() * u[1]];
        prop_assert_eq!(f.evaluate(&x), -g.evaluate(&x));
    }

    #[test]
    fn norm_is_translation_invariant(tr in triple_strategy(), sigma in 0.0..1.0f64, dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
        let k = quartic();
        let a = DeconvKernel::laplace(&k, &tr, sigma).unwrap();
        let moved = tr.moved_to(vec![tr.location()[0] + dx, tr.location()[1] + dy]).unwrap();
        let b = DeconvKernel::laplace(&k, &moved, sigma).unwrap();
        let (na, nb) = (a.l2_norm().unwrap(), b.l2_norm().unwrap());
        prop_assert!((na - nb).abs() <= 1e-10 * na);
    }

    #[test]
    fn inner_product_is_symmetric_and_bounded(a in triple_strategy(), b in triple_strategy()) {
        let k = quartic();
        let fa = DeconvKernel::laplace(&k, &a, 0.075).unwrap();
        let fb = DeconvKernel::laplace(&k, &b, 0.075).unwrap();
        let ab = kernel_inner_product(&fa, &fb).unwrap();
        let ba = kernel_inner_product(&fb, &fa).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
        let bound = fa.l2_norm().unwrap() * fb.l2_norm().unwrap();
        prop_assert!(ab.abs() <= bound * (1.0 + 1e-10));
    }
}

#[test]
fn thousand_point_degeneration_at_zero_noise() {
    let k = quartic();
    let tr = Triple::new(vec![0.6, -0.8], vec![0.3, 1.1], 0.35).unwrap();
    let f = DeconvKernel::laplace(&k, &tr, 0.0).unwrap();
    let h = tr.scale();
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        // low-discrepancy points in the support box
        let u = [
            2.0 * ((i as f64 * 0.754_877_666_246_692_7) % 1.0) - 1.0,
            2.0 * ((i as f64 * 0.569_840_290_998_053_3) % 1.0) - 1.0,
        ];
        let x = [0.3 + h * u[0], 1.1 + h * u[1]];
        let want = h.powi(-3) * k.directional(tr.direction(), &u);
        worst = worst.max((f.evaluate(&x) - want).abs() / h.powi(-3));
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn scaled_norm_at_small_noise_is_not_flat_over_scales() {
    let k = quartic();
    let v = |h: f64, sigma: f64| {
        let tr = Triple::new(vec![1.0, 0.0], vec![0.0, 0.0], h).unwrap();
        compute_v(&DeconvKernel::laplace(&k, &tr, sigma).unwrap()).unwrap()
    };
    // Exact quadrature values.
    assert_relative_eq!(
        v(0.1, 0.075),
        0.019_054_266_360_093_75,
        max_relative = 1e-10
    );
    assert_relative_eq!(
        v(0.2, 0.075),
        0.031_353_088_714_887_04,
        max_relative = 1e-10
    );
    assert_relative_eq!(v(0.4, 0.075), 0.146_013_572_831_004_8, max_relative = 1e-10);
    assert_relative_eq!(v(0.1, 1.0), 4.175_376_950_137_193, max_relative = 1e-10);
    assert_relative_eq!(v(0.4, 1.0), 4.085_019_782_242_821, max_relative = 1e-10);
}

#[test]
fn spectral_path_requires_matching_grids_for_inner_products() {
    let k = TestKernel::bump(2, 6).unwrap();
    let e = ErrorModel::laplace_as_spectral(0.3).unwrap();
    let a = DeconvKernel::spectral(
        &k,
        &Triple::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.4).unwrap(),
        &e,
    )
    .unwrap();
    let b = DeconvKernel::spectral(
        &k,
        &Triple::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.3).unwrap(),
        &e,
    )
    .unwrap();
    assert!(kernel_inner_product(&a, &b).is_err());
    let closed = DeconvKernel::laplace(&k, a.triple(), 0.3).unwrap();
    let ip = kernel_inner_product(&a, &a).unwrap();
    let want = kernel_inner_product(&closed, &closed).unwrap();
    assert!((ip - want).abs() <= 5e-3 * want, "{ip} vs {want}");
}
