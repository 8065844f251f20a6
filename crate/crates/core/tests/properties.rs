use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use kercol::assembly::{build_weights, WeightScheme};
use kercol::experiments::{fit_loglog, parse_config_text, relative_l2, Method, RunConfig};
use kercol::geometry::{
    apply_transform, boundary_subset, fill_distance, oversample_per_axis, scattered_cloud_near_line,
    separation_distance, tensor_grid, Point, TransformKind,
};
use kercol::kernels::MaternSpec;
use kercol::solver::solve_lstsq;
use kercol::stability::{boundary_riemann_points, lower_riemann_points};

fn point2() -> impl Strategy<Value = Point> {
    (-1.0..=1.0f64, -1.0..=1.0f64).prop_map(|(x, y)| Point::new2(x, y))
}

fn transform() -> impl Strategy<Value = TransformKind> {
    prop_oneof![Just(TransformKind::Identity), Just(TransformKind::Sine), Just(TransformKind::SignedSquare)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric_and_bounded(tau in 2u32..=6, eps in 0.5..10.0f64, x in point2(), y in point2()) {
        let spec = MaternSpec::new(tau, 2, eps).unwrap();
        let (a, b) = (spec.eval(&x, &y), spec.eval(&y, &x));
        prop_assert_eq!(a, b);
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-14, "Phi = {}", a);
        prop_assert_eq!(spec.eval(&x, &x), 1.0);
    }

    #[test]
    fn half_integer_profiles_match_closed_forms(s in 1e-6..30.0f64) {
        // nu = 3/2 and 5/2 in one dimension.
        let e = (-s).exp();
        let p1 = MaternSpec::new(2, 1, 1.0).unwrap().eval_r(s);
        let p2 = MaternSpec::new(3, 1, 1.0).unwrap().eval_r(s);
        prop_assert!((p1 - (1.0 + s) * e).abs() < 1e-12);
        prop_assert!((p2 - (1.0 + s + s * s / 3.0) * e).abs() < 1e-12);
    }

    #[test]
    fn kernel_gradient_matches_central_differences(tau in 3u32..=6, x in point2(), y in point2()) {
        let spec = MaternSpec::new(tau, 2, 3.0).unwrap();
        let jet = spec.jet(&x, &y).unwrap();
        let step = 1e-6;
        for k in 0..2 {
            let mut lo = [x[0], x[1]];
            let mut hi = lo;
            lo[k] -= step;
            hi[k] += step;
            let fd = (spec.eval(&Point::new2(hi[0], hi[1]), &y) - spec.eval(&Point::new2(lo[0], lo[1]), &y)) / (2.0 * step);
            prop_assert!((fd - jet.gradient[k]).abs() < 1e-6, "component {}: {} vs {}", k, fd, jet.gradient[k]);
        }
    }

    #[test]
    fn trapezoid_weights_are_positive_and_integrate_constants(n in 3usize..40, t in transform()) {
        let (y, z) = boundary_subset(&tensor_grid(n, 2).unwrap());
        let w = build_weights(WeightScheme::Trapezoid, &y, &z, &t).unwrap();
        prop_assert!(w.iter().all(|&v| v > 0.0));
        let interior: f64 = w.rows(0, y.len()).sum();
        let boundary: f64 = w.rows(y.len(), z.len()).sum();
        prop_assert!((interior - 4.0).abs() < 1e-12, "area {}", interior);
        prop_assert!((boundary - 8.0).abs() < 1e-12, "perimeter {}", boundary);
    }

    #[test]
    fn random_weights_stay_in_range(seed in any::<u64>(), n in 3usize..20) {
        let (y, z) = boundary_subset(&tensor_grid(n, 2).unwrap());
        let w = build_weights(WeightScheme::Random { seed }, &y, &z, &TransformKind::Identity).unwrap();
        prop_assert!(w.iter().all(|&v| (0.5..=1.5).contains(&v)));
        prop_assert_eq!(w, build_weights(WeightScheme::Random { seed }, &y, &z, &TransformKind::Identity).unwrap());
    }

    #[test]
    fn transforms_keep_points_in_the_box_and_fix_the_boundary(n in 3usize..25, t in transform()) {
        let grid = tensor_grid(n, 2).unwrap();
        let mapped = apply_transform(&t, &grid).unwrap();
        for (p, q) in grid.iter().zip(mapped.iter()) {
            prop_assert!(q.max_norm() <= 1.0);
            prop_assert_eq!(p.on_box_boundary(0.0), q.on_box_boundary(0.0));
        }
    }

    #[test]
    fn relative_l2_is_scale_invariant(v in prop::collection::vec(-10.0..10.0f64, 1..40), k in 0.1..5.0f64, scale in 0.01..100.0f64) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        prop_assert_eq!(relative_l2(&v, &v).unwrap(), 0.0);
        let kv: Vec<f64> = v.iter().map(|x| k * x).collect();
        let e = relative_l2(&kv, &v).unwrap();
        prop_assert!((e - (k - 1.0).abs()).abs() < 1e-12);
        let a: Vec<f64> = kv.iter().map(|x| scale * x).collect();
        let b: Vec<f64> = v.iter().map(|x| scale * x).collect();
        prop_assert!((relative_l2(&a, &b).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn oversampling_is_the_smallest_square_above_the_target(gamma in 1.0..4.0f64, n in 4usize..2000) {
        let k = oversample_per_axis(gamma, n).unwrap();
        let target = gamma * n as f64;
        prop_assert!((k * k) as f64 >= target * (1.0 - 1e-12));
        prop_assert!((((k - 1) * (k - 1)) as f64) < target);
    }

    #[test]
    fn fill_distance_dominates_separation(seed in any::<u64>(), n in 10usize..200) {
        let cloud = scattered_cloud_near_line(n, &[1.0, -1.0], 0.2, seed).unwrap();
        prop_assert_eq!(cloud.len(), n);
        prop_assert!(cloud.iter().all(|p| p.max_norm() < 1.0));
        let h = fill_distance(&cloud, 128).unwrap();
        let q = separation_distance(&cloud).unwrap();
        prop_assert!(h >= q * (1.0 - 1e-9), "h {} q {}", h, q);
        let again = scattered_cloud_near_line(n, &[1.0, -1.0], 0.2, seed).unwrap();
        prop_assert_eq!(cloud.points(), again.points());
    }

    #[test]
    fn least_squares_solution_is_stationary(m in 4usize..40, extra in 0usize..4, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let n = m.saturating_sub(extra).max(1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let sol = solve_lstsq(&a, &b).unwrap();
        let r = &b - &a * &sol.coeffs;
        prop_assert!((r.norm() - sol.residual_norm).abs() < 1e-10);
        let grad = a.tr_mul(&r).norm();
        prop_assert!(grad <= 1e-10 * (a.norm().powi(2) * sol.coeffs.norm() + a.norm() * b.norm()), "gradient {}", grad);
        if !sol.truncated {
            // Independent oracle: SVD least squares.
            let svd = a.clone().svd(true, true);
            let x = svd.solve(&b, 1e-13).unwrap();
            prop_assert!((&x - &sol.coeffs).norm() <= 1e-8 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn exact_power_laws_are_recovered(slope in -1.0..8.0f64, c in 0.01..100.0f64, n in 2usize..10) {
        let hs: Vec<f64> = (0..n).map(|k| 0.5f64.powi(k as i32)).collect();
        let es: Vec<f64> = hs.iter().map(|h| c * h.powf(slope)).collect();
        let fit = fit_loglog(&hs, &es).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-9 || n == 2);
    }

    #[test]
    fn config_text_round_trips(
        methods in prop::sample::subsequence(Method::ALL.to_vec(), 1..=3),
        taus in prop::collection::vec(3u32..8, 1..4),
        gammas in prop::collection::vec(1.0..5.0f64, 1..5),
        nxs in prop::collection::vec(2usize..50, 1..6),
        eps in 0.5..20.0f64,
        seed in any::<u64>(),
        pde in 1u8..=4,
    ) {
        let join = |v: Vec<String>| v.join(", ");
        let text = format!(
            "# generated\npde = {pde}\nmethod = {}\ntau = {}\ngamma = {}\nnx = {}\neps = {eps:?}\nseed = {seed}\n",
            join(methods.iter().map(|m| m.name().to_string()).collect()),
            join(taus.iter().map(|t| t.to_string()).collect()),
            join(gammas.iter().map(|g| format!("{g:?}")).collect()),
            join(nxs.iter().map(|n| n.to_string()).collect()),
        );
        let cfg = RunConfig::from_map(&parse_config_text(&text).unwrap()).unwrap();
        prop_assert_eq!(cfg.pde.name(), format!("pde{pde}"));
        prop_assert_eq!(cfg.methods, methods);
        prop_assert_eq!(cfg.tau_list, taus);
        prop_assert_eq!(cfg.gamma_list, gammas);
        prop_assert_eq!(cfg.nx_axis_list, nxs);
        prop_assert_eq!((cfg.eps, cfg.seed), (eps, seed));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riemann_picks_lie_in_the_domain_and_respect_the_bracket(
        c in 0.5..1.5f64,
        h in 0.06..0.3f64,
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        shift in 0.1..2.0f64,
    ) {
        let v = move |p: &Point| shift + a * p[0] * p[0] + b * p[0] * p[1] + p[1];
        let sel = lower_riemann_points(v, 2, c, h, 16).unwrap();
        prop_assert!(sel.points.iter().all(|p| p.max_norm() <= 1.0));
        prop_assert!(sel.bracket_holds(c, h), "h_P {} outside [{}, {}]", sel.fill_h_p, c * h / 2.0, c * h);
        prop_assert!(sel.cell_sum <= sel.delta_sum * (1.0 + 1e-12));

        let edge = boundary_riemann_points(v, 2, c, h, 16).unwrap();
        prop_assert!(edge.points.iter().all(|p| p.on_box_boundary(1e-15)));
        prop_assert!(edge.points.find_duplicate().is_none());
    }
}

#[test]
fn boundary_points_cover_every_edge() {
    let edge = boundary_riemann_points(|p: &Point| 1.0 + p[0], 2, 1.0, 0.1, 16).unwrap();
    for (axis, side) in [(0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)] {
        assert!(edge.points.iter().any(|p| p[axis] == side && p[1 - axis].abs() < 0.5));
    }
    assert!(fill_distance(&edge.points, 256).unwrap() <= 0.1 + 1e-9);
}
