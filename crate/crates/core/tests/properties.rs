//! Property tests for module invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tribody_core::analysis::{
    check_window, default_offsets, holder_norm, q_threshold_directional, q_threshold_full, uniform_axis, SampledField,
};
use tribody_core::assembly::build_grid;
use tribody_core::kernels2d::{
    change_pair, channel_resolvent, free_resolvent_2d, jacobi_inverse, jacobi_transform, saddle_point, sqrt_upper, PlanePoint,
};
use tribody_core::linalg::{rel_diff, CMatrix, C64};
use tribody_core::onebody::{jost_pair, transmission, wronskian, PairPotential};
use tribody_core::operator_algebra::random::{random_family, random_operator, unit_disc};
use tribody_core::operator_algebra::{alternating_series, two_term_inverse, LinearOp, SchwartzSystem};

const CAP: f64 = 1e12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Square-barrier transmission by exact transfer matrices.
fn square_oracle(v0: f64, a: f64, k: f64) -> C64 {
    let kappa = c(k * k - v0, 0.0).sqrt();
    let ik = c(0.0, k);
    let f = (ik * a).exp();
    let df = -ik * f;
    let (cs, sn) = ((kappa * 2.0 * a).cos(), (kappa * 2.0 * a).sin());
    let f1 = cs * f + sn / kappa * df;
    let df1 = -kappa * sn * f + cs * df;
    1.0 / (0.5 * (f1 - df1 / ik) * (ik * a).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_apply_is_linear(seed in any::<u64>(), dim in 1usize..8, ar in -2.0f64..2.0, ai in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operator(&mut rng, dim, 1.0);
        let u: Vec<C64> = (0..dim).map(|_| unit_disc(&mut rng)).collect();
        let v: Vec<C64> = (0..dim).map(|_| unit_disc(&mut rng)).collect();
        let (alpha, beta) = (c(ar, ai), c(ai, -ar));
        let mix: Vec<C64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
        let lhs = op.apply(&mix);
        let (au, av) = (op.apply(&u), op.apply(&v));
        let diff: Vec<C64> = (0..dim).map(|i| lhs[i] - alpha * au[i] - beta * av[i]).collect();
        prop_assert!(vec_norm(&diff) <= 1e-12 * (vec_norm(&u) + vec_norm(&v)) * (1.0 + alpha.norm() + beta.norm()));
        // the dense realization reproduces apply on basis vectors
        let m = op.to_dense().unwrap();
        for j in 0..dim {
            let mut e = vec![C64::default(); dim];
            e[j] = c(1.0, 0.0);
            let col = op.apply(&e);
            for i in 0..dim {
                prop_assert_eq!(col[i], m[(i, j)]);
            }
        }
    }

    #[test]
    fn schwartz_identities_hold(seed in any::<u64>(), n in 1usize..5, dim in 2usize..7, norm in 0.02f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = SchwartzSystem::build(random_family(&mut rng, n, dim, norm), CAP, true).unwrap();
        let r = sys.residuals();
        for (name, v) in [("reflection", r.reflection), ("total", r.total), ("row", r.gamma_row),
                          ("column", r.gamma_column), ("recovery", r.recovery), ("omega", r.omega)] {
            prop_assert!(v <= 1e-10, "{} residual {:e}", name, v);
        }
    }

    #[test]
    fn two_term_inverse_matches_total_reflection(seed in any::<u64>(), dim in 1usize..7, norm in 0.02f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_family(&mut rng, 2, dim, norm);
        let sys = SchwartzSystem::build(g.clone(), CAP, false).unwrap();
        let two = two_term_inverse(&sys.gamma[0], &sys.gamma[1], CAP).unwrap();
        let id = CMatrix::identity(dim, dim);
        prop_assert!(rel_diff(two.matrix(), &(&id - sys.total.matrix())) <= 1e-10);
    }

    #[test]
    fn alternating_series_reaches_total_reflection(seed in any::<u64>(), n in 2usize..4, dim in 1usize..6, norm in 0.02f64..0.15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = SchwartzSystem::build(random_family(&mut rng, n, dim, norm), CAP, false).unwrap();
        let series = alternating_series(&sys.gamma, 400, 1e-15).unwrap();
        prop_assert!(rel_diff(series.matrix(), sys.total.matrix()) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potentials_are_even_repulsive_and_compact(
        height in 0.01f64..20.0, a in 0.05f64..3.0, width in 0.05f64..2.0, x in -6.0f64..6.0, gaussian in any::<bool>(),
    ) {
        let v = if gaussian { PairPotential::truncated_gaussian(height, width, a) } else { PairPotential::square(height, a) };
        let (p, m) = (v.eval(x), v.eval(-x));
        prop_assert!((p - m).abs() <= 1e-14 * p.abs().max(1.0));
        prop_assert!(p >= 0.0);
        if x.abs() > a {
            prop_assert_eq!(p, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jost_data_obeys_wronskian_law(height in 0.1f64..5.0, a in 0.2f64..1.0, k in 0.2f64..5.0) {
        let v = PairPotential::square(height, a);
        let xs: Vec<f64> = (0..=8).map(|m| -a + 2.0 * a * m as f64 / 8.0).collect();
        let d = jost_pair(&v, c(k, 0.0), &xs).unwrap();
        // wronskian() itself rejects a spread above tolerance
        let w = wronskian(&d).unwrap();
        let law = 2.0 * c(0.0, k) * d.s;
        prop_assert!((w - law).norm() <= 1e-8 * law.norm());
        prop_assert!(d.s.norm() <= 1.0 + 1e-12);
        let oracle = square_oracle(height, a, k);
        prop_assert!((d.s - oracle).norm() <= 1e-8 * oracle.norm());
    }

    #[test]
    fn transmission_reflects_to_its_conjugate(height in 0.1f64..5.0, a in 0.2f64..1.0, k in 0.2f64..5.0) {
        let v = PairPotential::square(height, a);
        let sp = transmission(&v, c(k, 0.0)).unwrap();
        let sm = transmission(&v, c(-k, 0.0)).unwrap();
        prop_assert!((sm - sp.conj()).norm() <= 1e-10 * sp.norm().max(1e-3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sqrt_branch_has_nonnegative_imaginary_part(re in -10.0f64..10.0, im in -10.0f64..10.0) {
        let z = c(re, im);
        let r = sqrt_upper(z);
        prop_assert!(r.im >= 0.0);
        prop_assert!((r * r - z).norm() <= 1e-14 * z.norm().max(1.0));
    }

    #[test]
    fn jacobi_changes_are_rotations(z0 in -10.0f64..10.0, z1 in -10.0f64..10.0, from in 0usize..3, to in 0usize..3) {
        let z = [z0, z1, -z0 - z1];
        let p = jacobi_transform(z, from).unwrap();
        let q = jacobi_transform(z, to).unwrap();
        // each pair frame is isometric to the same plane
        prop_assert!((p.norm() - q.norm()).abs() <= 1e-12 * p.norm().max(1.0));
        let moved = change_pair(p, from, to);
        prop_assert!(moved.dist(&q) <= 1e-12 * p.norm().max(1.0));
        let back = jacobi_inverse(p, from);
        for i in 0..3 {
            prop_assert!((back[i] - z[i]).abs() <= 1e-12 * p.norm().max(1.0));
        }
    }

    #[test]
    fn saddle_equation_is_solved(e in 0.5f64..2.0, eps in 0.0f64..0.2, xp in -50.0f64..50.0, dy in 0.1f64..50.0) {
        let s = saddle_point(c(e, eps), xp, dy).unwrap();
        prop_assert!(s.residual <= 1e-10 * xp.hypot(dy));
    }

    #[test]
    fn free_kernel_is_symmetric_and_translation_invariant(
        x in -5.0f64..5.0, y in -5.0f64..5.0, dx in -20.0f64..20.0, dy in -20.0f64..20.0,
        sx in -3.0f64..3.0, sy in -3.0f64..3.0, e in 0.5f64..2.0, eps in 0.0f64..1.0,
    ) {
        prop_assume!(dx.hypot(dy) > 1e-3);
        let lambda = c(e, eps);
        let (z, zp) = (PlanePoint::new(x, y), PlanePoint::new(x + dx, y + dy));
        let a = free_resolvent_2d(z, zp, lambda).unwrap();
        let b = free_resolvent_2d(zp, z, lambda).unwrap();
        let shifted = free_resolvent_2d(PlanePoint::new(x + sx, y + sy), PlanePoint::new(x + dx + sx, y + dy + sy), lambda).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((a - shifted).norm() <= 1e-12 * a.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn channel_kernel_is_reciprocal(x in -0.5f64..0.5, xp in -0.5f64..0.5, dy in 0.5f64..4.0) {
        let v = PairPotential::square(1.0, 0.5);
        let lambda = c(1.0, 0.5);
        let (z, zp) = (PlanePoint::new(x, 0.0), PlanePoint::new(xp, dy));
        let a = channel_resolvent(z, zp, lambda, &v).unwrap();
        let b = channel_resolvent(zp, z, lambda, &v).unwrap();
        prop_assert!((a - b).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn channel_kernel_without_potential_is_free(x in -3.0f64..3.0, y in -3.0f64..3.0, xp in -3.0f64..3.0, yp in -3.0f64..3.0) {
        prop_assume!((x - xp).hypot(y - yp) > 0.1);
        let lambda = c(1.0, 0.2);
        let (z, zp) = (PlanePoint::new(x, y), PlanePoint::new(xp, yp));
        let q = channel_resolvent(z, zp, lambda, &PairPotential::zero()).unwrap();
        let f = free_resolvent_2d(z, zp, lambda).unwrap();
        prop_assert!((q - f).norm() <= 1e-6 * f.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_weights_fill_the_box(half_width in 0.5f64..12.0, n in 8usize..48) {
        let g = build_grid(half_width, n).unwrap();
        let area = 4.0 * half_width * half_width;
        let total: f64 = g.weights().iter().sum();
        prop_assert!((total - area).abs() <= 1e-12 * area);
        prop_assert!(g.nodes().iter().all(|z| z.x.abs() < half_width && z.y.abs() < half_width));
        let mut pts: Vec<(f64, f64)> = g.nodes().iter().map(|z| (z.x, z.y)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert!(pts.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn lq_thresholds_lie_in_the_open_interval(p in 1.0f64..2.0, mu in 0.0f64..1.0, n in 1usize..4) {
        prop_assume!(check_window(p, mu, n).is_ok());
        let full = q_threshold_full(p, mu, n);
        prop_assert!(full > 0.0 && full < 2.0, "full {}", full);
        if n == 1 {
            let d = q_threshold_directional(p, mu);
            prop_assert!(d > 0.0 && d < 2.0, "directional {}", d);
        }
    }

    #[test]
    fn holder_norm_dominates_sup_part_and_grows_with_offsets(
        mu in 0.1f64..0.9, theta in 0.1f64..0.9, freq in 0.1f64..3.0, reach in 1isize..3,
    ) {
        let axis = uniform_axis(-3.0, 3.0, 25);
        let f = SampledField::from_fn(axis.clone(), axis, |x, y| c((freq * x).sin() / (1.0 + x * x + y * y), 0.0));
        let small = holder_norm(&f, mu, theta, &default_offsets(reach)).unwrap();
        let large = holder_norm(&f, mu, theta, &default_offsets(reach + 1)).unwrap();
        prop_assert!(small.norm_value >= small.sup_part);
        prop_assert!(large.norm_value >= small.norm_value);
    }
}
