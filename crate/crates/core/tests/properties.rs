use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use nagstab_core::hardfn::{build_hard_function, check_consistency, format, ConstructionResult, HardFnParams};
use nagstab_core::nag::{momentum_coeff, run_gd, run_nag};
use nagstab_core::objective::{Linear, Objective, Quadratic};
use nagstab_core::quadmat::{block_reduction_deviation, cross_validate_transfer};
use nagstab_core::stability::{divergence_series, verify_evolution, verify_lower_bound};
use nagstab_core::uniform::{build_reduction_scenario, quadratic_linear_lower, verify_reduction, verify_uniform_gap};
use nagstab_core::sampling;

fn params() -> impl Strategy<Value = HardFnParams> {
    (0.5f64..2.0, 0.5f64..2.0, 0.05f64..=1.0, -6.0f64..-2.0)
        .prop_map(|(g, beta, eb, e)| HardFnParams::new(g, beta, eb / beta, g / beta * 10f64.powf(e)).unwrap())
}

fn construction() -> impl Strategy<Value = ConstructionResult> {
    params().prop_filter_map("construction must build", |p| build_hard_function(p).ok())
}

fn quadratic(max_d: usize) -> impl Strategy<Value = (Quadratic, Vec<f64>, u64)> {
    (1..=max_d, 0.1f64..4.0, any::<u64>()).prop_map(|(d, beta, seed)| {
        let mut rng = sampling::rng(seed);
        let (h, _) = sampling::random_psd(&mut rng, d, beta);
        let b = DVector::from_vec(sampling::gaussian_vector(&mut rng, d));
        let x0 = sampling::gaussian_vector(&mut rng, d);
        (Quadratic::new(h, b).unwrap(), x0, seed)
    })
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn gamma(t: usize) -> f64 {
    momentum_coeff(t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn momentum_product_sums_dominate_quadratic(t in 2usize..=200) {
        let mut sum = 0.0;
        for k in 2..=t {
            sum += (k..=t).map(gamma).product::<f64>();
        }
        let tf = t as f64;
        prop_assert!(sum >= (tf - 1.0).powi(2) / (4.0 * (tf + 2.0)));
    }

    #[test]
    fn partial_product_sums_dominate(n in 1usize..200, gap in 1usize..200) {
        let m = (n + gap).min(200);
        prop_assume!(n < m);
        let mut sum = 0.0;
        for k in n..=m {
            sum += (n..k).map(|t| gamma(t + 1)).product::<f64>();
        }
        let (nf, mf) = (n as f64, m as f64);
        prop_assert!(sum >= nf / 2.0 * (1.0 - nf * nf / ((mf + 1.0) * (mf + 1.0))));
    }

    #[test]
    fn runs_are_deterministic((q, x0, _) in quadratic(4), eta_frac in 0.05f64..=1.0) {
        let eta = eta_frac / q.smoothness().unwrap().max(1e-3);
        prop_assert_eq!(run_nag(&q, &x0, 200, eta).unwrap(), run_nag(&q, &x0, 200, eta).unwrap());
    }

    #[test]
    fn gd_step_is_non_expansive((q, x0, seed) in quadratic(5), eta_frac in 0.01f64..=2.0) {
        let eta = eta_frac / q.smoothness().unwrap().max(1e-3);
        let mut rng = sampling::rng(seed ^ 1);
        let v: Vec<f64> = sampling::gaussian_vector(&mut rng, x0.len());
        let a = run_gd(&q, &x0, 1, eta).unwrap();
        let b = run_gd(&q, &v, 1, eta).unwrap();
        let before = dist(&x0, &v);
        prop_assert!(dist(a.x(1), b.x(1)) <= before * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn difference_recurrences_close((q, x0, seed) in quadratic(3), eta_frac in 0.05f64..=1.0) {
        let eta = eta_frac / q.smoothness().unwrap().max(1e-3);
        let mut rng = sampling::rng(seed);
        let u = sampling::sphere_point(&mut rng, x0.len(), 1e-2);
        let xt: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + b).collect();
        let dr = divergence_series(&q, &x0, &xt, 200, eta).unwrap();
        prop_assert!(dr.report.all_passed(), "{:?}", dr.report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn transfer_recursion_matches_simulation((q, x0, seed) in quadratic(4)) {
        let eta = 1.0 / q.smoothness().unwrap().max(1e-3);
        let mut rng = sampling::rng(seed);
        let dx0 = sampling::sphere_point(&mut rng, x0.len(), 1.0);
        let x_star = DVector::from_vec(sampling::gaussian_vector(&mut rng, x0.len()));
        let b = -(q.hessian() * x_star);
        let pinned = Quadratic::new(q.hessian().clone(), b).unwrap();
        prop_assert!(cross_validate_transfer(&pinned, &x0, &dx0, eta, 100).unwrap() <= 1e-10);
    }

    #[test]
    fn block_norm_is_max_scalar_norm(d in 2usize..=4, seed in any::<u64>(), len in 1usize..80) {
        use rand::Rng;
        let mut rng = sampling::rng(seed);
        let q = sampling::random_orthogonal(&mut rng, d);
        let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=1.0)).collect();
        let a: DMatrix<f64> = sampling::with_spectrum(&q, &lambda);
        let gammas: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        prop_assert!(block_reduction_deviation(&a, &gammas).unwrap() <= 1e-9);
    }

    #[test]
    fn momentum_magnitude_law_holds_to_a_thousand_steps(n in 2usize..=128) {
        let out = quadratic_linear_lower(1.0, 1.0, n, 1000).unwrap();
        let c = out.report.checks.iter().find(|c| c.name.contains("momentum_magnitude")).unwrap();
        prop_assert!(c.passed, "{}", c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn negative_gradients_give_monotone_ascent(cr in construction()) {
        let p = cr.params;
        for x0 in [0.0, p.eps] {
            let run = run_nag(&cr.f_m, &[x0], cr.n(cr.m + 1) + 10, p.eta).unwrap();
            for t in 1..=run.steps() {
                prop_assert!(run.y(t)[0] >= run.y(t - 1)[0], "t = {}", t);
            }
        }
        let lin = run_nag(&Linear::scalar(-p.g), &[0.0], 100, p.eta).unwrap();
        prop_assert!((1..=100).all(|t| lin.y(t)[0] >= lin.y(t - 1)[0]));
    }

    #[test]
    fn hard_function_is_lipschitz_and_smooth(cr in construction(), seed in any::<u64>()) {
        use rand::Rng;
        let p = cr.params;
        let f = &cr.f_m_plus;
        let hi = cr.minimizer + p.g / p.beta;
        let mut rng = sampling::rng(seed);
        for _ in 0..10_000 {
            let u: f64 = rng.random_range(-1.0..hi);
            let v: f64 = rng.random_range(-1.0..hi);
            let (gu, gv) = (f.grad(u), f.grad(v));
            prop_assert!(gu.abs() <= p.g && gu <= 0.0);
            prop_assert!((gu - gv).abs() <= p.beta * (u - v).abs() * (1.0 + 1e-12) + 1e-12 * p.g);
            // monotone gradient, i.e. convexity
            prop_assert!((gu - gv) * (u - v) >= -1e-12 * p.g * (u - v).abs());
        }
    }

    #[test]
    fn phase_intervals_are_separated(cr in construction()) {
        let p = cr.params;
        let ivs = &cr.phase_intervals;
        prop_assert!(cr.f_m.covered_length() < p.g / (2.0 * p.beta));
        for w in ivs.windows(2) {
            prop_assert!(w[1].a - w[0].b >= p.g / (2.0 * p.beta) - w[0].width());
        }
    }

    #[test]
    fn stored_construction_is_consistent(cr in construction()) {
        let r = check_consistency(&cr).unwrap();
        prop_assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn text_format_round_trips(cr in construction()) {
        let back = format::from_text(&format::to_text(&cr)).unwrap();
        prop_assert_eq!(back, cr);
    }

    #[test]
    fn divergence_evolution_holds(cr in construction()) {
        let dr = verify_evolution(&cr, 0).unwrap();
        prop_assert!(dr.report.all_passed(), "{:?}", dr.report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn plateau_preserves_divergence_and_flattens(cr in construction()) {
        let h = cr.n(cr.m + 1) + 5 * cr.n(1);
        let dr = verify_lower_bound(&cr, h).unwrap();
        let wanted = ["lower_bound/plateau_difference_equality", "lower_bound/post_plateau_flat", "lower_bound/start_gradients"];
        for c in dr.report.checks.iter().filter(|c| wanted.contains(&c.name.as_str())) {
            prop_assert!(c.passed, "{}", c);
        }
        prop_assert_eq!(cr.f_m_plus.grad(0.0), -cr.params.g);
        prop_assert_eq!(cr.f_m_plus.grad(cr.params.eps), -cr.params.g);
    }

    #[test]
    fn lower_bound_holds_at_checkpoints(cr in construction()) {
        let dr = verify_lower_bound(&cr, cr.n(cr.m + 1)).unwrap();
        for c in dr.report.checks.iter().filter(|c| c.name.starts_with("lower_bound/checkpoint")) {
            prop_assert!(c.passed, "{}", c);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduction_is_exact(n in 4usize..=300, hat_eb in 0.2f64..=1.0, hat_g in 0.5f64..2.0) {
        let sc = build_reduction_scenario(hat_g, 1.0, hat_eb, n).unwrap();
        let h = sc.floor_start();
        let v = verify_reduction(&sc, h).unwrap();
        prop_assert!(v.passed(), "{:?}", v.report.failures().collect::<Vec<_>>());
        let s = verify_uniform_gap(&sc, h).unwrap();
        prop_assert!(s.report.all_passed(), "{:?}", s.report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn loss_family_is_regular(n in 4usize..=100, seed in any::<u64>()) {
        use rand::Rng;
        let sc = build_reduction_scenario(1.0, 1.0, 1.0, n).unwrap();
        let f = &sc.family;
        let p = f.derived;
        let hi = sc.construction.minimizer + 1.0;
        let mut rng = sampling::rng(seed);
        for _ in 0..2_000 {
            let u: f64 = rng.random_range(-1.0..hi);
            let v: f64 = rng.random_range(-1.0..hi);
            for z in 1..=5u8 {
                let (gu, gv) = (f.gradient(u, z), f.gradient(v, z));
                prop_assert!(gu.abs() <= p.g);
                prop_assert!((gu - gv).abs() <= p.beta * (u - v).abs() * (1.0 + 1e-12) + 1e-12);
                prop_assert!((gu - gv) * (u - v) >= -1e-12 * (u - v).abs());
            }
        }
    }
}
