use mfsub::exponents::{
    homogeneity_report, level_exponents, measure_tau, power_sum, scaling_nu, solve_level_exponent, MeasureInput,
    TauModel, Window,
};
use mfsub::generators::{brownian_path, selfsimilar_measure, Forcing, MultinomialMeasure, SelfSimilarSystem};
use mfsub::spectra::{linear_grid, measure_spectrum, subordinated_spectrum};
use mfsub::subordination::{decompose, DecompositionSchedule, MonotoneMap};
use mfsub::{build_pyramid, grid::build_pyramid_with, Exec, SampledFunction};
use proptest::prelude::*;

fn sampled(base: u32, depth: u32) -> impl Strategy<Value = SampledFunction> {
    let n = (base as usize).pow(depth) + 1;
    prop::collection::vec(-1.0e3..1.0e3f64, n).prop_filter_map("constant", move |v| {
        SampledFunction::new(base, depth, v, "random").ok()
    })
}

fn any_sampled() -> impl Strategy<Value = SampledFunction> {
    (2u32..=4, 1u32..=4).prop_flat_map(|(b, j)| sampled(b, j.min(if b == 4 { 3 } else { 5 })))
}

fn weights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0f64, 2..=max_len).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pyramid_is_monotone_and_subadditive(f in any_sampled()) {
        let p = build_pyramid(&f);
        let b = p.base() as usize;
        for j in 0..p.depth() {
            for (k, &w) in p.level(j).iter().enumerate() {
                let children = &p.level(j + 1)[k * b..(k + 1) * b];
                prop_assert!(children.iter().all(|&c| c <= w));
                // the two sides round differently; allow a few ulps
                prop_assert!(w <= children.iter().sum::<f64>() * (1.0 + 4.0 * f64::EPSILON));
            }
        }
    }

    #[test]
    fn pyramid_is_deterministic(f in any_sampled()) {
        let a = build_pyramid_with(&f, Exec::Sequential);
        let b = build_pyramid_with(&f, Exec::Parallel);
        prop_assert_eq!(a.levels(), b.levels());
        let c = build_pyramid(&f);
        prop_assert_eq!(c.levels(), a.levels());
    }

    #[test]
    fn solver_residual_and_bracketing(row in prop::collection::vec(1e-6..0.999f64, 2..200)) {
        let sol = solve_level_exponent(&row).unwrap();
        prop_assert!((power_sum(&row, 1.0 / sol.h) - 1.0).abs() <= 1e-10);
        let tol = 1e-12;
        let below = power_sum(&row, 1.0 / (sol.h - 10.0 * tol * sol.h.max(1.0)));
        let above = power_sum(&row, 1.0 / (sol.h + 10.0 * tol * sol.h.max(1.0)));
        prop_assert!(below <= 1.0 && above >= 1.0, "{below} {above}");
    }

    #[test]
    fn exponents_never_exceed_one(f in any_sampled()) {
        let p = build_pyramid(&f);
        if let Ok(t) = level_exponents(&p, Window::full(p.depth()), Exec::default()) {
            prop_assert!(t.h.iter().all(|&h| h <= 1.0 + 1e-10), "{:?}", t.h);
        }
    }

    #[test]
    fn tau_is_concave(w in weights(5)) {
        let model = TauModel::multinomial(w).unwrap();
        let q: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.25).collect();
        let tau = measure_tau(MeasureInput::Model(&model), &q).unwrap();
        prop_assert!(tau.values.windows(3).all(|t| t[0] + t[2] - 2.0 * t[1] <= 1e-12));
        prop_assert!((model.tau(1.0)).abs() <= 1e-12 && (model.tau(0.0) + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn legendre_is_at_most_one_and_reaches_it(w in weights(5)) {
        let model = TauModel::multinomial(w).unwrap();
        let s = measure_spectrum(&model, 2001);
        prop_assert!(s.d.iter().all(|&d| d <= 1.0 + 1e-12));
        let top = s.d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(top >= 1.0 - 1e-6, "{top}");
        prop_assert!(s.is_concave(1e-10));
    }

    #[test]
    fn affine_maps_leave_exponents_unchanged(f in sampled(3, 4), c in 0.01..100.0f64, d in -50.0..50.0f64) {
        let g = f.affine(c, d).unwrap();
        let (p, q) = (build_pyramid(&f), build_pyramid(&g));
        let w = Window::full(4);
        if let (Ok(a), Ok(b)) = (level_exponents(&p, w, Exec::default()), level_exponents(&q, w, Exec::default())) {
            for (x, y) in a.h.iter().zip(&b.h) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
            let grid = [0.5, 1.0, 2.0];
            let (na, nb) = (scaling_nu(&p, &grid, w).unwrap(), scaling_nu(&q, &grid, w).unwrap());
            for (x, y) in na.values.iter().zip(&nb.values) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
            let (ra, rb) = (homogeneity_report(&p, 1, Window::new(1, 3).unwrap(), 0.05),
                            homogeneity_report(&q, 1, Window::new(1, 3).unwrap(), 0.05));
            if let (Ok(ra), Ok(rb)) = (ra, rb) {
                prop_assert!((ra.h_global - rb.h_global).abs() <= 1e-9);
                prop_assert_eq!(ra.c1_pass, rb.c1_pass);
            }
        }
    }

    #[test]
    fn map_round_trip(gaps in prop::collection::vec(0.01..1.0f64, 27), ts in prop::collection::vec(0.0..=1.0f64, 1000)) {
        let total: f64 = gaps.iter().sum();
        let mut bp = vec![0.0];
        let mut acc = 0.0;
        for g in &gaps[..26] {
            acc += g / total;
            bp.push(acc);
        }
        bp.push(1.0);
        let m = MonotoneMap::new(3, 3, bp).unwrap();
        prop_assert_eq!(m.evaluate(0.0).unwrap(), 0.0);
        prop_assert_eq!(m.evaluate(1.0).unwrap(), 1.0);
        for t in ts {
            let back = m.invert(m.evaluate(t).unwrap()).unwrap();
            prop_assert!((back - t).abs() < 1e-12, "{t} -> {back}");
        }
    }

    #[test]
    fn decomposition_invariants(f in sampled(2, 7), c in prop_oneof![-10.0..-0.1f64, 0.1..10.0f64], d in -5.0..5.0f64) {
        let p = build_pyramid(&f);
        let schedule = DecompositionSchedule::explicit(vec![2, 4, 7]).unwrap();
        let Ok(dec) = decompose(&p, &schedule, Some(&f)) else { return Ok(()) };
        let bp = dec.f.breakpoints();
        prop_assert_eq!(bp[0], 0.0);
        prop_assert_eq!(*bp.last().unwrap(), 1.0);
        prop_assert!(dec.f.min_gap() > 0.0);
        for s in &dec.stages {
            prop_assert!(s.partition_residual <= 1e-12);
        }
        // earlier stage points keep their images
        for s in &dec.stages {
            let step = 1usize << (7 - s.level);
            for (k, &y) in s.breakpoints.iter().enumerate() {
                prop_assert_eq!(y, bp[k * step]);
            }
        }
        // transport: g over f(I) sees exactly the samples of Z over I
        for j in 0..=7u32 {
            let step = 1usize << (7 - j);
            for (k, &w) in p.level(j).iter().enumerate() {
                let s = &dec.g_values[k * step..=(k + 1) * step];
                let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                prop_assert_eq!(hi - lo, w);
            }
        }
        let g = f.affine(c, d).unwrap();
        let other = decompose(&build_pyramid(&g), &schedule, Some(&g)).unwrap();
        prop_assert_eq!(other.f.breakpoints(), dec.f.breakpoints());
        for (x, y) in other.g_values.iter().zip(&dec.g_values) {
            prop_assert_eq!(*x, c * y + d);
        }
    }

    #[test]
    fn subordination_keeps_max_and_scales_argmax(w in weights(4), h in 0.05..=1.0f64) {
        let model = TauModel::multinomial(w).unwrap();
        let s = measure_spectrum(&model, 101);
        let t = subordinated_spectrum(&s, h).unwrap();
        let (xa, da) = s.argmax().unwrap();
        let (xb, db) = t.argmax().unwrap();
        prop_assert_eq!(da, db);
        prop_assert!((xb - h * xa).abs() <= 1e-15 * xa.abs().max(1.0));
    }

    #[test]
    fn multinomial_levels_sum_to_one(w in weights(4), depth in 1u32..6) {
        let m = MultinomialMeasure::new(w, depth).unwrap();
        for level in m.mass_table() {
            prop_assert!((level.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let f = m.integral().unwrap();
        prop_assert!(f.values().windows(2).all(|v| v[0] <= v[1]));
        prop_assert_eq!(f.values()[0], 0.0);
        prop_assert!((f.values().last().unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn selfsimilar_measure_levels_sum_to_one(l0 in 0.55..0.95f64, l1 in 0.55..0.95f64) {
        let sys = SelfSimilarSystem::new(vec![0.5, 0.5], vec![1, -1], vec![l0, l1], Forcing::Identity).unwrap();
        let mu = selfsimilar_measure(&sys).unwrap();
        for level in mu.mass_table(2, 8).unwrap() {
            prop_assert!((level.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let ts = linear_grid(0.0, 1.0, 65);
        let cdf: Vec<f64> = ts.iter().map(|&t| mu.cdf(t)).collect();
        prop_assert!(cdf.windows(2).all(|c| c[0] <= c[1] + 1e-15));
    }

    #[test]
    fn function_json_round_trips_bitwise(f in any_sampled(), scale in -300i32..300) {
        let g = f.affine(10f64.powi(scale), 0.0).unwrap();
        let back = mfsub::io::parse_function_json(&mfsub::io::function_json(&g).unwrap()).unwrap();
        prop_assert_eq!(back.values(), g.values());
    }

    #[test]
    fn brownian_is_deterministic_per_seed(seed in any::<u64>()) {
        let a = brownian_path(seed, 8).unwrap();
        let b = brownian_path(seed, 8).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert_eq!(a.values()[0], 0.0);
    }
}
