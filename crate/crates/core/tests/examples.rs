//! Worked examples with closed-form or independently computed expectations.

use mfsub::exponents::{
    homogeneity_report, intrinsic_exponent, legendre_transform, measure_tau, scaling_nu, Aggregation, MeasureInput,
    TauModel, Window,
};
use mfsub::generators::{
    brownian_path, selfsimilar_function, weierstrass, za_exact_pyramid, za_exponent, za_function, Forcing,
    MultinomialMeasure, SelfSimilarSystem, Weierstrass,
};
use mfsub::spectra::{a0_threshold, coarse_spectrum, linear_grid, measure_spectrum, za_alpha, za_spectrum, za_support};
use mfsub::subordination::{compose_check, decompose, holder_estimate, DecompositionSchedule};
use mfsub::{build_pyramid, OscillationPyramid, SampledFunction};

fn log3(x: f64) -> f64 {
    x.ln() / 3f64.ln()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of `2(5/6)^{1/H} + (2/3)^{1/H} = 1`, from a 200-step bisection.
const H_PERKINS: f64 = 0.2132583603955289;

#[test]
fn perkins_exponent_matches_frozen_oracle() {
    let oracle = 1.0 / bisect(1.0, 50.0, |s| 2.0 * (5.0f64 / 6.0).powf(s) + (2.0f64 / 3.0).powf(s) - 1.0);
    assert!((oracle - H_PERKINS).abs() <= 1e-12);
    assert!((za_exponent(5.0 / 6.0).unwrap().h - H_PERKINS).abs() <= 1e-12);
    let p = za_exact_pyramid(5.0 / 6.0, 9).unwrap();
    let e = intrinsic_exponent(&p, Window::new(1, 9).unwrap(), Aggregation::LiminfTailMin).unwrap();
    assert!((e.h - H_PERKINS).abs() <= 1e-9, "{}", e.h);
}

#[test]
fn za_restrictions_are_all_alike() {
    let p = za_exact_pyramid(2.0 / 3.0, 6).unwrap();
    let reference = p.restrict_rescale(2, 0).unwrap();
    for k in 0..9 {
        let r = p.restrict_rescale(2, k).unwrap();
        for j in 0..=r.depth() {
            let mut a = r.level(j).to_vec();
            let mut b = reference.level(j).to_vec();
            // the middle restriction is a reflected copy
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-13, "k={k} j={j}");
            }
        }
    }
}

#[test]
fn weierstrass_half_and_ordering() {
    let w = Window::new(8, 14).unwrap();
    let h = |alpha: f64| {
        let f = weierstrass(&Weierstrass::new(alpha, 2.0), 2, 16).unwrap();
        intrinsic_exponent(&build_pyramid(&f), w, Aggregation::LiminfTailMin).unwrap().h
    };
    let half = h(0.5);
    assert!((0.45..=0.55).contains(&half), "{half}");
    assert!(h(0.3) < h(0.7));
}

#[test]
fn nu_examples() {
    let tri = MultinomialMeasure::new(vec![0.2, 0.3, 0.5], 8).unwrap().integral().unwrap();
    let nu = scaling_nu(&build_pyramid(&tri), &[1.0], Window::full(8)).unwrap();
    assert!((nu.values[0] - 1.0).abs() <= 1e-12);
    assert!((nu.h_from_nu.unwrap() - 1.0).abs() <= 1e-9);

    let p = za_exact_pyramid(2.0 / 3.0, 8).unwrap();
    let grid = [0.5, 1.0, 2.0, 4.0];
    let nu = scaling_nu(&p, &grid, Window::full(8)).unwrap();
    assert!((nu.values[2] - 1.0).abs() <= 1e-12);
    assert!((nu.h_from_nu.unwrap() - 0.5).abs() <= 1e-9);
    assert!(nu.values.windows(2).all(|v| v[0] < v[1]));
    assert!(nu.is_concave(1e-12));
}

#[test]
fn homogeneity_of_exact_cascades() {
    let p = za_exact_pyramid(2.0 / 3.0, 8).unwrap();
    let r = homogeneity_report(&p, 2, Window::new(1, 6).unwrap(), 0.05).unwrap();
    assert!(r.deviation.iter().all(|&d| d <= 1e-12), "{:?}", r.deviation);
    assert!(r.c1_pass);

    let f = MultinomialMeasure::new(vec![0.3, 0.7], 10).unwrap().integral().unwrap();
    let r = homogeneity_report(&build_pyramid(&f), 3, Window::new(1, 7).unwrap(), 0.05).unwrap();
    for b in &r.blocks {
        assert!(b.h.iter().all(|&h| (h - 1.0).abs() <= 1e-10));
    }
    assert!(r.deviation.iter().all(|&d| d <= 1e-10));
    assert!(r.alpha_hat <= r.beta_hat);
}

#[test]
fn tau_closed_forms() {
    let tri = TauModel::multinomial(vec![0.4, 0.2, 0.4]).unwrap();
    assert!((tri.tau(2.0) - log3(25.0 / 9.0)).abs() <= 1e-12);
    assert!((tri.tau(2.0) - 0.9299470414358542).abs() <= 1e-12);
    let bin = TauModel::multinomial(vec![0.5, 0.5]).unwrap();
    for q in [-3.0, -0.5, 0.0, 1.0, 2.5, 7.0] {
        assert!((bin.tau(q) - (q - 1.0)).abs() <= 1e-12);
    }
}

#[test]
fn trinomial_spectrum_geometry() {
    let tri = TauModel::multinomial(vec![0.4, 0.2, 0.4]).unwrap();
    let (lo, hi) = tri.alpha_range();
    assert!((lo - log3(2.5)).abs() <= 1e-12);
    assert!((hi - log3(5.0)).abs() <= 1e-12);
    assert!((tri.legendre(lo) - log3(2.0)).abs() <= 1e-9);
    let peak = -(0.4f64.ln() * 2.0 + 0.2f64.ln()) / 3f64.ln() / 3.0;
    assert!((peak - 1.044353685003622).abs() <= 1e-12);
    assert!((tri.tau_prime(0.0) - peak).abs() <= 1e-12);
    assert!((tri.legendre(peak) - 1.0).abs() <= 1e-12);

    let q: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.05).collect();
    let tau = measure_tau(MeasureInput::Model(&tri), &q).unwrap();
    let d = legendre_transform(&tau, &linear_grid(lo, hi, 501)).unwrap();
    let (x, top) = d.argmax().unwrap();
    assert!((top - 1.0).abs() <= 1e-3 && (x - peak).abs() <= 5e-3);
}

#[test]
fn cascade_decomposes_to_identity_factor() {
    let f = MultinomialMeasure::new(vec![4.0 / 9.0, 1.0 / 9.0, 4.0 / 9.0], 7).unwrap().integral().unwrap();
    let d = decompose(&build_pyramid(&f), &DecompositionSchedule::auto_default(7).unwrap(), Some(&f)).unwrap();
    assert!(d.stages.iter().all(|s| s.h_blocks.iter().all(|h| (h - 1.0).abs() <= 1e-10)));
    for (a, b) in d.f.breakpoints().iter().zip(f.values()) {
        assert!((a - b).abs() <= 1e-12);
    }
    for (y, g) in d.g_grid.iter().zip(&d.g_values) {
        assert!((y - g).abs() <= 1e-12);
    }
    assert!(d.audit.kappa.iter().all(|&k| k <= 1e-9));
}

#[test]
fn offstage_error_is_bounded_by_cell_oscillation() {
    let z = za_function(2.0 / 3.0, 10).unwrap();
    let p = za_exact_pyramid(2.0 / 3.0, 10).unwrap();
    let d = decompose(&p, &DecompositionSchedule::explicit(vec![2, 4, 6, 8]).unwrap(), Some(&z)).unwrap();
    let r = compose_check(&z, &d).unwrap();
    assert_eq!(r.stage_error, 0.0);
    let bound = p.level(8).iter().copied().fold(0.0, f64::max);
    assert!((r.offstage_bound.unwrap() - bound).abs() <= 1e-15);
    assert!(r.offstage_error.unwrap() <= bound);
}

#[test]
fn identity_composes_exactly() {
    let id = SampledFunction::new(2, 8, (0..=256).map(|k| k as f64 / 256.0).collect(), "id").unwrap();
    let d = decompose(&build_pyramid(&id), &DecompositionSchedule::explicit(vec![3, 6]).unwrap(), Some(&id)).unwrap();
    let r = compose_check(&id, &d).unwrap();
    assert_eq!(r.stage_error, 0.0);
    assert!(r.offstage_error.unwrap() <= 1e-15);
}

#[test]
fn weierstrass_audit_settles() {
    let f = weierstrass(&Weierstrass::new(0.5, 2.0), 2, 16).unwrap();
    let p = build_pyramid(&f);
    // the auto schedule ends with a one-level stage whose two-child blocks
    // drive some lengths below double resolution
    let auto = decompose(&p, &DecompositionSchedule::auto_default(16).unwrap(), Some(&f));
    assert!(matches!(auto, Err(mfsub::Error::Unresolvable { level: 16, .. })));
    let d = decompose(&p, &DecompositionSchedule::explicit(vec![2, 4, 6, 9, 13]).unwrap(), Some(&f)).unwrap();
    // measured final kappa: 0.2366
    let last = *d.audit.kappa.last().unwrap();
    assert!(last <= 0.25, "kappa {:?}", d.audit.kappa);
    assert!(d.audit.verdict);
}

#[test]
fn holder_examples() {
    let z = za_function(2.0 / 3.0, 12).unwrap();
    let p = build_pyramid(&z);
    let h = holder_estimate(&p, 0.0, Window::new(4, 12).unwrap()).unwrap();
    assert!(h.exact_union);
    assert!((h.h - log3(1.5)).abs() <= 0.03, "{}", h.h);

    let w = weierstrass(&Weierstrass::new(0.7, 2.0), 2, 16).unwrap();
    let p = build_pyramid(&w);
    // the three-cell ball inflates oscillations by about 3^alpha, which at
    // j <= 14 still pulls log-ratios down by ~0.08; measured over 200 points:
    // min 0.438, median 0.592, max 0.682
    let mut hs: Vec<f64> = (0..200)
        .map(|i| {
            let t = (i as f64 + 0.5) / 200.0 * 0.987654;
            holder_estimate(&p, t, Window::new(8, 14).unwrap()).unwrap().h
        })
        .collect();
    hs.sort_by(f64::total_cmp);
    assert!((0.55..=0.75).contains(&hs[100]), "median {}", hs[100]);
    assert!(hs[0] >= 0.4 && hs[199] <= 0.8, "{} {}", hs[0], hs[199]);
}

#[test]
fn brownian_endpoint_variance() {
    let n = 10_000;
    let ends: Vec<f64> = (0..n).map(|s| *brownian_path(s, 1).unwrap().values().last().unwrap()).collect();
    let mean = ends.iter().sum::<f64>() / n as f64;
    let var = ends.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((var - 1.0).abs() <= 0.05, "{var}");
}

#[test]
fn brownian_median_exponent() {
    let mut hs: Vec<f64> = (0..20)
        .map(|s| {
            let p = build_pyramid(&brownian_path(s, 14).unwrap());
            intrinsic_exponent(&p, Window::new(8, 14).unwrap(), Aggregation::LiminfTailMin).unwrap().h
        })
        .collect();
    hs.sort_by(f64::total_cmp);
    let median = 0.5 * (hs[9] + hs[10]);
    assert!((0.45..=0.55).contains(&median), "{median}");
}

#[test]
fn takagi_exponent_is_reciprocal_beta() {
    let sys = SelfSimilarSystem::new(vec![0.5, 0.5], vec![1, -1], vec![0.7, 0.7], Forcing::Identity).unwrap();
    let beta = bisect(1.0, 10.0, |b| 2.0 * 0.7f64.powf(b) - 1.0);
    assert!((beta - 1.9434).abs() <= 1e-4);
    let z = selfsimilar_function(&sys, 2, 16, 1e-12).unwrap();
    let e = intrinsic_exponent(&build_pyramid(&z), Window::new(8, 16).unwrap(), Aggregation::LiminfTailMin).unwrap();
    assert!((e.h - 1.0 / beta).abs() <= 0.05, "{} vs {}", e.h, 1.0 / beta);
}

#[test]
fn za_spectrum_examples() {
    let a = 2.0 / 3.0;
    assert!((za_alpha(a).unwrap() - 0.5794).abs() <= 1e-4);
    let (lo, hi) = za_support(a).unwrap();
    assert!((lo - log3(1.5)).abs() <= 1e-12);
    assert!((hi - 1.0).abs() <= 1e-12);
    let s = za_spectrum(a, 201).unwrap();
    assert!(s.is_concave(1e-10));
    assert!(s.d.iter().all(|&d| d <= 1.0 + 1e-12));
}

#[test]
fn a0_bracket_and_direction() {
    let th = a0_threshold().unwrap();
    assert!(th.a0 > 0.55 && th.a0 < 0.57);
    let g = |a: f64| 54.0 * a.powi(3) - 27.0 * a * a - 1.0;
    assert!(g(0.55) < 0.0 && g(0.57) > 0.0);
    // alpha_a falls through 1 as a crosses a0
    assert!(za_alpha(th.a0 - 0.01).unwrap() > 1.0);
    assert!(za_alpha(th.a0 + 0.01).unwrap() < 1.0);
}

#[test]
fn coarse_spectra_of_regular_functions_sit_at_one() {
    let f = MultinomialMeasure::new(vec![0.5, 0.5], 12).unwrap().integral().unwrap();
    let s = coarse_spectrum(&build_pyramid(&f), (0.5, 1.5), 13, Window::new(6, 12).unwrap()).unwrap();
    let (x, _) = s.argmax().unwrap();
    assert!((x - 1.0).abs() <= 0.05, "{x}");
}

#[test]
fn exact_measure_spectrum_is_concave_with_unit_peak() {
    let s = measure_spectrum(&TauModel::multinomial(vec![4.0 / 9.0, 1.0 / 9.0, 4.0 / 9.0]).unwrap(), 501);
    assert!(s.is_concave(1e-10));
    let decomposed: OscillationPyramid = za_exact_pyramid(2.0 / 3.0, 4).unwrap();
    assert_eq!(decomposed.root(), 1.0);
}
