//! Singularity spectra: exact Legendre curves for cascades, the `Z_a`
//! family (two independent routes), the subordination mapping and a coarse
//! histogram estimate for arbitrary pyramids.

use serde::{Deserialize, Serialize};

use crate::exponents::{is_concave, TauModel};
use crate::generators::{za_drift, za_exponent, za_shadow_measure, za_slopes, za_validate};
use crate::numeric::log_base;
use crate::roots::{solve_increasing_real, SolveOptions};
use crate::{Error, Exec, OscillationPyramid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LegendreTheoretical,
    Mapped,
    CoarseEmpirical,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::LegendreTheoretical => "legendre_theoretical",
            Provenance::Mapped => "mapped",
            Provenance::CoarseEmpirical => "coarse_empirical",
        }
    }
}

/// `d` on a grid of exponents; `−∞` marks exponents outside the support (or,
/// for coarse curves, bins without data).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    /// `α` for measures, `h` for functions.
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub support: (f64, f64),
    pub provenance: Provenance,
}

impl SpectrumCurve {
    pub fn new(x: Vec<f64>, d: Vec<f64>, support: (f64, f64), provenance: Provenance) -> Self {
        Self { x, d, support, provenance }
    }

    /// Largest finite `d` and where it is attained.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.x
            .iter()
            .zip(&self.d)
            .filter(|(_, d)| d.is_finite())
            .fold(None, |acc: Option<(f64, f64)>, (&x, &d)| match acc {
                Some((_, best)) if best >= d => acc,
                _ => Some((x, d)),
            })
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        is_concave(&self.x, &self.d, tol)
    }

    /// Sup distance to `other` over points finite in both curves.
    pub fn sup_distance(&self, other: &SpectrumCurve) -> f64 {
        self.d
            .iter()
            .zip(&other.d)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `n ≥ 2` equally spaced points over `[lo, hi]`, endpoints included.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || hi == lo {
        return vec![lo];
    }
    (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

pub const DEFAULT_POINTS: usize = 201;

/// Exact Legendre spectrum of a cascade on `n` points across its support.
pub fn measure_spectrum(model: &TauModel, n: usize) -> SpectrumCurve {
    let (lo, hi) = model.alpha_range();
    measure_spectrum_on(model, &linear_grid(lo, hi, n), Exec::default())
}

pub fn measure_spectrum_on(model: &TauModel, alpha: &[f64], exec: Exec) -> SpectrumCurve {
    let d = exec.map(alpha.len(), |i| model.legendre(alpha[i]));
    SpectrumCurve::new(alpha.to_vec(), d, model.alpha_range(), Provenance::LegendreTheoretical)
}

/// Spectrum of `Z = g ∘ f` when `f` integrates a measure with spectrum `dμ`
/// and `g` is monofractal of exponent `h`: `d_Z(h·α) = d_μ(α)`.
pub fn subordinated_spectrum(dmu: &SpectrumCurve, h: f64) -> Result<SpectrumCurve> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::OutOfRange { value: h, range: "(0, 1]" });
    }
    Ok(SpectrumCurve::new(
        dmu.x.iter().map(|a| a * h).collect(),
        dmu.d.clone(),
        (dmu.support.0 * h, dmu.support.1 * h),
        Provenance::Mapped,
    ))
}

/// `α_a = −(1/3)·log_3(a²(2a − 1))`, where the spectrum of `Z_a` peaks.
pub fn za_alpha(a: f64) -> Result<f64> {
    za_validate(a)?;
    Ok(-log_base(a * a * (2.0 * a - 1.0), 3.0) / 3.0)
}

/// `[−log_3 a, −log_3(2a − 1)]`.
pub fn za_support(a: f64) -> Result<(f64, f64)> {
    za_validate(a)?;
    Ok((-log_base(a, 3.0), -log_base(2.0 * a - 1.0, 3.0)))
}

fn za_shadow(a: f64) -> Result<TauModel> {
    TauModel::multinomial(za_shadow_measure(a).to_vec())
}

/// `d_{Z_a}(h) = d_{μ_a}(h + log_3(4a − 1))`.
pub fn za_spectrum_at(a: f64, h: f64) -> Result<f64> {
    za_validate(a)?;
    let drift = za_drift(a);
    Ok(za_shadow(a)?.legendre(h + drift))
}

/// Spectrum of `Z_a` on `n` points across its support, via the shadow
/// measure shifted by the drift.
pub fn za_spectrum(a: f64, n: usize) -> Result<SpectrumCurve> {
    let (lo, hi) = za_support(a)?;
    za_spectrum_on(a, &linear_grid(lo, hi, n))
}

pub fn za_spectrum_on(a: f64, h: &[f64]) -> Result<SpectrumCurve> {
    let model = za_shadow(a)?;
    let drift = za_drift(a);
    let d = h.iter().map(|&x| model.legendre(x + drift)).collect();
    Ok(SpectrumCurve::new(h.to_vec(), d, za_support(a)?, Provenance::LegendreTheoretical))
}

/// Trinomial `ν_a = (a^(1/H_a), (2a − 1)^(1/H_a), a^(1/H_a))`: the measure
/// whose integral is the time change of `Z_a`.
pub fn za_time_change_measure(a: f64) -> Result<(TauModel, f64)> {
    let hs = za_exponent(a)?.h;
    let w: Vec<f64> = za_slopes(a).iter().map(|s| s.powf(1.0 / hs)).collect();
    let total: f64 = w.iter().sum();
    Ok((TauModel::multinomial(w.iter().map(|x| x / total).collect())?, hs))
}

/// Second route to the `Z_a` spectrum: the `ν_a` spectrum mapped by `H_a`,
/// evaluated on `h`.
pub fn za_spectrum_subordinated_on(a: f64, h: &[f64]) -> Result<SpectrumCurve> {
    let (nu, hs) = za_time_change_measure(a)?;
    let alpha: Vec<f64> = h.iter().map(|x| x / hs).collect();
    let base = measure_spectrum_on(&nu, &alpha, Exec::default());
    let mut mapped = subordinated_spectrum(&base, hs)?;
    mapped.x = h.to_vec();
    Ok(mapped)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub a0: f64,
    /// `54a₀³ − 27a₀² − 1`.
    pub residual: f64,
    /// `α_{a₀}`, equal to 1.
    pub alpha: f64,
}

/// The `a₀ ∈ (1/2, 1)` with `α_{a₀} = 1`, i.e. `54a³ − 27a² = 1`.
pub fn a0_threshold() -> Result<Threshold> {
    let f = |a: f64| 54.0 * a * a * a - 27.0 * a * a - 1.0;
    let opts = SolveOptions { ftol: 0.0, ..SolveOptions::default() };
    let r = solve_increasing_real(f, 0.5, 1.0, opts)?;
    Ok(Threshold { a0: r.x, residual: f(r.x), alpha: za_alpha(r.x)? })
}

/// Histogram estimate: the exponents `−log_b ω_{j,k}/j` of the normalized
/// pyramid are counted in `bins` equal bins over `range`, and `d` in a bin is
/// the least-squares slope of `log_b N_j` against `j` over `window`. Bins
/// with fewer than three populated levels get `−∞`. Heuristic only.
pub fn coarse_spectrum(
    p: &OscillationPyramid,
    range: (f64, f64),
    bins: usize,
    window: crate::exponents::Window,
) -> Result<SpectrumCurve> {
    window.check(p.depth())?;
    let (lo, hi) = range;
    if bins == 0 || !(hi > lo) {
        return Err(Error::InvalidParameter("coarse spectrum needs bins >= 1 and a non-empty range".into()));
    }
    let root = p.root();
    if root <= 0.0 {
        return Err(Error::ZeroGlobalOscillation);
    }
    let b = p.base() as f64;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![vec![0usize; bins]; window.len()];
    for (i, j) in window.levels().enumerate() {
        for &w in p.level(j) {
            if w <= 0.0 {
                continue;
            }
            let h = -log_base(w / root, b) / j as f64;
            if h < lo || h > hi {
                continue;
            }
            let bin = (((h - lo) / width) as usize).min(bins - 1);
            counts[i][bin] += 1;
        }
    }
    let centers: Vec<f64> = (0..bins).map(|m| lo + (m as f64 + 0.5) * width).collect();
    let d = (0..bins)
        .map(|m| {
            let pts: Vec<(f64, f64)> = window
                .levels()
                .enumerate()
                .filter(|(i, _)| counts[*i][m] > 0)
                .map(|(i, j)| (j as f64, log_base(counts[i][m] as f64, b)))
                .collect();
            if pts.len() < 3 {
                return f64::NEG_INFINITY;
            }
            slope(&pts)
        })
        .collect();
    Ok(SpectrumCurve::new(centers, d, range, Provenance::CoarseEmpirical))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::za_exact_pyramid;

    #[test]
    fn bourbaki_alpha_and_peak() {
        let a = 2.0 / 3.0;
        let alpha = za_alpha(a).unwrap();
        assert!((alpha - (1.0 - log_base(4.0, 3.0) / 3.0)).abs() < 1e-14);
        assert!((za_spectrum_at(a, alpha).unwrap() - 1.0).abs() < 1e-10);
        let (lo, hi) = za_support(a).unwrap();
        assert!((lo - log_base(1.5, 3.0)).abs() < 1e-14);
        assert!((hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_routes_agree() {
        for a in [0.6, 2.0 / 3.0, 0.75, 5.0 / 6.0] {
            let one = za_spectrum(a, 101).unwrap();
            let two = za_spectrum_subordinated_on(a, &one.x).unwrap();
            for (x, y) in one.d.iter().zip(&two.d) {
                assert!((x - y).abs() < 1e-9 || (x.is_infinite() && y.is_infinite()), "a={a}: {x} {y}");
            }
        }
    }

    #[test]
    fn binomial_point_spectrum() {
        let m = TauModel::multinomial(vec![0.5, 0.5]).unwrap();
        let s = measure_spectrum(&m, 11);
        assert_eq!(s.x.len(), 1);
        assert!((s.d[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subordination_scales_argmax() {
        let m = TauModel::multinomial(vec![0.4, 0.2, 0.4]).unwrap();
        let s = measure_spectrum(&m, 201);
        let t = subordinated_spectrum(&s, 0.5).unwrap();
        let (xs, ds) = s.argmax().unwrap();
        let (xt, dt) = t.argmax().unwrap();
        assert_eq!(ds, dt);
        assert_eq!(xt, 0.5 * xs);
        assert!(subordinated_spectrum(&s, 1.5).is_err());
        assert!(s.is_concave(1e-10));
    }

    #[test]
    fn threshold() {
        let t = a0_threshold().unwrap();
        assert!(t.residual.abs() <= 1e-12);
        assert!((t.alpha - 1.0).abs() < 1e-9);
        assert!(t.a0 > 0.55 && t.a0 < 0.57);
    }

    #[test]
    fn coarse_identity_is_concentrated() {
        let table: Vec<Vec<f64>> = (0..=10).map(|j| vec![2f64.powi(-j); 1 << j]).collect();
        let p = OscillationPyramid::from_table(2, table, crate::PyramidSource::Exact).unwrap();
        let s = coarse_spectrum(&p, (0.5, 1.5), 5, crate::exponents::Window::new(4, 10).unwrap()).unwrap();
        assert!((s.d[2] - 1.0).abs() < 1e-12);
        assert!(s.d.iter().enumerate().all(|(i, d)| i == 2 || d.is_infinite()));
    }

    #[test]
    fn coarse_bourbaki_close_to_theory() {
        let a = 2.0 / 3.0;
        let p = za_exact_pyramid(a, 12).unwrap();
        let range = za_support(a).unwrap();
        let s = coarse_spectrum(&p, range, 13, crate::exponents::Window::new(6, 12).unwrap()).unwrap();
        let theory = za_spectrum_on(a, &s.x).unwrap();
        let err = (2..=10).map(|i| (s.d[i] - theory.d[i]).abs()).fold(0.0, f64::max);
        assert!(err < 0.1, "{err}");
    }
}
