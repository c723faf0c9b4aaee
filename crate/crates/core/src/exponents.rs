//! Per-level exponents `H_j`, the intrinsic exponent, the `ν` scaling
//! function, homogeneity diagnostics, `L^q` spectra and Legendre transforms.

use serde::{Deserialize, Serialize};

use crate::exec::CHUNK;
use crate::grid::{cell_count, OscillationPyramid};
use crate::numeric::{log_base, neumaier, tail_min};
use crate::roots::{solve_increasing_positive, solve_increasing_real, SolveOptions};
use crate::spectra::{Provenance, SpectrumCurve};
use crate::{Error, Exec, Result};

/// Target for `|Σ ω^(1/H) − 1|`.
pub const SOLVER_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;
/// Entries that reach the root oscillation are multiplied by this factor so a
/// root of the level equation exists.
const SHRINK: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSolution {
    pub h: f64,
    /// `Σ ω^(1/h) − 1`.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `Σ ω^(1/h) = 1` for a row of oscillations in `(0, 1)`.
pub fn solve_level_exponent(row: &[f64]) -> Result<LevelSolution> {
    solve_level_exponent_with(row, Exec::Sequential)
}

/// As [`solve_level_exponent`]; long rows are summed in parallel chunks.
///
/// Works in `s = 1/h`, where `S(s) = Σ exp(s ln ω)` is convex and
/// decreasing: Newton steps are kept inside a bisection bracket.
pub fn solve_level_exponent_with(row: &[f64], exec: Exec) -> Result<LevelSolution> {
    if row.len() < 2 {
        return Err(Error::InvalidParameter("a level row needs at least 2 cells".into()));
    }
    if row.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::DegenerateRow);
    }
    if row.iter().all(|&w| w >= 1.0) {
        return Err(Error::NotBracketable);
    }
    let logs: Vec<f64> = row.iter().map(|w| w.ln()).collect();
    let eval = |s: f64| sum_and_slope(&logs, s, exec);

    // bracket in h, grown geometrically from [1e-3, 1]
    let (mut h_lo, mut h_hi) = (1e-3, 1.0);
    let (mut f_lo, _) = eval(1.0 / h_lo);
    let mut expansions = 0;
    while f_lo > 1.0 {
        h_hi = h_lo;
        h_lo *= 0.5;
        f_lo = eval(1.0 / h_lo).0;
        expansions += 1;
        if expansions > 1100 || h_lo < 1e-300 {
            return Err(Error::NotBracketable);
        }
    }
    let mut f_hi = eval(1.0 / h_hi).0;
    while f_hi < 1.0 {
        h_lo = h_hi;
        h_hi *= 2.0;
        f_hi = eval(1.0 / h_hi).0;
        expansions += 1;
        if expansions > 1100 || !h_hi.is_finite() {
            return Err(Error::NotBracketable);
        }
    }
    // s-bracket: S(a) >= 1 >= S(b)
    let (mut a, mut b) = (1.0 / h_hi, 1.0 / h_lo);
    let mut s = a;
    let (mut sum, mut slope) = eval(s);
    let mut best = (s, sum - 1.0);
    let mut iterations = 0;
    for it in 1..=MAX_ITER {
        iterations = it;
        let r = sum - 1.0;
        if r.abs() < best.1.abs() {
            best = (s, r);
        }
        if r.abs() <= SOLVER_TOL {
            break;
        }
        if r > 0.0 {
            a = s;
        } else {
            b = s;
        }
        let newton = s - r / slope;
        let next = if slope < 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if next == s || b - a <= f64::EPSILON * b {
            break;
        }
        s = next;
        (sum, slope) = eval(s);
    }
    let r = sum - 1.0;
    if r.abs() < best.1.abs() {
        best = (s, r);
    }
    let h = 1.0 / best.0;
    Ok(LevelSolution { h, residual: power_sum(row, 1.0 / h) - 1.0, iterations })
}

/// `(Σ e^{sℓ}, Σ ℓ e^{sℓ})` over fixed chunks.
fn sum_and_slope(logs: &[f64], s: f64, exec: Exec) -> (f64, f64) {
    let chunk = |c: &[f64]| {
        let sum = neumaier(c.iter().map(|&l| (s * l).exp()));
        let slope = neumaier(c.iter().map(|&l| l * (s * l).exp()));
        (sum, slope)
    };
    if logs.len() <= CHUNK || !exec.is_parallel() {
        let parts: Vec<(f64, f64)> = logs.chunks(CHUNK).map(chunk).collect();
        return combine(&parts);
    }
    let n = logs.len().div_ceil(CHUNK);
    let parts = exec.map(n, |c| chunk(&logs[c * CHUNK..((c + 1) * CHUNK).min(logs.len())]));
    combine(&parts)
}

fn combine(parts: &[(f64, f64)]) -> (f64, f64) {
    (neumaier(parts.iter().map(|p| p.0)), neumaier(parts.iter().map(|p| p.1)))
}

/// `Σ ω^p`, compensated.
pub fn power_sum(row: &[f64], p: f64) -> f64 {
    neumaier(row.iter().map(|w| w.powf(p)))
}

/// Inclusive level range `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: u32,
    pub hi: u32,
}

impl Window {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::InvalidParameter(format!("invalid window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[1, depth]`.
    pub fn full(depth: u32) -> Self {
        Self { lo: 1, hi: depth.max(1) }
    }

    pub fn check(&self, depth: u32) -> Result<()> {
        if self.hi > depth {
            return Err(Error::LevelOutOfRange { level: self.hi, depth });
        }
        Ok(())
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelExponentTrace {
    pub levels: Vec<u32>,
    pub h: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Level `j` of `p` divided by the root oscillation, with entries that reach
/// the root shrunk below 1.
pub fn normalized_row(p: &OscillationPyramid, j: u32) -> Result<Vec<f64>> {
    p.check_level(j)?;
    let root = p.root();
    if root <= 0.0 {
        return Err(Error::ZeroGlobalOscillation);
    }
    Ok(shrink_row(p.level(j).iter().map(|w| w / root)))
}

fn shrink_row(row: impl Iterator<Item = f64>) -> Vec<f64> {
    row.map(|w| if w >= 1.0 { SHRINK } else { w }).collect()
}

/// `H_j` for every level of `window`.
pub fn level_exponents(p: &OscillationPyramid, window: Window, exec: Exec) -> Result<LevelExponentTrace> {
    window.check(p.depth())?;
    let mut trace = LevelExponentTrace { levels: vec![], h: vec![], residuals: vec![] };
    for j in window.levels() {
        let s = solve_level_exponent_with(&normalized_row(p, j)?, exec)?;
        trace.levels.push(j);
        trace.h.push(s.h);
        trace.residuals.push(s.residual);
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Minimum over the last `ceil(n/2)` levels of the window.
    #[default]
    LiminfTailMin,
    /// Mean over the whole window.
    TailMean,
}

impl Aggregation {
    pub fn apply(self, xs: &[f64]) -> f64 {
        match self {
            Aggregation::LiminfTailMin => tail_min(xs),
            Aggregation::TailMean => crate::numeric::mean(xs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicExponent {
    pub h: f64,
    pub mode: Aggregation,
    pub window: Window,
    pub trace: LevelExponentTrace,
}

pub fn intrinsic_exponent(p: &OscillationPyramid, window: Window, mode: Aggregation) -> Result<IntrinsicExponent> {
    intrinsic_exponent_with(p, window, mode, Exec::default())
}

pub fn intrinsic_exponent_with(
    p: &OscillationPyramid,
    window: Window,
    mode: Aggregation,
    exec: Exec,
) -> Result<IntrinsicExponent> {
    let trace = level_exponents(p, window, exec)?;
    Ok(IntrinsicExponent { h: mode.apply(&trace.h), mode, window, trace })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKind {
    Nu,
    Tau,
}

/// A scaling function sampled on a grid, with its per-level estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFunction {
    pub kind: ScalingKind,
    /// `p` for `ν`, `q` for `τ`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Levels behind the estimate; empty for closed forms.
    pub levels: Vec<u32>,
    /// `per_level[i][m]` is the level-`levels[i]` estimate at `grid[m]`.
    pub per_level: Vec<Vec<f64>>,
    /// Exact `[α_min, α_max]` when known.
    pub slope_bounds: Option<(f64, f64)>,
    /// For `ν`: the `1/p` at which `ν(p) = 1`.
    pub h_from_nu: Option<f64>,
}

impl ScalingFunction {
    /// Discrete concavity: successive slopes do not increase by more than `tol`.
    pub fn is_concave(&self, tol: f64) -> bool {
        is_concave(&self.grid, &self.values, tol)
    }
}

pub(crate) fn is_concave(xs: &[f64], ys: &[f64], tol: f64) -> bool {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, y)| y.is_finite()).map(|(&x, &y)| (x, y)).collect();
    pts.windows(3).all(|w| {
        let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        s2 <= s1 + tol
    })
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// `ν_j(p) = 1 − log_b(Σ_k ω_{j,k}^p)/j` on the root-normalized pyramid, aggregated
/// over `window` by tail minimum; also the `H` with `ν(1/H) = 1`.
pub fn scaling_nu(p: &OscillationPyramid, p_grid: &[f64], window: Window) -> Result<ScalingFunction> {
    check_grid(p_grid, "p")?;
    if p_grid[0] <= 0.0 {
        return Err(Error::InvalidParameter("p grid must be positive".into()));
    }
    window.check(p.depth())?;
    let b = p.base() as f64;
    let rows: Vec<Vec<f64>> = window.levels().map(|j| normalized_row(p, j)).collect::<Result<_>>()?;
    let nu_j = |row: &[f64], j: u32, q: f64| 1.0 - log_base(power_sum(row, q), b) / j as f64;
    let levels: Vec<u32> = window.levels().collect();
    let per_level: Vec<Vec<f64>> = rows
        .iter()
        .zip(&levels)
        .map(|(row, &j)| p_grid.iter().map(|&q| nu_j(row, j, q)).collect())
        .collect();
    let values = (0..p_grid.len())
        .map(|m| tail_min(&per_level.iter().map(|r| r[m]).collect::<Vec<_>>()))
        .collect();
    let nu_at = |q: f64| {
        let xs: Vec<f64> = rows.iter().zip(&levels).map(|(row, &j)| nu_j(row, j, q)).collect();
        tail_min(&xs) - 1.0
    };
    let opts = SolveOptions { ftol: 0.0, ..SolveOptions::default() };
    let h_from_nu = solve_increasing_positive(nu_at, 0.5, 2.0, opts).ok().map(|r| 1.0 / r.x);
    Ok(ScalingFunction {
        kind: ScalingKind::Nu,
        grid: p_grid.to_vec(),
        values,
        levels,
        per_level,
        slope_bounds: None,
        h_from_nu,
    })
}

/// Self-similar cascade with branch ratios `r_k` and masses `p_k`; with all
/// ratios `1/b` this is a b-adic multinomial measure.
///
/// `τ(q)` solves `Σ p_k^q r_k^(−τ) = 1`, which for equal ratios reads
/// `τ(q) = −log_b Σ p_k^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauModel {
    pub ratios: Vec<f64>,
    pub probs: Vec<f64>,
}

impl TauModel {
    pub fn new(ratios: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if ratios.len() != probs.len() || ratios.len() < 2 {
            return Err(Error::InvalidParameter("ratios and masses must have equal length >= 2".into()));
        }
        if ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidParameter("ratios must lie in (0, 1)".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter("masses must be positive".into()));
        }
        let total = neumaier(probs.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self { ratios, probs })
    }

    /// Equal-ratio (b-adic) cascade.
    pub fn multinomial(probs: Vec<f64>) -> Result<Self> {
        let r = 1.0 / probs.len() as f64;
        Self::new(vec![r; probs.len()], probs)
    }

    fn equal_ratios(&self) -> Option<f64> {
        let r0 = self.ratios[0];
        self.ratios.iter().all(|&r| r == r0).then_some(r0)
    }

    /// `ln Σ p^q r^(−τ)` via log-sum-exp.
    fn log_partition(&self, q: f64, tau: f64) -> f64 {
        let terms: Vec<f64> = self.probs.iter().zip(&self.ratios).map(|(p, r)| q * p.ln() - tau * r.ln()).collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + neumaier(terms.iter().map(|t| (t - m).exp())).ln()
    }

    pub fn tau(&self, q: f64) -> f64 {
        if let Some(r) = self.equal_ratios() {
            let logs: Vec<f64> = self.probs.iter().map(|p| q * p.ln()).collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + neumaier(logs.iter().map(|t| (t - m).exp())).ln();
            return lse / r.ln();
        }
        let opts = SolveOptions { ftol: 0.0, ..SolveOptions::default() };
        let (lo, hi) = self.alpha_range();
        let guess = q * 0.5 * (lo + hi) - 1.0;
        solve_increasing_real(|t| self.log_partition(q, t), guess - 1.0, guess + 1.0, opts)
            .map(|r| r.x)
            .unwrap_or(f64::NAN)
    }

    /// `τ'(q) = Σ w ln p / Σ w ln r` with `w = p^q r^(−τ(q))`.
    pub fn tau_prime(&self, q: f64) -> f64 {
        let tau = self.tau(q);
        let terms: Vec<f64> = self.probs.iter().zip(&self.ratios).map(|(p, r)| q * p.ln() - tau * r.ln()).collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = terms.iter().map(|t| (t - m).exp()).collect();
        let num = neumaier(w.iter().zip(&self.probs).map(|(w, p)| w * p.ln()));
        let den = neumaier(w.iter().zip(&self.ratios).map(|(w, r)| w * r.ln()));
        num / den
    }

    fn exponents(&self) -> Vec<f64> {
        self.probs.iter().zip(&self.ratios).map(|(p, r)| p.ln() / r.ln()).collect()
    }

    /// `[α_min, α_max]`: extreme values of `ln p_k / ln r_k`.
    pub fn alpha_range(&self) -> (f64, f64) {
        let e = self.exponents();
        (e.iter().copied().fold(f64::INFINITY, f64::min), e.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Dimension at a support endpoint: the `s` with `Σ_{k extremal} r_k^s = 1`.
    fn endpoint_dimension(&self, alpha: f64) -> f64 {
        let tol = 1e-12 * alpha.abs().max(1.0);
        let rs: Vec<f64> = self
            .exponents()
            .iter()
            .zip(&self.ratios)
            .filter(|(e, _)| (*e - alpha).abs() <= tol)
            .map(|(_, &r)| r)
            .collect();
        if rs.len() == 1 {
            return 0.0;
        }
        if rs.iter().all(|&r| r == rs[0]) {
            return (rs.len() as f64).ln() / -rs[0].ln();
        }
        let opts = SolveOptions { ftol: 0.0, ..SolveOptions::default() };
        solve_increasing_positive(|s| 1.0 - neumaier(rs.iter().map(|r| r.powf(s))), 0.5, 1.0, opts)
            .map(|r| r.x)
            .unwrap_or(f64::NAN)
    }

    /// Exact Legendre transform `inf_q (qα − τ(q))`; `−∞` off the support.
    pub fn legendre(&self, alpha: f64) -> f64 {
        let (lo, hi) = self.alpha_range();
        let tol = 1e-12 * hi.abs().max(1.0);
        if alpha < lo - tol || alpha > hi + tol {
            return f64::NEG_INFINITY;
        }
        if hi - lo <= tol {
            // all exponents equal: a single point carrying dimension τ(0)
            return -self.tau(0.0);
        }
        if (alpha - lo).abs() <= tol {
            return self.endpoint_dimension(lo);
        }
        if (alpha - hi).abs() <= tol {
            return self.endpoint_dimension(hi);
        }
        // τ' decreases from α_max (q → −∞) to α_min (q → +∞)
        let g = |q: f64| alpha - self.tau_prime(q);
        let opts = SolveOptions { ftol: 0.0, ..SolveOptions::default() };
        match solve_increasing_real(g, -1.0, 1.0, opts) {
            Ok(r) => (r.x * alpha - self.tau(r.x)).max(0.0).min(1.0 + 1e-12),
            Err(_) => f64::NAN,
        }
    }
}

/// Input to [`measure_tau`].
#[derive(Clone, Copy, Debug)]
pub enum MeasureInput<'a> {
    /// Closed-form cascade.
    Model(&'a TauModel),
    /// b-adic cell masses `masses[j][k]` for levels `j = 0..=J`.
    Cells { base: u32, masses: &'a [Vec<f64>] },
}

/// `τ(q)` on `q_grid`: closed form for a model, tail-min over levels
/// `ceil(J/2)..=J` of `log_b Σ μ(I)^q / (−j)` for a cell table.
pub fn measure_tau(m: MeasureInput<'_>, q_grid: &[f64]) -> Result<ScalingFunction> {
    check_grid(q_grid, "q")?;
    match m {
        MeasureInput::Model(model) => Ok(ScalingFunction {
            kind: ScalingKind::Tau,
            grid: q_grid.to_vec(),
            values: q_grid.iter().map(|&q| model.tau(q)).collect(),
            levels: vec![],
            per_level: vec![],
            slope_bounds: Some(model.alpha_range()),
            h_from_nu: None,
        }),
        MeasureInput::Cells { base, masses } => {
            if masses.len() < 2 {
                return Err(Error::InvalidParameter("cell table needs levels 0 and 1 at least".into()));
            }
            let b = base as f64;
            for (j, row) in masses.iter().enumerate() {
                if row.len() != cell_count(base, j as u32)? {
                    return Err(Error::Malformed(format!("mass level {j} has wrong length")));
                }
                if row.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidParameter(format!("non-positive mass at level {j}")));
                }
            }
            let levels: Vec<u32> = (1..masses.len() as u32).collect();
            let per_level: Vec<Vec<f64>> = levels
                .iter()
                .map(|&j| {
                    q_grid
                        .iter()
                        .map(|&q| -log_base(power_sum(&masses[j as usize], q), b) / j as f64)
                        .collect()
                })
                .collect();
            let values = (0..q_grid.len())
                .map(|m| tail_min(&per_level.iter().map(|r| r[m]).collect::<Vec<_>>()))
                .collect();
            Ok(ScalingFunction {
                kind: ScalingKind::Tau,
                grid: q_grid.to_vec(),
                values,
                levels,
                per_level,
                slope_bounds: None,
                h_from_nu: None,
            })
        }
    }
}

/// Discrete Legendre transform `d(α) = min_q (qα − τ(q))` over the q grid.
///
/// The support is `slope_bounds` when known, otherwise the end slopes of the
/// grid; grid points outside it get `−∞`.
pub fn legendre_transform(tau: &ScalingFunction, alpha_grid: &[f64]) -> Result<SpectrumCurve> {
    check_grid(alpha_grid, "alpha")?;
    let q = &tau.grid;
    let t = &tau.values;
    let (lo, hi) = match tau.slope_bounds {
        Some(b) => b,
        None if q.len() >= 2 => {
            let n = q.len();
            let s_hi = (t[1] - t[0]) / (q[1] - q[0]);
            let s_lo = (t[n - 1] - t[n - 2]) / (q[n - 1] - q[n - 2]);
            (s_lo.min(s_hi), s_hi.max(s_lo))
        }
        None => return Err(Error::InvalidParameter("q grid needs at least two points".into())),
    };
    let tol = 1e-12 * hi.abs().max(1.0);
    if !alpha_grid.iter().any(|&a| a >= lo - tol && a <= hi + tol) {
        return Err(Error::EmptySupport { lo, hi });
    }
    let d = alpha_grid
        .iter()
        .map(|&a| {
            if a < lo - tol || a > hi + tol {
                f64::NEG_INFINITY
            } else {
                q.iter().zip(t).map(|(&q, &t)| q * a - t).fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    Ok(SpectrumCurve::new(alpha_grid.to_vec(), d, (lo, hi), Provenance::LegendreTheoretical))
}

/// One block's exponents at the relative levels of a homogeneity report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockExponents {
    pub k: usize,
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    /// Coarse level `J` whose cells are the blocks.
    pub level: u32,
    /// Relative levels `j` analysed inside each block.
    pub j_levels: Vec<u32>,
    pub blocks: Vec<BlockExponents>,
    /// Global estimate: tail-min of `H_j(Z)` over levels `J + j`.
    pub h_global: f64,
    /// `sup_K |H_j(Z_{J,K}) − h_global|` per `j`.
    pub deviation: Vec<f64>,
    /// `max_K − min_K` of `H_j(Z_{J,K})` per `j`.
    pub spread: Vec<f64>,
    /// Fitted bounds `b^(−jβ) ≤ ω_{j,k}(Z_{J,K}) ≤ b^(−jα)`.
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub threshold: f64,
    pub c1_pass: bool,
    pub c2_pass: bool,
}

pub const DEFAULT_HOMOGENEITY_THRESHOLD: f64 = 0.05;

pub fn homogeneity_report(p: &OscillationPyramid, level: u32, j_range: Window, threshold: f64) -> Result<HomogeneityReport> {
    homogeneity_report_with(p, level, j_range, threshold, Exec::default())
}

/// Per-block exponents of the rescaled restrictions `Z_{J,K}` and the C1/C2
/// surrogate verdicts.
pub fn homogeneity_report_with(
    p: &OscillationPyramid,
    level: u32,
    j_range: Window,
    threshold: f64,
    exec: Exec,
) -> Result<HomogeneityReport> {
    if level + j_range.hi > p.depth() {
        return Err(Error::LevelOutOfRange { level: level + j_range.hi, depth: p.depth() });
    }
    let b = p.base() as usize;
    let bf = p.base() as f64;
    let n_blocks = p.level(level).len();
    let j_levels: Vec<u32> = j_range.levels().collect();

    struct Block {
        h: Vec<f64>,
        max_log: Vec<f64>,
        min_log: Vec<f64>,
    }
    let blocks: Vec<Block> = exec.try_map(n_blocks, |k| {
        let scale = p.omega(level, k);
        if scale <= 0.0 {
            return Err(Error::ZeroOscillationCell { level, index: k });
        }
        let mut out = Block { h: vec![], max_log: vec![], min_log: vec![] };
        for &j in &j_levels {
            let width = b.pow(j);
            let raw = &p.level(level + j)[k * width..(k + 1) * width];
            let (lo, hi) = raw.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &w| (lo.min(w), hi.max(w)));
            if lo <= 0.0 {
                let idx = raw.iter().position(|&w| w <= 0.0).unwrap();
                return Err(Error::ZeroOscillationCell { level: level + j, index: k * width + idx });
            }
            let row = shrink_row(raw.iter().map(|w| w / scale));
            out.h.push(solve_level_exponent(&row)?.h);
            out.max_log.push(-log_base(hi / scale, bf) / j as f64);
            out.min_log.push(-log_base(lo / scale, bf) / j as f64);
        }
        Ok(out)
    })?;

    let global = level_exponents(p, Window { lo: level + j_range.lo, hi: level + j_range.hi }, exec)?;
    let h_global = tail_min(&global.h);
    let mut deviation = vec![];
    let mut spread = vec![];
    for i in 0..j_levels.len() {
        let hs = blocks.iter().map(|bl| bl.h[i]);
        let (lo, hi) = hs.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), h| (a.min(h), c.max(h)));
        deviation.push(hs.map(|h| (h - h_global).abs()).fold(0.0, f64::max));
        spread.push(hi - lo);
    }
    let alpha_hat = blocks.iter().flat_map(|bl| bl.max_log.iter().copied()).fold(f64::INFINITY, f64::min);
    let beta_hat = blocks.iter().flat_map(|bl| bl.min_log.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    let c1_pass = *deviation.last().unwrap() <= threshold;
    let non_increasing = deviation.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let c2_pass = non_increasing && alpha_hat > 0.0 && alpha_hat <= beta_hat && beta_hat.is_finite();
    Ok(HomogeneityReport {
        level,
        j_levels,
        blocks: blocks.into_iter().enumerate().map(|(k, bl)| BlockExponents { k, h: bl.h }).collect(),
        h_global,
        deviation,
        spread,
        alpha_hat,
        beta_hat,
        threshold,
        c1_pass,
        c2_pass,
    })
}
