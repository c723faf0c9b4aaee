//! Factorization `Z = g ∘ f`: the time change `f` is built stage by stage
//! from per-block exponents, and `g` is `Z` transported along `f`.

use serde::{Deserialize, Serialize};

use crate::exponents::{normalized_row, solve_level_exponent, solve_level_exponent_with};
use crate::grid::{build_pyramid, cell_count, Interval, OscillationPyramid};
use crate::numeric::{log_base, neumaier, tail_min};
use crate::{Error, Exec, Result, SampledFunction};

const SHRINK: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum ScheduleRule {
    Explicit,
    /// `J_{p+1} = J_p + max(1, ⌊J_p·max(η, 1/ln J_p)⌋)`.
    Auto { eta: f64 },
}

/// Stage levels `J_0 < J_1 < … < J_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSchedule {
    pub levels: Vec<u32>,
    pub rule: ScheduleRule,
}

impl DecompositionSchedule {
    pub const DEFAULT_ETA: f64 = 0.3;
    pub const DEFAULT_START: u32 = 2;

    pub fn explicit(levels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() || levels[0] == 0 || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "schedule levels must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { levels, rule: ScheduleRule::Explicit })
    }

    /// Levels from the η-rule starting at `start`; when the next level would
    /// pass `depth`, `depth` itself closes the schedule.
    pub fn auto(depth: u32, start: u32, eta: f64) -> Result<Self> {
        if start == 0 || start > depth {
            return Err(Error::ScheduleExceedsDepth { level: start, depth });
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be nonnegative, got {eta}")));
        }
        let mut levels = vec![start];
        loop {
            let j = *levels.last().unwrap();
            if j == depth {
                break;
            }
            let rate = if j > 1 { eta.max(1.0 / (j as f64).ln()) } else { eta.max(1.0) };
            let step = ((j as f64 * rate).floor() as u32).max(1);
            levels.push((j + step).min(depth));
        }
        Ok(Self { levels, rule: ScheduleRule::Auto { eta } })
    }

    pub fn auto_default(depth: u32) -> Result<Self> {
        Self::auto(depth, Self::DEFAULT_START.min(depth), Self::DEFAULT_ETA)
    }

    pub fn check(&self, depth: u32) -> Result<()> {
        let last = *self.levels.last().unwrap();
        if last > depth {
            return Err(Error::ScheduleExceedsDepth { level: last, depth });
        }
        Ok(())
    }

    pub fn final_level(&self) -> u32 {
        *self.levels.last().unwrap()
    }
}

/// Strictly increasing piecewise-affine map of `[0, 1]` onto itself, given by
/// its values at the points `k·b^-J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    base: u32,
    level: u32,
    breakpoints: Vec<f64>,
}

impl MonotoneMap {
    pub fn new(base: u32, level: u32, breakpoints: Vec<f64>) -> Result<Self> {
        let n = cell_count(base, level)?;
        if breakpoints.len() != n + 1 {
            return Err(Error::WrongSampleCount { expected: n + 1, found: breakpoints.len() });
        }
        if breakpoints[0] != 0.0 || breakpoints[n] != 1.0 {
            return Err(Error::InvalidParameter("a monotone map must send 0 to 0 and 1 to 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { base, level, breakpoints })
    }

    pub fn identity(base: u32, level: u32) -> Result<Self> {
        let n = cell_count(base, level)?;
        Self::new(base, level, (0..=n).map(|k| k as f64 / n as f64).collect())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain { value: t });
        }
        let n = self.breakpoints.len() - 1;
        let x = t * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let s = x - k as f64;
        let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
        Ok(if s == 0.0 { a } else { a + s * (b - a) })
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::OutOfDomain { value: y });
        }
        let n = self.breakpoints.len() - 1;
        let idx = self.breakpoints.partition_point(|&b| b <= y).clamp(1, n);
        let k = idx - 1;
        let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
        let s = ((y - a) / (b - a)).clamp(0.0, 1.0);
        Ok((k as f64 + s) / n as f64)
    }

    /// Smallest gap between consecutive breakpoints.
    pub fn min_gap(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// One stage of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(rename = "J")]
    pub level: u32,
    /// Exponent solved for each block of the previous stage (a single entry
    /// for stage 0).
    #[serde(rename = "H_blocks")]
    pub h_blocks: Vec<f64>,
    /// `max_K |Σ_children |U| − |U_K|| / |U_K|` before renormalization.
    pub partition_residual: f64,
    /// `f` at the points `k·b^-J`.
    #[serde(skip)]
    pub breakpoints: Vec<f64>,
    /// `|U_{J,k}|`, carried multiplicatively from stage to stage rather than
    /// recovered from breakpoint differences, which lose relative precision
    /// on small cells.
    #[serde(skip)]
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonofractalityAudit {
    pub h: f64,
    /// `κ̂_n = max_k |log ω_{J_n,k}(Z) / log |U_{J_n,k}| − H|` per stage.
    pub kappa: Vec<f64>,
    /// `max (log|T| / log|T'| − 1)` over child/parent pairs; undefined for
    /// stage 0, whose parent is `[0, 1]`.
    pub covering_gap: Vec<Option<f64>>,
    /// `κ̂` is non-increasing over the last half of the stages. This is a
    /// finite-stage reading only.
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub f: MonotoneMap,
    /// `f(t_k)` at the final-stage points (equal to the breakpoints of `f`).
    pub g_grid: Vec<f64>,
    /// `g(f(t_k)) = Z(t_k)`; empty when no samples of `Z` were supplied.
    pub g_values: Vec<f64>,
    pub stages: Vec<Stage>,
    pub audit: MonofractalityAudit,
}

impl Decomposition {
    /// `g(y)` by affine interpolation of the transport pairs.
    pub fn g_at(&self, y: f64) -> Result<f64> {
        if self.g_values.is_empty() {
            return Err(Error::InvalidParameter("decomposition carries no samples of g".into()));
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::OutOfDomain { value: y });
        }
        let n = self.g_grid.len() - 1;
        let idx = self.g_grid.partition_point(|&x| x <= y).clamp(1, n);
        let k = idx - 1;
        let (a, b) = (self.g_grid[k], self.g_grid[k + 1]);
        if y == a {
            return Ok(self.g_values[k]);
        }
        let s = ((y - a) / (b - a)).clamp(0.0, 1.0);
        Ok(self.g_values[k] + s * (self.g_values[k + 1] - self.g_values[k]))
    }

    /// `g` resampled on the uniform grid of `depth`, for re-analysis.
    pub fn resample_g(&self, base: u32, depth: u32) -> Result<SampledFunction> {
        let n = cell_count(base, depth)?;
        let values = (0..=n).map(|k| self.g_at(k as f64 / n as f64)).collect::<Result<Vec<_>>>()?;
        SampledFunction::new(base, depth, values, "g")
    }

    pub fn max_partition_residual(&self) -> f64 {
        self.stages.iter().map(|s| s.partition_residual).fold(0.0, f64::max)
    }
}

pub fn decompose(p: &OscillationPyramid, schedule: &DecompositionSchedule, z: Option<&SampledFunction>) -> Result<Decomposition> {
    decompose_with(p, schedule, z, Exec::default())
}

/// Builds `f` and `g` on the schedule of `p`.
///
/// Stage 0 sets `|U_{J_0,k}| = ω_{J_0,k}^(1/H_0)`. Each later stage splits
/// every block `K` of the previous stage: children get
/// `|U_K|·(ω_child/ω_K)^(1/H_K)`, where `H_K` solves the level equation on
/// the block's relative oscillations, and are rescaled to fill `U_K` exactly.
/// `z`, when given, supplies the samples transported to `g`.
pub fn decompose_with(
    p: &OscillationPyramid,
    schedule: &DecompositionSchedule,
    z: Option<&SampledFunction>,
    exec: Exec,
) -> Result<Decomposition> {
    schedule.check(p.depth())?;
    let b = p.base() as usize;
    let j0 = schedule.levels[0];
    check_positive(p, j0)?;
    let row0 = normalized_row(p, j0)?;
    let s0 = solve_level_exponent_with(&row0, exec)?;
    let raw: Vec<f64> = row0.iter().map(|w| w.powf(1.0 / s0.h)).collect();
    let (bp0, len0, res0) = fill(&raw, 0.0, 1.0, 1.0);
    check_resolved(j0, &bp0)?;
    let mut stages =
        vec![Stage { level: j0, h_blocks: vec![s0.h], partition_residual: res0, breakpoints: bp0, lengths: len0 }];

    for &level in &schedule.levels[1..] {
        check_positive(p, level)?;
        let prev = stages.last().unwrap();
        let width = b.pow(level - prev.level);
        let parents = p.level(prev.level);
        let children = p.level(level);
        let pb = &prev.breakpoints;
        let pl = &prev.lengths;
        let blocks = exec.try_map(parents.len(), |k| {
            let scale = parents[k];
            let rel: Vec<f64> = children[k * width..(k + 1) * width]
                .iter()
                .map(|w| {
                    let r = w / scale;
                    if r >= 1.0 {
                        SHRINK
                    } else {
                        r
                    }
                })
                .collect();
            let s = solve_level_exponent(&rel)?;
            let raw: Vec<f64> = rel.iter().map(|r| pl[k] * r.powf(1.0 / s.h)).collect();
            let (bp, len, res) = fill(&raw, pb[k], pb[k + 1], pl[k]);
            Ok::<_, Error>((s.h, bp, len, res))
        })?;
        let mut breakpoints = Vec::with_capacity(children.len() + 1);
        breakpoints.push(0.0);
        let mut lengths = Vec::with_capacity(children.len());
        let mut h_blocks = Vec::with_capacity(blocks.len());
        let mut residual: f64 = 0.0;
        for (h, bp, len, res) in blocks {
            h_blocks.push(h);
            residual = residual.max(res);
            breakpoints.extend_from_slice(&bp[1..]);
            lengths.extend(len);
        }
        check_resolved(level, &breakpoints)?;
        stages.push(Stage { level, h_blocks, partition_residual: residual, breakpoints, lengths });
    }

    let last = stages.last().unwrap();
    let f = MonotoneMap::new(p.base(), last.level, last.breakpoints.clone())?;
    let g_values = match z {
        Some(z) => {
            p.check_base(z.base())?;
            if z.depth() < last.level {
                return Err(Error::LevelOutOfRange { level: last.level, depth: z.depth() });
            }
            let stride = b.pow(z.depth() - last.level);
            (0..f.breakpoints.len()).map(|k| z.values()[k * stride]).collect()
        }
        None => vec![],
    };
    let h = solve_level_exponent_with(&normalized_row(p, last.level)?, exec)?.h;
    let mut d = Decomposition {
        g_grid: f.breakpoints.clone(),
        f,
        g_values,
        stages,
        audit: MonofractalityAudit { h, kappa: vec![], covering_gap: vec![], verdict: false },
    };
    d.audit = monofractality_audit(&d, p, h)?;
    Ok(d)
}

/// Cells whose length underflows next to their left breakpoint (typically a
/// sibling of a child that attains the whole parent oscillation).
fn check_resolved(level: u32, breakpoints: &[f64]) -> Result<()> {
    match breakpoints.windows(2).position(|w| !(w[1] > w[0])) {
        Some(index) => Err(Error::Unresolvable { level, index }),
        None => Ok(()),
    }
}

fn check_positive(p: &OscillationPyramid, level: u32) -> Result<()> {
    if let Some(k) = p.level(level).iter().position(|&w| w <= 0.0) {
        return Err(Error::ZeroOscillationCell { level, index: k });
    }
    Ok(())
}

/// Child lengths rescaled to sum to `parent`, their breakpoints from `left`
/// (the last one pinned to `right`), and the relative deficit of the raw
/// lengths.
fn fill(raw: &[f64], left: f64, right: f64, parent: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let total = neumaier(raw.iter().copied());
    let residual = ((total - parent) / parent).abs();
    let scale = parent / total;
    let lengths: Vec<f64> = raw.iter().map(|r| r * scale).collect();
    let mut bp = Vec::with_capacity(raw.len() + 1);
    bp.push(left);
    let mut acc = 0.0;
    for &l in &lengths[..lengths.len() - 1] {
        acc += l;
        bp.push(left + acc);
    }
    bp.push(right);
    (bp, lengths, residual)
}

/// Stage-by-stage bands `|U|^(H+κ) ≤ ω ≤ |U|^(H−κ)` and covering gaps.
pub fn monofractality_audit(d: &Decomposition, p: &OscillationPyramid, h: f64) -> Result<MonofractalityAudit> {
    let root = p.root();
    if root <= 0.0 {
        return Err(Error::ZeroGlobalOscillation);
    }
    let bf = p.base() as f64;
    let b = p.base() as usize;
    let mut kappa = Vec::with_capacity(d.stages.len());
    let mut covering_gap = Vec::with_capacity(d.stages.len());
    for (n, stage) in d.stages.iter().enumerate() {
        p.check_level(stage.level)?;
        let lengths = &stage.lengths;
        let omega = p.level(stage.level);
        let k_hat = lengths
            .iter()
            .zip(omega)
            .filter(|(u, w)| **u < 1.0 && **w > 0.0)
            .map(|(&u, &w)| (log_base(w / root, bf) / log_base(u, bf) - h).abs())
            .fold(0.0, f64::max);
        kappa.push(k_hat);
        covering_gap.push(if n == 0 {
            None
        } else {
            let parent = &d.stages[n - 1].lengths;
            let width = b.pow(stage.level - d.stages[n - 1].level);
            let gap = lengths
                .iter()
                .enumerate()
                .map(|(k, &u)| u.ln() / parent[k / width].ln() - 1.0)
                .fold(0.0, f64::max);
            Some(gap)
        });
    }
    let tail = &kappa[kappa.len() / 2..];
    let verdict = tail.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    Ok(MonofractalityAudit { h, kappa, covering_gap, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposeReport {
    /// `max_k |g(f(t_k)) − Z(t_k)|` over final-stage points.
    pub stage_error: f64,
    /// Same over the remaining grid points of `Z`, when `Z` is finer.
    pub offstage_error: Option<f64>,
    /// `max_k ω_{J_n,k}(Z)`: the off-stage error never exceeds it.
    pub offstage_bound: Option<f64>,
}

/// Reconstruction error of `g ∘ f` against the samples of `Z`.
pub fn compose_check(z: &SampledFunction, d: &Decomposition) -> Result<ComposeReport> {
    if z.base() != d.f.base() {
        return Err(Error::BaseMismatch { left: z.base(), right: d.f.base() });
    }
    let level = d.f.level();
    if z.depth() < level {
        return Err(Error::LevelOutOfRange { level, depth: z.depth() });
    }
    let stride = (z.base() as usize).pow(z.depth() - level);
    let v = z.values();
    let mut stage_error: f64 = 0.0;
    for (k, &y) in d.f.breakpoints().iter().enumerate() {
        stage_error = stage_error.max((d.g_at(y)? - v[k * stride]).abs());
    }
    if stride == 1 {
        return Ok(ComposeReport { stage_error, offstage_error: None, offstage_bound: None });
    }
    let mut off: f64 = 0.0;
    for (i, &zi) in v.iter().enumerate() {
        if i % stride != 0 {
            let y = d.f.evaluate(z.t(i))?;
            off = off.max((d.g_at(y)? - zi).abs());
        }
    }
    let bound = build_pyramid(z).level(level).iter().copied().fold(0.0, f64::max);
    Ok(ComposeReport { stage_error, offstage_error: Some(off), offstage_bound: Some(bound) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub t: f64,
    pub levels: Vec<u32>,
    /// `−log_b ω_{B(t, b^-j)} / j` per level.
    pub log_ratios: Vec<f64>,
    pub h: f64,
    /// Ball oscillations came from exact cell extrema rather than the
    /// neighbour-sum bound.
    pub exact_union: bool,
}

/// Pointwise exponent from oscillations over `I_j⁻(t) ∪ I_j(t) ∪ I_j⁺(t)`,
/// aggregated by tail minimum. Boundary cells use the neighbours that exist.
pub fn holder_estimate(p: &OscillationPyramid, t: f64, window: crate::exponents::Window) -> Result<HolderEstimate> {
    window.check(p.depth())?;
    let root = p.root();
    if root <= 0.0 {
        return Err(Error::ZeroGlobalOscillation);
    }
    let bf = p.base() as f64;
    let mut log_ratios = vec![];
    let levels: Vec<u32> = window.levels().collect();
    for &j in &levels {
        let cell = Interval::containing(p.base(), j, t)?;
        let n = p.level(j).len();
        let lo = cell.index.saturating_sub(1);
        let hi = (cell.index + 1).min(n - 1);
        let omega = if p.has_extrema() {
            let (mut a, mut c) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in lo..=hi {
                let (x, y) = p.extrema(j, k).unwrap();
                a = a.min(x);
                c = c.max(y);
            }
            c - a
        } else {
            (lo..=hi).map(|k| p.omega(j, k)).sum()
        };
        log_ratios.push(-log_base(omega / root, bf) / j as f64);
    }
    Ok(HolderEstimate { t, h: tail_min(&log_ratios), levels, log_ratios, exact_union: p.has_extrema() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Window;

    #[test]
    fn auto_schedules() {
        assert_eq!(DecompositionSchedule::auto_default(10).unwrap().levels, vec![2, 4, 6, 9, 10]);
        assert_eq!(DecompositionSchedule::auto_default(16).unwrap().levels, vec![2, 4, 6, 9, 13, 16]);
        assert_eq!(DecompositionSchedule::auto_default(6).unwrap().levels, vec![2, 4, 6]);
        let s = DecompositionSchedule::auto_default(12).unwrap();
        assert!(s.levels.len() >= 3);
    }

    #[test]
    fn schedule_validation() {
        assert!(DecompositionSchedule::explicit(vec![3, 2]).is_err());
        assert!(DecompositionSchedule::explicit(vec![]).is_err());
        let s = DecompositionSchedule::explicit(vec![2, 12]).unwrap();
        assert!(matches!(s.check(10), Err(Error::ScheduleExceedsDepth { level: 12, depth: 10 })));
    }

    #[test]
    fn identity_map() {
        let f = MonotoneMap::identity(2, 4).unwrap();
        for t in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((f.evaluate(t).unwrap() - t).abs() < 1e-15);
            assert!((f.invert(t).unwrap() - t).abs() < 1e-15);
        }
        assert!(matches!(f.evaluate(1.5), Err(Error::OutOfDomain { .. })));
        assert!(f.invert(-0.1).is_err());
    }

    #[test]
    fn map_validation() {
        assert!(MonotoneMap::new(2, 1, vec![0.0, 0.5, 0.9]).is_err());
        assert!(MonotoneMap::new(2, 1, vec![0.0, 0.0, 1.0]).is_err());
        assert!(MonotoneMap::new(2, 1, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn fill_is_exact_at_ends() {
        let (bp, len, res) = fill(&[0.1, 0.15, 0.2500001], 0.25, 0.75, 0.5);
        assert_eq!(bp[0], 0.25);
        assert_eq!(bp[3], 0.75);
        assert!((len.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!(res > 1e-7 && res < 1e-6);
    }

    #[test]
    fn monofractal_input_gives_identity_map() {
        // ω_{j,k} = 2^{-jH}: every split is equal
        let h = 0.6;
        let table: Vec<Vec<f64>> = (0..=8).map(|j| vec![2f64.powf(-(j as f64) * h); 1 << j]).collect();
        let p = OscillationPyramid::from_table(2, table, crate::PyramidSource::Exact).unwrap();
        let s = DecompositionSchedule::auto_default(8).unwrap();
        let d = decompose(&p, &s, None).unwrap();
        let id = MonotoneMap::identity(2, 8).unwrap();
        for (a, b) in d.f.breakpoints().iter().zip(id.breakpoints()) {
            assert!((a - b).abs() < 1e-14);
        }
        for st in &d.stages {
            for &hb in &st.h_blocks {
                assert!((hb - h).abs() < 1e-12);
            }
        }
        assert!(d.audit.kappa.iter().all(|&k| k < 1e-12));
    }

    #[test]
    fn stage_points_are_stable() {
        let v: Vec<f64> = (0..=729).map(|k| ((k as f64) * 0.013).sin() + 0.3 * ((k * k) as f64 * 1e-3).cos()).collect();
        let z = SampledFunction::new(3, 6, v, "").unwrap();
        let p = build_pyramid(&z);
        let d = decompose(&p, &DecompositionSchedule::explicit(vec![2, 4, 6]).unwrap(), Some(&z));
        let d = match d {
            Ok(d) => d,
            Err(Error::ZeroOscillationCell { .. }) => return,
            Err(e) => panic!("{e}"),
        };
        for w in d.stages.windows(2) {
            let stride = 3usize.pow(w[1].level - w[0].level);
            for (k, &x) in w[0].breakpoints.iter().enumerate() {
                assert_eq!(x, w[1].breakpoints[k * stride]);
            }
        }
        let rep = compose_check(&z, &d).unwrap();
        assert_eq!(rep.stage_error, 0.0);
    }

    #[test]
    fn holder_of_identity_tends_to_one() {
        let n = 1 << 14;
        let z = SampledFunction::new(2, 14, (0..=n).map(|k| k as f64 / n as f64).collect(), "").unwrap();
        let e = holder_estimate(&build_pyramid(&z), 0.3, Window::new(8, 14).unwrap()).unwrap();
        assert!(e.log_ratios.windows(2).all(|w| w[1] > w[0]));
        assert!(e.h > 0.85 && e.h < 1.0);
    }
}
