//! b-adic cells, sampled functions and oscillation pyramids.
//!
//! Oscillations are taken over closed cells: the cell `(j, k)` covers the
//! samples with indices `k·b^(J-j) ..= (k+1)·b^(J-j)`, so neighbouring cells
//! share their boundary sample.

use serde::{Deserialize, Serialize};

use crate::numeric::checked_pow;
use crate::{Error, Exec, Result};

/// Largest sample count accepted for a grid (`b^J + 1`).
pub const MAX_SAMPLES: usize = 1 << 28;

/// Number of cells `b^level`, or an error if it does not fit the grid limit.
pub fn cell_count(base: u32, level: u32) -> Result<usize> {
    match checked_pow(base, level) {
        Some(n) if n < MAX_SAMPLES => Ok(n),
        _ => Err(Error::InvalidParameter(format!(
            "grid {base}^{level} exceeds {MAX_SAMPLES} samples"
        ))),
    }
}

fn check_base(base: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!("base must be >= 2, got {base}")));
    }
    Ok(())
}

/// The cell `[k·b^-j, (k+1)·b^-j]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub base: u32,
    pub level: u32,
    pub index: usize,
}

impl Interval {
    pub fn new(base: u32, level: u32, index: usize) -> Result<Self> {
        check_base(base)?;
        let n = cell_count(base, level)?;
        if index >= n {
            return Err(Error::InvalidParameter(format!(
                "cell index {index} out of range for level {level} (max {})",
                n - 1
            )));
        }
        Ok(Self { base, level, index })
    }

    /// The level-`level` cell containing `t`; `t = 1` falls in the last cell.
    pub fn containing(base: u32, level: u32, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain { value: t });
        }
        let n = cell_count(base, level)?;
        let k = ((t * n as f64).floor() as usize).min(n - 1);
        Ok(Self { base, level, index: k })
    }

    pub fn width(&self) -> f64 {
        (self.base as f64).powi(-(self.level as i32))
    }

    pub fn left(&self) -> f64 {
        self.index as f64 * self.width()
    }

    pub fn right(&self) -> f64 {
        (self.index + 1) as f64 * self.width()
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            base: self.base,
            level: self.level - 1,
            index: self.index / self.base as usize,
        })
    }

    pub fn children(&self) -> impl Iterator<Item = Interval> + '_ {
        let b = self.base as usize;
        (0..b).map(move |i| Interval {
            base: self.base,
            level: self.level + 1,
            index: self.index * b + i,
        })
    }
}

/// Values of `Z` at `t = k·b^-J`, `k = 0..=b^J`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    base: u32,
    depth: u32,
    values: Vec<f64>,
    label: String,
}

impl SampledFunction {
    pub fn new(base: u32, depth: u32, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        check_base(base)?;
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be >= 1".into()));
        }
        let expected = cell_count(base, depth)? + 1;
        if values.len() != expected {
            return Err(Error::WrongSampleCount { expected, found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let (lo, hi) = min_max(&values);
        if hi - lo <= 0.0 {
            return Err(Error::ZeroGlobalOscillation);
        }
        Ok(Self { base, depth, values, label: label.into() })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.cells() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.t(k)).collect()
    }

    pub fn range(&self) -> (f64, f64) {
        min_max(&self.values)
    }

    pub fn global_oscillation(&self) -> f64 {
        let (lo, hi) = self.range();
        hi - lo
    }

    /// `c·Z + d`.
    pub fn affine(&self, c: f64, d: f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| c * v + d).collect();
        Self::new(self.base, self.depth, values, self.label.clone())
    }

    /// Piecewise-affine interpolation between samples.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfDomain { value: t });
        }
        let n = self.cells();
        let x = t * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let s = x - k as f64;
        Ok(if s == 0.0 {
            self.values[k]
        } else {
            self.values[k] + s * (self.values[k + 1] - self.values[k])
        })
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PyramidSource {
    Sampled,
    Exact,
}

/// What to do with cells of zero oscillation before exponent computations.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ZeroPolicy {
    #[default]
    Error,
    Clamp { floor: f64 },
}

impl ZeroPolicy {
    pub const DEFAULT_FLOOR: f64 = 1e-300;

    pub fn clamp() -> Self {
        ZeroPolicy::Clamp { floor: Self::DEFAULT_FLOOR }
    }

    pub fn apply(self, p: &OscillationPyramid) -> Result<OscillationPyramid> {
        match self {
            ZeroPolicy::Error => {
                for (j, row) in p.omega.iter().enumerate() {
                    if let Some(k) = row.iter().position(|&w| w <= 0.0) {
                        return Err(Error::ZeroOscillationCell { level: j as u32, index: k });
                    }
                }
                Ok(p.clone())
            }
            ZeroPolicy::Clamp { floor } => Ok(p.clamp_zeros(floor)),
        }
    }
}

/// `ω[j][k]` for `0 ≤ j ≤ depth`, `0 ≤ k < b^j`.
///
/// Pyramids built from samples also keep each cell's `(min, max)`, which
/// ball oscillations over unions of cells need.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationPyramid {
    base: u32,
    depth: u32,
    omega: Vec<Vec<f64>>,
    source: PyramidSource,
    extrema: Option<Vec<Vec<(f64, f64)>>>,
}

/// [`build_pyramid_with`] using the default execution mode.
pub fn build_pyramid(f: &SampledFunction) -> OscillationPyramid {
    build_pyramid_with(f, Exec::default())
}

/// Finest cells from their two endpoint samples, coarser cells by merging
/// child `(min, max)` pairs.
pub fn build_pyramid_with(f: &SampledFunction, exec: Exec) -> OscillationPyramid {
    let b = f.base as usize;
    let v = &f.values;
    let finest: Vec<(f64, f64)> = exec.map(f.cells(), |k| {
        let (a, c) = (v[k], v[k + 1]);
        (a.min(c), a.max(c))
    });
    let mut extrema = vec![finest];
    for _ in 0..f.depth {
        let child = extrema.last().unwrap();
        let parent = exec.map(child.len() / b, |k| {
            child[k * b..(k + 1) * b]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, c)| (lo.min(a), hi.max(c)))
        });
        extrema.push(parent);
    }
    extrema.reverse();
    let omega = extrema
        .iter()
        .map(|row| row.iter().map(|&(lo, hi)| hi - lo).collect())
        .collect();
    OscillationPyramid {
        base: f.base,
        depth: f.depth,
        omega,
        source: PyramidSource::Sampled,
        extrema: Some(extrema),
    }
}

impl OscillationPyramid {
    /// Pyramid from an explicit table (e.g. closed-form oscillations).
    pub fn from_table(base: u32, omega: Vec<Vec<f64>>, source: PyramidSource) -> Result<Self> {
        check_base(base)?;
        if omega.is_empty() {
            return Err(Error::Malformed("empty pyramid".into()));
        }
        let depth = (omega.len() - 1) as u32;
        for (j, row) in omega.iter().enumerate() {
            let n = cell_count(base, j as u32)?;
            if row.len() != n {
                return Err(Error::Malformed(format!("level {j} has {} cells, expected {n}", row.len())));
            }
            if let Some(k) = row.iter().position(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Malformed(format!("invalid oscillation at ({j}, {k})")));
            }
        }
        Ok(Self { base, depth, omega, source, extrema: None })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn source(&self) -> PyramidSource {
        self.source
    }

    pub fn level(&self, j: u32) -> &[f64] {
        &self.omega[j as usize]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.omega
    }

    pub fn omega(&self, j: u32, k: usize) -> f64 {
        self.omega[j as usize][k]
    }

    pub fn root(&self) -> f64 {
        self.omega[0][0]
    }

    /// `(min, max)` of the samples in cell `(j, k)`, when built from samples.
    pub fn extrema(&self, j: u32, k: usize) -> Option<(f64, f64)> {
        self.extrema.as_ref().map(|e| e[j as usize][k])
    }

    pub fn has_extrema(&self) -> bool {
        self.extrema.is_some()
    }

    pub fn check_base(&self, other: u32) -> Result<()> {
        if self.base != other {
            return Err(Error::BaseMismatch { left: self.base, right: other });
        }
        Ok(())
    }

    pub fn check_level(&self, j: u32) -> Result<()> {
        if j > self.depth {
            return Err(Error::LevelOutOfRange { level: j, depth: self.depth });
        }
        Ok(())
    }

    /// Oscillations of the rescaled restriction `Z_{J,K}`:
    /// `ω_{j,k}(Z_{J,K}) = ω_{J+j, K·b^j+k}(Z) / ω_{J,K}(Z)`.
    pub fn restrict_rescale(&self, level: u32, index: usize) -> Result<Self> {
        self.check_level(level)?;
        let n = self.omega[level as usize].len();
        if index >= n {
            return Err(Error::InvalidParameter(format!("cell index {index} >= {n}")));
        }
        let scale = self.omega(level, index);
        if scale <= 0.0 {
            return Err(Error::ZeroOscillationCell { level, index });
        }
        let b = self.base as usize;
        let mut omega = Vec::with_capacity((self.depth - level + 1) as usize);
        let mut extrema = self.extrema.as_ref().map(|_| Vec::new());
        let offset = self.extrema(level, index).map(|(lo, _)| lo);
        let mut width = 1usize;
        for j in level..=self.depth {
            let lo = index * width;
            let row = &self.omega[j as usize][lo..lo + width];
            omega.push(row.iter().map(|w| w / scale).collect());
            if let (Some(ext), Some(m0)) = (extrema.as_mut(), offset) {
                let src = &self.extrema.as_ref().unwrap()[j as usize][lo..lo + width];
                ext.push(src.iter().map(|&(a, c)| ((a - m0) / scale, (c - m0) / scale)).collect());
            }
            width *= b;
        }
        Ok(Self {
            base: self.base,
            depth: self.depth - level,
            omega,
            source: self.source,
            extrema,
        })
    }

    /// Root-normalized copy (`ω[0][0] = 1`).
    pub fn normalized(&self) -> Result<Self> {
        self.restrict_rescale(0, 0)
    }

    /// Replaces every zero oscillation by `floor`.
    pub fn clamp_zeros(&self, floor: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.omega {
            for w in row.iter_mut() {
                if *w <= 0.0 {
                    *w = floor;
                }
            }
        }
        out
    }

    /// Checks `ω[j][k] ≥ ω[j+1][bk+i]` and `ω[j][k] ≤ Σ_i ω[j+1][bk+i]`
    /// (the latter up to `tol` relative).
    pub fn check_refinement(&self, tol: f64) -> bool {
        let b = self.base as usize;
        self.omega.windows(2).all(|w| {
            let (parent, child) = (&w[0], &w[1]);
            parent.iter().enumerate().all(|(k, &p)| {
                let kids = &child[k * b..(k + 1) * b];
                let sum: f64 = kids.iter().sum();
                kids.iter().all(|&c| c <= p) && p <= sum * (1.0 + tol) + tol
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(base: u32, depth: u32) -> SampledFunction {
        let n = base.pow(depth) as usize;
        let values = (0..=n).map(|k| k as f64 / n as f64).collect();
        SampledFunction::new(base, depth, values, "id").unwrap()
    }

    #[test]
    fn identity_pyramid_is_cell_width() {
        let p = build_pyramid(&identity(2, 3));
        for j in 0..=3u32 {
            for &w in p.level(j) {
                assert!((w - 2f64.powi(-(j as i32))).abs() < 1e-15);
            }
        }
        assert_eq!(p.root(), 1.0);
        assert!(p.check_refinement(0.0));
    }

    #[test]
    fn constant_samples_rejected() {
        let err = SampledFunction::new(2, 2, vec![3.0; 5], "c").unwrap_err();
        assert!(matches!(err, Error::ZeroGlobalOscillation));
    }

    #[test]
    fn wrong_count_and_non_finite() {
        assert!(matches!(
            SampledFunction::new(2, 2, vec![0.0, 1.0, 2.0, 3.0], ""),
            Err(Error::WrongSampleCount { expected: 5, found: 4 })
        ));
        assert!(matches!(
            SampledFunction::new(2, 1, vec![0.0, f64::NAN, 1.0], ""),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn closed_cells_share_endpoints() {
        // a spike on a shared endpoint counts in both neighbours
        let f = SampledFunction::new(2, 1, vec![0.0, 1.0, 0.0], "").unwrap();
        let p = build_pyramid(&f);
        assert_eq!(p.level(1), &[1.0, 1.0]);
        assert_eq!(p.root(), 1.0);
    }

    #[test]
    fn restrict_identity_is_normalization() {
        let f = identity(3, 3).affine(4.0, 1.0).unwrap();
        let p = build_pyramid(&f);
        let r = p.restrict_rescale(0, 0).unwrap();
        for j in 0..=3u32 {
            for (a, b) in r.level(j).iter().zip(p.level(j)) {
                assert_eq!(*a, b / 4.0);
            }
        }
    }

    #[test]
    fn restriction_root_is_one() {
        let values: Vec<f64> = (0..=16).map(|k| ((k * 7) % 5) as f64 + 0.1 * k as f64).collect();
        let p = build_pyramid(&SampledFunction::new(2, 4, values, "").unwrap());
        for k in 0..4 {
            let r = p.restrict_rescale(2, k).unwrap();
            assert_eq!(r.depth(), 2);
            assert!((r.root() - 1.0).abs() < 1e-15);
            let (lo, hi) = r.extrema(0, 0).unwrap();
            assert!((hi - lo - 1.0).abs() < 1e-15 && lo == 0.0);
        }
    }

    #[test]
    fn zero_cell_restriction_errors() {
        let f = SampledFunction::new(2, 2, vec![0.0, 0.0, 0.0, 1.0, 2.0], "").unwrap();
        let p = build_pyramid(&f);
        assert!(matches!(
            p.restrict_rescale(2, 0),
            Err(Error::ZeroOscillationCell { level: 2, index: 0 })
        ));
        assert!(ZeroPolicy::Error.apply(&p).is_err());
        let clamped = ZeroPolicy::clamp().apply(&p).unwrap();
        assert_eq!(clamped.omega(2, 0), ZeroPolicy::DEFAULT_FLOOR);
    }

    #[test]
    fn interval_geometry() {
        let c = Interval::new(3, 2, 4).unwrap();
        assert!((c.left() - 4.0 / 9.0).abs() < 1e-15);
        assert!((c.right() - 5.0 / 9.0).abs() < 1e-15);
        assert_eq!(c.parent().unwrap().index, 1);
        assert_eq!(c.children().map(|i| i.index).collect::<Vec<_>>(), vec![12, 13, 14]);
        assert!(Interval::new(3, 2, 9).is_err());
        assert_eq!(Interval::containing(2, 3, 1.0).unwrap().index, 7);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let values: Vec<f64> = (0..=4096).map(|k| ((k as f64) * 0.37).sin()).collect();
        let f = SampledFunction::new(2, 12, values, "").unwrap();
        assert_eq!(build_pyramid_with(&f, Exec::Sequential), build_pyramid_with(&f, Exec::Parallel));
    }
}
