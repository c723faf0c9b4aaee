//! Self-similar functions `Z(t) = λ_k·Z(S_k⁻¹ t) + φ(t)` for `t` in the
//! branch interval `S_k([0, 1])`, and the associated self-similar measures.

use serde::{Deserialize, Serialize};

use crate::exponents::TauModel;
use crate::grid::cell_count;
use crate::numeric::neumaier;
use crate::roots::{solve_increasing_positive, SolveOptions};
use crate::{Error, Exec, Result, SampledFunction};

/// Lipschitz forcing term, each with constant at most 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Forcing {
    #[serde(rename = "t")]
    Identity,
    /// `sin(πt)/π`.
    #[serde(rename = "sin_pi")]
    SinPi,
    #[serde(rename = "zero")]
    Zero,
    /// `min(t, 1 − t)`.
    #[serde(rename = "tent")]
    Tent,
}

impl Forcing {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Forcing::Identity => t,
            Forcing::SinPi => (std::f64::consts::PI * t).sin() / std::f64::consts::PI,
            Forcing::Zero => 0.0,
            Forcing::Tent => t.min(1.0 - t),
        }
    }
}

/// Similitudes `S_k` mapping `[0, 1]` onto consecutive intervals of lengths
/// `ratios[k]`, increasing when `signs[k] = 1` and decreasing when `−1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfSimilarSystem {
    pub ratios: Vec<f64>,
    pub signs: Vec<i8>,
    pub lambdas: Vec<f64>,
    pub forcing: Forcing,
}

impl SelfSimilarSystem {
    /// Structural checks only; [`Self::check_contraction`] adds the
    /// contraction conditions needed to build the function.
    pub fn new(ratios: Vec<f64>, signs: Vec<i8>, lambdas: Vec<f64>, forcing: Forcing) -> Result<Self> {
        let s = Self { ratios, signs, lambdas, forcing };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.ratios.len();
        if d < 2 || self.signs.len() != d || self.lambdas.len() != d {
            return Err(Error::InvalidParameter("ratios, signs and lambdas need a common length >= 2".into()));
        }
        if self.ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidParameter("ratios must lie in (0, 1)".into()));
        }
        let total = neumaier(self.ratios.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("ratios sum to {total}, expected 1")));
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("signs must be +1 or -1".into()));
        }
        if self.lambdas.iter().any(|&l| l == 0.0 || !l.is_finite()) {
            return Err(Error::InvalidParameter("lambdas must be finite and nonzero".into()));
        }
        Ok(())
    }

    pub fn branches(&self) -> usize {
        self.ratios.len()
    }

    /// Left endpoints `c_k` of the branch intervals.
    pub fn offsets(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.ratios.len());
        let mut acc = 0.0;
        for &r in &self.ratios {
            c.push(acc);
            acc += r;
        }
        c
    }

    /// `χ_k = r_k / |λ_k|`.
    pub fn chi(&self) -> Vec<f64> {
        self.ratios.iter().zip(&self.lambdas).map(|(r, l)| r / l.abs()).collect()
    }

    pub fn chi_max(&self) -> f64 {
        self.chi().into_iter().fold(0.0, f64::max)
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    /// `max |λ_k| < 1` and `0 < χ_min ≤ χ_max < 1`.
    pub fn check_contraction(&self) -> Result<()> {
        self.validate()?;
        let max_lambda = self.max_lambda();
        if max_lambda >= 1.0 {
            return Err(Error::NonContractive { max_lambda });
        }
        let chi_max = self.chi_max();
        if chi_max >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "need r_k < |lambda_k| for every branch (max r/|lambda| = {chi_max})"
            )));
        }
        Ok(())
    }

    fn equal_ratio_base(&self, base: u32) -> bool {
        self.ratios.len() == base as usize && self.ratios.iter().all(|&r| (r - 1.0 / base as f64).abs() <= 1e-15)
    }

    /// `S_k⁻¹(1)` for `end = true`, `S_k⁻¹(0)` otherwise, as a point of `{0, 1}`.
    fn preimage_of_end(&self, k: usize, right_end: bool) -> usize {
        usize::from(right_end == (self.signs[k] == 1))
    }

    /// Endpoint values `(Z(0), Z(1))` and the continuity check at every
    /// interior branch boundary.
    pub fn endpoint_values(&self) -> Result<(f64, f64)> {
        let d = self.branches();
        // x = Z(0), y = Z(1):  e = λ_k·(x or y) + φ
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        let u0 = self.preimage_of_end(0, false);
        let u1 = self.preimage_of_end(d - 1, true);
        m[0][u0] -= self.lambdas[0];
        m[1][u1] -= self.lambdas[d - 1];
        let rhs = [self.forcing.eval(0.0), self.forcing.eval(1.0)];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::NoRoot("endpoint equations are singular".into()));
        }
        let x = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        let y = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        let ends = [x, y];
        let scale = x.abs().max(y.abs()).max(1.0);
        for k in 1..d {
            let left = self.lambdas[k - 1] * ends[self.preimage_of_end(k - 1, true)];
            let right = self.lambdas[k] * ends[self.preimage_of_end(k, false)];
            if (left - right).abs() > 1e-12 * scale {
                return Err(Error::Discontinuous { boundary: k });
            }
        }
        Ok((x, y))
    }

    /// Branch containing `t`; boundaries belong to the right-hand branch.
    fn branch_of(&self, offsets: &[f64], t: f64) -> usize {
        match offsets.iter().rposition(|&c| c <= t) {
            Some(k) => k,
            None => 0,
        }
    }

    /// `S_k⁻¹(t)` clamped to `[0, 1]`.
    fn inverse(&self, offsets: &[f64], k: usize, t: f64) -> f64 {
        let u = ((t - offsets[k]) / self.ratios[k]).clamp(0.0, 1.0);
        if self.signs[k] == 1 {
            u
        } else {
            1.0 - u
        }
    }

    /// One application of the functional-equation operator to grid samples.
    pub fn apply(&self, base: u32, z: &[f64], exec: Exec) -> Vec<f64> {
        let n = z.len() - 1;
        if self.equal_ratio_base(base) {
            let sub = n / base as usize;
            return exec.map(n + 1, |i| {
                let k = (i / sub).min(base as usize - 1);
                let m = (i - k * sub) * base as usize;
                let src = if self.signs[k] == 1 { m } else { n - m };
                self.lambdas[k] * z[src] + self.forcing.eval(i as f64 / n as f64)
            });
        }
        let offsets = self.offsets();
        exec.map(n + 1, |i| {
            let t = i as f64 / n as f64;
            let k = self.branch_of(&offsets, t);
            let u = self.inverse(&offsets, k, t);
            self.lambdas[k] * interpolate(z, u) + self.forcing.eval(t)
        })
    }
}

fn interpolate(z: &[f64], u: f64) -> f64 {
    let n = z.len() - 1;
    let x = u * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    let s = x - k as f64;
    if s == 0.0 {
        z[k]
    } else {
        z[k] + s * (z[k + 1] - z[k])
    }
}

pub fn selfsimilar_function(s: &SelfSimilarSystem, base: u32, depth: u32, tol: f64) -> Result<SampledFunction> {
    selfsimilar_function_with(s, base, depth, tol, Exec::default())
}

/// Fixed point of the functional equation on the b-adic grid, iterated from
/// `Z⁰ = φ` until the sup-norm change is at most `tol`.
///
/// When every ratio equals `1/base` the preimages of grid points are grid
/// points; otherwise the previous iterate is interpolated affinely.
pub fn selfsimilar_function_with(
    s: &SelfSimilarSystem,
    base: u32,
    depth: u32,
    tol: f64,
    exec: Exec,
) -> Result<SampledFunction> {
    s.check_contraction()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    s.endpoint_values()?;
    let n = cell_count(base, depth)?;
    let mut z: Vec<f64> = (0..=n).map(|i| s.forcing.eval(i as f64 / n as f64)).collect();
    let rate = s.max_lambda();
    let max_iter = ((tol.ln() / rate.ln()).ceil() as usize).saturating_add(100).min(100_000);
    for _ in 0..max_iter {
        let next = s.apply(base, &z, exec);
        let change = next.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        z = next;
        if change <= tol {
            return SampledFunction::new(base, depth, z, "selfsimilar");
        }
    }
    Err(Error::NoRoot(format!("fixed-point iteration did not reach tol {tol}")))
}

/// `β > 1` with `Σ |λ_k|^β = 1`.
pub fn beta_exponent(lambdas: &[f64]) -> Result<f64> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| l == 0.0 || !l.is_finite()) {
        return Err(Error::InvalidParameter("lambdas must be finite and nonzero".into()));
    }
    let abs: Vec<f64> = lambdas.iter().map(|l| l.abs()).collect();
    let max_lambda = abs.iter().copied().fold(0.0, f64::max);
    if max_lambda >= 1.0 {
        return Err(Error::NonContractive { max_lambda });
    }
    if neumaier(abs.iter().copied()) <= 1.0 {
        return Err(Error::NoRoot("sum of |lambda| must exceed 1".into()));
    }
    let f = |b: f64| 1.0 - neumaier(abs.iter().map(|l| l.powf(b)));
    let opts = SolveOptions { ftol: 0.0, ..SolveOptions::default() };
    Ok(solve_increasing_positive(f, 1.0, 2.0, opts)?.x)
}

/// `κ = χ_max / (1 − χ_max)`.
pub fn lipschitz_threshold(s: &SelfSimilarSystem) -> Result<f64> {
    s.validate()?;
    let chi = s.chi_max();
    if chi >= 1.0 {
        return Err(Error::NotApplicable(format!("max r/|lambda| = {chi} is not below 1")));
    }
    Ok(chi / (1.0 - chi))
}

/// The self-similar probability measure with masses `p_k = |λ_k|^β`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfSimilarMeasure {
    pub beta: f64,
    pub probs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub signs: Vec<i8>,
}

pub fn selfsimilar_measure(s: &SelfSimilarSystem) -> Result<SelfSimilarMeasure> {
    s.validate()?;
    let beta = beta_exponent(&s.lambdas)?;
    let probs = s.lambdas.iter().map(|l| l.abs().powf(beta)).collect();
    Ok(SelfSimilarMeasure { beta, probs, ratios: s.ratios.clone(), signs: s.signs.clone() })
}

impl SelfSimilarMeasure {
    pub fn tau_model(&self) -> Result<TauModel> {
        let total = neumaier(self.probs.iter().copied());
        TauModel::new(self.ratios.clone(), self.probs.iter().map(|p| p / total).collect())
    }

    /// Masses of the level-`level` cylinders `S_{ε_1}∘…∘S_{ε_n}([0, 1])`,
    /// words in lexicographic order.
    pub fn cylinder_masses(&self, level: u32) -> Vec<f64> {
        let d = self.probs.len();
        let mut row = vec![1.0];
        for _ in 0..level {
            row = (0..row.len() * d).map(|c| row[c / d] * self.probs[c % d]).collect();
        }
        row
    }

    fn is_badic(&self, base: u32) -> bool {
        self.ratios.len() == base as usize && self.ratios.iter().all(|&r| (r - 1.0 / base as f64).abs() <= 1e-15)
    }

    /// `μ[0, t]`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let mut prefix = vec![0.0; self.probs.len() + 1];
        for k in 0..self.probs.len() {
            prefix[k + 1] = prefix[k] + self.probs[k];
        }
        let mut offsets = vec![0.0; self.ratios.len()];
        for k in 1..self.ratios.len() {
            offsets[k] = offsets[k - 1] + self.ratios[k - 1];
        }
        // F(t) = acc + scale·F(u)
        let (mut acc, mut scale, mut u) = (0.0, 1.0f64, t);
        for _ in 0..200 {
            if scale.abs() < 1e-18 {
                break;
            }
            let k = offsets.iter().rposition(|&c| c <= u).unwrap_or(0);
            let x = ((u - offsets[k]) / self.ratios[k]).clamp(0.0, 1.0);
            if self.signs[k] == 1 {
                acc += scale * prefix[k];
                scale *= self.probs[k];
                u = x;
            } else {
                acc += scale * prefix[k + 1];
                scale *= -self.probs[k];
                u = 1.0 - x;
            }
        }
        acc + scale * u
    }

    /// Masses of the b-adic cells at `level`. Equal ratios `1/base` walk the
    /// digits with orientation; otherwise CDF differences are used.
    pub fn badic_masses(&self, base: u32, level: u32) -> Result<Vec<f64>> {
        let n = cell_count(base, level)?;
        if self.is_badic(base) {
            let b = base as usize;
            return Ok((0..n)
                .map(|k| {
                    let mut digits = vec![0usize; level as usize];
                    let mut rest = k;
                    for d in digits.iter_mut().rev() {
                        *d = rest % b;
                        rest /= b;
                    }
                    let (mut mass, mut sign) = (1.0, 1i8);
                    for xi in digits {
                        let e = if sign == 1 { xi } else { b - 1 - xi };
                        mass *= self.probs[e];
                        sign *= self.signs[e];
                    }
                    mass
                })
                .collect());
        }
        let cdf: Vec<f64> = (0..=n).map(|k| self.cdf(k as f64 / n as f64)).collect();
        Ok(cdf.windows(2).map(|w| w[1] - w[0]).collect())
    }

    /// Mass rows for levels `0..=depth`.
    pub fn mass_table(&self, base: u32, depth: u32) -> Result<Vec<Vec<f64>>> {
        (0..=depth).map(|j| self.badic_masses(base, j)).collect()
    }
}
