use serde::{Deserialize, Serialize};

use crate::grid::cell_count;
use crate::{Error, Exec, Result, SampledFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    #[default]
    Sin,
    Cos,
}

impl Phase {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Phase::Sin => x.sin(),
            Phase::Cos => x.cos(),
        }
    }
}

/// `W(t) = Σ_{k < n} b_w^(−αk) w(b_w^k t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weierstrass {
    pub alpha: f64,
    pub b_w: f64,
    pub phase: Phase,
    /// `None` picks the smallest `n` with `b_w^(−αn) < 1e-12`.
    pub n_terms: Option<usize>,
}

impl Weierstrass {
    pub fn new(alpha: f64, b_w: f64) -> Self {
        Self { alpha, b_w, phase: Phase::Sin, n_terms: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::OutOfRange { value: self.alpha, range: "(0, 1)" });
        }
        if !(self.b_w > 1.0 && self.b_w.is_finite()) {
            return Err(Error::InvalidParameter(format!("b_w must exceed 1, got {}", self.b_w)));
        }
        if self.n_terms == Some(0) {
            return Err(Error::InvalidParameter("n_terms must be positive".into()));
        }
        Ok(())
    }

    pub fn terms(&self) -> usize {
        self.n_terms.unwrap_or_else(|| {
            let n = (12.0 * 10f64.ln() / (self.alpha * self.b_w.ln())).floor() as usize + 1;
            n.max(1)
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let decay = self.b_w.powf(-self.alpha);
        let (mut amp, mut freq, mut sum) = (1.0, 1.0, 0.0);
        for _ in 0..self.terms() {
            sum += amp * self.phase.eval(freq * t);
            amp *= decay;
            freq *= self.b_w;
        }
        sum
    }
}

pub fn weierstrass(w: &Weierstrass, base: u32, depth: u32) -> Result<SampledFunction> {
    weierstrass_with(w, base, depth, Exec::default())
}

/// Samples `w` on the b-adic grid of `depth`, in parallel over points.
pub fn weierstrass_with(w: &Weierstrass, base: u32, depth: u32, exec: Exec) -> Result<SampledFunction> {
    w.validate()?;
    let n = cell_count(base, depth)?;
    let values = exec.map(n + 1, |k| w.eval(k as f64 / n as f64));
    SampledFunction::new(base, depth, values, format!("weierstrass(alpha={}, b={})", w.alpha, w.b_w))
}

/// `left(2t)` on `[0, 1/2]` followed by `right(2t − 1)`, shifted to be continuous.
/// Both halves must be dyadic of the same depth; the result has depth + 1.
pub fn juxtapose(left: &SampledFunction, right: &SampledFunction) -> Result<SampledFunction> {
    if left.base() != 2 || right.base() != 2 {
        return Err(Error::InvalidParameter("juxtaposition needs dyadic grids".into()));
    }
    if left.depth() != right.depth() {
        return Err(Error::InvalidParameter("juxtaposed halves must share a depth".into()));
    }
    let l = left.values();
    let r = right.values();
    let shift = l[l.len() - 1] - r[0];
    let mut values = l.to_vec();
    values.extend(r[1..].iter().map(|v| v + shift));
    SampledFunction::new(2, left.depth() + 1, values, format!("{} | {}", left.label(), right.label()))
}
