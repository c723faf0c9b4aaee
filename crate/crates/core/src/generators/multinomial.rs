use crate::exponents::TauModel;
use crate::grid::cell_count;
use crate::{Error, Exec, Result, SampledFunction};

/// b-adic cascade: the cell with digits `ξ_1…ξ_j` has mass `Π p_{ξ_i}`.
///
/// Zero weights are allowed (Cantor-type measures); operations that need a
/// full-support measure reject them.
#[derive(Clone, Debug, PartialEq)]
pub struct MultinomialMeasure {
    weights: Vec<f64>,
    depth: u32,
}

impl MultinomialMeasure {
    pub fn new(weights: Vec<f64>, depth: u32) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidParameter("a multinomial needs at least 2 weights".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, expected 1")));
        }
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be >= 1".into()));
        }
        cell_count(weights.len() as u32, depth)?;
        Ok(Self { weights, depth })
    }

    pub fn base(&self) -> u32 {
        self.weights.len() as u32
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Masses of the cells at `level` (any level, not only up to `depth`).
    pub fn cell_masses(&self, level: u32) -> Vec<f64> {
        let b = self.weights.len();
        let mut row = vec![1.0];
        for _ in 0..level {
            row = (0..row.len() * b).map(|c| row[c / b] * self.weights[c % b]).collect();
        }
        row
    }

    /// Mass rows for levels `0..=depth`.
    pub fn mass_table(&self) -> Vec<Vec<f64>> {
        let b = self.weights.len();
        let mut table = vec![vec![1.0]];
        for _ in 0..self.depth {
            let row = table.last().unwrap();
            let next = (0..row.len() * b).map(|c| row[c / b] * self.weights[c % b]).collect();
            table.push(next);
        }
        table
    }

    pub fn tau_model(&self) -> Result<TauModel> {
        TauModel::multinomial(self.weights.clone())
    }

    /// `μ[0, k·b^-J]` from the base-`b` digits of `k`.
    pub fn cdf_at_index(&self, k: usize) -> f64 {
        let b = self.weights.len();
        let n = b.pow(self.depth);
        if k >= n {
            return 1.0;
        }
        let mut prefix = vec![0.0; b];
        for i in 1..b {
            prefix[i] = prefix[i - 1] + self.weights[i - 1];
        }
        let mut digits = vec![0usize; self.depth as usize];
        let mut rest = k;
        for d in digits.iter_mut().rev() {
            *d = rest % b;
            rest /= b;
        }
        let (mut acc, mut scale) = (0.0, 1.0);
        for &d in &digits {
            acc += scale * prefix[d];
            scale *= self.weights[d];
        }
        acc
    }

    /// `F(t) = μ[0, t]` sampled on its own grid; `F(0) = 0`, `F(1) = 1` exactly.
    pub fn integral(&self) -> Result<SampledFunction> {
        self.integral_with(Exec::default())
    }

    pub fn integral_with(&self, exec: Exec) -> Result<SampledFunction> {
        let n = self.base() as usize;
        let cells = n.pow(self.depth);
        let values = exec.map(cells + 1, |k| self.cdf_at_index(k));
        let label = format!("multinomial{:?}", self.weights);
        SampledFunction::new(self.base(), self.depth, values, label)
    }
}
