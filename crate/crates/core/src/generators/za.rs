//! The triadic family `Z_a`: each refinement replaces the chord over a cell
//! by rise `a`, fall `2a − 1`, rise `a` (relative to the chord's increment).

use crate::exponents::{solve_level_exponent, LevelSolution};
use crate::generators::MultinomialMeasure;
use crate::grid::{cell_count, OscillationPyramid, PyramidSource};
use crate::{Error, Exec, Result, SampledFunction};

const RANGE: &str = "(1/2, 1)";

pub fn za_validate(a: f64) -> Result<()> {
    if !(a > 0.5 && a < 1.0) {
        return Err(Error::OutOfRange { value: a, range: RANGE });
    }
    Ok(())
}

/// Absolute slopes relative to the parent chord: `(a, 2a − 1, a)`.
pub fn za_slopes(a: f64) -> [f64; 3] {
    [a, 2.0 * a - 1.0, a]
}

/// `log_3(4a − 1)`: oscillations are `μ_a(I)·(4a − 1)^j`.
pub fn za_drift(a: f64) -> f64 {
    (4.0 * a - 1.0).ln() / 3f64.ln()
}

/// Weights `(a, 2a − 1, a)/(4a − 1)` of the shadow trinomial `μ_a`.
pub fn za_shadow_measure(a: f64) -> [f64; 3] {
    let s = 4.0 * a - 1.0;
    [a / s, (2.0 * a - 1.0) / s, a / s]
}

pub fn za_function(a: f64, depth: u32) -> Result<SampledFunction> {
    za_function_with(a, depth, Exec::default())
}

/// `depth` rounds of the three-point refinement starting from `Z⁰(t) = t`.
pub fn za_function_with(a: f64, depth: u32, exec: Exec) -> Result<SampledFunction> {
    za_validate(a)?;
    cell_count(3, depth)?;
    let mut v = vec![0.0, 1.0];
    for _ in 0..depth {
        let n = v.len() - 1;
        let old = &v;
        v = exec.map(3 * n + 1, |i| {
            let (k, r) = (i / 3, i % 3);
            if r == 0 {
                return old[k];
            }
            let d = old[k + 1] - old[k];
            if r == 1 {
                old[k] + a * d
            } else {
                old[k] + (1.0 - a) * d
            }
        });
    }
    SampledFunction::new(3, depth, v, format!("za(a={a})"))
}

/// `Z_a` for `a ∈ (1/2, 1)`; for `a ∈ (0, 1/2]` the integral of the
/// trinomial `(a, 1 − 2a, a)`.
pub fn za_family_function(a: f64, depth: u32) -> Result<SampledFunction> {
    if a > 0.0 && a <= 0.5 {
        let m = MultinomialMeasure::new(vec![a, 1.0 - 2.0 * a, a], depth)?;
        return Ok(m.integral()?.with_label(format!("za(a={a})")));
    }
    za_function(a, depth)
}

/// Exact `ω_{j,k}(Z_a)`: product of the slopes selected by the digits of `k`.
pub fn za_exact_oscillation(a: f64, j: u32, k: usize) -> Result<f64> {
    za_validate(a)?;
    let n = cell_count(3, j)?;
    if k >= n {
        return Err(Error::InvalidParameter(format!("cell index {k} >= {n}")));
    }
    let w = za_slopes(a);
    let mut rest = k;
    let mut omega = 1.0;
    for _ in 0..j {
        omega *= w[rest % 3];
        rest /= 3;
    }
    Ok(omega)
}

/// Exact pyramid of `Z_a` down to `depth`.
pub fn za_exact_pyramid(a: f64, depth: u32) -> Result<OscillationPyramid> {
    za_validate(a)?;
    cell_count(3, depth)?;
    let w = za_slopes(a);
    let mut table = vec![vec![1.0]];
    for _ in 0..depth {
        let row = table.last().unwrap();
        let next = (0..row.len() * 3).map(|c| row[c / 3] * w[c % 3]).collect();
        table.push(next);
    }
    OscillationPyramid::from_table(3, table, PyramidSource::Exact)
}

/// `H_a`: the root of `2a^(1/H) + (2a − 1)^(1/H) = 1`.
pub fn za_exponent(a: f64) -> Result<LevelSolution> {
    za_validate(a)?;
    solve_level_exponent(&za_slopes(a))
}
