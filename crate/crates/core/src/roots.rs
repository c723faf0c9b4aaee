//! Bracketed scalar root finding for monotone functions.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    /// `f(x)` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Stop once `|f(x)| <= ftol`.
    pub ftol: f64,
    pub max_iter: usize,
    /// Maximum number of bracket expansions.
    pub max_expand: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-12,
            max_iter: 200,
            max_expand: 1100,
        }
    }
}

/// Root of an increasing `f` on `(0, inf)`. The bracket starts at
/// `[lo, hi]` and expands geometrically (halving `lo`, doubling `hi`).
pub fn solve_increasing_positive<F>(f: F, lo: f64, hi: f64, opts: SolveOptions) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut n = 0;
    while flo > 0.0 {
        n += 1;
        if n > opts.max_expand || lo < f64::MIN_POSITIVE {
            return Err(Error::NotBracketable);
        }
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = f(lo);
    }
    while fhi < 0.0 {
        n += 1;
        if n > opts.max_expand || !hi.is_finite() {
            return Err(Error::NotBracketable);
        }
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
    }
    bisect(&f, lo, hi, flo, fhi, opts)
}

/// Root of an increasing `f` on the real line; the bracket grows by
/// doubling its half-width around its midpoint.
pub fn solve_increasing_real<F>(f: F, lo: f64, hi: f64, opts: SolveOptions) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut n = 0;
    while flo > 0.0 || fhi < 0.0 {
        n += 1;
        if n > opts.max_expand || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NotBracketable);
        }
        let w = hi - lo;
        if flo > 0.0 {
            hi = lo;
            fhi = flo;
            lo -= 2.0 * w;
            flo = f(lo);
        } else {
            lo = hi;
            flo = fhi;
            hi += 2.0 * w;
            fhi = f(hi);
        }
    }
    bisect(&f, lo, hi, flo, fhi, opts)
}

fn bisect<F>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64, mut fhi: f64, opts: SolveOptions) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoRoot("function evaluated to NaN".into()));
    }
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it;
        if flo.abs() <= opts.ftol {
            return Ok(Root { x: lo, residual: flo, iterations: it });
        }
        if fhi.abs() <= opts.ftol {
            return Ok(Root { x: hi, residual: fhi, iterations: it });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::NoRoot("function evaluated to NaN".into()));
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let (x, residual) = if flo.abs() <= fhi.abs() { (lo, flo) } else { (hi, fhi) };
    Ok(Root { x, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two_on_positive_axis() {
        let r = solve_increasing_positive(|x| x * x - 2.0, 1e-3, 1.0, SolveOptions::default()).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn expands_downwards() {
        let r = solve_increasing_positive(|x| x - 1e-9, 1e-3, 1.0, SolveOptions::default()).unwrap();
        assert!((r.x - 1e-9).abs() <= 1e-12);
    }

    #[test]
    fn real_line_expansion() {
        let r = solve_increasing_real(|x| x + 37.5, 0.0, 1.0, SolveOptions::default()).unwrap();
        assert!((r.x + 37.5).abs() < 1e-12);
    }

    #[test]
    fn unbracketable_constant() {
        let err = solve_increasing_positive(|_| 1.0, 1e-3, 1.0, SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotBracketable));
    }
}
