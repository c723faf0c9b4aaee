/// Neumaier-compensated summation.
pub(crate) fn neumaier<I: Iterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn log_base(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

/// `b^j` as usize, or `None` on overflow.
pub(crate) fn checked_pow(base: u32, j: u32) -> Option<usize> {
    (base as usize).checked_pow(j)
}

/// Minimum over the last `ceil(n/2)` entries: the finite-scale liminf surrogate.
pub(crate) fn tail_min(xs: &[f64]) -> f64 {
    let n = xs.len();
    xs[n / 2..].iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    neumaier(xs.iter().copied()) / xs.len() as f64
}
