use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result, SampledFunction};

pub const MAX_BROWNIAN_DEPTH: u32 = 24;

/// Brownian motion on the dyadic grid of `depth` by midpoint displacement:
/// `B(1) ~ N(0, 1)`, and each point new at level `j` gets the mean of its
/// neighbours plus an independent `N(0, 2^−(j+1))` draw. Draws are taken
/// level by level, left to right.
pub fn brownian_path(seed: u64, depth: u32) -> Result<SampledFunction> {
    if depth == 0 || depth > MAX_BROWNIAN_DEPTH {
        return Err(Error::InvalidParameter(format!("depth must be in 1..={MAX_BROWNIAN_DEPTH}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << depth;
    let mut v = vec![0.0; n + 1];
    v[n] = rng.sample::<f64, _>(StandardNormal);
    for j in 1..=depth {
        let step = n >> j;
        let sd = 2f64.powi(-(j as i32 + 1)).sqrt();
        for k in (step..n).step_by(2 * step) {
            let z: f64 = rng.sample(StandardNormal);
            v[k] = 0.5 * (v[k - step] + v[k + step]) + sd * z;
        }
    }
    SampledFunction::new(2, depth, v, format!("brownian(seed={seed})"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(brownian_path(7, 8).unwrap(), brownian_path(7, 8).unwrap());
        assert_ne!(brownian_path(7, 8).unwrap().values(), brownian_path(8, 8).unwrap().values());
    }

    #[test]
    fn coarse_values_are_consistent_in_law() {
        // increments over the finest level have variance 2^-depth
        let depth = 12;
        let f = brownian_path(3, depth).unwrap();
        let v = f.values();
        let var: f64 = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
        // quadratic variation ≈ 1
        assert!((var - 1.0).abs() < 0.1, "{var}");
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn depth_limits() {
        assert!(brownian_path(0, 0).is_err());
        assert!(brownian_path(0, 25).is_err());
    }
}
