//! Oscillation-based multifractal analysis on b-adic grids.
//!
//! The crate computes oscillation pyramids of sampled continuous functions,
//! the per-level exponents `H_j` they induce, and factors a homogeneously
//! multifractal function `Z` as `g ∘ f`, with `g` monofractal and `f` an
//! increasing time change. Generators with closed-form oscillations (the
//! triadic `Z_a` family, multinomial cascades) make most results checkable
//! exactly.
//!
//! Module map:
//!
//! * [`grid`]: b-adic cells, sampled functions and oscillation pyramids.
//! * [`exponents`]: per-level exponents, intrinsic exponent, scaling functions,
//!   homogeneity diagnostics, `L^q` spectra and Legendre transforms.
//! * [`subordination`]: the stage-by-stage construction of `f` and `g`, plus
//!   audits of the result.
//! * [`generators`]: Weierstrass sums, Brownian paths, self-similar functions
//!   and measures, multinomial cascades, the `Z_a` family.
//! * [`spectra`]: theoretical and coarse empirical singularity spectra.
//! * [`io`]: file formats.
//! * [`verify`]: the built-in fixture suite behind `mfsub verify`.

pub mod error;
pub mod exec;
pub mod exponents;
pub mod generators;
pub mod grid;
pub mod io;
mod numeric;
pub mod roots;
pub mod spectra;
pub mod subordination;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{build_pyramid, Interval, OscillationPyramid, PyramidSource, SampledFunction};
