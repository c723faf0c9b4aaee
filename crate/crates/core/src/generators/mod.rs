//! Function and measure families with known regularity.

mod brownian;
mod multinomial;
mod selfsimilar;
mod weierstrass;
mod za;

pub use brownian::{brownian_path, MAX_BROWNIAN_DEPTH};
pub use multinomial::MultinomialMeasure;
pub use selfsimilar::{
    beta_exponent, lipschitz_threshold, selfsimilar_function, selfsimilar_function_with, selfsimilar_measure,
    Forcing, SelfSimilarMeasure, SelfSimilarSystem,
};
pub use weierstrass::{juxtapose, weierstrass, weierstrass_with, Phase, Weierstrass};
pub use za::{
    za_drift, za_exact_oscillation, za_exact_pyramid, za_exponent, za_family_function, za_function,
    za_function_with, za_shadow_measure, za_slopes, za_validate,
};
