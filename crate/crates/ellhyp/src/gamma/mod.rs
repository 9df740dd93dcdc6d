//! Gamma-type building blocks: the log of the Euler gamma, the complex
//! gamma attached to SL(2, C) labels, Jacobi theta functions, the elliptic
//! gamma, the second-order Bernoulli polynomial and the hyperbolic gamma
//! with its asymptotic cone phases.

mod hyper;
mod lngamma;
mod theta;

pub use hyper::{b22, hgamma, hgamma_phase, ln_hgamma, Cone, QuasiPeriods};
pub use lngamma::{cgamma, ln_cgamma, lngamma_complex, DiscretePair};
pub use theta::{egamma, qpoch, theta1, theta_q, EllipticBases};


use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// ln sin x, stable for large |Im x|; the branch constant drops out once
/// the log-integrand is exponentiated.
pub(crate) fn ln_sin(x: Complex64) -> Complex64 {
    let i = Complex64::i();
    let ln2i = Complex64::new(LN_2, FRAC_PI_2);
    let one = Complex64::new(1.0, 0.0);
    if x.im <= 0.0 {
        i * x + (one - (-2.0 * i * x).exp()).ln() - ln2i
    } else {
        -i * x + (one - (2.0 * i * x).exp()).ln() - ln2i + Complex64::new(0.0, PI)
    }
}
