//! Numerical library for the elliptic hypergeometric V-function and its
//! degeneration cascade: hyperbolic, rational and complex-rational
//! hypergeometric integrals, the 6j-symbols they compute, the difference
//! equations they satisfy, and convergence scans of the connecting limits.
//!
//! Everything is double precision. Each integral returns an [`Evaluation`]
//! carrying the value together with an error estimate and node/term
//! diagnostics; identity and difference-equation checks return normalized
//! residuals so callers can compare against a tolerance directly.

pub mod complex_rational;
pub mod contour;
pub mod elliptic;
pub mod error;
pub mod gamma;
pub mod halfint;
pub mod hyperbolic;
pub mod limits;
pub mod rational;

pub use complex_rational::{
    check_cr_identity, complex_6j, cr_residual, ecr, eqdif_lhs, eqdif_reduced_lhs,
    eqdif_reduced_residual, eqdif_residual, f_product, jcr, CREquation, CRIdentity, CRInput,
    CRParamSet, ECRParamSet, SixJComplexParams,
};
pub use contour::{bilateral_sum, integrate_contour, ContourKind, ContourSpec, Evaluation};
pub use elliptic::{ehe_residual, v_function, EllipticParams};
pub use error::{Error, Result};
pub use halfint::HalfInt;
pub use hyperbolic::{
    check_identity, eh, hyp_residual, ih, jh, jh_closed_form, pt_6j, HypEquation, HypIdentity,
    HypInput, HypParams6, HypParams8, MuNuParams, PTParams,
};
pub use limits::{
    factor_deviations, limit_scan, prefactor_f, LimitId, LimitRow, LimitScan, LimitTarget,
};
pub use rational::{er, jr, jr_tilde, rational_residual, RationalEquation, RationalParams};
