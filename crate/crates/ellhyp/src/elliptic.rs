//! The eight-parameter elliptic beta-type integral V and the residual of
//! the three-term difference equation it satisfies in the (t6, t7) pair.
//!
//! V is a contour integral of a ratio of elliptic gamma functions over a
//! circle separating the two geometric pole sequences; the balancing
//! constraint prod t_a = (pq)^2 makes the q-shift structure close.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::contour::{integrate_contour, ContourSpec, Evaluation};
use crate::error::{Error, Result};
use crate::gamma::{egamma, qpoch, theta_q, EllipticBases};

/// Relative slack allowed when validating the balancing product.
const BALANCE_RTOL: f64 = 1e-12;
/// Magnitude below which a theta factor in a denominator counts as zero.
const THETA_EPS: f64 = 1e-8;
/// Node budget for one V evaluation.
const V_BUDGET: usize = 60_000;
/// Relative accuracy requested from the integral on the refinement pass.
const V_REL_TOL: f64 = 1e-12;

/// Eight parameters t_1..t_8 with bases (p, q), balanced so that
/// prod t_a = (pq)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    t: [Complex64; 8],
    bases: EllipticBases,
}

impl EllipticParams {
    /// Validates the balancing product against (pq)^2 to relative 1e-12,
    /// then replaces t_8 by the exact complement so the constraint holds
    /// to machine precision downstream.
    pub fn new(t: [Complex64; 8], bases: EllipticBases) -> Result<Self> {
        for (a, ta) in t.iter().enumerate() {
            if !ta.re.is_finite() || !ta.im.is_finite() {
                return Err(Error::domain(format!("t[{}] is not finite", a + 1)));
            }
            if ta.norm() == 0.0 {
                return Err(Error::domain(format!("t[{}] must be nonzero", a + 1)));
            }
        }
        let pq = bases.p() * bases.q();
        let target = pq * pq;
        let prod7: Complex64 = t[..7].iter().product();
        let complement = target / prod7;
        if !complement.re.is_finite() || !complement.im.is_finite() || complement.norm() == 0.0 {
            return Err(Error::domain("balancing complement for t[8] degenerates"));
        }
        let scale = complement.norm().max(t[7].norm());
        if (t[7] - complement).norm() > BALANCE_RTOL * scale {
            return Err(Error::domain(format!(
                "balancing violated: prod t_a differs from (pq)^2 by relative {:.3e}",
                (t[7] - complement).norm() / scale
            )));
        }
        let mut t = t;
        t[7] = complement;
        Ok(EllipticParams { t, bases })
    }

    pub fn t(&self) -> [Complex64; 8] {
        self.t
    }

    pub fn bases(&self) -> EllipticBases {
        self.bases
    }

    fn max_t_norm(&self) -> f64 {
        self.t.iter().map(|t| t.norm()).fold(0.0, f64::max)
    }
}

/// Circle radius separating the inner pole sequence (radius max |t_a|)
/// from the outer one (radius 1 / max |t_a|), clamped into [0.8, 1.2].
fn separating_radius(par: &EllipticParams) -> Result<f64> {
    let m = par.max_t_norm();
    if m >= 1.0 {
        return Err(Error::pole_pinch(format!(
            "pole sequences reach the contour: max |t_a| = {m:.6} >= 1"
        )));
    }
    Ok(((m + 1.0 / m) / 2.0).clamp(0.8, 1.2))
}

fn v_integrand(t: &[Complex64; 8], b: EllipticBases, z: Complex64) -> Result<Complex64> {
    let z2 = z * z;
    let mut g = Complex64::new(1.0, 0.0);
    for ta in t {
        g *= egamma(ta * z, b)?;
        g *= egamma(ta / z, b)?;
    }
    // 1 / (Gamma(z^2) Gamma(z^-2)) = -theta(z^2; p) theta(z^2; q) / z^2.
    let den = -theta_q(z2, b.p())? * theta_q(z2, b.q())? / z2;
    Ok(g * den / z)
}

/// V at an explicit circle radius; the radius must keep both pole
/// sequences strictly off the contour. Exposed so contour-robustness
/// checks can compare admissible radii.
pub fn v_function_radius(par: &EllipticParams, radius: f64) -> Result<Evaluation> {
    let m = par.max_t_norm();
    if m >= 1.0 {
        return Err(Error::pole_pinch(format!(
            "pole sequences reach the contour: max |t_a| = {m:.6} >= 1"
        )));
    }
    if !(radius > m && radius < 1.0 / m) {
        return Err(Error::domain(format!(
            "radius {radius} does not separate pole sequences ({m:.6}, {:.6})",
            1.0 / m
        )));
    }
    let b = par.bases;
    let pref = qpoch(b.p(), b.p())? * qpoch(b.q(), b.q())? / Complex64::new(0.0, 4.0 * PI);
    let t = par.t;
    let f = |z: Complex64| v_integrand(&t, b, z);

    let spec = ContourSpec::circle(V_BUDGET)?.with_circle_radius(radius)?;
    // Coarse pass fixes the magnitude scale; the refinement pass converts
    // the relative goal into an absolute tolerance.
    let coarse = integrate_contour(f, &spec, 1.0)?;
    let tol = (V_REL_TOL * coarse.value.norm()).max(1e-14);
    let fine = integrate_contour(f, &spec, tol)?;
    Ok(Evaluation {
        value: pref * fine.value,
        abs_err: pref.norm() * fine.abs_err,
        nodes_used: coarse.nodes_used + fine.nodes_used,
        terms_used: 0,
    })
}

/// V(t_1..t_8; p, q): circle-contour integral of the eight-fold elliptic
/// gamma product against the theta closed form of 1/Gamma(z^{+-2}),
/// prefactor (p;p)_inf (q;q)_inf / (4 pi i) included.
pub fn v_function(par: &EllipticParams) -> Result<Evaluation> {
    let radius = separating_radius(par)?;
    v_function_radius(par, radius)
}

/// U(t) = V(t) / [Gamma(t6 t8^{+-1}) Gamma(t7 t8^{+-1})]; `reflected`
/// replaces each 1/Gamma(w) by Gamma(pq/w).
fn u_value(t: [Complex64; 8], b: EllipticBases, reflected: bool) -> Result<Complex64> {
    let par = EllipticParams::new(t, b)?;
    let v = v_function(&par)?.value;
    let args = [t[5] * t[7], t[5] / t[7], t[6] * t[7], t[6] / t[7]];
    if reflected {
        let pq = b.p() * b.q();
        let mut w = v;
        for a in args {
            w *= egamma(pq / a, b)?;
        }
        Ok(w)
    } else {
        let mut den = Complex64::new(1.0, 0.0);
        for a in args {
            den *= egamma(a, b)?;
        }
        if den.norm() == 0.0 {
            return Err(Error::zero("gamma normalization of U vanishes"));
        }
        Ok(v / den)
    }
}

/// Three-term coefficient; all thetas in base p, shifts live in base q.
fn ell_coeff(t: &[Complex64; 8], b: EllipticBases) -> Result<Complex64> {
    let p = b.p();
    let q = b.q();
    let (t6, t7, t8) = (t[5], t[6], t[7]);
    let mut num = theta_q(t6 / (q * t8), p)? * theta_q(t6 * t8, p)? * theta_q(t8 / t6, p)?;
    let mut den_factors = vec![
        theta_q(t6 / t7, p)?,
        theta_q(t7 / (q * t6), p)?,
        theta_q(t7 * t6 / q, p)?,
    ];
    for tk in &t[..5] {
        num *= theta_q(t7 * tk / q, p)?;
        den_factors.push(theta_q(t8 * tk, p)?);
    }
    let mut den = Complex64::new(1.0, 0.0);
    for d in den_factors {
        if d.norm() < THETA_EPS {
            return Err(Error::zero(format!(
                "theta factor in the equation coefficient vanishes (|theta| = {:.3e})",
                d.norm()
            )));
        }
        den *= d;
    }
    Ok(num / den)
}

fn ehe_residual_route(par: &EllipticParams, reflected: bool) -> Result<Complex64> {
    let t = par.t;
    let b = par.bases;
    let q = b.q();

    let mut t_plus = t;
    t_plus[5] *= q;
    t_plus[6] /= q;
    let mut t_minus = t;
    t_minus[5] /= q;
    t_minus[6] *= q;
    let mut t_swap = t;
    t_swap.swap(5, 6);

    let coeff_plus = ell_coeff(&t, b)?;
    let coeff_minus = ell_coeff(&t_swap, b)?;

    let u0 = u_value(t, b, reflected)?;
    let u_plus = u_value(t_plus, b, reflected)?;
    let u_minus = u_value(t_minus, b, reflected)?;

    let term1 = coeff_plus * (u_plus - u0);
    let term2 = coeff_minus * (u_minus - u0);
    let term3 = u0;
    let scale = term1.norm().max(term2.norm()).max(term3.norm());
    if scale == 0.0 {
        return Err(Error::zero("all three equation terms vanish"));
    }
    Ok((term1 + term2 + term3) / scale)
}

/// Residual of the three-term difference equation in (t6, t7): the q-shifted
/// pair (q t6, t7/q), its t6 <-> t7 mirror, and the unshifted term, divided
/// by the largest of the three term magnitudes.
pub fn ehe_residual(par: &EllipticParams) -> Result<Complex64> {
    ehe_residual_route(par, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn polar(r: f64, phi: f64) -> Complex64 {
        Complex64::from_polar(r, phi)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    /// Balanced parameter point with real bases used across the tests.
    fn point_a() -> EllipticParams {
        let bases = EllipticBases::new(c(0.2, 0.0), c(0.25, 0.0)).unwrap();
        let mut t = [
            polar(0.72, 0.3),
            polar(0.70, -0.5),
            polar(0.74, 1.1),
            polar(0.68, -1.8),
            polar(0.73, 2.2),
            polar(0.139, 0.37),
            polar(0.130, -0.57),
            Complex64::new(1.0, 0.0),
        ];
        let pq = bases.p() * bases.q();
        let prod7: Complex64 = t[..7].iter().product();
        t[7] = pq * pq / prod7;
        EllipticParams::new(t, bases).unwrap()
    }

    /// Draw a balanced admissible point: |p|, |q| <= 0.3, moderate |t_a|,
    /// the (t6, t7) pair small enough that both q-shifted sets stay inside
    /// the unit disc.
    fn sample_point(rng: &mut ChaCha8Rng) -> EllipticParams {
        loop {
            let pm = rng.gen_range(0.13..0.28);
            let qm = rng.gen_range(0.13..0.28);
            let p = polar(pm, rng.gen_range(-0.5..0.5));
            let q = polar(qm, rng.gen_range(-0.5..0.5));
            let bases = EllipticBases::new(p, q).unwrap();
            let mut t = [Complex64::new(1.0, 0.0); 8];
            for slot in t.iter_mut().take(5) {
                *slot = polar(rng.gen_range(0.62..0.78), rng.gen_range(-PI..PI));
            }
            // Shift admissibility needs |t6|, |t7| < |q| with margin.
            let qn = bases.q().norm();
            t[5] = polar(qn * rng.gen_range(0.45..0.62), rng.gen_range(-PI..PI));
            t[6] = polar(qn * rng.gen_range(0.45..0.62), rng.gen_range(-PI..PI));
            let pq = bases.p() * bases.q();
            let prod7: Complex64 = t[..7].iter().product();
            t[7] = pq * pq / prod7;
            if t[7].norm() < 0.2 || t[7].norm() > 0.85 {
                continue;
            }
            // Keep the coefficient's theta denominators comfortably nonzero.
            let ratio67 = (t[5] / t[6]).norm();
            if !(0.5..=2.0).contains(&ratio67) || (t[5] - t[6]).norm() < 0.05 {
                continue;
            }
            return EllipticParams::new(t, bases).unwrap();
        }
    }

    #[test]
    fn frozen_reference_real_point() {
        // Independent high-precision evaluation at p = q = 0.2,
        // t = (0.7, 0.65, 0.6, 0.55, 0.5, 0.45, 0.4, balanced).
        let bases = EllipticBases::new(c(0.2, 0.0), c(0.2, 0.0)).unwrap();
        let mut t = [
            c(0.7, 0.0),
            c(0.65, 0.0),
            c(0.6, 0.0),
            c(0.55, 0.0),
            c(0.5, 0.0),
            c(0.45, 0.0),
            c(0.4, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let pq = bases.p() * bases.q();
        let prod7: Complex64 = t[..7].iter().product();
        t[7] = pq * pq / prod7;
        let par = EllipticParams::new(t, bases).unwrap();
        let v = v_function(&par).unwrap();
        assert!(
            rel(v.value, c(615.088541523245468793937, 0.0)) < 1e-10,
            "V = {} err {:.3e}",
            v.value,
            rel(v.value, c(615.088541523245468793937, 0.0))
        );
    }

    #[test]
    fn balancing_normalizes_or_rejects() {
        let bases = EllipticBases::new(c(0.2, 0.0), c(0.2, 0.0)).unwrap();
        let pq = bases.p() * bases.q();
        let mut t = [c(0.5, 0.0); 8];
        let prod7: Complex64 = t[..7].iter().product();
        let exact = pq * pq / prod7;
        // Perturbation inside the tolerance is accepted and snapped back.
        t[7] = exact * (1.0 + 1e-13);
        let par = EllipticParams::new(t, bases).unwrap();
        assert_eq!(par.t()[7], exact);
        // Outside the tolerance is rejected.
        t[7] = exact * (1.0 + 1e-9);
        assert!(EllipticParams::new(t, bases).is_err());
    }

    #[test]
    fn pole_pinch_when_parameter_reaches_unit_circle() {
        let bases = EllipticBases::new(c(0.2, 0.0), c(0.2, 0.0)).unwrap();
        let pq = bases.p() * bases.q();
        let mut t = [c(0.5, 0.0); 8];
        t[0] = c(1.05, 0.0);
        let prod7: Complex64 = t[..7].iter().product();
        t[7] = pq * pq / prod7;
        let par = EllipticParams::new(t, bases).unwrap();
        match v_function(&par) {
            Err(Error::PolePinch(_)) => {}
            other => panic!("expected PolePinch, got {other:?}"),
        }
    }

    #[test]
    fn permutation_invariance() {
        let par = point_a();
        let v0 = v_function(&par).unwrap().value;
        let mut t = par.t();
        t.swap(0, 6);
        t.swap(2, 4);
        let par2 = EllipticParams::new(t, par.bases()).unwrap();
        let v1 = v_function(&par2).unwrap().value;
        assert!(rel(v0, v1) < 1e-10, "permutation changed V by {:.3e}", rel(v0, v1));
    }

    #[test]
    fn base_swap_invariance() {
        let par = point_a();
        let v0 = v_function(&par).unwrap().value;
        let swapped = EllipticBases::new(par.bases().q(), par.bases().p()).unwrap();
        let par2 = EllipticParams::new(par.t(), swapped).unwrap();
        let v1 = v_function(&par2).unwrap().value;
        assert!(rel(v0, v1) < 1e-10);
    }

    #[test]
    fn radius_independence() {
        let par = point_a();
        let a = v_function_radius(&par, 0.95).unwrap();
        let b = v_function_radius(&par, 1.0).unwrap();
        assert!(
            rel(a.value, b.value) < 1e-9,
            "radius 0.95 vs 1.0 differ by {:.3e}",
            rel(a.value, b.value)
        );
    }

    #[test]
    fn inadmissible_radius_rejected() {
        let par = point_a();
        assert!(v_function_radius(&par, 0.5).is_err());
        assert!(v_function_radius(&par, 1.5).is_err());
    }

    #[test]
    fn residual_small_at_real_base_point() {
        let par = point_a();
        let r = ehe_residual(&par).unwrap();
        assert!(r.norm() < 1e-8, "residual {:.3e}", r.norm());
    }

    fn point_b() -> EllipticParams {
        let bases = EllipticBases::new(polar(0.18, 0.3), polar(0.22, -0.4)).unwrap();
        let mut t = [
            polar(0.71, 0.8),
            polar(0.73, -1.3),
            polar(0.70, 2.0),
            polar(0.72, -2.6),
            polar(0.74, 0.15),
            polar(0.120, 1.0),
            polar(0.115, -0.8),
            Complex64::new(1.0, 0.0),
        ];
        let pq = bases.p() * bases.q();
        let prod7: Complex64 = t[..7].iter().product();
        t[7] = pq * pq / prod7;
        EllipticParams::new(t, bases).unwrap()
    }

    #[test]
    fn frozen_reference_complex_points() {
        // Independent high-precision evaluations at the two base points
        // used throughout this module.
        let pa = point_a();
        assert!((pa.t()[7].norm() - 0.74728769).abs() < 1e-7);
        let va = v_function(&pa).unwrap().value;
        let want_a = c(2.396974477411600153504, -0.404681956749931533858);
        assert!(rel(va, want_a) < 1e-10, "V(a) err {:.3e}", rel(va, want_a));

        let pb = point_b();
        assert!((pb.t()[7].norm() - 0.58785176).abs() < 1e-7);
        let vb = v_function(&pb).unwrap().value;
        let want_b = c(0.9044928455244845626256, -0.02433242117297619836493);
        assert!(rel(vb, want_b) < 1e-10, "V(b) err {:.3e}", rel(vb, want_b));
    }

    #[test]
    fn residual_small_at_complex_base_point() {
        let r = ehe_residual(&point_b()).unwrap();
        assert!(r.norm() < 1e-8, "residual {:.3e}", r.norm());
    }

    #[test]
    fn residual_random_suite() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..3 {
            let par = sample_point(&mut rng);
            let r = ehe_residual(&par).unwrap();
            assert!(r.norm() < 1e-8, "case {case}: residual {:.3e}", r.norm());
        }
    }

    #[test]
    fn residual_invariant_under_t1_t5_relabeling() {
        let par = point_a();
        let r0 = ehe_residual(&par).unwrap();
        let mut t = par.t();
        t.swap(0, 3);
        t.swap(1, 4);
        let par2 = EllipticParams::new(t, par.bases()).unwrap();
        let r1 = ehe_residual(&par2).unwrap();
        assert!((r0 - r1).norm() < 1e-10, "relabeling moved residual by {:.3e}", (r0 - r1).norm());
    }

    #[test]
    fn reflected_normalization_matches() {
        let par = point_a();
        let direct = ehe_residual_route(&par, false).unwrap();
        let reflected = ehe_residual_route(&par, true).unwrap();
        assert!(
            (direct - reflected).norm() < 1e-12,
            "routes differ by {:.3e}",
            (direct - reflected).norm()
        );
    }

    #[test]
    fn equal_t6_t7_is_zero_error() {
        let bases = EllipticBases::new(c(0.2, 0.0), c(0.25, 0.0)).unwrap();
        let pq = bases.p() * bases.q();
        let mut t = [
            polar(0.72, 0.3),
            polar(0.70, -0.5),
            polar(0.74, 1.1),
            polar(0.68, -1.8),
            polar(0.73, 2.2),
            polar(0.13, 0.4),
            polar(0.13, 0.4),
            Complex64::new(1.0, 0.0),
        ];
        let prod7: Complex64 = t[..7].iter().product();
        t[7] = pq * pq / prod7;
        let par = EllipticParams::new(t, bases).unwrap();
        match ehe_residual(&par) {
            Err(Error::Zero(_)) => {}
            other => panic!("expected Zero error, got {other:?}"),
        }
    }
}
