//! Degeneration scans down the hierarchy: elliptic gamma onto hyperbolic
//! gamma, hyperbolic gamma at modulus near i onto the discrete-series gamma,
//! the hyperbolic kernel at small omega_1 onto the rational kernel, and the
//! quantum 6j-symbol onto the SL(2,C) one. A scan evaluates both sides of
//! the limit relation at a decreasing sequence of small parameters and fits
//! the convergence order from the deviations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::complex_rational::{complex_6j, SixJComplexParams};
use crate::error::{Error, Result};
use crate::gamma::{cgamma, egamma, hgamma, DiscretePair, EllipticBases, QuasiPeriods};
use crate::hyperbolic::{jh, pt_6j, MuNuParams, PTParams};
use crate::rational::{jr, RationalParams};

/// Named degeneration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitId {
    /// Both elliptic bases shrink onto the hyperbolic gamma.
    EllipticToHyperbolic,
    /// Hyperbolic gamma at modulus i + delta onto the discrete-series gamma.
    GammaBToI,
    /// Hyperbolic kernel at small omega_1 onto the rational kernel.
    JhBToZero,
    /// Quantum 6j-symbol at b = i + delta onto the SL(2,C) 6j-symbol.
    PtToComplex6j,
}

impl fmt::Display for LimitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LimitId::EllipticToHyperbolic => "elliptic_to_hyperbolic",
            LimitId::GammaBToI => "gamma_b_to_i",
            LimitId::JhBToZero => "jh_b_to_0",
            LimitId::PtToComplex6j => "pt_to_complex6j",
        };
        f.write_str(name)
    }
}

impl FromStr for LimitId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elliptic_to_hyperbolic" => Ok(LimitId::EllipticToHyperbolic),
            "gamma_b_to_i" => Ok(LimitId::GammaBToI),
            "jh_b_to_0" => Ok(LimitId::JhBToZero),
            "pt_to_complex6j" => Ok(LimitId::PtToComplex6j),
            other => Err(Error::domain(format!("unknown limit id {other:?}"))),
        }
    }
}

/// Target-side data held fixed while the small parameter moves.
#[derive(Debug, Clone, Copy)]
pub enum LimitTarget {
    /// Argument and quasi-periods of the hyperbolic gamma being approached.
    EllipticToHyperbolic { y: Complex64, w: QuasiPeriods },
    /// Continuous and discrete labels of the target gamma.
    GammaBToI { x: Complex64, n: i64 },
    /// Balanced parameters of the rational kernel being approached.
    JhBToZero(RationalParams),
    /// Spectral labels of the 6j-symbol being approached.
    PtToComplex6j(SixJComplexParams),
}

/// One evaluated point of a scan.
#[derive(Debug, Clone, Copy)]
pub struct LimitRow {
    pub delta: f64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// |lhs - rhs| / max(|lhs|, |rhs|).
    pub deviation: f64,
}

/// Scan output: one row per small-parameter value and the least-squares
/// slope of log deviation against log delta (absent with fewer than two
/// usable rows).
#[derive(Debug, Clone)]
pub struct LimitScan {
    pub id: LimitId,
    pub rows: Vec<LimitRow>,
    pub fitted_order: Option<f64>,
}

fn delta_range(id: LimitId) -> (f64, f64) {
    match id {
        LimitId::GammaBToI | LimitId::PtToComplex6j => (1e-3, 1e-1),
        LimitId::EllipticToHyperbolic | LimitId::JhBToZero => (0.02, 0.3),
    }
}

fn check_deltas(id: LimitId, deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::domain("a scan needs at least one delta"));
    }
    let (lo, hi) = delta_range(id);
    for &d in deltas {
        if !d.is_finite() || d < lo * (1.0 - 1e-12) || d > hi * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "delta {d:e} outside [{lo:e}, {hi:e}], the range where double \
                 precision resolves the {id} limit"
            )));
        }
    }
    for pair in deltas.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::domain(format!(
                "deltas must decrease strictly, got {:e} after {:e}",
                pair[1], pair[0]
            )));
        }
    }
    Ok(())
}

fn row(delta: f64, lhs: Complex64, rhs: Complex64) -> LimitRow {
    let scale = lhs.norm().max(rhs.norm()).max(1e-300);
    LimitRow { delta, lhs, rhs, deviation: (lhs - rhs).norm() / scale }
}

fn fit_order(rows: &[LimitRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation > 0.0)
        .map(|r| (r.delta.ln(), r.deviation.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let den = n * sxx - sx * sx;
    if den <= 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / den)
}

fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Both sides of the elliptic-to-hyperbolic gamma relation at shrinking
/// parameter v: the elliptic gamma at bases e^{-2 pi v omega} and argument
/// e^{-2 pi v y}, times its exponential growth factor, against the
/// hyperbolic gamma at (y; omega).
fn elliptic_point(y: Complex64, w: QuasiPeriods, v: f64) -> Result<(Complex64, Complex64)> {
    let (w1, w2) = (w.w1(), w.w2());
    let p = (-2.0 * PI * v * w1).exp();
    let q = (-2.0 * PI * v * w2).exp();
    let z = (-2.0 * PI * v * y).exp();
    let bases = EllipticBases::new(p, q)?;
    let growth = (PI * (2.0 * y - w1 - w2) / (12.0 * v * w1 * w2)).exp();
    let lhs = egamma(z, bases)? * growth;
    let rhs = hgamma(y, w)?;
    Ok((lhs, rhs))
}

/// Both sides of the discrete-series relation at b = i + delta: the
/// hyperbolic gamma at i sqrt(w1 w2) (n + x delta) against
/// i^{n^2} (4 pi delta)^{ix - 1} times the discrete-series gamma at (x, n).
fn gamma_b_point(x: Complex64, n: i64, delta: f64) -> Result<(Complex64, Complex64)> {
    let b = Complex64::new(delta, 1.0);
    let w = QuasiPeriods::from_modulus(b)?;
    let root = (w.w1() * w.w2()).sqrt();
    let arg = Complex64::i() * root * (Complex64::new(n as f64, 0.0) + x * delta);
    let lhs = hgamma(arg, w)?;
    let scale = ((Complex64::i() * x - 1.0) * (4.0 * PI * delta).ln()).exp();
    let rhs = i_pow(n * n) * scale * cgamma(DiscretePair::new(x, n))?;
    Ok((lhs, rhs))
}

/// Left side of the rational degeneration at omega = (om1, 1): the
/// hyperbolic kernel at mu = om1 beta, nu = om1 gamma with the first two nu
/// slots shifted by omega_2, rescaled by (2 pi)^4 om1.
fn jh_point(par: &RationalParams, om1: f64) -> Result<Complex64> {
    let (be, ga) = par.as_beta_gamma()?;
    let w = QuasiPeriods::real(om1, 1.0)?;
    let mu = be.map(|v| om1 * v);
    let mut nu = ga.map(|v| om1 * v);
    nu[0] += 1.0;
    nu[1] += 1.0;
    let munu = MuNuParams::new(mu, nu, w)?;
    Ok(jh(&munu)?.value * (2.0 * PI).powi(4) * om1)
}

/// Spectral labels mapped to quantum 6j weights at b = i + delta.
fn pt_weights(par: &SixJComplexParams, delta: f64) -> Result<PTParams> {
    let b = Complex64::new(delta, 1.0);
    let w = QuasiPeriods::from_modulus(b)?;
    let qh = w.q() / 2.0;
    let i = Complex64::i();
    let sg = par.sigma();
    let nn = par.n_labels();
    let rho = par.rho();
    let mm = par.m_labels();
    let ap = [0, 1, 2, 3].map(|k| i * (nn[k] as f64 / 2.0 + sg[k] * delta));
    let tp = i * (mm[0] as f64 / 2.0 + rho[0] * delta);
    let sp = i * (mm[1] as f64 / 2.0 + rho[1] * delta);
    let alpha = [qh - ap[0], qh - ap[1], qh - ap[2], qh + ap[3]];
    PTParams::new(alpha, qh + sp, qh - tp, b)
}

/// Right-side prefactor of the 6j degeneration: i^F (M_1^2 + 4 rho_1^2) /
/// (16 pi^4 i delta), with F asserted even so i^F is a real sign.
fn pt_prefactor(par: &SixJComplexParams, delta: f64) -> Result<Complex64> {
    let f = prefactor_f(par)?;
    let m1 = par.m_labels()[0] as f64;
    let r1 = par.rho()[0];
    let num = m1 * m1 + 4.0 * r1 * r1;
    Ok(parity_sign(f / 2) * num / (16.0 * PI.powi(4) * Complex64::i() * delta))
}

/// Phase exponent of the 6j degeneration. The label parities admitted by
/// [`SixJComplexParams`] force it even; an odd value is rejected because
/// i^F must be a real sign for the relation to close.
pub fn prefactor_f(par: &SixJComplexParams) -> Result<i64> {
    let f = par.limit_phase_exponent();
    if f % 2 != 0 {
        return Err(Error::domain(format!("phase exponent F = {f} is odd")));
    }
    Ok(f)
}

/// Evaluate the limit relation named by `id` at every delta (concurrently)
/// and fit the convergence order. The target variant must match the id, the
/// deltas must decrease strictly, and each delta must lie in the validated
/// range of its limit.
pub fn limit_scan(id: LimitId, deltas: &[f64], target: &LimitTarget) -> Result<LimitScan> {
    check_deltas(id, deltas)?;
    let rows: Result<Vec<LimitRow>> = match (id, target) {
        (LimitId::EllipticToHyperbolic, LimitTarget::EllipticToHyperbolic { y, w }) => deltas
            .par_iter()
            .map(|&v| {
                let (lhs, rhs) = elliptic_point(*y, *w, v)?;
                Ok(row(v, lhs, rhs))
            })
            .collect(),
        (LimitId::GammaBToI, LimitTarget::GammaBToI { x, n }) => deltas
            .par_iter()
            .map(|&d| {
                let (lhs, rhs) = gamma_b_point(*x, *n, d)?;
                Ok(row(d, lhs, rhs))
            })
            .collect(),
        (LimitId::JhBToZero, LimitTarget::JhBToZero(par)) => {
            let rhs = jr(par)?.value;
            deltas
                .par_iter()
                .map(|&om1| Ok(row(om1, jh_point(par, om1)?, rhs)))
                .collect()
        }
        (LimitId::PtToComplex6j, LimitTarget::PtToComplex6j(par)) => {
            prefactor_f(par)?;
            let c6 = complex_6j(par)?.value;
            deltas
                .par_iter()
                .map(|&d| Ok(row(d, pt_weights(par, d).and_then(|p| pt_6j(&p))?.value, pt_prefactor(par, d)? * c6)))
                .collect()
        }
        _ => Err(Error::domain(format!("target parameters do not belong to the {id} limit"))),
    };
    let rows = rows?;
    let fitted_order = fit_order(&rows);
    Ok(LimitScan { id, rows, fitted_order })
}

/// Relative deviations of the seven individual gamma-factor estimates that
/// assemble the 6j degeneration, evaluated at one delta. The kernel-side
/// factors (slots 0 and 1) are sampled at lattice point `n_point` and
/// rescaled position `u` and report the worst of their four slots; slots
/// 2 through 5 are the prefactor gammas and slot 6 the measure factor.
pub fn factor_deviations(
    par: &SixJComplexParams,
    delta: f64,
    n_point: i64,
    u: Complex64,
) -> Result<[f64; 7]> {
    let pt = pt_weights(par, delta)?;
    let w = pt.w();
    let q = w.q();
    let munu = pt.munu()?;
    let z = Complex64::i() * (-(n_point as f64) - u * delta);
    let cr = par.contour_params()?;
    let rt = cr.s();
    let st = cr.n();
    let ut = cr.t();
    let tt = cr.m();
    let lg = (4.0 * PI * delta).ln();
    let i = Complex64::i();
    let dev = |lhs: Complex64, rhs: Complex64| -> f64 {
        (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300)
    };
    let mut out = [0.0f64; 7];
    for a in 0..4 {
        let ta = tt[a].as_int().expect("integer by construction") + n_point;
        let lhs = hgamma(munu.mu()[a] - z, w)?;
        let rhs = i_pow(ta * ta)
            * ((i * (ut[a] + u) - 1.0) * lg).exp()
            * cgamma(DiscretePair::new(ut[a] + u, ta))?;
        out[0] = out[0].max(dev(lhs, rhs));

        let sa = st[a].as_int().expect("integer by construction") - n_point;
        let lhs = hgamma(munu.nu()[a] + z, w)?;
        let rhs = i_pow(sa * sa)
            * ((i * (rt[a] - u) - 1.0) * lg).exp()
            * cgamma(DiscretePair::new(rt[a] - u, sa))?;
        out[1] = out[1].max(dev(lhs, rhs));
    }
    let [s1, s2, s3, s4] = par.sigma();
    let [r1, r2] = par.rho();
    let aa = par.a_ints();
    let al = pt.alpha();
    let astar = pt.alpha_s();
    let tstar = pt.alpha_t();
    // s-channel prefactor gammas
    let lhs = hgamma(astar + al[1] - al[0], w)?;
    let rhs =
        i_pow(aa[0] * aa[0]) * ((i * (s1 - s2 + r2)) * lg).exp() * cgamma(DiscretePair::new(s1 - s2 + r2 - i, aa[0]))?;
    out[2] = dev(lhs, rhs);
    let lhs = hgamma(al[0] + tstar - al[3], w)?;
    let rhs = i_pow(aa[3] * aa[3]) * ((i * (-s1 - s4 - r1)) * lg).exp() * parity_sign(aa[3])
        / cgamma(DiscretePair::new(s1 + s4 + r1 - i, aa[3]))?;
    out[3] = dev(lhs, rhs);
    let lhs = hgamma(al[1] + tstar - al[2], w)?;
    let rhs = i_pow(aa[1] * aa[1]) * ((i * (-s2 + s3 - r1)) * lg).exp() * parity_sign(aa[1])
        / cgamma(DiscretePair::new(s2 - s3 + r1 - i, aa[1]))?;
    out[4] = dev(lhs, rhs);
    let lhs = hgamma(al[2] + astar - al[3], w)?;
    let rhs = i_pow(aa[2] * aa[2])
        * ((i * (-s3 - s4 + r2)) * lg).exp()
        * cgamma(DiscretePair::new(-s3 - s4 + r2 - i, aa[2]))?;
    out[5] = dev(lhs, rhs);
    // measure factor
    let lhs = hgamma(2.0 * tstar, w)? * hgamma(2.0 * (q - tstar), w)?;
    let m1 = par.m_labels()[0] as f64;
    let rhs = (4.0 * PI * delta).powi(2) * (m1 * m1 + 4.0 * r1 * r1) / 4.0;
    out[6] = dev(lhs, Complex64::from(rhs));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sixj_zero_labels() -> SixJComplexParams {
        SixJComplexParams::new(
            [c(0.3, 0.0), c(-0.2, 0.0), c(0.45, 0.0), c(0.15, 0.0)],
            [0, 0, 0, 0],
            [c(0.25, 0.0), c(-0.35, 0.0)],
            [0, 0],
        )
        .unwrap()
    }

    fn random_labels(rng: &mut ChaCha8Rng) -> SixJComplexParams {
        loop {
            let n1 = rng.gen_range(-2i64..=2);
            let n2 = rng.gen_range(-2i64..=2);
            let n3 = rng.gen_range(-2i64..=2);
            let mut n4 = rng.gen_range(-2i64..=2);
            if (n4 - n1 - n2 - n3).rem_euclid(2) != 0 {
                n4 += 1;
            }
            let mut m1 = rng.gen_range(-2i64..=2);
            if (m1 - n2 - n3).rem_euclid(2) != 0 {
                m1 += 1;
            }
            let mut m2 = rng.gen_range(-2i64..=2);
            if (m2 - n1 - n2).rem_euclid(2) != 0 {
                m2 += 1;
            }
            let mut rv = [0.0f64; 6];
            let mut ok = true;
            for slot in rv.iter_mut() {
                let v = rng.gen_range(-0.45f64..0.45);
                if v.abs() < 0.05 {
                    ok = false;
                }
                *slot = v;
            }
            if !ok {
                continue;
            }
            if m1 == 0 && rv[4].abs() < 0.1 {
                continue;
            }
            let par = SixJComplexParams::new(
                [c(rv[0], 0.0), c(rv[1], 0.0), c(rv[2], 0.0), c(rv[3], 0.0)],
                [n1, n2, n3, n4],
                [c(rv[4], 0.0), c(rv[5], 0.0)],
                [m1, m2],
            );
            if let Ok(par) = par {
                return par;
            }
        }
    }

    #[test]
    fn elliptic_gamma_deviation_shrinks_with_v() {
        let target = LimitTarget::EllipticToHyperbolic {
            y: c(0.6, 0.0),
            w: QuasiPeriods::real(1.0, 1.0).unwrap(),
        };
        let scan = limit_scan(LimitId::EllipticToHyperbolic, &[0.2, 0.1, 0.05], &target).unwrap();
        assert_eq!(scan.rows.len(), 3);
        for win in scan.rows.windows(2) {
            assert!(
                win[1].deviation < win[0].deviation,
                "deviations {:?} not decreasing",
                scan.rows.iter().map(|r| r.deviation).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn discrete_series_scan_is_first_order() {
        let target = LimitTarget::GammaBToI { x: c(0.7, 0.0), n: 1 };
        let scan = limit_scan(LimitId::GammaBToI, &[1e-1, 1e-2, 1e-3], &target).unwrap();
        let devs: Vec<f64> = scan.rows.iter().map(|r| r.deviation).collect();
        assert!(devs[0] < 0.5 && devs[1] < devs[0] && devs[2] < devs[1], "devs {devs:?}");
        let order = scan.fitted_order.unwrap();
        assert!((0.7..=1.3).contains(&order), "order {order}");
    }

    #[test]
    fn rational_kernel_deviation_scales_with_omega1() {
        let par = RationalParams::beta_gamma(
            [c(0.5, 0.1), c(0.55, -0.2), c(0.6, 0.15), c(0.45, 0.0)],
            [c(-0.5, -0.05), c(-0.45, 0.0), c(0.4, 0.0), c(0.45, 0.0)],
        )
        .unwrap();
        let scan =
            limit_scan(LimitId::JhBToZero, &[0.1, 0.05], &LimitTarget::JhBToZero(par)).unwrap();
        let d0 = scan.rows[0].deviation;
        let d1 = scan.rows[1].deviation;
        assert!(d0 < 0.6 && d1 < d0, "devs {d0} {d1}");
        // halving omega_1 should halve the deviation, within a factor two
        let ratio = d0 / d1;
        assert!((1.0..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn quantum_6j_ratio_approaches_one() {
        let target = LimitTarget::PtToComplex6j(sixj_zero_labels());
        let scan = limit_scan(LimitId::PtToComplex6j, &[3e-2, 1e-2], &target).unwrap();
        let devs: Vec<f64> = scan.rows.iter().map(|r| r.deviation).collect();
        assert!(devs[0] < 0.5, "devs {devs:?}");
        assert!(devs[1] < devs[0], "devs {devs:?}");
        for r in &scan.rows {
            let ratio = r.lhs / r.rhs;
            assert!((ratio - 1.0).norm() < 0.5, "ratio {ratio} at delta {}", r.delta);
        }
    }

    #[test]
    fn zero_labels_have_zero_phase_exponent() {
        assert_eq!(prefactor_f(&sixj_zero_labels()).unwrap(), 0);
    }

    #[test]
    fn phase_exponent_is_even_for_admissible_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..60 {
            let par = random_labels(&mut rng);
            let f = prefactor_f(&par).unwrap();
            assert_eq!(f % 2, 0, "odd F for {par:?}");
        }
    }

    #[test]
    fn factor_estimates_are_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2 {
            let par = random_labels(&mut rng);
            let d2 = factor_deviations(&par, 1e-2, 0, c(0.4, -0.3)).unwrap();
            let d3 = factor_deviations(&par, 1e-3, 0, c(0.4, -0.3)).unwrap();
            for k in 0..7 {
                assert!(d2[k] < 60.0 * 1e-2, "factor {k} dev {} at 1e-2 for {par:?}", d2[k]);
                assert!(d3[k] < 60.0 * 1e-3, "factor {k} dev {} at 1e-3 for {par:?}", d3[k]);
            }
        }
    }

    #[test]
    fn scan_rejects_bad_inputs() {
        let target = LimitTarget::GammaBToI { x: c(0.7, 0.0), n: 1 };
        assert!(matches!(
            limit_scan(LimitId::GammaBToI, &[], &target),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            limit_scan(LimitId::GammaBToI, &[1e-2, 1e-1], &target),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            limit_scan(LimitId::GammaBToI, &[0.5], &target),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            limit_scan(LimitId::EllipticToHyperbolic, &[0.1], &target),
            Err(Error::Domain(_))
        ));
    }
}
