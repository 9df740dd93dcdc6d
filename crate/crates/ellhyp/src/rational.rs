//! Beta-type integrals of plain Euler gammas over a vertical line and the
//! contiguous difference equations they satisfy.
//!
//! Three integrands live here: the balanced four-over-two ratio [`jr`], its
//! half-compact companion [`jr_tilde`] whose integrand keeps exponential
//! decay only toward -i*infinity, and the symmetric twelve-gamma integral
//! [`er`]. Contour policy matches the rest of the crate: the admissible
//! offset window comes from the two pole half-lattices, the line defaults
//! to the imaginary axis and falls back to the window midpoint.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::contour::{integrate_contour, ContourSpec, Evaluation};
use crate::error::{Error, Result};
use crate::gamma::{ln_sin, lngamma_complex};

/// Relative slack for the balancing sum.
const BALANCE_RTOL: f64 = 1e-12;
/// Equation-coefficient factors below this magnitude are treated as exact
/// zeros of a denominator.
const FACTOR_EPS: f64 = 1e-8;
/// Relative quadrature target per integral.
const REL_TOL: f64 = 1e-12;
/// Node budget for a single integral evaluation.
const DEFAULT_BUDGET: usize = 120_000;
/// Initial panel width along the line.
const PANEL_SPACING: f64 = 0.5;
/// Fraction of the window width kept clear of both pole half-lattices.
const WINDOW_MARGIN: f64 = 0.05;
/// Windows narrower than this pinch the contour.
const MIN_WINDOW: f64 = 1e-6;
/// ln|integrand| drop at which direct panels hand over to the mapped tails.
const TRUNC_LN: f64 = 52.0;
/// Heights for the upper-tail power fit of [`jr_tilde`]; the fitted
/// exponent also feeds the slow-decay guard.
const TAIL_TS: [f64; 4] = [60.0, 78.0, 102.0, 132.0];
/// Fitted upper-tail exponents at or below this reject the integral.
const MIN_TAIL_EXPONENT: f64 = 1.2;

/// Parameters of the rational-level integrals: a balanced beta/gamma block
/// for [`jr`] and [`jr_tilde`], or six free alphas for [`er`].
#[derive(Debug, Clone, Copy)]
pub enum RationalParams {
    /// sum(beta) + sum(gamma) = 2; gamma_4 is snapped to the exact
    /// complement so downstream shifts keep the balance to rounding.
    BetaGamma {
        be: [Complex64; 4],
        ga: [Complex64; 4],
    },
    /// No balancing condition.
    Alpha { al: [Complex64; 6] },
}

fn require_finite(vals: &[Complex64], what: &str) -> Result<()> {
    for v in vals {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::domain(format!("{what} must be finite, got {v}")));
        }
    }
    Ok(())
}

impl RationalParams {
    pub fn beta_gamma(be: [Complex64; 4], ga: [Complex64; 4]) -> Result<Self> {
        require_finite(&be, "beta parameters")?;
        require_finite(&ga, "gamma parameters")?;
        let sum: Complex64 = be.iter().sum::<Complex64>() + ga.iter().sum::<Complex64>();
        let target = Complex64::new(2.0, 0.0);
        if (sum - target).norm() > BALANCE_RTOL * 2.0 {
            return Err(Error::domain(format!(
                "beta-gamma balancing: parameter sum {sum} must equal 2"
            )));
        }
        let mut ga = ga;
        ga[3] = target - (sum - ga[3]);
        Ok(RationalParams::BetaGamma { be, ga })
    }

    pub fn alpha(al: [Complex64; 6]) -> Result<Self> {
        require_finite(&al, "alpha parameters")?;
        Ok(RationalParams::Alpha { al })
    }

    pub(crate) fn as_beta_gamma(&self) -> Result<([Complex64; 4], [Complex64; 4])> {
        match self {
            RationalParams::BetaGamma { be, ga } => Ok((*be, *ga)),
            RationalParams::Alpha { .. } => Err(Error::domain(
                "this operation needs the beta/gamma parameter block",
            )),
        }
    }

    fn as_alpha(&self) -> Result<[Complex64; 6]> {
        match self {
            RationalParams::Alpha { al } => Ok(*al),
            RationalParams::BetaGamma { .. } => Err(Error::domain(
                "this operation needs the six-alpha parameter block",
            )),
        }
    }
}

fn auto_offset(lo: f64, hi: f64) -> Result<f64> {
    let width = hi - lo;
    if !(width > MIN_WINDOW) {
        return Err(Error::pole_pinch(format!(
            "pole half-lattices leave no vertical line: window ({lo:.6}, {hi:.6})"
        )));
    }
    let m = WINDOW_MARGIN * width;
    if lo + m < 0.0 && 0.0 < hi - m {
        Ok(0.0)
    } else {
        Ok(0.5 * (lo + hi))
    }
}

fn offset_in_window(lo: f64, hi: f64, x0: f64) -> Result<()> {
    if !(x0 > lo && x0 < hi) {
        return Err(Error::domain(format!(
            "offset {x0} outside the admissible window ({lo:.6}, {hi:.6})"
        )));
    }
    Ok(())
}

/// Integrate exp(lnf) dz along Re z = x0, direct panels out to +-trunc.
fn line_integral<F>(lnf: F, x0: f64, trunc: f64, budget: usize) -> Result<Evaluation>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let n = (2.0 * trunc / PANEL_SPACING).ceil() as usize;
    let mut bps = Vec::with_capacity(n);
    for k in 1..n {
        bps.push(-trunc + k as f64 * PANEL_SPACING);
    }
    let spec = ContourSpec::line(Complex64::new(x0, 0.0), Complex64::i(), trunc, budget)?
        .with_breakpoints(&bps);
    integrate_contour(|z| Ok(lnf(z)?.exp()), &spec, REL_TOL)
}

fn scaled(ev: Evaluation, factor: Complex64) -> Evaluation {
    Evaluation {
        value: ev.value * factor,
        abs_err: ev.abs_err * factor.norm(),
        nodes_used: ev.nodes_used,
        terms_used: ev.terms_used,
    }
}

/// Poles of Gamma(b - z) march right from each b, poles of Gamma(g + z)
/// march left from each -g; the window is the gap between the two fronts.
fn jr_window(be: &[Complex64; 4], ga: &[Complex64; 4]) -> (f64, f64) {
    let hi = be.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
    let lo = -ga[2].re.min(ga[3].re);
    (lo, hi)
}

fn jr_lnf(be: [Complex64; 4], ga: [Complex64; 4], z: Complex64) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for b in &be {
        s += lngamma_complex(b - z)?;
    }
    for g in &ga[2..] {
        s += lngamma_complex(g + z)?;
    }
    for g in &ga[..2] {
        s -= lngamma_complex(1.0 - g - z)?;
    }
    Ok(s)
}

fn jr_at(be: [Complex64; 4], ga: [Complex64; 4], x0: f64, budget: usize) -> Result<Evaluation> {
    // Six falling against two rising gamma moduli leave e^{-2 pi |t|}.
    let trunc = TRUNC_LN / (2.0 * PI);
    line_integral(|z| jr_lnf(be, ga, z), x0, trunc, budget)
}

/// Four-over-two gamma-ratio integral, measure du along the vertical line.
pub fn jr(par: &RationalParams) -> Result<Evaluation> {
    let (be, ga) = par.as_beta_gamma()?;
    let (lo, hi) = jr_window(&be, &ga);
    jr_at(be, ga, auto_offset(lo, hi)?, DEFAULT_BUDGET)
}

/// [`jr`] along the explicit vertical line Re u = x0.
pub fn jr_at_offset(par: &RationalParams, x0: f64) -> Result<Evaluation> {
    let (be, ga) = par.as_beta_gamma()?;
    let (lo, hi) = jr_window(&be, &ga);
    offset_in_window(lo, hi, x0)?;
    jr_at(be, ga, x0, DEFAULT_BUDGET)
}

fn jtr_window(be: &[Complex64; 4], ga: &[Complex64; 4]) -> (f64, f64) {
    let hi = be[0].re.min(be[2].re).min(be[3].re);
    let lo = -ga[2].re.min(ga[3].re);
    (lo, hi)
}

fn jtr_lnf(be: [Complex64; 4], ga: [Complex64; 4], z: Complex64) -> Result<Complex64> {
    let mut s = Complex64::i() * PI * (be[3] - z);
    for k in [0, 2, 3] {
        s += lngamma_complex(be[k] - z)?;
    }
    for g in &ga[2..] {
        s += lngamma_complex(g + z)?;
    }
    s -= lngamma_complex(1.0 - be[1] + z)?;
    for g in &ga[..2] {
        s -= lngamma_complex(1.0 - g - z)?;
    }
    Ok(s)
}

/// Least-squares slope of ln|f| against ln t over the fit heights; the
/// integrand is expected to fall like t^{-p} there, so -slope estimates p.
fn upper_tail_exponent<F>(lnf: F) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let n = TAIL_TS.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for t in TAIL_TS {
        let x = t.ln();
        let y = lnf(Complex64::new(0.0, t))?.re;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(-slope)
}

fn guard_slow_tail(p: f64) -> Result<()> {
    if !(p > MIN_TAIL_EXPONENT) {
        return Err(Error::non_convergence(format!(
            "upper tail falls only like t^(-{p:.3}); the line integral is not summable"
        )));
    }
    Ok(())
}

fn jr_tilde_at(
    be: [Complex64; 4],
    ga: [Complex64; 4],
    x0: f64,
    budget: usize,
) -> Result<Evaluation> {
    // The phase factor cancels the gamma decay toward +i*infinity; what is
    // left falls like a power of t. Fit the exponent before integrating:
    // the mapped tail handles any summable power, but nothing slower.
    let p = upper_tail_exponent(|z| jtr_lnf(be, ga, Complex64::new(x0, 0.0) + z))?;
    guard_slow_tail(p)?;
    let ev = line_integral(|z| jtr_lnf(be, ga, z), x0, 40.0, budget)?;
    let pref =
        (lngamma_complex(1.0 - be[1] + be[3])? - lngamma_complex(be[2] - be[3])?).exp();
    Ok(scaled(ev, pref))
}

/// Half-compact companion of [`jr`]: the integrand carries e^{i pi (b4-u)},
/// decays exponentially toward -i*infinity and only as a power toward
/// +i*infinity; the external gamma ratio multiplies the line integral.
pub fn jr_tilde(par: &RationalParams) -> Result<Evaluation> {
    let (be, ga) = par.as_beta_gamma()?;
    let (lo, hi) = jtr_window(&be, &ga);
    jr_tilde_at(be, ga, auto_offset(lo, hi)?, DEFAULT_BUDGET)
}

/// [`jr_tilde`] along the explicit vertical line Re u = x0.
pub fn jr_tilde_at_offset(par: &RationalParams, x0: f64) -> Result<Evaluation> {
    let (be, ga) = par.as_beta_gamma()?;
    let (lo, hi) = jtr_window(&be, &ga);
    offset_in_window(lo, hi, x0)?;
    jr_tilde_at(be, ga, x0, DEFAULT_BUDGET)
}

fn er_window(al: &[Complex64; 6]) -> (f64, f64) {
    let m = al.iter().map(|a| a.re).fold(f64::INFINITY, f64::min);
    (-m, m)
}

fn er_lnf(al: [Complex64; 6], z: Complex64) -> Result<Complex64> {
    let mut s = (-2.0 * z / PI).ln() + ln_sin(2.0 * PI * z);
    for a in &al {
        s += lngamma_complex(a + z)? + lngamma_complex(a - z)?;
    }
    Ok(s)
}

fn er_at(al: [Complex64; 6], x0: f64, budget: usize) -> Result<Evaluation> {
    // Twelve falling gamma moduli against one rising sine leave
    // e^{-4 pi |t|}.
    let trunc = TRUNC_LN / (4.0 * PI);
    let ev = line_integral(|z| er_lnf(al, z), x0, trunc, budget)?;
    Ok(scaled(ev, 1.0 / (4.0 * PI * Complex64::i())))
}

/// Symmetric twelve-gamma integral with the reciprocal gamma pair folded
/// into -2u sin(2 pi u) / pi, measure du / (4 pi i).
pub fn er(par: &RationalParams) -> Result<Evaluation> {
    let al = par.as_alpha()?;
    let (lo, hi) = er_window(&al);
    er_at(al, auto_offset(lo, hi)?, DEFAULT_BUDGET)
}

/// [`er`] along the explicit vertical line Re u = x0.
pub fn er_at_offset(par: &RationalParams, x0: f64) -> Result<Evaluation> {
    let al = par.as_alpha()?;
    let (lo, hi) = er_window(&al);
    offset_in_window(lo, hi, x0)?;
    er_at(al, x0, DEFAULT_BUDGET)
}

/// Contiguous three-term relations at the rational level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RationalEquation {
    JrEq,
    JrTildeEq,
    ErEq,
}

pub(crate) fn nonzero_factor(v: Complex64, what: &str) -> Result<Complex64> {
    if v.norm() < FACTOR_EPS {
        return Err(Error::zero(format!("{what} vanishes in an equation coefficient")));
    }
    Ok(v)
}

/// J_r normalized by the two external gammas.
fn script_jr(be: [Complex64; 4], ga: [Complex64; 4], budget: usize) -> Result<Complex64> {
    let (lo, hi) = jr_window(&be, &ga);
    let v = jr_at(be, ga, auto_offset(lo, hi)?, budget)?.value;
    let norm =
        (lngamma_complex(be[1] - be[3])? + lngamma_complex(be[2] - be[3])?).exp();
    Ok(v / norm)
}

pub(crate) fn swap23(be: [Complex64; 4]) -> [Complex64; 4] {
    let mut w = be;
    w.swap(1, 2);
    w
}

fn shift23(be: [Complex64; 4], d2: f64, d3: f64) -> [Complex64; 4] {
    let mut w = be;
    w[1] += d2;
    w[2] += d3;
    w
}

pub(crate) fn dcoef(be: [Complex64; 4], ga: [Complex64; 4]) -> Result<Complex64> {
    let d1 = nonzero_factor(be[1] - be[2], "beta_2 - beta_3")?;
    let d2 = nonzero_factor(be[2] - be[1] - 1.0, "beta_3 - beta_2 - 1")?;
    let mut v = (be[1] - be[3] - 1.0) * (be[3] - be[1]) / (d1 * d2);
    for k in 0..4 {
        let den = nonzero_factor(be[3] + ga[k], "beta_4 + gamma_k")?;
        v *= (be[2] + ga[k] - 1.0) / den;
    }
    Ok(v)
}

fn rho_jt(be: [Complex64; 4], ga: [Complex64; 4]) -> Result<Complex64> {
    let num = (Complex64::i() * PI * (be[0] - be[1])).exp()
        * (PI * (be[3] - be[1])).sin()
        * (PI * (be[2] + ga[0])).sin()
        * (PI * (be[2] + ga[1])).sin();
    let den = nonzero_factor((PI * (be[1] - be[2])).sin(), "sin pi (beta_2 - beta_3)")?
        * nonzero_factor((PI * (be[3] + ga[2])).sin(), "sin pi (beta_4 + gamma_3)")?
        * nonzero_factor((PI * (be[3] + ga[3])).sin(), "sin pi (beta_4 + gamma_4)")?;
    Ok(num / den)
}

pub(crate) fn three_term(
    a_plus: Complex64,
    a_minus: Complex64,
    f0: Complex64,
    f_plus: Complex64,
    f_minus: Complex64,
) -> Complex64 {
    let t_plus = a_plus * (f_plus - f0);
    let t_minus = a_minus * (f_minus - f0);
    let scale = t_plus.norm().max(t_minus.norm()).max(f0.norm()).max(1e-300);
    (t_plus + t_minus + f0) / scale
}

fn jr_eq_residual(be: [Complex64; 4], ga: [Complex64; 4]) -> Result<Complex64> {
    let a_plus = dcoef(be, ga)?;
    let a_minus = dcoef(swap23(be), ga)?;
    let (f0, (fp, fm)) = rayon::join(
        || script_jr(be, ga, DEFAULT_BUDGET),
        || {
            rayon::join(
                || script_jr(shift23(be, 1.0, -1.0), ga, DEFAULT_BUDGET),
                || script_jr(shift23(be, -1.0, 1.0), ga, DEFAULT_BUDGET),
            )
        },
    );
    Ok(three_term(a_plus, a_minus, f0?, fp?, fm?))
}

fn jr_tilde_eq_residual(be: [Complex64; 4], ga: [Complex64; 4]) -> Result<Complex64> {
    let a_plus = rho_jt(be, ga)?;
    let a_minus = rho_jt(swap23(be), ga)?;
    let tilde = |b: [Complex64; 4]| -> Result<Complex64> {
        let (lo, hi) = jtr_window(&b, &ga);
        Ok(jr_tilde_at(b, ga, auto_offset(lo, hi)?, DEFAULT_BUDGET)?.value)
    };
    // Both tilde terms are compared against the same normalized base value.
    let (f0, (fp, fm)) = rayon::join(
        || script_jr(be, ga, DEFAULT_BUDGET),
        || rayon::join(|| tilde(be), || tilde(swap23(be))),
    );
    Ok(three_term(a_plus, a_minus, f0?, fp?, fm?))
}

pub(crate) fn swap56(al: [Complex64; 6]) -> [Complex64; 6] {
    let mut w = al;
    w.swap(4, 5);
    w
}

fn shift56(al: [Complex64; 6], d5: f64, d6: f64) -> [Complex64; 6] {
    let mut w = al;
    w[4] += d5;
    w[5] += d6;
    w
}

pub(crate) fn ccoef(al: [Complex64; 6]) -> Result<Complex64> {
    let mut num = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        num *= al[5] + al[k] - 1.0;
    }
    let sum: Complex64 = al.iter().sum();
    let den = nonzero_factor(al[4] - al[5], "alpha_5 - alpha_6")?
        * nonzero_factor(al[5] - al[4] - 1.0, "alpha_6 - alpha_5 - 1")?
        * nonzero_factor(al[5] + al[4] - 1.0, "alpha_6 + alpha_5 - 1")?
        * nonzero_factor(2.0 - sum, "2 - sum alpha")?;
    Ok(num / den)
}

fn er_eq_residual(al: [Complex64; 6]) -> Result<Complex64> {
    let a_plus = ccoef(al)?;
    let a_minus = ccoef(swap56(al))?;
    let ev = |a: [Complex64; 6]| -> Result<Complex64> {
        let (lo, hi) = er_window(&a);
        Ok(er_at(a, auto_offset(lo, hi)?, DEFAULT_BUDGET)?.value)
    };
    let (f0, (fp, fm)) = rayon::join(
        || ev(al),
        || rayon::join(|| ev(shift56(al, 1.0, -1.0)), || ev(shift56(al, -1.0, 1.0))),
    );
    Ok(three_term(a_plus, a_minus, f0?, fp?, fm?))
}

/// Normalized residual of the named contiguous relation, scaled by the
/// largest of the three assembled terms.
pub fn rational_residual(eq: RationalEquation, par: &RationalParams) -> Result<Complex64> {
    match eq {
        RationalEquation::JrEq => {
            let (be, ga) = par.as_beta_gamma()?;
            jr_eq_residual(be, ga)
        }
        RationalEquation::JrTildeEq => {
            let (be, ga) = par.as_beta_gamma()?;
            jr_tilde_eq_residual(be, ga)
        }
        RationalEquation::ErEq => {
            let al = par.as_alpha()?;
            er_eq_residual(al)
        }
    }
}
