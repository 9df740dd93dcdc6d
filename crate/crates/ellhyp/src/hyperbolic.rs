//! Hyperbolic beta-type integrals over a vertical line, the contiguous
//! difference equations they satisfy, two reduction identities, and the
//! quantum 6j-symbol assembled from them.
//!
//! Three integrand families share one quadrature core: the balanced
//! eight-parameter integral [`ih`], the unbalanced six-parameter integral
//! [`eh`], and the four-plus-four integral [`jh`]. All integrate products
//! of hyperbolic gammas along Re z = x0; the admissible x0-window is
//! computed from the two pole half-lattices and the line defaults to the
//! imaginary axis when that is admissible, otherwise to the window
//! midpoint. The reciprocal gamma pair in `ih`/`eh` is folded in through
//! 1/(gamma2(2z) gamma2(-2z)) = -4 sin(2 pi z / w1) sin(2 pi z / w2).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::contour::{integrate_contour, ContourSpec, Evaluation};
use crate::error::{Error, Result};
use crate::gamma::{hgamma, ln_hgamma, ln_sin, QuasiPeriods};

/// Relative slack for the balancing sums.
const BALANCE_RTOL: f64 = 1e-12;
/// Sine factors in equation coefficients below this magnitude are treated
/// as exact zeros of the potential.
const SIN_EPS: f64 = 1e-8;
/// Slack for the two degeneration-locus conditions of [`jh_closed_form`].
const LOCUS_TOL: f64 = 1e-10;
/// Relative quadrature target per integral.
const REL_TOL: f64 = 1e-12;
/// Node budget for a single integral evaluation.
const DEFAULT_BUDGET: usize = 120_000;
/// Ceiling for the 6j budget escalation at slow contour decay.
const PT_BUDGET_CAP: usize = 600_000;
/// ln|integrand| drop, relative to the contour midpoint scale, at which
/// the direct panels stop and the mapped tails take over.
const TRUNC_LN: f64 = 52.0;
/// Initial panel width along the line; narrow gamma ridges (pole lattices
/// running almost parallel to the contour) are never wider apart than 1.
const PANEL_SPACING: f64 = 0.5;
/// Fraction of the window width kept clear of both pole half-lattices.
const WINDOW_MARGIN: f64 = 0.05;
/// Windows narrower than this pinch the contour.
const MIN_WINDOW: f64 = 1e-6;
/// Slower exponential decay than this is rejected as nonconvergent.
const MIN_DECAY: f64 = 1e-3;

fn require_finite(vals: &[Complex64], what: &str) -> Result<()> {
    for v in vals {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::domain(format!("{what} must be finite, got {v}")));
        }
    }
    Ok(())
}

fn balance_check(sum: Complex64, target: Complex64, what: &str) -> Result<()> {
    let tol = BALANCE_RTOL * target.norm().max(1.0);
    if (sum - target).norm() > tol {
        return Err(Error::domain(format!(
            "{what}: parameter sum {sum} must equal {target}"
        )));
    }
    Ok(())
}

/// Eight balanced parameters for [`ih`]: sum u_a = 2Q. The last parameter
/// is snapped to the exact complement so downstream shifts keep the
/// balance to rounding.
#[derive(Debug, Clone, Copy)]
pub struct HypParams8 {
    u: [Complex64; 8],
    w: QuasiPeriods,
}

impl HypParams8 {
    pub fn new(u: [Complex64; 8], w: QuasiPeriods) -> Result<Self> {
        require_finite(&u, "parameters")?;
        let sum: Complex64 = u.iter().sum();
        let target = 2.0 * w.q();
        balance_check(sum, target, "eight-parameter balancing")?;
        let mut u = u;
        u[7] = target - (sum - u[7]);
        Ok(HypParams8 { u, w })
    }

    pub fn u(&self) -> &[Complex64; 8] {
        &self.u
    }

    pub fn w(&self) -> QuasiPeriods {
        self.w
    }
}

/// Six free parameters for [`eh`]; no balancing condition.
#[derive(Debug, Clone, Copy)]
pub struct HypParams6 {
    u: [Complex64; 6],
    w: QuasiPeriods,
}

impl HypParams6 {
    pub fn new(u: [Complex64; 6], w: QuasiPeriods) -> Result<Self> {
        require_finite(&u, "parameters")?;
        Ok(HypParams6 { u, w })
    }

    pub fn u(&self) -> &[Complex64; 6] {
        &self.u
    }

    pub fn w(&self) -> QuasiPeriods {
        self.w
    }
}

/// Four-plus-four parameters for [`jh`]: sum (mu_a + nu_a) = 2Q, with
/// nu_4 snapped to the exact complement.
#[derive(Debug, Clone, Copy)]
pub struct MuNuParams {
    mu: [Complex64; 4],
    nu: [Complex64; 4],
    w: QuasiPeriods,
}

impl MuNuParams {
    pub fn new(mu: [Complex64; 4], nu: [Complex64; 4], w: QuasiPeriods) -> Result<Self> {
        require_finite(&mu, "mu parameters")?;
        require_finite(&nu, "nu parameters")?;
        let sum: Complex64 = mu.iter().sum::<Complex64>() + nu.iter().sum::<Complex64>();
        let target = 2.0 * w.q();
        balance_check(sum, target, "mu-nu balancing")?;
        let mut nu = nu;
        nu[3] = target - (sum - nu[3]);
        Ok(MuNuParams { mu, nu, w })
    }

    pub fn mu(&self) -> &[Complex64; 4] {
        &self.mu
    }

    pub fn nu(&self) -> &[Complex64; 4] {
        &self.nu
    }

    pub fn w(&self) -> QuasiPeriods {
        self.w
    }
}

/// Pick Re z = x0 inside the pole-free window (lo, hi): the imaginary
/// axis when it clears the margin, otherwise the window midpoint.
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

/// Integrate exp(lnf) along Re z = x0 with exponential decay rate
/// `decay` (per unit height). Initial panels every PANEL_SPACING.
fn line_integral<F>(lnf: F, x0: f64, decay: f64, budget: usize) -> Result<Evaluation>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(decay > MIN_DECAY) {
        return Err(Error::non_convergence(format!(
            "integrand decay rate {decay:.3e} along the contour is too small"
        )));
    }
    let trunc = TRUNC_LN / decay;
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

fn ih_window(par: &HypParams8) -> (f64, f64) {
    let m = par.u.iter().map(|u| u.re).fold(f64::INFINITY, f64::min);
    (-m, m)
}

fn eh_window(par: &HypParams6) -> (f64, f64) {
    let m = par.u.iter().map(|u| u.re).fold(f64::INFINITY, f64::min);
    (-m, m)
}

fn jh_window(par: &MuNuParams) -> (f64, f64) {
    let hi = par.mu.iter().map(|u| u.re).fold(f64::INFINITY, f64::min);
    let lo = -par.nu.iter().map(|u| u.re).fold(f64::INFINITY, f64::min);
    (lo, hi)
}

fn ih_at(par: &HypParams8, x0: f64, budget: usize) -> Result<Evaluation> {
    let w = par.w;
    let u = par.u;
    let ww = w.w1() * w.w2();
    // parameter sum is 2Q, so gammas and the sine pair decay together at
    // rate 2 pi Re(Q / (w1 w2))
    let decay = 2.0 * PI * (w.q() / ww).re;
    let ln_m4 = Complex64::new(4.0f64.ln(), PI);
    let lnf = |z: Complex64| -> Result<Complex64> {
        let mut s = ln_m4 + ln_sin(2.0 * PI * z / w.w1()) + ln_sin(2.0 * PI * z / w.w2());
        for a in &u {
            s += ln_hgamma(a + z, w)? + ln_hgamma(a - z, w)?;
        }
        Ok(s)
    };
    let ev = line_integral(lnf, x0, decay, budget)?;
    Ok(scaled(ev, 1.0 / (2.0 * Complex64::i() * ww.sqrt())))
}

/// Balanced eight-parameter integral with measure dz / (2i sqrt(w1 w2)).
pub fn ih(par: &HypParams8) -> Result<Evaluation> {
    let (lo, hi) = ih_window(par);
    ih_at(par, auto_offset(lo, hi)?, DEFAULT_BUDGET)
}

/// [`ih`] along the explicit vertical line Re z = x0.
pub fn ih_at_offset(par: &HypParams8, x0: f64) -> Result<Evaluation> {
    let (lo, hi) = ih_window(par);
    offset_in_window(lo, hi, x0)?;
    ih_at(par, x0, DEFAULT_BUDGET)
}

fn eh_at(par: &HypParams6, x0: f64, budget: usize) -> Result<Evaluation> {
    let w = par.w;
    let u = par.u;
    let ww = w.w1() * w.w2();
    let sum: Complex64 = u.iter().sum();
    // without balancing the decay rate depends on the parameter sum and
    // the integral only exists while it stays positive
    let decay = 2.0 * PI * ((2.0 * w.q() - sum) / ww).re;
    let ln_m4 = Complex64::new(4.0f64.ln(), PI);
    let lnf = |z: Complex64| -> Result<Complex64> {
        let mut s = ln_m4 + ln_sin(2.0 * PI * z / w.w1()) + ln_sin(2.0 * PI * z / w.w2());
        for a in &u {
            s += ln_hgamma(a + z, w)? + ln_hgamma(a - z, w)?;
        }
        Ok(s)
    };
    let ev = line_integral(lnf, x0, decay, budget)?;
    Ok(scaled(ev, 1.0 / (2.0 * Complex64::i() * ww.sqrt())))
}

/// Unbalanced six-parameter integral with measure dz / (2i sqrt(w1 w2)).
pub fn eh(par: &HypParams6) -> Result<Evaluation> {
    let (lo, hi) = eh_window(par);
    eh_at(par, auto_offset(lo, hi)?, DEFAULT_BUDGET)
}

/// [`eh`] along the explicit vertical line Re z = x0.
pub fn eh_at_offset(par: &HypParams6, x0: f64) -> Result<Evaluation> {
    let (lo, hi) = eh_window(par);
    offset_in_window(lo, hi, x0)?;
    eh_at(par, x0, DEFAULT_BUDGET)
}

fn jh_at(par: &MuNuParams, x0: f64, budget: usize) -> Result<Evaluation> {
    let w = par.w;
    let ww = w.w1() * w.w2();
    let decay = 2.0 * PI * (w.q() / ww).re;
    let mu = par.mu;
    let nu = par.nu;
    let lnf = |z: Complex64| -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            s += ln_hgamma(mu[a] - z, w)? + ln_hgamma(nu[a] + z, w)?;
        }
        Ok(s)
    };
    let ev = line_integral(lnf, x0, decay, budget)?;
    Ok(scaled(ev, 1.0 / (Complex64::i() * ww.sqrt())))
}

/// Four-plus-four integral with measure dz / (i sqrt(w1 w2)).
pub fn jh(par: &MuNuParams) -> Result<Evaluation> {
    let (lo, hi) = jh_window(par);
    jh_at(par, auto_offset(lo, hi)?, DEFAULT_BUDGET)
}

/// [`jh`] along the explicit vertical line Re z = x0.
pub fn jh_at_offset(par: &MuNuParams, x0: f64) -> Result<Evaluation> {
    let (lo, hi) = jh_window(par);
    offset_in_window(lo, hi, x0)?;
    jh_at(par, x0, DEFAULT_BUDGET)
}

/// Nine-gamma product for [`jh`] on the degeneration locus
/// mu_4 + nu_4 = Q, sum_{a<=3} (mu_a + nu_a) = Q.
pub fn jh_closed_form(par: &MuNuParams) -> Result<Complex64> {
    let w = par.w;
    let q = w.q();
    let tol = LOCUS_TOL * q.norm().max(1.0);
    let c1 = par.mu[3] + par.nu[3] - q;
    let c2: Complex64 =
        (0..3).map(|a| par.mu[a] + par.nu[a]).sum::<Complex64>() - q;
    if c1.norm() > tol || c2.norm() > tol {
        return Err(Error::domain(format!(
            "off the degeneration locus: mu4+nu4-Q = {c1:.3e}, sum_3(mu+nu)-Q = {c2:.3e}"
        )));
    }
    let mut prod = Complex64::new(1.0, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            prod *= hgamma(par.mu[a] + par.nu[b], w)?;
        }
    }
    Ok(prod)
}

/// Which contiguous difference equation to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypEquation {
    /// Eight-parameter equation, shifts along w2.
    Br,
    /// Eight-parameter equation, shifts along w1.
    Br2,
    /// Six-parameter equation, shifts along w2.
    Difeh,
    /// Six-parameter equation, shifts along w1.
    Difeh2,
    /// Four-plus-four equation, shifts along w2.
    Secdif,
    /// Four-plus-four equation, shifts along w1.
    Secdif2,
}

/// Parameter set for [`hyp_residual`], one variant per integrand family.
#[derive(Debug, Clone, Copy)]
pub enum HypInput {
    Eight(HypParams8),
    Six(HypParams6),
    MuNu(MuNuParams),
}

fn sin_factor(x: Complex64, wa: Complex64) -> Result<Complex64> {
    let s = (PI * x / wa).sin();
    if s.norm() < SIN_EPS {
        return Err(Error::zero(format!(
            "sine denominator sin(pi {x} / {wa}) vanishes"
        )));
    }
    Ok(s)
}

/// Three-term residual (A+ (F+ - F) + A- (F- - F) + F) / max|term|.
fn three_term(
    a_plus: Complex64,
    a_minus: Complex64,
    f0: Complex64,
    f_plus: Complex64,
    f_minus: Complex64,
) -> Result<Complex64> {
    let t1 = a_plus * (f_plus - f0);
    let t2 = a_minus * (f_minus - f0);
    let t3 = f0;
    let scale = t1.norm().max(t2.norm()).max(t3.norm());
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::zero("all three equation terms vanish or overflow"));
    }
    Ok((t1 + t2 + t3) / scale)
}

/// Potential of the eight-parameter equation: sines in wa, shifts by wb,
/// acting on the pair (u6, u7) with spectator u8.
fn br_coeff(u: &[Complex64; 8], wa: Complex64, wb: Complex64) -> Result<Complex64> {
    let s = |x: Complex64| (PI * x / wa).sin();
    let num = s(u[5] - u[7] - wb) * s(u[5] + u[7]) * s(u[7] - u[5]);
    let mut den = sin_factor(u[5] - u[6], wa)?
        * sin_factor(u[6] - u[5] - wb, wa)?
        * sin_factor(u[6] + u[5] - wb, wa)?;
    let mut v = num / den;
    for k in 0..5 {
        den = sin_factor(u[7] + u[k], wa)?;
        v *= s(u[6] + u[k] - wb) / den;
    }
    Ok(v)
}

fn br_residual(par: &HypParams8, swap: bool) -> Result<Complex64> {
    let w = par.w;
    let (wa, wb) = if swap { (w.w2(), w.w1()) } else { (w.w1(), w.w2()) };
    let u0 = par.u;
    let mut usw = u0;
    usw.swap(5, 6);
    let a_plus = br_coeff(&u0, wa, wb)?;
    let a_minus = br_coeff(&usw, wa, wb)?;
    let y = |u: [Complex64; 8]| -> Result<Complex64> {
        let p = HypParams8::new(u, w)?;
        let den = hgamma(u[5] + u[7], w)?
            * hgamma(u[5] - u[7], w)?
            * hgamma(u[6] + u[7], w)?
            * hgamma(u[6] - u[7], w)?;
        if den.norm() == 0.0 || !den.is_finite() {
            return Err(Error::zero("normalizing gamma product vanishes"));
        }
        Ok(ih(&p)?.value / den)
    };
    let mut up = u0;
    up[5] += wb;
    up[6] -= wb;
    let mut um = u0;
    um[5] -= wb;
    um[6] += wb;
    let (y0, (yp, ym)) = rayon::join(|| y(u0), || rayon::join(|| y(up), || y(um)));
    three_term(a_plus, a_minus, y0?, yp?, ym?)
}

/// Potential of the six-parameter equation on the pair (u5, u6).
fn difeh_coeff(
    u: &[Complex64; 6],
    q: Complex64,
    wa: Complex64,
    wb: Complex64,
) -> Result<Complex64> {
    let s = |x: Complex64| (PI * x / wa).sin();
    let mut num = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        num *= s(u[5] + u[k] - wb);
    }
    let sum: Complex64 = u.iter().sum();
    let den = sin_factor(u[4] - u[5], wa)?
        * sin_factor(u[5] - u[4] - wb, wa)?
        * sin_factor(u[5] + u[4] - wb, wa)?
        * sin_factor(2.0 * q - sum, wa)?;
    Ok(num / den)
}

fn difeh_residual(par: &HypParams6, swap: bool) -> Result<Complex64> {
    let w = par.w;
    let q = w.q();
    let (wa, wb) = if swap { (w.w2(), w.w1()) } else { (w.w1(), w.w2()) };
    let u0 = par.u;
    let mut usw = u0;
    usw.swap(4, 5);
    let a_plus = difeh_coeff(&u0, q, wa, wb)?;
    let a_minus = difeh_coeff(&usw, q, wa, wb)?;
    let f = |u: [Complex64; 6]| -> Result<Complex64> { Ok(eh(&HypParams6::new(u, w)?)?.value) };
    let mut up = u0;
    up[4] += wb;
    up[5] -= wb;
    let mut um = u0;
    um[4] -= wb;
    um[5] += wb;
    let (f0, (fp, fm)) = rayon::join(|| f(u0), || rayon::join(|| f(up), || f(um)));
    three_term(a_plus, a_minus, f0?, fp?, fm?)
}

/// Potential of the four-plus-four equation on the pair (mu2, mu3) with
/// spectator mu4.
fn secdif_coeff(
    mu: &[Complex64; 4],
    nu: &[Complex64; 4],
    wa: Complex64,
    wb: Complex64,
) -> Result<Complex64> {
    let s = |x: Complex64| (PI * x / wa).sin();
    let num = s(mu[1] - mu[3] - wb) * s(mu[3] - mu[1]);
    let mut den = sin_factor(mu[1] - mu[2], wa)? * sin_factor(mu[2] - mu[1] - wb, wa)?;
    let mut v = num / den;
    for k in 0..4 {
        den = sin_factor(mu[3] + nu[k], wa)?;
        v *= s(mu[2] + nu[k] - wb) / den;
    }
    Ok(v)
}

fn secdif_residual(par: &MuNuParams, swap: bool) -> Result<Complex64> {
    let w = par.w;
    let (wa, wb) = if swap { (w.w2(), w.w1()) } else { (w.w1(), w.w2()) };
    let mu0 = par.mu;
    let nu = par.nu;
    let mut musw = mu0;
    musw.swap(1, 2);
    let a_plus = secdif_coeff(&mu0, &nu, wa, wb)?;
    let a_minus = secdif_coeff(&musw, &nu, wa, wb)?;
    let f = |mu: [Complex64; 4]| -> Result<Complex64> {
        let p = MuNuParams::new(mu, nu, w)?;
        let den = hgamma(mu[1] - mu[3], w)? * hgamma(mu[2] - mu[3], w)?;
        if den.norm() == 0.0 || !den.is_finite() {
            return Err(Error::zero("normalizing gamma product vanishes"));
        }
        Ok(jh(&p)?.value / den)
    };
    let mut up = mu0;
    up[1] += wb;
    up[2] -= wb;
    let mut um = mu0;
    um[1] -= wb;
    um[2] += wb;
    let (f0, (fp, fm)) = rayon::join(|| f(mu0), || rayon::join(|| f(up), || f(um)));
    three_term(a_plus, a_minus, f0?, fp?, fm?)
}

/// Assemble the named difference equation's left side from three integral
/// evaluations (run concurrently) and return it normalized by the largest
/// of the three terms.
pub fn hyp_residual(eq: HypEquation, par: &HypInput) -> Result<Complex64> {
    match (eq, par) {
        (HypEquation::Br, HypInput::Eight(p)) => br_residual(p, false),
        (HypEquation::Br2, HypInput::Eight(p)) => br_residual(p, true),
        (HypEquation::Difeh, HypInput::Six(p)) => difeh_residual(p, false),
        (HypEquation::Difeh2, HypInput::Six(p)) => difeh_residual(p, true),
        (HypEquation::Secdif, HypInput::MuNu(p)) => secdif_residual(p, false),
        (HypEquation::Secdif2, HypInput::MuNu(p)) => secdif_residual(p, true),
        (HypEquation::Br | HypEquation::Br2, _) => {
            Err(Error::domain("this equation needs the eight-parameter input"))
        }
        (HypEquation::Difeh | HypEquation::Difeh2, _) => {
            Err(Error::domain("this equation needs the six-parameter input"))
        }
        (HypEquation::Secdif | HypEquation::Secdif2, _) => {
            Err(Error::domain("this equation needs the mu-nu input"))
        }
    }
}

/// Which reduction identity to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypIdentity {
    /// Four-plus-four integral equals a six-gamma prefactor times the
    /// six-parameter integral at eta-shifted arguments.
    Jheh,
    /// Four-plus-four integral equals an eight-gamma prefactor times
    /// itself at eta-shifted arguments.
    Ide1b,
}

/// Relative deviation |LHS - RHS| / max(|LHS|, |RHS|) of the identity.
pub fn check_identity(id: HypIdentity, par: &MuNuParams) -> Result<f64> {
    let w = par.w;
    let q = w.q();
    let mu = par.mu;
    let nu = par.nu;
    let lhs = jh(par)?.value;
    let rhs = match id {
        HypIdentity::Jheh => {
            let eta = (q - nu[3] - (mu[0] + mu[1] + mu[2])) / 2.0;
            let mut pref = Complex64::new(1.0, 0.0);
            for a in 0..3 {
                pref *= hgamma(mu[a] + nu[3], w)? * hgamma(nu[a] + mu[3], w)?;
            }
            let args = [
                mu[0] + eta,
                mu[1] + eta,
                mu[2] + eta,
                nu[0] - eta,
                nu[1] - eta,
                nu[2] - eta,
            ];
            pref * eh(&HypParams6::new(args, w)?)?.value
        }
        HypIdentity::Ide1b => {
            let eta = (q - mu[0] - mu[1] - nu[0] - nu[1]) / 2.0;
            let mut pref = Complex64::new(1.0, 0.0);
            for j in 0..2 {
                for k in 0..2 {
                    pref *= hgamma(mu[j] + nu[k], w)?;
                }
            }
            for j in 2..4 {
                for k in 2..4 {
                    pref *= hgamma(mu[j] + nu[k], w)?;
                }
            }
            let mus = [mu[0] + eta, mu[1] + eta, mu[2] - eta, mu[3] - eta];
            let nus = [nu[0] + eta, nu[1] + eta, nu[2] - eta, nu[3] - eta];
            pref * jh(&MuNuParams::new(mus, nus, w)?)?.value
        }
    };
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

/// Fusion parameters of the quantum 6j-symbol: four external weights, the
/// two channel weights, and the modular parameter b (quasiperiods b and
/// 1/b). The mu-nu image is derived at construction and its balancing is
/// verified.
#[derive(Debug, Clone, Copy)]
pub struct PTParams {
    alpha: [Complex64; 4],
    alpha_s: Complex64,
    alpha_t: Complex64,
    b: Complex64,
    w: QuasiPeriods,
    mu: [Complex64; 4],
    nu: [Complex64; 4],
}

impl PTParams {
    pub fn new(
        alpha: [Complex64; 4],
        alpha_s: Complex64,
        alpha_t: Complex64,
        b: Complex64,
    ) -> Result<Self> {
        require_finite(&alpha, "weights")?;
        require_finite(&[alpha_s, alpha_t, b], "weights")?;
        let w = QuasiPeriods::from_modulus(b)?;
        let qh = w.q() / 2.0;
        // centered variables: channel weights measured from Q/2
        let sp = alpha_s - qh;
        let tp = qh - alpha_t;
        let a1 = qh - alpha[0];
        let a2 = qh - alpha[1];
        let a3 = qh - alpha[2];
        let a4 = alpha[3] - qh;
        let nu = [
            qh - sp - a1 + a2,
            qh - sp + a1 + a2,
            qh - sp - a3 - a4,
            qh - sp + a3 - a4,
        ];
        let mu = [
            sp - tp + a4 - a2,
            sp + tp + a4 - a2,
            Complex64::new(0.0, 0.0),
            2.0 * sp,
        ];
        let sum: Complex64 = mu.iter().sum::<Complex64>() + nu.iter().sum::<Complex64>();
        balance_check(sum, 2.0 * w.q(), "derived mu-nu balancing")?;
        Ok(PTParams { alpha, alpha_s, alpha_t, b, w, mu, nu })
    }

    pub fn alpha(&self) -> &[Complex64; 4] {
        &self.alpha
    }

    pub fn alpha_s(&self) -> Complex64 {
        self.alpha_s
    }

    pub fn alpha_t(&self) -> Complex64 {
        self.alpha_t
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn w(&self) -> QuasiPeriods {
        self.w
    }

    /// Derived four-plus-four parameter set.
    pub fn munu(&self) -> Result<MuNuParams> {
        MuNuParams::new(self.mu, self.nu, self.w)
    }
}

/// Quantum 6j-symbol: four-gamma prefactor, the t-channel measure factor
/// gamma2(2 alpha_t) gamma2(2Q - 2 alpha_t) (the squared modulus on the
/// unitary line, continued off it), and the four-plus-four integral with
/// plain measure dz, i.e. i sqrt(w1 w2) times [`jh`].
pub fn pt_6j(par: &PTParams) -> Result<Evaluation> {
    let w = par.w;
    let q = w.q();
    let a = par.alpha;
    let num = hgamma(par.alpha_s + a[1] - a[0], w)? * hgamma(a[0] + par.alpha_t - a[3], w)?;
    let den = hgamma(par.alpha_t + a[1] - a[2], w)? * hgamma(a[2] + par.alpha_s - a[3], w)?;
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::zero("prefactor denominator gamma vanishes"));
    }
    let meas = hgamma(2.0 * par.alpha_t, w)? * hgamma(2.0 * (q - par.alpha_t), w)?;
    let munu = par.munu()?;
    let (lo, hi) = jh_window(&munu);
    let x0 = auto_offset(lo, hi)?;
    // slow contour decay (b near i) needs proportionally more panels
    let decay = 2.0 * PI * (q / (w.w1() * w.w2())).re;
    if !(decay > MIN_DECAY) {
        return Err(Error::non_convergence(format!(
            "contour decay rate {decay:.3e} too small for the 6j integral"
        )));
    }
    let panels = (4.0 * TRUNC_LN / decay / PANEL_SPACING) as usize;
    let budget = (30 * panels).clamp(DEFAULT_BUDGET, PT_BUDGET_CAP);
    let jv = jh_at(&munu, x0, budget)?;
    let root = (w.w1() * w.w2()).sqrt();
    Ok(scaled(jv, num / den * meas * Complex64::i() * root))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    fn w14() -> QuasiPeriods {
        QuasiPeriods::real(1.0, 1.4).unwrap()
    }

    // parameter sums below are balanced to 2Q = 4.8 for w = (1, 1.4)

    fn anchor8() -> HypParams8 {
        let u = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.45, 0.6].map(r);
        HypParams8::new(u, w14()).unwrap()
    }

    fn anchor_munu() -> MuNuParams {
        let mu = [0.55, 0.6, 0.65, 0.45].map(r);
        let nu = [0.5, 0.7, 0.65, 0.7].map(r);
        MuNuParams::new(mu, nu, w14()).unwrap()
    }

    #[test]
    fn ih_matches_reference_value() {
        let v = ih(&anchor8()).unwrap();
        let want = r(0.002443122654299160958904);
        assert!(rel(v.value, want) < 1e-9, "rel = {:.3e}", rel(v.value, want));
    }

    #[test]
    fn ih_permutation_and_period_swap_invariance() {
        let base = ih(&anchor8()).unwrap().value;
        let mut u = *anchor8().u();
        u.swap(0, 5);
        u.swap(2, 7);
        let perm = ih(&HypParams8::new(u, w14()).unwrap()).unwrap().value;
        assert!(rel(perm, base) < 1e-9);
        let swapped = HypParams8::new(*anchor8().u(), w14().swapped()).unwrap();
        assert!(rel(ih(&swapped).unwrap().value, base) < 1e-9);
    }

    #[test]
    fn ih_stable_under_offset_change() {
        let w = QuasiPeriods::real(1.0, 1.3).unwrap();
        let u = [
            c(0.5, 0.1),
            c(0.55, -0.1),
            c(0.6, 0.05),
            c(0.65, -0.05),
            c(0.7, 0.08),
            c(0.45, -0.08),
            c(0.55, 0.03),
            c(0.6, -0.03),
        ];
        let par = HypParams8::new(u, w).unwrap();
        let a = ih(&par).unwrap().value;
        let b = ih_at_offset(&par, 0.1).unwrap().value;
        assert!(rel(a, b) < 1e-9, "rel = {:.3e}", rel(a, b));
    }

    #[test]
    fn ih_empty_window_is_pole_pinch() {
        let mut u = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.45, 0.6].map(r);
        u[0] = c(-0.1, 0.0);
        u[1] = r(1.15);
        let par = HypParams8::new(u, w14()).unwrap();
        assert!(matches!(ih(&par), Err(Error::PolePinch(_))));
    }

    #[test]
    fn eh_matches_reference_value() {
        let u = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75].map(r);
        let par = HypParams6::new(u, w14()).unwrap();
        let v = eh(&par).unwrap();
        let want = r(0.03237168345253850013418);
        assert!(rel(v.value, want) < 1e-9, "rel = {:.3e}", rel(v.value, want));
    }

    #[test]
    fn eh_permutation_invariance_and_two_offsets() {
        let w = QuasiPeriods::real(1.0, 2.0).unwrap();
        let u = [
            c(0.5, 0.1),
            c(0.55, -0.05),
            c(0.6, 0.08),
            c(0.65, -0.1),
            c(0.7, 0.02),
            c(0.75, -0.05),
        ];
        let par = HypParams6::new(u, w).unwrap();
        let base = eh(&par).unwrap().value;
        let mut up = u;
        up.swap(0, 4);
        up.swap(1, 3);
        let perm = eh(&HypParams6::new(up, w).unwrap()).unwrap().value;
        assert!(rel(perm, base) < 1e-9);
        let off = eh_at_offset(&par, 0.15).unwrap().value;
        assert!(rel(off, base) < 1e-9, "rel = {:.3e}", rel(off, base));
    }

    #[test]
    fn eh_growing_integrand_rejected() {
        // parameter sum beyond 2Q reverses the decay
        let u = [1.5, 1.55, 1.6, 1.65, 1.7, 1.75].map(r);
        let par = HypParams6::new(u, w14()).unwrap();
        assert!(matches!(eh(&par), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn jh_matches_reference_value() {
        let v = jh(&anchor_munu()).unwrap();
        let want = r(0.02489793845945998944203);
        assert!(rel(v.value, want) < 1e-9, "rel = {:.3e}", rel(v.value, want));
    }

    #[test]
    fn jh_mu_nu_exchange_invariance() {
        let par = anchor_munu();
        let ex = MuNuParams::new(*par.nu(), *par.mu(), par.w()).unwrap();
        let a = jh(&par).unwrap().value;
        let b = jh(&ex).unwrap().value;
        assert!(rel(a, b) < 1e-10, "rel = {:.3e}", rel(a, b));
    }

    #[test]
    fn jheh_identity_holds_at_anchor() {
        let dev = check_identity(HypIdentity::Jheh, &anchor_munu()).unwrap();
        assert!(dev < 1e-9, "deviation = {dev:.3e}");
    }

    #[test]
    fn ide1b_identity_holds_at_anchor() {
        let dev = check_identity(HypIdentity::Ide1b, &anchor_munu()).unwrap();
        assert!(dev < 1e-9, "deviation = {dev:.3e}");
    }

    #[test]
    fn ide1b_with_vanishing_shift_is_exact() {
        // mu1 + mu2 + nu1 + nu2 = Q makes the shift vanish and turns the
        // prefactor into two reflection pairs
        let mu = [0.6, 0.55, 0.65, 0.5].map(r);
        let nu = [0.7, 0.55, 0.6, 0.65].map(r);
        let par = MuNuParams::new(mu, nu, w14()).unwrap();
        let eta = (w14().q() - mu[0] - mu[1] - nu[0] - nu[1]) / 2.0;
        assert!(eta.norm() < 1e-14);
        let dev = check_identity(HypIdentity::Ide1b, &par).unwrap();
        assert!(dev < 1e-12, "deviation = {dev:.3e}");
    }

    #[test]
    fn jh_closed_form_matches_quadrature_on_locus() {
        let mu = [0.45, 0.5, 0.4, 1.1].map(r);
        let nu = [0.35, 0.3, 0.4, 1.3].map(r);
        let par = MuNuParams::new(mu, nu, w14()).unwrap();
        let cf = jh_closed_form(&par).unwrap();
        let qv = jh(&par).unwrap().value;
        assert!(rel(qv, cf) < 1e-8, "rel = {:.3e}", rel(qv, cf));
    }

    #[test]
    fn jh_closed_form_rejects_off_locus() {
        assert!(matches!(jh_closed_form(&anchor_munu()), Err(Error::Domain(_))));
    }

    #[test]
    fn nine_reflection_point_product_is_one() {
        // all mu_a + nu_b = Q/2 forces equal mu's, which breaks the locus
        // sums, so the arrangement is rejected; the nine-gamma product at
        // the reflection midpoint itself still collapses to 1
        let w = w14();
        let qh = w.q() / 2.0;
        let mu = [qh - 0.3, qh - 0.3, qh - 0.3, r(1.1)];
        let nu = [r(0.3), r(0.3), r(0.3), w.q() - 1.1];
        match MuNuParams::new(mu, nu, w) {
            Ok(par) => assert!(jh_closed_form(&par).is_err()),
            Err(e) => assert!(matches!(e, Error::Domain(_))),
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for _ in 0..9 {
            prod *= hgamma(qh, w).unwrap();
        }
        assert!((prod - r(1.0)).norm() < 1e-12);
    }

    fn br_point() -> HypParams8 {
        let u = [
            c(0.20, 0.05),
            c(0.22, -0.04),
            c(0.21, 0.03),
            c(0.19, -0.02),
            c(0.22, 0.06),
            c(1.75, -0.03),
            c(1.80, -0.05),
            c(0.21, 0.0),
        ];
        HypParams8::new(u, w14()).unwrap()
    }

    #[test]
    fn br_residual_is_small() {
        let res = hyp_residual(HypEquation::Br, &HypInput::Eight(br_point())).unwrap();
        assert!(res.norm() < 1e-7, "residual = {:.3e}", res.norm());
    }

    #[test]
    fn br2_residual_is_small() {
        let res = hyp_residual(HypEquation::Br2, &HypInput::Eight(br_point())).unwrap();
        assert!(res.norm() < 1e-7, "residual = {:.3e}", res.norm());
    }

    fn difeh_point() -> HypParams6 {
        let u = [
            c(0.20, 0.03),
            c(0.21, -0.05),
            c(0.19, 0.02),
            c(0.20, -0.01),
            c(1.75, 0.04),
            c(1.80, -0.03),
        ];
        HypParams6::new(u, w14()).unwrap()
    }

    #[test]
    fn difeh_residual_is_small() {
        let res = hyp_residual(HypEquation::Difeh, &HypInput::Six(difeh_point())).unwrap();
        assert!(res.norm() < 1e-7, "residual = {:.3e}", res.norm());
    }

    #[test]
    fn difeh2_residual_is_small() {
        let res = hyp_residual(HypEquation::Difeh2, &HypInput::Six(difeh_point())).unwrap();
        assert!(res.norm() < 1e-7, "residual = {:.3e}", res.norm());
    }

    #[test]
    fn difeh_equal_pair_is_zero_error() {
        let u = [
            c(0.20, 0.03),
            c(0.21, -0.05),
            c(0.19, 0.02),
            c(0.20, -0.01),
            c(1.75, 0.04),
            c(1.75, 0.04),
        ];
        let par = HypParams6::new(u, w14()).unwrap();
        let res = hyp_residual(HypEquation::Difeh, &HypInput::Six(par));
        assert!(matches!(res, Err(Error::Zero(_))));
    }

    fn secdif_point() -> MuNuParams {
        let mu = [c(0.30, 0.02), c(1.75, -0.04), c(1.80, 0.03), c(0.35, -0.01)];
        let nu = [c(0.15, 0.01), c(0.15, -0.02), c(0.15, 0.03), c(0.15, -0.02)];
        MuNuParams::new(mu, nu, w14()).unwrap()
    }

    #[test]
    fn secdif_residual_is_small() {
        let res = hyp_residual(HypEquation::Secdif, &HypInput::MuNu(secdif_point())).unwrap();
        assert!(res.norm() < 1e-7, "residual = {:.3e}", res.norm());
    }

    #[test]
    fn secdif2_residual_is_small() {
        let res = hyp_residual(HypEquation::Secdif2, &HypInput::MuNu(secdif_point())).unwrap();
        assert!(res.norm() < 1e-7, "residual = {:.3e}", res.norm());
    }

    #[test]
    fn secdif_residual_invariant_under_nu_relabeling() {
        let base = hyp_residual(HypEquation::Secdif, &HypInput::MuNu(secdif_point())).unwrap();
        let p = secdif_point();
        let mut nu = *p.nu();
        nu.swap(0, 2);
        nu.swap(1, 3);
        let relab = MuNuParams::new(*p.mu(), nu, p.w()).unwrap();
        let res = hyp_residual(HypEquation::Secdif, &HypInput::MuNu(relab)).unwrap();
        assert!((res - base).norm() < 1e-10);
    }

    #[test]
    fn residual_input_mismatch_is_domain_error() {
        let res = hyp_residual(HypEquation::Br, &HypInput::MuNu(secdif_point()));
        assert!(matches!(res, Err(Error::Domain(_))));
    }

    #[test]
    fn pt_params_balance_and_bad_modulus() {
        let alpha = [c(1.0, 0.2), c(0.9, -0.1), c(1.1, 0.15), c(0.95, -0.2)];
        let par = PTParams::new(alpha, c(1.05, 0.1), c(0.98, -0.12), r(0.8)).unwrap();
        let mn = par.munu().unwrap();
        let sum: Complex64 =
            mn.mu().iter().sum::<Complex64>() + mn.nu().iter().sum::<Complex64>();
        assert!((sum - 2.0 * par.w().q()).norm() < 1e-12 * 4.8);
        assert!(PTParams::new(alpha, c(1.05, 0.1), c(0.98, -0.12), r(-0.8)).is_err());
        assert!(PTParams::new(alpha, c(1.05, 0.1), c(0.98, -0.12), c(0.0, 1.0)).is_err());
    }

    #[test]
    fn pt_6j_matches_nine_gamma_product_on_locus() {
        // alpha_s' + alpha_3' - alpha_4' = Q/2 puts the derived mu-nu set
        // on the degeneration locus of jh_closed_form
        let b = r(0.8);
        let w = QuasiPeriods::from_modulus(b).unwrap();
        let qh = w.q() / 2.0;
        let (a1p, a2p, a3p, a4p) = (r(0.1), r(0.05), r(0.2), r(-0.1));
        let tp = r(0.15);
        let sp = qh - a3p + a4p;
        let alpha = [qh - a1p, qh - a2p, qh - a3p, a4p + qh];
        let alpha_s = sp + qh;
        let alpha_t = qh - tp;
        let par = PTParams::new(alpha, alpha_s, alpha_t, b).unwrap();
        let v = pt_6j(&par).unwrap();

        let cf = jh_closed_form(&par.munu().unwrap()).unwrap();
        let num = hgamma(alpha_s + alpha[1] - alpha[0], w).unwrap()
            * hgamma(alpha[0] + alpha_t - alpha[3], w).unwrap();
        let den = hgamma(alpha_t + alpha[1] - alpha[2], w).unwrap()
            * hgamma(alpha[2] + alpha_s - alpha[3], w).unwrap();
        let meas = hgamma(2.0 * alpha_t, w).unwrap()
            * hgamma(2.0 * (w.q() - alpha_t), w).unwrap();
        let want = num / den * meas * Complex64::i() * (w.w1() * w.w2()).sqrt() * cf;
        assert!(rel(v.value, want) < 1e-7, "rel = {:.3e}", rel(v.value, want));
    }
}
