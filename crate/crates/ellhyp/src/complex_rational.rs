//! Sum-integrals on the principal series of SL(2, C).
//!
//! Every function here combines a contour integral over a horizontal line
//! with a bilateral sum over a discrete label N running through Z or
//! Z + 1/2. The four-pair kernel `jcr`, the six-pair kernel `ecr`, and the
//! 6j-symbol built from them satisfy difference equations in the shift
//! step i (continuous) paired with 1 (discrete), and two symmetry
//! transformations whose sign bookkeeping is exact integer arithmetic.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::contour::{integrate_contour, ContourSpec, Evaluation};
use crate::error::{Error, Result};
use crate::gamma::{cgamma, DiscretePair};
use crate::halfint::HalfInt;
use crate::rational::{ccoef, dcoef, nonzero_factor, swap23, swap56, three_term};

/// Absolute slack on the balancing sum s + t = -4i.
const BALANCE_TOL: f64 = 4.0e-12;
/// Absolute slack on the product-locus constraints.
const LOCUS_TOL: f64 = 1e-10;
/// Relative tolerance of a standalone kernel evaluation.
const REL_TOL: f64 = 1e-7;
/// Tighter tolerance used inside residuals and identity checks, where
/// several kernel values are differenced against each other.
const RESIDUAL_TOL: f64 = 3e-8;
/// Per-term quadrature never runs looser than this, so the magnitudes fed
/// to the tail fit stay trustworthy.
const TERM_TOL_CAP: f64 = 1e-3;
/// Minimum admissible width of the contour strip.
const MIN_WINDOW: f64 = 1e-6;
/// Initial quadrature panel length along the line.
const PANEL_SPACING: f64 = 2.0;
/// Explicit truncation radius of a term integral: base plus slope times
/// the discrete label, past which the mapped tails take over.
const TRUNC_BASE: f64 = 40.0;
const TRUNC_SLOPE: f64 = 1.25;
/// Imaginary offset applied to all-real six-pair input, keeping the pole
/// lattice off the integration line (the unitary-regime default).
const REAL_INPUT_OFFSET: f64 = 0.2;
/// Bilateral sums never exceed this many terms.
const MAX_SUM_TERMS: usize = 100_000;
/// Terms per wing before the first tail fit is attempted.
const MIN_WING: i64 = 24;
/// Tail decay exponents at or below this are rejected as nonsummable.
const MIN_TAIL_EXPONENT: f64 = 1.2;

fn cg(x: Complex64, k: i64) -> Result<Complex64> {
    cgamma(DiscretePair::new(x, k))
}

fn cg_h(x: Complex64, k: HalfInt) -> Result<Complex64> {
    let n = k
        .as_int()
        .ok_or_else(|| Error::domain(format!("discrete label {k} is not an integer")))?;
    cg(x, n)
}

fn scaled(ev: Evaluation, factor: Complex64) -> Evaluation {
    Evaluation {
        value: ev.value * factor,
        abs_err: ev.abs_err * factor.norm(),
        nodes_used: ev.nodes_used,
        terms_used: ev.terms_used,
    }
}

// ---------------------------------------------------------------- summation

#[derive(Default)]
struct Kahan {
    s: Complex64,
    c: Complex64,
}

impl Kahan {
    fn add(&mut self, v: Complex64) {
        let y = v - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }
    fn value(&self) -> Complex64 {
        self.s
    }
}

enum WingFit {
    /// Not enough asymptotic data yet; keep summing.
    NotReady,
    /// Fitted decay exponent too small for a summable tail.
    Slow(f64),
    /// Tail completion and its error estimate.
    Done(Complex64, f64),
}

/// Fit the wing history (|N|, term) to C x^s e^{b/x} by least squares on the
/// phase-unwrapped logarithm and return the Euler-Maclaurin sum of the fit
/// over the lattice points beyond the last recorded one. The b/x term tracks
/// the slow drift of the local decay exponent; a bare power fit mistakes
/// that drift for a clean tail long before the asymptotic regime.
fn wing_fit(hist: &[(f64, Complex64)]) -> WingFit {
    if hist.len() < 16 {
        return WingFit::NotReady;
    }
    let w = (hist.len() / 2).max(16).min(hist.len());
    let seg = &hist[hist.len() - w..];
    let maxmag = seg.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    if maxmag == 0.0 {
        return WingFit::Done(Complex64::new(0.0, 0.0), 0.0);
    }
    let nz: Vec<(f64, Complex64)> = seg
        .iter()
        .copied()
        .filter(|(_, v)| v.norm() > maxmag * 1e-8)
        .collect();
    if nz.len() < 12 {
        return WingFit::NotReady;
    }
    let mut ys: Vec<Complex64> = Vec::with_capacity(nz.len());
    for &(_, t) in &nz {
        let l = t.ln();
        let im = match ys.last() {
            None => l.im,
            Some(p) => {
                let mut im = l.im;
                while im - p.im > PI {
                    im -= 2.0 * PI;
                }
                while im - p.im < -PI {
                    im += 2.0 * PI;
                }
                im
            }
        };
        ys.push(Complex64::new(l.re, im));
    }
    // Regressors 1, ln(x/xm), 1/x - 1/xm, centered to keep the normal
    // equations well scaled.
    let xm = nz[nz.len() / 2].0;
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [Complex64::new(0.0, 0.0); 3];
    for (&(x, _), &y) in nz.iter().zip(&ys) {
        let reg = [1.0, (x / xm).ln(), 1.0 / x - 1.0 / xm];
        for j in 0..3 {
            for k in 0..3 {
                m[j][k] += reg[j] * reg[k];
            }
            rhs[j] += reg[j] * y;
        }
    }
    let Some([q0, s, b]) = solve3(m, rhs) else {
        return WingFit::NotReady;
    };
    if s.re > -MIN_TAIL_EXPONENT {
        return WingFit::Slow(s.re);
    }
    let (x_last, t_last) = *nz.last().unwrap();
    let a = x_last + 1.0;
    if b.norm() > 0.8 * a {
        return WingFit::NotReady;
    }
    let model = |x: f64| (q0 + s * (x / xm).ln() + b * (1.0 / x - 1.0 / xm)).exp();
    let mut rss = 0.0;
    for &(x, t) in &nz {
        rss += (model(x) - t).norm_sqr();
    }
    let rms = (rss / nz.len() as f64).sqrt();
    if (model(x_last) - t_last).norm() > 0.5 * t_last.norm() {
        return WingFit::NotReady;
    }
    // Euler-Maclaurin sum of x^sigma over lattice points >= a, step 1.
    let em = |sigma: Complex64| -> Complex64 {
        let pow = |e: Complex64| (e * a.ln()).exp();
        -pow(sigma + 1.0) / (sigma + 1.0) + pow(sigma) / 2.0 - sigma * pow(sigma - 1.0) / 12.0
    };
    // Expand e^{b/x} in powers of 1/x; consecutive pieces shrink by at
    // least |b|/a < 0.8 so the k = 6 piece bounds the truncation.
    let c0 = (q0 - s * xm.ln() - b / xm).exp();
    let mut comp = Complex64::new(0.0, 0.0);
    let mut bk = Complex64::new(1.0, 0.0);
    for k in 0..6 {
        comp += c0 * bk * em(s - k as f64);
        bk *= b / (k + 1) as f64;
    }
    let trunc = (c0 * bk * em(s - 6.0)).norm();
    let err = rms * a / (-s.re - 1.0) + 2.0 * trunc + f64::EPSILON * comp.norm();
    WingFit::Done(comp, err)
}

/// Solve the 3x3 real symmetric system m x = rhs with complex right side.
fn solve3(m: [[f64; 3]; 3], rhs: [Complex64; 3]) -> Option<[Complex64; 3]> {
    let det2 = |a: usize, b: usize, c: usize, d: usize| m[a][b] * m[c][d] - m[a][d] * m[c][b];
    let det = m[0][0] * det2(1, 1, 2, 2) - m[0][1] * det2(1, 0, 2, 2) + m[0][2] * det2(1, 0, 2, 1);
    let scale = m[0][0].abs() * m[1][1].abs() * m[2][2].abs();
    if !(det.abs() > scale * 1e-14) {
        return None;
    }
    // Cramer with the adjugate of the symmetric matrix.
    let adj = [
        [det2(1, 1, 2, 2), -det2(0, 1, 2, 2), det2(0, 1, 1, 2)],
        [-det2(1, 0, 2, 2), det2(0, 0, 2, 2), -det2(0, 0, 1, 2)],
        [det2(1, 0, 2, 1), -det2(0, 0, 2, 1), det2(0, 0, 1, 1)],
    ];
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        for k in 0..3 {
            out[j] += adj[j][k] * rhs[k];
        }
        out[j] /= det;
    }
    Some(out)
}

/// Completion refitted from the first half of the wing, compared against the
/// recorded remainder plus the full-wing completion. The difference measures
/// extrapolation bias that the in-window fit residuals cannot see (tail
/// structure outside the fitted basis).
fn wing_drift(wing: &[(f64, Complex64)], comp_full: Complex64) -> Option<f64> {
    let kp = wing.len() / 2;
    if kp < 16 {
        return None;
    }
    match wing_fit(&wing[..kp]) {
        WingFit::Done(comp_pref, _) => {
            let mut dropped = Kahan::default();
            for &(_, v) in &wing[kp..] {
                dropped.add(v);
            }
            Some((dropped.value() + comp_full - comp_pref).norm())
        }
        _ => None,
    }
}

/// Sum term(N) over N in Z + eps, symmetrically outward, completing both
/// power-law tails from a fitted decay once the wings look asymptotic.
fn lattice_sum<F>(term: F, eps: HalfInt, tol: f64) -> Result<Evaluation>
where
    F: Fn(HalfInt) -> Result<Complex64>,
{
    if eps != HalfInt::ZERO && eps != HalfInt::HALF {
        return Err(Error::domain(format!("lattice offset must be 0 or 1/2, got {eps}")));
    }
    let mut acc = Kahan::default();
    let mut l1 = 0.0;
    let mut pos: Vec<(f64, Complex64)> = Vec::new();
    let mut neg: Vec<(f64, Complex64)> = Vec::new();
    let mut terms_used = 0usize;
    let mut k: i64 = 0;
    loop {
        let npos = eps + HalfInt::from_int(k);
        let members: &[HalfInt] = if npos == -npos { &[npos] } else { &[npos, -npos] };
        for &nn in members {
            if terms_used >= MAX_SUM_TERMS {
                return Err(Error::non_convergence(format!(
                    "lattice sum exhausted {MAX_SUM_TERMS} terms without meeting tolerance"
                )));
            }
            let v = term(nn)?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::pole_pinch(format!("summand not finite at N = {nn}")));
            }
            acc.add(v);
            l1 += v.norm();
            terms_used += 1;
            if nn > HalfInt::ZERO {
                pos.push((nn.to_f64(), v));
            } else if nn < HalfInt::ZERO {
                neg.push((-nn.to_f64(), v));
            }
        }
        if k >= MIN_WING && k % 8 == 0 {
            match (wing_fit(&pos), wing_fit(&neg)) {
                (WingFit::Done(cp, ep), WingFit::Done(cn, en)) => {
                    let total = acc.value() + cp + cn;
                    let scale = total.norm().max(1e-300);
                    let mut tail_err = ep + en;
                    if tail_err <= tol * scale {
                        if let (Some(dp), Some(dn)) = (wing_drift(&pos, cp), wing_drift(&neg, cn))
                        {
                            tail_err += 2.0 * (dp + dn);
                            if tail_err <= tol * scale {
                                return Ok(Evaluation {
                                    value: total,
                                    abs_err: tail_err + 4.0 * f64::EPSILON * l1,
                                    nodes_used: 0,
                                    terms_used,
                                });
                            }
                        }
                    }
                }
                (WingFit::Slow(a), _) | (_, WingFit::Slow(a)) if k >= 512 => {
                    return Err(Error::non_convergence(format!(
                        "tail decay exponent {a:.3} at |N| = {} is at or below {MIN_TAIL_EXPONENT}",
                        npos.to_f64().abs()
                    )));
                }
                _ => {}
            }
        }
        k += 1;
    }
}

/// Integrate f over the horizontal line Im y = eta with initial panels
/// every PANEL_SPACING out to trunc, mapped tails beyond.
fn strip_integral<F>(f: F, eta: f64, trunc: f64, tol: f64) -> Result<Evaluation>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let n = (2.0 * trunc / PANEL_SPACING).ceil() as usize;
    let mut bps = Vec::with_capacity(n);
    for k in 1..n {
        bps.push(-trunc + k as f64 * PANEL_SPACING);
    }
    let budget = (n + 4) * 15 * 8;
    let spec = ContourSpec::line(
        Complex64::new(0.0, eta),
        Complex64::new(1.0, 0.0),
        trunc,
        budget,
    )?
    .with_breakpoints(&bps);
    integrate_contour(f, &spec, tol)
}

// ------------------------------------------------------------- domain types

/// Four spectral pairs (s_a, n_a) against four (t_a, m_a), balanced so the
/// eight-factor integrand decays like |y|^{-4} along the line and like
/// N^{-4} across the lattice.
#[derive(Debug, Clone, Copy)]
pub struct CRParamSet {
    s: [Complex64; 4],
    n: [HalfInt; 4],
    t: [Complex64; 4],
    m: [HalfInt; 4],
    eps: HalfInt,
}

fn check_eps(eps: HalfInt) -> Result<()> {
    if eps != HalfInt::ZERO && eps != HalfInt::HALF {
        return Err(Error::domain(format!("lattice offset must be 0 or 1/2, got {eps}")));
    }
    Ok(())
}

impl CRParamSet {
    /// The discrete labels must lie in Z + eps so that every gamma factor
    /// carries an integer label once N runs through Z + eps; the sums must
    /// satisfy sum(n + m) = 0 and sum(s + t) = -4i.
    pub fn new(
        s: [Complex64; 4],
        n: [HalfInt; 4],
        t: [Complex64; 4],
        m: [HalfInt; 4],
        eps: HalfInt,
    ) -> Result<Self> {
        check_eps(eps)?;
        for a in 0..4 {
            if !(n[a] - eps).is_int() || !(m[a] - eps).is_int() {
                return Err(Error::domain(format!(
                    "labels n_{} = {}, m_{} = {} must lie in Z + {eps}",
                    a + 1,
                    n[a],
                    a + 1,
                    m[a]
                )));
            }
        }
        let dsum = n.iter().chain(m.iter()).fold(HalfInt::ZERO, |acc, &v| acc + v);
        if dsum != HalfInt::ZERO {
            return Err(Error::domain(format!("labels must sum to zero, got {dsum}")));
        }
        let csum: Complex64 = s.iter().chain(t.iter()).sum();
        if (csum + Complex64::new(0.0, 4.0)).norm() > BALANCE_TOL {
            return Err(Error::domain(format!(
                "spectral parameters must sum to -4i, got {csum}"
            )));
        }
        Ok(CRParamSet { s, n, t, m, eps })
    }

    pub fn s(&self) -> [Complex64; 4] {
        self.s
    }
    pub fn n(&self) -> [HalfInt; 4] {
        self.n
    }
    pub fn t(&self) -> [Complex64; 4] {
        self.t
    }
    pub fn m(&self) -> [HalfInt; 4] {
        self.m
    }
    pub fn eps(&self) -> HalfInt {
        self.eps
    }

    /// Strip of heights free of the gamma pole lattices: poles from the
    /// s-side sit at or below max Im s_a, from the t-side at or above
    /// -max Im t_a.
    fn window(&self) -> (f64, f64) {
        let lo = self.s.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        let hi = -self.t.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    fn contour_height(&self) -> Result<f64> {
        let (lo, hi) = self.window();
        if !(hi - lo > MIN_WINDOW) {
            return Err(Error::pole_pinch(format!(
                "pole lattices pinch the contour strip ({lo:.6}, {hi:.6})"
            )));
        }
        Ok(0.5 * (lo + hi))
    }

    /// Integer labels after absorbing eps into the summation variable:
    /// summing over Z + eps with labels (n, m) equals summing over Z with
    /// labels (n - eps, m + eps).
    fn reduced(&self) -> ([i64; 4], [i64; 4]) {
        let mut n = [0i64; 4];
        let mut m = [0i64; 4];
        for a in 0..4 {
            n[a] = (self.n[a] - self.eps).as_int().expect("parity checked at construction");
            m[a] = (self.m[a] + self.eps).as_int().expect("parity checked at construction");
        }
        (n, m)
    }

    /// Shift slots 2 and 3 of the s-side; the two shifts cancel in every
    /// balancing sum.
    fn shifted23(&self, ds2: Complex64, dn2: i64, ds3: Complex64, dn3: i64) -> Result<Self> {
        let mut s = self.s;
        let mut n = self.n;
        s[1] += ds2;
        n[1] += HalfInt::from_int(dn2);
        s[2] += ds3;
        n[2] += HalfInt::from_int(dn3);
        CRParamSet::new(s, n, self.t, self.m, self.eps)
    }

    /// beta_k = (i s_k - n_k)/2 and gamma_k = (i t_k - m_k)/2.
    fn beta_gamma(&self) -> ([Complex64; 4], [Complex64; 4]) {
        let mut be = [Complex64::new(0.0, 0.0); 4];
        let mut ga = be;
        for a in 0..4 {
            be[a] = (Complex64::i() * self.s[a] - self.n[a].to_f64()) / 2.0;
            ga[a] = (Complex64::i() * self.t[a] - self.m[a].to_f64()) / 2.0;
        }
        (be, ga)
    }

    /// The mirror parametrization beta_k = (i s_k + n_k)/2, used by the
    /// second difference equation.
    fn beta_gamma_alt(&self) -> ([Complex64; 4], [Complex64; 4]) {
        let mut be = [Complex64::new(0.0, 0.0); 4];
        let mut ga = be;
        for a in 0..4 {
            be[a] = (Complex64::i() * self.s[a] + self.n[a].to_f64()) / 2.0;
            ga[a] = (Complex64::i() * self.t[a] + self.m[a].to_f64()) / 2.0;
        }
        (be, ga)
    }
}

/// Six pairs (p_k, l_k) with a lattice offset; no balancing is imposed,
/// so the decay of the sum depends on sum Im p_k and is checked at run
/// time by the tail fit.
#[derive(Debug, Clone, Copy)]
pub struct ECRParamSet {
    p: [Complex64; 6],
    l: [HalfInt; 6],
    eps: HalfInt,
}

impl ECRParamSet {
    /// All-real p is nudged by -0.2i per entry, the unitary-regime
    /// default that keeps the pole lattice off the real line.
    pub fn new(p: [Complex64; 6], l: [HalfInt; 6], eps: HalfInt) -> Result<Self> {
        check_eps(eps)?;
        for k in 0..6 {
            if !(l[k] - eps).is_int() {
                return Err(Error::domain(format!(
                    "label l_{} = {} must lie in Z + {eps}",
                    k + 1,
                    l[k]
                )));
            }
        }
        let mut p = p;
        if p.iter().all(|z| z.im == 0.0) {
            for z in &mut p {
                *z -= Complex64::new(0.0, REAL_INPUT_OFFSET);
            }
        }
        Ok(ECRParamSet { p, l, eps })
    }

    pub fn p(&self) -> [Complex64; 6] {
        self.p
    }
    pub fn l(&self) -> [HalfInt; 6] {
        self.l
    }
    pub fn eps(&self) -> HalfInt {
        self.eps
    }

    /// The integrand carries both cg(p + y) and cg(p - y), so the free
    /// strip is symmetric about the real line.
    fn check_window(&self) -> Result<()> {
        let lo = self.p.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        if !(-2.0 * lo > MIN_WINDOW) {
            return Err(Error::pole_pinch(format!(
                "pole lattices pinch the contour strip ({lo:.6}, {:.6})",
                -lo
            )));
        }
        Ok(())
    }

    fn shifted56(&self, dp5: Complex64, dl5: i64, dp6: Complex64, dl6: i64) -> Result<Self> {
        let mut p = self.p;
        let mut l = self.l;
        p[4] += dp5;
        l[4] += HalfInt::from_int(dl5);
        p[5] += dp6;
        l[5] += HalfInt::from_int(dl6);
        ECRParamSet::new(p, l, self.eps)
    }

    /// alpha_k = (-l_k + i p_k)/2.
    fn alphas(&self) -> [Complex64; 6] {
        let mut al = [Complex64::new(0.0, 0.0); 6];
        for k in 0..6 {
            al[k] = (Complex64::i() * self.p[k] - self.l[k].to_f64()) / 2.0;
        }
        al
    }

    /// The mirror parametrization alpha_k = (l_k + i p_k)/2.
    fn alphas_alt(&self) -> [Complex64; 6] {
        let mut al = [Complex64::new(0.0, 0.0); 6];
        for k in 0..6 {
            al[k] = (Complex64::i() * self.p[k] + self.l[k].to_f64()) / 2.0;
        }
        al
    }
}

// ------------------------------------------------------------------ kernels

fn jcr_term(
    s: &[Complex64; 4],
    n: &[i64; 4],
    t: &[Complex64; 4],
    m: &[i64; 4],
    eta: f64,
    nn: i64,
    tol: f64,
) -> Result<Evaluation> {
    let na = (nn as f64).abs();
    strip_integral(
        |y| {
            let mut f = Complex64::new(1.0, 0.0);
            for a in 0..4 {
                f *= cg(s[a] - y, n[a] - nn)?;
                f *= cg(t[a] + y, m[a] + nn)?;
            }
            Ok(f)
        },
        eta,
        TRUNC_BASE + TRUNC_SLOPE * na,
        tol,
    )
}

/// Four-pair sum-integral, normalized by 1/(4 pi). The contour runs along
/// the midline of the pole-free strip; the lattice offset eps is absorbed
/// into the labels so the sum always runs over Z.
pub fn jcr(par: &CRParamSet) -> Result<Evaluation> {
    jcr_tol(par, REL_TOL)
}

pub(crate) fn jcr_tol(par: &CRParamSet, tol: f64) -> Result<Evaluation> {
    let eta = par.contour_height()?;
    let (n, m) = par.reduced();
    let s = par.s;
    let t = par.t;
    let nodes = Cell::new(0usize);
    let quad_err = Cell::new(0.0f64);
    let sum = lattice_sum(
        |nn| {
            let nv = nn.as_int().expect("reduced sum runs over Z");
            let na = (nv as f64).abs();
            let tol_n = (tol * 0.25 * (1.0 + na * na)).min(TERM_TOL_CAP);
            let ev = jcr_term(&s, &n, &t, &m, eta, nv, tol_n)?;
            nodes.set(nodes.get() + ev.nodes_used);
            quad_err.set(quad_err.get() + ev.abs_err);
            Ok(ev.value)
        },
        HalfInt::ZERO,
        tol,
    )?;
    let norm = 4.0 * PI;
    Ok(Evaluation {
        value: sum.value / norm,
        abs_err: (sum.abs_err + quad_err.get()) / norm,
        nodes_used: nodes.get(),
        terms_used: sum.terms_used,
    })
}

fn ecr_term(
    p: &[Complex64; 6],
    l: &[HalfInt; 6],
    nn: HalfInt,
    tol: f64,
) -> Result<Evaluation> {
    let nf = nn.to_f64();
    let mut lp = [0i64; 6];
    let mut lm = [0i64; 6];
    for k in 0..6 {
        lp[k] = (l[k] + nn)
            .as_int()
            .ok_or_else(|| Error::domain(format!("label {} + {nn} is not an integer", l[k])))?;
        lm[k] = (l[k] - nn)
            .as_int()
            .ok_or_else(|| Error::domain(format!("label {} - {nn} is not an integer", l[k])))?;
    }
    let p = *p;
    strip_integral(
        |y| {
            let mut f = y * y + nf * nf;
            for k in 0..6 {
                f *= cg(p[k] + y, lp[k])?;
                f *= cg(p[k] - y, lm[k])?;
            }
            Ok(f)
        },
        0.0,
        TRUNC_BASE + TRUNC_SLOPE * nf.abs(),
        tol,
    )
}

/// Six-pair sum-integral with the (y^2 + N^2) weight, normalized by
/// 1/(8 pi). The lattice offset is not removable here: both branches sum
/// over their own lattice, and the labels must match its parity.
pub fn ecr(par: &ECRParamSet) -> Result<Evaluation> {
    ecr_tol(par, REL_TOL)
}

pub(crate) fn ecr_tol(par: &ECRParamSet, tol: f64) -> Result<Evaluation> {
    par.check_window()?;
    let p = par.p;
    let l = par.l;
    let nodes = Cell::new(0usize);
    let quad_err = Cell::new(0.0f64);
    let sum = lattice_sum(
        |nn| {
            let na = nn.to_f64().abs();
            let tol_n = (tol * 0.25 * (1.0 + na * na)).min(TERM_TOL_CAP);
            let ev = ecr_term(&p, &l, nn, tol_n)?;
            nodes.set(nodes.get() + ev.nodes_used);
            quad_err.set(quad_err.get() + ev.abs_err);
            Ok(ev.value)
        },
        par.eps,
        tol,
    )?;
    let norm = 8.0 * PI;
    Ok(Evaluation {
        value: sum.value / norm,
        abs_err: (sum.abs_err + quad_err.get()) / norm,
        nodes_used: nodes.get(),
        terms_used: sum.terms_used,
    })
}

// ---------------------------------------------------------------- 6j symbol

/// Spectral data of the 6j-symbol: four outer representations
/// (sigma_j, N_j) and two inner ones (rho_j, M_j). The derived contour
/// tables R, U and label tables S, T, A must come out integer, which
/// constrains the parities of N and M.
#[derive(Debug, Clone, Copy)]
pub struct SixJComplexParams {
    sigma: [Complex64; 4],
    n: [i64; 4],
    rho: [Complex64; 2],
    m: [i64; 2],
}

impl SixJComplexParams {
    pub fn new(
        sigma: [Complex64; 4],
        n: [i64; 4],
        rho: [Complex64; 2],
        m: [i64; 2],
    ) -> Result<Self> {
        let par = SixJComplexParams { sigma, n, rho, m };
        for (name, tbl) in [
            ("S", par.s_raw()),
            ("T", par.t_raw()),
            ("A", par.a_raw()),
        ] {
            for (j, v) in tbl.iter().enumerate() {
                if !v.is_int() {
                    return Err(Error::domain(format!(
                        "derived label {name}_{} = {v} is not an integer; N, M parities are inconsistent",
                        j + 1
                    )));
                }
            }
        }
        Ok(par)
    }

    pub fn sigma(&self) -> [Complex64; 4] {
        self.sigma
    }

    pub fn n_labels(&self) -> [i64; 4] {
        self.n
    }

    pub fn rho(&self) -> [Complex64; 2] {
        self.rho
    }

    pub fn m_labels(&self) -> [i64; 2] {
        self.m
    }

    fn r_table(&self) -> [Complex64; 4] {
        let [s1, s2, s3, s4] = self.sigma;
        let r2 = self.rho[1];
        let i = Complex64::i();
        [-s1 + s2 - r2 - i, s1 + s2 - r2 - i, -s3 - s4 - r2 - i, s3 - s4 - r2 - i]
    }

    fn u_table(&self) -> [Complex64; 4] {
        let [_, s2, _, s4] = self.sigma;
        let [r1, r2] = self.rho;
        [-r1 - s2 + s4 + r2, r1 - s2 + s4 + r2, Complex64::new(0.0, 0.0), 2.0 * r2]
    }

    fn s_raw(&self) -> [HalfInt; 4] {
        let [n1, n2, n3, n4] = self.n;
        let m2 = self.m[1];
        [
            HalfInt::from_twice(-n1 + n2 - m2),
            HalfInt::from_twice(n1 + n2 - m2),
            HalfInt::from_twice(-(n3 + n4 + m2)),
            HalfInt::from_twice(n3 - n4 - m2),
        ]
    }

    fn t_raw(&self) -> [HalfInt; 4] {
        let [_, n2, _, n4] = self.n;
        let [m1, m2] = self.m;
        [
            HalfInt::from_twice(-m1 - n2 + n4 + m2),
            HalfInt::from_twice(m1 - n2 + n4 + m2),
            HalfInt::ZERO,
            HalfInt::from_int(m2),
        ]
    }

    fn a_raw(&self) -> [HalfInt; 4] {
        let [n1, n2, n3, n4] = self.n;
        let [m1, m2] = self.m;
        [
            HalfInt::from_twice(n1 - n2 + m2),
            HalfInt::from_twice(n2 - n3 + m1),
            HalfInt::from_twice(-n3 - n4 + m2),
            HalfInt::from_twice(n1 + n4 + m1),
        ]
    }

    pub(crate) fn a_ints(&self) -> [i64; 4] {
        let raw = self.a_raw();
        [0, 1, 2, 3].map(|j| raw[j].as_int().expect("checked at construction"))
    }

    pub(crate) fn s_ints(&self) -> [i64; 4] {
        let raw = self.s_raw();
        [0, 1, 2, 3].map(|j| raw[j].as_int().expect("checked at construction"))
    }

    pub(crate) fn t_ints(&self) -> [i64; 4] {
        let raw = self.t_raw();
        [0, 1, 2, 3].map(|j| raw[j].as_int().expect("checked at construction"))
    }

    /// The four-pair parameter set (R, S; U, T) whose kernel carries the
    /// 6j-symbol. Balanced identically: sum(R + U) = -4i, sum(S + T) = 0.
    pub fn contour_params(&self) -> Result<CRParamSet> {
        CRParamSet::new(self.r_table(), self.s_raw(), self.u_table(), self.t_raw(), HalfInt::ZERO)
    }

    fn gamma_ratio(&self) -> Result<Complex64> {
        let [s1, s2, s3, s4] = self.sigma;
        let [r1, r2] = self.rho;
        let a = self.a_ints();
        let i = Complex64::i();
        let num = cg(s1 - s2 + r2 - i, a[0])? * cg(s2 - s3 + r1 - i, a[1])?;
        let den = nonzero_factor(
            cg(-s3 - s4 + r2 - i, a[2])? * cg(s1 + s4 + r1 - i, a[3])?,
            "denominator gamma pair of the 6j prefactor",
        )?;
        Ok(num / den)
    }

    /// Exponent of the parity sign attached to the kernel, an integer by
    /// construction.
    pub fn sign_exponent(&self) -> i64 {
        self.m[1] - self.n[1] + self.n[3]
    }

    /// F = A1^2 - A2^2 - A3^2 + A4^2 + sum(S^2 + T^2) + 2(A4 - A2); the
    /// phase exponent of the modular-double limit relation.
    pub fn limit_phase_exponent(&self) -> i64 {
        let a = self.a_ints();
        let s = self.s_ints();
        let t = self.t_ints();
        let squares: i64 = s.iter().chain(t.iter()).map(|v| v * v).sum();
        a[0] * a[0] - a[1] * a[1] - a[2] * a[2] + a[3] * a[3] + squares + 2 * (a[3] - a[1])
    }
}

/// The 6j-symbol kernel: pi^3 times the gamma-ratio prefactor and parity
/// sign times the four-pair sum-integral at (R, S; U, T).
pub fn complex_6j(par: &SixJComplexParams) -> Result<Evaluation> {
    let cr = par.contour_params()?;
    let pref = par.gamma_ratio()?;
    let sign = if par.sign_exponent() % 2 == 0 { 1.0 } else { -1.0 };
    let ev = jcr(&cr)?;
    Ok(scaled(ev, PI.powi(3) * sign * pref))
}

// ------------------------------------------------------------ product locus

fn locus_check(par: &CRParamSet) -> Result<()> {
    if par.n[3] + par.m[3] != HalfInt::ZERO {
        return Err(Error::domain(format!(
            "product locus needs n_4 + m_4 = 0, got {}",
            par.n[3] + par.m[3]
        )));
    }
    let s4t4 = par.s[3] + par.t[3];
    if (s4t4 + Complex64::new(0.0, 2.0)).norm() > LOCUS_TOL {
        return Err(Error::domain(format!(
            "product locus needs s_4 + t_4 = -2i, got {s4t4}"
        )));
    }
    let dsum = (0..3).fold(HalfInt::ZERO, |acc, a| acc + par.n[a] + par.m[a]);
    if dsum != HalfInt::ZERO {
        return Err(Error::domain(format!(
            "product locus needs the first three label pairs to sum to zero, got {dsum}"
        )));
    }
    let csum: Complex64 = (0..3).map(|a| par.s[a] + par.t[a]).sum();
    if (csum + Complex64::new(0.0, 2.0)).norm() > LOCUS_TOL {
        return Err(Error::domain(format!(
            "product locus needs the first three spectral pairs to sum to -2i, got {csum}"
        )));
    }
    Ok(())
}

/// Nine-gamma closed form of the four-pair kernel on the degenerate locus
/// where the fourth pair carries the whole balance.
pub fn f_product(par: &CRParamSet) -> Result<Complex64> {
    locus_check(par)?;
    let mut f = Complex64::new(1.0, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            f *= cg_h(par.s[a] + par.t[b], par.n[a] + par.m[b])?;
        }
    }
    Ok(f)
}

// ------------------------------------------------------- difference equations

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CREquation {
    /// Four-pair equation in the first parametrization.
    DifJmn,
    /// Four-pair equation in the mirror parametrization.
    DifJmn2,
    /// Six-pair equation in the first parametrization.
    EcrEq1,
    /// Six-pair equation in the mirror parametrization.
    EcrEq2,
    /// Difference equation of the closed product form on its locus.
    FEq,
}

#[derive(Debug, Clone, Copy)]
pub enum CRInput {
    FourPair(CRParamSet),
    SixPair(ECRParamSet),
}

/// Four-pair kernel normalized by the two external gammas that make the
/// difference equation three-term.
fn script_u(par: &CRParamSet, tol: f64) -> Result<Complex64> {
    let v = jcr_tol(par, tol)?.value;
    let g1 = nonzero_factor(
        cg_h(par.s[1] - par.s[3], par.n[1] - par.n[3])?,
        "normalizing gamma of slots 2, 4",
    )?;
    let g2 = nonzero_factor(
        cg_h(par.s[2] - par.s[3], par.n[2] - par.n[3])?,
        "normalizing gamma of slots 3, 4",
    )?;
    Ok(v / (g1 * g2))
}

fn difjmn_residual(par: &CRParamSet, mirror: bool) -> Result<Complex64> {
    let (be, ga) = if mirror { par.beta_gamma_alt() } else { par.beta_gamma() };
    let a_plus = dcoef(be, ga)?;
    let a_minus = dcoef(swap23(be), ga)?;
    let dn = if mirror { 1 } else { -1 };
    let i = Complex64::i();
    let pa = par.shifted23(-i, dn, i, -dn)?;
    let pb = par.shifted23(i, -dn, -i, dn)?;
    let (f0, (fp, fm)) = rayon::join(
        || script_u(par, RESIDUAL_TOL),
        || {
            rayon::join(
                || script_u(&pa, RESIDUAL_TOL),
                || script_u(&pb, RESIDUAL_TOL),
            )
        },
    );
    Ok(three_term(a_plus, a_minus, f0?, fp?, fm?))
}

fn ecr_eq_residual(par: &ECRParamSet, mirror: bool) -> Result<Complex64> {
    let al = if mirror { par.alphas_alt() } else { par.alphas() };
    let a_plus = ccoef(al)?;
    let a_minus = ccoef(swap56(al))?;
    let dl = if mirror { 1 } else { -1 };
    let i = Complex64::i();
    let pa = par.shifted56(-i, dl, i, -dl)?;
    let pb = par.shifted56(i, -dl, -i, dl)?;
    let ev = |p: &ECRParamSet| -> Result<Complex64> { Ok(ecr_tol(p, RESIDUAL_TOL)?.value) };
    let (f0, (fp, fm)) = rayon::join(
        || ev(par),
        || rayon::join(|| ev(&pa), || ev(&pb)),
    );
    Ok(three_term(a_plus, a_minus, f0?, fp?, fm?))
}

fn vcoef(b2: Complex64, b3: Complex64, ga: &[Complex64; 4]) -> Result<Complex64> {
    let mut num = Complex64::new(1.0, 0.0);
    for g in ga.iter().take(3) {
        num *= b3 + g - 1.0;
    }
    let den = nonzero_factor(b3 - b2 - 1.0, "beta_3 - beta_2 - 1")?
        * nonzero_factor(b2 - b3, "beta_2 - beta_3")?;
    Ok(num / den)
}

fn f_eq_residual(par: &CRParamSet) -> Result<Complex64> {
    let (be, ga) = par.beta_gamma();
    let a_plus = vcoef(be[1], be[2], &ga)?;
    let a_minus = vcoef(be[2], be[1], &ga)?;
    let i = Complex64::i();
    let f0 = f_product(par)?;
    let fp = f_product(&par.shifted23(-i, -1, i, 1)?)?;
    let fm = f_product(&par.shifted23(i, 1, -i, -1)?)?;
    Ok(three_term(a_plus, a_minus, f0, fp, fm))
}

/// Normalized residual of the named three-term difference equation. The
/// equation coefficients are evaluated first, so degenerate parameters
/// surface as ZeroError before any integration runs.
pub fn cr_residual(eq: CREquation, par: &CRInput) -> Result<Complex64> {
    match (eq, par) {
        (CREquation::DifJmn, CRInput::FourPair(p)) => difjmn_residual(p, false),
        (CREquation::DifJmn2, CRInput::FourPair(p)) => difjmn_residual(p, true),
        (CREquation::FEq, CRInput::FourPair(p)) => f_eq_residual(p),
        (CREquation::EcrEq1, CRInput::SixPair(p)) => ecr_eq_residual(p, false),
        (CREquation::EcrEq2, CRInput::SixPair(p)) => ecr_eq_residual(p, true),
        (CREquation::EcrEq1 | CREquation::EcrEq2, CRInput::FourPair(_)) => {
            Err(Error::domain("this equation needs the six-pair input"))
        }
        _ => Err(Error::domain("this equation needs the four-pair input")),
    }
}

// ------------------------------------------------------------------ identities

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CRIdentity {
    /// Reflection of the four-pair kernel onto itself at shifted
    /// arguments, with an eight-gamma prefactor.
    Ide1i,
    /// Four-pair kernel expressed through the six-pair kernel with a
    /// six-gamma prefactor.
    Je,
}

/// Parity sign (-1)^A from the exponent in quarter units; errors when the
/// exponent is not an integer, which signals inconsistent label parities.
fn phase_sign(a4: i64) -> Result<f64> {
    if a4 % 4 != 0 {
        return Err(Error::domain(format!(
            "sign exponent {} is not an integer; label parities are inconsistent",
            a4 as f64 / 4.0
        )));
    }
    Ok(if (a4 / 4) % 2 == 0 { 1.0 } else { -1.0 })
}

fn ide1i_check(par: &CRParamSet) -> Result<f64> {
    let s = par.s;
    let n = par.n;
    let t = par.t;
    let m = par.m;
    let ksum = n[0] + n[1] + m[0] + m[1];
    debug_assert!(ksum.twice() % 2 == 0, "labels share the lattice parity");
    let kk = HalfInt::from_twice(-ksum.twice() / 2);
    let yy = -(s[0] + s[1] + t[0] + t[1] + Complex64::new(0.0, 2.0)) / 2.0;
    let lam = if (par.eps + kk).is_int() { HalfInt::ZERO } else { HalfInt::HALF };
    let tn: Vec<i64> = n.iter().map(|v| v.twice()).collect();
    let tm: Vec<i64> = m.iter().map(|v| v.twice()).collect();
    let msum: i64 = tm.iter().sum();
    let a4 = (tn[0] + tn[1]) * (tm[0] + tm[1])
        + (tn[2] + tn[3]) * (tm[2] + tm[3])
        + 2 * (par.eps.twice() + lam.twice()) * (2 + msum);
    let mut pref = Complex64::new(phase_sign(a4)?, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            pref *= cg_h(s[j] + t[k], n[j] + m[k])?;
        }
    }
    for j in 2..4 {
        for k in 2..4 {
            pref *= cg_h(s[j] + t[k], n[j] + m[k])?;
        }
    }
    let flip = |v: [Complex64; 4], d: Complex64| [v[0] + d, v[1] + d, v[2] - d, v[3] - d];
    let flip_n = |v: [HalfInt; 4], d: HalfInt| [v[0] + d, v[1] + d, v[2] - d, v[3] - d];
    let par2 = CRParamSet::new(flip(s, yy), flip_n(n, kk), flip(t, yy), flip_n(m, kk), lam)?;
    let (lhs, rhs) = rayon::join(
        || jcr_tol(par, RESIDUAL_TOL),
        || jcr_tol(&par2, RESIDUAL_TOL),
    );
    let lhs = lhs?.value;
    let rhs = pref * rhs?.value;
    Ok((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300))
}

fn je_check(par: &CRParamSet) -> Result<f64> {
    let s = par.s;
    let n = par.n;
    let t = par.t;
    let m = par.m;
    let lsum = m[3] + n[0] + n[1] + n[2];
    debug_assert!(lsum.twice() % 2 == 0, "labels share the lattice parity");
    let ll = HalfInt::from_twice(-lsum.twice() / 2);
    let zz = -(t[3] + Complex64::new(0.0, 2.0) + s[0] + s[1] + s[2]) / 2.0;
    let lam = if (par.eps + ll).is_int() { HalfInt::ZERO } else { HalfInt::HALF };
    let tl = ll.twice();
    let tn_sum: i64 = n.iter().map(|v| v.twice()).sum();
    let tm_sum: i64 = m.iter().map(|v| v.twice()).sum();
    let a4 = 2 * tl * tl - 2 * tn_sum - 2 * n[3].twice() * m[3].twice() - 2 * lam.twice()
        + 2 * par.eps.twice() * (2 + tm_sum);
    let mut pref = Complex64::new(phase_sign(a4)?, 0.0);
    for a in 0..3 {
        pref *= cg_h(s[a] + t[3], n[a] + m[3])?;
        pref *= cg_h(t[a] + s[3], m[a] + n[3])?;
    }
    let p = [
        s[0] + zz,
        s[1] + zz,
        s[2] + zz,
        t[0] - zz,
        t[1] - zz,
        t[2] - zz,
    ];
    let l = [
        n[0] + ll,
        n[1] + ll,
        n[2] + ll,
        m[0] - ll,
        m[1] - ll,
        m[2] - ll,
    ];
    let epar = ECRParamSet::new(p, l, lam)?;
    let (lhs, rhs) = rayon::join(
        || jcr_tol(par, RESIDUAL_TOL),
        || ecr_tol(&epar, RESIDUAL_TOL),
    );
    let lhs = lhs?.value;
    let rhs = pref * rhs?.value;
    Ok((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300))
}

/// Relative deviation |LHS - RHS| / max(|LHS|, |RHS|) of the named
/// symmetry transformation. The discrete half of the shift is derived
/// from the labels, the lattice offset of the right side with it.
pub fn check_cr_identity(id: CRIdentity, par: &CRParamSet) -> Result<f64> {
    match id {
        CRIdentity::Ide1i => ide1i_check(par),
        CRIdentity::Je => je_check(par),
    }
}

// ------------------------------------------------------- polynomial identity

fn prod3(g1: Complex64, g2: Complex64, g3: Complex64, off: Complex64) -> Complex64 {
    (g1 + off) * (g2 + off) * (g3 + off)
}

fn eqdif_terms(
    b2: Complex64,
    b3: Complex64,
    b4: Complex64,
    g1: Complex64,
    g2: Complex64,
    g3: Complex64,
) -> [Complex64; 5] {
    let one = Complex64::new(1.0, 0.0);
    let p2 = prod3(g1, g2, g3, b2);
    let p3 = prod3(g1, g2, g3, b3);
    let p4 = prod3(g1, g2, g3, b4);
    let p2m = prod3(g1, g2, g3, b2 - one);
    let p3m = prod3(g1, g2, g3, b3 - one);
    let c1 = (b2 - b4 - one) * (b3 - b4) * (b3 - b2 + one);
    let c2 = (b3 - b4 - one) * (b2 - b4) * (b3 - b2 - one);
    [
        c1 * p2 * (b3 - b4 - one),
        c1 * p3m * (b4 - b2),
        c2 * p3 * (b2 - b4 - one),
        c2 * p2m * (b4 - b3),
        -(b2 - b3) * (b3 - b2 + one) * (b3 - b2 - one) * p4,
    ]
}

fn eqdif_reduced_terms(
    b2: Complex64,
    b3: Complex64,
    g1: Complex64,
    g2: Complex64,
    g3: Complex64,
) -> [Complex64; 5] {
    let one = Complex64::new(1.0, 0.0);
    let p2 = prod3(g1, g2, g3, b2);
    let p3 = prod3(g1, g2, g3, b3);
    let p2m = prod3(g1, g2, g3, b2 - one);
    let p3m = prod3(g1, g2, g3, b3 - one);
    [
        (b3 - b2 + one) * p2,
        -(b3 - b2 + one) * p3m,
        (b3 - b2 - one) * p3,
        -(b3 - b2 - one) * p2m,
        (b3 - b2 + one) * (b3 - b2 - one) * (b2 - b3),
    ]
}

/// Left side of the cubic-product identity; vanishes identically, so the
/// returned value measures floating-point cancellation only.
pub fn eqdif_lhs(
    b2: Complex64,
    b3: Complex64,
    b4: Complex64,
    g1: Complex64,
    g2: Complex64,
    g3: Complex64,
) -> Complex64 {
    eqdif_terms(b2, b3, b4, g1, g2, g3).iter().sum()
}

/// The limit form of the identity with the fourth parameter removed.
pub fn eqdif_reduced_lhs(
    b2: Complex64,
    b3: Complex64,
    g1: Complex64,
    g2: Complex64,
    g3: Complex64,
) -> Complex64 {
    eqdif_reduced_terms(b2, b3, g1, g2, g3).iter().sum()
}

fn max_term(terms: &[Complex64; 5]) -> f64 {
    terms.iter().map(|t| t.norm()).fold(0.0, f64::max).max(1e-300)
}

/// |LHS| of the cubic-product identity, normalized by its largest term.
pub fn eqdif_residual(
    b2: Complex64,
    b3: Complex64,
    b4: Complex64,
    g1: Complex64,
    g2: Complex64,
    g3: Complex64,
) -> f64 {
    let terms = eqdif_terms(b2, b3, b4, g1, g2, g3);
    let lhs: Complex64 = terms.iter().sum();
    lhs.norm() / max_term(&terms)
}

/// |LHS| of the limit form, normalized by its largest term.
pub fn eqdif_reduced_residual(
    b2: Complex64,
    b3: Complex64,
    g1: Complex64,
    g2: Complex64,
    g3: Complex64,
) -> f64 {
    let terms = eqdif_reduced_terms(b2, b3, g1, g2, g3);
    let lhs: Complex64 = terms.iter().sum();
    lhs.norm() / max_term(&terms)
}
