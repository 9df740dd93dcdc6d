//! Adaptive quadrature along straight lines and circles, and bilateral
//! summation over the shifted integer lattice.
//!
//! A line contour is z(t) = base + sigma*(i*dir) + t*dir with t real. The
//! segment |t| <= R is covered by Gauss-Kronrod panels directly; the two
//! tails are folded onto [0,1) by the reciprocal map t = R/(1-s), which
//! turns both exponential and power decay into integrable profiles. R is
//! therefore a core/tail switch, not a hard cutoff: mass beyond R is still
//! collected through the mapped panels.
//!
//! Refinement is worst-panel-first with exact float comparisons, and the
//! final reduction always runs over the panel list in its stored order with
//! compensated summation, so repeated runs with identical inputs are
//! bitwise identical.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;

/// Contour shape selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourKind {
    /// Straight line of infinite extent through a base point.
    Line,
    /// Circle traversed once counterclockwise.
    Circle,
}

/// Smallest node budget a spec may carry.
pub const MIN_NODE_BUDGET: usize = 64;

/// Integrand magnitudes above 1/eps_machine are treated as a pole sitting
/// on the contour.
const PINCH_MAGNITUDE: f64 = 1.0 / f64::EPSILON;

/// Mapped tail parameters beyond this |t| contribute nothing at double
/// precision for every integrand family in the crate; the callback is not
/// consulted there, which also keeps caller-side asymptotics out of
/// overflow territory.
const TAIL_HARD_CAP: f64 = 1e12;

/// Geometry and node budget for one contour integral.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    kind: ContourKind,
    base: Complex64,
    direction: Complex64,
    trunc: f64,
    offset: f64,
    budget: usize,
    circle_radius: f64,
    breakpoints: Vec<f64>,
}

impl ContourSpec {
    /// Infinite line through `base` along unit `direction`, with direct
    /// panels on |t| <= trunc and mapped tails beyond.
    pub fn line(base: Complex64, direction: Complex64, trunc: f64, budget: usize) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::domain("contour direction must be a nonzero finite complex number"));
        }
        if !(trunc > 0.0) || !trunc.is_finite() {
            return Err(Error::domain(format!("truncation radius must be positive, got {trunc}")));
        }
        if budget < MIN_NODE_BUDGET {
            return Err(Error::domain(format!("node budget {budget} below minimum {MIN_NODE_BUDGET}")));
        }
        Ok(ContourSpec {
            kind: ContourKind::Line,
            base,
            direction: direction / norm,
            trunc,
            offset: 0.0,
            budget,
            circle_radius: 1.0,
            breakpoints: Vec::new(),
        })
    }

    /// Counterclockwise circle of radius 1 centered at the origin.
    pub fn circle(budget: usize) -> Result<Self> {
        if budget < MIN_NODE_BUDGET {
            return Err(Error::domain(format!("node budget {budget} below minimum {MIN_NODE_BUDGET}")));
        }
        Ok(ContourSpec {
            kind: ContourKind::Circle,
            base: Complex64::new(0.0, 0.0),
            direction: Complex64::new(1.0, 0.0),
            trunc: 1.0,
            offset: 0.0,
            budget,
            circle_radius: 1.0,
            breakpoints: Vec::new(),
        })
    }

    /// Sideways shift of a line: the contour moves by `sigma` times the
    /// left-normal i*direction, so a horizontal line with sigma = -1/2 runs
    /// along Im z = -1/2.
    pub fn with_offset(mut self, sigma: f64) -> Self {
        self.offset = sigma;
        self
    }

    /// Override the circle radius (default 1).
    pub fn with_circle_radius(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("circle radius must be positive, got {r}")));
        }
        self.circle_radius = r;
        Ok(self)
    }

    /// Force panel boundaries at the given parameter values (line contours
    /// only; values outside (-R, R) are dropped). Needed when the integrand
    /// has features much narrower than the truncation scale, which a coarse
    /// first pass would never sample.
    pub fn with_breakpoints(mut self, pts: &[f64]) -> Self {
        self.breakpoints = pts.to_vec();
        self
    }

    /// Replace the node budget.
    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        if budget < MIN_NODE_BUDGET {
            return Err(Error::domain(format!("node budget {budget} below minimum {MIN_NODE_BUDGET}")));
        }
        self.budget = budget;
        Ok(self)
    }

    pub fn kind(&self) -> ContourKind {
        self.kind
    }

    pub fn budget(&self) -> usize {
        self.budget
    }
}

/// Value of a quadrature or summation together with its error estimate.
/// `abs_err` is an upper estimate combining the per-panel quadrature errors
/// (or the fitted tail bound of a sum) with an accumulation-noise floor.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: Complex64,
    pub abs_err: f64,
    pub nodes_used: usize,
    pub terms_used: usize,
}

// 15-point Kronrod extension of 7-point Gauss; abscissae descending.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SegKind {
    TailMinus,
    Core,
    TailPlus,
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    kind: SegKind,
    a: f64,
    b: f64,
}

struct Panel {
    seg: Seg,
    val: Complex64,
    err: f64,
    splittable: bool,
}

/// Neumaier-compensated accumulator for complex values.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sr: f64,
    cr: f64,
    si: f64,
    ci: f64,
}

impl Kahan {
    fn add(&mut self, v: Complex64) {
        neumaier(&mut self.sr, &mut self.cr, v.re);
        neumaier(&mut self.si, &mut self.ci, v.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.sr + self.cr, self.si + self.ci)
    }
}

fn neumaier(s: &mut f64, c: &mut f64, x: f64) {
    let t = *s + x;
    if s.abs() >= x.abs() {
        *c += (*s - t) + x;
    } else {
        *c += (x - t) + *s;
    }
    *s = t;
}

fn check_pinch(v: Complex64) -> Result<Complex64> {
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::pole_pinch("integrand not finite on a quadrature node"));
    }
    if v.norm() > PINCH_MAGNITUDE {
        return Err(Error::pole_pinch(format!(
            "integrand magnitude {:.3e} on a quadrature node signals a pole on or near the contour",
            v.norm()
        )));
    }
    Ok(v)
}

fn gk15<G: Fn(Seg, f64) -> Result<Complex64>>(g: &G, seg: Seg) -> Result<(Complex64, f64)> {
    let hh = 0.5 * (seg.b - seg.a);
    let mid = 0.5 * (seg.a + seg.b);
    let fc = g(seg, mid)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = hh * XGK[j];
        let f1 = g(seg, mid - dx)?;
        let f2 = g(seg, mid + dx)?;
        let fs = f1 + f2;
        resk += fs * WGK[j];
        if j % 2 == 1 {
            resg += fs * WG[j / 2];
        }
    }
    resk *= hh;
    resg *= hh;
    Ok((resk, (resk - resg).norm()))
}

/// Worst-panel-first refinement over a fixed initial panel list. Returns
/// (value, error sum, nodes used) in parameter space.
fn adaptive<G: Fn(Seg, f64) -> Result<Complex64>>(
    g: &G,
    init: &[Seg],
    tol: f64,
    budget: usize,
) -> Result<(Complex64, f64, usize)> {
    if init.len() * 15 > budget {
        return Err(Error::non_convergence(format!(
            "node budget {budget} cannot cover {} initial panels",
            init.len()
        )));
    }
    let mut nodes = 0usize;
    let mut panels: Vec<Panel> = Vec::with_capacity(init.len() * 4);
    for &seg in init {
        let (val, err) = gk15(g, seg)?;
        nodes += 15;
        panels.push(Panel { seg, val, err, splittable: true });
    }
    loop {
        let mut acc = Kahan::default();
        let mut l1 = 0.0;
        let mut errsum = 0.0;
        for p in &panels {
            acc.add(p.val);
            l1 += p.val.norm();
            errsum += p.err;
        }
        let total = acc.value();
        // The 1e-3*l1 floor keeps exact cancellations (odd integrands,
        // closed loops of analytic functions) from demanding impossible
        // relative accuracy of a true zero.
        let scale = total.norm().max(1e-3 * l1).max(f64::MIN_POSITIVE);
        if errsum <= tol * scale {
            return Ok((total, errsum + 4.0 * f64::EPSILON * l1, nodes));
        }
        let mut idx = usize::MAX;
        let mut worst = -1.0;
        for (i, p) in panels.iter().enumerate() {
            if p.splittable && p.err > worst {
                worst = p.err;
                idx = i;
            }
        }
        if idx == usize::MAX {
            return Err(Error::non_convergence(format!(
                "quadrature stalled at error {errsum:.3e} (target {:.3e}) with no refinable panel",
                tol * scale
            )));
        }
        if nodes + 30 > budget {
            return Err(Error::non_convergence(format!(
                "node budget {budget} exhausted at error {errsum:.3e} (target {:.3e})",
                tol * scale
            )));
        }
        let seg = panels[idx].seg;
        let width = seg.b - seg.a;
        let floor = 16.0 * f64::EPSILON * seg.a.abs().max(seg.b.abs()).max(1.0);
        if width.abs() < floor {
            panels[idx].splittable = false;
            continue;
        }
        let m = 0.5 * (seg.a + seg.b);
        let left = Seg { kind: seg.kind, a: seg.a, b: m };
        let right = Seg { kind: seg.kind, a: m, b: seg.b };
        let (lv, le) = gk15(g, left)?;
        let (rv, re) = gk15(g, right)?;
        nodes += 30;
        panels[idx] = Panel { seg: left, val: lv, err: le, splittable: true };
        panels.insert(idx + 1, Panel { seg: right, val: rv, err: re, splittable: true });
    }
}

/// Integrate `f` along the contour, jacobian included: the result
/// approximates the complex line integral of f(z) dz.
///
/// Panels are split worst-first until the summed error estimate drops
/// below `tol` relative to the result scale or the node budget runs out.
/// Results for fixed inputs are bitwise reproducible.
pub fn integrate_contour<F>(f: F, c: &ContourSpec, tol: f64) -> Result<Evaluation>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    match c.kind {
        ContourKind::Line => {
            let dir = c.direction;
            let base = c.base + Complex64::i() * dir * c.offset;
            let raw = |t: f64| -> Result<Complex64> { check_pinch(f(base + dir * t)?) };
            let trunc = c.trunc;
            let geval = |seg: Seg, x: f64| -> Result<Complex64> {
                match seg.kind {
                    SegKind::Core => raw(x),
                    SegKind::TailPlus | SegKind::TailMinus => {
                        let om = 1.0 - x;
                        if om <= 0.0 {
                            return Ok(Complex64::new(0.0, 0.0));
                        }
                        let t = trunc / om;
                        if t > TAIL_HARD_CAP {
                            return Ok(Complex64::new(0.0, 0.0));
                        }
                        let sgn = if seg.kind == SegKind::TailPlus { 1.0 } else { -1.0 };
                        Ok(raw(sgn * t)? * (trunc / (om * om)))
                    }
                }
            };

            let mut init = Vec::new();
            init.push(Seg { kind: SegKind::TailMinus, a: 0.0, b: 1.0 });
            let mut cuts: Vec<f64> = vec![-trunc];
            if c.breakpoints.is_empty() {
                let n0 = (c.budget / 60).clamp(2, 32);
                for k in 1..n0 {
                    cuts.push(-trunc + 2.0 * trunc * k as f64 / n0 as f64);
                }
            } else {
                let mut bp: Vec<f64> = c
                    .breakpoints
                    .iter()
                    .copied()
                    .filter(|t| t.is_finite() && t.abs() < trunc)
                    .collect();
                bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
                bp.dedup();
                cuts.extend(bp);
            }
            cuts.push(trunc);
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    init.push(Seg { kind: SegKind::Core, a: w[0], b: w[1] });
                }
            }
            init.push(Seg { kind: SegKind::TailPlus, a: 0.0, b: 1.0 });

            let (total, errsum, nodes) = adaptive(&geval, &init, tol, c.budget)?;
            Ok(Evaluation {
                value: dir * total,
                abs_err: errsum,
                nodes_used: nodes,
                terms_used: 0,
            })
        }
        ContourKind::Circle => {
            let r = c.circle_radius;
            let base = c.base;
            let geval = |_seg: Seg, phi: f64| -> Result<Complex64> {
                let e = Complex64::from_polar(r, phi);
                let v = check_pinch(f(base + e)?)?;
                Ok(v * Complex64::i() * e)
            };
            let n0 = (c.budget / 30).clamp(4, 64);
            let mut init = Vec::new();
            let two_pi = 2.0 * std::f64::consts::PI;
            for k in 0..n0 {
                init.push(Seg {
                    kind: SegKind::Core,
                    a: two_pi * k as f64 / n0 as f64,
                    b: two_pi * (k + 1) as f64 / n0 as f64,
                });
            }
            let (total, errsum, nodes) = adaptive(&geval, &init, tol, c.budget)?;
            Ok(Evaluation { value: total, abs_err: errsum, nodes_used: nodes, terms_used: 0 })
        }
    }
}

const MAX_SUM_TERMS: usize = 100_000;

enum TailVerdict {
    Bound(f64),
    AllZero,
    SlowDecay(f64),
    Insufficient,
}

/// Fit |term| ~ C * |N|^(-a) over the last decade of recorded magnitudes
/// and bound the two discarded tails by the integral C * R^(1-a)/(a-1).
fn poly_tail(hist: &[(f64, f64)], r_out: f64) -> TailVerdict {
    let lo = r_out / 10.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut window = 0usize;
    for &(n, m) in hist {
        if n >= lo && n > 0.0 {
            window += 1;
            if m > 0.0 {
                xs.push(n.ln());
                ys.push(m.ln());
            }
        }
    }
    if window > 0 && xs.is_empty() {
        return TailVerdict::AllZero;
    }
    if xs.len() < 6 {
        return TailVerdict::Insufficient;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return TailVerdict::Insufficient;
    }
    let slope = sxy / sxx;
    let a = -slope;
    if !(a > 1.2) {
        return TailVerdict::SlowDecay(a);
    }
    let lnc = my - slope * mx;
    let bound = lnc.exp() * r_out.powf(1.0 - a) / (a - 1.0);
    TailVerdict::Bound(bound)
}

/// Sum term(N) over N in Z + eps, symmetrically outward from the center.
///
/// Stops once 8 consecutive terms fall below tol times the running
/// magnitude and the fitted polynomial tail bound does too; decay
/// exponents at or below 1.2 are rejected as nonconvergent, as is any sum
/// still live after 1e5 terms.
pub fn bilateral_sum<F>(term: F, eps: HalfInt, tol: f64) -> Result<Evaluation>
where
    F: Fn(HalfInt) -> Result<Complex64>,
{
    if eps != HalfInt::ZERO && eps != HalfInt::HALF {
        return Err(Error::domain(format!("lattice offset must be 0 or 1/2, got {eps}")));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut acc = Kahan::default();
    let mut l1 = 0.0;
    let mut hist: Vec<(f64, f64)> = Vec::new();
    let mut streak = 0usize;
    let mut terms_used = 0usize;
    let mut k: i64 = 0;
    loop {
        let npos = eps + HalfInt::from_int(k);
        let members: &[HalfInt] = if npos == -npos { &[npos] } else { &[npos, -npos] };
        for &nn in members {
            if terms_used >= MAX_SUM_TERMS {
                return Err(Error::non_convergence(format!(
                    "bilateral sum exhausted {MAX_SUM_TERMS} terms without meeting tolerance"
                )));
            }
            let v = term(nn)?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::pole_pinch(format!("summand not finite at N = {nn}")));
            }
            acc.add(v);
            terms_used += 1;
            let mag = v.norm();
            l1 += mag;
            hist.push((nn.to_f64().abs(), mag));
            let running = acc.value().norm();
            if mag <= tol * running {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        if streak >= 8 && k >= 4 {
            let r_out = npos.to_f64().abs();
            let running = acc.value().norm();
            match poly_tail(&hist, r_out) {
                TailVerdict::AllZero => {
                    return Ok(Evaluation {
                        value: acc.value(),
                        abs_err: 4.0 * f64::EPSILON * l1,
                        nodes_used: 0,
                        terms_used,
                    });
                }
                TailVerdict::SlowDecay(a) => {
                    return Err(Error::non_convergence(format!(
                        "tail decay exponent {a:.3} at |N| = {r_out} is at or below 1.2"
                    )));
                }
                TailVerdict::Bound(tb) => {
                    if tb <= tol * running {
                        return Ok(Evaluation {
                            value: acc.value(),
                            abs_err: tb + 4.0 * f64::EPSILON * l1,
                            nodes_used: 0,
                            terms_used,
                        });
                    }
                }
                TailVerdict::Insufficient => {}
            }
        }
        k += 1;
    }
}
