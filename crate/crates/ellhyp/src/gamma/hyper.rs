use num_complex::Complex64;
use std::f64::consts::{LN_10, PI};

use super::theta::ln_qpoch;
use crate::error::{Error, Result};

/// Quasiperiod pair with positive real parts (the b -> i regime b = i+delta,
/// 1/b also has positive real part, so it is covered). Q = w1 + w2 is fixed
/// once at construction and reused everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiPeriods {
    w1: Complex64,
    w2: Complex64,
    q: Complex64,
}

impl QuasiPeriods {
    pub fn new(w1: Complex64, w2: Complex64) -> Result<Self> {
        if w1.re <= 0.0 || w2.re <= 0.0 {
            return Err(Error::domain(format!(
                "quasiperiods need positive real parts, got {w1}, {w2}"
            )));
        }
        Ok(QuasiPeriods { w1, w2, q: w1 + w2 })
    }

    /// Convenience for real quasiperiods.
    pub fn real(w1: f64, w2: f64) -> Result<Self> {
        Self::new(Complex64::new(w1, 0.0), Complex64::new(w2, 0.0))
    }

    /// The modular pair (b, 1/b), e.g. b = i + delta.
    pub fn from_modulus(b: Complex64) -> Result<Self> {
        if b.norm() == 0.0 {
            return Err(Error::domain("zero modulus"));
        }
        Self::new(b, 1.0 / b)
    }

    pub fn w1(&self) -> Complex64 {
        self.w1
    }

    pub fn w2(&self) -> Complex64 {
        self.w2
    }

    /// Q = w1 + w2.
    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn swapped(&self) -> Self {
        QuasiPeriods { w1: self.w2, w2: self.w1, q: self.q }
    }
}

/// Second-order Bernoulli polynomial
/// B22(u; w) = ((u - Q/2)^2 - (w1^2 + w2^2)/12) / (w1 w2).
pub fn b22(u: Complex64, w: QuasiPeriods) -> Complex64 {
    let c = u - w.q / 2.0;
    (c * c - (w.w1 * w.w1 + w.w2 * w.w2) / 12.0) / (w.w1 * w.w2)
}

const SER_LEN: usize = 25;

type Ser = [Complex64; SER_LEN];

fn ser_zero() -> Ser {
    [Complex64::new(0.0, 0.0); SER_LEN]
}

fn ser_mul(a: &Ser, b: &Ser) -> Ser {
    let mut out = ser_zero();
    for i in 0..SER_LEN {
        for j in 0..SER_LEN - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn ser_recip(a: &Ser) -> Ser {
    let mut b = ser_zero();
    b[0] = 1.0 / a[0];
    for n in 1..SER_LEN {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            s += a[k] * b[n - k];
        }
        b[n] = -s * b[0];
    }
    b
}

/// Coefficients of exp(u x + x^2), from f' = (u + 2x) f.
fn exp_quadratic(u: Complex64) -> Ser {
    let mut e = ser_zero();
    e[0] = Complex64::new(1.0, 0.0);
    e[1] = u;
    for n in 2..SER_LEN {
        e[n] = (u * e[n - 1] + 2.0 * e[n - 2]) / n as f64;
    }
    e
}

/// Coefficients of P(w x) where P(t) = (e^t - 1)/t, i.e. w^k / (k+1)!.
fn p_series(w: Complex64) -> Ser {
    let mut p = ser_zero();
    let mut wk = Complex64::new(1.0, 0.0);
    let mut fact = 1.0;
    for (k, slot) in p.iter_mut().enumerate() {
        fact *= (k + 1) as f64;
        *slot = wk / fact;
        wk *= w;
    }
    p
}

/// Taylor coefficients of GE(x) = e^{u x + x^2} / (w1 w2 P(w1 x) P(w2 x)).
/// The integrand minus its subtracted singular part equals
/// e^{-x^2} (GE(x) - ge0 - ge1 x - ge2 x^2) / x^3 near the origin.
fn ge_series(u: Complex64, w1: Complex64, w2: Complex64) -> Ser {
    let e = exp_quadratic(u);
    let denom = ser_mul(&p_series(w1), &p_series(w2));
    let mut ge = ser_mul(&e, &ser_recip(&denom));
    let c = 1.0 / (w1 * w2);
    for g in ge.iter_mut() {
        *g *= c;
    }
    ge
}

struct StripIntegrand {
    u: Complex64,
    w1: Complex64,
    w2: Complex64,
    q: Complex64,
    a: Complex64,
    b: Complex64,
    ct: Complex64,
    ge: Ser,
    x0: f64,
}

impl StripIntegrand {
    fn new(u: Complex64, w: QuasiPeriods) -> Self {
        let a = 1.0 / (w.w1 * w.w2);
        let b = (u - w.q / 2.0) * a;
        let ct = b22(u, w) / 2.0 + a;
        let ge = ge_series(u, w.w1, w.w2);
        debug_assert!((ge[0] - a).norm() <= 1e-8 * a.norm().max(1.0));
        debug_assert!((ge[1] - b).norm() <= 1e-8 * b.norm().max(1.0));
        debug_assert!((ge[2] - ct).norm() <= 1e-8 * ct.norm().max(1.0));
        // The polynomial patch holds docile only while |u x| stays moderate.
        let x0 = 0.35_f64.min(3.5 / u.norm().max(1.0));
        StripIntegrand { u, w1: w.w1, w2: w.w2, q: w.q, a, b, ct, ge, x0 }
    }

    /// Integrand of the subtracted representation, regular on all of R.
    fn eval(&self, x: f64) -> Complex64 {
        if x.abs() < self.x0 {
            let mut acc = self.ge[SER_LEN - 1];
            for k in (3..SER_LEN - 1).rev() {
                acc = acc * x + self.ge[k];
            }
            return acc * (-x * x).exp();
        }
        let g = if x > 0.0 {
            ((self.u - self.q) * x).exp()
                / ((1.0 - (-self.w1 * x).exp()) * (1.0 - (-self.w2 * x).exp()) * x)
        } else {
            (self.u * x).exp()
                / ((1.0 - (self.w1 * x).exp()) * (1.0 - (self.w2 * x).exp()) * x)
        };
        let gau = (-x * x).exp();
        if gau == 0.0 {
            return g;
        }
        let x2 = x * x;
        g - gau * (self.a / (x2 * x) + self.b / x2 + self.ct / x)
    }
}

/// ln gamma2(u) for u strictly inside the strip 0 < Re u < Re Q, by an
/// equal-step sum of the subtracted integrand. The three singular moments
/// integrate in closed form; what survives is 2 sqrt(pi) B with
/// B = (u - Q/2)/(w1 w2), minus the regular integral.
fn ln_hgamma_strip(u: Complex64, w: QuasiPeriods) -> Result<Complex64> {
    let d = u.re.min((w.q - u).re);
    if d <= 0.0 {
        return Err(Error::domain(format!("{u} outside the evaluation strip")));
    }
    let f = StripIntegrand::new(u, w);
    // The integrand is analytic up to the poles at 2 pi i k / w_j, so the
    // equal-step error scales like exp(-a (2 pi / h - |Im u|)) with
    // a = 2 pi / max |w_j|. Shrink the step until that exponent is 40.
    let a = 2.0 * PI / w.w1.norm().max(w.w2.norm());
    let h = 0.25_f64.min(2.0 * PI / (u.im.abs() + 40.0 / a));
    let r = 16.0 * LN_10 / d + 6.0;
    let n = (r / h).ceil() as i64;
    let mut total = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        total += f.eval(k as f64 * h);
    }
    Ok(2.0 * PI.sqrt() * f.b - h * total)
}

/// ln gamma2(u) through the modular product: valid whenever the period
/// ratio is non-real, in particular near b = i. Orientation is chosen so
/// both q-bases fall inside the unit disc; the function itself is symmetric
/// under w1 <-> w2.
fn ln_hgamma_product(u: Complex64, w: QuasiPeriods) -> Result<Complex64> {
    let (w1, w2) = if (w.w1 / w.w2).im > 0.0 { (w.w1, w.w2) } else { (w.w2, w.w1) };
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    let qq = (i2pi * w1 / w2).exp();
    let qt = (-i2pi * w2 / w1).exp();
    let num = ln_qpoch(qt * (i2pi * u / w1).exp(), qt).map_err(|e| match e {
        Error::Pole(_) => Error::zero(format!("hgamma zero at u = {u}")),
        other => other,
    })?;
    let den = match ln_qpoch((i2pi * u / w2).exp(), qq) {
        Ok(v) => v,
        Err(Error::Pole(_)) => return Err(Error::pole(format!("hgamma pole at u = {u}"))),
        Err(other) => return Err(other),
    };
    Ok(-Complex64::i() * PI / 2.0 * b22(u, w) + num - den)
}

const SHIFT_GUARD: f64 = 1e-8;

/// Cone depth, in units of Im(u / w_j), past which the B22 phase alone
/// carries the value: the first neglected correction is exp(-2 pi depth),
/// about 4e-17. Deeper arguments must bypass the strip and product routes,
/// where the equal-step sum aliases and the shift sines overflow.
const CONE_DEPTH: f64 = 6.0;

/// Log of the hyperbolic gamma function gamma2(u; w1, w2).
///
/// Dispatch: deep inside an asymptotic cone only the B22 phase survives;
/// otherwise a clearly non-real period ratio goes through the modular
/// product, and an (almost) real ratio goes through the subtracted integral
/// after shift-reducing u into the strip with the sine shift equations,
/// whose factors are tracked in log space.
pub fn ln_hgamma(u: Complex64, w: QuasiPeriods) -> Result<Complex64> {
    let m1 = (u / w.w1).im;
    let m2 = (u / w.w2).im;
    if m1 > CONE_DEPTH && m2 > CONE_DEPTH {
        return Ok(-Complex64::i() * PI / 2.0 * b22(u, w));
    }
    if m1 < -CONE_DEPTH && m2 < -CONE_DEPTH {
        return Ok(Complex64::i() * PI / 2.0 * b22(u, w));
    }
    let ratio_im = (w.w1 / w.w2).im;
    if (-2.0 * PI * ratio_im.abs()).exp() <= 0.99 {
        return ln_hgamma_product(u, w);
    }
    let margin = 0.05_f64.min(0.25 * w.q.re);
    let mut uu = u;
    let mut ln_fac = Complex64::new(0.0, 0.0);
    let mut steps = 0;
    while uu.re <= margin {
        // gamma2(u) = gamma2(u + w1) / (2 sin(pi u / w2))
        let s = 2.0 * (PI * uu / w.w2).sin();
        if s.norm() < SHIFT_GUARD {
            return Err(Error::pole(format!("hgamma pole at u = {u}")));
        }
        ln_fac -= s.ln();
        uu += w.w1;
        steps += 1;
        if steps > 100_000 {
            return Err(Error::non_convergence("hgamma shift reduction"));
        }
    }
    while uu.re >= w.q.re - margin {
        // gamma2(u) = 2 sin(pi (u - w1) / w2) gamma2(u - w1)
        uu -= w.w1;
        let s = 2.0 * (PI * uu / w.w2).sin();
        if s.norm() < SHIFT_GUARD {
            return Err(Error::zero(format!("hgamma zero at u = {u}")));
        }
        ln_fac += s.ln();
        steps += 1;
        if steps > 100_000 {
            return Err(Error::non_convergence("hgamma shift reduction"));
        }
    }
    Ok(ln_fac + ln_hgamma_strip(uu, w)?)
}

/// Hyperbolic gamma function gamma2(u; w1, w2).
pub fn hgamma(u: Complex64, w: QuasiPeriods) -> Result<Complex64> {
    let ln = ln_hgamma(u, w)?;
    if ln.re > 700.0 {
        return Err(Error::overflow(format!("hgamma exponent {:.1} at u = {u}", ln.re)));
    }
    Ok(ln.exp())
}

/// Asymptotic cones of the hyperbolic gamma: I opens from arg w1 to
/// arg w2 + pi, II from arg w2 - pi to arg w1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    I,
    II,
}

fn angle_strictly_between(x: f64, lo: f64, hi: f64) -> bool {
    let span = (hi - lo).rem_euclid(2.0 * PI);
    let t = (x - lo).rem_euclid(2.0 * PI);
    t > 1e-12 && t < span - 1e-12
}

/// The phase e^{-+ (pi i / 2) B22(u; w)} predicted to flatten gamma2 at
/// infinity inside the requested cone: hgamma(u) * hgamma_phase(u) -> 1.
pub fn hgamma_phase(u: Complex64, w: QuasiPeriods, cone: Cone) -> Result<Complex64> {
    let au = u.arg();
    let a1 = w.w1.arg();
    let a2 = w.w2.arg();
    let inside = match cone {
        Cone::I => angle_strictly_between(au, a1, a2 + PI),
        Cone::II => angle_strictly_between(au, a2 - PI, a1),
    };
    if !inside {
        return Err(Error::domain(format!(
            "arg(u) = {au:.6} is outside cone {cone:?}"
        )));
    }
    let half = Complex64::i() * PI / 2.0 * b22(u, w);
    Ok(match cone {
        Cone::I => half.exp(),
        Cone::II => (-half).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn qp(w1: f64, w2: f64) -> QuasiPeriods {
        QuasiPeriods::real(w1, w2).unwrap()
    }

    #[test]
    fn b22_rational_points() {
        let w = qp(1.0, 2.0);
        let v = b22(c(0.3, 0.0), w);
        assert!(rel(v, c(307.0 / 600.0, 0.0)) < 1e-14);
        let w11 = qp(1.0, 1.0);
        assert!(rel(b22(c(1.0, 0.0), w11), c(-1.0 / 6.0, 0.0)) < 1e-14);
        assert!(rel(b22(c(0.0, 0.0), w11), c(5.0 / 6.0, 0.0)) < 1e-14);
    }

    #[test]
    fn hgamma_self_dual_point_is_one() {
        let w = qp(1.0, 2.0);
        let v = hgamma(c(1.5, 0.0), w).unwrap();
        assert!(rel(v, c(1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn hgamma_shifted_self_dual_point() {
        // Q/2 + w1 picks up 2 sin(pi (Q/2) / w2) = 2 sin(3 pi / 4).
        let w = qp(1.0, 2.0);
        let v = hgamma(c(2.5, 0.0), w).unwrap();
        assert!(rel(v, c(2.0_f64.sqrt(), 0.0)) < 1e-12);
    }

    #[test]
    fn hgamma_reference_points() {
        // 60-digit arithmetic references.
        let cases: [(Complex64, f64, Complex64, Complex64); 6] = [
            (c(0.4, 0.0), 1.0, c(1.0, 0.0), c(0.7275111178762885791, 0.0)),
            (c(0.9, 0.2), 1.0, c(2.0, 0.0), c(0.65432213804399512606, 0.050549742249451735684)),
            (c(1.3, 0.0), 1.0, c(1.4, 0.0), c(1.0899001379707475908, 0.0)),
            (c(0.05, 0.0), 1.0, c(1.4, 0.0), c(3.9295361639212868909, 0.0)),
            (c(2.6, 0.4), 1.0, c(1.4, 0.0), c(-1.0825591993453251841, -3.2613368612439018256)),
            (c(-0.8, 0.1), 1.0, c(1.4, 0.0), c(-0.47159885871224900604, 0.19533749458349462008)),
        ];
        for (u, w1, w2, want) in cases {
            let w = QuasiPeriods::new(c(w1, 0.0), w2).unwrap();
            let got = hgamma(u, w).unwrap();
            assert!(rel(got, want) < 1e-11, "u = {u}, w2 = {w2}: got {got}, want {want}");
        }
    }

    #[test]
    fn hgamma_product_route_reference() {
        // Non-real period ratio exercises the modular product.
        let w = QuasiPeriods::new(c(1.0, 0.0), c(1.0, 0.3)).unwrap();
        let got = hgamma(c(0.7, 0.0), w).unwrap();
        let want = c(0.75229543170749536597, -0.051656350603315950428);
        assert!(rel(got, want) < 1e-12);
    }

    #[test]
    fn hgamma_b_to_i_regime() {
        // u = i (1 + 0.7 delta) at b = i + delta; 60-digit references.
        let cases = [
            (0.1, c(0.63389934107549315219, 1.0286769242265236114)),
            (0.01, c(11.383973663524956572, -5.9451590969570015291)),
            (0.001, c(-62.315445496958513055, -114.18519721865532533)),
        ];
        for (delta, want) in cases {
            let w = QuasiPeriods::from_modulus(c(delta, 1.0)).unwrap();
            let u = Complex64::i() * (1.0 + 0.7 * delta);
            let got = hgamma(u, w).unwrap();
            assert!(rel(got, want) < 1e-10, "delta = {delta}: got {got}, want {want}");
        }
    }

    #[test]
    fn hgamma_shift_equations() {
        // gamma2(u + w1)/gamma2(u) = 2 sin(pi u / w2) and its partner.
        for (w1, w2) in [(1.0, 1.0), (1.0, 2.0), (1.0, 2.0_f64.sqrt())] {
            let w = qp(w1, w2);
            for k in 0..5 {
                let u = c(0.21 + 0.13 * k as f64, 0.05 * k as f64);
                let g = hgamma(u, w).unwrap();
                let s1 = hgamma(u + c(w1, 0.0), w).unwrap() / g;
                assert!(rel(s1, 2.0 * (PI * u / w2).sin()) < 1e-10);
                let s2 = hgamma(u + c(w2, 0.0), w).unwrap() / g;
                assert!(rel(s2, 2.0 * (PI * u / w1).sin()) < 1e-10);
            }
        }
    }

    #[test]
    fn hgamma_reflection() {
        // gamma2(u) gamma2(Q - u) = 1.
        let w = qp(1.0, 1.4);
        for u in [c(0.3, 0.2), c(1.1, -0.4), c(0.6, 0.0)] {
            let v = hgamma(u, w).unwrap() * hgamma(w.q() - u, w).unwrap();
            assert!(rel(v, c(1.0, 0.0)) < 1e-11, "u = {u}");
        }
    }

    #[test]
    fn hgamma_period_symmetry() {
        let w = qp(1.0, 1.4);
        for u in [c(0.5, 0.1), c(1.9, -0.3)] {
            let a = hgamma(u, w).unwrap();
            let b = hgamma(u, w.swapped()).unwrap();
            assert!(rel(a, b) < 1e-11);
        }
    }

    #[test]
    fn hgamma_pole_and_zero_guards() {
        let w = qp(1.0, 1.4);
        assert!(matches!(hgamma(c(0.0, 0.0), w), Err(Error::Pole(_))));
        assert!(matches!(hgamma(c(-1.0, 0.0), w), Err(Error::Pole(_))));
        // Zeros sit at Q + j w1 + k w2.
        assert!(matches!(hgamma(c(2.4, 0.0), w), Err(Error::Zero(_))));
        assert!(matches!(hgamma(c(3.4, 0.0), w), Err(Error::Zero(_))));
    }

    #[test]
    fn cone_phases_flatten_hgamma() {
        let w = qp(1.0, 1.0);
        let u1 = 10.0 * (Complex64::i() * PI / 4.0).exp(); // 10 e^{i pi/4}
        let p1 = hgamma_phase(u1, w, Cone::I).unwrap();
        let g1 = hgamma(u1, w).unwrap();
        assert!((g1 * p1 - 1.0).norm() < 1e-6);
        let u2 = u1.conj(); // 10 e^{-i pi/4}
        let p2 = hgamma_phase(u2, w, Cone::II).unwrap();
        let g2 = hgamma(u2, w).unwrap();
        assert!((g2 * p2 - 1.0).norm() < 1e-6);
    }

    #[test]
    fn cone_mismatch_is_rejected() {
        let w = qp(1.0, 1.0);
        let u = 10.0 * (Complex64::i() * PI / 4.0).exp();
        assert!(matches!(hgamma_phase(u, w, Cone::II), Err(Error::Domain(_))));
        assert!(hgamma_phase(u, w, Cone::I).is_ok());
        // On the boundary ray arg u = arg w1 = 0 neither cone applies.
        assert!(hgamma_phase(c(5.0, 0.0), w, Cone::I).is_err());
        assert!(hgamma_phase(c(5.0, 0.0), w, Cone::II).is_err());
    }
}
