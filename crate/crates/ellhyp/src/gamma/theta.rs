use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative accuracy targeted by the truncated products and series here.
const PROD_TOL: f64 = 1e-15;
const MAX_FACTORS: usize = 200_000;

/// q-Pochhammer symbol (a; q)_inf for |q| < 1.
pub fn qpoch(a: Complex64, q: Complex64) -> Result<Complex64> {
    let qn = q.norm();
    if qn >= 1.0 {
        return Err(Error::domain(format!("qpoch needs |q| < 1, got {qn}")));
    }
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(Error::overflow("qpoch argument not finite"));
    }
    let mut prod = Complex64::new(1.0, 0.0);
    let mut aq = a;
    for _ in 0..MAX_FACTORS {
        prod *= 1.0 - aq;
        aq *= q;
        // Remaining factors contribute at most ~|aq|/(1-|q|) in log magnitude.
        if aq.norm() / (1.0 - qn) < 0.1 * PROD_TOL {
            return Ok(prod);
        }
    }
    Err(Error::non_convergence("qpoch factor budget exhausted"))
}

/// Log of (a; q)_inf, safe when the plain product would overflow.
/// Errors if some factor vanishes (a on the lattice q^{-k}).
pub(crate) fn ln_qpoch(a: Complex64, q: Complex64) -> Result<Complex64> {
    let qn = q.norm();
    if qn >= 1.0 {
        return Err(Error::domain(format!("ln_qpoch needs |q| < 1, got {qn}")));
    }
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(Error::overflow("ln_qpoch argument not finite"));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut aq = a;
    for _ in 0..MAX_FACTORS {
        let f = 1.0 - aq;
        if f.norm() < 1e-12 {
            return Err(Error::pole(format!("ln_qpoch factor vanishes at a q^k = {aq}")));
        }
        sum += f.ln();
        aq *= q;
        if aq.norm() / (1.0 - qn) < 0.1 * PROD_TOL {
            return Ok(sum);
        }
    }
    Err(Error::non_convergence("ln_qpoch factor budget exhausted"))
}

/// Short Jacobi theta function theta(z; q) = (z; q)_inf (q/z; q)_inf.
pub fn theta_q(z: Complex64, q: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("theta_q at z = 0"));
    }
    Ok(qpoch(z, q)? * qpoch(q / z, q)?)
}

/// theta_1(u | tau): the odd Jacobi theta function, summed over
/// half-integer indices: -sum_{l in Z+1/2} exp(pi i tau l^2 + 2 pi i l (u + 1/2)).
pub fn theta1(u: Complex64, tau: Complex64) -> Result<Complex64> {
    if tau.im <= 0.0 {
        return Err(Error::domain(format!("theta1 needs Im tau > 0, got {}", tau.im)));
    }
    let i = Complex64::i();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut small_run = 0;
    for k in 0..10_000i64 {
        let mut pair = Complex64::new(0.0, 0.0);
        for l in [k as f64 + 0.5, -(k as f64) - 0.5] {
            pair += (i * PI * (tau * l * l + 2.0 * l * (u + 0.5))).exp();
        }
        sum -= pair;
        if pair.norm() < PROD_TOL * sum.norm().max(1e-12) {
            small_run += 1;
            if small_run >= 3 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::non_convergence("theta1 series did not settle"))
}

/// Pair of elliptic bases with |p|, |q| < 1, ordered canonically at
/// construction so every downstream evaluation is exactly p <-> q symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticBases {
    p: Complex64,
    q: Complex64,
}

impl EllipticBases {
    pub fn new(p: Complex64, q: Complex64) -> Result<Self> {
        if p.norm() >= 1.0 || q.norm() >= 1.0 {
            return Err(Error::domain(format!(
                "elliptic bases need |p|, |q| < 1, got |p| = {}, |q| = {}",
                p.norm(),
                q.norm()
            )));
        }
        // Larger-magnitude base first; ties broken componentwise.
        let swap = match p.norm().partial_cmp(&q.norm()) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Equal) => (p.re, p.im) < (q.re, q.im),
            _ => false,
        };
        let (p, q) = if swap { (q, p) } else { (p, q) };
        Ok(EllipticBases { p, q })
    }

    pub fn p(&self) -> Complex64 {
        self.p
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }
}

const EGAMMA_MAX_TERMS: usize = 1_000_000;

/// ln Gamma(z; p, q) inside the annulus |pq| < |z| < 1 via the symmetric
/// series sum_{n>=1} (z^n - (pq/z)^n) / (n (1-p^n)(1-q^n)).
fn ln_egamma_annulus(z: Complex64, p: Complex64, q: Complex64) -> Result<Complex64> {
    let pq = p * q;
    let w = pq / z;
    let ratio = z.norm().max(w.norm());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zn = z;
    let mut wn = w;
    let mut pn = p;
    let mut qn = q;
    for n in 1..=EGAMMA_MAX_TERMS {
        sum += (zn - wn) / ((n as f64) * (1.0 - pn) * (1.0 - qn));
        zn *= z;
        wn *= w;
        pn *= p;
        qn *= q;
        let tail = zn.norm().max(wn.norm())
            / ((1.0 - ratio) * (1.0 - p.norm()) * (1.0 - q.norm()));
        if tail < 1e-17 {
            return Ok(sum);
        }
    }
    Err(Error::non_convergence("elliptic gamma series budget exhausted"))
}

/// Elliptic gamma function Gamma(z; p, q).
///
/// Evaluated by the symmetric log series after shift-reducing z into the
/// annulus |pq| < |z| < 1 with Gamma(pz) = theta(z; q) Gamma(z), tracking
/// the theta factors in log space. Poles (z = p^{-j} q^{-k}) surface as a
/// vanishing theta denominator; zeros (z = p^{j+1} q^{k+1}) as a vanishing
/// theta numerator, returned as exact 0.
pub fn egamma(z: Complex64, b: EllipticBases) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("egamma at z = 0"));
    }
    let (p, q) = (b.p, b.q);
    let pl = p.norm();
    let pq_norm = (p * q).norm();
    let d = pq_norm.sqrt();
    // Land |z| in (d sqrt|p|, d / sqrt|p|]; the series ratio stays <= sqrt|q|.
    let hi = d / pl.sqrt();
    let mut zz = z;
    let mut ln_theta_acc = Complex64::new(0.0, 0.0);
    let mut steps = 0;
    while zz.norm() > hi {
        // Gamma(z) = Gamma(pz) / theta(z; q)
        let th = theta_q(zz, q)?;
        if th.norm() < 1e-10 {
            return Err(Error::pole(format!("egamma pole near z = {z}")));
        }
        ln_theta_acc -= th.ln();
        zz *= p;
        steps += 1;
        if steps > 100_000 {
            return Err(Error::non_convergence("egamma shift reduction"));
        }
    }
    while zz.norm() <= d * pl.sqrt() {
        // Gamma(z) = theta(z/p; q) Gamma(z/p)
        zz /= p;
        let th = theta_q(zz, q)?;
        if th.norm() < 1e-10 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        ln_theta_acc += th.ln();
        steps += 1;
        if steps > 100_000 {
            return Err(Error::non_convergence("egamma shift reduction"));
        }
    }
    let ln = ln_egamma_annulus(zz, p, q)? + ln_theta_acc;
    if ln.re > 700.0 {
        return Err(Error::overflow(format!("egamma exponent {:.1}", ln.re)));
    }
    Ok(ln.exp())
}
