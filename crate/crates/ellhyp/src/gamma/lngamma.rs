use num_complex::Complex64;

use crate::error::{Error, Result};

/// Asymptotic series coefficients B_{2k} / (2k (2k-1)).
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Minimum real part for the asymptotic series to deliver full double
/// precision with the coefficient set above.
const STIRLING_EDGE: f64 = 15.0;

/// Guard distance around poles and zeros; inside it we refuse to evaluate
/// rather than amplify noise downstream.
pub(crate) const LATTICE_GUARD: f64 = 1e-8;

/// Log of the Euler gamma function, continued from the positive real axis
/// (imaginary part not reduced mod 2pi). exp of the result is Gamma(z).
pub fn lngamma_complex(z: Complex64) -> Result<Complex64> {
    let k = z.re.round();
    if k <= 0.0 && (z - Complex64::new(k, 0.0)).norm() < LATTICE_GUARD {
        return Err(Error::pole(format!("lngamma at nonpositive integer {}", k)));
    }
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.re < STIRLING_EDGE {
        acc -= w.ln();
        w += 1.0;
    }
    let lnw = w.ln();
    let mut series = Complex64::new(0.0, 0.0);
    let w2 = w * w;
    let mut wpow = w;
    for c in STIRLING {
        series += c / wpow;
        wpow *= w2;
    }
    Ok((w - 0.5) * lnw - w + HALF_LN_2PI + series + acc)
}

/// Continuous/discrete label pair (x, n) of the gamma function attached to
/// the principal series of SL(2, C).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretePair {
    pub x: Complex64,
    pub n: i64,
}

impl DiscretePair {
    pub fn new(x: Complex64, n: i64) -> Self {
        DiscretePair { x, n }
    }

    /// alpha = (n + ix)/2. alpha - alpha' = n holds exactly by construction.
    pub fn alpha(&self) -> Complex64 {
        (Complex64::new(self.n as f64, 0.0) + Complex64::i() * self.x) / 2.0
    }

    /// alpha' = (-n + ix)/2.
    pub fn alpha_prime(&self) -> Complex64 {
        (Complex64::new(-(self.n as f64), 0.0) + Complex64::i() * self.x) / 2.0
    }
}

fn near_nonpos_int(w: Complex64) -> Option<i64> {
    let k = w.re.round();
    if k <= 0.0 && (w - Complex64::new(k, 0.0)).norm() < LATTICE_GUARD {
        Some((-k) as i64)
    } else {
        None
    }
}

fn factorial(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Gamma(x, n) = Gamma((n+ix)/2) / Gamma(1+(n-ix)/2).
///
/// Poles sit at x = i(|n|+2j), zeros at x = -i(|n|+2j+2), j >= 0. Points
/// where numerator and denominator blow up together (possible for n < 0)
/// are regular; the finite limit value is returned there.
pub fn cgamma(a: DiscretePair) -> Result<Complex64> {
    let num = a.alpha();
    let den = 1.0 - a.alpha_prime();
    match (near_nonpos_int(num), near_nonpos_int(den)) {
        (Some(k), Some(l)) => {
            // Both factors pinch; residues cancel to (-1)^{k+l+1} l!/k!.
            let sign = if (k + l + 1) % 2 == 0 { 1.0 } else { -1.0 };
            Ok(Complex64::new(sign * factorial(l) / factorial(k), 0.0))
        }
        (Some(_), None) => Err(Error::pole(format!(
            "cgamma pole at x = {}, n = {}",
            a.x, a.n
        ))),
        (None, Some(_)) => Ok(Complex64::new(0.0, 0.0)),
        (None, None) => {
            let lg = lngamma_complex(num)? - lngamma_complex(den)?;
            if lg.re > 700.0 {
                return Err(Error::overflow(format!(
                    "cgamma exponent {:.1} at x = {}, n = {}",
                    lg.re, a.x, a.n
                )));
            }
            Ok(lg.exp())
        }
    }
}

/// Log of cgamma (same branch caveat as `lngamma_complex`); errors at both
/// poles and zeros since neither has a finite log.
pub fn ln_cgamma(a: DiscretePair) -> Result<Complex64> {
    let num = a.alpha();
    let den = 1.0 - a.alpha_prime();
    if near_nonpos_int(num).is_some() || near_nonpos_int(den).is_some() {
        return Err(Error::pole(format!(
            "ln_cgamma at lattice point x = {}, n = {}",
            a.x, a.n
        )));
    }
    Ok(lngamma_complex(num)? - lngamma_complex(den)?)
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

    #[test]
    fn lngamma_at_one_and_half() {
        assert!(lngamma_complex(c(1.0, 0.0)).unwrap().norm() < 1e-12);
        let v = lngamma_complex(c(0.5, 0.0)).unwrap();
        assert!((v.re - 0.5723649429247001).abs() < 1e-13);
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn lngamma_reference_point() {
        // 60-digit arithmetic reference.
        let v = lngamma_complex(c(3.0, 4.0)).unwrap();
        assert!(rel(v, c(-1.7566267846037841105, 4.7426644380346579282)) < 1e-13);
    }

    #[test]
    fn lngamma_matches_recurrence_left_of_axis() {
        // exp(lngamma(z)) must satisfy Gamma(z+1) = z Gamma(z).
        for &z in &[c(-3.3, 0.7), c(-7.6, -2.1), c(0.2, 0.0), c(-0.5, 0.0)] {
            let g = lngamma_complex(z).unwrap().exp();
            let g1 = lngamma_complex(z + 1.0).unwrap().exp();
            assert!(rel(g1, z * g) < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn lngamma_pole_guard() {
        assert!(lngamma_complex(c(0.0, 0.0)).is_err());
        assert!(lngamma_complex(c(-4.0, 0.0)).is_err());
        assert!(lngamma_complex(c(-4.0 + 1e-10, 1e-10)).is_err());
    }

    #[test]
    fn cgamma_trivial_points() {
        // Gamma(1/2)/Gamma(1/2) and Gamma(1/2)/Gamma(3/2).
        let one = cgamma(DiscretePair::new(c(0.0, -1.0), 0)).unwrap();
        assert!(rel(one, c(1.0, 0.0)) < 1e-14);
        let two = cgamma(DiscretePair::new(c(0.0, 0.0), 1)).unwrap();
        assert!(rel(two, c(2.0, 0.0)) < 1e-14);
    }

    #[test]
    fn cgamma_reference_points() {
        // 60-digit arithmetic references.
        let cases = [
            (c(0.7, 0.2), 2, c(0.94475218694988090516, -0.066809340347287468286)),
            (c(0.3, -0.8), -3, c(-0.91084992096319391684, -0.11601371126677696764)),
            (c(1.5, 0.5), 0, c(-1.1078092896227441421, -0.75014425378220219947)),
            (c(2.2, -1.1), 5, c(-0.55340237165517635543, 0.95772191821997551503)),
        ];
        for (x, n, want) in cases {
            let got = cgamma(DiscretePair::new(x, n)).unwrap();
            assert!(rel(got, want) < 1e-13, "x = {x}, n = {n}");
        }
    }

    #[test]
    fn cgamma_pole_zero_lattice() {
        // n = 2: poles at i(2+2j), zeros at -i(4+2j).
        assert!(matches!(
            cgamma(DiscretePair::new(c(0.0, 2.0), 2)),
            Err(Error::Pole(_))
        ));
        assert!(matches!(
            cgamma(DiscretePair::new(c(0.0, 6.0), 2)),
            Err(Error::Pole(_))
        ));
        let z = cgamma(DiscretePair::new(c(0.0, -4.0), 2)).unwrap();
        assert_eq!(z, c(0.0, 0.0));
    }

    #[test]
    fn cgamma_double_pinch_is_regular() {
        // x = i, n = -3: alpha = -2, 1-alpha' = 0; limit (-1)^3 0!/2!.
        let v = cgamma(DiscretePair::new(c(0.0, 1.0), -3)).unwrap();
        assert!(rel(v, c(-0.5, 0.0)) < 1e-12);
        // Consistency with the sign reflection against n = +3.
        let w = cgamma(DiscretePair::new(c(0.0, 1.0), 3)).unwrap();
        assert!(rel(v, -w) < 1e-12);
    }
}
