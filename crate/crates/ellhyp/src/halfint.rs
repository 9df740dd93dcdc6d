use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Exact half-integer: stores twice the value, so arithmetic and parity
/// checks never touch floating point. Discrete labels of the complex
/// gamma function live in Z or Z + 1/2; sign factors (-1)^k flip results
/// entirely, so this bookkeeping must be exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    /// Construct from twice the intended value.
    pub const fn from_twice(t: i64) -> Self {
        HalfInt(t)
    }

    pub const fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub const fn is_int(self) -> bool {
        self.0 % 2 == 0
    }

    /// Integer value, or None when the value is a genuine half-integer.
    pub const fn as_int(self) -> Option<i64> {
        if self.0 % 2 == 0 {
            Some(self.0 / 2)
        } else {
            None
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }
}

impl From<i64> for HalfInt {
    fn from(n: i64) -> Self {
        HalfInt::from_int(n)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl AddAssign for HalfInt {
    fn add_assign(&mut self, rhs: HalfInt) {
        self.0 += rhs.0;
    }
}

impl SubAssign for HalfInt {
    fn sub_assign(&mut self, rhs: HalfInt) {
        self.0 -= rhs.0;
    }
}

impl Mul<i64> for HalfInt {
    type Output = HalfInt;
    fn mul(self, rhs: i64) -> HalfInt {
        HalfInt(self.0 * rhs)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        let a = HalfInt::from_twice(3); // 3/2
        let b = HalfInt::from_int(-2);
        assert_eq!(a + b, HalfInt::from_twice(-1));
        assert_eq!(a - b, HalfInt::from_twice(7));
        assert_eq!(-a, HalfInt::from_twice(-3));
        assert_eq!((a * 2).as_int(), Some(3));
    }

    #[test]
    fn parity_queries() {
        assert!(HalfInt::from_int(5).is_int());
        assert!(!HalfInt::from_twice(5).is_int());
        assert_eq!(HalfInt::from_twice(5).as_int(), None);
        assert_eq!(HalfInt::from_int(5).to_f64(), 5.0);
        assert_eq!(HalfInt::from_twice(-3).to_f64(), -1.5);
    }

    #[test]
    fn display() {
        assert_eq!(HalfInt::from_int(4).to_string(), "4");
        assert_eq!(HalfInt::from_twice(-5).to_string(), "-5/2");
    }
}
