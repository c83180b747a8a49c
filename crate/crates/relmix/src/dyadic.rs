//! Exact dyadic rationals p / 2^k.
//!
//! Canonical form: the numerator is odd or zero, and zero has exponent 0.
//! All arithmetic is exact and closed; these numbers carry every measure and
//! metric value in the crate.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u32,
}

impl Dyadic {
    /// Build p / 2^k and reduce to canonical form.
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        Self::canonical(numerator.into(), exponent)
    }

    fn canonical(mut numerator: BigInt, mut exponent: u32) -> Self {
        if numerator.is_zero() {
            return Dyadic {
                numerator,
                exponent: 0,
            };
        }
        while exponent > 0 && (&numerator % 2).is_zero() {
            numerator /= 2;
            exponent -= 1;
        }
        Dyadic {
            numerator,
            exponent,
        }
    }

    pub fn zero() -> Self {
        Dyadic::new(0, 0)
    }

    pub fn one() -> Self {
        Dyadic::new(1, 0)
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(n, 0)
    }

    /// 1 / 2^k.
    pub fn one_over_pow2(k: u32) -> Self {
        Dyadic::new(1, k)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.numerator.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            numerator: self.numerator.abs(),
            exponent: self.exponent,
        }
    }

    /// Numerator after rescaling to exponent `k`; `None` when the value is
    /// not representable as an integer multiple of 1/2^k.
    pub fn numerator_at(&self, k: u32) -> Option<BigInt> {
        if k < self.exponent {
            return None;
        }
        Some(&self.numerator << (k - self.exponent) as usize)
    }

    /// Halve the value (exact: only bumps the exponent).
    pub fn half(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            numerator: self.numerator.clone(),
            exponent: self.exponent + 1,
        }
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numerator.clone(), BigInt::one() << self.exponent as usize)
    }

    /// Exact conversion back from a rational whose denominator is a power of
    /// two.
    pub fn try_from_rational(r: &BigRational) -> Option<Self> {
        let mut denom = r.denom().clone();
        let mut exp = 0u32;
        while (&denom % 2).is_zero() {
            denom /= 2;
            exp += 1;
        }
        if denom == BigInt::one() {
            Some(Dyadic::canonical(r.numer().clone(), exp))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.to_rational();
        rational_to_f64(&r)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent) as usize;
        let b = &other.numerator << (e - other.exponent) as usize;
        a.cmp(&b)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        let a = &self.numerator << (e - self.exponent) as usize;
        let b = &rhs.numerator << (e - rhs.exponent) as usize;
        Dyadic::canonical(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::canonical(&self.numerator * &rhs.numerator, self.exponent + rhs.exponent)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            numerator: -self.numerator.clone(),
            exponent: self.exponent,
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Dyadic {
            type Output = Dyadic;
            fn $method(self, rhs: Dyadic) -> Dyadic {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| &acc + &x)
    }
}

/// Bit-exact `p/2^k` form.
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p/2^k` and bare integers.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let den = den
                .strip_prefix("2^")
                .ok_or_else(|| Error::parse(0, format!("denominator must be 2^k in `{s}`")))?;
            let numerator = BigInt::from_str(num.trim())
                .map_err(|e| Error::parse(0, format!("bad numerator in `{s}`: {e}")))?;
            let exponent: u32 = den
                .trim()
                .parse()
                .map_err(|e| Error::parse(0, format!("bad exponent in `{s}`: {e}")))?;
            Ok(Dyadic::new(numerator, exponent))
        } else {
            let numerator = BigInt::from_str(s)
                .map_err(|e| Error::parse(0, format!("bad dyadic `{s}`: {e}")))?;
            Ok(Dyadic::new(numerator, 0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dy(n: i64, k: u32) -> Dyadic {
        Dyadic::new(n, k)
    }

    #[test]
    fn canonical_form() {
        assert_eq!(dy(4, 2), dy(1, 0));
        assert_eq!(dy(6, 3), dy(3, 2));
        assert_eq!(dy(0, 7), dy(0, 0));
        assert_eq!(dy(3, 2).exponent(), 2);
    }

    #[test]
    fn arithmetic() {
        // 1/2 + 1/4 = 3/4
        assert_eq!(&dy(1, 1) + &dy(1, 2), dy(3, 2));
        // 1/2 - 1/2 = 0
        assert!((&dy(1, 1) - &dy(1, 1)).is_zero());
        // 3/4 * 1/2 = 3/8
        assert_eq!(&dy(3, 2) * &dy(1, 1), dy(3, 3));
        assert_eq!(-dy(5, 3), dy(-5, 3));
    }

    #[test]
    fn ordering() {
        assert!(dy(1, 2) < dy(1, 1));
        assert!(dy(-1, 0) < dy(0, 0));
        assert!(dy(3, 2) > dy(5, 3));
    }

    #[test]
    fn display_and_parse() {
        let x = dy(-5, 3);
        assert_eq!(x.to_string(), "-5/2^3");
        assert_eq!("-5/2^3".parse::<Dyadic>().unwrap(), x);
        assert_eq!("7".parse::<Dyadic>().unwrap(), dy(7, 0));
        assert_eq!("0/2^0".parse::<Dyadic>().unwrap(), Dyadic::zero());
        assert!("1/3".parse::<Dyadic>().is_err());
    }

    #[test]
    fn rational_round_trip() {
        let x = dy(11, 5);
        assert_eq!(Dyadic::try_from_rational(&x.to_rational()), Some(x));
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(Dyadic::try_from_rational(&third), None);
    }

    proptest! {
        #[test]
        fn add_then_sub_is_identity(a in -1000i64..1000, ka in 0u32..20, b in -1000i64..1000, kb in 0u32..20) {
            let x = dy(a, ka);
            let y = dy(b, kb);
            prop_assert_eq!(&(&x + &y) - &y, x);
        }

        #[test]
        fn mul_distributes(a in -100i64..100, b in -100i64..100, c in -100i64..100, k in 0u32..8) {
            let (x, y, z) = (dy(a, k), dy(b, k), dy(c, k));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        }

        #[test]
        fn matches_rational_arithmetic(a in -1000i64..1000, ka in 0u32..16, b in -1000i64..1000, kb in 0u32..16) {
            let x = dy(a, ka);
            let y = dy(b, kb);
            prop_assert_eq!((&x + &y).to_rational(), x.to_rational() + y.to_rational());
            prop_assert_eq!((&x * &y).to_rational(), x.to_rational() * y.to_rational());
        }
    }
}
