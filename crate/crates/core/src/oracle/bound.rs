//! Exact evaluation of `coef * prod base^exp` against integers, by raising
//! to a common power and bisecting. Deliberately not the integer-root route
//! taken by the fast path.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::Relation;

/// `coef * prod base^exp` with rational bases and exponents.
#[derive(Clone, Debug)]
pub struct OBound {
    coef: BigRational,
    factors: Vec<(BigRational, BigRational)>,
}

impl OBound {
    pub fn count(n: u128) -> Self {
        OBound { coef: BigRational::from_integer(BigInt::from(n)), factors: Vec::new() }
    }

    pub fn ratio(num: u128, den: u128) -> Self {
        OBound { coef: BigRational::new(BigInt::from(num), BigInt::from(den)), factors: Vec::new() }
    }

    pub fn pow(base: u128, exp: BigRational) -> Self {
        Self::count(1).times_pow(BigRational::from_integer(BigInt::from(base)), exp)
    }

    pub fn times_pow(mut self, base: BigRational, exp: BigRational) -> Self {
        self.factors.push((base, exp));
        self
    }

    /// `value^D = num / den` with `D` the lcm of exponent denominators.
    fn powered(&self) -> Result<(BigInt, BigInt, usize)> {
        let mut d = BigInt::one();
        for (_, e) in &self.factors {
            d = d.lcm(e.denom());
        }
        let d = d.to_usize().filter(|&d| d <= 1 << 20).ok_or_else(|| Error::DegenerateBound("root degree".into()))?;
        let mut num = num_traits::pow(self.coef.numer().clone(), d);
        let mut den = num_traits::pow(self.coef.denom().clone(), d);
        for (b, e) in &self.factors {
            if b.is_negative() || (b.is_zero() && e.is_negative()) {
                return Err(Error::DegenerateBound(format!("base {b} with exponent {e}")));
            }
            let scaled = (e * BigRational::from_integer(BigInt::from(d))).to_integer();
            let m = scaled.abs().to_usize().ok_or_else(|| Error::DegenerateBound("exponent".into()))?;
            let (bn, bd) = (num_traits::pow(b.numer().clone(), m), num_traits::pow(b.denom().clone(), m));
            if scaled.is_negative() {
                num *= bd;
                den *= bn;
            } else {
                num *= bn;
                den *= bd;
            }
        }
        if num.is_negative() || den.is_zero() {
            return Err(Error::DegenerateBound("negative or undefined bound".into()));
        }
        Ok((num, den, d))
    }

    /// Compares the integer `t` with the bound.
    fn cmp_int(t: &BigUint, num: &BigInt, den: &BigInt, d: usize) -> Ordering {
        let lhs = BigInt::from(num_traits::pow(t.clone(), d)) * den;
        lhs.cmp(num)
    }

    /// `(floor(value), value is an integer)`.
    pub fn floor(&self) -> Result<(BigUint, bool)> {
        let (num, den, d) = self.powered()?;
        let mut hi = BigUint::one();
        while Self::cmp_int(&hi, &num, &den, d) != Ordering::Greater {
            hi <<= 1;
        }
        let mut lo = BigUint::zero();
        // Invariant: lo <= value < hi.
        while &hi - &lo > BigUint::one() {
            let mid = (&lo + &hi) >> 1;
            if Self::cmp_int(&mid, &num, &den, d) == Ordering::Greater {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let exact = Self::cmp_int(&lo, &num, &den, d) == Ordering::Equal;
        Ok((lo, exact))
    }

    /// The integer a certificate should compare against, as the certificate
    /// prints it, and whether the relation holds for `lhs`.
    pub fn judge(&self, lhs: u128, relation: Relation) -> Result<(String, bool)> {
        let (floor, exact) = self.floor()?;
        let lhs = BigUint::from(lhs);
        let ceil = if exact { floor.clone() } else { &floor + 1u32 };
        Ok(match relation {
            Relation::Ge => (ceil.to_string(), lhs >= ceil),
            Relation::Lt => (ceil.to_string(), lhs < ceil),
            Relation::Le => (floor.to_string(), lhs <= floor),
            Relation::Gt => (floor.to_string(), lhs > floor),
            Relation::Eq if exact => (floor.to_string(), lhs == floor),
            Relation::Eq => (format!("{floor}+"), false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn rounding_matches_hand_values() {
        let b = OBound::pow(16, rat(39, 10));
        assert_eq!(b.floor().unwrap(), (BigUint::from(49667u32), false));
        assert_eq!(b.judge(49668, Relation::Ge).unwrap(), ("49668".to_string(), true));
        assert_eq!(b.judge(49667, Relation::Ge).unwrap(), ("49668".to_string(), false));
        assert_eq!(OBound::pow(16, rat(3, 2)).judge(63, Relation::Lt).unwrap(), ("64".to_string(), true));
        assert_eq!(OBound::ratio(7, 2).judge(3, Relation::Eq).unwrap(), ("3+".to_string(), false));
        assert_eq!(OBound::count(0).judge(0, Relation::Eq).unwrap(), ("0".to_string(), true));
        let tiny = OBound::count(8).times_pow(rat(344, 512), rat(20, 1));
        assert_eq!(tiny.judge(8, Relation::Ge).unwrap().0, "1");
    }
}
