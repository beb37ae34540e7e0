//! Exact rational arithmetic for certificate bounds.
//!
//! Every inequality the pipeline records compares an integer measurement
//! against a product of rational powers, `coef * b_1^{e_1} * ... * b_m^{e_m}`,
//! with rational bases and exponents. Raising both sides to the common
//! denominator `D` of the exponents turns the comparison into one between
//! integers, so bounds are rounded to integers exactly (ceiling for lower
//! bounds, floor for upper bounds) and never through floating point.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest common exponent denominator we are willing to raise to.
const MAX_ROOT_DEGREE: u64 = 1 << 20;

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Parses `"0.05"`, `"-3"`, `"1/20"` or `"2.5e-2"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Malformed(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = text[pos + 1..].parse().map_err(|_| bad())?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut num: BigInt = if joined.is_empty() { BigInt::zero() } else { joined.parse().map_err(|_| bad())? };
    if negative {
        num = -num;
    }
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Converts an `f64` through its shortest round-trip decimal form, so `0.05`
/// becomes exactly `1/20`.
pub fn rational_from_f64(value: f64) -> Result<BigRational> {
    if !value.is_finite() {
        return Err(Error::Malformed(format!("non-finite number {value}")));
    }
    parse_rational(&format!("{value}"))
}

pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter: writes `"1/20"`, reads either a JSON number or a string.
pub mod serde_rational {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        from_value(&value).map_err(de::Error::custom)
    }

    pub(crate) fn from_value(value: &serde_json::Value) -> Result<BigRational> {
        match value {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(int(i))
                } else if let Some(f) = n.as_f64() {
                    rational_from_f64(f)
                } else {
                    parse_rational(&n.to_string())
                }
            }
            other => Err(Error::Malformed(format!("expected a number, got {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "==",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    Ceil,
    Floor,
    Exact,
}

impl Relation {
    /// The integer rounding under which `lhs REL bound` is equivalent to
    /// `lhs REL rounded` for every integer `lhs`.
    pub fn rounding(self) -> Rounding {
        match self {
            Relation::Ge | Relation::Lt => Rounding::Ceil,
            Relation::Le | Relation::Gt => Rounding::Floor,
            Relation::Eq => Rounding::Exact,
        }
    }

    pub fn holds(self, lhs: &BigUint, rounded: &BigUint) -> bool {
        match self {
            Relation::Ge => lhs >= rounded,
            Relation::Gt => lhs > rounded,
            Relation::Le => lhs <= rounded,
            Relation::Lt => lhs < rounded,
            Relation::Eq => lhs == rounded,
        }
    }
}

/// `coef * prod(base_i ^ exp_i)` with nonnegative rational coefficient and
/// positive rational bases (a zero base is allowed only with a nonnegative
/// exponent).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerBound {
    coef: BigRational,
    factors: Vec<(BigRational, BigRational)>,
}

impl PowerBound {
    pub fn constant(coef: BigRational) -> Self {
        PowerBound { coef, factors: Vec::new() }
    }

    pub fn count(n: u128) -> Self {
        Self::constant(int(n))
    }

    /// `base ^ exp` for an integer base.
    pub fn power(base: u128, exp: BigRational) -> Self {
        Self::constant(BigRational::one()).times_power(int(base), exp)
    }

    pub fn times_power(mut self, base: BigRational, exp: BigRational) -> Self {
        if !exp.is_zero() {
            self.factors.push((base, exp));
        }
        self
    }

    pub fn times(mut self, q: BigRational) -> Self {
        self.coef *= q;
        self
    }

    pub fn coef(&self) -> &BigRational {
        &self.coef
    }

    pub fn factors(&self) -> &[(BigRational, BigRational)] {
        &self.factors
    }

    /// Writes `self^D = num / den` with `D` the lcm of exponent denominators.
    fn raised(&self) -> Result<(BigUint, BigUint, u32)> {
        if self.coef.is_negative() {
            return Err(Error::DegenerateBound(format!("negative coefficient in {self}")));
        }
        let mut degree = BigInt::one();
        for (base, exp) in &self.factors {
            if base.is_negative() {
                return Err(Error::DegenerateBound(format!("negative base in {self}")));
            }
            if base.is_zero() && exp.is_negative() {
                return Err(Error::DegenerateBound(format!("zero base with negative exponent in {self}")));
            }
            degree = degree.lcm(exp.denom());
        }
        let degree = degree
            .to_u64()
            .filter(|d| *d <= MAX_ROOT_DEGREE)
            .ok_or_else(|| Error::DegenerateBound(format!("exponent denominator too large in {self}")))?
            as u32;

        let mut num = BigInt::one();
        let mut den = BigInt::one();
        let coef_num = num_traits::pow(self.coef.numer().clone(), degree as usize);
        let coef_den = num_traits::pow(self.coef.denom().clone(), degree as usize);
        num *= coef_num;
        den *= coef_den;
        for (base, exp) in &self.factors {
            let scaled = exp * BigRational::from_integer(BigInt::from(degree));
            debug_assert!(scaled.is_integer());
            let e = scaled.to_integer();
            let e_abs = e.abs().to_usize().ok_or_else(|| {
                Error::DegenerateBound(format!("exponent too large in {self}"))
            })?;
            let (b_num, b_den) = (base.numer().clone(), base.denom().clone());
            if e.is_positive() {
                num *= num_traits::pow(b_num, e_abs);
                den *= num_traits::pow(b_den, e_abs);
            } else {
                num *= num_traits::pow(b_den, e_abs);
                den *= num_traits::pow(b_num, e_abs);
            }
        }
        let to_u = |v: BigInt| match v.sign() {
            Sign::Minus => unreachable!("signs checked above"),
            _ => v.magnitude().clone(),
        };
        Ok((to_u(num), to_u(den), degree))
    }

    pub fn floor(&self) -> Result<BigUint> {
        let (num, den, degree) = self.raised()?;
        if den.is_zero() {
            return Err(Error::DegenerateBound(format!("division by zero in {self}")));
        }
        let quotient = &num / &den;
        Ok(quotient.nth_root(degree))
    }

    pub fn ceil(&self) -> Result<BigUint> {
        let (num, den, degree) = self.raised()?;
        if den.is_zero() {
            return Err(Error::DegenerateBound(format!("division by zero in {self}")));
        }
        let floor = (&num / &den).nth_root(degree);
        if floor.pow(degree) * &den == num {
            Ok(floor)
        } else {
            Ok(floor + 1u32)
        }
    }

    /// The bound as an integer, or `None` when it is not one.
    pub fn exact(&self) -> Result<Option<BigUint>> {
        let (num, den, degree) = self.raised()?;
        if den.is_zero() {
            return Err(Error::DegenerateBound(format!("division by zero in {self}")));
        }
        let floor = (&num / &den).nth_root(degree);
        Ok((floor.pow(degree) * &den == num).then_some(floor))
    }

    pub fn round(&self, rounding: Rounding) -> Result<Option<BigUint>> {
        match rounding {
            Rounding::Ceil => self.ceil().map(Some),
            Rounding::Floor => self.floor().map(Some),
            Rounding::Exact => self.exact(),
        }
    }

    /// Floating-point approximation, for display only.
    pub fn approx(&self) -> f64 {
        let mut log = ln(&self.coef);
        for (base, exp) in &self.factors {
            log += to_f64(exp) * ln(base);
        }
        log.exp()
    }
}

fn ln(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_big(q.numer().magnitude()) - ln_big(q.denom().magnitude())
}

fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().map(f64::ln).unwrap_or(f64::INFINITY)
    } else {
        let shift = bits - 64;
        let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

impl fmt::Display for PowerBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.coef.is_one() || self.factors.is_empty() {
            parts.push(format_rational(&self.coef));
        }
        for (base, exp) in &self.factors {
            let b = if base.is_integer() { format_rational(base) } else { format!("({})", format_rational(base)) };
            if exp.is_integer() && !exp.is_negative() {
                parts.push(format!("{b}^{}", format_rational(exp)));
            } else {
                parts.push(format!("{b}^({})", format_rational(exp)));
            }
        }
        f.write_str(&parts.join(" * "))
    }
}
