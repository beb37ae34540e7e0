//! Group arithmetic written from the definitions, sharing nothing with the
//! fast paths beyond the spec type.

use crate::error::{Error, Result};
use crate::group::GroupSpec;

#[derive(Clone, Copy, Debug)]
pub(crate) enum OGroup {
    Cyclic(i128),
    Vector { p: i128, d: u32 },
    Window { lo: i128, hi: i128 },
}

impl OGroup {
    pub fn of(spec: GroupSpec) -> Self {
        match spec {
            GroupSpec::Cyclic { modulus } => OGroup::Cyclic(modulus as i128),
            GroupSpec::Vector { prime, dim } => OGroup::Vector { p: prime as i128, d: dim },
            GroupSpec::Window { lo, hi } => OGroup::Window { lo: lo as i128, hi: hi as i128 },
        }
    }

    fn digitwise(p: i128, d: u32, a: i64, b: i64, sign: i128) -> i64 {
        let (mut a, mut b) = (a as i128, b as i128);
        let mut out = 0i128;
        let mut place = 1i128;
        for _ in 0..d {
            let digit = (a % p + sign * (b % p)).rem_euclid(p);
            out += digit * place;
            place *= p;
            a /= p;
            b /= p;
        }
        out as i64
    }

    fn settle(&self, raw: i128) -> Result<i64> {
        match *self {
            OGroup::Cyclic(m) => Ok(raw.rem_euclid(m) as i64),
            OGroup::Window { lo, hi } => {
                if raw < lo || raw > hi {
                    Err(Error::WindowOverflow { lo: lo as i64, hi: hi as i64, value: raw })
                } else {
                    Ok(raw as i64)
                }
            }
            OGroup::Vector { .. } => unreachable!("vector sums are settled digitwise"),
        }
    }

    pub fn add(&self, a: i64, b: i64) -> Result<i64> {
        match *self {
            OGroup::Vector { p, d } => Ok(Self::digitwise(p, d, a, b, 1)),
            _ => self.settle(a as i128 + b as i128),
        }
    }

    pub fn sub(&self, a: i64, b: i64) -> Result<i64> {
        match *self {
            OGroup::Vector { p, d } => Ok(Self::digitwise(p, d, a, b, -1)),
            _ => self.settle(a as i128 - b as i128),
        }
    }

    /// Sum of a tuple; in a window only the total has to fit.
    pub fn sum(&self, items: &[i64]) -> Result<i64> {
        match *self {
            OGroup::Window { .. } => self.settle(items.iter().map(|&v| v as i128).sum()),
            _ => {
                let mut acc = 0i64;
                for &v in items {
                    acc = self.add(acc, v)?;
                }
                Ok(acc)
            }
        }
    }
}
