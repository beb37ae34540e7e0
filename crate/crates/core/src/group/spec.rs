use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Largest group order (or vector-space code range) we represent.
const MAX_CODE: u64 = 1 << 62;

/// Descriptor of a finite abelian group, or of a bounded window of the
/// integers in which every sum must stay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSpec {
    /// `Z_m`, elements are residues `0..m`.
    Cyclic { modulus: u64 },
    /// `(Z_p)^d`, elements are coordinate vectors in `0..p`.
    Vector { prime: u64, dim: u32 },
    /// Integers in `[lo, hi]`; leaving the window is an error, never a wrap.
    Window { lo: i64, hi: i64 },
}

/// An element in canonical form.
///
/// For `Cyclic` and `Window` the code is the integer itself. For `Vector`
/// it is the base-`p` number whose most significant digit is the first
/// coordinate, so numeric order on codes is lexicographic order on vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElem(pub i64);

impl fmt::Display for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl GroupSpec {
    pub fn integers() -> Self {
        GroupSpec::Window { lo: -(1 << 40), hi: 1 << 40 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GroupSpec::Cyclic { modulus } => {
                if modulus < 2 {
                    return Err(Error::InvalidSpec(format!("modulus {modulus} < 2")));
                }
                if modulus > MAX_CODE {
                    return Err(Error::InvalidSpec(format!("modulus {modulus} too large")));
                }
            }
            GroupSpec::Vector { prime, dim } => {
                if !is_prime(prime) {
                    return Err(Error::InvalidSpec(format!("{prime} is not prime")));
                }
                if dim < 1 {
                    return Err(Error::InvalidSpec("dimension must be at least 1".into()));
                }
                let order = (prime as u128).checked_pow(dim);
                if order.is_none_or(|o| o > MAX_CODE as u128) {
                    return Err(Error::InvalidSpec(format!("{prime}^{dim} too large")));
                }
            }
            GroupSpec::Window { lo, hi } => {
                if lo > hi {
                    return Err(Error::InvalidSpec(format!("empty window [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    /// Group order, or `None` for an integer window.
    pub fn order(&self) -> Option<u64> {
        match *self {
            GroupSpec::Cyclic { modulus } => Some(modulus),
            GroupSpec::Vector { prime, dim } => Some(prime.pow(dim)),
            GroupSpec::Window { .. } => None,
        }
    }

    pub fn is_torsion_free(&self) -> bool {
        matches!(self, GroupSpec::Window { .. })
    }

    /// Whether codes add as plain integers (possibly followed by a reduction).
    pub(crate) fn is_integral(&self) -> bool {
        !matches!(self, GroupSpec::Vector { .. })
    }

    pub fn is_canonical(&self, code: i64) -> bool {
        match *self {
            GroupSpec::Window { lo, hi } => (lo..=hi).contains(&code),
            _ => code >= 0 && (code as u64) < self.order().unwrap_or(0),
        }
    }

    pub fn elem(&self, code: i64) -> Result<GroupElem> {
        if self.is_canonical(code) {
            Ok(GroupElem(code))
        } else {
            Err(Error::NotCanonical { spec: *self, value: code as i128 })
        }
    }

    pub fn zero(&self) -> Result<GroupElem> {
        self.elem(0)
    }

    /// Reduces a raw integer (already in code space for integral specs) to a
    /// canonical element, or reports a window overflow.
    pub(crate) fn reduce_raw(&self, raw: i128) -> Result<GroupElem> {
        match *self {
            GroupSpec::Cyclic { modulus } => Ok(GroupElem(raw.rem_euclid(modulus as i128) as i64)),
            GroupSpec::Window { lo, hi } => {
                if raw < lo as i128 || raw > hi as i128 {
                    Err(Error::WindowOverflow { lo, hi, value: raw })
                } else {
                    Ok(GroupElem(raw as i64))
                }
            }
            GroupSpec::Vector { .. } => unreachable!("vector codes do not add as integers"),
        }
    }

    pub fn add(&self, a: GroupElem, b: GroupElem) -> Result<GroupElem> {
        match *self {
            GroupSpec::Vector { prime, dim } => Ok(GroupElem(vector_combine(prime, dim, a.0, b.0, false))),
            _ => self.reduce_raw(a.0 as i128 + b.0 as i128),
        }
    }

    pub fn sub(&self, a: GroupElem, b: GroupElem) -> Result<GroupElem> {
        match *self {
            GroupSpec::Vector { prime, dim } => Ok(GroupElem(vector_combine(prime, dim, a.0, b.0, true))),
            _ => self.reduce_raw(a.0 as i128 - b.0 as i128),
        }
    }

    /// `n * a` for `n >= 0`.
    pub fn scale(&self, a: GroupElem, n: u64) -> Result<GroupElem> {
        match *self {
            GroupSpec::Vector { prime, dim } => {
                let digits = vector_digits(prime, dim, a.0);
                let scaled: Vec<u64> = digits.iter().map(|&d| ((d as u128 * n as u128) % prime as u128) as u64).collect();
                Ok(GroupElem(vector_code(prime, &scaled)))
            }
            _ => self.reduce_raw(a.0 as i128 * n as i128),
        }
    }

    pub fn sum<I: IntoIterator<Item = GroupElem>>(&self, items: I) -> Result<GroupElem> {
        let mut acc: i128 = 0;
        for x in items {
            acc = match *self {
                GroupSpec::Vector { .. } => self.add(GroupElem(acc as i64), x)?.0 as i128,
                GroupSpec::Cyclic { modulus } => (acc + x.0 as i128) % modulus as i128,
                // Partial sums may leave the window as long as the total does not.
                GroupSpec::Window { .. } => acc + x.0 as i128,
            };
        }
        match *self {
            GroupSpec::Vector { .. } => Ok(GroupElem(acc as i64)),
            _ => self.reduce_raw(acc),
        }
    }

    pub fn to_json(&self, e: GroupElem) -> Value {
        match *self {
            GroupSpec::Vector { prime, dim } => Value::from(vector_digits(prime, dim, e.0)),
            _ => Value::from(e.0),
        }
    }

    pub fn from_json(&self, v: &Value) -> Result<GroupElem> {
        match *self {
            GroupSpec::Vector { prime, dim } => {
                let coords = v
                    .as_array()
                    .ok_or_else(|| Error::Malformed(format!("expected coordinate vector, got {v}")))?;
                if coords.len() != dim as usize {
                    return Err(Error::Malformed(format!("expected {dim} coordinates, got {}", coords.len())));
                }
                let mut digits = Vec::with_capacity(coords.len());
                for c in coords {
                    let d = c.as_u64().filter(|d| *d < prime).ok_or_else(|| {
                        Error::Malformed(format!("coordinate {c} is not a residue mod {prime}"))
                    })?;
                    digits.push(d);
                }
                Ok(GroupElem(vector_code(prime, &digits)))
            }
            _ => {
                let code = v.as_i64().ok_or_else(|| Error::Malformed(format!("expected integer element, got {v}")))?;
                self.elem(code)
            }
        }
    }
}

/// Coordinates of a vector code, first coordinate first.
pub(crate) fn vector_digits(prime: u64, dim: u32, code: i64) -> Vec<u64> {
    let mut digits = vec![0u64; dim as usize];
    let mut rest = code as u64;
    for slot in digits.iter_mut().rev() {
        *slot = rest % prime;
        rest /= prime;
    }
    digits
}

pub(crate) fn vector_code(prime: u64, digits: &[u64]) -> i64 {
    digits.iter().fold(0u64, |acc, &d| acc * prime + d) as i64
}

fn vector_combine(prime: u64, dim: u32, a: i64, b: i64, subtract: bool) -> i64 {
    let (mut a, mut b) = (a as u64, b as u64);
    let mut place = 1u64;
    let mut out = 0u64;
    for _ in 0..dim {
        let (da, db) = (a % prime, b % prime);
        let d = if subtract { (da + prime - db) % prime } else { (da + db) % prime };
        out += d * place;
        place = place.wrapping_mul(prime);
        a /= prime;
        b /= prime;
    }
    out as i64
}
